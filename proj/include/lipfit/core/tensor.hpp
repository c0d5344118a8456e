// Copyright 2026 The lipfit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lipfit {

/// Dense channel-major (C, H, W) array of doubles. Used for images, feature maps
/// and their gradients.
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

    [[nodiscard]] std::size_t size() const { return data.size(); }
    [[nodiscard]] bool empty() const { return data.empty(); }
    [[nodiscard]] std::size_t plane() const { return static_cast<std::size_t>(height) * width; }

    double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    [[nodiscard]] double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    std::span<double> channel(int c) { return {data.data() + c * plane(), plane()}; }
    [[nodiscard]] std::span<const double> channel(int c) const { return {data.data() + c * plane(), plane()}; }

    [[nodiscard]] bool same_shape(const Tensor3& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    bool operator==(const Tensor3&) const = default;
};

} // namespace lipfit
