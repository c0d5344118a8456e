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

#include "lipfit/core/tensor.hpp"

#include <array>

namespace lipfit {

/// ITU-R BT.601 luma weights; they sum to exactly 1.
inline constexpr std::array<double, 3> kLumaWeights = {0.299, 0.587, 0.114};

/// (3, H, W) -> (1, H, W). A 1-channel input is returned unchanged.
Tensor3 to_grayscale(const Tensor3& image);
/// Backward of to_grayscale for a 3-channel source.
Tensor3 to_grayscale_backward(const Tensor3& grad_gray);

/// Non-overlapping `factor` x `factor` mean pooling. H and W must be multiples of factor.
Tensor3 average_pool(const Tensor3& image, int factor);
Tensor3 average_pool_backward(const Tensor3& grad, int factor);

/// Area-averaging resize for downscaling and bilinear for upscaling. Used on
/// input frames only, so it has no backward.
Tensor3 resize(const Tensor3& image, int height, int width);

} // namespace lipfit
