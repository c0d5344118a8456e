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

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace lipfit {

/// Reads an 8-bit image (.png, .ppm, .pgm) into a (3, H, W) tensor in [0, 1].
/// Grayscale sources are replicated to three channels.
Tensor3 read_image(const std::filesystem::path& path);

/// Writes a 1- or 3-channel tensor, clamping to [0, 1] and quantising to 8 bits.
/// The format is chosen from the extension (.png or .ppm/.pgm).
void write_image(const std::filesystem::path& path, const Tensor3& image);

/// Expands a printf-style frame pattern ("frames/%04d.png") for one index.
std::string format_frame_path(const std::string& pattern, int index);

/// Source of decoded video frames. Image sequences are handled here; container
/// formats plug in by implementing this interface.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    [[nodiscard]] virtual int frame_count() const = 0;
    [[nodiscard]] virtual Tensor3 frame(int index) const = 0;
    [[nodiscard]] virtual std::string describe() const = 0;
};

/// Numbered image files matching a printf-style pattern. Numbering starts at
/// 0, or at 1 when frame 0 does not exist, and stops at the first gap.
class ImageSequenceSource final : public FrameSource {
public:
    explicit ImageSequenceSource(std::string pattern);

    [[nodiscard]] int frame_count() const override { return count_; }
    [[nodiscard]] Tensor3 frame(int index) const override;
    [[nodiscard]] std::string describe() const override { return pattern_; }
    [[nodiscard]] int first_index() const { return first_; }

private:
    std::string pattern_;
    int first_ = 0;
    int count_ = 0;
};

/// Opens a frame source for `spec`: a printf pattern, or a directory whose
/// sorted .png/.ppm files form the sequence.
std::unique_ptr<FrameSource> open_frame_source(const std::string& spec);

} // namespace lipfit
