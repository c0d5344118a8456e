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
#include "lipfit/face_model/morphable_model.hpp"

#include <vector>

namespace lipfit {

inline constexpr int kMouthCropSize = 96;

/// Square sampling window in pixel coordinates (column, row of pixel centres).
struct CropWindow {
    double center_x = 0.0;
    double center_y = 0.0;
    double side = 1.0;
};

struct CropOptions {
    double scale = 1.5; ///< side = scale * largest mouth-landmark extent
    int size = kMouthCropSize;
};

struct MouthCrop {
    Tensor3 image; ///< (1, size, size) grayscale
    CropWindow window;
};

/// Window centred on the landmark centroid; side = scale * max(x extent, y
/// extent), at least one pixel. Non-finite landmarks are a DataError.
CropWindow mouth_window(const Points2& mouth_pixels, double scale = 1.5);

/// One window covering a whole sequence: centred on the mean centroid, sized
/// by the largest per-frame extent.
CropWindow sequence_window(const std::vector<Points2>& mouth_pixels, double scale = 1.5);

/// Luma conversion followed by bilinear resampling (clamp-to-edge) of the
/// window onto a size x size grid. A window entirely outside the image is a
/// DataError (the landmarks cannot be right).
MouthCrop crop_with_window(const Tensor3& image, const CropWindow& window, int size = kMouthCropSize);

/// mouth_window + crop_with_window.
MouthCrop crop_mouth(const Tensor3& image, const Points2& mouth_pixels, const CropOptions& options = {});

struct CropGradient {
    Tensor3 image;     ///< same shape as the source image
    Points2 landmarks; ///< mouth landmark gradient (zero for fixed windows)
    CropWindow window; ///< gradient with respect to the window fields
};

CropGradient crop_with_window_backward(const Tensor3& image, const CropWindow& window, const Tensor3& grad_crop);

/// Full backward of crop_mouth, including the dependence of the window on the
/// landmarks (centroid and extent).
CropGradient crop_mouth_backward(const Tensor3& image, const Points2& mouth_pixels, const Tensor3& grad_crop,
                                 const CropOptions& options = {});

/// Gradient of a scalar with respect to the landmarks given its gradient with
/// respect to the sequence_window fields.
std::vector<Points2> sequence_window_backward(const std::vector<Points2>& mouth_pixels, const CropWindow& grad_window,
                                              double scale = 1.5);

} // namespace lipfit
