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

// Compute kernels behind the differentiable pipeline. Every kernel exists in two
// versions: `serial::` is the reference implementation, `omp::` the OpenMP one.
// The OpenMP versions partition work so that each output element is produced by
// exactly one thread with the same accumulation order as the serial version;
// results are therefore bit-identical for any thread count.
//
// Library code calls the unqualified dispatchers, which route on the process-wide
// backend selection.

#include "lipfit/core/tensor.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace lipfit::kernels {

enum class Backend { Serial, OpenMP };

void set_backend(Backend b);
Backend backend();
int max_threads();

/// Weights laid out [out_ch][in_ch][k][k]; "valid" padding.
struct ConvShape {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 1;
    int stride = 1;

    [[nodiscard]] int out_extent(int in_extent) const { return (in_extent - kernel) / stride + 1; }
    [[nodiscard]] std::size_t weight_count() const {
        return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
    }
};

/// Per-pixel rasterization result. `triangle` is -1 for uncovered pixels.
struct RasterBuffer {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> triangle;
    std::vector<std::array<double, 3>> barycentric;
    std::vector<double> depth;
};

using Face = std::array<int, 3>;

namespace serial {
Tensor3 conv2d_forward(const Tensor3& input, std::span<const double> weight, std::span<const double> bias,
                       const ConvShape& shape);
Tensor3 conv2d_backward_input(const Tensor3& grad_out, std::span<const double> weight, const ConvShape& shape,
                              int in_height, int in_width);
void conv2d_backward_params(const Tensor3& input, const Tensor3& grad_out, const ConvShape& shape,
                            std::span<double> grad_weight, std::span<double> grad_bias);
/// Screen positions are pixel coordinates (x = column, y = row) of pixel
/// centres. Nearest surface wins: larger depth is closer to the camera.
RasterBuffer rasterize(std::span<const double> screen_xy, std::span<const double> depth, std::span<const Face> faces,
                       int width, int height);
/// out[i] = base[i] + sum_j basis(i, j) * coeffs[j]; basis is column-major rows x cols.
void blend(std::span<const double> base, std::span<const double> basis, std::span<const double> coeffs,
           std::span<double> out);
/// Bilinear resampling of one plane at (x, y) sample positions, clamp-to-edge.
void bilinear_sample(std::span<const double> plane, int height, int width, std::span<const double> xs,
                     std::span<const double> ys, std::span<double> out);
} // namespace serial

namespace omp {
Tensor3 conv2d_forward(const Tensor3& input, std::span<const double> weight, std::span<const double> bias,
                       const ConvShape& shape);
Tensor3 conv2d_backward_input(const Tensor3& grad_out, std::span<const double> weight, const ConvShape& shape,
                              int in_height, int in_width);
void conv2d_backward_params(const Tensor3& input, const Tensor3& grad_out, const ConvShape& shape,
                            std::span<double> grad_weight, std::span<double> grad_bias);
RasterBuffer rasterize(std::span<const double> screen_xy, std::span<const double> depth, std::span<const Face> faces,
                       int width, int height);
void blend(std::span<const double> base, std::span<const double> basis, std::span<const double> coeffs,
           std::span<double> out);
void bilinear_sample(std::span<const double> plane, int height, int width, std::span<const double> xs,
                     std::span<const double> ys, std::span<double> out);
} // namespace omp

Tensor3 conv2d_forward(const Tensor3& input, std::span<const double> weight, std::span<const double> bias,
                       const ConvShape& shape);
Tensor3 conv2d_backward_input(const Tensor3& grad_out, std::span<const double> weight, const ConvShape& shape,
                              int in_height, int in_width);
/// Accumulates (+=) into grad_weight / grad_bias.
void conv2d_backward_params(const Tensor3& input, const Tensor3& grad_out, const ConvShape& shape,
                            std::span<double> grad_weight, std::span<double> grad_bias);
RasterBuffer rasterize(std::span<const double> screen_xy, std::span<const double> depth, std::span<const Face> faces,
                       int width, int height);
void blend(std::span<const double> base, std::span<const double> basis, std::span<const double> coeffs,
           std::span<double> out);
void bilinear_sample(std::span<const double> plane, int height, int width, std::span<const double> xs,
                     std::span<const double> ys, std::span<double> out);

/// Backward of bilinear_sample: accumulates into grad_plane and writes the
/// sample-position gradients. Serial only: it scatters into shared pixels.
void bilinear_sample_backward(std::span<const double> plane, int height, int width, std::span<const double> xs,
                              std::span<const double> ys, std::span<const double> grad_out,
                              std::span<double> grad_plane, std::span<double> grad_xs, std::span<double> grad_ys);

} // namespace lipfit::kernels
