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

#include "lipfit/kernels/kernels.hpp"

#include "raster_rows.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

namespace lipfit::kernels::omp {

Tensor3 conv2d_forward(const Tensor3& input, std::span<const double> weight, std::span<const double> bias,
                       const ConvShape& shape) {
    const int k = shape.kernel;
    const int s = shape.stride;
    const int ho = shape.out_extent(input.height);
    const int wo = shape.out_extent(input.width);
    Tensor3 out(shape.out_channels, ho, wo);
    const int rows = shape.out_channels * ho;
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        const int co = r / ho;
        const int oy = r % ho;
        for (int ox = 0; ox < wo; ++ox) {
            double acc = bias[static_cast<std::size_t>(co)];
            for (int ci = 0; ci < shape.in_channels; ++ci) {
                const double* w = weight.data() + (static_cast<std::size_t>(co) * shape.in_channels + ci) * k * k;
                for (int ky = 0; ky < k; ++ky) {
                    const double* row =
                        &input.data[(static_cast<std::size_t>(ci) * input.height + oy * s + ky) * input.width + ox * s];
                    for (int kx = 0; kx < k; ++kx) {
                        acc += w[ky * k + kx] * row[kx];
                    }
                }
            }
            out.at(co, oy, ox) = acc;
        }
    }
    return out;
}

Tensor3 conv2d_backward_input(const Tensor3& grad_out, std::span<const double> weight, const ConvShape& shape,
                              int in_height, int in_width) {
    const int k = shape.kernel;
    const int s = shape.stride;
    Tensor3 grad_in(shape.in_channels, in_height, in_width);
    // Each input channel is owned by one thread; within it the accumulation
    // order matches the serial kernel.
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < shape.in_channels; ++ci) {
        for (int co = 0; co < shape.out_channels; ++co) {
            const double* w = weight.data() + (static_cast<std::size_t>(co) * shape.in_channels + ci) * k * k;
            for (int oy = 0; oy < grad_out.height; ++oy) {
                for (int ox = 0; ox < grad_out.width; ++ox) {
                    const double g = grad_out.at(co, oy, ox);
                    for (int ky = 0; ky < k; ++ky) {
                        double* row =
                            &grad_in.data[(static_cast<std::size_t>(ci) * in_height + oy * s + ky) * in_width + ox * s];
                        for (int kx = 0; kx < k; ++kx) {
                            row[kx] += w[ky * k + kx] * g;
                        }
                    }
                }
            }
        }
    }
    return grad_in;
}

void conv2d_backward_params(const Tensor3& input, const Tensor3& grad_out, const ConvShape& shape,
                            std::span<double> grad_weight, std::span<double> grad_bias) {
    const int k = shape.kernel;
    const int s = shape.stride;
#pragma omp parallel for schedule(static)
    for (int co = 0; co < shape.out_channels; ++co) {
        for (int oy = 0; oy < grad_out.height; ++oy) {
            for (int ox = 0; ox < grad_out.width; ++ox) {
                const double g = grad_out.at(co, oy, ox);
                grad_bias[static_cast<std::size_t>(co)] += g;
                for (int ci = 0; ci < shape.in_channels; ++ci) {
                    double* gw = grad_weight.data() + (static_cast<std::size_t>(co) * shape.in_channels + ci) * k * k;
                    for (int ky = 0; ky < k; ++ky) {
                        const double* row =
                            &input.data[(static_cast<std::size_t>(ci) * input.height + oy * s + ky) * input.width +
                                        ox * s];
                        for (int kx = 0; kx < k; ++kx) {
                            gw[ky * k + kx] += g * row[kx];
                        }
                    }
                }
            }
        }
    }
}

RasterBuffer rasterize(std::span<const double> screen_xy, std::span<const double> depth, std::span<const Face> faces,
                       int width, int height) {
    RasterBuffer buf;
    buf.width = width;
    buf.height = height;
    const auto n = static_cast<std::size_t>(width) * height;
    buf.triangle.assign(n, -1);
    buf.barycentric.assign(n, {0.0, 0.0, 0.0});
    buf.depth.assign(n, -std::numeric_limits<double>::infinity());
    constexpr int kBand = 8;
    const int bands = (height + kBand - 1) / kBand;
#pragma omp parallel for schedule(dynamic, 1)
    for (int b = 0; b < bands; ++b) {
        serial::rasterize_rows(screen_xy, depth, faces, width, b * kBand, std::min(height, (b + 1) * kBand), buf);
    }
    return buf;
}

void blend(std::span<const double> base, std::span<const double> basis, std::span<const double> coeffs,
           std::span<double> out) {
    const auto rows = static_cast<std::int64_t>(base.size());
    constexpr std::int64_t kChunk = 256;
    const std::int64_t chunks = (rows + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < chunks; ++c) {
        const std::int64_t i0 = c * kChunk;
        const std::int64_t i1 = std::min(rows, i0 + kChunk);
        for (std::int64_t i = i0; i < i1; ++i) {
            out[static_cast<std::size_t>(i)] = base[static_cast<std::size_t>(i)];
        }
        for (std::size_t j = 0; j < coeffs.size(); ++j) {
            const double cj = coeffs[j];
            const double* col = basis.data() + j * static_cast<std::size_t>(rows);
            for (std::int64_t i = i0; i < i1; ++i) {
                out[static_cast<std::size_t>(i)] += col[i] * cj;
            }
        }
    }
}

void bilinear_sample(std::span<const double> plane, int height, int width, std::span<const double> xs,
                     std::span<const double> ys, std::span<double> out) {
    const auto n = static_cast<std::int64_t>(xs.size());
    constexpr std::int64_t kChunk = 512;
    const std::int64_t chunks = (n + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < chunks; ++c) {
        const auto i0 = static_cast<std::size_t>(c * kChunk);
        const auto len = static_cast<std::size_t>(std::min(n - c * kChunk, kChunk));
        serial::bilinear_sample(plane, height, width, xs.subspan(i0, len), ys.subspan(i0, len), out.subspan(i0, len));
    }
}

} // namespace lipfit::kernels::omp
