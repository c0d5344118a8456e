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

namespace lipfit::kernels::serial {

namespace {

inline double edge(double ax, double ay, double bx, double by, double px, double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

} // namespace

Tensor3 conv2d_forward(const Tensor3& input, std::span<const double> weight, std::span<const double> bias,
                       const ConvShape& shape) {
    const int k = shape.kernel;
    const int s = shape.stride;
    const int ho = shape.out_extent(input.height);
    const int wo = shape.out_extent(input.width);
    Tensor3 out(shape.out_channels, ho, wo);
    for (int co = 0; co < shape.out_channels; ++co) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                double acc = bias[static_cast<std::size_t>(co)];
                for (int ci = 0; ci < shape.in_channels; ++ci) {
                    const double* w = weight.data() + (static_cast<std::size_t>(co) * shape.in_channels + ci) * k * k;
                    for (int ky = 0; ky < k; ++ky) {
                        const double* row = &input.data[(static_cast<std::size_t>(ci) * input.height + oy * s + ky) *
                                                            input.width +
                                                        ox * s];
                        for (int kx = 0; kx < k; ++kx) {
                            acc += w[ky * k + kx] * row[kx];
                        }
                    }
                }
                out.at(co, oy, ox) = acc;
            }
        }
    }
    return out;
}

Tensor3 conv2d_backward_input(const Tensor3& grad_out, std::span<const double> weight, const ConvShape& shape,
                              int in_height, int in_width) {
    const int k = shape.kernel;
    const int s = shape.stride;
    Tensor3 grad_in(shape.in_channels, in_height, in_width);
    for (int ci = 0; ci < shape.in_channels; ++ci) {
        for (int co = 0; co < shape.out_channels; ++co) {
            const double* w = weight.data() + (static_cast<std::size_t>(co) * shape.in_channels + ci) * k * k;
            for (int oy = 0; oy < grad_out.height; ++oy) {
                for (int ox = 0; ox < grad_out.width; ++ox) {
                    const double g = grad_out.at(co, oy, ox);
                    for (int ky = 0; ky < k; ++ky) {
                        double* row = &grad_in.data[(static_cast<std::size_t>(ci) * in_height + oy * s + ky) * in_width +
                                                    ox * s];
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
    for (int co = 0; co < shape.out_channels; ++co) {
        for (int oy = 0; oy < grad_out.height; ++oy) {
            for (int ox = 0; ox < grad_out.width; ++ox) {
                const double g = grad_out.at(co, oy, ox);
                grad_bias[static_cast<std::size_t>(co)] += g;
                for (int ci = 0; ci < shape.in_channels; ++ci) {
                    double* gw = grad_weight.data() + (static_cast<std::size_t>(co) * shape.in_channels + ci) * k * k;
                    for (int ky = 0; ky < k; ++ky) {
                        const double* row = &input.data[(static_cast<std::size_t>(ci) * input.height + oy * s + ky) *
                                                            input.width +
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

void rasterize_rows(std::span<const double> screen_xy, std::span<const double> depth, std::span<const Face> faces,
                    int width, int row_begin, int row_end, RasterBuffer& buf) {
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto [ia, ib, ic] = faces[f];
        const double ax = screen_xy[2 * ia], ay = screen_xy[2 * ia + 1];
        const double bx = screen_xy[2 * ib], by = screen_xy[2 * ib + 1];
        const double cx = screen_xy[2 * ic], cy = screen_xy[2 * ic + 1];
        const double area = edge(ax, ay, bx, by, cx, cy);
        if (!(std::abs(area) > 1e-12)) {
            continue;
        }
        const double min_x = std::min({ax, bx, cx});
        const double max_x = std::max({ax, bx, cx});
        const double min_y = std::min({ay, by, cy});
        const double max_y = std::max({ay, by, cy});
        if (!std::isfinite(min_x + max_x + min_y + max_y)) {
            continue;
        }
        const int x0 = static_cast<int>(std::ceil(std::max(min_x, 0.0)));
        const int x1 = static_cast<int>(std::floor(std::min(max_x, width - 1.0)));
        const int y0 = static_cast<int>(std::ceil(std::max(min_y, static_cast<double>(row_begin))));
        const int y1 = static_cast<int>(std::floor(std::min(max_y, row_end - 1.0)));
        const double inv_area = 1.0 / area;
        for (int py = y0; py <= y1; ++py) {
            for (int px = x0; px <= x1; ++px) {
                const double w0 = edge(bx, by, cx, cy, px, py) * inv_area;
                const double w1 = edge(cx, cy, ax, ay, px, py) * inv_area;
                const double w2 = edge(ax, ay, bx, by, px, py) * inv_area;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) {
                    continue;
                }
                const double z = w0 * depth[ia] + w1 * depth[ib] + w2 * depth[ic];
                const std::size_t pix = static_cast<std::size_t>(py) * width + px;
                if (z > buf.depth[pix]) {
                    buf.depth[pix] = z;
                    buf.triangle[pix] = static_cast<std::int32_t>(f);
                    buf.barycentric[pix] = {w0, w1, w2};
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
    rasterize_rows(screen_xy, depth, faces, width, 0, height, buf);
    return buf;
}

void blend(std::span<const double> base, std::span<const double> basis, std::span<const double> coeffs,
           std::span<double> out) {
    const std::size_t rows = base.size();
    std::copy(base.begin(), base.end(), out.begin());
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
        const double c = coeffs[j];
        const double* col = basis.data() + j * rows;
        for (std::size_t i = 0; i < rows; ++i) {
            out[i] += col[i] * c;
        }
    }
}

void bilinear_sample(std::span<const double> plane, int height, int width, std::span<const double> xs,
                     std::span<const double> ys, std::span<double> out) {
    for (std::size_t n = 0; n < xs.size(); ++n) {
        const double x = xs[n];
        const double y = ys[n];
        const double fx0 = std::floor(x);
        const double fy0 = std::floor(y);
        const double tx = x - fx0;
        const double ty = y - fy0;
        const int x0 = clampi(static_cast<int>(fx0), 0, width - 1);
        const int x1 = clampi(static_cast<int>(fx0) + 1, 0, width - 1);
        const int y0 = clampi(static_cast<int>(fy0), 0, height - 1);
        const int y1 = clampi(static_cast<int>(fy0) + 1, 0, height - 1);
        const double i00 = plane[static_cast<std::size_t>(y0) * width + x0];
        const double i01 = plane[static_cast<std::size_t>(y0) * width + x1];
        const double i10 = plane[static_cast<std::size_t>(y1) * width + x0];
        const double i11 = plane[static_cast<std::size_t>(y1) * width + x1];
        out[n] = (1.0 - ty) * ((1.0 - tx) * i00 + tx * i01) + ty * ((1.0 - tx) * i10 + tx * i11);
    }
}

} // namespace lipfit::kernels::serial

namespace lipfit::kernels {

void bilinear_sample_backward(std::span<const double> plane, int height, int width, std::span<const double> xs,
                              std::span<const double> ys, std::span<const double> grad_out,
                              std::span<double> grad_plane, std::span<double> grad_xs, std::span<double> grad_ys) {
    for (std::size_t n = 0; n < xs.size(); ++n) {
        const double g = grad_out[n];
        const double fx0 = std::floor(xs[n]);
        const double fy0 = std::floor(ys[n]);
        const double tx = xs[n] - fx0;
        const double ty = ys[n] - fy0;
        const int x0 = serial::clampi(static_cast<int>(fx0), 0, width - 1);
        const int x1 = serial::clampi(static_cast<int>(fx0) + 1, 0, width - 1);
        const int y0 = serial::clampi(static_cast<int>(fy0), 0, height - 1);
        const int y1 = serial::clampi(static_cast<int>(fy0) + 1, 0, height - 1);
        const std::size_t p00 = static_cast<std::size_t>(y0) * width + x0;
        const std::size_t p01 = static_cast<std::size_t>(y0) * width + x1;
        const std::size_t p10 = static_cast<std::size_t>(y1) * width + x0;
        const std::size_t p11 = static_cast<std::size_t>(y1) * width + x1;
        if (!grad_plane.empty()) {
            grad_plane[p00] += g * (1.0 - ty) * (1.0 - tx);
            grad_plane[p01] += g * (1.0 - ty) * tx;
            grad_plane[p10] += g * ty * (1.0 - tx);
            grad_plane[p11] += g * ty * tx;
        }
        if (!grad_xs.empty()) {
            grad_xs[n] = g * ((1.0 - ty) * (plane[p01] - plane[p00]) + ty * (plane[p11] - plane[p10]));
        }
        if (!grad_ys.empty()) {
            grad_ys[n] = g * ((1.0 - tx) * (plane[p10] - plane[p00]) + tx * (plane[p11] - plane[p01]));
        }
    }
}

} // namespace lipfit::kernels
