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

#include <atomic>

#include <omp.h>

namespace lipfit::kernels {

namespace {
std::atomic<Backend> g_backend{Backend::OpenMP};
}

void set_backend(Backend b) { g_backend.store(b); }
Backend backend() { return g_backend.load(); }
int max_threads() { return omp_get_max_threads(); }

#define LIPFIT_DISPATCH(call) (backend() == Backend::OpenMP ? omp::call : serial::call)

Tensor3 conv2d_forward(const Tensor3& input, std::span<const double> weight, std::span<const double> bias,
                       const ConvShape& shape) {
    return LIPFIT_DISPATCH(conv2d_forward(input, weight, bias, shape));
}

Tensor3 conv2d_backward_input(const Tensor3& grad_out, std::span<const double> weight, const ConvShape& shape,
                              int in_height, int in_width) {
    return LIPFIT_DISPATCH(conv2d_backward_input(grad_out, weight, shape, in_height, in_width));
}

void conv2d_backward_params(const Tensor3& input, const Tensor3& grad_out, const ConvShape& shape,
                            std::span<double> grad_weight, std::span<double> grad_bias) {
    LIPFIT_DISPATCH(conv2d_backward_params(input, grad_out, shape, grad_weight, grad_bias));
}

RasterBuffer rasterize(std::span<const double> screen_xy, std::span<const double> depth, std::span<const Face> faces,
                       int width, int height) {
    return LIPFIT_DISPATCH(rasterize(screen_xy, depth, faces, width, height));
}

void blend(std::span<const double> base, std::span<const double> basis, std::span<const double> coeffs,
           std::span<double> out) {
    LIPFIT_DISPATCH(blend(base, basis, coeffs, out));
}

void bilinear_sample(std::span<const double> plane, int height, int width, std::span<const double> xs,
                     std::span<const double> ys, std::span<double> out) {
    LIPFIT_DISPATCH(bilinear_sample(plane, height, width, xs, ys, out));
}

#undef LIPFIT_DISPATCH

} // namespace lipfit::kernels
