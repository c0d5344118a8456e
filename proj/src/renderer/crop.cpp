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

#include "lipfit/renderer/crop.hpp"

#include "lipfit/core/error.hpp"
#include "lipfit/core/image_ops.hpp"
#include "lipfit/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace lipfit {

namespace {

struct Extent {
    double cx, cy;
    double span;
    // Arg-extreme point indices for the governing axis.
    int axis;
    Eigen::Index lo, hi;
};

Extent measure(const Points2& pts) {
    if (pts.rows() == 0) {
        throw DataError("mouth crop: no landmarks");
    }
    if (!pts.allFinite()) {
        throw DataError("mouth crop: landmarks are not finite");
    }
    Extent e{};
    e.cx = pts.col(0).mean();
    e.cy = pts.col(1).mean();
    Eigen::Index xlo, xhi, ylo, yhi;
    const double x0 = pts.col(0).minCoeff(&xlo), x1 = pts.col(0).maxCoeff(&xhi);
    const double y0 = pts.col(1).minCoeff(&ylo), y1 = pts.col(1).maxCoeff(&yhi);
    if (x1 - x0 >= y1 - y0) {
        e = {e.cx, e.cy, x1 - x0, 0, xlo, xhi};
    } else {
        e = {e.cx, e.cy, y1 - y0, 1, ylo, yhi};
    }
    return e;
}

void sample_grid(const CropWindow& w, int size, std::vector<double>& xs, std::vector<double>& ys,
                 std::vector<double>* offsets = nullptr) {
    const auto n = static_cast<std::size_t>(size) * size;
    xs.resize(n);
    ys.resize(n);
    if (offsets != nullptr) {
        offsets->resize(static_cast<std::size_t>(size));
    }
    for (int i = 0; i < size; ++i) {
        const double off = ((i + 0.5) / size - 0.5);
        if (offsets != nullptr) {
            (*offsets)[static_cast<std::size_t>(i)] = off;
        }
        for (int j = 0; j < size; ++j) {
            const auto k = static_cast<std::size_t>(i) * size + j;
            ys[k] = w.center_y + off * w.side;
            xs[k] = w.center_x + ((j + 0.5) / size - 0.5) * w.side;
        }
    }
}

void check_window(const Tensor3& image, const CropWindow& w) {
    const double half = 0.5 * w.side;
    const bool outside = w.center_x + half < -0.5 || w.center_x - half > image.width - 0.5 ||
                         w.center_y + half < -0.5 || w.center_y - half > image.height - 0.5;
    if (outside || !std::isfinite(w.center_x + w.center_y + w.side)) {
        throw DataError("mouth crop: window lies entirely outside the image; the landmarks are invalid");
    }
}

} // namespace

CropWindow mouth_window(const Points2& mouth_pixels, double scale) {
    const Extent e = measure(mouth_pixels);
    return {e.cx, e.cy, std::max(scale * e.span, 1.0)};
}

CropWindow sequence_window(const std::vector<Points2>& mouth_pixels, double scale) {
    if (mouth_pixels.empty()) {
        throw DataError("sequence_window: empty sequence");
    }
    CropWindow w{0.0, 0.0, 1.0};
    double span = 0.0;
    for (const auto& pts : mouth_pixels) {
        const Extent e = measure(pts);
        w.center_x += e.cx;
        w.center_y += e.cy;
        span = std::max(span, e.span);
    }
    w.center_x /= static_cast<double>(mouth_pixels.size());
    w.center_y /= static_cast<double>(mouth_pixels.size());
    w.side = std::max(scale * span, 1.0);
    return w;
}

MouthCrop crop_with_window(const Tensor3& image, const CropWindow& window, int size) {
    if (size < 1) {
        throw ParameterError("mouth crop: output size must be positive");
    }
    check_window(image, window);
    const Tensor3 gray = to_grayscale(image);
    std::vector<double> xs, ys;
    sample_grid(window, size, xs, ys);
    MouthCrop out;
    out.window = window;
    out.image = Tensor3(1, size, size);
    kernels::bilinear_sample(gray.data, gray.height, gray.width, xs, ys, out.image.data);
    return out;
}

MouthCrop crop_mouth(const Tensor3& image, const Points2& mouth_pixels, const CropOptions& options) {
    return crop_with_window(image, mouth_window(mouth_pixels, options.scale), options.size);
}

CropGradient crop_with_window_backward(const Tensor3& image, const CropWindow& window, const Tensor3& grad_crop) {
    if (grad_crop.channels != 1 || grad_crop.height != grad_crop.width) {
        throw ParameterError("mouth crop backward: gradient must be a square single-channel image");
    }
    const int size = grad_crop.height;
    const Tensor3 gray = to_grayscale(image);
    std::vector<double> xs, ys, offsets;
    sample_grid(window, size, xs, ys, &offsets);
    std::vector<double> gx(xs.size()), gy(ys.size());
    Tensor3 grad_gray(1, gray.height, gray.width);
    kernels::bilinear_sample_backward(gray.data, gray.height, gray.width, xs, ys, grad_crop.data, grad_gray.data, gx,
                                      gy);
    CropGradient out;
    out.image = image.channels == 1 ? grad_gray : to_grayscale_backward(grad_gray);
    out.window = {0.0, 0.0, 0.0};
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            const auto k = static_cast<std::size_t>(i) * size + j;
            out.window.center_x += gx[k];
            out.window.center_y += gy[k];
            out.window.side += gx[k] * offsets[static_cast<std::size_t>(j)] + gy[k] * offsets[static_cast<std::size_t>(i)];
        }
    }
    out.landmarks = Points2::Zero(0, 2);
    return out;
}

CropGradient crop_mouth_backward(const Tensor3& image, const Points2& mouth_pixels, const Tensor3& grad_crop,
                                 const CropOptions& options) {
    const Extent e = measure(mouth_pixels);
    const CropWindow window{e.cx, e.cy, std::max(options.scale * e.span, 1.0)};
    CropGradient out = crop_with_window_backward(image, window, grad_crop);
    const auto n = mouth_pixels.rows();
    out.landmarks = Points2::Zero(n, 2);
    out.landmarks.col(0).setConstant(out.window.center_x / static_cast<double>(n));
    out.landmarks.col(1).setConstant(out.window.center_y / static_cast<double>(n));
    if (options.scale * e.span > 1.0) {
        const double g = options.scale * out.window.side;
        out.landmarks(e.hi, e.axis) += g;
        out.landmarks(e.lo, e.axis) -= g;
    }
    return out;
}

std::vector<Points2> sequence_window_backward(const std::vector<Points2>& mouth_pixels, const CropWindow& grad_window,
                                              double scale) {
    if (mouth_pixels.empty()) {
        throw DataError("sequence_window: empty sequence");
    }
    const auto frames = static_cast<double>(mouth_pixels.size());
    std::vector<Points2> out;
    double span = 0.0;
    std::size_t widest = 0;
    Extent widest_extent{};
    for (std::size_t f = 0; f < mouth_pixels.size(); ++f) {
        const Extent e = measure(mouth_pixels[f]);
        const auto n = static_cast<double>(mouth_pixels[f].rows());
        Points2 g(mouth_pixels[f].rows(), 2);
        g.col(0).setConstant(grad_window.center_x / (frames * n));
        g.col(1).setConstant(grad_window.center_y / (frames * n));
        out.push_back(std::move(g));
        if (f == 0 || e.span > span) {
            span = e.span;
            widest = f;
            widest_extent = e;
        }
    }
    if (scale * span > 1.0) {
        const double g = scale * grad_window.side;
        out[widest](widest_extent.hi, widest_extent.axis) += g;
        out[widest](widest_extent.lo, widest_extent.axis) -= g;
    }
    return out;
}

} // namespace lipfit
