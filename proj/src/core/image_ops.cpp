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

#include "lipfit/core/image_ops.hpp"

#include "lipfit/core/error.hpp"

#include <algorithm>
#include <cmath>

namespace lipfit {

Tensor3 to_grayscale(const Tensor3& image) {
    if (image.channels == 1) {
        return image;
    }
    if (image.channels != 3) {
        throw ParameterError("to_grayscale: expected 1 or 3 channels");
    }
    Tensor3 out(1, image.height, image.width);
    const std::size_t n = image.plane();
    for (std::size_t i = 0; i < n; ++i) {
        out.data[i] = kLumaWeights[0] * image.data[i] + kLumaWeights[1] * image.data[n + i] +
                      kLumaWeights[2] * image.data[2 * n + i];
    }
    return out;
}

Tensor3 to_grayscale_backward(const Tensor3& grad_gray) {
    Tensor3 out(3, grad_gray.height, grad_gray.width);
    const std::size_t n = grad_gray.plane();
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            out.data[c * n + i] = kLumaWeights[static_cast<std::size_t>(c)] * grad_gray.data[i];
        }
    }
    return out;
}

Tensor3 average_pool(const Tensor3& image, int factor) {
    if (factor < 1 || image.height % factor != 0 || image.width % factor != 0) {
        throw ParameterError("average_pool: image size must be a multiple of the pooling factor");
    }
    if (factor == 1) {
        return image;
    }
    const int h = image.height / factor;
    const int w = image.width / factor;
    const double scale = 1.0 / (factor * factor);
    Tensor3 out(image.channels, h, w);
    for (int c = 0; c < image.channels; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int dy = 0; dy < factor; ++dy) {
                    for (int dx = 0; dx < factor; ++dx) {
                        acc += image.at(c, y * factor + dy, x * factor + dx);
                    }
                }
                out.at(c, y, x) = acc * scale;
            }
        }
    }
    return out;
}

Tensor3 average_pool_backward(const Tensor3& grad, int factor) {
    if (factor == 1) {
        return grad;
    }
    const double scale = 1.0 / (factor * factor);
    Tensor3 out(grad.channels, grad.height * factor, grad.width * factor);
    for (int c = 0; c < out.channels; ++c) {
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x) {
                out.at(c, y, x) = grad.at(c, y / factor, x / factor) * scale;
            }
        }
    }
    return out;
}

Tensor3 resize(const Tensor3& image, int height, int width) {
    if (height <= 0 || width <= 0 || image.empty()) {
        throw ParameterError("resize: invalid size");
    }
    if (height == image.height && width == image.width) {
        return image;
    }
    if (image.height % height == 0 && image.width % width == 0 && image.height / height == image.width / width) {
        return average_pool(image, image.height / height);
    }
    Tensor3 out(image.channels, height, width);
    const double sy = static_cast<double>(image.height) / height;
    const double sx = static_cast<double>(image.width) / width;
    for (int c = 0; c < image.channels; ++c) {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                if (sy > 1.0 || sx > 1.0) {
                    // Area average over the source footprint.
                    const int y0 = static_cast<int>(std::floor(y * sy));
                    const int y1 = std::max(y0 + 1, static_cast<int>(std::floor((y + 1) * sy)));
                    const int x0 = static_cast<int>(std::floor(x * sx));
                    const int x1 = std::max(x0 + 1, static_cast<int>(std::floor((x + 1) * sx)));
                    double acc = 0.0;
                    int count = 0;
                    for (int yy = y0; yy < std::min(y1, image.height); ++yy) {
                        for (int xx = x0; xx < std::min(x1, image.width); ++xx) {
                            acc += image.at(c, yy, xx);
                            ++count;
                        }
                    }
                    out.at(c, y, x) = acc / std::max(count, 1);
                } else {
                    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
                    const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
                    const int y0 = static_cast<int>(fy);
                    const int x0 = static_cast<int>(fx);
                    const int y1 = std::min(y0 + 1, image.height - 1);
                    const int x1 = std::min(x0 + 1, image.width - 1);
                    const double ty = fy - y0;
                    const double tx = fx - x0;
                    out.at(c, y, x) = (1 - ty) * ((1 - tx) * image.at(c, y0, x0) + tx * image.at(c, y0, x1)) +
                                      ty * ((1 - tx) * image.at(c, y1, x0) + tx * image.at(c, y1, x1));
                }
            }
        }
    }
    return out;
}

} // namespace lipfit
