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
#include "lipfit/kernels/kernels.hpp"

#include <Eigen/Core>

namespace lipfit {

/// Normalised image coordinates (x right, y up, [-1, 1] across the frame) to
/// pixel coordinates (column, row) of pixel centres, and back.
Points2 to_pixels(const Points2& normalized, int width, int height);
Points2 to_normalized(const Points2& pixels, int width, int height);

struct RenderedFrame {
    Tensor3 image;    ///< (3, H, W), clamped to [0, 1]
    Tensor3 mask;     ///< (1, H, W), 1 where a triangle covers the pixel centre
    Tensor3 radiance; ///< (3, H, W) before clamping
};

/// Gradients produced by Renderer::backward.
struct RenderGradient {
    Vertices vertices;             ///< through positions and normals
    Eigen::VectorXd vertex_albedo; ///< 3V
    Eigen::VectorXd lighting;      ///< 27
    Eigen::VectorXd camera;        ///< 3
};

/**
 * Hard z-buffer rasteriser with Gouraud-interpolated spherical-harmonics
 * shading. Each vertex colour is albedo * sh_shade(normal, lighting); covered
 * pixels interpolate vertex colours with perspective-free barycentrics and the
 * background is black.
 *
 * Gradients flow to vertex positions (through the barycentrics and through the
 * normals), per-vertex albedo, lighting and camera. Visibility changes at
 * silhouettes are not differentiated. Pixels whose radiance was clamped pass
 * no gradient.
 *
 * The instance keeps the state of the last forward call for backward; it is
 * not safe to share one instance between threads.
 */
class Renderer {
public:
    Renderer(int width, int height);

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }

    const RenderedFrame& render(const Mesh& mesh, const Eigen::VectorXd& vertex_albedo,
                                const Eigen::VectorXd& lighting, const Eigen::VectorXd& camera);
    [[nodiscard]] RenderGradient backward(const Tensor3& grad_image) const;

    /// Decode + render with the model's albedo space.
    const RenderedFrame& render(const MorphableModel& model, const FaceParams& params);
    /// Backward of the two-argument render to all differentiable parameter blocks.
    [[nodiscard]] FaceParams backward(const MorphableModel& model, const FaceParams& params,
                                      const Tensor3& grad_image) const;

    [[nodiscard]] const RenderedFrame& frame() const { return frame_; }
    [[nodiscard]] const kernels::RasterBuffer& raster() const { return raster_; }

private:
    int width_;
    int height_;
    RenderedFrame frame_;
    kernels::RasterBuffer raster_;
    Mesh mesh_;
    Eigen::VectorXd albedo_;
    Eigen::VectorXd lighting_;
    Eigen::VectorXd camera_;
    std::vector<double> screen_;  // 2V pixel coordinates
    Eigen::MatrixXd colors_;      // V x 3 shaded vertex colours
    Eigen::MatrixXd shades_;      // V x 3 SH gains
};

} // namespace lipfit
