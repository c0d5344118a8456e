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

#include "lipfit/face_model/params.hpp"
#include "lipfit/kernels/kernels.hpp"

#include <Eigen/Core>

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace lipfit {

using Face = kernels::Face;
using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

inline constexpr int kLandmarkCount = 68;
inline constexpr int kMouthLandmarkCount = 20;

/// Regions of the 68-point landmark convention. The ranges are contiguous.
enum class LandmarkRegion { Outline, Eyebrows, Nose, Eyes, Mouth };

struct IndexRange {
    int begin;
    int end;
    [[nodiscard]] int size() const { return end - begin; }
};

/// Outline 0-16, eyebrows 17-26, nose 27-35, eyes 36-47, mouth 48-67.
IndexRange landmark_range(LandmarkRegion region);

/// Landmark slots treated as rigidly attached to the skull: the upper outline
/// (0-2, 14-16), eyebrows, nose and eyes.
std::vector<int> upper_skull_landmarks();

/// Per-vertex RGB albedo: mean + basis * coefficients, both flattened as 3V.
struct AlbedoModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd basis;
};

/**
 * Linear morphable face model with single-bone jaw articulation.
 *
 * Vector quantities over vertices are flattened as 3V in (x, y, z) per-vertex
 * order; bases are 3V x n. Immutable after construction.
 */
class MorphableModel {
public:
    MorphableModel(Eigen::VectorXd template_shape, std::vector<Face> faces, Eigen::MatrixXd identity_basis,
                   Eigen::MatrixXd expression_basis, Eigen::VectorXd jaw_weights, Eigen::Vector3d jaw_pivot,
                   std::array<int, kLandmarkCount> landmark_indices, AlbedoModel albedo);

    [[nodiscard]] int vertex_count() const { return static_cast<int>(jaw_weights_.size()); }
    [[nodiscard]] int identity_dim() const { return static_cast<int>(identity_basis_.cols()); }
    [[nodiscard]] int expression_dim() const { return static_cast<int>(expression_basis_.cols()); }
    [[nodiscard]] int albedo_dim() const { return static_cast<int>(albedo_.basis.cols()); }

    [[nodiscard]] const Eigen::VectorXd& template_shape() const { return template_; }
    [[nodiscard]] const std::vector<Face>& faces() const { return *faces_; }
    [[nodiscard]] std::shared_ptr<const std::vector<Face>> shared_faces() const { return faces_; }
    [[nodiscard]] const Eigen::MatrixXd& identity_basis() const { return identity_basis_; }
    [[nodiscard]] const Eigen::MatrixXd& expression_basis() const { return expression_basis_; }
    [[nodiscard]] const Eigen::VectorXd& jaw_weights() const { return jaw_weights_; }
    [[nodiscard]] const Eigen::Vector3d& jaw_pivot() const { return jaw_pivot_; }
    [[nodiscard]] const std::array<int, kLandmarkCount>& landmark_indices() const { return landmark_indices_; }
    [[nodiscard]] const AlbedoModel& albedo() const { return albedo_; }

    /// Per-vertex colours (3V) for the given albedo coefficients.
    [[nodiscard]] Eigen::VectorXd albedo_colors(const Eigen::VectorXd& coefficients) const;

private:
    Eigen::VectorXd template_;
    std::shared_ptr<const std::vector<Face>> faces_;
    Eigen::MatrixXd identity_basis_;
    Eigen::MatrixXd expression_basis_;
    Eigen::VectorXd jaw_weights_;
    Eigen::Vector3d jaw_pivot_;
    std::array<int, kLandmarkCount> landmark_indices_;
    AlbedoModel albedo_;
};

/// Decoded geometry. `faces` is shared with the model.
struct Mesh {
    Vertices vertices;
    Vertices normals;
    std::shared_ptr<const std::vector<Face>> faces;
};

/// 68 x 2 landmark positions with region views.
struct Landmarks2D {
    Points2 points = Points2::Zero(kLandmarkCount, 2);

    [[nodiscard]] Points2 region(LandmarkRegion r) const;
    [[nodiscard]] Points2 mouth() const { return region(LandmarkRegion::Mouth); }
    /// Throws ParameterError unless there are 68 finite points.
    void validate() const;
};

/// Area-weighted, normalised vertex normals. Vertices with no incident area get (0, 0, 1).
Vertices compute_vertex_normals(const Vertices& vertices, std::span<const Face> faces);
/// Vector-Jacobian product of compute_vertex_normals.
Vertices vertex_normals_backward(const Vertices& vertices, std::span<const Face> faces, const Vertices& grad_normals);

/// template + identity_basis * beta + expression_basis * psi (before any pose).
Vertices shape_vertices(const MorphableModel& model, const FaceParams& params);

/**
 * Full decode: blendshapes, jaw rotation about the pivot blended per vertex by
 * the skinning weights, then the neck rotation about the origin. Normals are
 * recomputed. Throws ParameterError on dimension mismatch.
 */
Mesh decode(const MorphableModel& model, const FaceParams& params);

/// Posed vertex positions only (no normals); `subset` restricts to the listed
/// vertex indices, empty meaning all.
Vertices decode_vertices(const MorphableModel& model, const FaceParams& params, std::span<const int> subset = {});

/// Gradient of <grad_vertices, decode_vertices(subset)> with respect to
/// identity, expression, jaw_pose and neck_pose (other blocks left zero).
FaceParams decode_vertices_backward(const MorphableModel& model, const FaceParams& params,
                                    const Vertices& grad_vertices, std::span<const int> subset = {});

/// Weak perspective: p = s * (X, Y) + (t_x, t_y). Throws ParameterError if s <= 0.
Points2 project(const Vertices& points, const Eigen::VectorXd& camera);

struct ProjectGradient {
    Vertices points;
    Eigen::VectorXd camera;
};
ProjectGradient project_backward(const Vertices& points, const Eigen::VectorXd& camera, const Points2& grad);

/// Decode, gather the landmark vertices, project with params.camera.
Landmarks2D landmarks2d(const MorphableModel& model, const FaceParams& params);
/// Gradient with respect to identity, expression, neck, jaw and camera.
FaceParams landmarks2d_backward(const MorphableModel& model, const FaceParams& params, const Points2& grad);

} // namespace lipfit
