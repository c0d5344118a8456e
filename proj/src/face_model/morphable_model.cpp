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

#include "lipfit/face_model/morphable_model.hpp"

#include "lipfit/core/error.hpp"
#include "lipfit/face_model/rotation.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <set>
#include <string>

namespace lipfit {

IndexRange landmark_range(LandmarkRegion region) {
    switch (region) {
    case LandmarkRegion::Outline:
        return {0, 17};
    case LandmarkRegion::Eyebrows:
        return {17, 27};
    case LandmarkRegion::Nose:
        return {27, 36};
    case LandmarkRegion::Eyes:
        return {36, 48};
    case LandmarkRegion::Mouth:
        return {48, 68};
    }
    return {0, 0};
}

std::vector<int> upper_skull_landmarks() {
    std::vector<int> out = {0, 1, 2, 14, 15, 16};
    for (auto r : {LandmarkRegion::Eyebrows, LandmarkRegion::Nose, LandmarkRegion::Eyes}) {
        const auto range = landmark_range(r);
        for (int i = range.begin; i < range.end; ++i) {
            out.push_back(i);
        }
    }
    return out;
}

MorphableModel::MorphableModel(Eigen::VectorXd template_shape, std::vector<Face> faces, Eigen::MatrixXd identity_basis,
                               Eigen::MatrixXd expression_basis, Eigen::VectorXd jaw_weights, Eigen::Vector3d jaw_pivot,
                               std::array<int, kLandmarkCount> landmark_indices, AlbedoModel albedo)
    : template_(std::move(template_shape)),
      faces_(std::make_shared<const std::vector<Face>>(std::move(faces))),
      identity_basis_(std::move(identity_basis)),
      expression_basis_(std::move(expression_basis)),
      jaw_weights_(std::move(jaw_weights)),
      jaw_pivot_(jaw_pivot),
      landmark_indices_(landmark_indices),
      albedo_(std::move(albedo)) {
    const auto v = jaw_weights_.size();
    if (v == 0 || template_.size() != 3 * v) {
        throw ParameterError("MorphableModel: template must hold 3 x V coordinates matching jaw_weights");
    }
    if (identity_basis_.rows() != 3 * v || expression_basis_.rows() != 3 * v) {
        throw ParameterError("MorphableModel: basis row count must equal 3 x V");
    }
    if (albedo_.mean.size() != 3 * v || albedo_.basis.rows() != 3 * v) {
        throw ParameterError("MorphableModel: albedo model must have 3 x V rows");
    }
    if (!template_.allFinite() || !identity_basis_.allFinite() || !expression_basis_.allFinite() ||
        !albedo_.mean.allFinite() || !albedo_.basis.allFinite() || !jaw_pivot_.allFinite()) {
        throw ParameterError("MorphableModel: non-finite model data");
    }
    if ((jaw_weights_.array() < 0.0).any() || (jaw_weights_.array() > 1.0).any()) {
        throw ParameterError("MorphableModel: jaw weights must lie in [0, 1]");
    }
    for (const auto& f : *faces_) {
        for (int idx : f) {
            if (idx < 0 || idx >= v) {
                throw ParameterError("MorphableModel: face references vertex " + std::to_string(idx) +
                                     " outside [0, " + std::to_string(v) + ")");
            }
        }
    }
    std::set<int> seen;
    for (int idx : landmark_indices_) {
        if (idx < 0 || idx >= v) {
            throw ParameterError("MorphableModel: landmark vertex index out of range");
        }
        if (!seen.insert(idx).second) {
            throw ParameterError("MorphableModel: landmark vertex indices must be distinct");
        }
    }
    for (int slot : upper_skull_landmarks()) {
        if (jaw_weights_[landmark_indices_[static_cast<std::size_t>(slot)]] != 0.0) {
            throw ParameterError("MorphableModel: upper-skull landmark " + std::to_string(slot) +
                                 " has a non-zero jaw weight");
        }
    }
}

Eigen::VectorXd MorphableModel::albedo_colors(const Eigen::VectorXd& coefficients) const {
    if (coefficients.size() != albedo_.basis.cols()) {
        throw ParameterError("albedo_colors: expected " + std::to_string(albedo_.basis.cols()) + " coefficients");
    }
    return albedo_.mean + albedo_.basis * coefficients;
}

Points2 Landmarks2D::region(LandmarkRegion r) const {
    const auto range = landmark_range(r);
    return points.middleRows(range.begin, range.size());
}

void Landmarks2D::validate() const {
    if (points.rows() != kLandmarkCount) {
        throw ParameterError("Landmarks2D: expected 68 points, got " + std::to_string(points.rows()));
    }
    if (!points.allFinite()) {
        throw ParameterError("Landmarks2D: non-finite coordinate");
    }
}

Vertices compute_vertex_normals(const Vertices& vertices, std::span<const Face> faces) {
    Vertices acc = Vertices::Zero(vertices.rows(), 3);
    for (const auto& f : faces) {
        const Eigen::Vector3d a = vertices.row(f[0]);
        const Eigen::Vector3d b = vertices.row(f[1]);
        const Eigen::Vector3d c = vertices.row(f[2]);
        const Eigen::Vector3d n = (b - a).cross(c - a);
        for (int idx : f) {
            acc.row(idx) += n.transpose();
        }
    }
    Vertices normals(vertices.rows(), 3);
    for (Eigen::Index i = 0; i < acc.rows(); ++i) {
        const double len = acc.row(i).norm();
        if (len > 1e-300) {
            normals.row(i) = acc.row(i) / len;
        } else {
            normals.row(i) << 0.0, 0.0, 1.0;
        }
    }
    return normals;
}

Vertices vertex_normals_backward(const Vertices& vertices, std::span<const Face> faces, const Vertices& grad_normals) {
    Vertices acc = Vertices::Zero(vertices.rows(), 3);
    for (const auto& f : faces) {
        const Eigen::Vector3d a = vertices.row(f[0]);
        const Eigen::Vector3d b = vertices.row(f[1]);
        const Eigen::Vector3d c = vertices.row(f[2]);
        const Eigen::Vector3d n = (b - a).cross(c - a);
        for (int idx : f) {
            acc.row(idx) += n.transpose();
        }
    }
    // Gradient with respect to the unnormalised accumulated normal.
    Vertices grad_acc = Vertices::Zero(vertices.rows(), 3);
    for (Eigen::Index i = 0; i < acc.rows(); ++i) {
        const double len = acc.row(i).norm();
        if (len > 1e-300) {
            const Eigen::Vector3d n = acc.row(i).transpose() / len;
            const Eigen::Vector3d g = grad_normals.row(i).transpose();
            grad_acc.row(i) = ((g - n * n.dot(g)) / len).transpose();
        }
    }
    Vertices grad = Vertices::Zero(vertices.rows(), 3);
    for (const auto& f : faces) {
        const Eigen::Vector3d a = vertices.row(f[0]);
        const Eigen::Vector3d e1 = Eigen::Vector3d(vertices.row(f[1])) - a;
        const Eigen::Vector3d e2 = Eigen::Vector3d(vertices.row(f[2])) - a;
        const Eigen::Vector3d g = grad_acc.row(f[0]) + grad_acc.row(f[1]) + grad_acc.row(f[2]);
        const Eigen::Vector3d de1 = e2.cross(g);
        const Eigen::Vector3d de2 = g.cross(e1);
        grad.row(f[0]) -= (de1 + de2).transpose();
        grad.row(f[1]) += de1.transpose();
        grad.row(f[2]) += de2.transpose();
    }
    return grad;
}

namespace {

void check_dims(const MorphableModel& model, const FaceParams& params) {
    if (params.identity.size() != model.identity_dim()) {
        throw ParameterError("decode: identity length " + std::to_string(params.identity.size()) +
                             " does not match model dimension " + std::to_string(model.identity_dim()));
    }
    if (params.expression.size() != model.expression_dim()) {
        throw ParameterError("decode: expression length " + std::to_string(params.expression.size()) +
                             " does not match model dimension " + std::to_string(model.expression_dim()));
    }
    if (params.jaw_pose.size() != kPoseDim || params.neck_pose.size() != kPoseDim) {
        throw ParameterError("decode: pose vectors must have length 3");
    }
}

} // namespace

Vertices shape_vertices(const MorphableModel& model, const FaceParams& params) {
    check_dims(model, params);
    const auto n = static_cast<std::size_t>(model.template_shape().size());
    std::vector<double> with_identity(n);
    Vertices out(model.vertex_count(), 3);
    kernels::blend(std::span(model.template_shape().data(), n),
                   std::span(model.identity_basis().data(), static_cast<std::size_t>(model.identity_basis().size())),
                   std::span(params.identity.data(), static_cast<std::size_t>(params.identity.size())), with_identity);
    kernels::blend(with_identity,
                   std::span(model.expression_basis().data(),
                             static_cast<std::size_t>(model.expression_basis().size())),
                   std::span(params.expression.data(), static_cast<std::size_t>(params.expression.size())),
                   std::span(out.data(), n));
    return out;
}

Vertices decode_vertices(const MorphableModel& model, const FaceParams& params, std::span<const int> subset) {
    const Vertices shaped = shape_vertices(model, params);
    // R - I is exactly zero for a zero jaw pose, so the rest pose reproduces the
    // shaped vertices bit for bit.
    const Eigen::Matrix3d jaw_offset = rodrigues(params.jaw_pose) - Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d neck = rodrigues(params.neck_pose);
    const Eigen::Vector3d pivot = model.jaw_pivot();
    const auto count = subset.empty() ? shaped.rows() : static_cast<Eigen::Index>(subset.size());
    Vertices out(count, 3);
    for (Eigen::Index i = 0; i < count; ++i) {
        const int v = subset.empty() ? static_cast<int>(i) : subset[static_cast<std::size_t>(i)];
        const Eigen::Vector3d s = shaped.row(v);
        const double w = model.jaw_weights()[v];
        const Eigen::Vector3d articulated = s + w * (jaw_offset * (s - pivot));
        out.row(i) = (neck * articulated).transpose();
    }
    return out;
}

FaceParams decode_vertices_backward(const MorphableModel& model, const FaceParams& params,
                                    const Vertices& grad_vertices, std::span<const int> subset) {
    const Vertices shaped = shape_vertices(model, params);
    const Eigen::Matrix3d jaw = rodrigues(params.jaw_pose);
    const Eigen::Matrix3d neck = rodrigues(params.neck_pose);
    const auto djaw = rodrigues_derivatives(params.jaw_pose);
    const auto dneck = rodrigues_derivatives(params.neck_pose);
    const Eigen::Matrix3d jaw_offset = jaw - Eigen::Matrix3d::Identity();
    const Eigen::Vector3d pivot = model.jaw_pivot();

    FaceParams grad = FaceParams::zeros();
    grad.identity = Eigen::VectorXd::Zero(model.identity_dim());
    grad.expression = Eigen::VectorXd::Zero(model.expression_dim());
    const auto count = subset.empty() ? shaped.rows() : static_cast<Eigen::Index>(subset.size());
    if (grad_vertices.rows() != count) {
        throw ParameterError("decode_vertices_backward: gradient row count mismatch");
    }
    Eigen::VectorXd grad_shape = Eigen::VectorXd::Zero(3 * model.vertex_count());
    for (Eigen::Index i = 0; i < count; ++i) {
        const int v = subset.empty() ? static_cast<int>(i) : subset[static_cast<std::size_t>(i)];
        const Eigen::Vector3d s = shaped.row(v);
        const double w = model.jaw_weights()[v];
        const Eigen::Vector3d rel = s - pivot;
        const Eigen::Vector3d articulated = s + w * (jaw_offset * rel);
        const Eigen::Vector3d g = grad_vertices.row(i);
        for (int k = 0; k < 3; ++k) {
            grad.neck_pose[k] += g.dot(dneck[static_cast<std::size_t>(k)] * articulated);
        }
        const Eigen::Vector3d ga = neck.transpose() * g;
        if (w != 0.0) {
            for (int k = 0; k < 3; ++k) {
                grad.jaw_pose[k] += w * ga.dot(djaw[static_cast<std::size_t>(k)] * rel);
            }
        }
        grad_shape.segment<3>(3 * v) += w * (jaw.transpose() * ga) + (1.0 - w) * ga;
    }
    if (subset.empty()) {
        grad.identity = model.identity_basis().transpose() * grad_shape;
        grad.expression = model.expression_basis().transpose() * grad_shape;
    } else {
        std::vector<int> unique(subset.begin(), subset.end());
        std::sort(unique.begin(), unique.end());
        unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
        for (int v : unique) {
            for (int a = 0; a < 3; ++a) {
                const double g = grad_shape[3 * v + a];
                if (g != 0.0) {
                    grad.identity += g * model.identity_basis().row(3 * v + a).transpose();
                    grad.expression += g * model.expression_basis().row(3 * v + a).transpose();
                }
            }
        }
    }
    return grad;
}

Mesh decode(const MorphableModel& model, const FaceParams& params) {
    Mesh mesh;
    mesh.vertices = decode_vertices(model, params);
    mesh.faces = model.shared_faces();
    mesh.normals = compute_vertex_normals(mesh.vertices, *mesh.faces);
    return mesh;
}

Points2 project(const Vertices& points, const Eigen::VectorXd& camera) {
    if (camera.size() != kCameraDim) {
        throw ParameterError("project: camera must have 3 entries");
    }
    if (!(camera[0] > 0.0)) {
        throw ParameterError("project: camera scale must be positive");
    }
    Points2 out(points.rows(), 2);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        out(i, 0) = camera[0] * points(i, 0) + camera[1];
        out(i, 1) = camera[0] * points(i, 1) + camera[2];
    }
    return out;
}

ProjectGradient project_backward(const Vertices& points, const Eigen::VectorXd& camera, const Points2& grad) {
    ProjectGradient g{Vertices::Zero(points.rows(), 3), Eigen::VectorXd::Zero(kCameraDim)};
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        g.points(i, 0) = camera[0] * grad(i, 0);
        g.points(i, 1) = camera[0] * grad(i, 1);
        g.camera[0] += grad(i, 0) * points(i, 0) + grad(i, 1) * points(i, 1);
        g.camera[1] += grad(i, 0);
        g.camera[2] += grad(i, 1);
    }
    return g;
}

Landmarks2D landmarks2d(const MorphableModel& model, const FaceParams& params) {
    const auto& idx = model.landmark_indices();
    const Vertices pts = decode_vertices(model, params, idx);
    Landmarks2D out;
    out.points = project(pts, params.camera);
    return out;
}

FaceParams landmarks2d_backward(const MorphableModel& model, const FaceParams& params, const Points2& grad) {
    const auto& idx = model.landmark_indices();
    const Vertices pts = decode_vertices(model, params, idx);
    const auto pg = project_backward(pts, params.camera, grad);
    FaceParams out = decode_vertices_backward(model, params, pg.points, idx);
    out.camera = pg.camera;
    return out;
}

} // namespace lipfit
