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

#include "lipfit/core/error.hpp"
#include "lipfit/core/rng.hpp"
#include "lipfit/face_model/morphable_model.hpp"
#include "lipfit/face_model/rotation.hpp"
#include "lipfit/face_model/synthetic_model.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace lipfit;
using lipfit::testing::numeric_gradient;
using lipfit::testing::relative_error;

namespace {

const MorphableModel& model() {
    static const MorphableModel m = make_synthetic_model();
    return m;
}

Eigen::VectorXd random_vector(Rng& rng, int n, double scale) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
        v[i] = scale * rng.normal();
    }
    return v;
}

FaceParams random_params(Rng& rng) {
    FaceParams p = FaceParams::neutral();
    p.identity = random_vector(rng, kIdentityDim, 1.0);
    p.expression = random_vector(rng, kExpressionDim, 1.0);
    p.jaw_pose = random_vector(rng, 3, 0.1);
    p.neck_pose = random_vector(rng, 3, 0.1);
    p.camera << rng.uniform(0.6, 1.2), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1);
    return p;
}

// Rotation about a unit axis written out element by element.
Eigen::Matrix3d axis_angle_matrix(Eigen::Vector3d axis, double angle) {
    axis.normalize();
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double t = 1.0 - c;
    const double x = axis.x(), y = axis.y(), z = axis.z();
    Eigen::Matrix3d r;
    r << t * x * x + c, t * x * y - s * z, t * x * z + s * y, t * x * y + s * z, t * y * y + c, t * y * z - s * x,
        t * x * z - s * y, t * y * z + s * x, t * z * z + c;
    return r;
}

} // namespace

TEST_CASE("neutral parameters decode to the template") {
    const auto& m = model();
    FaceParams p = FaceParams::neutral();
    const Mesh mesh = decode(m, p);
    for (int i = 0; i < m.vertex_count(); ++i) {
        for (int c = 0; c < 3; ++c) {
            CHECK(mesh.vertices(i, c) == m.template_shape()[3 * i + c]);
        }
    }
}

TEST_CASE("blendshapes are linear with zero pose") {
    const auto& m = model();
    Rng rng(3);
    FaceParams zero = FaceParams::neutral();
    FaceParams one = zero;
    one.identity = random_vector(rng, kIdentityDim, 1.0);
    FaceParams two = zero;
    two.identity = 2.0 * one.identity;
    const Vertices v0 = decode_vertices(m, zero);
    const Vertices v1 = decode_vertices(m, one);
    const Vertices v2 = decode_vertices(m, two);
    CHECK(((v2 - v0) - 2.0 * (v1 - v0)).cwiseAbs().maxCoeff() < 1e-10);

    FaceParams a = zero, b = zero, ab = zero;
    a.identity = random_vector(rng, kIdentityDim, 1.0);
    b.expression = random_vector(rng, kExpressionDim, 1.0);
    ab.identity = a.identity;
    ab.expression = b.expression;
    const Vertices sum = decode_vertices(m, a) + decode_vertices(m, b) - v0;
    CHECK((decode_vertices(m, ab) - sum).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("jaw rotation of a fully weighted chin vertex matches an explicit rotation about the pivot") {
    const auto& m = model();
    int chin = -1;
    for (int i = 0; i < m.vertex_count(); ++i) {
        if (m.jaw_weights()[i] == 1.0) {
            chin = i;
            break;
        }
    }
    REQUIRE(chin >= 0);
    FaceParams p = FaceParams::neutral();
    p.jaw_pose << 0.3, 0.0, 0.0;
    const Vertices v = decode_vertices(m, p);
    const Eigen::Vector3d rest = m.template_shape().segment<3>(3 * chin);
    const Eigen::Vector3d expected =
        axis_angle_matrix(Eigen::Vector3d::UnitX(), 0.3) * (rest - m.jaw_pivot()) + m.jaw_pivot();
    CHECK((v.row(chin).transpose() - expected).norm() < 1e-12);
}

TEST_CASE("rodrigues agrees with the element-wise axis-angle matrix and is identity at zero") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
        const double angle = rng.uniform(0.0, 3.0);
        const Eigen::Matrix3d r = rodrigues(axis.normalized() * angle);
        CHECK((r - axis_angle_matrix(axis, angle)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(rodrigues(axis.normalized() * 0.0) == Eigen::Matrix3d::Identity());
    }
}

TEST_CASE("rodrigues derivatives match finite differences, including near zero") {
    Rng rng(6);
    for (double scale : {1e-6, 1e-3, 0.5, 2.0}) {
        const Eigen::Vector3d r = scale * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
        const auto d = rodrigues_derivatives(r);
        for (int i = 0; i < 3; ++i) {
            const double h = 1e-6;
            Eigen::Vector3d rp = r, rm = r;
            rp[i] += h;
            rm[i] -= h;
            const Eigen::Matrix3d fd = (rodrigues(rp) - rodrigues(rm)) / (2 * h);
            CHECK((fd - d[static_cast<std::size_t>(i)]).cwiseAbs().maxCoeff() < 1e-7);
        }
    }
}

TEST_CASE("zero-angle jaw rotation leaves the mesh unchanged for any axis") {
    const auto& m = model();
    FaceParams p = FaceParams::neutral();
    const Vertices rest = decode_vertices(m, p);
    for (const Eigen::Vector3d& axis : {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 1)}) {
        p.jaw_pose = 0.0 * axis;
        CHECK(decode_vertices(m, p) == rest);
    }
}

TEST_CASE("project examples") {
    Vertices pt(1, 3);
    pt << 0.2, -0.1, 5.0;
    Eigen::VectorXd cam(3);
    cam << 1.0, 0.0, 0.0;
    Points2 out = project(pt, cam);
    CHECK(out(0, 0) == 0.2);
    CHECK(out(0, 1) == -0.1);

    pt << 0.5, 0.5, -3.0;
    cam << 2.0, 1.0, 0.0;
    out = project(pt, cam);
    CHECK(out(0, 0) == 2.0);
    CHECK(out(0, 1) == 1.0);

    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const double x = rng.normal(), y = rng.normal(), z = rng.normal();
        const double s = rng.uniform(0.1, 3.0), tx = rng.normal(), ty = rng.normal();
        pt << x, y, z;
        cam << s, tx, ty;
        out = project(pt, cam);
        CHECK(out(0, 0) == s * x + tx);
        CHECK(out(0, 1) == s * y + ty);
    }

    cam << 0.0, 0.0, 0.0;
    CHECK_THROWS_AS(project(pt, cam), ParameterError);
    cam << -1.0, 0.0, 0.0;
    CHECK_THROWS_AS(project(pt, cam), ParameterError);
}

TEST_CASE("landmarks2d composes decode, gather and project") {
    const auto& m = model();
    FaceParams p = FaceParams::neutral();
    const Landmarks2D lm = landmarks2d(m, p);
    for (int k = 0; k < kLandmarkCount; ++k) {
        const int v = m.landmark_indices()[static_cast<std::size_t>(k)];
        CHECK(lm.points(k, 0) == m.template_shape()[3 * v]);
        CHECK(lm.points(k, 1) == m.template_shape()[3 * v + 1]);
    }
    FaceParams shifted = p;
    shifted.camera << 1.0, 0.25, -0.5;
    const Landmarks2D moved = landmarks2d(m, shifted);
    for (int k = 0; k < kLandmarkCount; ++k) {
        CHECK(moved.points(k, 0) == lm.points(k, 0) + 0.25);
        CHECK(moved.points(k, 1) == lm.points(k, 1) - 0.5);
    }
    CHECK(lm.mouth().rows() == kMouthLandmarkCount);
}

TEST_CASE("landmark partition and model invariants") {
    const auto& m = model();
    std::set<int> seen;
    int total = 0;
    for (auto r : {LandmarkRegion::Outline, LandmarkRegion::Eyebrows, LandmarkRegion::Nose, LandmarkRegion::Eyes,
                   LandmarkRegion::Mouth}) {
        const IndexRange range = landmark_range(r);
        for (int k = range.begin; k < range.end; ++k) {
            CHECK(seen.insert(k).second);
        }
        total += range.size();
    }
    CHECK(total == kLandmarkCount);
    CHECK(landmark_range(LandmarkRegion::Outline).size() == 17);
    CHECK(landmark_range(LandmarkRegion::Eyes).size() == 12);
    CHECK(landmark_range(LandmarkRegion::Nose).size() == 9);
    CHECK(landmark_range(LandmarkRegion::Mouth).size() == 20);

    const std::set<int> distinct(m.landmark_indices().begin(), m.landmark_indices().end());
    CHECK(distinct.size() == static_cast<std::size_t>(kLandmarkCount));
    for (int k : upper_skull_landmarks()) {
        CHECK(m.jaw_weights()[m.landmark_indices()[static_cast<std::size_t>(k)]] == 0.0);
    }
    CHECK(m.jaw_weights().minCoeff() >= 0.0);
    CHECK(m.jaw_weights().maxCoeff() <= 1.0);
    CHECK(m.identity_basis().allFinite());
    CHECK(m.expression_basis().allFinite());
}

TEST_CASE("synthetic model is deterministic") {
    const MorphableModel again = make_synthetic_model();
    CHECK(again.identity_basis() == model().identity_basis());
    CHECK(again.expression_basis() == model().expression_basis());
    CHECK(again.landmark_indices() == model().landmark_indices());
}

TEST_CASE("decoded normals are unit length") {
    Rng rng(8);
    const Mesh mesh = decode(model(), random_params(rng));
    for (Eigen::Index i = 0; i < mesh.normals.rows(); ++i) {
        CHECK(std::abs(mesh.normals.row(i).norm() - 1.0) < 1e-6);
    }
    for (const Face& f : *mesh.faces) {
        for (int v : f) {
            CHECK((v >= 0 && v < model().vertex_count()));
        }
    }
}

TEST_CASE("dimension mismatches are parameter errors") {
    FaceParams p = FaceParams::neutral();
    p.expression = Eigen::VectorXd::Zero(10);
    CHECK_THROWS_AS(decode(model(), p), ParameterError);
    p = FaceParams::neutral();
    p.jaw_pose << 4.0, 0.0, 0.0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = FaceParams::neutral();
    p.identity[3] = std::nan("");
    CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("landmark gradients match central differences") {
    const auto& m = model();
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const FaceParams p = random_params(rng);
        Points2 w(kLandmarkCount, 2);
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            w.data()[i] = rng.normal();
        }
        const FaceParams g = landmarks2d_backward(m, p, w);
        auto objective = [&](const FaceParams& q) { return (landmarks2d(m, q).points.array() * w.array()).sum(); };
        auto check_block = [&](Eigen::VectorXd FaceParams::*field) {
            auto f = [&](const Eigen::VectorXd& x) {
                FaceParams q = p;
                q.*field = x;
                return objective(q);
            };
            return relative_error(g.*field, numeric_gradient(f, p.*field));
        };
        CHECK(check_block(&FaceParams::expression) < 1e-4);
        CHECK(check_block(&FaceParams::identity) < 1e-4);
        CHECK(check_block(&FaceParams::jaw_pose) < 1e-4);
        CHECK(check_block(&FaceParams::neck_pose) < 1e-4);
        CHECK(check_block(&FaceParams::camera) < 1e-4);
    }
}

TEST_CASE("single landmark coordinate gradient with respect to expression") {
    const auto& m = model();
    Rng rng(12);
    const FaceParams p = random_params(rng);
    for (int k : {8, 51, 57, 66}) {
        for (int c = 0; c < 2; ++c) {
            Points2 w = Points2::Zero(kLandmarkCount, 2);
            w(k, c) = 1.0;
            const FaceParams g = landmarks2d_backward(m, p, w);
            auto f = [&](const Eigen::VectorXd& x) {
                FaceParams q = p;
                q.expression = x;
                return landmarks2d(m, q).points(k, c);
            };
            CHECK(relative_error(g.expression, numeric_gradient(f, p.expression)) < 1e-4);
        }
    }
}

TEST_CASE("vertex normal backward matches central differences") {
    Rng rng(13);
    const Mesh mesh = decode(model(), random_params(rng));
    Vertices w(mesh.vertices.rows(), 3);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        w.data()[i] = rng.normal();
    }
    const auto& faces = *mesh.faces;
    const Vertices g = vertex_normals_backward(mesh.vertices, faces, w);
    Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(mesh.vertices.data(), mesh.vertices.size());
    auto f = [&](const Eigen::VectorXd& x) {
        const Vertices v = Eigen::Map<const Vertices>(x.data(), mesh.vertices.rows(), 3);
        return (compute_vertex_normals(v, faces).array() * w.array()).sum();
    };
    const Eigen::VectorXd analytic = Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
    CHECK(relative_error(analytic, numeric_gradient(f, flat)) < 1e-5);
}

TEST_CASE("model archive round trip is exact and corruption is a data error") {
    lipfit::testing::TempDir dir("model");
    const auto path = dir.path() / "model.lfm";
    save_model(model(), path);
    const MorphableModel loaded = load_model(path);
    CHECK(loaded.template_shape() == model().template_shape());
    CHECK(loaded.faces() == model().faces());
    CHECK(loaded.identity_basis() == model().identity_basis());
    CHECK(loaded.expression_basis() == model().expression_basis());
    CHECK(loaded.jaw_weights() == model().jaw_weights());
    CHECK(loaded.landmark_indices() == model().landmark_indices());
    CHECK(loaded.albedo().basis == model().albedo().basis);

    std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
    CHECK_THROWS_AS(load_model(path), DataError);
    CHECK_THROWS_AS(load_model(dir.path() / "missing.lfm"), DataError);
}
