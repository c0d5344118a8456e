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

#include "lipfit/face_model/rotation.hpp"

#include <cmath>

namespace lipfit {

namespace {

// R = I + A K + B K^2 with A = sin t / t, B = (1 - cos t) / t^2, and the
// derivative helpers a1 = A'(t) / t, b1 = B'(t) / t.
struct RodriguesCoefficients {
    double a, b, a1, b1;
};

RodriguesCoefficients coefficients(double theta) {
    const double t2 = theta * theta;
    if (theta < 1e-4) {
        return {1.0 - t2 / 6.0, 0.5 - t2 / 24.0, -1.0 / 3.0 + t2 / 30.0, -1.0 / 12.0 + t2 / 180.0};
    }
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    return {s / theta, (1.0 - c) / t2, (theta * c - s) / (t2 * theta), (theta * s - 2.0 * (1.0 - c)) / (t2 * t2)};
}

} // namespace

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d k;
    k << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return k;
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle) {
    const auto co = coefficients(axis_angle.norm());
    const Eigen::Matrix3d k = skew(axis_angle);
    return Eigen::Matrix3d::Identity() + co.a * k + co.b * k * k;
}

std::array<Eigen::Matrix3d, 3> rodrigues_derivatives(const Eigen::Vector3d& axis_angle) {
    const auto co = coefficients(axis_angle.norm());
    const Eigen::Matrix3d k = skew(axis_angle);
    const Eigen::Matrix3d k2 = k * k;
    std::array<Eigen::Matrix3d, 3> out;
    for (int i = 0; i < 3; ++i) {
        const Eigen::Matrix3d ki = skew(Eigen::Vector3d::Unit(i));
        const double ri = axis_angle[i];
        out[static_cast<std::size_t>(i)] = co.a1 * ri * k + co.a * ki + co.b1 * ri * k2 + co.b * (ki * k + k * ki);
    }
    return out;
}

} // namespace lipfit
