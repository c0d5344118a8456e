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

#include "lipfit/renderer/sh.hpp"

#include "lipfit/core/error.hpp"
#include "lipfit/face_model/params.hpp"

namespace lipfit {

namespace {

constexpr double kC0 = 0.282094791773878143;  // 1 / (2 sqrt(pi))
constexpr double kC1 = 0.488602511902919921;  // sqrt(3 / (4 pi))
constexpr double kC2 = 1.092548430592079070;  // sqrt(15 / (4 pi))
constexpr double kC20 = 0.315391565252520002; // sqrt(5 / (16 pi))
constexpr double kC22 = 0.546274215296039535; // sqrt(15 / (16 pi))

} // namespace

std::array<double, kShBands> sh_basis(const Eigen::Vector3d& n) {
    const double x = n.x(), y = n.y(), z = n.z();
    return {kC0,
            kC1 * y,
            kC1 * z,
            kC1 * x,
            kC2 * x * y,
            kC2 * y * z,
            kC20 * (3.0 * z * z - 1.0),
            kC2 * x * z,
            kC22 * (x * x - y * y)};
}

Eigen::Matrix<double, kShBands, 3> sh_basis_jacobian(const Eigen::Vector3d& n) {
    const double x = n.x(), y = n.y(), z = n.z();
    Eigen::Matrix<double, kShBands, 3> j;
    j << 0, 0, 0,
         0, kC1, 0,
         0, 0, kC1,
         kC1, 0, 0,
         kC2 * y, kC2 * x, 0,
         0, kC2 * z, kC2 * y,
         0, 0, 6.0 * kC20 * z,
         kC2 * z, 0, kC2 * x,
         2.0 * kC22 * x, -2.0 * kC22 * y, 0;
    return j;
}

Eigen::Vector3d sh_shade(const Eigen::Vector3d& normal, const Eigen::VectorXd& lighting) {
    if (lighting.size() != kLightingDim) {
        throw ParameterError("sh_shade: lighting must have 27 coefficients");
    }
    const double len = normal.norm();
    if (!(len > 0.0)) {
        throw ParameterError("sh_shade: zero normal");
    }
    const auto y = sh_basis(normal / len);
    Eigen::Vector3d gain = Eigen::Vector3d::Zero();
    for (int k = 0; k < kShBands; ++k) {
        for (int c = 0; c < 3; ++c) {
            gain[c] += y[static_cast<std::size_t>(k)] * lighting[3 * k + c];
        }
    }
    return gain;
}

} // namespace lipfit
