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

#include <Eigen/Core>

#include <array>

namespace lipfit {

inline constexpr int kShBands = 9;

/// Real spherical-harmonics basis up to degree 2 at a unit direction, ordered
/// Y00, Y1-1, Y10, Y11, Y2-2, Y2-1, Y20, Y21, Y22.
std::array<double, kShBands> sh_basis(const Eigen::Vector3d& n);

/// d sh_basis / d n (rows: basis index, cols: x, y, z), treating n as free.
Eigen::Matrix<double, kShBands, 3> sh_basis_jacobian(const Eigen::Vector3d& n);

/**
 * Per-channel gain sum_k Y_k(n) * lighting[3k + c]. The normal is normalised
 * here; a zero normal is a ParameterError, as is a lighting vector whose length
 * is not 27.
 */
Eigen::Vector3d sh_shade(const Eigen::Vector3d& normal, const Eigen::VectorXd& lighting);

} // namespace lipfit
