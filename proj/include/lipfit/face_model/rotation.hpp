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

/// Skew-symmetric cross-product matrix of v.
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Rotation matrix of an axis-angle vector (Rodrigues' formula). Exact identity
/// at zero angle, series-expanded coefficients near zero.
Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle);

/// dR/dr_i for i = 0, 1, 2.
std::array<Eigen::Matrix3d, 3> rodrigues_derivatives(const Eigen::Vector3d& axis_angle);

} // namespace lipfit
