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

#include <filesystem>
#include <vector>

namespace lipfit {

inline constexpr int kIdentityDim = 100;
inline constexpr int kExpressionDim = 50;
inline constexpr int kPoseDim = 3;
inline constexpr int kAlbedoDim = 50;
inline constexpr int kLightingDim = 27; // 9 SH bands x 3 colour channels, laid out [band][channel]
inline constexpr int kCameraDim = 3;    // scale, t_x, t_y
inline constexpr int kFaceParamCount =
    kIdentityDim + kExpressionDim + 2 * kPoseDim + kAlbedoDim + kLightingDim + kCameraDim;

/**
 * Complete per-frame parameter vector: identity (shape), expression, neck and
 * jaw pose (axis-angle, radians), albedo, spherical-harmonics lighting and the
 * weak-perspective camera [scale, t_x, t_y] in image-normalised units.
 *
 * The same structure carries gradients with respect to each block.
 */
struct FaceParams {
    Eigen::VectorXd identity = Eigen::VectorXd::Zero(kIdentityDim);
    Eigen::VectorXd expression = Eigen::VectorXd::Zero(kExpressionDim);
    Eigen::VectorXd neck_pose = Eigen::VectorXd::Zero(kPoseDim);
    Eigen::VectorXd jaw_pose = Eigen::VectorXd::Zero(kPoseDim);
    Eigen::VectorXd albedo = Eigen::VectorXd::Zero(kAlbedoDim);
    Eigen::VectorXd lighting = Eigen::VectorXd::Zero(kLightingDim);
    Eigen::VectorXd camera = Eigen::VectorXd::Zero(kCameraDim);

    /// All blocks zero (the natural gradient accumulator).
    static FaceParams zeros() { return {}; }
    /// Zero shape and pose, unit camera, the default frontal lighting.
    static FaceParams neutral();

    /// Throws ParameterError unless every block has its standard length, all
    /// entries are finite and the jaw rotation angle is below pi.
    void validate() const;

    /// Concatenation in field order: identity, expression, neck, jaw, albedo,
    /// lighting, camera.
    [[nodiscard]] Eigen::VectorXd flatten() const;
    static FaceParams unflatten(const Eigen::VectorXd& flat);

    FaceParams& operator+=(const FaceParams& other);
    bool operator==(const FaceParams&) const = default;
};

/// Parameter file: '#' header lines, then one frame per line with the
/// kFaceParamCount values of FaceParams::flatten() in %.17g.
void write_params_file(const std::filesystem::path& path, const std::vector<FaceParams>& frames);
/// DataError on a short or non-numeric row or invalid parameters.
std::vector<FaceParams> read_params_file(const std::filesystem::path& path);

/// SH coefficients of the default light: ambient plus a frontal-overhead lobe,
/// identical across colour channels.
Eigen::VectorXd default_lighting();

} // namespace lipfit
