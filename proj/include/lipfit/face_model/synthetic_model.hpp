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

#include "lipfit/face_model/morphable_model.hpp"

#include <cstdint>
#include <filesystem>

namespace lipfit {

/**
 * Parameters of the built-in desk-scale face model.
 *
 * The surface is a `grid` x `grid` height field over (u, v) in [-1, 1]^2 shaped
 * like a frontal face (ellipsoidal depth profile, nose ridge, lip bulge). The
 * row of cells at `mouth_v` between the mouth corners is split by a dark,
 * recessed inner-mouth row of vertices that follows the jaw half way, so
 * parting the lips stretches smoothly shaded triangles instead of opening a
 * hole (a hole would only change pixels at its edges). Identity, expression and albedo bases are sums of random
 * Gaussian bumps drawn from `seed`; the expression basis concentrates its
 * leading components around the mouth. Landmarks are the nearest grid vertices
 * to a hand-authored 68-point layout.
 */
struct SyntheticModelOptions {
    int grid = 25;
    double mouth_v = -0.44;
    double mouth_half_width = 0.30;
    double mouth_depth = 0.04;   ///< recess of the inner-mouth row behind the lips
    std::uint64_t seed = 20230306;
};

MorphableModel make_synthetic_model(const SyntheticModelOptions& options = {});

/// Camera that frames the synthetic face in the unit image square.
Eigen::VectorXd synthetic_default_camera();

/// Model archives: kind "morphable_model", version 1. The header meta block
/// records vertex_count, face_count, identity_dim, expression_dim, albedo_dim
/// and landmark_count so exports from other tools can be checked before loading.
void save_model(const MorphableModel& model, const std::filesystem::path& path);
MorphableModel load_model(const std::filesystem::path& path);

} // namespace lipfit
