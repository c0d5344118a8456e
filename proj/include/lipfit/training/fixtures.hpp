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

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lipfit {

/**
 * Talking-face clips rendered from the morphable model with known parameters.
 * The jaw opens and closes about the x axis and the first expression
 * components oscillate at seeded frequencies; the "detected" landmarks are the
 * projected model landmarks plus Gaussian pixel noise.
 */
struct SyntheticClipOptions {
    int frames = 24;
    int image_size = 128;
    double fps = 25.0;
    double landmark_noise = 0.3;      ///< pixels
    double expression_amplitude = 1.5;
    int expression_components = 8;
    double jaw_amplitude = 0.22;      ///< radians at full opening
    std::uint64_t seed = 1;
};

struct SyntheticClip {
    std::vector<FaceParams> params;
    std::vector<Tensor3> frames;
    std::vector<Points2> landmarks;
};

/// Neutral face, default lighting, synthetic camera.
FaceParams synthetic_base_params();
/// Ground-truth parameters of every frame (no rendering).
std::vector<FaceParams> synthetic_clip_params(const SyntheticClipOptions& options);
SyntheticClip make_synthetic_clip(const MorphableModel& model, const SyntheticClipOptions& options);

struct SyntheticDatasetOptions {
    std::vector<int> frame_counts = {24, 30, 36};
    SyntheticClipOptions clip;
    bool transcripts = true;
};

/**
 * Writes clip_XX/frames/%04d.png, clip_XX/landmarks.txt, optional
 * clip_XX/transcript.txt and manifest.txt under `dir`. Clip i uses seed
 * clip.seed + i. Returns the manifest path.
 */
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const MorphableModel& model,
                                              const SyntheticDatasetOptions& options = {});

} // namespace lipfit
