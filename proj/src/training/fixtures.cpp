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

#include "lipfit/training/fixtures.hpp"

#include "lipfit/core/error.hpp"
#include "lipfit/core/image_io.hpp"
#include "lipfit/core/rng.hpp"
#include "lipfit/face_model/synthetic_model.hpp"
#include "lipfit/renderer/renderer.hpp"
#include "lipfit/training/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace lipfit {

FaceParams synthetic_base_params() {
    FaceParams p = FaceParams::neutral();
    p.camera = synthetic_default_camera();
    return p;
}

std::vector<FaceParams> synthetic_clip_params(const SyntheticClipOptions& o) {
    if (o.frames < 1 || o.fps <= 0.0 || o.expression_components < 0 || o.expression_components > kExpressionDim) {
        throw ParameterError("synthetic clip: invalid options");
    }
    Rng rng(o.seed);
    const double two_pi = 2.0 * std::numbers::pi;
    const double jaw_freq = rng.uniform(1.5, 3.0);
    const double jaw_phase = rng.uniform(0.0, two_pi);
    std::vector<double> freq, phase, amp;
    for (int j = 0; j < o.expression_components; ++j) {
        freq.push_back(rng.uniform(0.8, 3.5));
        phase.push_back(rng.uniform(0.0, two_pi));
        amp.push_back(o.expression_amplitude * rng.uniform(0.4, 1.0) / (1.0 + j / 4.0));
    }
    std::vector<FaceParams> out;
    for (int f = 0; f < o.frames; ++f) {
        const double t = f / o.fps;
        FaceParams p = synthetic_base_params();
        p.jaw_pose[0] = o.jaw_amplitude * 0.5 * (1.0 - std::cos(two_pi * jaw_freq * t + jaw_phase));
        for (int j = 0; j < o.expression_components; ++j) {
            p.expression[j] = amp[static_cast<std::size_t>(j)] *
                              std::sin(two_pi * freq[static_cast<std::size_t>(j)] * t + phase[static_cast<std::size_t>(j)]);
        }
        out.push_back(std::move(p));
    }
    return out;
}

SyntheticClip make_synthetic_clip(const MorphableModel& model, const SyntheticClipOptions& o) {
    SyntheticClip clip;
    clip.params = synthetic_clip_params(o);
    Rng noise(o.seed ^ 0x9e3779b97f4a7c15ULL);
    Renderer renderer(o.image_size, o.image_size);
    for (const FaceParams& p : clip.params) {
        clip.frames.push_back(renderer.render(model, p).image);
        Points2 lm = to_pixels(landmarks2d(model, p).points, o.image_size, o.image_size);
        for (Eigen::Index i = 0; i < lm.size(); ++i) {
            lm.data()[i] += o.landmark_noise * noise.normal();
        }
        clip.landmarks.push_back(std::move(lm));
    }
    return clip;
}

std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const MorphableModel& model,
                                              const SyntheticDatasetOptions& options) {
    static const char* const vocabulary[] = {"THE", "CAT", "SAT", "ON", "A", "MAT", "BAT", "PAT", "MAP"};
    std::filesystem::create_directories(dir);
    const std::filesystem::path manifest = dir / "manifest.txt";
    std::ofstream m(manifest);
    if (!m) {
        throw DataError("cannot write " + manifest.string());
    }
    m << "# clip_id\tframes\tlandmarks\tfps\ttranscript\n";
    for (std::size_t i = 0; i < options.frame_counts.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "clip_%02zu", i);
        SyntheticClipOptions co = options.clip;
        co.frames = options.frame_counts[i];
        co.seed = options.clip.seed + i;
        const SyntheticClip clip = make_synthetic_clip(model, co);
        const std::filesystem::path clip_dir = dir / id;
        std::filesystem::create_directories(clip_dir / "frames");
        for (std::size_t f = 0; f < clip.frames.size(); ++f) {
            write_image(format_frame_path((clip_dir / "frames" / "%04d.png").string(), static_cast<int>(f)),
                        clip.frames[f]);
        }
        write_landmarks(clip_dir / "landmarks.txt", clip.landmarks);
        std::string transcript;
        if (options.transcripts) {
            Rng words(co.seed);
            std::ofstream t(clip_dir / "transcript.txt");
            const auto n = words.uniform_int(2, 4);
            for (std::int64_t w = 0; w < n; ++w) {
                t << (w > 0 ? " " : "") << vocabulary[words.uniform_int(0, std::size(vocabulary) - 1)];
            }
            t << '\n';
            transcript = std::string(id) + "/transcript.txt";
        }
        m << manifest_line(id, std::string(id) + "/frames/%04d.png", std::string(id) + "/landmarks.txt", co.fps,
                           transcript)
          << '\n';
    }
    if (!m) {
        throw DataError("failed writing " + manifest.string());
    }
    return manifest;
}

} // namespace lipfit
