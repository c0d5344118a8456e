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

#include "lipfit/core/image_io.hpp"
#include "lipfit/core/rng.hpp"
#include "lipfit/face_model/morphable_model.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lipfit {

/// Landmark files hold 68 "x y" rows (pixels) per frame; blank lines and
/// lines starting with '#' are ignored. DataError on malformed content.
std::vector<Points2> read_landmarks(const std::filesystem::path& path);
void write_landmarks(const std::filesystem::path& path, const std::vector<Points2>& landmarks);

struct ClipRecord {
    std::string id;
    std::shared_ptr<const FrameSource> frames;
    std::vector<Points2> landmarks; ///< detected, pixel coordinates
    double fps = 25.0;
    std::optional<std::filesystem::path> transcript;
    bool too_short = false; ///< fewer frames than the training window

    [[nodiscard]] int frame_count() const { return frames ? frames->frame_count() : 0; }
};

struct ManifestIssue {
    int line = 0;
    std::string clip_id;
    std::string reason;
};

struct Manifest {
    std::vector<ClipRecord> clips;
    std::vector<ManifestIssue> rejected;
};

/**
 * Reads a manifest with one record per line:
 *
 *     clip_id  frame_pattern  landmark_file  fps  [transcript_file]
 *
 * Relative paths resolve against the manifest's directory. Records with
 * missing frames or landmark files, a bad fps or a landmark/frame count
 * mismatch are rejected with a reason; clips shorter than `window` are kept
 * with too_short set. DataError if the manifest itself cannot be read.
 */
Manifest load_manifest(const std::filesystem::path& path, int window = 20);

/// One line of the manifest format (paths written as given).
std::string manifest_line(const std::string& id, const std::string& frames, const std::string& landmarks, double fps,
                          const std::string& transcript = {});

/// K consecutive frames of a clip with their detected landmarks.
struct Window {
    std::string clip_id;
    int start = 0;
    std::vector<Tensor3> frames;
    std::vector<Points2> landmarks;

    [[nodiscard]] int size() const { return static_cast<int>(frames.size()); }
};

/// Reads frames [start, start + k).
Window read_window(const ClipRecord& clip, int start, int k);
/// Uniform start in [0, frame_count - k]. DataError when the clip is shorter than k.
Window sample_window(const ClipRecord& clip, int k, Rng& rng);
/// The start index sample_window would draw, without reading any frames.
int sample_window_start(const ClipRecord& clip, int k, Rng& rng);

} // namespace lipfit
