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

#include "lipfit/training/dataset.hpp"

#include "lipfit/core/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lipfit {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace

std::vector<Points2> read_landmarks(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open landmark file " + path.string());
    }
    std::vector<Eigen::RowVector2d> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ss(line);
        double x = 0.0, y = 0.0;
        std::string rest;
        if (!(ss >> x >> y) || (ss >> rest) || !std::isfinite(x) || !std::isfinite(y)) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected two finite numbers");
        }
        rows.emplace_back(x, y);
    }
    if (rows.size() % kLandmarkCount != 0) {
        throw DataError(path.string() + ": " + std::to_string(rows.size()) + " landmark rows is not a multiple of " +
                        std::to_string(kLandmarkCount));
    }
    std::vector<Points2> out(rows.size() / kLandmarkCount, Points2(kLandmarkCount, 2));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out[i / kLandmarkCount].row(static_cast<Eigen::Index>(i % kLandmarkCount)) = rows[i];
    }
    return out;
}

void write_landmarks(const std::filesystem::path& path, const std::vector<Points2>& landmarks) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write landmark file " + path.string());
    }
    char buf[64];
    for (std::size_t f = 0; f < landmarks.size(); ++f) {
        if (landmarks[f].rows() != kLandmarkCount) {
            throw ParameterError("write_landmarks: frame " + std::to_string(f) + " does not hold 68 points");
        }
        out << "# frame " << f << '\n';
        for (int i = 0; i < kLandmarkCount; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g %.17g\n", landmarks[f](i, 0), landmarks[f](i, 1));
            out << buf;
        }
    }
    if (!out) {
        throw DataError("failed writing " + path.string());
    }
}

std::string manifest_line(const std::string& id, const std::string& frames, const std::string& landmarks, double fps,
                          const std::string& transcript) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", fps);
    std::string line = id + '\t' + frames + '\t' + landmarks + '\t' + buf;
    if (!transcript.empty()) {
        line += '\t' + transcript;
    }
    return line;
}

Manifest load_manifest(const std::filesystem::path& path, int window) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open manifest " + path.string());
    }
    const std::filesystem::path base = path.parent_path();
    Manifest out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ss(line);
        std::vector<std::string> fields;
        for (std::string f; ss >> f;) {
            fields.push_back(f);
        }
        auto reject = [&](const std::string& reason) {
            out.rejected.push_back({lineno, fields.empty() ? std::string() : fields[0], reason});
        };
        if (fields.size() < 4 || fields.size() > 5) {
            reject("expected 4 or 5 fields, found " + std::to_string(fields.size()));
            continue;
        }
        ClipRecord rec;
        rec.id = fields[0];
        try {
            std::size_t used = 0;
            rec.fps = std::stod(fields[3], &used);
            if (used != fields[3].size()) {
                throw std::invalid_argument("trailing");
            }
        } catch (const std::exception&) {
            reject("fps '" + fields[3] + "' is not a number");
            continue;
        }
        if (!(rec.fps > 0.0) || !std::isfinite(rec.fps)) {
            reject("fps must be positive");
            continue;
        }
        try {
            rec.frames = open_frame_source(resolve(base, fields[1]).string());
        } catch (const Error& e) {
            reject(std::string("frames: ") + e.what());
            continue;
        }
        if (rec.frame_count() == 0) {
            reject("no frames found for " + fields[1]);
            continue;
        }
        try {
            rec.landmarks = read_landmarks(resolve(base, fields[2]));
        } catch (const Error& e) {
            reject(std::string("landmarks: ") + e.what());
            continue;
        }
        if (static_cast<int>(rec.landmarks.size()) != rec.frame_count()) {
            reject("landmark count " + std::to_string(rec.landmarks.size()) + " does not match frame count " +
                   std::to_string(rec.frame_count()));
            continue;
        }
        if (fields.size() == 5) {
            rec.transcript = resolve(base, fields[4]);
            if (!std::filesystem::exists(*rec.transcript)) {
                reject("transcript file not found: " + fields[4]);
                continue;
            }
        }
        rec.too_short = rec.frame_count() < window;
        out.clips.push_back(std::move(rec));
    }
    return out;
}

int sample_window_start(const ClipRecord& clip, int k, Rng& rng) {
    if (k < 1) {
        throw ParameterError("window length must be positive");
    }
    if (clip.frame_count() < k) {
        throw DataError("clip " + clip.id + " has " + std::to_string(clip.frame_count()) +
                        " frames, fewer than the window of " + std::to_string(k));
    }
    return static_cast<int>(rng.uniform_int(0, clip.frame_count() - k));
}

Window read_window(const ClipRecord& clip, int start, int k) {
    if (start < 0 || k < 1 || start + k > clip.frame_count()) {
        throw ParameterError("window [" + std::to_string(start) + ", " + std::to_string(start + k) +
                             ") outside clip " + clip.id);
    }
    Window w;
    w.clip_id = clip.id;
    w.start = start;
    for (int i = start; i < start + k; ++i) {
        w.frames.push_back(clip.frames->frame(i));
        w.landmarks.push_back(clip.landmarks[static_cast<std::size_t>(i)]);
    }
    return w;
}

Window sample_window(const ClipRecord& clip, int k, Rng& rng) {
    return read_window(clip, sample_window_start(clip, k, rng), k);
}

} // namespace lipfit
