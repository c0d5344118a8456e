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

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lipfit {

/// Uppercase ASCII letters, drop punctuation other than in-word apostrophes,
/// collapse whitespace runs to one space and trim. Idempotent.
std::string normalize_text(std::string_view text);

struct Transcript {
    std::string raw;
    std::string normalized;
    std::vector<std::string> words;

    Transcript() = default;
    explicit Transcript(std::string_view text);
};

/// One utterance per line, "clip-id<TAB>text". Blank lines are skipped. A
/// line without a tab is an id with empty text. Duplicate ids throw DataError.
std::vector<std::pair<std::string, std::string>> read_transcripts(const std::filesystem::path& path);
void write_transcripts(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& rows);

} // namespace lipfit
