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

#include "lipfit/evaluation/transcript.hpp"

#include "lipfit/core/error.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace lipfit {

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

} // namespace

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        const auto u = static_cast<unsigned char>(c);
        char keep = 0;
        if (std::isspace(u) != 0) {
            pending_space = !out.empty();
            continue;
        }
        if (std::isalpha(u) != 0) {
            keep = static_cast<char>(std::toupper(u));
        } else if (std::isdigit(u) != 0 || u >= 0x80) {
            keep = c;
        } else if (c == '\'' && i > 0 && i + 1 < text.size() && is_alnum(text[i - 1]) && is_alnum(text[i + 1])) {
            keep = c;
        }
        if (keep == 0) {
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(keep);
    }
    return out;
}

Transcript::Transcript(std::string_view text) : raw(text), normalized(normalize_text(text)) {
    std::istringstream in(normalized);
    std::string w;
    while (in >> w) {
        words.push_back(w);
    }
}

std::vector<std::pair<std::string, std::string>> read_transcripts(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open transcript file " + path.string());
    }
    std::vector<std::pair<std::string, std::string>> rows;
    std::set<std::string> seen;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        const auto tab = line.find('\t');
        std::string id = line.substr(0, tab);
        std::string text = tab == std::string::npos ? std::string() : line.substr(tab + 1);
        if (id.empty()) {
            throw DataError(path.string() + ":" + std::to_string(number) + ": empty clip id");
        }
        if (!seen.insert(id).second) {
            throw DataError(path.string() + ":" + std::to_string(number) + ": duplicate clip id '" + id + "'");
        }
        rows.emplace_back(std::move(id), std::move(text));
    }
    return rows;
}

void write_transcripts(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write transcript file " + path.string());
    }
    for (const auto& [id, text] : rows) {
        out << id << '\t' << text << '\n';
    }
}

} // namespace lipfit
