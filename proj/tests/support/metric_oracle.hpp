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

// Independent reference implementations of the transcript metrics, kept apart
// from the library so that tests compare two separate routes.

#include "lipfit/core/rng.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace lipfit::testing::oracle {

// Plain two-row Levenshtein, distance only.
template <class Seq>
std::size_t oracle_distance(const Seq& a, const Seq& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) {
        prev[j] = j;
    }
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0U : 1U);
            cur[j] = std::min(sub, std::min(prev[j], cur[j - 1]) + 1);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// Independent copies of the fixture pronunciations and the viseme table, for the composition oracle.
inline const std::map<std::string, std::string>& oracle_pronunciations() {
    static const std::map<std::string, std::string> m = {
        {"THE", "DH AH"}, {"CAT", "K AE T"}, {"SAT", "S AE T"}, {"ON", "AA N"},    {"A", "AH"},
        {"MAT", "M AE T"}, {"BAT", "B AE T"}, {"PAT", "P AE T"}, {"MAP", "M AE P"}, {"DOG", "D AO G"},
        {"MY", "M AY"},   {"NAME", "N EY M"}, {"YES", "Y EH S"}, {"NO", "N OW"},    {"RED", "R EH D"},
        {"BLUE", "B L UW"}, {"FISH", "F IH SH"}, {"SEE", "S IY"}, {"YOU", "Y UW"},   {"SHE", "SH IY"}};
    return m;
}

inline const std::map<std::string, std::string>& oracle_visemes() {
    static const std::map<std::string, std::string> m = {
        {"P", "p"},  {"B", "p"},  {"M", "p"},  {"F", "f"},  {"V", "f"},  {"TH", "T"}, {"DH", "T"}, {"T", "t"},
        {"D", "t"},  {"N", "t"},  {"L", "t"},  {"K", "k"},  {"G", "k"},  {"NG", "k"}, {"HH", "k"}, {"CH", "S"},
        {"JH", "S"}, {"SH", "S"}, {"ZH", "S"}, {"S", "s"},  {"Z", "s"},  {"R", "r"},  {"W", "u"},  {"UW", "u"},
        {"UH", "u"}, {"Y", "i"},  {"IY", "i"}, {"IH", "i"}, {"AA", "a"}, {"AE", "a"}, {"AY", "a"}, {"AW", "a"},
        {"EY", "e"}, {"EH", "E"}, {"ER", "E"}, {"AH", "@"}, {"AO", "O"}, {"OY", "O"}, {"OW", "o"}};
    return m;
}

inline std::vector<std::string> split_words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string w;
    while (in >> w) {
        out.push_back(w);
    }
    return out;
}

inline std::vector<std::string> oracle_viseme_tokens(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& w : split_words(text)) {
        for (const auto& p : split_words(oracle_pronunciations().at(w))) {
            out.push_back(oracle_visemes().at(p));
        }
    }
    return out;
}

inline std::vector<std::string> oracle_viseme_words(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& w : split_words(text)) {
        std::string token;
        for (const auto& p : split_words(oracle_pronunciations().at(w))) {
            token += (token.empty() ? "" : " ") + oracle_visemes().at(p);
        }
        out.push_back(token);
    }
    return out;
}

inline std::string random_sentence(Rng& rng, int min_words) {
    static const std::vector<std::string> vocab = [] {
        std::vector<std::string> v;
        for (const auto& [w, p] : oracle_pronunciations()) {
            v.push_back(w);
        }
        return v;
    }();
    const int n = min_words + rng.uniform_int(0, 5);
    std::string s;
    for (int i = 0; i < n; ++i) {
        s += (i ? " " : "") + vocab[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(vocab.size()) - 1))];
    }
    return s;
}

} // namespace lipfit::testing::oracle
