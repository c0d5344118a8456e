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

#include "lipfit/evaluation/phonetics.hpp"

#include "lipfit/core/error.hpp"
#include "lipfit/evaluation/transcript.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace lipfit {

const std::vector<std::string>& phoneme_inventory() {
    static const std::vector<std::string> inventory = {
        "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D", "DH", "EH", "ER", "EY",
        "F",  "G",  "HH", "IH", "IY", "JH", "K",  "L",  "M", "N",  "NG", "OW", "OY",
        "P",  "R",  "S",  "SH", "T",  "TH", "UH", "UW", "V", "W",  "Y",  "Z",  "ZH"};
    return inventory;
}

bool in_phoneme_inventory(std::string_view phoneme) {
    const auto& inv = phoneme_inventory();
    return std::find(inv.begin(), inv.end(), phoneme) != inv.end();
}

std::string strip_stress(std::string_view phoneme) {
    std::string s(phoneme);
    while (!s.empty() && std::isdigit(static_cast<unsigned char>(s.back())) != 0) {
        s.pop_back();
    }
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

Lexicon Lexicon::parse(std::istream& in, const std::string& source) {
    Lexicon lex;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty() || line.rfind(";;;", 0) == 0 || line[0] == '#') {
            continue;
        }
        std::istringstream fields(line);
        std::string word;
        if (!(fields >> word)) {
            continue;
        }
        bool alternate = false;
        if (const auto paren = word.find('('); paren != std::string::npos && paren > 0 && word.back() == ')') {
            word = word.substr(0, paren);
            alternate = true;
        }
        std::vector<std::string> phones;
        std::string p;
        while (fields >> p) {
            phones.push_back(p);
        }
        if (phones.empty()) {
            throw DataError(source + ":" + std::to_string(number) + ": no pronunciation for '" + word + "'");
        }
        if (alternate && lex.find(word) != nullptr) {
            continue;
        }
        try {
            lex.add(word, phones);
        } catch (const ParameterError& e) {
            throw DataError(source + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open lexicon " + path.string());
    }
    return parse(in, path.string());
}

void Lexicon::add(std::string_view word, const std::vector<std::string>& phonemes) {
    const std::string key = normalize_text(word);
    if (key.empty() || key.find(' ') != std::string::npos) {
        throw ParameterError("lexicon word '" + std::string(word) + "' is not a single word");
    }
    std::vector<std::string> clean;
    clean.reserve(phonemes.size());
    for (const auto& p : phonemes) {
        std::string s = strip_stress(p);
        if (!in_phoneme_inventory(s)) {
            throw ParameterError("phoneme '" + p + "' of '" + key + "' is not in the inventory");
        }
        clean.push_back(std::move(s));
    }
    entries_[key] = std::move(clean);
}

const std::vector<std::string>* Lexicon::find(std::string_view word) const {
    const auto it = entries_.find(std::string(word));
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> Phonemized::flat(bool boundaries) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < pronunciations.size(); ++i) {
        if (boundaries && i > 0) {
            out.emplace_back(kWordBoundary);
        }
        out.insert(out.end(), pronunciations[i].begin(), pronunciations[i].end());
    }
    return out;
}

Phonemized phonemize(const Transcript& transcript, const Lexicon& lexicon, OovPolicy oov) {
    Phonemized out;
    for (const auto& w : transcript.words) {
        if (const auto* p = lexicon.find(w)) {
            out.words.push_back(w);
            out.pronunciations.push_back(*p);
        } else if (oov == OovPolicy::Error) {
            throw DataError("word '" + w + "' is not in the lexicon");
        } else {
            out.oov.push_back(w);
        }
    }
    return out;
}

VisemeMap::VisemeMap(std::string name, std::map<std::string, std::string> table)
    : name_(std::move(name)), table_(std::move(table)) {
    for (const auto& p : phoneme_inventory()) {
        if (!table_.contains(p)) {
            throw DataError("viseme map '" + name_ + "' does not map phoneme " + p);
        }
    }
    for (const auto& [p, v] : table_) {
        if (!in_phoneme_inventory(p)) {
            throw DataError("viseme map '" + name_ + "' maps unknown phoneme " + p);
        }
        if (v.empty()) {
            throw DataError("viseme map '" + name_ + "' has an empty class for " + p);
        }
    }
}

VisemeMap VisemeMap::polly() {
    // Amazon Polly English (US) phoneme-to-viseme table, X-SAMPA rows rewritten in ARPAbet.
    static const std::map<std::string, std::string> table = {
        {"P", "p"},  {"B", "p"},  {"M", "p"},                              // bilabial closure
        {"F", "f"},  {"V", "f"},                                           // labiodental
        {"TH", "T"}, {"DH", "T"},                                          // dental
        {"T", "t"},  {"D", "t"},  {"N", "t"},  {"L", "t"},                 // alveolar
        {"K", "k"},  {"G", "k"},  {"NG", "k"}, {"HH", "k"},                // velar, glottal
        {"CH", "S"}, {"JH", "S"}, {"SH", "S"}, {"ZH", "S"},                // postalveolar
        {"S", "s"},  {"Z", "s"},
        {"R", "r"},
        {"W", "u"},  {"UW", "u"}, {"UH", "u"},
        {"Y", "i"},  {"IY", "i"}, {"IH", "i"},
        {"AA", "a"}, {"AE", "a"}, {"AY", "a"}, {"AW", "a"},
        {"EY", "e"},
        {"EH", "E"}, {"ER", "E"},
        {"AH", "@"},
        {"AO", "O"}, {"OY", "O"},
        {"OW", "o"},
    };
    return VisemeMap("polly", table);
}

VisemeMap VisemeMap::identity() {
    std::map<std::string, std::string> table;
    for (const auto& p : phoneme_inventory()) {
        table[p] = p;
    }
    return VisemeMap("identity", std::move(table));
}

VisemeMap VisemeMap::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open viseme map " + path.string());
    }
    std::map<std::string, std::string> table;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.resize(hash);
        }
        std::istringstream fields(line);
        std::string p, v, extra;
        if (!(fields >> p)) {
            continue;
        }
        if (!(fields >> v) || (fields >> extra)) {
            throw DataError(path.string() + ":" + std::to_string(number) + ": expected 'PHONEME VISEME'");
        }
        table[strip_stress(p)] = v;
    }
    return VisemeMap(path.stem().string(), std::move(table));
}

const std::string& VisemeMap::at(std::string_view phoneme) const {
    const auto it = table_.find(strip_stress(phoneme));
    if (it == table_.end()) {
        throw ParameterError("phoneme '" + std::string(phoneme) + "' has no viseme in map '" + name_ + "'");
    }
    return it->second;
}

std::vector<std::string> VisemeMap::classes() const {
    std::set<std::string> s;
    for (const auto& [p, v] : table_) {
        s.insert(v);
    }
    return {s.begin(), s.end()};
}

std::vector<std::string> to_visemes(const std::vector<std::string>& phonemes, const VisemeMap& map, bool merge_repeats) {
    std::vector<std::string> out;
    out.reserve(phonemes.size());
    for (const auto& p : phonemes) {
        const std::string& v = map.at(p);
        if (merge_repeats && !out.empty() && out.back() == v) {
            continue;
        }
        out.push_back(v);
    }
    return out;
}

} // namespace lipfit
