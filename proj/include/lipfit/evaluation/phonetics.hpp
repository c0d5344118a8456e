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
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lipfit {

struct Transcript;

/// The 39 ARPAbet phonemes of the CMU pronouncing dictionary, without stress.
const std::vector<std::string>& phoneme_inventory();
bool in_phoneme_inventory(std::string_view phoneme);
/// "AE1" -> "AE". Digits are only stripped from the end.
std::string strip_stress(std::string_view phoneme);

enum class OovPolicy { Skip, Error };

/**
 * Word -> pronunciation map in CMU dictionary format: "WORD  PH1 PH2 ...",
 * ";;;" comment lines, alternates written "WORD(2)" (the first pronunciation
 * wins). Stress digits are stripped on load; a phoneme outside the inventory
 * is a DataError naming the line.
 */
class Lexicon {
public:
    static Lexicon parse(std::istream& in, const std::string& source = "<stream>");
    static Lexicon load(const std::filesystem::path& path);

    /// Adds or replaces an entry. The word is normalized; phonemes are validated.
    void add(std::string_view word, const std::vector<std::string>& phonemes);
    [[nodiscard]] const std::vector<std::string>* find(std::string_view word) const;
    [[nodiscard]] std::size_t size() const { return entries_.size(); }

private:
    std::unordered_map<std::string, std::vector<std::string>> entries_;
};

inline constexpr std::string_view kWordBoundary = "|";

struct Phonemized {
    std::vector<std::string> words;                       ///< words that were found
    std::vector<std::vector<std::string>> pronunciations;  ///< one per entry of `words`
    std::vector<std::string> oov;                         ///< skipped words, in order

    /// Concatenated pronunciations, optionally with kWordBoundary between words.
    [[nodiscard]] std::vector<std::string> flat(bool boundaries = false) const;
};

/// Looks every word up. OovPolicy::Error throws DataError on the first miss.
Phonemized phonemize(const Transcript& transcript, const Lexicon& lexicon, OovPolicy oov = OovPolicy::Skip);

/**
 * Phoneme -> viseme class table, total over the inventory.
 *
 * `polly()` follows the published Amazon Polly English (US) viseme table,
 * translated from X-SAMPA to ARPAbet. ARPAbet AH and ER do not carry the
 * stressed/unstressed split that Polly's table uses once stress is stripped;
 * they map to "@" and "E".
 */
class VisemeMap {
public:
    /// Throws DataError unless every inventory phoneme is mapped.
    VisemeMap(std::string name, std::map<std::string, std::string> table);

    static VisemeMap polly();
    /// Each phoneme is its own class; the finest possible map.
    static VisemeMap identity();
    /// "PHONEME VISEME" per line, '#' comments.
    static VisemeMap load(const std::filesystem::path& path);

    [[nodiscard]] const std::string& name() const { return name_; }
    /// Stress is stripped first. Throws ParameterError naming an unmapped phoneme.
    [[nodiscard]] const std::string& at(std::string_view phoneme) const;
    [[nodiscard]] std::vector<std::string> classes() const;
    [[nodiscard]] const std::map<std::string, std::string>& table() const { return table_; }

private:
    std::string name_;
    std::map<std::string, std::string> table_;
};

/// Elementwise mapping; with `merge_repeats`, runs of one class collapse to a single token.
std::vector<std::string> to_visemes(const std::vector<std::string>& phonemes, const VisemeMap& map,
                                    bool merge_repeats = false);

} // namespace lipfit
