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

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lipfit {

/// Two-sided exact binomial test: the probability, under Binomial(n, p), of all
/// outcomes no more likely than k (relative slack 1e-7 for ties).
double binomial_two_sided_p(int k, int n, double p = 0.5);

struct BinomialTestResult {
    int successes = 0;
    int trials = 0;
    int comparisons = 1;
    double p_raw = 1.0;
    double p_adjusted = 1.0;  ///< Bonferroni: min(1, p_raw * comparisons)
    bool significant = false; ///< p_adjusted < alpha
};

/// Tests against a 0.5 preference rate. ParameterError unless 0 <= successes <= trials and comparisons >= 1.
BinomialTestResult binomial_preference_test(int successes, int trials, int comparisons, double alpha = 0.01);

struct PreferenceCount {
    std::string comparison;
    int successes = 0;
    int trials = 0;
};

/// Tests every row with comparisons = rows.size().
std::vector<BinomialTestResult> preference_table(const std::vector<PreferenceCount>& rows, double alpha = 0.01);

struct AccuracyCount {
    std::string method;
    std::string word;
    int correct = 0;
    int total = 0;
};

struct AccuracyEntry {
    int correct = 0;
    int total = 0;
    std::optional<double> percent;  ///< absent when total is 0
};

struct AccuracyTable {
    std::map<std::string, AccuracyEntry> per_method;
    std::map<std::string, std::map<std::string, AccuracyEntry>> per_word;  ///< method -> word -> entry

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Pools counts per method and per (method, word). ParameterError on negative
/// counts or correct > total.
AccuracyTable word_accuracy_table(const std::vector<AccuracyCount>& rows);

/**
 * Study count files are CSV with a header row.
 * Preferences: "comparison,successes,trials" (or "comparison,successes,failures"
 * with the header naming it). Accuracy: "method,word,correct,total".
 */
std::vector<PreferenceCount> read_preference_counts(const std::filesystem::path& path);
std::vector<AccuracyCount> read_accuracy_counts(const std::filesystem::path& path);

} // namespace lipfit
