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

#include "lipfit/evaluation/study_stats.hpp"

#include "lipfit/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lipfit {

namespace {

double log_pmf(int k, int n, double p) {
    const double lc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    // p in {0, 1} only reaches here with k at the matching end.
    const double a = k == 0 ? 0.0 : k * std::log(p);
    const double b = k == n ? 0.0 : (n - k) * std::log1p(-p);
    return lc + a + b;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    return out;
}

int parse_count(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used == s.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw DataError(where + ": '" + s + "' is not an integer count");
}

// Rows of a headered CSV with exactly `columns` fields; returns the header too.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, std::size_t columns,
                                               std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<std::vector<std::string>> rows;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') {
            continue;
        }
        auto fields = split_csv(line);
        if (fields.size() != columns) {
            throw DataError(path.string() + ":" + std::to_string(number) + ": expected " + std::to_string(columns) +
                            " comma-separated fields");
        }
        if (header.empty()) {
            header = std::move(fields);
        } else {
            rows.push_back(std::move(fields));
        }
    }
    if (header.empty()) {
        throw DataError(path.string() + ": missing header row");
    }
    return rows;
}

} // namespace

double binomial_two_sided_p(int k, int n, double p) {
    if (n < 0 || k < 0 || k > n || !(p >= 0.0 && p <= 1.0)) {
        throw ParameterError("binomial test: need 0 <= k <= n and p in [0, 1]");
    }
    if (p == 0.0 || p == 1.0) {
        return (p == 0.0 ? k == 0 : k == n) ? 1.0 : 0.0;
    }
    const double cut = log_pmf(k, n, p) + std::log1p(1e-7);
    double total = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double lp = log_pmf(i, n, p);
        if (lp <= cut) {
            total += std::exp(lp);
        }
    }
    return std::min(1.0, total);
}

BinomialTestResult binomial_preference_test(int successes, int trials, int comparisons, double alpha) {
    if (trials < 0 || successes < 0 || successes > trials) {
        throw ParameterError("binomial_preference_test: need 0 <= successes <= trials");
    }
    if (comparisons < 1) {
        throw ParameterError("binomial_preference_test: comparisons must be at least 1");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ParameterError("binomial_preference_test: alpha must lie in (0, 1)");
    }
    BinomialTestResult r;
    r.successes = successes;
    r.trials = trials;
    r.comparisons = comparisons;
    r.p_raw = binomial_two_sided_p(successes, trials, 0.5);
    r.p_adjusted = std::min(1.0, r.p_raw * comparisons);
    r.significant = r.p_adjusted < alpha;
    return r;
}

std::vector<BinomialTestResult> preference_table(const std::vector<PreferenceCount>& rows, double alpha) {
    std::vector<BinomialTestResult> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        out.push_back(binomial_preference_test(row.successes, row.trials, static_cast<int>(rows.size()), alpha));
    }
    return out;
}

AccuracyTable word_accuracy_table(const std::vector<AccuracyCount>& rows) {
    AccuracyTable t;
    for (const auto& r : rows) {
        if (r.correct < 0 || r.total < 0 || r.correct > r.total) {
            throw ParameterError("word_accuracy_table: invalid counts for " + r.method + "/" + r.word);
        }
        for (AccuracyEntry* e : {&t.per_method[r.method], &t.per_word[r.method][r.word]}) {
            e->correct += r.correct;
            e->total += r.total;
        }
    }
    auto finish = [](AccuracyEntry& e) {
        if (e.total > 0) {
            e.percent = 100.0 * e.correct / e.total;
        }
    };
    for (auto& [m, e] : t.per_method) {
        finish(e);
    }
    for (auto& [m, words] : t.per_word) {
        for (auto& [w, e] : words) {
            finish(e);
        }
    }
    return t;
}

nlohmann::json AccuracyTable::to_json() const {
    auto entry = [](const AccuracyEntry& e) {
        return nlohmann::json{{"correct", e.correct},
                              {"total", e.total},
                              {"percent", e.percent ? nlohmann::json(*e.percent) : nlohmann::json(nullptr)}};
    };
    nlohmann::json methods = nlohmann::json::object(), words = nlohmann::json::object();
    for (const auto& [m, e] : per_method) {
        methods[m] = entry(e);
    }
    for (const auto& [m, ws] : per_word) {
        for (const auto& [w, e] : ws) {
            words[m][w] = entry(e);
        }
    }
    return {{"per_method", methods}, {"per_word", words}};
}

std::vector<PreferenceCount> read_preference_counts(const std::filesystem::path& path) {
    std::vector<std::string> header;
    const auto rows = read_csv(path, 3, header);
    const bool failures = header[2] == "failures";
    if (!failures && header[2] != "trials") {
        throw DataError(path.string() + ": third column must be 'trials' or 'failures'");
    }
    std::vector<PreferenceCount> out;
    for (const auto& f : rows) {
        PreferenceCount c;
        c.comparison = f[0];
        c.successes = parse_count(f[1], path.string());
        const int third = parse_count(f[2], path.string());
        c.trials = failures ? c.successes + third : third;
        out.push_back(c);
    }
    return out;
}

std::vector<AccuracyCount> read_accuracy_counts(const std::filesystem::path& path) {
    std::vector<std::string> header;
    const auto rows = read_csv(path, 4, header);
    std::vector<AccuracyCount> out;
    for (const auto& f : rows) {
        out.push_back({f[0], f[1], parse_count(f[2], path.string()), parse_count(f[3], path.string())});
    }
    return out;
}

} // namespace lipfit
