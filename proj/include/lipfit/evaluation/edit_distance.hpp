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

#include <algorithm>
#include <cstddef>
#include <vector>

namespace lipfit {

/// Levenshtein distance with its operation breakdown (unit costs).
struct EditCounts {
    std::size_t distance = 0;
    std::size_t substitutions = 0;
    std::size_t insertions = 0;
    std::size_t deletions = 0;

    EditCounts& operator+=(const EditCounts& o) {
        distance += o.distance;
        substitutions += o.substitutions;
        insertions += o.insertions;
        deletions += o.deletions;
        return *this;
    }
    friend bool operator==(const EditCounts&, const EditCounts&) = default;
};

/**
 * Edit distance between two random-access token sequences (std::string for
 * characters, std::vector<std::string> for words, ...).
 *
 * The breakdown follows one optimal alignment, chosen by backtracking with
 * preference diagonal, then deletion, then insertion; `distance` is always
 * S + I + D.
 */
template <class Seq>
EditCounts edit_distance(const Seq& ref, const Seq& hyp) {
    const std::size_t n = ref.size();
    const std::size_t m = hyp.size();
    const std::size_t w = m + 1;
    std::vector<std::size_t> d((n + 1) * w);
    for (std::size_t j = 0; j <= m; ++j) {
        d[j] = j;
    }
    for (std::size_t i = 1; i <= n; ++i) {
        d[i * w] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t diag = d[(i - 1) * w + j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
            d[i * w + j] = std::min({diag, d[(i - 1) * w + j] + 1, d[i * w + j - 1] + 1});
        }
    }
    EditCounts out;
    out.distance = d[n * w + m];
    std::size_t i = n, j = m;
    while (i > 0 || j > 0) {
        const std::size_t here = d[i * w + j];
        if (i > 0 && j > 0) {
            const bool same = ref[i - 1] == hyp[j - 1];
            if (here == d[(i - 1) * w + j - 1] + (same ? 0 : 1)) {
                out.substitutions += same ? 0 : 1;
                --i;
                --j;
                continue;
            }
        }
        if (i > 0 && here == d[(i - 1) * w + j] + 1) {
            ++out.deletions;
            --i;
        } else {
            ++out.insertions;
            --j;
        }
    }
    return out;
}

} // namespace lipfit
