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

#include "lipfit/encoders/features.hpp"

#include "lipfit/core/error.hpp"

#include <cstring>

namespace lipfit {

std::string to_string(TapPoint tap) { return tap == TapPoint::Trunk ? "trunk" : "contextual"; }

TapPoint parse_tap_point(const std::string& text) {
    if (text == "trunk") {
        return TapPoint::Trunk;
    }
    if (text == "contextual") {
        return TapPoint::Contextual;
    }
    throw ParameterError("unknown tap point '" + text + "' (expected trunk or contextual)");
}

void FeatureSequence::validate() const {
    if (!values.allFinite()) {
        throw NumericalError("feature sequence contains non-finite values");
    }
}

std::uint64_t fingerprint_values(const double* data, std::size_t count, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, data + i, sizeof bits);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xffU;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

} // namespace lipfit
