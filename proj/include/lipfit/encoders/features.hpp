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

#include "lipfit/core/tensor.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace lipfit {

/// Layer of the feature network whose output is compared by the perceptual losses.
enum class TapPoint { Trunk, Contextual };

std::string to_string(TapPoint tap);
/// Accepts "trunk" or "contextual"; anything else is a ParameterError.
TapPoint parse_tap_point(const std::string& text);

/// K x D per-frame feature vectors.
struct FeatureSequence {
    Eigen::MatrixXd values;
    TapPoint tap = TapPoint::Trunk;

    [[nodiscard]] int frames() const { return static_cast<int>(values.rows()); }
    [[nodiscard]] int dim() const { return static_cast<int>(values.cols()); }
    /// Throws NumericalError on non-finite entries.
    void validate() const;
};

/// Input contract of a feature extractor.
struct ExtractorSpec {
    std::string name;
    int channels = 1;
    int height = 0;
    int width = 0;
    int feature_dim = 0;
    bool frozen = true;
};

/**
 * Frozen perceptual feature network. Adapters for externally trained networks
 * implement this interface; the library ships seeded toy CNNs.
 */
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;

    [[nodiscard]] virtual const ExtractorSpec& spec() const = 0;
    [[nodiscard]] virtual TapPoint tap() const = 0;

    /// Images must match spec() exactly (ParameterError otherwise); K >= 1.
    [[nodiscard]] virtual FeatureSequence extract(const std::vector<Tensor3>& images) const = 0;
    /// Gradient of <grad_features, extract(images)> with respect to the images.
    [[nodiscard]] virtual std::vector<Tensor3> backward(const std::vector<Tensor3>& images,
                                                        const Eigen::MatrixXd& grad_features) const = 0;

    /// Stable hash of all weights, for immutability checks.
    [[nodiscard]] virtual std::uint64_t fingerprint() const = 0;
};

/// FNV-1a over the bytes of a double array.
std::uint64_t fingerprint_values(const double* data, std::size_t count, std::uint64_t seed = 1469598103934665603ULL);

} // namespace lipfit
