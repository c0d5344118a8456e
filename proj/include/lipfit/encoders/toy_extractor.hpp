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

#include "lipfit/encoders/features.hpp"
#include "lipfit/kernels/kernels.hpp"

#include <memory>

namespace lipfit {

struct ToyExtractorConfig {
    std::string name = "toy";
    int channels = 1;
    int size = 96;
    int hidden = 8;      ///< channels after the first convolution
    int feature_dim = 24;
    int kernel1 = 5;
    int stride1 = 2;
    int kernel2 = 3;
    int stride2 = 2;
    std::uint64_t seed = 1;
    /// Remove the mean of each first-layer filter so flat regions give zero response.
    bool zero_mean_filters = false;
    double bias_scale = 0.05;  ///< standard deviation of the random biases
    double bias2_offset = 0.0; ///< added to every second-layer bias
};

/// 96x96 grayscale mouth crops -> 24 features.
ToyExtractorConfig lip_extractor_config();
/// 64x64 RGB faces -> 16 features.
ToyExtractorConfig emotion_extractor_config();

/**
 * conv -> ReLU -> conv -> ReLU -> global average pool ("trunk").
 *
 * The "contextual" tap adds a temporal mixing layer on top of the pooled
 * trunk features: tanh(A f_k + B mean_j f_j + c), so each frame's feature
 * depends on the whole sequence. Convolutions use "valid" padding.
 */
class ToyConvExtractor final : public FeatureExtractor {
public:
    explicit ToyConvExtractor(const ToyExtractorConfig& config, TapPoint tap = TapPoint::Trunk);

    [[nodiscard]] const ExtractorSpec& spec() const override { return spec_; }
    [[nodiscard]] TapPoint tap() const override { return tap_; }
    [[nodiscard]] FeatureSequence extract(const std::vector<Tensor3>& images) const override;
    [[nodiscard]] std::vector<Tensor3> backward(const std::vector<Tensor3>& images,
                                                const Eigen::MatrixXd& grad_features) const override;
    [[nodiscard]] std::uint64_t fingerprint() const override;

    /// Pooled trunk features of one image.
    [[nodiscard]] Eigen::VectorXd trunk(const Tensor3& image) const;

    [[nodiscard]] const kernels::ConvShape& conv1() const { return conv1_; }
    [[nodiscard]] const kernels::ConvShape& conv2() const { return conv2_; }
    [[nodiscard]] const std::vector<double>& weight1() const { return w1_; }
    [[nodiscard]] const std::vector<double>& bias1() const { return b1_; }
    [[nodiscard]] const std::vector<double>& weight2() const { return w2_; }
    [[nodiscard]] const std::vector<double>& bias2() const { return b2_; }
    [[nodiscard]] const Eigen::MatrixXd& context_self() const { return ctx_self_; }
    [[nodiscard]] const Eigen::MatrixXd& context_mean() const { return ctx_mean_; }
    [[nodiscard]] const Eigen::VectorXd& context_bias() const { return ctx_bias_; }

private:
    void check_inputs(const std::vector<Tensor3>& images) const;

    ExtractorSpec spec_;
    TapPoint tap_;
    kernels::ConvShape conv1_;
    kernels::ConvShape conv2_;
    std::vector<double> w1_, b1_, w2_, b2_;
    Eigen::MatrixXd ctx_self_, ctx_mean_;
    Eigen::VectorXd ctx_bias_;
};

std::unique_ptr<FeatureExtractor> make_lip_extractor(TapPoint tap = TapPoint::Trunk);
std::unique_ptr<FeatureExtractor> make_emotion_extractor(TapPoint tap = TapPoint::Trunk);

} // namespace lipfit
