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
#include "lipfit/kernels/kernels.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lipfit {

struct PerceptualEncoderConfig {
    int input_size = 64;     ///< frames are resized to input_size^2 RGB
    int conv1_channels = 8;
    int conv2_channels = 16;
    int embedding = 32;
    int temporal_kernel = 5; ///< odd; same zero padding
    bool zero_head = true;   ///< start from psi = 0, jaw = 0
    std::uint64_t seed = 7;
};

/// Per-frame predictions: K x 50 expression, K x 3 jaw pose.
struct EncoderOutput {
    Eigen::MatrixXd expression;
    Eigen::MatrixXd jaw;
};

/**
 * Trainable sequence encoder: a small per-frame CNN (two stride-2 3x3
 * convolutions, global average pool, fully connected layer), one temporal
 * convolution across frames, and a linear head emitting expression and jaw
 * pose for every frame.
 *
 * All weights live in one flat vector so optimisers and checkpoints can treat
 * them uniformly. Output at frame k depends only on frames within
 * temporal_kernel / 2 of k.
 */
class PerceptualEncoder {
public:
    /// Activations kept by forward for backward.
    struct Trace {
        std::vector<Tensor3> inputs, h1, h2;
        Eigen::MatrixXd pooled;   // K x c2
        Eigen::MatrixXd hidden;   // K x E after ReLU
        Eigen::MatrixXd temporal; // K x E after ReLU
    };

    explicit PerceptualEncoder(const PerceptualEncoderConfig& config = {});

    [[nodiscard]] const PerceptualEncoderConfig& config() const { return config_; }
    [[nodiscard]] const Eigen::VectorXd& weights() const { return weights_; }
    void set_weights(const Eigen::VectorXd& w);
    [[nodiscard]] std::size_t parameter_count() const { return static_cast<std::size_t>(weights_.size()); }

    /// Throws ParameterError on an empty sequence. Frames of other sizes are resized.
    EncoderOutput forward(const std::vector<Tensor3>& frames, Trace* trace = nullptr) const;
    /// Gradient with respect to the flat weights.
    [[nodiscard]] Eigen::VectorXd backward(const Trace& trace, const Eigen::MatrixXd& grad_expression,
                                           const Eigen::MatrixXd& grad_jaw) const;

    [[nodiscard]] std::uint64_t fingerprint() const;

private:
    struct Block {
        std::size_t offset = 0;
        std::size_t count = 0;
    };
    [[nodiscard]] std::span<const double> view(const Block& b) const {
        return {weights_.data() + b.offset, b.count};
    }

    PerceptualEncoderConfig config_;
    kernels::ConvShape conv1_, conv2_;
    Block w1_, b1_, w2_, b2_, fc_w_, fc_b_, tc_w_, tc_b_, head_w_, head_b_;
    Eigen::VectorXd weights_;
};

} // namespace lipfit
