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
#include "lipfit/face_model/params.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace lipfit {

/**
 * Frozen per-frame estimator of the full parameter vector. The perceptual
 * stage keeps its identity, albedo, lighting, camera and neck pose, and uses
 * its expression and jaw pose as the regularisation anchor.
 */
class CoarseEstimator {
public:
    virtual ~CoarseEstimator() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    /// Deterministic; NumericalError when the output is not finite.
    [[nodiscard]] virtual FaceParams estimate(const Tensor3& frame) const = 0;
    [[nodiscard]] virtual std::uint64_t fingerprint() const = 0;
};

/// Per-frame output of the coarse estimator over a clip window.
struct CoarseEstimate {
    std::vector<FaceParams> frames;

    [[nodiscard]] int size() const { return static_cast<int>(frames.size()); }
    /// K x 50 and K x 3 row stacks of the anchor expression and jaw pose.
    [[nodiscard]] Eigen::MatrixXd expression() const;
    [[nodiscard]] Eigen::MatrixXd jaw() const;
};

CoarseEstimate estimate_sequence(const CoarseEstimator& estimator, const std::vector<Tensor3>& frames);

/**
 * params = W x + b, x being the frame resized to grid x grid RGB and
 * flattened channel-major. b is the neutral face under the default light and
 * the synthetic camera; W is small and seeded, scaled per parameter block.
 */
class LinearCoarseEstimator final : public CoarseEstimator {
public:
    explicit LinearCoarseEstimator(int grid = 8, std::uint64_t seed = 20230306);
    LinearCoarseEstimator(int grid, Eigen::MatrixXd weight, Eigen::VectorXd bias);

    [[nodiscard]] std::string name() const override { return "linear"; }
    [[nodiscard]] FaceParams estimate(const Tensor3& frame) const override;
    [[nodiscard]] std::uint64_t fingerprint() const override;

    [[nodiscard]] int grid() const { return grid_; }
    [[nodiscard]] const Eigen::MatrixXd& weight() const { return weight_; }
    [[nodiscard]] const Eigen::VectorXd& bias() const { return bias_; }

private:
    int grid_;
    Eigen::MatrixXd weight_; // kFaceParamCount x 3 grid^2
    Eigen::VectorXd bias_;
};

/// Replays known parameters regardless of the frame content (fixtures).
class FixedCoarseEstimator final : public CoarseEstimator {
public:
    explicit FixedCoarseEstimator(FaceParams params) : params_(std::move(params)) {}
    [[nodiscard]] std::string name() const override { return "fixed"; }
    [[nodiscard]] FaceParams estimate(const Tensor3&) const override { return params_; }
    [[nodiscard]] std::uint64_t fingerprint() const override;

private:
    FaceParams params_;
};

} // namespace lipfit
