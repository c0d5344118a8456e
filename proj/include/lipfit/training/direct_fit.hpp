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

#include "lipfit/losses/losses.hpp"
#include "lipfit/training/adam.hpp"
#include "lipfit/training/pipeline.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lipfit {

struct DirectFitOptions {
    int iterations = 200;
    double learning_rate = 0.02;
    /// Learning rate reached at the last iteration as a fraction of the first (exponential decay; 1 = constant).
    double final_lr_fraction = 1.0;
    /// Jaw steps are this fraction of the expression steps. Adam moves every
    /// coordinate by about the learning rate on its first step, and a full-size
    /// step on all three jaw axes costs more under the jaw prior than a good
    /// start is worth.
    double jaw_lr_scale = 0.1;
    LossWeights weights = LossWeights::direct_fit();
    double divergence_factor = 10.0; ///< stop when the total exceeds this multiple of the initial total
    AdamConfig adam;
    /// Starting point; the coarse estimate when absent. The regularisers always anchor on the coarse estimate.
    std::optional<Eigen::MatrixXd> initial_psi;
    std::optional<Eigen::MatrixXd> initial_jaw;
};

struct DirectFitResult {
    Eigen::MatrixXd psi; ///< K x 50, best iterate
    Eigen::MatrixXd jaw; ///< K x 3
    std::vector<LossReport> trace; ///< report before each update, then the final one
    bool diverged = false;
    std::string diagnostic;
};

/**
 * Optimises the per-frame expression and jaw pose of one window directly with
 * Adam, without an encoder. The returned parameters are those of the last
 * iterate, or of the last iterate before divergence.
 */
DirectFitResult fit_direct(const Pipeline& pipeline, const WindowTargets& targets, const DirectFitOptions& options = {});

} // namespace lipfit
