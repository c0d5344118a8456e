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

#include <Eigen/Core>

namespace lipfit {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction. State is sized lazily on the first step.
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    /// params -= lr * m_hat / (sqrt(v_hat) + eps)
    void step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad, double lr);

    [[nodiscard]] const AdamConfig& config() const { return config_; }
    [[nodiscard]] long long steps() const { return t_; }
    [[nodiscard]] const Eigen::VectorXd& first_moment() const { return m_; }
    [[nodiscard]] const Eigen::VectorXd& second_moment() const { return v_; }
    void restore(Eigen::VectorXd m, Eigen::VectorXd v, long long steps);

private:
    AdamConfig config_;
    Eigen::VectorXd m_, v_;
    long long t_ = 0;
};

} // namespace lipfit
