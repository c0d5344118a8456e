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

#include "lipfit/training/adam.hpp"

#include "lipfit/core/error.hpp"

#include <cmath>

namespace lipfit {

void Adam::step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad, double lr) {
    if (grad.size() != params.size()) {
        throw ParameterError("Adam: gradient and parameter sizes differ");
    }
    if (m_.size() == 0) {
        m_ = Eigen::VectorXd::Zero(params.size());
        v_ = Eigen::VectorXd::Zero(params.size());
    } else if (m_.size() != params.size()) {
        throw ParameterError("Adam: parameter count changed between steps");
    }
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
        v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
        params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.epsilon);
    }
}

void Adam::restore(Eigen::VectorXd m, Eigen::VectorXd v, long long steps) {
    if (m.size() != v.size() || steps < 0) {
        throw DataError("Adam: inconsistent optimizer state");
    }
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = steps;
}

} // namespace lipfit
