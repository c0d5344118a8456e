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

#include "lipfit/training/direct_fit.hpp"

#include "lipfit/core/error.hpp"

#include <cmath>

namespace lipfit {

DirectFitResult fit_direct(const Pipeline& pipeline, const WindowTargets& targets, const DirectFitOptions& options) {
    if (options.iterations < 0 || !(options.learning_rate > 0.0) || !(options.divergence_factor > 1.0) ||
        !(options.final_lr_fraction > 0.0) || options.final_lr_fraction > 1.0 || !(options.jaw_lr_scale > 0.0)) {
        throw ParameterError("fit_direct: invalid iteration count, learning rate, decay, jaw scale or divergence factor");
    }
    const int k = targets.size();
    Eigen::MatrixXd psi = options.initial_psi.value_or(targets.coarse.expression());
    Eigen::MatrixXd jaw = options.initial_jaw.value_or(targets.coarse.jaw());
    if (psi.rows() != k || psi.cols() != kExpressionDim || jaw.rows() != k || jaw.cols() != kPoseDim) {
        throw ParameterError("fit_direct: initial parameters do not match the window");
    }

    // Flat layout: all expression rows, then all jaw rows (column-major blocks).
    const Eigen::Index n_psi = psi.size();
    const double js = options.jaw_lr_scale;
    Eigen::VectorXd x(n_psi + jaw.size());
    auto unpack = [&](const Eigen::VectorXd& v) {
        psi = Eigen::Map<const Eigen::MatrixXd>(v.data(), k, kExpressionDim);
        jaw = Eigen::Map<const Eigen::MatrixXd>(v.data() + n_psi, k, kPoseDim);
    };
    x.head(n_psi) = Eigen::Map<const Eigen::VectorXd>(psi.data(), n_psi);
    x.tail(jaw.size()) = Eigen::Map<const Eigen::VectorXd>(jaw.data(), jaw.size());

    DirectFitResult result;
    Adam adam(options.adam);
    double initial = 0.0;
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd previous = x;
    for (int it = 0; it <= options.iterations; ++it) {
        unpack(x);
        Eigen::MatrixXd g_psi, g_jaw;
        const bool last = it == options.iterations;
        LossReport r;
        try {
            r = pipeline.evaluate(targets, psi, jaw, options.weights, last ? nullptr : &g_psi, last ? nullptr : &g_jaw);
        } catch (const Error& e) {
            // An update can throw the mouth out of frame or the loss off to infinity;
            // past the first evaluation that is a divergence like any other.
            if (it == 0 || dynamic_cast<const ParameterError*>(&e) != nullptr) {
                throw;
            }
            result.diverged = true;
            result.diagnostic = "evaluation failed at iteration " + std::to_string(it) + ": " + e.what();
            x = previous;
            break;
        }
        if (it == 0) {
            initial = r.total;
        } else if (r.total > options.divergence_factor * initial && r.total > 0.0) {
            result.diverged = true;
            result.diagnostic = "total loss " + std::to_string(r.total) + " at iteration " + std::to_string(it) +
                                " exceeds " + std::to_string(options.divergence_factor) + "x the initial " +
                                std::to_string(initial);
            result.trace.push_back(r);
            x = previous;
            break;
        }
        result.trace.push_back(r);
        if (last) {
            break;
        }
        g.head(n_psi) = Eigen::Map<const Eigen::VectorXd>(g_psi.data(), n_psi);
        g.tail(jaw.size()) = Eigen::Map<const Eigen::VectorXd>(g_jaw.data(), g_jaw.size());
        if (!g.allFinite()) {
            throw NumericalError("fit_direct: non-finite gradient at iteration " + std::to_string(it));
        }
        previous = x;
        const double progress = options.iterations > 1 ? static_cast<double>(it) / (options.iterations - 1) : 0.0;
        Eigen::VectorXd stepped = x;
        adam.step(stepped, g, options.learning_rate * std::pow(options.final_lr_fraction, progress));
        x.head(n_psi) = stepped.head(n_psi);
        x.tail(jaw.size()) += js * (stepped.tail(jaw.size()) - x.tail(jaw.size()));
    }
    unpack(x);
    result.psi = psi;
    result.jaw = jaw;
    return result;
}

} // namespace lipfit
