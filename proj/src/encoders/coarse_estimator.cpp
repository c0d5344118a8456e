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

#include "lipfit/encoders/coarse_estimator.hpp"

#include "lipfit/core/error.hpp"
#include "lipfit/core/image_ops.hpp"
#include "lipfit/core/rng.hpp"
#include "lipfit/encoders/features.hpp"
#include "lipfit/face_model/synthetic_model.hpp"

#include <cmath>
#include <utility>

namespace lipfit {

LinearCoarseEstimator::LinearCoarseEstimator(int grid, std::uint64_t seed) : grid_(grid) {
    if (grid < 1) {
        throw ParameterError("coarse estimator: grid must be positive");
    }
    const int inputs = 3 * grid * grid;
    FaceParams b = FaceParams::neutral();
    b.camera = synthetic_default_camera();
    bias_ = b.flatten();
    // Per-block scale of the random map, in field order.
    const std::pair<int, double> blocks[] = {{kIdentityDim, 0.01}, {kExpressionDim, 0.05}, {kPoseDim, 0.0005},
                                             {kPoseDim, 0.001},    {kAlbedoDim, 0.01},     {kLightingDim, 0.01},
                                             {kCameraDim, 0.0002}};
    weight_.resize(kFaceParamCount, inputs);
    Rng rng(seed);
    int row = 0;
    for (const auto& [count, scale] : blocks) {
        const double s = scale / std::sqrt(static_cast<double>(inputs));
        for (int r = 0; r < count; ++r, ++row) {
            for (int c = 0; c < inputs; ++c) {
                weight_(row, c) = s * rng.normal();
            }
        }
    }
}

LinearCoarseEstimator::LinearCoarseEstimator(int grid, Eigen::MatrixXd weight, Eigen::VectorXd bias)
    : grid_(grid), weight_(std::move(weight)), bias_(std::move(bias)) {
    if (grid < 1 || weight_.rows() != kFaceParamCount || weight_.cols() != 3 * grid * grid ||
        bias_.size() != kFaceParamCount) {
        throw ParameterError("coarse estimator: weight must be 236 x 3*grid^2 and bias 236");
    }
}

FaceParams LinearCoarseEstimator::estimate(const Tensor3& frame) const {
    Tensor3 x = frame;
    if (x.channels == 1) {
        Tensor3 rgb(3, x.height, x.width);
        for (int c = 0; c < 3; ++c) {
            std::copy(x.data.begin(), x.data.end(), rgb.channel(c).begin());
        }
        x = std::move(rgb);
    }
    if (x.channels != 3) {
        throw ParameterError("coarse estimator: expected an RGB frame");
    }
    if (x.height != grid_ || x.width != grid_) {
        x = resize(x, grid_, grid_);
    }
    const Eigen::Map<const Eigen::VectorXd> v(x.data.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd out = weight_ * v + bias_;
    if (!out.allFinite()) {
        throw NumericalError("coarse estimator produced non-finite parameters");
    }
    return FaceParams::unflatten(out);
}

std::uint64_t LinearCoarseEstimator::fingerprint() const {
    const auto h = fingerprint_values(weight_.data(), static_cast<std::size_t>(weight_.size()));
    return fingerprint_values(bias_.data(), static_cast<std::size_t>(bias_.size()), h);
}

std::uint64_t FixedCoarseEstimator::fingerprint() const {
    const Eigen::VectorXd flat = params_.flatten();
    return fingerprint_values(flat.data(), static_cast<std::size_t>(flat.size()));
}

} // namespace lipfit

namespace lipfit {

namespace {

Eigen::MatrixXd stack_rows(const std::vector<FaceParams>& frames, Eigen::VectorXd FaceParams::*field, int dim) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(frames.size()), dim);
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const Eigen::VectorXd& v = frames[k].*field;
        if (v.size() != dim) {
            throw ParameterError("coarse estimate frame " + std::to_string(k) + " has a malformed parameter block");
        }
        out.row(static_cast<Eigen::Index>(k)) = v.transpose();
    }
    return out;
}

} // namespace

Eigen::MatrixXd CoarseEstimate::expression() const { return stack_rows(frames, &FaceParams::expression, kExpressionDim); }
Eigen::MatrixXd CoarseEstimate::jaw() const { return stack_rows(frames, &FaceParams::jaw_pose, kPoseDim); }

CoarseEstimate estimate_sequence(const CoarseEstimator& estimator, const std::vector<Tensor3>& frames) {
    CoarseEstimate out;
    out.frames.reserve(frames.size());
    for (const Tensor3& f : frames) {
        out.frames.push_back(estimator.estimate(f));
    }
    return out;
}

} // namespace lipfit
