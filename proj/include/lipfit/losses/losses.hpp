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

#include "lipfit/core/config.hpp"
#include "lipfit/encoders/coarse_estimator.hpp"
#include "lipfit/encoders/features.hpp"
#include "lipfit/face_model/morphable_model.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Core>

#include <string>
#include <vector>

namespace lipfit {

/// Distance used by expression_loss.
enum class ExpressionDistance { Cosine, SquaredL2 };
/// Which mouth landmark term feeds the L_m slot.
enum class MouthLoss { Relative, Absolute, Off };

std::string to_string(ExpressionDistance d);
std::string to_string(MouthLoss m);
ExpressionDistance parse_expression_distance(const std::string& text);
MouthLoss parse_mouth_loss(const std::string& text);

/// Two-level weight on L_psi: `low` while L_psi <= threshold, `high` above it.
struct LambdaPsiSchedule {
    double low = 1e-3;
    double high = 2e-3;
    double threshold = 40.0;
};

double lambda_psi(double l_psi, const LambdaPsiSchedule& schedule = {});

struct LossWeights {
    double lipread = 2.0;
    double expression = 0.5;
    LambdaPsiSchedule psi;
    double jaw = 200.0;
    double landmarks = 50.0;
    double mouth = 50.0;
    MouthLoss mouth_loss = MouthLoss::Relative;
    ExpressionDistance expression_distance = ExpressionDistance::Cosine;

    static LossWeights training();
    /// Per-clip optimisation of raw parameters: lipread 4, psi 1e-3 flat, jaw 200, rest 0.
    static LossWeights direct_fit();
    /// "train" or "direct-fit".
    static LossWeights preset(const std::string& name);

    /// Throws ParameterError on a negative or non-finite weight.
    void validate() const;
    /// Keys under `prefix.`: lipread, expression, psi_low, psi_high, psi_threshold,
    /// jaw, landmarks, mouth, mouth_loss, expression_distance.
    void write(KeyValueConfig& config, const std::string& prefix = "loss") const;
    /// Missing keys keep the values of `base`.
    static LossWeights read(const KeyValueConfig& config, const LossWeights& base, const std::string& prefix = "loss");
};

/// Loss components, the resolved lambda_psi and the weighted total.
struct LossReport {
    double lipread = 0.0;
    double expression = 0.0;
    double psi = 0.0;
    double jaw = 0.0;
    double landmarks = 0.0;
    double mouth = 0.0;
    double lambda_psi = 0.0;
    double total = 0.0;

    /// Throws NumericalError naming the first non-finite component.
    void check_finite() const;
    [[nodiscard]] nlohmann::json to_json(long long iteration) const;
};

/// Weighted sum with lambda_psi resolved from `report.psi`; fills lambda_psi and total.
LossReport weigh(LossReport report, const LossWeights& weights);

/// 1 - cos(a, b). ParameterError on a zero vector or size mismatch. The
/// optional outputs receive d/da and d/db.
double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, Eigen::VectorXd* grad_a = nullptr,
                       Eigen::VectorXd* grad_b = nullptr);

/// Mean over frames of the cosine distance between matching rows.
/// `grad_rendered` receives the gradient with respect to `rendered`.
double lipread_loss(const FeatureSequence& input, const FeatureSequence& rendered,
                    Eigen::MatrixXd* grad_rendered = nullptr);

double expression_loss(const FeatureSequence& input, const FeatureSequence& rendered,
                       ExpressionDistance distance = ExpressionDistance::Cosine,
                       Eigen::MatrixXd* grad_rendered = nullptr);

struct RegularizerTerms {
    double psi = 0.0;
    double jaw = 0.0;
};

/// Squared offsets from the anchor, summed over the window and divided by K.
/// psi is K x 50, jaw K x 3.
RegularizerTerms param_regularizers(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& jaw,
                                    const Eigen::MatrixXd& anchor_psi, const Eigen::MatrixXd& anchor_jaw,
                                    Eigen::MatrixXd* grad_psi = nullptr, Eigen::MatrixXd* grad_jaw = nullptr);
RegularizerTerms param_regularizers(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& jaw,
                                    const CoarseEstimate& coarse, Eigen::MatrixXd* grad_psi = nullptr,
                                    Eigen::MatrixXd* grad_jaw = nullptr);

/// Landmark indices compared by landmark_l1_loss: outline, nose and eyes (38 points).
const std::vector<int>& l1_landmark_subset();

/// Sum of |rendered - target| over the coordinates of `subset`, averaged over
/// frames. Gradients of |0| are taken as 0.
double landmark_l1_loss(const std::vector<Points2>& rendered, const std::vector<Points2>& target,
                        const std::vector<int>& subset, std::vector<Points2>* grad_rendered = nullptr);
/// Default subset l1_landmark_subset().
double landmark_l1_loss(const std::vector<Points2>& rendered, const std::vector<Points2>& target,
                        std::vector<Points2>* grad_rendered = nullptr);

/// Strict L1 over the 20 mouth landmarks (ablation term).
double mouth_absolute_loss(const std::vector<Points2>& rendered, const std::vector<Points2>& target,
                           std::vector<Points2>* grad_rendered = nullptr);

/// 190 pairwise distances of a 20-point mouth, pairs (i < j) in row-major order.
Eigen::VectorXd mouth_pairwise_distances(const Points2& mouth);

/// Squared difference of the pairwise mouth distances, averaged over frames.
/// Accepts 20-point mouths or full 68-point sets (mouth rows are taken).
double mouth_relative_loss(const std::vector<Points2>& rendered, const std::vector<Points2>& target,
                           std::vector<Points2>* grad_rendered = nullptr);

/**
 * Everything total_loss consumes for one window of K frames. A feature pair or
 * landmark pair left empty contributes a zero component; landmark sets are
 * full 68-point arrays.
 */
struct LossInputs {
    FeatureSequence lip_input;
    FeatureSequence lip_rendered;
    FeatureSequence emotion_input;
    FeatureSequence emotion_rendered;
    Eigen::MatrixXd psi;
    Eigen::MatrixXd jaw;
    Eigen::MatrixXd anchor_psi;
    Eigen::MatrixXd anchor_jaw;
    std::vector<Points2> landmarks_rendered;
    std::vector<Points2> landmarks_target;
};

/// Gradients of the weighted total, shaped like the matching inputs (empty when absent).
struct LossGradients {
    Eigen::MatrixXd lip_rendered;
    Eigen::MatrixXd emotion_rendered;
    Eigen::MatrixXd psi;
    Eigen::MatrixXd jaw;
    std::vector<Points2> landmarks_rendered;
};

LossReport total_loss(const LossInputs& inputs, const LossWeights& weights, LossGradients* grads = nullptr);

} // namespace lipfit
