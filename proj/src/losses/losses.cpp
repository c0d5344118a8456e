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

#include "lipfit/losses/losses.hpp"

#include "lipfit/core/error.hpp"

#include <cmath>

namespace lipfit {

namespace {

void check_pair(const FeatureSequence& a, const FeatureSequence& b, const char* what) {
    if (a.frames() != b.frames() || a.dim() != b.dim()) {
        throw ParameterError(std::string(what) + ": sequences differ in shape (" + std::to_string(a.frames()) + "x" +
                             std::to_string(a.dim()) + " vs " + std::to_string(b.frames()) + "x" +
                             std::to_string(b.dim()) + ")");
    }
    if (a.frames() == 0) {
        throw ParameterError(std::string(what) + ": empty sequence");
    }
}

void check_landmark_sets(const std::vector<Points2>& a, const std::vector<Points2>& b, int points, const char* what) {
    if (a.size() != b.size() || a.empty()) {
        throw ParameterError(std::string(what) + ": landmark sequences differ in length or are empty");
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].rows() != points || b[k].rows() != points) {
            throw ParameterError(std::string(what) + ": frame " + std::to_string(k) + " does not hold " +
                                 std::to_string(points) + " points");
        }
    }
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

Points2 mouth_rows(const Points2& p) {
    if (p.rows() == kMouthLandmarkCount) {
        return p;
    }
    if (p.rows() == kLandmarkCount) {
        const IndexRange r = landmark_range(LandmarkRegion::Mouth);
        return p.middleRows(r.begin, r.size());
    }
    throw ParameterError("mouth loss: expected 20 mouth points or 68 landmarks, got " + std::to_string(p.rows()));
}

} // namespace

std::string to_string(ExpressionDistance d) { return d == ExpressionDistance::Cosine ? "cosine" : "l2"; }

std::string to_string(MouthLoss m) {
    switch (m) {
    case MouthLoss::Relative: return "relative";
    case MouthLoss::Absolute: return "absolute";
    case MouthLoss::Off: return "off";
    }
    return "relative";
}

ExpressionDistance parse_expression_distance(const std::string& text) {
    if (text == "cosine") {
        return ExpressionDistance::Cosine;
    }
    if (text == "l2") {
        return ExpressionDistance::SquaredL2;
    }
    throw ParameterError("unknown expression distance '" + text + "' (expected cosine or l2)");
}

MouthLoss parse_mouth_loss(const std::string& text) {
    if (text == "relative") {
        return MouthLoss::Relative;
    }
    if (text == "absolute") {
        return MouthLoss::Absolute;
    }
    if (text == "off") {
        return MouthLoss::Off;
    }
    throw ParameterError("unknown mouth loss '" + text + "' (expected relative, absolute or off)");
}

double lambda_psi(double l_psi, const LambdaPsiSchedule& schedule) {
    return l_psi <= schedule.threshold ? schedule.low : schedule.high;
}

LossWeights LossWeights::training() { return {}; }

LossWeights LossWeights::direct_fit() {
    LossWeights w;
    w.lipread = 4.0;
    w.expression = 0.0;
    w.psi = {1e-3, 1e-3, 40.0};
    w.jaw = 200.0;
    w.landmarks = 0.0;
    w.mouth = 0.0;
    return w;
}

LossWeights LossWeights::preset(const std::string& name) {
    if (name == "train") {
        return training();
    }
    if (name == "direct-fit") {
        return direct_fit();
    }
    throw ParameterError("unknown weights preset '" + name + "' (expected train or direct-fit)");
}

void LossWeights::validate() const {
    const std::pair<const char*, double> all[] = {{"lipread", lipread},     {"expression", expression},
                                                  {"psi_low", psi.low},     {"psi_high", psi.high},
                                                  {"jaw", jaw},             {"landmarks", landmarks},
                                                  {"mouth", mouth},         {"psi_threshold", psi.threshold}};
    for (const auto& [name, v] : all) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ParameterError(std::string("loss weight ") + name + " must be finite and >= 0");
        }
    }
}

void LossWeights::write(KeyValueConfig& config, const std::string& prefix) const {
    const std::string p = prefix + ".";
    config.set_double(p + "lipread", lipread);
    config.set_double(p + "expression", expression);
    config.set_double(p + "psi_low", psi.low);
    config.set_double(p + "psi_high", psi.high);
    config.set_double(p + "psi_threshold", psi.threshold);
    config.set_double(p + "jaw", jaw);
    config.set_double(p + "landmarks", landmarks);
    config.set_double(p + "mouth", mouth);
    config.set(p + "mouth_loss", to_string(mouth_loss));
    config.set(p + "expression_distance", to_string(expression_distance));
}

LossWeights LossWeights::read(const KeyValueConfig& config, const LossWeights& base, const std::string& prefix) {
    const std::string p = prefix + ".";
    LossWeights w = base;
    w.lipread = config.get_double(p + "lipread", w.lipread);
    w.expression = config.get_double(p + "expression", w.expression);
    w.psi.low = config.get_double(p + "psi_low", w.psi.low);
    w.psi.high = config.get_double(p + "psi_high", w.psi.high);
    w.psi.threshold = config.get_double(p + "psi_threshold", w.psi.threshold);
    w.jaw = config.get_double(p + "jaw", w.jaw);
    w.landmarks = config.get_double(p + "landmarks", w.landmarks);
    w.mouth = config.get_double(p + "mouth", w.mouth);
    w.mouth_loss = parse_mouth_loss(config.get_string(p + "mouth_loss", to_string(w.mouth_loss)));
    w.expression_distance =
        parse_expression_distance(config.get_string(p + "expression_distance", to_string(w.expression_distance)));
    w.validate();
    return w;
}

void LossReport::check_finite() const {
    const std::pair<const char*, double> all[] = {{"L_lr", lipread},   {"L_em", expression}, {"L_psi", psi},
                                                  {"L_jaw", jaw},      {"L_n", landmarks},   {"L_m", mouth},
                                                  {"total", total}};
    for (const auto& [name, v] : all) {
        if (!std::isfinite(v)) {
            throw NumericalError(std::string("non-finite loss component ") + name);
        }
    }
}

nlohmann::json LossReport::to_json(long long iteration) const {
    return {{"iteration", iteration}, {"L_lr", lipread},         {"L_em", expression}, {"L_psi", psi},
            {"L_jaw", jaw},           {"L_n", landmarks},        {"L_m", mouth},       {"lambda_psi", lambda_psi},
            {"total", total}};
}

LossReport weigh(LossReport r, const LossWeights& w) {
    r.lambda_psi = lipfit::lambda_psi(r.psi, w.psi);
    r.total = w.lipread * r.lipread + w.expression * r.expression + r.lambda_psi * r.psi + w.jaw * r.jaw +
              w.landmarks * r.landmarks + w.mouth * r.mouth;
    return r;
}

double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, Eigen::VectorXd* grad_a,
                       Eigen::VectorXd* grad_b) {
    if (a.size() != b.size()) {
        throw ParameterError("cosine_distance: size mismatch");
    }
    const double na = a.norm();
    const double nb = b.norm();
    if (!(na > 0.0) || !(nb > 0.0)) {
        throw ParameterError("cosine_distance: degenerate (zero) feature vector");
    }
    if (a == b) {
        // Exact minimum; the formulas below would return roundoff of either sign.
        if (grad_a != nullptr) {
            grad_a->setZero(a.size());
        }
        if (grad_b != nullptr) {
            grad_b->setZero(b.size());
        }
        return 0.0;
    }
    const double cos = a.dot(b) / (na * nb);
    // d cos / da = b / (|a||b|) - cos a / |a|^2
    if (grad_a != nullptr) {
        *grad_a = -(b / (na * nb) - cos * a / (na * na));
    }
    if (grad_b != nullptr) {
        *grad_b = -(a / (na * nb) - cos * b / (nb * nb));
    }
    return 1.0 - cos;
}

double lipread_loss(const FeatureSequence& input, const FeatureSequence& rendered, Eigen::MatrixXd* grad_rendered) {
    check_pair(input, rendered, "lipread_loss");
    const int k = input.frames();
    if (grad_rendered != nullptr) {
        grad_rendered->setZero(k, rendered.dim());
    }
    double sum = 0.0;
    Eigen::VectorXd g;
    for (int i = 0; i < k; ++i) {
        sum += cosine_distance(input.values.row(i).transpose(), rendered.values.row(i).transpose(), nullptr,
                               grad_rendered != nullptr ? &g : nullptr);
        if (grad_rendered != nullptr) {
            grad_rendered->row(i) = g.transpose() / k;
        }
    }
    return sum / k;
}

double expression_loss(const FeatureSequence& input, const FeatureSequence& rendered, ExpressionDistance distance,
                       Eigen::MatrixXd* grad_rendered) {
    if (distance == ExpressionDistance::Cosine) {
        return lipread_loss(input, rendered, grad_rendered);
    }
    check_pair(input, rendered, "expression_loss");
    const int k = input.frames();
    const Eigen::MatrixXd diff = rendered.values - input.values;
    if (grad_rendered != nullptr) {
        *grad_rendered = 2.0 * diff / k;
    }
    return diff.squaredNorm() / k;
}

RegularizerTerms param_regularizers(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& jaw,
                                    const Eigen::MatrixXd& anchor_psi, const Eigen::MatrixXd& anchor_jaw,
                                    Eigen::MatrixXd* grad_psi, Eigen::MatrixXd* grad_jaw) {
    if (psi.rows() != anchor_psi.rows() || psi.cols() != anchor_psi.cols() || jaw.rows() != anchor_jaw.rows() ||
        jaw.cols() != anchor_jaw.cols() || psi.rows() != jaw.rows()) {
        throw ParameterError("param_regularizers: shape mismatch between parameters and anchor");
    }
    const auto k = static_cast<double>(psi.rows());
    if (psi.rows() == 0) {
        throw ParameterError("param_regularizers: empty window");
    }
    const Eigen::MatrixXd dp = psi - anchor_psi;
    const Eigen::MatrixXd dj = jaw - anchor_jaw;
    if (grad_psi != nullptr) {
        *grad_psi = 2.0 * dp / k;
    }
    if (grad_jaw != nullptr) {
        *grad_jaw = 2.0 * dj / k;
    }
    return {dp.squaredNorm() / k, dj.squaredNorm() / k};
}

RegularizerTerms param_regularizers(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& jaw,
                                    const CoarseEstimate& coarse, Eigen::MatrixXd* grad_psi,
                                    Eigen::MatrixXd* grad_jaw) {
    return param_regularizers(psi, jaw, coarse.expression(), coarse.jaw(), grad_psi, grad_jaw);
}

const std::vector<int>& l1_landmark_subset() {
    static const std::vector<int> subset = [] {
        std::vector<int> out;
        for (LandmarkRegion r : {LandmarkRegion::Outline, LandmarkRegion::Nose, LandmarkRegion::Eyes}) {
            const IndexRange range = landmark_range(r);
            for (int i = range.begin; i < range.end; ++i) {
                out.push_back(i);
            }
        }
        return out;
    }();
    return subset;
}

double landmark_l1_loss(const std::vector<Points2>& rendered, const std::vector<Points2>& target,
                        const std::vector<int>& subset, std::vector<Points2>* grad_rendered) {
    check_landmark_sets(rendered, target, kLandmarkCount, "landmark_l1_loss");
    const auto k = static_cast<double>(rendered.size());
    if (grad_rendered != nullptr) {
        grad_rendered->assign(rendered.size(), Points2::Zero(kLandmarkCount, 2));
    }
    double sum = 0.0;
    for (std::size_t f = 0; f < rendered.size(); ++f) {
        for (int i : subset) {
            if (i < 0 || i >= kLandmarkCount) {
                throw ParameterError("landmark_l1_loss: subset index out of range");
            }
            for (int c = 0; c < 2; ++c) {
                const double d = rendered[f](i, c) - target[f](i, c);
                sum += std::abs(d);
                if (grad_rendered != nullptr) {
                    (*grad_rendered)[f](i, c) += sign(d) / k;
                }
            }
        }
    }
    return sum / k;
}

double landmark_l1_loss(const std::vector<Points2>& rendered, const std::vector<Points2>& target,
                        std::vector<Points2>* grad_rendered) {
    return landmark_l1_loss(rendered, target, l1_landmark_subset(), grad_rendered);
}

double mouth_absolute_loss(const std::vector<Points2>& rendered, const std::vector<Points2>& target,
                           std::vector<Points2>* grad_rendered) {
    const IndexRange r = landmark_range(LandmarkRegion::Mouth);
    std::vector<int> mouth;
    for (int i = r.begin; i < r.end; ++i) {
        mouth.push_back(i);
    }
    return landmark_l1_loss(rendered, target, mouth, grad_rendered);
}

Eigen::VectorXd mouth_pairwise_distances(const Points2& mouth) {
    const Points2 m = mouth_rows(mouth);
    const int n = static_cast<int>(m.rows());
    Eigen::VectorXd d(n * (n - 1) / 2);
    int p = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            d[p++] = (m.row(i) - m.row(j)).norm();
        }
    }
    return d;
}

double mouth_relative_loss(const std::vector<Points2>& rendered, const std::vector<Points2>& target,
                           std::vector<Points2>* grad_rendered) {
    if (rendered.size() != target.size() || rendered.empty()) {
        throw ParameterError("mouth_relative_loss: landmark sequences differ in length or are empty");
    }
    const auto k = static_cast<double>(rendered.size());
    if (grad_rendered != nullptr) {
        grad_rendered->clear();
    }
    double sum = 0.0;
    for (std::size_t f = 0; f < rendered.size(); ++f) {
        const Points2 r = mouth_rows(rendered[f]);
        const Points2 t = mouth_rows(target[f]);
        const Eigen::VectorXd dr = mouth_pairwise_distances(r);
        const Eigen::VectorXd dt = mouth_pairwise_distances(t);
        sum += (dr - dt).squaredNorm();
        if (grad_rendered == nullptr) {
            continue;
        }
        Points2 g = Points2::Zero(rendered[f].rows(), 2);
        const int offset = rendered[f].rows() == kLandmarkCount ? landmark_range(LandmarkRegion::Mouth).begin : 0;
        int p = 0;
        for (int i = 0; i < kMouthLandmarkCount; ++i) {
            for (int j = i + 1; j < kMouthLandmarkCount; ++j, ++p) {
                if (dr[p] == 0.0) {
                    continue; // coincident points: distance is not differentiable
                }
                const Eigen::RowVector2d u = (r.row(i) - r.row(j)) / dr[p];
                const Eigen::RowVector2d gi = 2.0 * (dr[p] - dt[p]) / k * u;
                g.row(offset + i) += gi;
                g.row(offset + j) -= gi;
            }
        }
        grad_rendered->push_back(std::move(g));
    }
    return sum / k;
}

LossReport total_loss(const LossInputs& in, const LossWeights& w, LossGradients* grads) {
    w.validate();
    LossReport r;
    LossGradients local;
    const bool want = grads != nullptr;
    if (in.lip_input.frames() > 0 || in.lip_rendered.frames() > 0) {
        r.lipread = lipread_loss(in.lip_input, in.lip_rendered, want ? &local.lip_rendered : nullptr);
        local.lip_rendered *= w.lipread;
    }
    if (in.emotion_input.frames() > 0 || in.emotion_rendered.frames() > 0) {
        r.expression = expression_loss(in.emotion_input, in.emotion_rendered, w.expression_distance,
                                       want ? &local.emotion_rendered : nullptr);
        local.emotion_rendered *= w.expression;
    }
    if (in.psi.rows() > 0) {
        const RegularizerTerms reg = param_regularizers(in.psi, in.jaw, in.anchor_psi, in.anchor_jaw,
                                                        want ? &local.psi : nullptr, want ? &local.jaw : nullptr);
        r.psi = reg.psi;
        r.jaw = reg.jaw;
        local.psi *= lambda_psi(r.psi, w.psi);
        local.jaw *= w.jaw;
    }
    if (!in.landmarks_rendered.empty() || !in.landmarks_target.empty()) {
        std::vector<Points2> g_n, g_m;
        r.landmarks = landmark_l1_loss(in.landmarks_rendered, in.landmarks_target, want ? &g_n : nullptr);
        switch (w.mouth_loss) {
        case MouthLoss::Relative:
            r.mouth = mouth_relative_loss(in.landmarks_rendered, in.landmarks_target, want ? &g_m : nullptr);
            break;
        case MouthLoss::Absolute:
            r.mouth = mouth_absolute_loss(in.landmarks_rendered, in.landmarks_target, want ? &g_m : nullptr);
            break;
        case MouthLoss::Off: break;
        }
        if (want) {
            local.landmarks_rendered = std::move(g_n);
            for (std::size_t f = 0; f < local.landmarks_rendered.size(); ++f) {
                local.landmarks_rendered[f] *= w.landmarks;
                if (!g_m.empty()) {
                    local.landmarks_rendered[f] += w.mouth * g_m[f];
                }
            }
        }
    }
    r = weigh(r, w);
    if (want) {
        *grads = std::move(local);
    }
    return r;
}

} // namespace lipfit
