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

#include "lipfit/encoders/toy_extractor.hpp"

#include "lipfit/core/error.hpp"
#include "lipfit/core/rng.hpp"

#include <cmath>

namespace lipfit {

namespace {

void relu_inplace(Tensor3& t) {
    for (double& v : t.data) {
        v = v > 0.0 ? v : 0.0;
    }
}

// Zeroes gradient entries where the forward activation was clipped.
void relu_mask(Tensor3& grad, const Tensor3& activation) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(activation.data[i] > 0.0)) {
            grad.data[i] = 0.0;
        }
    }
}

std::vector<double> he_normal(Rng& rng, std::size_t n, int fan_in) {
    std::vector<double> w(n);
    const double sd = std::sqrt(2.0 / fan_in);
    for (double& x : w) {
        x = sd * rng.normal();
    }
    return w;
}

} // namespace

ToyExtractorConfig lip_extractor_config() {
    ToyExtractorConfig c;
    c.name = "toy-lip";
    c.channels = 1;
    c.size = 96;
    c.hidden = 8;
    c.feature_dim = 24;
    c.seed = 0x11f;
    c.zero_mean_filters = true;
    c.bias_scale = 0.01;
    c.bias2_offset = 0.005;
    return c;
}

ToyExtractorConfig emotion_extractor_config() {
    ToyExtractorConfig c;
    c.name = "toy-emotion";
    c.channels = 3;
    c.size = 64;
    c.hidden = 8;
    c.feature_dim = 16;
    c.seed = 0xe40;
    c.zero_mean_filters = true;
    c.bias_scale = 0.01;
    c.bias2_offset = 0.005;
    return c;
}

ToyConvExtractor::ToyConvExtractor(const ToyExtractorConfig& config, TapPoint tap) : tap_(tap) {
    spec_ = {config.name, config.channels, config.size, config.size, config.feature_dim, true};
    conv1_ = {config.channels, config.hidden, config.kernel1, config.stride1};
    conv2_ = {config.hidden, config.feature_dim, config.kernel2, config.stride2};
    if (conv1_.out_extent(config.size) < config.kernel2 || config.feature_dim < 1) {
        throw ParameterError("toy extractor: input too small for the configured layers");
    }
    Rng rng(config.seed);
    w1_ = he_normal(rng, conv1_.weight_count(), config.channels * config.kernel1 * config.kernel1);
    if (config.zero_mean_filters) {
        const auto taps = static_cast<std::size_t>(config.channels * config.kernel1 * config.kernel1);
        for (std::size_t f = 0; f < w1_.size(); f += taps) {
            double mean = 0.0;
            for (std::size_t i = 0; i < taps; ++i) {
                mean += w1_[f + i];
            }
            mean /= static_cast<double>(taps);
            for (std::size_t i = 0; i < taps; ++i) {
                w1_[f + i] -= mean;
            }
        }
    }
    b1_.resize(static_cast<std::size_t>(config.hidden));
    for (double& b : b1_) {
        b = config.bias_scale * rng.normal();
    }
    w2_ = he_normal(rng, conv2_.weight_count(), config.hidden * config.kernel2 * config.kernel2);
    b2_.resize(static_cast<std::size_t>(config.feature_dim));
    for (double& b : b2_) {
        b = config.bias_scale * rng.normal() + config.bias2_offset;
    }
    const int d = config.feature_dim;
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    ctx_self_.resize(d, d);
    ctx_mean_.resize(d, d);
    for (Eigen::Index i = 0; i < ctx_self_.size(); ++i) {
        ctx_self_.data()[i] = sd * rng.normal();
    }
    for (Eigen::Index i = 0; i < ctx_mean_.size(); ++i) {
        ctx_mean_.data()[i] = sd * rng.normal();
    }
    ctx_bias_ = Eigen::VectorXd::Zero(d);
}

void ToyConvExtractor::check_inputs(const std::vector<Tensor3>& images) const {
    if (images.empty()) {
        throw ParameterError(spec_.name + ": empty image sequence");
    }
    for (const auto& im : images) {
        if (im.channels != spec_.channels || im.height != spec_.height || im.width != spec_.width) {
            throw ParameterError(spec_.name + ": expected " + std::to_string(spec_.channels) + "x" +
                                 std::to_string(spec_.height) + "x" + std::to_string(spec_.width) + " input, got " +
                                 std::to_string(im.channels) + "x" + std::to_string(im.height) + "x" +
                                 std::to_string(im.width));
        }
    }
}

Eigen::VectorXd ToyConvExtractor::trunk(const Tensor3& image) const {
    Tensor3 h1 = kernels::conv2d_forward(image, w1_, b1_, conv1_);
    relu_inplace(h1);
    Tensor3 h2 = kernels::conv2d_forward(h1, w2_, b2_, conv2_);
    relu_inplace(h2);
    Eigen::VectorXd f(h2.channels);
    for (int c = 0; c < h2.channels; ++c) {
        double s = 0.0;
        for (double v : h2.channel(c)) {
            s += v;
        }
        f[c] = s / static_cast<double>(h2.plane());
    }
    return f;
}

FeatureSequence ToyConvExtractor::extract(const std::vector<Tensor3>& images) const {
    check_inputs(images);
    const auto k = static_cast<Eigen::Index>(images.size());
    FeatureSequence out;
    out.tap = tap_;
    out.values.resize(k, spec_.feature_dim);
    for (Eigen::Index i = 0; i < k; ++i) {
        out.values.row(i) = trunk(images[static_cast<std::size_t>(i)]).transpose();
    }
    if (tap_ == TapPoint::Contextual) {
        const Eigen::RowVectorXd mean = out.values.colwise().mean();
        const Eigen::RowVectorXd shared = (ctx_mean_ * mean.transpose() + ctx_bias_).transpose();
        Eigen::MatrixXd z = out.values * ctx_self_.transpose();
        z.rowwise() += shared;
        out.values = z.array().tanh().matrix();
    }
    out.validate();
    return out;
}

std::vector<Tensor3> ToyConvExtractor::backward(const std::vector<Tensor3>& images,
                                                const Eigen::MatrixXd& grad_features) const {
    check_inputs(images);
    const auto k = static_cast<Eigen::Index>(images.size());
    if (grad_features.rows() != k || grad_features.cols() != spec_.feature_dim) {
        throw ParameterError(spec_.name + ": feature gradient has the wrong shape");
    }
    Eigen::MatrixXd grad_trunk = grad_features;
    if (tap_ == TapPoint::Contextual) {
        Eigen::MatrixXd f(k, spec_.feature_dim);
        for (Eigen::Index i = 0; i < k; ++i) {
            f.row(i) = trunk(images[static_cast<std::size_t>(i)]).transpose();
        }
        const Eigen::RowVectorXd mean = f.colwise().mean();
        Eigen::MatrixXd z = f * ctx_self_.transpose();
        z.rowwise() += (ctx_mean_ * mean.transpose() + ctx_bias_).transpose();
        const Eigen::MatrixXd y = z.array().tanh().matrix();
        const Eigen::MatrixXd gz = (grad_features.array() * (1.0 - y.array().square())).matrix();
        const Eigen::RowVectorXd gz_sum = gz.colwise().sum();
        grad_trunk = gz * ctx_self_;
        grad_trunk.rowwise() += (gz_sum * ctx_mean_) / static_cast<double>(k);
    }

    std::vector<Tensor3> grads;
    grads.reserve(images.size());
    for (Eigen::Index i = 0; i < k; ++i) {
        const Tensor3& image = images[static_cast<std::size_t>(i)];
        Tensor3 h1 = kernels::conv2d_forward(image, w1_, b1_, conv1_);
        relu_inplace(h1);
        Tensor3 h2 = kernels::conv2d_forward(h1, w2_, b2_, conv2_);
        relu_inplace(h2);
        Tensor3 g2(h2.channels, h2.height, h2.width);
        const double inv = 1.0 / static_cast<double>(h2.plane());
        for (int c = 0; c < h2.channels; ++c) {
            const double g = grad_trunk(i, c) * inv;
            for (double& v : g2.channel(c)) {
                v = g;
            }
        }
        relu_mask(g2, h2);
        Tensor3 g1 = kernels::conv2d_backward_input(g2, w2_, conv2_, h1.height, h1.width);
        relu_mask(g1, h1);
        grads.push_back(kernels::conv2d_backward_input(g1, w1_, conv1_, image.height, image.width));
    }
    return grads;
}

std::uint64_t ToyConvExtractor::fingerprint() const {
    std::uint64_t h = fingerprint_values(w1_.data(), w1_.size());
    h = fingerprint_values(b1_.data(), b1_.size(), h);
    h = fingerprint_values(w2_.data(), w2_.size(), h);
    h = fingerprint_values(b2_.data(), b2_.size(), h);
    h = fingerprint_values(ctx_self_.data(), static_cast<std::size_t>(ctx_self_.size()), h);
    h = fingerprint_values(ctx_mean_.data(), static_cast<std::size_t>(ctx_mean_.size()), h);
    return fingerprint_values(ctx_bias_.data(), static_cast<std::size_t>(ctx_bias_.size()), h);
}

std::unique_ptr<FeatureExtractor> make_lip_extractor(TapPoint tap) {
    return std::make_unique<ToyConvExtractor>(lip_extractor_config(), tap);
}

std::unique_ptr<FeatureExtractor> make_emotion_extractor(TapPoint tap) {
    return std::make_unique<ToyConvExtractor>(emotion_extractor_config(), tap);
}

} // namespace lipfit
