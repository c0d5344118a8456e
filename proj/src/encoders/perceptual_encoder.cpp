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

#include "lipfit/encoders/perceptual_encoder.hpp"

#include "lipfit/core/error.hpp"
#include "lipfit/core/image_ops.hpp"
#include "lipfit/core/rng.hpp"
#include "lipfit/encoders/features.hpp"
#include "lipfit/face_model/params.hpp"

#include <cmath>

namespace lipfit {

namespace {

constexpr int kHeadOutputs = kExpressionDim + kPoseDim;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void relu_inplace(Tensor3& t) {
    for (double& v : t.data) {
        v = v > 0.0 ? v : 0.0;
    }
}

void relu_mask(Tensor3& grad, const Tensor3& activation) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(activation.data[i] > 0.0)) {
            grad.data[i] = 0.0;
        }
    }
}

} // namespace

PerceptualEncoder::PerceptualEncoder(const PerceptualEncoderConfig& config) : config_(config) {
    if (config.temporal_kernel < 1 || config.temporal_kernel % 2 == 0) {
        throw ParameterError("perceptual encoder: temporal kernel must be a positive odd number");
    }
    if (config.input_size < 8 || config.conv1_channels < 1 || config.conv2_channels < 1 || config.embedding < 1) {
        throw ParameterError("perceptual encoder: invalid layer sizes");
    }
    conv1_ = {3, config.conv1_channels, 3, 2};
    conv2_ = {config.conv1_channels, config.conv2_channels, 3, 2};
    std::size_t offset = 0;
    auto take = [&offset](std::size_t n) {
        const Block b{offset, n};
        offset += n;
        return b;
    };
    const auto c2 = static_cast<std::size_t>(config.conv2_channels);
    const auto e = static_cast<std::size_t>(config.embedding);
    const auto t = static_cast<std::size_t>(config.temporal_kernel);
    w1_ = take(conv1_.weight_count());
    b1_ = take(static_cast<std::size_t>(config.conv1_channels));
    w2_ = take(conv2_.weight_count());
    b2_ = take(c2);
    fc_w_ = take(e * c2);
    fc_b_ = take(e);
    tc_w_ = take(e * e * t);
    tc_b_ = take(e);
    head_w_ = take(kHeadOutputs * e);
    head_b_ = take(kHeadOutputs);
    weights_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));

    Rng rng(config.seed);
    auto fill = [&](const Block& b, int fan_in) {
        const double sd = std::sqrt(2.0 / fan_in);
        for (std::size_t i = 0; i < b.count; ++i) {
            weights_[static_cast<Eigen::Index>(b.offset + i)] = sd * rng.normal();
        }
    };
    fill(w1_, 3 * 9);
    fill(w2_, config.conv1_channels * 9);
    fill(fc_w_, config.conv2_channels);
    fill(tc_w_, config.embedding * config.temporal_kernel);
    if (!config.zero_head) {
        for (std::size_t i = 0; i < head_w_.count; ++i) {
            weights_[static_cast<Eigen::Index>(head_w_.offset + i)] = 1e-3 * rng.normal();
        }
    }
}

void PerceptualEncoder::set_weights(const Eigen::VectorXd& w) {
    if (w.size() != weights_.size()) {
        throw ParameterError("perceptual encoder: expected " + std::to_string(weights_.size()) + " weights, got " +
                             std::to_string(w.size()));
    }
    weights_ = w;
}

EncoderOutput PerceptualEncoder::forward(const std::vector<Tensor3>& frames, Trace* trace) const {
    if (frames.empty()) {
        throw ParameterError("perceptual encoder: empty frame sequence");
    }
    const auto k = static_cast<Eigen::Index>(frames.size());
    const int e = config_.embedding;
    const int half = config_.temporal_kernel / 2;
    Trace local;
    Trace& tr = trace != nullptr ? *trace : local;
    tr.inputs.clear();
    tr.h1.clear();
    tr.h2.clear();
    tr.pooled.resize(k, config_.conv2_channels);
    for (Eigen::Index i = 0; i < k; ++i) {
        const Tensor3& f = frames[static_cast<std::size_t>(i)];
        if (f.channels != 3) {
            throw ParameterError("perceptual encoder: frames must be RGB");
        }
        Tensor3 x = (f.height == config_.input_size && f.width == config_.input_size)
                        ? f
                        : resize(f, config_.input_size, config_.input_size);
        Tensor3 h1 = kernels::conv2d_forward(x, view(w1_), view(b1_), conv1_);
        relu_inplace(h1);
        Tensor3 h2 = kernels::conv2d_forward(h1, view(w2_), view(b2_), conv2_);
        relu_inplace(h2);
        for (int c = 0; c < h2.channels; ++c) {
            double s = 0.0;
            for (double v : h2.channel(c)) {
                s += v;
            }
            tr.pooled(i, c) = s / static_cast<double>(h2.plane());
        }
        tr.inputs.push_back(std::move(x));
        tr.h1.push_back(std::move(h1));
        tr.h2.push_back(std::move(h2));
    }

    const Eigen::Map<const RowMatrix> fc_w(weights_.data() + fc_w_.offset, e, config_.conv2_channels);
    const Eigen::Map<const Eigen::RowVectorXd> fc_b(weights_.data() + fc_b_.offset, e);
    tr.hidden = ((tr.pooled * fc_w.transpose()).rowwise() + fc_b).cwiseMax(0.0);

    // Temporal weights laid out [out][in][tap].
    const double* tw = weights_.data() + tc_w_.offset;
    const double* tb = weights_.data() + tc_b_.offset;
    tr.temporal.resize(k, e);
    for (Eigen::Index t = 0; t < k; ++t) {
        for (int o = 0; o < e; ++o) {
            double s = tb[o];
            for (int d = -half; d <= half; ++d) {
                const Eigen::Index src = t + d;
                if (src < 0 || src >= k) {
                    continue;
                }
                for (int in = 0; in < e; ++in) {
                    s += tw[(static_cast<std::size_t>(o) * e + in) * config_.temporal_kernel + (d + half)] *
                         tr.hidden(src, in);
                }
            }
            tr.temporal(t, o) = s > 0.0 ? s : 0.0;
        }
    }

    const Eigen::Map<const RowMatrix> head_w(weights_.data() + head_w_.offset, kHeadOutputs, e);
    const Eigen::Map<const Eigen::RowVectorXd> head_b(weights_.data() + head_b_.offset, kHeadOutputs);
    const Eigen::MatrixXd out = (tr.temporal * head_w.transpose()).rowwise() + head_b;
    if (!out.allFinite()) {
        throw NumericalError("perceptual encoder produced non-finite parameters");
    }
    return {out.leftCols(kExpressionDim), out.rightCols(kPoseDim)};
}

Eigen::VectorXd PerceptualEncoder::backward(const Trace& tr, const Eigen::MatrixXd& grad_expression,
                                            const Eigen::MatrixXd& grad_jaw) const {
    const auto k = tr.hidden.rows();
    if (grad_expression.rows() != k || grad_jaw.rows() != k || grad_expression.cols() != kExpressionDim ||
        grad_jaw.cols() != kPoseDim) {
        throw ParameterError("perceptual encoder backward: gradient shape mismatch");
    }
    const int e = config_.embedding;
    const int half = config_.temporal_kernel / 2;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(weights_.size());
    Eigen::MatrixXd g_out(k, kHeadOutputs);
    g_out << grad_expression, grad_jaw;

    // Head.
    const Eigen::Map<const RowMatrix> head_w(weights_.data() + head_w_.offset, kHeadOutputs, e);
    Eigen::Map<RowMatrix>(grad.data() + head_w_.offset, kHeadOutputs, e) = g_out.transpose() * tr.temporal;
    Eigen::Map<Eigen::RowVectorXd>(grad.data() + head_b_.offset, kHeadOutputs) = g_out.colwise().sum();
    Eigen::MatrixXd g_temporal = g_out * head_w;
    g_temporal = (tr.temporal.array() > 0.0).select(g_temporal, 0.0);

    // Temporal convolution.
    const double* tw = weights_.data() + tc_w_.offset;
    double* gtw = grad.data() + tc_w_.offset;
    double* gtb = grad.data() + tc_b_.offset;
    Eigen::MatrixXd g_hidden = Eigen::MatrixXd::Zero(k, e);
    for (Eigen::Index t = 0; t < k; ++t) {
        for (int o = 0; o < e; ++o) {
            const double g = g_temporal(t, o);
            if (g == 0.0) {
                continue;
            }
            gtb[o] += g;
            for (int d = -half; d <= half; ++d) {
                const Eigen::Index src = t + d;
                if (src < 0 || src >= k) {
                    continue;
                }
                for (int in = 0; in < e; ++in) {
                    const std::size_t idx = (static_cast<std::size_t>(o) * e + in) * config_.temporal_kernel + (d + half);
                    gtw[idx] += g * tr.hidden(src, in);
                    g_hidden(src, in) += g * tw[idx];
                }
            }
        }
    }
    g_hidden = (tr.hidden.array() > 0.0).select(g_hidden, 0.0);

    // Fully connected.
    const Eigen::Map<const RowMatrix> fc_w(weights_.data() + fc_w_.offset, e, config_.conv2_channels);
    Eigen::Map<RowMatrix>(grad.data() + fc_w_.offset, e, config_.conv2_channels) = g_hidden.transpose() * tr.pooled;
    Eigen::Map<Eigen::RowVectorXd>(grad.data() + fc_b_.offset, e) = g_hidden.colwise().sum();
    const Eigen::MatrixXd g_pooled = g_hidden * fc_w;

    // Per-frame CNN.
    std::span<double> gw1(grad.data() + w1_.offset, w1_.count), gb1(grad.data() + b1_.offset, b1_.count);
    std::span<double> gw2(grad.data() + w2_.offset, w2_.count), gb2(grad.data() + b2_.offset, b2_.count);
    for (Eigen::Index i = 0; i < k; ++i) {
        const Tensor3& h2 = tr.h2[static_cast<std::size_t>(i)];
        const Tensor3& h1 = tr.h1[static_cast<std::size_t>(i)];
        Tensor3 g2(h2.channels, h2.height, h2.width);
        const double inv = 1.0 / static_cast<double>(h2.plane());
        for (int c = 0; c < h2.channels; ++c) {
            const double g = g_pooled(i, c) * inv;
            for (double& v : g2.channel(c)) {
                v = g;
            }
        }
        relu_mask(g2, h2);
        kernels::conv2d_backward_params(h1, g2, conv2_, gw2, gb2);
        Tensor3 g1 = kernels::conv2d_backward_input(g2, view(w2_), conv2_, h1.height, h1.width);
        relu_mask(g1, h1);
        kernels::conv2d_backward_params(tr.inputs[static_cast<std::size_t>(i)], g1, conv1_, gw1, gb1);
    }
    return grad;
}

std::uint64_t PerceptualEncoder::fingerprint() const {
    return fingerprint_values(weights_.data(), static_cast<std::size_t>(weights_.size()));
}

} // namespace lipfit
