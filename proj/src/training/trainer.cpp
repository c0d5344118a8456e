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

#include "lipfit/training/trainer.hpp"

#include "lipfit/core/archive.hpp"
#include "lipfit/core/error.hpp"

#include <cmath>

namespace lipfit {

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

LossReport mean_report(const std::vector<LossReport>& rows) {
    LossReport m;
    for (const LossReport& r : rows) {
        m.lipread += r.lipread;
        m.expression += r.expression;
        m.psi += r.psi;
        m.jaw += r.jaw;
        m.landmarks += r.landmarks;
        m.mouth += r.mouth;
        m.lambda_psi += r.lambda_psi;
        m.total += r.total;
    }
    const auto n = static_cast<double>(rows.size());
    m.lipread /= n;
    m.expression /= n;
    m.psi /= n;
    m.jaw /= n;
    m.landmarks /= n;
    m.mouth /= n;
    m.lambda_psi /= n;
    m.total /= n;
    return m;
}

} // namespace

void TrainConfig::validate() const {
    if (window < 1 || batch_size < 1 || accumulation < 1) {
        throw ParameterError("train: window, batch_size and accumulation must be at least 1");
    }
    if (!(base_lr > 0.0) || !std::isfinite(base_lr)) {
        throw ParameterError("train: base_lr must be positive");
    }
    if (!(lr_drop_factor > 1.0) || lr_drop_iteration < 0) {
        throw ParameterError("train: lr_drop_factor must exceed 1 and lr_drop_iteration be non-negative");
    }
    if (max_iterations < 0) {
        throw ParameterError("train: max_iterations must be non-negative");
    }
    weights.validate();
}

void write_encoder_config(KeyValueConfig& c, const PerceptualEncoderConfig& e) {
    c.set_int("encoder.input_size", e.input_size);
    c.set_int("encoder.conv1_channels", e.conv1_channels);
    c.set_int("encoder.conv2_channels", e.conv2_channels);
    c.set_int("encoder.embedding", e.embedding);
    c.set_int("encoder.temporal_kernel", e.temporal_kernel);
    c.set_bool("encoder.zero_head", e.zero_head);
    c.set("encoder.seed", std::to_string(e.seed));
}

PerceptualEncoderConfig read_encoder_config(const KeyValueConfig& c, const PerceptualEncoderConfig& base) {
    PerceptualEncoderConfig e = base;
    e.input_size = static_cast<int>(c.get_int("encoder.input_size", e.input_size));
    e.conv1_channels = static_cast<int>(c.get_int("encoder.conv1_channels", e.conv1_channels));
    e.conv2_channels = static_cast<int>(c.get_int("encoder.conv2_channels", e.conv2_channels));
    e.embedding = static_cast<int>(c.get_int("encoder.embedding", e.embedding));
    e.temporal_kernel = static_cast<int>(c.get_int("encoder.temporal_kernel", e.temporal_kernel));
    e.zero_head = c.get_bool("encoder.zero_head", e.zero_head);
    e.seed = static_cast<std::uint64_t>(c.get_int("encoder.seed", static_cast<long long>(e.seed)));
    return e;
}

void TrainConfig::write(KeyValueConfig& c) const {
    c.set_int("train.window", window);
    c.set_int("train.batch_size", batch_size);
    c.set_int("train.accumulation", accumulation);
    c.set_double("train.base_lr", base_lr);
    c.set_int("train.lr_drop_iteration", lr_drop_iteration);
    c.set_double("train.lr_drop_factor", lr_drop_factor);
    c.set_int("train.max_iterations", max_iterations);
    c.set("train.seed", std::to_string(seed));
    c.set_bool("train.residual", residual);
    c.set_double("train.adam_beta1", adam.beta1);
    c.set_double("train.adam_beta2", adam.beta2);
    c.set_double("train.adam_epsilon", adam.epsilon);
    c.set_int("crop.image_size", pipeline.image_size);
    c.set_double("crop.scale", pipeline.crop_scale);
    c.set_bool("crop.per_sequence", pipeline.sequence_crop);
    c.set("features.tap_point", to_string(tap));
    write_encoder_config(c, encoder);
    weights.write(c);
}

TrainConfig TrainConfig::read(const KeyValueConfig& c) {
    TrainConfig t;
    t.window = static_cast<int>(c.get_int("train.window", t.window));
    t.batch_size = static_cast<int>(c.get_int("train.batch_size", t.batch_size));
    t.accumulation = static_cast<int>(c.get_int("train.accumulation", t.accumulation));
    t.base_lr = c.get_double("train.base_lr", t.base_lr);
    t.lr_drop_iteration = c.get_int("train.lr_drop_iteration", t.lr_drop_iteration);
    t.lr_drop_factor = c.get_double("train.lr_drop_factor", t.lr_drop_factor);
    t.max_iterations = c.get_int("train.max_iterations", t.max_iterations);
    t.seed = static_cast<std::uint64_t>(c.get_int("train.seed", static_cast<long long>(t.seed)));
    t.residual = c.get_bool("train.residual", t.residual);
    t.adam.beta1 = c.get_double("train.adam_beta1", t.adam.beta1);
    t.adam.beta2 = c.get_double("train.adam_beta2", t.adam.beta2);
    t.adam.epsilon = c.get_double("train.adam_epsilon", t.adam.epsilon);
    t.pipeline.image_size = static_cast<int>(c.get_int("crop.image_size", t.pipeline.image_size));
    t.pipeline.crop_scale = c.get_double("crop.scale", t.pipeline.crop_scale);
    t.pipeline.sequence_crop = c.get_bool("crop.per_sequence", t.pipeline.sequence_crop);
    t.tap = parse_tap_point(c.get_string("features.tap_point", to_string(t.tap)));
    t.encoder = read_encoder_config(c, t.encoder);
    t.weights = LossWeights::read(c, LossWeights::preset(c.get_string("loss.preset", "train")));
    t.validate();
    return t;
}

double lr_at(long long iteration, const TrainConfig& config) {
    return iteration < config.lr_drop_iteration ? config.base_lr : config.base_lr / config.lr_drop_factor;
}

FrozenFingerprints fingerprint_frozen(const Pipeline& p) {
    return {p.coarse_estimator().fingerprint(), p.lip_extractor().fingerprint(), p.emotion_extractor().fingerprint()};
}

void Checkpoint::save(const std::filesystem::path& path) const {
    Archive a("checkpoint", kVersion);
    a.meta()["iteration"] = iteration;
    a.meta()["adam_steps"] = adam_steps;
    a.meta()["rng_state"] = rng_state;
    a.meta()["frozen"] = {{"coarse", frozen.coarse}, {"lip", frozen.lip}, {"emotion", frozen.emotion}};
    a.meta()["config"] = config;
    a.put("encoder_weights", {encoder_weights.size()}, to_std(encoder_weights));
    a.put("adam_m", {adam_m.size()}, to_std(adam_m));
    a.put("adam_v", {adam_v.size()}, to_std(adam_v));
    a.save(path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    const Archive a = Archive::load(path, "checkpoint");
    if (a.version() != kVersion) {
        throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(a.version()));
    }
    Checkpoint c;
    try {
        const nlohmann::json& m = a.meta();
        c.iteration = m.at("iteration").get<long long>();
        c.adam_steps = m.at("adam_steps").get<long long>();
        c.rng_state = m.at("rng_state").get<std::string>();
        c.frozen = {m.at("frozen").at("coarse").get<std::uint64_t>(), m.at("frozen").at("lip").get<std::uint64_t>(),
                    m.at("frozen").at("emotion").get<std::uint64_t>()};
        c.config = m.at("config").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": malformed checkpoint header: " + e.what());
    }
    c.encoder_weights = to_eigen(a.f64("encoder_weights").values);
    c.adam_m = to_eigen(a.f64("adam_m").values);
    c.adam_v = to_eigen(a.f64("adam_v").values);
    return c;
}

PerceptualEncoder load_encoder(const Checkpoint& checkpoint) {
    const KeyValueConfig cfg = KeyValueConfig::parse(checkpoint.config, "checkpoint config");
    PerceptualEncoder enc(read_encoder_config(cfg));
    if (static_cast<Eigen::Index>(enc.parameter_count()) != checkpoint.encoder_weights.size()) {
        throw DataError("checkpoint weights do not match the recorded encoder architecture");
    }
    enc.set_weights(checkpoint.encoder_weights);
    return enc;
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc), path_(path) {
    if (!out_) {
        throw DataError("cannot open log " + path.string());
    }
}

void JsonlWriter::write(const nlohmann::json& row) {
    out_ << row.dump() << '\n';
    out_.flush();
    if (!out_) {
        throw DataError("failed writing " + path_.string());
    }
}

nlohmann::json StepResult::to_json() const {
    nlohmann::json j = report.to_json(iteration);
    j["lr"] = lr;
    j["clips"] = clips;
    j["starts"] = starts;
    return j;
}

Trainer::Trainer(const Pipeline& pipeline, PerceptualEncoder& encoder, TrainConfig config)
    : pipeline_(pipeline), encoder_(encoder), config_(std::move(config)), adam_(config_.adam), rng_(config_.seed) {
    config_.validate();
}

void Trainer::predict(const WindowTargets& targets, Eigen::MatrixXd& psi, Eigen::MatrixXd& jaw,
                      PerceptualEncoder::Trace* trace) const {
    const EncoderOutput out = encoder_.forward(targets.frames, trace);
    psi = out.expression;
    jaw = out.jaw;
    if (config_.residual) {
        psi += targets.coarse.expression();
        jaw += targets.coarse.jaw();
    }
}

StepResult Trainer::train_step(const WindowTargets& window) { return train_step(std::vector<WindowTargets>{window}); }

StepResult Trainer::train_step(const std::vector<WindowTargets>& windows) {
    if (windows.empty()) {
        throw ParameterError("train_step: no windows");
    }
    StepResult result;
    result.iteration = iteration_;
    result.lr = lr_at(iteration_, config_);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(encoder_.parameter_count()));
    std::vector<LossReport> reports;
    for (const WindowTargets& w : windows) {
        PerceptualEncoder::Trace trace;
        Eigen::MatrixXd psi, jaw, g_psi, g_jaw;
        predict(w, psi, jaw, &trace);
        try {
            reports.push_back(pipeline_.evaluate(w, psi, jaw, config_.weights, &g_psi, &g_jaw));
        } catch (const NumericalError& e) {
            throw NumericalError("iteration " + std::to_string(iteration_) + ": " + e.what());
        }
        grad += encoder_.backward(trace, g_psi, g_jaw);
    }
    grad /= static_cast<double>(windows.size());
    if (!grad.allFinite()) {
        throw NumericalError("iteration " + std::to_string(iteration_) + ": non-finite encoder gradient");
    }
    Eigen::VectorXd weights = encoder_.weights();
    adam_.step(weights, grad, result.lr);
    encoder_.set_weights(weights);
    ++iteration_;
    result.report = mean_report(reports);
    return result;
}

std::vector<Window> Trainer::sample_batch(const std::vector<ClipRecord>& clips) {
    std::vector<const ClipRecord*> eligible;
    for (const ClipRecord& c : clips) {
        if (c.frame_count() >= config_.window) {
            eligible.push_back(&c);
        }
    }
    if (eligible.empty()) {
        throw DataError("no clip has at least " + std::to_string(config_.window) + " frames");
    }
    std::vector<Window> out;
    for (int i = 0; i < config_.batch_size * config_.accumulation; ++i) {
        const ClipRecord& clip = *eligible[static_cast<std::size_t>(
            rng_.uniform_int(0, static_cast<std::int64_t>(eligible.size()) - 1))];
        out.push_back(sample_window(clip, config_.window, rng_));
    }
    return out;
}

void Trainer::run(const std::vector<ClipRecord>& clips, long long iterations,
                  const std::function<void(const StepResult&)>& on_step) {
    while (iteration_ < iterations) {
        const std::vector<Window> batch = sample_batch(clips);
        std::vector<WindowTargets> targets;
        for (const Window& w : batch) {
            targets.push_back(pipeline_.prepare(w));
        }
        StepResult r = train_step(targets);
        for (const Window& w : batch) {
            r.clips.push_back(w.clip_id);
            r.starts.push_back(w.start);
        }
        if (on_step) {
            on_step(r);
        }
    }
}

Checkpoint Trainer::checkpoint(const KeyValueConfig& run_config) const {
    Checkpoint c;
    c.encoder_weights = encoder_.weights();
    c.adam_m = adam_.first_moment();
    c.adam_v = adam_.second_moment();
    c.adam_steps = adam_.steps();
    c.iteration = iteration_;
    c.rng_state = rng_.state();
    c.frozen = fingerprint_frozen(pipeline_);
    KeyValueConfig cfg = run_config;
    config_.write(cfg);
    c.config = cfg.to_string();
    return c;
}

void Trainer::restore(const Checkpoint& c) {
    if (c.encoder_weights.size() != static_cast<Eigen::Index>(encoder_.parameter_count())) {
        throw DataError("checkpoint encoder has " + std::to_string(c.encoder_weights.size()) +
                        " weights, this encoder has " + std::to_string(encoder_.parameter_count()));
    }
    if (!(c.frozen == fingerprint_frozen(pipeline_))) {
        throw DataError("checkpoint was trained against different frozen networks");
    }
    encoder_.set_weights(c.encoder_weights);
    adam_.restore(c.adam_m, c.adam_v, c.adam_steps);
    rng_.set_state(c.rng_state);
    iteration_ = c.iteration;
}

} // namespace lipfit
