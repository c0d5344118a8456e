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
#include "lipfit/core/rng.hpp"
#include "lipfit/encoders/perceptual_encoder.hpp"
#include "lipfit/losses/losses.hpp"
#include "lipfit/training/adam.hpp"
#include "lipfit/training/dataset.hpp"
#include "lipfit/training/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

namespace lipfit {

struct TrainConfig {
    int window = 20;                     ///< K, frames per sequence
    int batch_size = 1;                  ///< sequences per forward pass
    int accumulation = 1;                ///< forward passes averaged into one update
    double base_lr = 5e-5;
    long long lr_drop_iteration = 50000;
    double lr_drop_factor = 5.0;
    long long max_iterations = 1000;
    std::uint64_t seed = 0;
    /// Encoder output is added to the coarse expression and jaw pose instead of replacing them.
    bool residual = true;
    TapPoint tap = TapPoint::Trunk;
    LossWeights weights;
    PipelineOptions pipeline;
    PerceptualEncoderConfig encoder;
    AdamConfig adam;

    /// Throws ParameterError when a field is out of range.
    void validate() const;
    /// Keys train.*, crop.*, encoder.*, features.tap_point and loss.*.
    void write(KeyValueConfig& config) const;
    /// Missing keys keep the defaults; the result is validated.
    static TrainConfig read(const KeyValueConfig& config);
};

/// base_lr before lr_drop_iteration, base_lr / lr_drop_factor from then on.
double lr_at(long long iteration, const TrainConfig& config);

void write_encoder_config(KeyValueConfig& config, const PerceptualEncoderConfig& encoder);
PerceptualEncoderConfig read_encoder_config(const KeyValueConfig& config, const PerceptualEncoderConfig& base = {});

/// Fingerprints of the networks that must stay fixed during training.
struct FrozenFingerprints {
    std::uint64_t coarse = 0;
    std::uint64_t lip = 0;
    std::uint64_t emotion = 0;

    bool operator==(const FrozenFingerprints&) const = default;
};

FrozenFingerprints fingerprint_frozen(const Pipeline& pipeline);

/**
 * Training state on disk: archive kind "checkpoint", version 1. Arrays
 * encoder_weights, adam_m, adam_v; meta holds the iteration, Adam step count,
 * RNG state, frozen-network fingerprints and the full run config.
 */
struct Checkpoint {
    static constexpr int kVersion = 1;

    Eigen::VectorXd encoder_weights;
    Eigen::VectorXd adam_m;
    Eigen::VectorXd adam_v;
    long long adam_steps = 0;
    long long iteration = 0;
    std::string rng_state;
    FrozenFingerprints frozen;
    std::string config; ///< KeyValueConfig text

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);
};

/// Encoder with the architecture recorded in a checkpoint and its weights.
PerceptualEncoder load_encoder(const Checkpoint& checkpoint);

/// Appends one JSON object per line and flushes after each row.
class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path, bool append = false);
    void write(const nlohmann::json& row);

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

/// One Adam update of the perceptual encoder.
struct StepResult {
    LossReport report; ///< mean over the windows of the update
    double lr = 0.0;
    long long iteration = 0; ///< index of this update (0-based)
    std::vector<std::string> clips;
    std::vector<int> starts;

    [[nodiscard]] nlohmann::json to_json() const;
};

/**
 * Trains the perceptual encoder against a fixed pipeline. Only the encoder
 * weights change; the coarse estimator and feature networks are reached
 * through const references.
 */
class Trainer {
public:
    Trainer(const Pipeline& pipeline, PerceptualEncoder& encoder, TrainConfig config);

    [[nodiscard]] const TrainConfig& config() const { return config_; }
    [[nodiscard]] long long iteration() const { return iteration_; }
    [[nodiscard]] const Adam& optimizer() const { return adam_; }
    [[nodiscard]] Rng& rng() { return rng_; }

    /// Encoder prediction composed with the coarse estimate (K x 50, K x 3).
    void predict(const WindowTargets& targets, Eigen::MatrixXd& psi, Eigen::MatrixXd& jaw,
                 PerceptualEncoder::Trace* trace = nullptr) const;

    /**
     * Forward, backward and one Adam step over the given windows (gradients
     * averaged). A non-finite loss or gradient throws NumericalError naming
     * the component and leaves the weights untouched.
     */
    StepResult train_step(const std::vector<WindowTargets>& windows);
    StepResult train_step(const WindowTargets& window);

    /// Draws batch_size * accumulation windows from the eligible clips.
    [[nodiscard]] std::vector<Window> sample_batch(const std::vector<ClipRecord>& clips);

    /// Runs until `iterations` updates have been made in total (not additional ones).
    void run(const std::vector<ClipRecord>& clips, long long iterations,
             const std::function<void(const StepResult&)>& on_step = {});

    [[nodiscard]] Checkpoint checkpoint(const KeyValueConfig& run_config = {}) const;
    /// Restores encoder weights, optimizer, iteration and RNG. DataError when the
    /// architecture or the frozen networks differ.
    void restore(const Checkpoint& checkpoint);

private:
    const Pipeline& pipeline_;
    PerceptualEncoder& encoder_;
    TrainConfig config_;
    Adam adam_;
    Rng rng_;
    long long iteration_ = 0;
};

} // namespace lipfit
