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

#include "lipfit/core/error.hpp"
#include "lipfit/encoders/toy_extractor.hpp"
#include "lipfit/face_model/synthetic_model.hpp"
#include "lipfit/renderer/renderer.hpp"
#include "lipfit/training/direct_fit.hpp"
#include "lipfit/training/fixtures.hpp"
#include "lipfit/training/trainer.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace lipfit;
using lipfit::testing::TempDir;

namespace {

const MorphableModel& model() {
    static const MorphableModel m = make_synthetic_model();
    return m;
}

// Frozen networks plus a pipeline at the 64 px working size used by the fast tests.
struct Rig {
    LinearCoarseEstimator coarse;
    std::unique_ptr<FeatureExtractor> lip = make_lip_extractor();
    std::unique_ptr<FeatureExtractor> emotion = make_emotion_extractor();
    Pipeline pipeline;

    explicit Rig(int image_size = 64) : pipeline(model(), coarse, *lip, *emotion, {image_size, 1.5, false}) {}
};

Window synthetic_window(int frames, int image_size = 64, double noise = 0.3, std::uint64_t seed = 1) {
    SyntheticClipOptions o;
    o.frames = frames;
    o.image_size = image_size;
    o.landmark_noise = noise;
    o.seed = seed;
    const SyntheticClip clip = make_synthetic_clip(model(), o);
    Window w;
    w.clip_id = "synthetic";
    w.frames = clip.frames;
    w.landmarks = clip.landmarks;
    return w;
}

CoarseEstimate exact_estimate(const std::vector<FaceParams>& params) {
    CoarseEstimate c;
    c.frames = params;
    return c;
}

TrainConfig small_config() {
    TrainConfig c;
    c.window = 4;
    c.base_lr = 1e-3;
    c.seed = 11;
    c.pipeline.image_size = 64;
    c.encoder.zero_head = false;
    return c;
}

} // namespace

TEST_CASE("learning-rate schedule") {
    const TrainConfig c;
    CHECK(lr_at(0, c) == 5e-5);
    CHECK(lr_at(49999, c) == 5e-5);
    CHECK(lr_at(50000, c) == 1e-5);
    CHECK(lr_at(10'000'000, c) == 1e-5);
    TrainConfig d = c;
    d.lr_drop_iteration = 3;
    CHECK(lr_at(2, d) == 5e-5);
    CHECK(lr_at(3, d) == 1e-5);
}

TEST_CASE("train config defaults, validation and round trip") {
    const TrainConfig c;
    CHECK(c.window == 20);
    CHECK(c.batch_size == 1);
    CHECK(c.lr_drop_factor == 5.0);
    TrainConfig bad = c;
    bad.lr_drop_factor = 1.0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = c;
    bad.window = 0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);

    TrainConfig custom = small_config();
    custom.tap = TapPoint::Contextual;
    custom.pipeline.sequence_crop = true;
    custom.weights.mouth_loss = MouthLoss::Off;
    custom.base_lr = 1.0 / 3.0;
    KeyValueConfig kv;
    custom.write(kv);
    const TrainConfig back = TrainConfig::read(KeyValueConfig::parse(kv.to_string()));
    CHECK(back.window == 4);
    CHECK(back.base_lr == custom.base_lr);
    CHECK(back.tap == TapPoint::Contextual);
    CHECK(back.pipeline.sequence_crop);
    CHECK(back.weights.mouth_loss == MouthLoss::Off);
    CHECK(back.encoder.zero_head == false);
    CHECK(back.seed == 11);
}

TEST_CASE("adam update") {
    Adam adam;
    Eigen::VectorXd x(3), g(3);
    x << 1.0, -2.0, 0.5;
    g << 0.3, -4.0, 0.0;
    adam.step(x, g, 0.1);
    // First step: m_hat = g, v_hat = g^2, so each coordinate moves by lr * g / (|g| + eps).
    CHECK(x[0] == doctest::Approx(1.0 - 0.1 * 0.3 / (0.3 + 1e-8)).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(-2.0 + 0.1 * 4.0 / (4.0 + 1e-8)).epsilon(1e-14));
    CHECK(x[2] == 0.5);
    CHECK(adam.steps() == 1);
    CHECK_THROWS_AS(adam.step(x, Eigen::VectorXd::Zero(2), 0.1), ParameterError);
}

TEST_CASE("landmark files round trip and reject malformed content") {
    TempDir dir("landmarks");
    const Window w = synthetic_window(3);
    write_landmarks(dir.path() / "lm.txt", w.landmarks);
    const auto back = read_landmarks(dir.path() / "lm.txt");
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i] == w.landmarks[i]);
    }
    std::ofstream(dir.path() / "short.txt") << "1 2\n3 4\n";
    CHECK_THROWS_AS(read_landmarks(dir.path() / "short.txt"), DataError);
    std::ofstream(dir.path() / "text.txt") << "1 x\n";
    CHECK_THROWS_AS(read_landmarks(dir.path() / "text.txt"), DataError);
    CHECK_THROWS_AS(read_landmarks(dir.path() / "missing.txt"), DataError);
}

TEST_CASE("manifest loading") {
    TempDir dir("manifest");
    std::ofstream(dir.path() / "empty.txt") << "# nothing here\n\n";
    CHECK(load_manifest(dir.path() / "empty.txt").clips.empty());
    CHECK_THROWS_AS(load_manifest(dir.path() / "absent.txt"), DataError);

    SyntheticDatasetOptions opts;
    opts.frame_counts = {24, 30, 12};
    opts.clip.image_size = 64;
    opts.clip.fps = 30.0;
    const auto manifest = write_synthetic_dataset(dir.path() / "data", model(), opts);
    const Manifest m = load_manifest(manifest, 20);
    REQUIRE(m.clips.size() == 3);
    CHECK(m.rejected.empty());
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(m.clips[i].frame_count() == opts.frame_counts[i]);
        CHECK(m.clips[i].landmarks.size() == static_cast<std::size_t>(opts.frame_counts[i]));
        CHECK(m.clips[i].fps == 30.0);
        CHECK(m.clips[i].transcript.has_value());
    }
    CHECK(!m.clips[0].too_short);
    CHECK(m.clips[2].too_short);
    const SyntheticClip regenerated = [&] {
        SyntheticClipOptions o = opts.clip;
        o.frames = 24;
        return make_synthetic_clip(model(), o);
    }();
    CHECK(m.clips[0].landmarks[5] == regenerated.landmarks[5]);

    // A landmark file with one frame too few, a missing frame pattern and a bad fps.
    auto lm = read_landmarks(dir.path() / "data" / "clip_00" / "landmarks.txt");
    lm.pop_back();
    write_landmarks(dir.path() / "data" / "short_lm.txt", lm);
    std::ofstream(dir.path() / "data" / "bad.txt")
        << manifest_line("a", "clip_00/frames/%04d.png", "short_lm.txt", 25.0) << '\n'
        << manifest_line("b", "nowhere/%04d.png", "clip_00/landmarks.txt", 25.0) << '\n'
        << "c clip_00/frames/%04d.png clip_00/landmarks.txt fast\n"
        << manifest_line("d", "clip_00/frames/%04d.png", "clip_00/landmarks.txt", 25.0) << '\n';
    const Manifest bad = load_manifest(dir.path() / "data" / "bad.txt");
    REQUIRE(bad.clips.size() == 1);
    CHECK(bad.clips[0].id == "d");
    REQUIRE(bad.rejected.size() == 3);
    CHECK(bad.rejected[0].clip_id == "a");
    CHECK(bad.rejected[0].reason.find("does not match frame count") != std::string::npos);
    CHECK(bad.rejected[1].clip_id == "b");
    CHECK(bad.rejected[2].reason.find("fps") != std::string::npos);
}

TEST_CASE("window sampling") {
    TempDir dir("windows");
    SyntheticDatasetOptions opts;
    opts.frame_counts = {6, 5, 3};
    opts.clip.image_size = 32;
    opts.transcripts = false;
    const Manifest m = load_manifest(write_synthetic_dataset(dir.path(), model(), opts), 5);
    REQUIRE(m.clips.size() == 3);
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        CHECK(sample_window_start(m.clips[1], 5, rng) == 0);
    }
    int zeros = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const int s = sample_window_start(m.clips[0], 5, rng);
        CHECK((s == 0 || s == 1));
        zeros += s == 0 ? 1 : 0;
    }
    CHECK(std::abs(zeros / static_cast<double>(draws) - 0.5) <= 0.02);
    for (int i = 0; i < 5; ++i) {
        const Window w = sample_window(m.clips[0], 5, rng);
        REQUIRE(w.size() == 5);
        for (int k = 0; k < 5; ++k) {
            CHECK(w.frames[static_cast<std::size_t>(k)] == m.clips[0].frames->frame(w.start + k));
            CHECK(w.landmarks[static_cast<std::size_t>(k)] == m.clips[0].landmarks[static_cast<std::size_t>(w.start + k)]);
        }
    }
    CHECK_THROWS_AS(sample_window(m.clips[2], 5, rng), DataError);
}

TEST_CASE("pipeline gradient matches finite differences") {
    Rig rig;
    const Window w = synthetic_window(3);
    const WindowTargets t = rig.pipeline.prepare(w);
    Rng rng(3);
    Eigen::MatrixXd psi = t.coarse.expression(), jaw = t.coarse.jaw();
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        psi.data()[i] += 0.3 * rng.normal();
    }
    jaw.col(0).array() += 0.1;
    const LossWeights weights = LossWeights::training();
    Eigen::MatrixXd gp, gj;
    rig.pipeline.evaluate(t, psi, jaw, weights, &gp, &gj);
    Eigen::VectorXd analytic(10), numeric(10);
    for (int s = 0; s < 10; ++s) {
        const auto row = static_cast<Eigen::Index>(s % 3);
        const bool is_jaw = s >= 7;
        const auto col = static_cast<Eigen::Index>(is_jaw ? s - 7 : rng.uniform_int(0, 9));
        Eigen::MatrixXd& target = is_jaw ? jaw : psi;
        const double h = 1e-6;
        const double orig = target(row, col);
        target(row, col) = orig + h;
        const double fp = rig.pipeline.evaluate(t, psi, jaw, weights).total;
        target(row, col) = orig - h;
        const double fm = rig.pipeline.evaluate(t, psi, jaw, weights).total;
        target(row, col) = orig;
        numeric[s] = (fp - fm) / (2 * h);
        analytic[s] = is_jaw ? gj(row, col) : gp(row, col);
    }
    CHECK(lipfit::testing::relative_error(analytic, numeric) < 1e-4);
}

TEST_CASE("pipeline prepare resizes frames and scales landmarks") {
    Rig rig(64);
    const Window big = synthetic_window(2, 128, 0.0);
    const WindowTargets t = rig.pipeline.prepare(big);
    CHECK(t.frames[0].height == 64);
    const Points2 expect = to_pixels(to_normalized(big.landmarks[0], 128, 128), 64, 64);
    CHECK((t.landmarks[0] - expect).cwiseAbs().maxCoeff() < 1e-12);
    Window broken = big;
    broken.landmarks.pop_back();
    CHECK_THROWS_AS(static_cast<void>(rig.pipeline.prepare(broken)), ParameterError);
}

TEST_CASE("train_step: determinism, frozen networks and zero weights") {
    Rig rig;
    const WindowTargets t = rig.pipeline.prepare(synthetic_window(4));
    const FrozenFingerprints frozen = fingerprint_frozen(rig.pipeline);
    std::vector<std::vector<double>> totals(2);
    for (int run = 0; run < 2; ++run) {
        PerceptualEncoder enc(small_config().encoder);
        Trainer trainer(rig.pipeline, enc, small_config());
        for (int i = 0; i < 10; ++i) {
            totals[static_cast<std::size_t>(run)].push_back(trainer.train_step(t).report.total);
        }
    }
    CHECK(totals[0] == totals[1]);
    CHECK(fingerprint_frozen(rig.pipeline) == frozen);

    TrainConfig zero = small_config();
    zero.weights = LossWeights{0.0, 0.0, {0.0, 0.0, 40.0}, 0.0, 0.0, 0.0};
    PerceptualEncoder enc(zero.encoder);
    const Eigen::VectorXd before = enc.weights();
    Trainer trainer(rig.pipeline, enc, zero);
    const StepResult r = trainer.train_step(t);
    CHECK(r.report.total == 0.0);
    CHECK(enc.weights() == before);
    CHECK(trainer.iteration() == 1);
}

TEST_CASE("train_step reduces the loss on a fixed window") {
    Rig rig;
    const WindowTargets t = rig.pipeline.prepare(synthetic_window(4));
    PerceptualEncoder enc(small_config().encoder);
    Trainer trainer(rig.pipeline, enc, small_config());
    const double first = trainer.train_step(t).report.total;
    double last = first;
    for (int i = 1; i < 50; ++i) {
        last = trainer.train_step(t).report.total;
    }
    MESSAGE("total loss " << first << " -> " << last);
    CHECK(last < first);
}

TEST_CASE("train_step aborts on a non-finite loss and names the component") {
    Rig rig;
    WindowTargets t = rig.pipeline.prepare(synthetic_window(4));
    t.landmarks_normalized[1](3, 0) = std::nan("");
    PerceptualEncoder enc(small_config().encoder);
    const Eigen::VectorXd before = enc.weights();
    Trainer trainer(rig.pipeline, enc, small_config());
    try {
        static_cast<void>(trainer.train_step(t));
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("L_n") != std::string::npos);
    }
    CHECK(enc.weights() == before);
    CHECK(trainer.iteration() == 0);
}

TEST_CASE("regularizers alone pull the expression towards the coarse estimate monotonically") {
    Rig rig;
    const WindowTargets t = rig.pipeline.prepare(synthetic_window(4));
    TrainConfig c = small_config();
    c.residual = false;
    c.encoder.zero_head = true;
    c.weights = LossWeights{0.0, 0.0, {1e-3, 2e-3, 40.0}, 200.0, 0.0, 0.0};
    c.base_lr = 1e-4;
    PerceptualEncoder enc(c.encoder);
    Trainer trainer(rig.pipeline, enc, c);
    std::vector<double> psi;
    for (int i = 0; i < 40; ++i) {
        psi.push_back(trainer.train_step(t).report.psi);
    }
    CHECK(psi.back() < psi.front());
    for (std::size_t i = 11; i < psi.size(); ++i) {
        CHECK(psi[i] <= psi[i - 1]);
    }
}

TEST_CASE("gradient accumulation over identical windows matches a single window") {
    Rig rig;
    const WindowTargets t = rig.pipeline.prepare(synthetic_window(4));
    TrainConfig a = small_config();
    PerceptualEncoder e1(a.encoder), e2(a.encoder);
    Trainer t1(rig.pipeline, e1, a);
    a.accumulation = 2;
    Trainer t2(rig.pipeline, e2, a);
    static_cast<void>(t1.train_step(t));
    static_cast<void>(t2.train_step(std::vector<WindowTargets>{t, t}));
    CHECK((e1.weights() - e2.weights()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("checkpoints round trip and resume reproduces the loss trace") {
    TempDir dir("checkpoint");
    SyntheticDatasetOptions opts;
    opts.frame_counts = {6, 7};
    opts.clip.image_size = 64;
    opts.transcripts = false;
    const Manifest m = load_manifest(write_synthetic_dataset(dir.path(), model(), opts), 4);
    Rig rig;
    const TrainConfig c = small_config();

    std::vector<double> straight;
    PerceptualEncoder e1(c.encoder);
    Trainer t1(rig.pipeline, e1, c);
    t1.run(m.clips, 6, [&](const StepResult& r) { straight.push_back(r.report.total); });

    std::vector<double> resumed;
    PerceptualEncoder e2(c.encoder);
    Trainer t2(rig.pipeline, e2, c);
    t2.run(m.clips, 3, [&](const StepResult& r) { resumed.push_back(r.report.total); });
    t2.checkpoint().save(dir.path() / "ckpt.bin");

    const Checkpoint loaded = Checkpoint::load(dir.path() / "ckpt.bin");
    CHECK(loaded.iteration == 3);
    const PerceptualEncoder probe = load_encoder(loaded);
    const WindowTargets t = rig.pipeline.prepare(synthetic_window(4));
    const EncoderOutput a = probe.forward(t.frames), b = e2.forward(t.frames);
    CHECK(a.expression == b.expression);
    CHECK(a.jaw == b.jaw);

    PerceptualEncoder e3(c.encoder);
    Trainer t3(rig.pipeline, e3, c);
    t3.restore(loaded);
    t3.run(m.clips, 6, [&](const StepResult& r) { resumed.push_back(r.report.total); });
    CHECK(resumed == straight);
    CHECK(e3.weights() == e1.weights());

    Checkpoint tampered = loaded;
    tampered.frozen.lip ^= 1;
    CHECK_THROWS_AS(t3.restore(tampered), DataError);
}

TEST_CASE("fit_direct: zero lipread weight leaves the coarse estimate in place") {
    Rig rig;
    const WindowTargets t = rig.pipeline.prepare(synthetic_window(3));
    DirectFitOptions o;
    o.iterations = 30;
    o.weights.lipread = 0.0;
    const DirectFitResult r = fit_direct(rig.pipeline, t, o);
    CHECK((r.psi - t.coarse.expression()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((r.jaw - t.coarse.jaw()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(!r.diverged);
    CHECK(r.trace.size() == 31);
}

TEST_CASE("fit_direct: a self-consistent target keeps the lipread loss at zero") {
    Rig rig;
    SyntheticClipOptions o;
    o.frames = 3;
    o.image_size = 64;
    o.landmark_noise = 0.0;
    const SyntheticClip clip = make_synthetic_clip(model(), o);
    Window w;
    w.frames = clip.frames;
    w.landmarks = clip.landmarks;
    const WindowTargets t = rig.pipeline.prepare(w, exact_estimate(clip.params));
    DirectFitOptions fo;
    fo.iterations = 20;
    const DirectFitResult r = fit_direct(rig.pipeline, t, fo);
    for (const LossReport& rep : r.trace) {
        CHECK(rep.lipread == 0.0);
    }
}

TEST_CASE("fit_direct recovers the generating parameters from a perturbed start") {
    Rig rig(128);
    SyntheticClipOptions o;
    o.frames = 4;
    o.image_size = 128;
    o.landmark_noise = 0.0;
    const SyntheticClip clip = make_synthetic_clip(model(), o);
    Window w;
    w.frames = clip.frames;
    w.landmarks = clip.landmarks;
    const WindowTargets t = rig.pipeline.prepare(w, exact_estimate(clip.params));
    Rng rng(9);
    DirectFitOptions fo;
    Eigen::MatrixXd psi0 = t.coarse.expression();
    for (Eigen::Index i = 0; i < psi0.size(); ++i) {
        psi0.data()[i] += 0.5 * rng.normal();
    }
    fo.initial_psi = psi0;
    const DirectFitResult r = fit_direct(rig.pipeline, t, fo);
    MESSAGE("L_lr " << r.trace.front().lipread << " -> " << r.trace.back().lipread);
    CHECK(r.trace.back().lipread < 0.1 * r.trace.front().lipread);
    CHECK(r.trace.back().psi < r.trace.front().psi);
}

TEST_CASE("fit_direct stops early on divergence") {
    Rig rig;
    const WindowTargets t = rig.pipeline.prepare(synthetic_window(2));
    DirectFitOptions o;
    o.iterations = 20;
    o.learning_rate = 50.0;
    Eigen::MatrixXd jaw0 = t.coarse.jaw();
    jaw0.array() += 0.05;
    o.initial_jaw = jaw0;
    const DirectFitResult r = fit_direct(rig.pipeline, t, o);
    CHECK(r.diverged);
    CHECK(!r.diagnostic.empty());
    CHECK(r.trace.size() < 21);
    CHECK(r.psi.allFinite());
}
