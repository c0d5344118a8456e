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

#include "lipfit/cli/cli.hpp"

#include "lipfit/core/config.hpp"
#include "lipfit/core/error.hpp"
#include "lipfit/core/image_io.hpp"
#include "lipfit/core/image_ops.hpp"
#include "lipfit/encoders/coarse_estimator.hpp"
#include "lipfit/encoders/toy_extractor.hpp"
#include "lipfit/evaluation/metrics.hpp"
#include "lipfit/evaluation/study_stats.hpp"
#include "lipfit/face_model/synthetic_model.hpp"
#include "lipfit/kernels/kernels.hpp"
#include "lipfit/renderer/renderer.hpp"
#include "lipfit/training/direct_fit.hpp"
#include "lipfit/training/fixtures.hpp"
#include "lipfit/training/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

extern char** environ;

namespace lipfit::cli {

namespace fs = std::filesystem;

namespace {

struct Context {
    KeyValueConfig kv;
    fs::path out_dir;
    std::ostream& out;
    std::ostream& err;
};

struct Setting {
    std::string flag;        ///< empty: config-only
    std::string key;
    std::string fallback;    ///< default when absent
    bool required = false;
    std::string help;
};

struct Command {
    std::string name;
    std::string help;
    std::vector<Setting> settings;
    std::function<int(Context&)> run;
};

const std::vector<Setting>& global_settings() {
    static const std::vector<Setting> s = [] {
        const SyntheticModelOptions m;
        return std::vector<Setting>{
            {"--model", "model.path", "", false, "model archive (default: built-in synthetic model)"},
            {"", "model.grid", std::to_string(m.grid), false, ""},
            {"", "model.seed", std::to_string(m.seed), false, ""},
            {"", "coarse.grid", "8", false, ""},
            {"", "coarse.seed", "20230306", false, ""},
            {"", "train.seed", "0", false, ""},
            {"", "runtime.deterministic", "false", false, ""},
        };
    }();
    return s;
}

void ensure(KeyValueConfig& kv, const Setting& s) {
    if (!kv.has(s.key)) {
        if (s.required) {
            throw ParameterError("missing required setting '" + s.key + "'" +
                                 (s.flag.empty() ? std::string() : " (flag " + s.flag + ")"));
        }
        kv.set(s.key, s.fallback);
    } else if (s.required && kv.find(s.key)->empty()) {
        throw ParameterError("setting '" + s.key + "' is empty");
    }
}

std::string require(const KeyValueConfig& kv, const std::string& key) {
    const auto v = kv.find(key);
    if (!v || v->empty()) {
        throw ParameterError("missing required setting '" + key + "'");
    }
    return *v;
}

/// Resolves TrainConfig and writes every resolved key back, so the run config is complete.
TrainConfig resolve_train(KeyValueConfig& kv) {
    TrainConfig c = TrainConfig::read(kv);
    c.write(kv);
    return c;
}

MorphableModel build_model(const KeyValueConfig& kv) {
    const std::string path = kv.get_string("model.path", "");
    if (!path.empty()) {
        return load_model(path);
    }
    SyntheticModelOptions o;
    o.grid = static_cast<int>(kv.get_int("model.grid", o.grid));
    o.seed = static_cast<std::uint64_t>(kv.get_int("model.seed", static_cast<long long>(o.seed)));
    return make_synthetic_model(o);
}

/// Model, frozen networks and pipeline for one run.
struct Stack {
    MorphableModel model;
    LinearCoarseEstimator coarse;
    std::unique_ptr<FeatureExtractor> lip;
    std::unique_ptr<FeatureExtractor> emotion;
    std::unique_ptr<Pipeline> pipeline;

    Stack(const KeyValueConfig& kv, const TrainConfig& tc)
        : model(build_model(kv)),
          coarse(static_cast<int>(kv.get_int("coarse.grid", 8)),
                 static_cast<std::uint64_t>(kv.get_int("coarse.seed", 20230306))),
          lip(make_lip_extractor(tc.tap)),
          emotion(make_emotion_extractor(tc.tap)),
          pipeline(std::make_unique<Pipeline>(model, coarse, *lip, *emotion, tc.pipeline)) {}
};

std::vector<Tensor3> load_frames(const std::string& spec, int size) {
    const auto source = open_frame_source(spec);
    if (source->frame_count() == 0) {
        throw DataError("no frames found for '" + spec + "'");
    }
    std::vector<Tensor3> frames;
    for (int i = 0; i < source->frame_count(); ++i) {
        Tensor3 f = source->frame(i);
        if (f.height != size || f.width != size) {
            f = resize(f, size, size);
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

std::string frame_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d.png", i);
    return buf;
}

void write_renders(const MorphableModel& model, const std::vector<FaceParams>& params, int size, const fs::path& dir,
                   const std::vector<Tensor3>* inputs = nullptr, const fs::path& side_dir = {}) {
    fs::create_directories(dir);
    if (inputs != nullptr) {
        fs::create_directories(side_dir);
    }
    Renderer renderer(size, size);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor3& img = renderer.render(model, params[i]).image;
        write_image(dir / frame_name(static_cast<int>(i)), img);
        if (inputs != nullptr) {
            const Tensor3& in = (*inputs)[i];
            Tensor3 both(3, size, 2 * size);
            for (int c = 0; c < 3; ++c) {
                for (int y = 0; y < size; ++y) {
                    for (int x = 0; x < size; ++x) {
                        both.at(c, y, x) = in.at(in.channels == 1 ? 0 : c, y, x);
                        both.at(c, y, size + x) = img.at(c, y, x);
                    }
                }
            }
            write_image(side_dir / frame_name(static_cast<int>(i)), both);
        }
    }
}

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
    std::vector<int> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw ParameterError("setting '" + key + "': '" + item + "' is not an integer");
        }
    }
    if (out.empty()) {
        throw ParameterError("setting '" + key + "' is empty");
    }
    return out;
}

// ---- commands -------------------------------------------------------------

int cmd_make_model(Context& ctx) {
    const MorphableModel model = build_model(ctx.kv);
    const fs::path path = ctx.out_dir / "model.lfa";
    save_model(model, path);
    ctx.out << "model: " << model.vertex_count() << " vertices, " << model.faces().size() << " faces -> " << path.string()
            << '\n';
    return kExitOk;
}

int cmd_synth(Context& ctx) {
    const MorphableModel model = build_model(ctx.kv);
    SyntheticDatasetOptions o;
    o.frame_counts = parse_int_list(ctx.kv.get_string("synth.frames", ""), "synth.frames");
    o.clip.image_size = static_cast<int>(ctx.kv.get_int("synth.image_size", 128));
    o.clip.fps = ctx.kv.get_double("synth.fps", 25.0);
    o.clip.landmark_noise = ctx.kv.get_double("synth.noise", 0.3);
    o.clip.seed = static_cast<std::uint64_t>(ctx.kv.get_int("train.seed", 0));
    o.transcripts = ctx.kv.get_bool("synth.transcripts", true);
    const fs::path manifest = write_synthetic_dataset(ctx.out_dir / "data", model, o);
    ctx.out << "dataset: " << o.frame_counts.size() << " clips -> " << manifest.string() << '\n';
    return kExitOk;
}

int cmd_render(Context& ctx) {
    const TrainConfig tc = resolve_train(ctx.kv);
    const MorphableModel model = build_model(ctx.kv);
    const auto params = read_params_file(require(ctx.kv, "render.params"));
    write_renders(model, params, tc.pipeline.image_size, ctx.out_dir / "render");
    ctx.out << "rendered " << params.size() << " frames -> " << (ctx.out_dir / "render").string() << '\n';
    return kExitOk;
}

int cmd_reconstruct(Context& ctx) {
    const Checkpoint ckpt = Checkpoint::load(require(ctx.kv, "reconstruct.checkpoint"));
    // The networks and crop settings are those the checkpoint was trained with.
    const KeyValueConfig trained = KeyValueConfig::parse(ckpt.config, "checkpoint config");
    for (const char* key : {"model.path", "model.grid", "model.seed", "coarse.grid", "coarse.seed"}) {
        if (const auto v = trained.find(key)) {
            ctx.kv.set(key, *v);
        }
    }
    const TrainConfig tc = TrainConfig::read(trained);
    tc.write(ctx.kv);
    const Stack stack(ctx.kv, tc);
    if (!(fingerprint_frozen(*stack.pipeline) == ckpt.frozen)) {
        throw DataError("checkpoint was trained against different frozen networks");
    }
    const PerceptualEncoder encoder = load_encoder(ckpt);

    const int n = tc.pipeline.image_size;
    const std::vector<Tensor3> frames = load_frames(require(ctx.kv, "reconstruct.frames"), n);
    const CoarseEstimate coarse = estimate_sequence(stack.coarse, frames);
    const EncoderOutput pred = encoder.forward(frames);
    std::vector<FaceParams> params = coarse.frames;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        params[i].expression = pred.expression.row(row).transpose();
        params[i].jaw_pose = pred.jaw.row(row).transpose();
        if (tc.residual) {
            params[i].expression += coarse.frames[i].expression;
            params[i].jaw_pose += coarse.frames[i].jaw_pose;
        }
        params[i].validate();
    }
    write_params_file(ctx.out_dir / "params.txt", params);
    const bool side = ctx.kv.get_bool("reconstruct.side_by_side", true);
    write_renders(stack.model, params, n, ctx.out_dir / "render", side ? &frames : nullptr,
                  ctx.out_dir / "side_by_side");
    ctx.out << "reconstructed " << params.size() << " frames -> " << ctx.out_dir.string() << '\n';
    return kExitOk;
}

int cmd_train(Context& ctx) {
    const TrainConfig tc = resolve_train(ctx.kv);
    const Manifest manifest = load_manifest(require(ctx.kv, "train.manifest"), tc.window);
    for (const auto& issue : manifest.rejected) {
        ctx.err << "skipping " << (issue.clip_id.empty() ? "line " + std::to_string(issue.line) : issue.clip_id) << ": "
                << issue.reason << '\n';
    }
    int usable = 0;
    for (const auto& clip : manifest.clips) {
        if (clip.too_short) {
            ctx.err << "skipping " << clip.id << ": " << clip.frame_count() << " frames, window is " << tc.window << '\n';
        } else {
            ++usable;
        }
    }
    if (usable == 0) {
        throw DataError("no usable clips in the manifest");
    }

    const Stack stack(ctx.kv, tc);
    PerceptualEncoder encoder(tc.encoder);
    Trainer trainer(*stack.pipeline, encoder, tc);
    const std::string resume = ctx.kv.get_string("train.resume", "");
    if (!resume.empty()) {
        trainer.restore(Checkpoint::load(resume));
    }
    const long long every = ctx.kv.get_int("train.checkpoint_every", 0);
    if (every < 0) {
        throw ParameterError("train.checkpoint_every must be >= 0");
    }
    JsonlWriter log(ctx.out_dir / "log.jsonl", !resume.empty());
    const long long first = trainer.iteration();
    StepResult last;
    trainer.run(manifest.clips, tc.max_iterations, [&](const StepResult& step) {
        log.write(step.to_json());
        last = step;
        if (every > 0 && (step.iteration + 1) % every == 0) {
            char name[32];
            std::snprintf(name, sizeof name, "iter_%08lld.bin", step.iteration + 1);
            fs::create_directories(ctx.out_dir / "checkpoints");
            trainer.checkpoint(ctx.kv).save(ctx.out_dir / "checkpoints" / name);
        }
    });
    trainer.checkpoint(ctx.kv).save(ctx.out_dir / "checkpoint.bin");
    ctx.out << "trained " << (trainer.iteration() - first) << " iterations";
    if (trainer.iteration() > first) {
        ctx.out << ", final total loss " << last.report.total;
    }
    ctx.out << " -> " << (ctx.out_dir / "checkpoint.bin").string() << '\n';
    return kExitOk;
}

int cmd_fit(Context& ctx) {
    const TrainConfig tc = resolve_train(ctx.kv);
    const Stack stack(ctx.kv, tc);
    Window window;
    window.clip_id = "fit";
    const auto source = open_frame_source(require(ctx.kv, "fit.frames"));
    for (int i = 0; i < source->frame_count(); ++i) {
        window.frames.push_back(source->frame(i));
    }
    window.landmarks = read_landmarks(require(ctx.kv, "fit.landmarks"));
    if (window.frames.empty() || window.frames.size() != window.landmarks.size()) {
        throw DataError("fit: " + std::to_string(window.frames.size()) + " frames but " +
                        std::to_string(window.landmarks.size()) + " landmark frames");
    }
    const WindowTargets targets = stack.pipeline->prepare(window);

    DirectFitOptions o;
    o.iterations = static_cast<int>(ctx.kv.get_int("fit.iterations", o.iterations));
    o.learning_rate = ctx.kv.get_double("fit.learning_rate", o.learning_rate);
    o.final_lr_fraction = ctx.kv.get_double("fit.final_lr_fraction", o.final_lr_fraction);
    o.jaw_lr_scale = ctx.kv.get_double("fit.jaw_lr_scale", o.jaw_lr_scale);
    o.divergence_factor = ctx.kv.get_double("fit.divergence_factor", o.divergence_factor);
    o.weights = tc.weights;
    o.adam = tc.adam;
    const DirectFitResult r = fit_direct(*stack.pipeline, targets, o);

    write_params_file(ctx.out_dir / "params.txt", stack.pipeline->compose(targets, r.psi, r.jaw));
    std::ofstream trace(ctx.out_dir / "trace.csv");
    trace << "iteration,L_lr,L_em,L_psi,L_jaw,L_n,L_m,lambda_psi,total\n";
    char buf[64];
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        const LossReport& l = r.trace[i];
        trace << i;
        for (double v : {l.lipread, l.expression, l.psi, l.jaw, l.landmarks, l.mouth, l.lambda_psi, l.total}) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            trace << buf;
        }
        trace << '\n';
    }
    if (!trace) {
        throw DataError("failed writing " + (ctx.out_dir / "trace.csv").string());
    }
    ctx.out << "fit: L_lr " << r.trace.front().lipread << " -> " << r.trace.back().lipread << ", total "
            << r.trace.front().total << " -> " << r.trace.back().total << '\n';
    if (r.diverged) {
        ctx.err << "fit diverged: " << r.diagnostic << " (outputs hold the last good iterate)\n";
        return kExitNumerical;
    }
    return kExitOk;
}

VisemeMap resolve_visemes(const std::string& spec) {
    if (spec == "polly") {
        return VisemeMap::polly();
    }
    if (spec == "identity") {
        return VisemeMap::identity();
    }
    return VisemeMap::load(spec);
}

int cmd_eval(Context& ctx) {
    const auto refs = read_transcripts(require(ctx.kv, "eval.references"));
    const Lexicon lexicon = Lexicon::load(require(ctx.kv, "eval.lexicon"));
    const VisemeMap map = resolve_visemes(ctx.kv.get_string("eval.visemes", "polly"));
    EvaluationOptions o;
    o.parallel = !ctx.kv.get_bool("runtime.deterministic", false);
    o.visemes.merge_repeats = ctx.kv.get_bool("eval.merge_repeats", false);
    const std::string oov = ctx.kv.get_string("eval.oov", "skip");
    if (oov != "skip" && oov != "error") {
        throw ParameterError("eval.oov must be 'skip' or 'error'");
    }
    o.visemes.oov = oov == "skip" ? OovPolicy::Skip : OovPolicy::Error;

    const std::string hyp_path = ctx.kv.get_string("eval.hypotheses", "");
    const std::string recognizer = ctx.kv.get_string("eval.recognizer", "");
    MetricReport report;
    if (!hyp_path.empty() && !recognizer.empty()) {
        throw ParameterError("give either a hypothesis file or a recognizer, not both");
    }
    if (!hyp_path.empty()) {
        report = evaluate_transcripts(refs, read_transcripts(hyp_path), lexicon, map, o);
    } else if (!recognizer.empty()) {
        std::unique_ptr<Recognizer> rec;
        if (recognizer == "echo") {
            rec = make_echo_recognizer(refs);
        } else if (recognizer == "empty") {
            rec = std::make_unique<EmptyRecognizer>();
        } else {
            throw ParameterError("unknown recognizer '" + recognizer + "' (built in: echo, empty)");
        }
        std::vector<Utterance> utts;
        for (const auto& [id, text] : refs) {
            utts.push_back({id, {}, 25.0});
        }
        report = evaluate_corpus(*rec, utts, refs, lexicon, map, o);
    } else {
        throw ParameterError("eval needs --hyp or --recognizer");
    }

    std::ofstream(ctx.out_dir / "report.json") << report.to_json().dump(2) << '\n';
    auto line = [&](const char* name, const ErrorRate& r) {
        ctx.out << std::left << std::setw(5) << name;
        if (r.reference_length > 0) {
            ctx.out << std::fixed << std::setprecision(4) << r.rate() << std::defaultfloat;
        } else {
            ctx.out << "n/a";
        }
        ctx.out << "  (" << r.edits.distance << "/" << r.reference_length << ")\n";
    };
    line("CER", report.cer);
    line("WER", report.wer);
    line("VER", report.ver);
    line("VWER", report.vwer);
    ctx.out << "scored " << report.scored << ", failed " << report.failed << ", missing hypotheses "
            << report.missing_hypotheses << ", oov words " << report.oov_words << '\n';
    for (const auto& u : report.utterances) {
        if (u.missing_hypothesis) {
            ctx.err << "no hypothesis for " << u.id << "; scored as empty\n";
        }
        if (u.failed) {
            ctx.err << "failed " << u.id << ": " << u.failure << '\n';
        }
    }
    return kExitOk;
}

int cmd_study_stats(Context& ctx) {
    const std::string pref_path = ctx.kv.get_string("study.preferences", "");
    const std::string acc_path = ctx.kv.get_string("study.accuracy", "");
    if (pref_path.empty() && acc_path.empty()) {
        throw ParameterError("study-stats needs --preferences and/or --accuracy");
    }
    const double alpha = ctx.kv.get_double("study.alpha", 0.01);
    nlohmann::json j = nlohmann::json::object();
    if (!pref_path.empty()) {
        const auto rows = read_preference_counts(pref_path);
        const auto tests = preference_table(rows, alpha);
        j["preferences"] = nlohmann::json::array();
        ctx.out << std::left << std::setw(24) << "comparison" << std::setw(12) << "preferred" << std::setw(14)
                << "p" << std::setw(14) << "p_bonferroni"
                << "significant\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& t = tests[i];
            j["preferences"].push_back({{"comparison", rows[i].comparison},
                                        {"successes", t.successes},
                                        {"trials", t.trials},
                                        {"comparisons", t.comparisons},
                                        {"p_raw", t.p_raw},
                                        {"p_adjusted", t.p_adjusted},
                                        {"alpha", alpha},
                                        {"significant", t.significant}});
            std::ostringstream p, pa;
            p << std::setprecision(4) << t.p_raw;
            pa << std::setprecision(4) << t.p_adjusted;
            ctx.out << std::setw(24) << rows[i].comparison << std::setw(12)
                    << (std::to_string(t.successes) + "/" + std::to_string(t.trials)) << std::setw(14) << p.str()
                    << std::setw(14) << pa.str() << (t.significant ? "yes" : "no") << '\n';
        }
    }
    if (!acc_path.empty()) {
        const AccuracyTable table = word_accuracy_table(read_accuracy_counts(acc_path));
        j["accuracy"] = table.to_json();
        for (const auto& [method, e] : table.per_method) {
            ctx.out << std::left << std::setw(24) << method;
            if (e.percent) {
                ctx.out << std::fixed << std::setprecision(1) << *e.percent << std::defaultfloat << "%";
            } else {
                ctx.out << "n/a";
            }
            ctx.out << "  (" << e.correct << "/" << e.total << ")\n";
        }
    }
    std::ofstream(ctx.out_dir / "study.json") << j.dump(2) << '\n';
    return kExitOk;
}

const std::vector<Command>& commands() {
    static const std::vector<Command> list = {
        {"reconstruct",
         "per-frame parameters and renderings of a clip with a trained encoder",
         {{"--frames", "reconstruct.frames", "", true, "frame pattern (printf) or directory"},
          {"--checkpoint", "reconstruct.checkpoint", "", true, "trained encoder checkpoint"},
          {"--side-by-side", "reconstruct.side_by_side", "true", false, "also write input|render frames"}},
         cmd_reconstruct},
        {"train",
         "train the perceptual encoder on a manifest",
         {{"--manifest", "train.manifest", "", true, "clip manifest"},
          {"--iterations", "train.max_iterations", "", false, "total number of updates"},
          {"--resume", "train.resume", "", false, "checkpoint to resume from"},
          {"--checkpoint-every", "train.checkpoint_every", "0", false, "periodic checkpoints (0: final only)"}},
         cmd_train},
        {"fit",
         "optimize expression and jaw of one clip directly",
         {{"--frames", "fit.frames", "", true, "frame pattern (printf) or directory"},
          {"--landmarks", "fit.landmarks", "", true, "68-point landmark file"},
          {"--iterations", "fit.iterations", "200", false, "optimizer steps"},
          {"--lr", "fit.learning_rate", "0.02", false, "Adam learning rate"},
          {"", "fit.final_lr_fraction", "1", false, ""},
          {"", "fit.jaw_lr_scale", "0.1", false, ""},
          {"", "fit.divergence_factor", "10", false, ""},
          {"", "loss.preset", "direct-fit", false, ""}},
         cmd_fit},
        {"eval",
         "lip-reading metrics (CER, WER, VER, VWER)",
         {{"--ref", "eval.references", "", true, "reference transcripts (id<TAB>text)"},
          {"--hyp", "eval.hypotheses", "", false, "hypothesis transcripts (id<TAB>text)"},
          {"--recognizer", "eval.recognizer", "", false, "built-in recognizer: echo or empty"},
          {"--lexicon", "eval.lexicon", "", true, "CMU-format pronunciation dictionary"},
          {"--visemes", "eval.visemes", "polly", false, "polly, identity or a map file"},
          {"--merge-repeats", "eval.merge_repeats", "false", false, "collapse repeated visemes"},
          {"--oov", "eval.oov", "skip", false, "out-of-vocabulary policy: skip or error"}},
         cmd_eval},
        {"study-stats",
         "binomial preference tests and word-accuracy tables",
         {{"--preferences", "study.preferences", "", false, "CSV comparison,successes,trials|failures"},
          {"--accuracy", "study.accuracy", "", false, "CSV method,word,correct,total"},
          {"--alpha", "study.alpha", "0.01", false, "significance level after correction"}},
         cmd_study_stats},
        {"synth",
         "write a synthetic dataset (frames, landmarks, transcripts, manifest)",
         {{"--frames", "synth.frames", "24,30,36", false, "frames per clip, comma separated"},
          {"--image-size", "synth.image_size", "128", false, "frame size in pixels"},
          {"--fps", "synth.fps", "25", false, "frame rate recorded in the manifest"},
          {"--noise", "synth.noise", "0.3", false, "landmark noise (pixels)"},
          {"", "synth.transcripts", "true", false, ""}},
         cmd_synth},
        {"make-model",
         "write the synthetic face model archive",
         {{"--grid", "model.grid", "", false, "vertices per side"}},
         cmd_make_model},
        {"render",
         "render a parameter file",
         {{"--params", "render.params", "", true, "parameter file"}},
         cmd_render},
    };
    return list;
}

class BackendGuard {
public:
    explicit BackendGuard(bool serial) : saved_(kernels::backend()) {
        if (serial) {
            kernels::set_backend(kernels::Backend::Serial);
        }
    }
    ~BackendGuard() { kernels::set_backend(saved_); }
    BackendGuard(const BackendGuard&) = delete;
    BackendGuard& operator=(const BackendGuard&) = delete;

private:
    kernels::Backend saved_;
};

void write_run_config(const Context& ctx, const std::string& command) {
    fs::create_directories(ctx.out_dir);
    std::ofstream f(ctx.out_dir / "run_config.cfg");
    f << "# lipfit " << command << " run configuration\n" << ctx.kv.to_string();
    if (!f) {
        throw DataError("cannot write " + (ctx.out_dir / "run_config.cfg").string());
    }
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, char** envp) {
    CLI::App app{"Speech-aware 3D face reconstruction toolkit", "lipfit"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags;
    for (const Command& cmd : commands()) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->add_option("--config", config_path, "config file (key = value, [section] headers)");
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--set", sets, "override one setting, key=value (repeatable)")
            ->expected(1)
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
        sub->add_option_function<long long>(
            "--seed", [&](const long long& v) { flags["train.seed"] = std::to_string(v); }, "random seed");
        sub->add_option_function<std::string>(
               "--tap-point", [&](const std::string& v) { flags["features.tap_point"] = v; }, "feature tap")
            ->check(CLI::IsMember({"trunk", "contextual"}));
        sub->add_option_function<std::string>(
               "--mouth-loss", [&](const std::string& v) { flags["loss.mouth_loss"] = v; }, "mouth landmark loss")
            ->check(CLI::IsMember({"relative", "absolute", "off"}));
        sub->add_option_function<std::string>(
               "--weights-preset", [&](const std::string& v) { flags["loss.preset"] = v; }, "loss weight preset")
            ->check(CLI::IsMember({"train", "direct-fit"}));
        sub->add_flag_callback(
            "--deterministic", [&] { flags["runtime.deterministic"] = "true"; }, "serial kernels, fixed order");
        for (const Setting& s : cmd.settings) {
            if (!s.flag.empty()) {
                const std::string key = s.key;
                sub->add_option_function<std::string>(
                    s.flag, [&flags, key](const std::string& v) { flags[key] = v; }, s.help);
            }
        }
    }

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const Command* cmd = nullptr;
    for (const Command& c : commands()) {
        if (app.got_subcommand(c.name)) {
            cmd = &c;
        }
    }
    Context ctx{KeyValueConfig{}, fs::path(out_dir), out, err};
    try {
        if (!config_path.empty()) {
            ctx.kv.merge(KeyValueConfig::load(config_path));
        }
        ctx.kv.apply_environment("LIPFIT", envp != nullptr ? envp : environ);
        for (const std::string& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw ParameterError("--set expects key=value, got '" + s + "'");
            }
            ctx.kv.set(s.substr(0, eq), s.substr(eq + 1));
        }
        for (const auto& [k, v] : flags) {
            ctx.kv.set(k, v);
        }
        for (const Setting& s : global_settings()) {
            ensure(ctx.kv, s);
        }
        for (const Setting& s : cmd->settings) {
            if (!s.fallback.empty() || s.required) {
                ensure(ctx.kv, s);
            }
        }
        ctx.kv.set("run.command", cmd->name);
        const BackendGuard guard(ctx.kv.get_bool("runtime.deterministic", false));
        if (cmd->name != "reconstruct") {
            if (cmd->name == "train" || cmd->name == "fit" || cmd->name == "render") {
                static_cast<void>(resolve_train(ctx.kv));
            }
            write_run_config(ctx, cmd->name);
            return cmd->run(ctx);
        }
        // reconstruct adopts the checkpoint's settings first, then records them.
        fs::create_directories(ctx.out_dir);
        const int code = cmd->run(ctx);
        write_run_config(ctx, cmd->name);
        return code;
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

} // namespace lipfit::cli
