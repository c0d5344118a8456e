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
#include "lipfit/face_model/params.hpp"
#include "lipfit/face_model/synthetic_model.hpp"
#include "lipfit/renderer/renderer.hpp"
#include "lipfit/training/trainer.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace fs = std::filesystem;
using lipfit::cli::run;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome cli(std::vector<std::string> args, std::vector<std::string> env = {}) {
    std::vector<char*> envp;
    for (auto& e : env) {
        envp.push_back(e.data());
    }
    envp.push_back(nullptr);
    std::ostringstream out, err;
    const int code = run(args, out, err, envp.data());
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) {
        out.push_back(l);
    }
    return out;
}

std::size_t count_files(const fs::path& dir) {
    return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}));
}

void put(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

const fs::path& root() {
    static const fs::path r = [] {
        fs::path p = fs::temp_directory_path() / ("lipfit_cli_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return r;
}

std::string at(const std::string& name) {
    return (root() / name).string();
}

const std::vector<std::string> kSmall = {"--set", "crop.image_size=64", "--set", "train.window=4"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

/// Synthetic dataset of 20, 16 and 3 frames; the last clip is shorter than the window.
const std::string& dataset() {
    static const std::string manifest = [] {
        const auto r = cli({"synth", "--out", at("ds"), "--frames", "20,16,3", "--image-size", "64"});
        REQUIRE(r.code == 0);
        return at("ds/data/manifest.txt");
    }();
    return manifest;
}

std::string clip_frames() {
    dataset();
    return at("ds/data/clip_00/frames/%04d.png");
}

/// Toy checkpoint after a few deterministic updates.
const std::string& checkpoint() {
    static const std::string path = [] {
        const auto r = cli(with({"train", "--out", at("ckpt"), "--manifest", dataset(), "--iterations", "3",
                                 "--deterministic", "--seed", "5"},
                                kSmall));
        REQUIRE_MESSAGE(r.code == 0, r.err);
        return at("ckpt/checkpoint.bin");
    }();
    return path;
}

} // namespace

TEST_CASE("usage errors exit 1 and help exits 0") {
    CHECK(cli({}).code == lipfit::cli::kExitUsage);
    CHECK(cli({"nonsense"}).code == lipfit::cli::kExitUsage);
    CHECK(cli({"--help"}).code == lipfit::cli::kExitOk);
    CHECK(cli({"fit", "--out", at("u1"), "--tap-point", "middle"}).code == lipfit::cli::kExitUsage);
    const auto missing = cli({"fit", "--out", at("u2")});
    CHECK(missing.code == lipfit::cli::kExitUsage);
    CHECK(missing.err.find("--frames") != std::string::npos);
    CHECK(cli({"fit", "--out", at("u3"), "--set", "novalue"}).code == lipfit::cli::kExitUsage);
}

TEST_CASE("configuration precedence: file < environment < --set < flags") {
    put(root() / "prec.cfg", "[train]\nseed = 1\nbase_lr = 0.5\nbatch_size = 3\n[loss]\nmouth_loss = off\n");
    const auto r = cli(with({"train", "--out", at("prec"), "--config", at("prec.cfg"), "--manifest", dataset(),
                             "--iterations", "0", "--set", "train.base_lr=0.25", "--set", "train.seed=2", "--seed",
                             "9"},
                            kSmall),
                       {"LIPFIT_TRAIN__BATCH_SIZE=2", "LIPFIT_TRAIN__BASE_LR=0.75", "LIPFIT_TRAIN__SEED=3"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const std::string cfg = slurp(root() / "prec" / "run_config.cfg");
    CHECK(cfg.find("train.seed = 9\n") != std::string::npos);
    CHECK(cfg.find("train.base_lr = 0.25\n") != std::string::npos);
    CHECK(cfg.find("train.batch_size = 2\n") != std::string::npos);
    CHECK(cfg.find("loss.mouth_loss = off\n") != std::string::npos);
    CHECK(cfg.find("run.command = train\n") != std::string::npos);
}

TEST_CASE("train: log row per iteration, periodic and final checkpoints, short clips listed") {
    const auto r = cli(with({"train", "--out", at("tr20"), "--manifest", dataset(), "--iterations", "20",
                             "--set", "train.checkpoint_every=10", "--deterministic"},
                            kSmall));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto log = lines(root() / "tr20" / "log.jsonl");
    REQUIRE(log.size() == 20);
    for (std::size_t i = 0; i < log.size(); ++i) {
        const auto row = nlohmann::json::parse(log[i]);
        CHECK(row.at("iteration").get<long long>() == static_cast<long long>(i));
        CHECK(row.at("lr").get<double>() == 5e-5);
        for (const char* k : {"L_lr", "L_em", "L_psi", "L_jaw", "L_n", "L_m", "total"}) {
            CHECK(row.contains(k));
        }
    }
    CHECK(fs::exists(root() / "tr20" / "checkpoint.bin"));
    CHECK(fs::exists(root() / "tr20" / "checkpoints" / "iter_00000010.bin"));
    CHECK(fs::exists(root() / "tr20" / "checkpoints" / "iter_00000020.bin"));
    CHECK(r.err.find("clip_02") != std::string::npos);
}

TEST_CASE("train: a manifest with no usable clip is a data error") {
    dataset();
    put(root() / "short.txt", "clip_02\t" + at("ds/data/clip_02/frames/%04d.png") + "\t" +
                                  at("ds/data/clip_02/landmarks.txt") + "\t25\n");
    const auto r = cli(with({"train", "--out", at("short"), "--manifest", at("short.txt"), "--iterations", "1"},
                            kSmall));
    CHECK(r.code == lipfit::cli::kExitData);
}

TEST_CASE("train: 10 steps are bit-identical across runs and resume reproduces the trace") {
    auto args = [&](const std::string& out) {
        return with({"train", "--out", at(out), "--manifest", dataset(), "--iterations", "10", "--seed", "4",
                     "--deterministic", "--set", "train.checkpoint_every=5"},
                    kSmall);
    };
    REQUIRE(cli(args("det_a")).code == 0);
    REQUIRE(cli(args("det_b")).code == 0);
    CHECK(slurp(root() / "det_a" / "log.jsonl") == slurp(root() / "det_b" / "log.jsonl"));
    CHECK(slurp(root() / "det_a" / "checkpoint.bin") == slurp(root() / "det_b" / "checkpoint.bin"));

    auto resumed = args("det_r");
    resumed.insert(resumed.end(), {"--resume", at("det_a/checkpoints/iter_00000005.bin")});
    const auto r = cli(resumed);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto full = lines(root() / "det_a" / "log.jsonl");
    const auto tail = lines(root() / "det_r" / "log.jsonl");
    REQUIRE(tail.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(tail[i] == full[5 + i]);
    }
    // The embedded run config differs (it records train.resume); the state must not.
    const auto a = lipfit::Checkpoint::load(root() / "det_a" / "checkpoint.bin");
    const auto b = lipfit::Checkpoint::load(root() / "det_r" / "checkpoint.bin");
    CHECK(a.encoder_weights == b.encoder_weights);
    CHECK(a.adam_m == b.adam_m);
    CHECK(a.adam_v == b.adam_v);
    CHECK(a.iteration == b.iteration);
    CHECK(a.rng_state == b.rng_state);
}

TEST_CASE("reconstruct: counts, determinism, rerun from the written config, renderable output") {
    const auto r = cli({"reconstruct", "--out", at("rec_a"), "--frames", clip_frames(), "--checkpoint", checkpoint(),
                        "--deterministic"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto params = lipfit::read_params_file(root() / "rec_a" / "params.txt");
    CHECK(params.size() == 20);
    CHECK(count_files(root() / "rec_a" / "render") == 20);
    CHECK(count_files(root() / "rec_a" / "side_by_side") == 20);

    REQUIRE(cli({"reconstruct", "--out", at("rec_b"), "--frames", clip_frames(), "--checkpoint", checkpoint(),
                 "--deterministic"})
                .code == 0);
    CHECK(slurp(root() / "rec_a" / "params.txt") == slurp(root() / "rec_b" / "params.txt"));
    CHECK(slurp(root() / "rec_a" / "render" / "0007.png") == slurp(root() / "rec_b" / "render" / "0007.png"));

    REQUIRE(cli({"reconstruct", "--out", at("rec_c"), "--config", at("rec_a/run_config.cfg")}).code == 0);
    CHECK(slurp(root() / "rec_a" / "params.txt") == slurp(root() / "rec_c" / "params.txt"));

    const auto model = lipfit::make_synthetic_model();
    lipfit::Renderer renderer(64, 64);
    for (const auto& p : params) {
        const auto& img = renderer.render(model, p).image;
        bool finite = true;
        for (double v : img.data) {
            finite = finite && std::isfinite(v);
        }
        CHECK(finite);
    }

    const auto rr = cli({"render", "--out", at("rend"), "--params", at("rec_a/params.txt"), "--set",
                         "crop.image_size=64"});
    REQUIRE_MESSAGE(rr.code == 0, rr.err);
    CHECK(slurp(root() / "rend" / "render" / "0003.png") == slurp(root() / "rec_a" / "render" / "0003.png"));
}

TEST_CASE("reconstruct: unreadable inputs are data errors") {
    CHECK(cli({"reconstruct", "--out", at("rec_e1"), "--frames", clip_frames(), "--checkpoint", at("none.bin")}).code ==
          lipfit::cli::kExitData);
    CHECK(cli({"reconstruct", "--out", at("rec_e2"), "--frames", at("nothing/%04d.png"), "--checkpoint",
               checkpoint()})
              .code == lipfit::cli::kExitData);
}

TEST_CASE("fit: trace CSV, zero lipread weight stays in place, divergence exits 3") {
    dataset();
    const std::vector<std::string> base = {"fit", "--frames", clip_frames(), "--landmarks",
                                           at("ds/data/clip_00/landmarks.txt"), "--set", "crop.image_size=64",
                                           "--deterministic"};
    const auto r = cli(with(base, {"--out", at("fit"), "--iterations", "30"}));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto trace = lines(root() / "fit" / "trace.csv");
    REQUIRE(trace.size() == 32);
    CHECK(trace[0] == "iteration,L_lr,L_em,L_psi,L_jaw,L_n,L_m,lambda_psi,total");
    auto column = [&](std::size_t row, int col) {
        std::stringstream s(trace[row]);
        std::string cell;
        for (int c = 0; c <= col; ++c) {
            std::getline(s, cell, ',');
        }
        return std::stod(cell);
    };
    CHECK(column(31, 1) < column(1, 1));
    CHECK(lipfit::read_params_file(root() / "fit" / "params.txt").size() == 20);
    CHECK(slurp(root() / "fit" / "run_config.cfg").find("loss.lipread = 4\n") != std::string::npos);

    REQUIRE(cli(with(base, {"--out", at("fit0"), "--iterations", "10", "--set", "loss.lipread=0"})).code == 0);
    const auto still = lines(root() / "fit0" / "trace.csv");
    REQUIRE(still.size() == 12);
    for (std::size_t i = 2; i < still.size(); ++i) {
        CHECK(still[i].substr(still[i].find(',')) == still[1].substr(still[1].find(',')));
    }

    const auto d = cli(with(base, {"--out", at("fitd"), "--iterations", "50", "--lr", "50"}));
    CHECK(d.code == lipfit::cli::kExitNumerical);
    CHECK(d.err.find("diverged") != std::string::npos);
    CHECK(fs::exists(root() / "fitd" / "trace.csv"));
}

TEST_CASE("eval: identical files, hand-computed fixture, missing hypothesis") {
    const std::string lex = std::string(LIPFIT_DATA_DIR) + "/lexicon.dict";
    put(root() / "refs.txt", "u1\tthe cat sat\nu2\tpat a dog\nu3\tmy name\nu4\tyes\nu5\tred fish\n");
    put(root() / "hyps.txt", "u1\tthe cat sat\nu2\tbat a dog\nu3\tmy\nu4\tyes no\nu5\tblue fish\n");
    put(root() / "hyps_missing.txt", "u1\tthe cat sat\nu2\tbat a dog\nu3\tmy\nu4\tyes no\n");

    auto report = [&](const std::string& out) {
        return nlohmann::json::parse(slurp(root() / out / "report.json")).at("aggregate");
    };
    REQUIRE(cli({"eval", "--out", at("ev_same"), "--ref", at("refs.txt"), "--hyp", at("refs.txt"), "--lexicon", lex})
                .code == 0);
    for (const char* m : {"CER", "WER", "VER", "VWER"}) {
        CHECK(report("ev_same").at(m).at("rate").get<double>() == 0.0);
    }

    const auto r = cli({"eval", "--out", at("ev_fix"), "--ref", at("refs.txt"), "--hyp", at("hyps.txt"),
                        "--lexicon", lex});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto agg = report("ev_fix");
    const std::vector<std::tuple<const char*, int, int>> expected = {
        {"CER", 13, 38}, {"WER", 4, 11}, {"VER", 8, 29}, {"VWER", 3, 11}};
    for (const auto& [m, d, n] : expected) {
        CHECK(agg.at(m).at("distance").get<int>() == d);
        CHECK(agg.at(m).at("reference_length").get<int>() == n);
    }
    CHECK(r.out.find("WER") != std::string::npos);

    const auto miss = cli({"eval", "--out", at("ev_miss"), "--ref", at("refs.txt"), "--hyp", at("hyps_missing.txt"),
                           "--lexicon", lex});
    REQUIRE(miss.code == 0);
    const auto j = nlohmann::json::parse(slurp(root() / "ev_miss" / "report.json"));
    CHECK(j.at("aggregate").at("missing_hypotheses").get<int>() == 1);
    CHECK(j.at("aggregate").at("WER").at("distance").get<int>() == 5);
    CHECK(miss.err.find("u5") != std::string::npos);

    REQUIRE(cli({"eval", "--out", at("ev_echo"), "--ref", at("refs.txt"), "--recognizer", "echo", "--lexicon", lex})
                .code == 0);
    CHECK(report("ev_echo").at("VWER").at("rate").get<double>() == 0.0);
    CHECK(cli({"eval", "--out", at("ev_bad"), "--ref", at("refs.txt"), "--lexicon", lex}).code ==
          lipfit::cli::kExitUsage);
}

namespace {

// Two-sided exact test by direct summation in long double.
long double oracle_p(int k, int n) {
    std::vector<long double> pmf(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        long double c = 1.0L;
        for (int j = 1; j <= i; ++j) {
            c = c * static_cast<long double>(n - i + j) / static_cast<long double>(j);
        }
        pmf[static_cast<std::size_t>(i)] = c * std::pow(0.5L, n);
    }
    long double p = 0.0L;
    for (long double v : pmf) {
        if (v <= pmf[static_cast<std::size_t>(k)] * (1.0L + 1e-7L)) {
            p += v;
        }
    }
    return std::min(1.0L, p);
}

} // namespace

TEST_CASE("study-stats: published preference counts, even split, mixed counts against an oracle") {
    put(root() / "t2.csv", "comparison,successes,failures\nA,201,37\nB,185,53\nC,218,20\nD,150,88\n");
    REQUIRE(cli({"study-stats", "--out", at("st"), "--preferences", at("t2.csv")}).code == 0);
    auto prefs = [&](const std::string& out) {
        return nlohmann::json::parse(slurp(root() / out / "study.json")).at("preferences");
    };
    for (const auto& row : prefs("st")) {
        CHECK(row.at("significant").get<bool>());
        CHECK(row.at("p_adjusted").get<double>() < 0.01);
        CHECK(row.at("comparisons").get<int>() == 4);
    }

    put(root() / "even.csv", "comparison,successes,trials\nX,50,100\n");
    REQUIRE(cli({"study-stats", "--out", at("st_even"), "--preferences", at("even.csv")}).code == 0);
    CHECK_FALSE(prefs("st_even")[0].at("significant").get<bool>());
    CHECK(prefs("st_even")[0].at("p_raw").get<double>() >= 0.95);

    put(root() / "mixed.csv", "comparison,successes,trials\nP,14,20\nQ,31,40\nR,9,30\n");
    REQUIRE(cli({"study-stats", "--out", at("st_mixed"), "--preferences", at("mixed.csv")}).code == 0);
    const auto mixed = prefs("st_mixed");
    const std::vector<std::pair<int, int>> counts = {{14, 20}, {31, 40}, {9, 30}};
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double p = static_cast<double>(oracle_p(counts[i].first, counts[i].second));
        CHECK(mixed[i].at("p_raw").get<double>() == doctest::Approx(p).epsilon(1e-9));
        CHECK(mixed[i].at("p_adjusted").get<double>() == doctest::Approx(std::min(1.0, 3 * p)).epsilon(1e-9));
    }

    put(root() / "acc.csv", "method,word,correct,total\nours,cat,3,4\nours,dog,1,4\nbase,cat,0,0\n");
    REQUIRE(cli({"study-stats", "--out", at("st_acc"), "--accuracy", at("acc.csv")}).code == 0);
    const auto acc = nlohmann::json::parse(slurp(root() / "st_acc" / "study.json")).at("accuracy");
    CHECK(acc.dump().find("50") != std::string::npos);
    CHECK(cli({"study-stats", "--out", at("st_none")}).code == lipfit::cli::kExitUsage);
    put(root() / "broken.csv", "comparison,successes,trials\nX,abc,10\n");
    CHECK(cli({"study-stats", "--out", at("st_broken"), "--preferences", at("broken.csv")}).code ==
          lipfit::cli::kExitData);
}

TEST_CASE("make-model writes a loadable archive") {
    REQUIRE(cli({"make-model", "--out", at("mm"), "--grid", "17"}).code == 0);
    const auto model = lipfit::load_model(root() / "mm" / "model.lfa");
    CHECK(model.vertex_count() > 17 * 17);
}
