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

#include "lipfit/core/archive.hpp"
#include "lipfit/core/config.hpp"
#include "lipfit/core/error.hpp"
#include "lipfit/core/image_io.hpp"
#include "lipfit/core/image_ops.hpp"
#include "lipfit/core/rng.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace lipfit;

TEST_CASE("rng state round trips") {
    Rng a(42);
    a.normal();
    const std::string state = a.state();
    Rng b(1);
    b.set_state(state);
    for (int i = 0; i < 10; ++i) {
        CHECK(a.normal() == b.normal());
        CHECK(a.uniform_int(0, 9) == b.uniform_int(0, 9));
    }
    CHECK_THROWS_AS(b.set_state("garbage"), DataError);
}

TEST_CASE("rng uniform_int covers its closed range") {
    Rng r(9);
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < 3000; ++i) {
        counts[r.uniform_int(0, 2)]++;
    }
    for (int c : counts) {
        CHECK(c > 900);
    }
}

TEST_CASE("archive round trip") {
    lipfit::testing::TempDir dir("archive");
    Archive ar("probe", 3);
    ar.meta()["note"] = "x";
    ar.put("a", {2, 2}, std::vector<double>{1.0, -0.0, 1e-300, std::nextafter(1.0, 2.0)});
    ar.put("b", {3}, std::vector<std::int64_t>{-1, 0, 1LL << 40});
    ar.save(dir.path() / "x.bin");
    const Archive back = Archive::load(dir.path() / "x.bin", "probe");
    CHECK(back.version() == 3);
    CHECK(back.meta()["note"] == "x");
    CHECK(back.f64("a").values == ar.f64("a").values);
    CHECK(std::signbit(back.f64("a").values[1]));
    CHECK(back.i64("b").values == ar.i64("b").values);
    CHECK_THROWS_AS(Archive::load(dir.path() / "x.bin", "other"), DataError);
    CHECK_THROWS_AS(static_cast<void>(back.f64("zzz")), DataError);
    {
        std::ofstream junk(dir.path() / "junk.bin", std::ios::binary);
        junk << "not an archive";
    }
    CHECK_THROWS_AS(Archive::load(dir.path() / "junk.bin"), DataError);
}

TEST_CASE("key-value config parsing, merge and environment overrides") {
    auto cfg = KeyValueConfig::parse("# comment\nseed = 7\n[loss]\nlambda_lr = 2.5  # trailing\nname = a b\n", "t");
    CHECK(cfg.get_int("seed", 0) == 7);
    CHECK(cfg.get_double("loss.lambda_lr", 0.0) == 2.5);
    CHECK(cfg.get_string("loss.name", "") == "a b");
    CHECK(cfg.get_double("missing", 1.5) == 1.5);
    CHECK_THROWS_AS(static_cast<void>(cfg.get_int("loss.name", 0)), ParameterError);
    CHECK_THROWS_AS(KeyValueConfig::parse("no equals here\n", "t"), ParameterError);

    const char* env[] = {"LIPFIT_LOSS__LAMBDA_LR=4", "OTHER=1", "LIPFIT_SEED=11", nullptr};
    cfg.apply_environment("LIPFIT", const_cast<char**>(env));
    CHECK(cfg.get_double("loss.lambda_lr", 0.0) == 4.0);
    CHECK(cfg.get_int("seed", 0) == 11);
    CHECK(!cfg.has("other"));

    const auto again = KeyValueConfig::parse(cfg.to_string(), "roundtrip");
    CHECK(again.entries() == cfg.entries());
}

TEST_CASE("luma weights sum to one so white stays white") {
    CHECK(kLumaWeights[0] + kLumaWeights[1] + kLumaWeights[2] == doctest::Approx(1.0).epsilon(1e-15));
    Tensor3 white(3, 2, 2, 1.0);
    const Tensor3 g = to_grayscale(white);
    for (double v : g.data) {
        CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("png and pnm round trip at 8 bits") {
    lipfit::testing::TempDir dir("img");
    Tensor3 img(3, 4, 5);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        img.data[i] = static_cast<double>((i * 37) % 256) / 255.0;
    }
    for (const char* name : {"a.png", "a.ppm"}) {
        write_image(dir.path() / name, img);
        const Tensor3 back = read_image(dir.path() / name);
        REQUIRE(back.same_shape(img));
        for (std::size_t i = 0; i < img.data.size(); ++i) {
            CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(read_image(dir.path() / "none.png"), DataError);
}

TEST_CASE("image sequence source walks numbered frames") {
    lipfit::testing::TempDir dir("seq");
    Tensor3 img(3, 2, 2, 0.5);
    for (int i = 1; i <= 3; ++i) {
        write_image(dir.path() / format_frame_path("f_%04d.png", i), img);
    }
    const auto source = open_frame_source((dir.path() / "f_%04d.png").string());
    CHECK(source->frame_count() == 3);
    CHECK(source->frame(2).same_shape(img));
    CHECK_THROWS_AS(source->frame(3), ParameterError);
}

TEST_CASE("average pooling and its adjoint") {
    Tensor3 img(1, 4, 4);
    for (int i = 0; i < 16; ++i) {
        img.data[static_cast<std::size_t>(i)] = i;
    }
    const Tensor3 p = average_pool(img, 2);
    CHECK(p.height == 2);
    CHECK(p.data[0] == doctest::Approx((0 + 1 + 4 + 5) / 4.0));
    // <pool(x), y> == <x, pool^T(y)>
    Tensor3 y(1, 2, 2);
    y.data = {1.0, -2.0, 0.5, 3.0};
    const Tensor3 back = average_pool_backward(y, 2);
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        lhs += p.data[i] * y.data[i];
    }
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        rhs += img.data[i] * back.data[i];
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
}
