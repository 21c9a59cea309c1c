// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include <doctest.h>

#include "dyninit/config.hpp"
#include "dyninit/io.hpp"
#include "test_util.hpp"

using namespace dyninit;
using dyninit::testing::TempDir;

TEST_CASE("defaults") {
  const PipelineConfig c;
  CHECK(c.detect.tau_epi == 3.0);
  CHECK(c.track.tau_mask == 0.8);
  CHECK(c.track.propagation_interval == 10);
  CHECK(c.encode.d_pol == 3);
  CHECK(c.encode.d_fourier == 32);
  CHECK(c.encode.omega == 2.0 * std::numbers::pi);
  CHECK(c.loss.lambda_ssim == 0.2);
  CHECK(c.loss.lambda_depth == 0.2);
  CHECK(c.init.static_stride == 20);
  CHECK(c.flow.n_tracks == 10000);
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("serialised defaults carry the documented values") {
  const std::string s = to_toml(PipelineConfig{});
  for (const char* line : {"tau_epi = 3.0\n", "tau_mask = 0.8\n", "d_pol = 3\n", "d_fourier = 32\n",
                           "lambda_ssim = 0.2\n", "lambda_depth = 0.2\n", "static_stride = 20\n",
                           "n_tracks = 10000\n", "[detect]\n", "[loss]\n"}) {
    CHECK_MESSAGE(s.find(line) != std::string::npos, line);
  }
}

TEST_CASE("TOML round trips every field") {
  PipelineConfig c;
  c.dataset = "/data/scene \"one\"";
  c.seed = 18446744073709551615ULL;
  c.detect.tau_epi = 2.5;
  c.detect.min_area_fraction = 0.001;
  c.detect.stride = 2;
  c.track.tau_mask = 0.65;
  c.track.propagation_interval = 7;
  c.track.provider = "files";
  c.track.provider_dir = "masks/sam";
  c.flow.n_tracks = 123;
  c.flow.ransac_iters = 99;
  c.flow.ransac_tol_fraction = 0.015;
  c.encode.d_pol = 2;
  c.encode.d_fourier = 6;
  c.encode.omega = 0.1 + 0.2;
  c.encode.ridge = 1e-7;
  c.init.static_stride = 3;
  c.init.n_per_frame = 17;
  c.init.log_sigma = 1.25;
  c.init.k_scale = 2.0;
  c.init.eps_log = 3e-5;
  c.init.r_min = 0.25;
  c.init.r_max = 4.0;
  c.init.opacity = 0.35;
  c.loss.lambda_ssim = 0.0;
  c.loss.lambda_depth = 1.0;
  const auto back = config_from_toml(to_toml(c));
  CHECK(back == c);
  CHECK(to_toml(back) == to_toml(c));
}

TEST_CASE("parser accepts comments and partial files") {
  const auto c = config_from_toml(
      "# top\n"
      "seed = 4   # trailing\n"
      "\n"
      "[encode]\n"
      "  d_fourier = 8\n"
      "[track]\n"
      "provider_dir = \"a#b\"\n");
  CHECK(c.seed == 4);
  CHECK(c.encode.d_fourier == 8);
  CHECK(c.encode.d_pol == 3);
  CHECK(c.track.provider_dir == "a#b");
}

TEST_CASE("parser rejects malformed input") {
  CHECK_THROWS_CODE(config_from_toml("[detect]\nbogus = 1\n"), ErrorCode::InvalidArgument);
  CHECK_THROWS_CODE(config_from_toml("tau_epi = 1.0\n"), ErrorCode::InvalidArgument);  // not in [detect]
  CHECK_THROWS_CODE(config_from_toml("seed = 1\nseed = 2\n"), ErrorCode::InvalidArgument);
  CHECK_THROWS_CODE(config_from_toml("[detect\n"), ErrorCode::InvalidArgument);
  CHECK_THROWS_CODE(config_from_toml("seed\n"), ErrorCode::InvalidArgument);
  CHECK_THROWS_CODE(config_from_toml("seed = -1\n"), ErrorCode::InvalidArgument);
  CHECK_THROWS_CODE(config_from_toml("[encode]\nd_pol = 2.5\n"), ErrorCode::InvalidArgument);
  CHECK_THROWS_CODE(config_from_toml("[detect]\ntau_epi = fast\n"), ErrorCode::InvalidArgument);
  CHECK_THROWS_CODE(config_from_toml("dataset = unquoted\n"), ErrorCode::InvalidArgument);
}

TEST_CASE("validation ranges") {
  const auto rejects = [](auto mutate) {
    PipelineConfig c;
    mutate(c);
    CHECK_THROWS_CODE(validate(c), ErrorCode::InvalidArgument);
  };
  rejects([](PipelineConfig& c) { c.detect.tau_epi = 0.0; });
  rejects([](PipelineConfig& c) { c.track.tau_mask = 1.01; });
  rejects([](PipelineConfig& c) { c.track.provider = "sam"; });
  rejects([](PipelineConfig& c) { c.encode.d_fourier = -1; });
  rejects([](PipelineConfig& c) { c.encode.ridge = -1e-9; });
  rejects([](PipelineConfig& c) { c.init.r_max = 0.1; });
  rejects([](PipelineConfig& c) { c.init.opacity = 1.0; });
  rejects([](PipelineConfig& c) { c.loss.lambda_depth = 1.5; });
  rejects([](PipelineConfig& c) { c.init.static_stride = 0; });
}

TEST_CASE("relative dataset paths resolve against the config file") {
  TempDir dir("config");
  std::filesystem::create_directories(dir / "sub");
  io::write_file(dir / "sub" / "pipeline.toml", "dataset = \"../data/\"\n");
  const auto c = load_config(dir / "sub" / "pipeline.toml");
  CHECK(c.dataset == (dir / "data").lexically_normal());
  CHECK(config_from_toml("dataset = \"/abs\"\n", "/base").dataset == "/abs");
}
