// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0
//
// dyninit: command-line front end for every pipeline stage.
//
// Exit codes: 0 success, 2 validation failure (bad arguments or config,
// verify mismatch), 1 any other error.

#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "dyninit/config.hpp"
#include "dyninit/initialization.hpp"
#include "dyninit/io.hpp"
#include "dyninit/losses.hpp"
#include "dyninit/pipeline.hpp"
#include "dyninit/synthetic.hpp"

namespace fs = std::filesystem;
using namespace dyninit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitValidation = 2;

struct StageArgs {
  std::string config;
  std::string dataset;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

/// Config resolution order: --config file, else <out>/config.toml if present,
/// else defaults; then --dataset / --seed override.
PipelineConfig resolve_config(const StageArgs& a) {
  PipelineConfig c;
  if (!a.config.empty()) {
    c = load_config(a.config);
  } else if (!a.out.empty() && fs::exists(fs::path(a.out) / pipeline::kConfigFile)) {
    c = load_config(fs::path(a.out) / pipeline::kConfigFile);
  }
  if (!a.dataset.empty()) c.dataset = a.dataset;
  if (a.seed_set) c.seed = a.seed;
  if (c.dataset.empty()) throw Error(ErrorCode::InvalidArgument, "no dataset given (--dataset or config)");
  c.dataset = fs::absolute(c.dataset).lexically_normal();
  if (c.dataset.filename().empty()) c.dataset = c.dataset.parent_path();
  validate(c);
  return c;
}

std::set<InstanceId> parse_ids(const std::string& list) {
  std::set<InstanceId> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const int v = std::stoi(item);
    if (v < 1 || v > 65535) throw Error(ErrorCode::InvalidArgument, "instance ids must lie in [1, 65535]");
    out.insert(InstanceId(v));
  }
  return out;
}

RgbImage read_image(const std::string& path) { return io::read_rgb_pfm(path); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Motion initialization for monocular dynamic-scene Gaussian reconstruction"};
  app.require_subcommand(1);
  app.fallthrough();
  int jobs = 1;
  std::string log_level = "info";
  app.add_option("--jobs,-j", jobs, "Worker threads per stage")->check(CLI::Range(1, 1024));
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  const auto add_stage_args = [](CLI::App* sub, StageArgs& a, bool need_out = true) {
    sub->add_option("--config,-c", a.config, "Pipeline config (TOML)");
    sub->add_option("--dataset,-d", a.dataset, "Dataset directory");
    auto* o = sub->add_option("--out,-o", a.out, "Run directory");
    if (need_out) o->required();
    sub->add_option_function<std::uint64_t>("--seed", [&a](const std::uint64_t& s) {
      a.seed = s;
      a.seed_set = true;
    }, "Override the config seed");
  };

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic dataset with ground truth");
  std::string synth_out, synth_spec;
  int synth_tracks = 10000;
  std::uint64_t track_seed = 1;
  int synth_fourier = 8;
  synth_cmd->add_option("--out,-o", synth_out, "Dataset directory")->required();
  synth_cmd->add_option("--spec", synth_spec, "Scene spec JSON (default scene if omitted)");
  synth_cmd->add_option("--tracks", synth_tracks, "Number of query tracks")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--track-seed", track_seed, "Seed for track sampling");
  synth_cmd->add_option("--d-fourier", synth_fourier, "Fourier degree written to the dataset's pipeline.toml")
      ->check(CLI::NonNegativeNumber);

  // stages
  StageArgs detect_a, track_a, flow_a, encode_a, init_a, run_a;
  auto* detect_cmd = app.add_subcommand("detect", "Sampson-error dynamic region detection");
  add_stage_args(detect_cmd, detect_a);
  auto* track_cmd = app.add_subcommand("track", "Instance prompting, propagation and reverse pass");
  add_stage_args(track_cmd, track_a);
  std::string provider;
  track_cmd->add_option("--provider", provider, "Mask provider")->check(CLI::IsMember({"oracle", "files"}));
  auto* flow_cmd = app.add_subcommand("flow", "Track assignment, lifting and rigid refinement");
  add_stage_args(flow_cmd, flow_a);
  auto* encode_cmd = app.add_subcommand("encode", "Poly-Fourier trajectory fitting");
  add_stage_args(encode_cmd, encode_a);
  auto* init_cmd = app.add_subcommand("init", "Static and dynamic Gaussian initialization");
  add_stage_args(init_cmd, init_a);
  auto* run_cmd = app.add_subcommand("run", "Run every stage");
  add_stage_args(run_cmd, run_a);

  // edit
  auto* edit_cmd = app.add_subcommand("edit", "Filter a Gaussian PLY by instance id");
  std::string edit_in, edit_out, edit_remove, edit_keep;
  bool edit_no_static = false;
  edit_cmd->add_option("--in,-i", edit_in, "Input PLY")->required()->check(CLI::ExistingFile);
  edit_cmd->add_option("--out,-o", edit_out, "Output PLY")->required();
  auto* rm = edit_cmd->add_option("--remove", edit_remove, "Comma-separated ids to remove");
  auto* keep = edit_cmd->add_option("--keep", edit_keep, "Comma-separated ids to isolate");
  rm->excludes(keep);
  edit_cmd->add_flag("--no-static", edit_no_static, "Drop static Gaussians");

  // eval-loss
  auto* loss_cmd = app.add_subcommand("eval-loss", "Evaluate the photometric and depth losses");
  std::string li, lr, ld, lrd;
  LossWeights weights;
  loss_cmd->add_option("--image", li, "Rendered image (PF)")->required()->check(CLI::ExistingFile);
  loss_cmd->add_option("--ref", lr, "Reference image (PF)")->required()->check(CLI::ExistingFile);
  loss_cmd->add_option("--depth", ld, "Rendered depth (Pf)")->required()->check(CLI::ExistingFile);
  loss_cmd->add_option("--ref-depth", lrd, "Reference depth (Pf)")->required()->check(CLI::ExistingFile);
  loss_cmd->add_option("--lambda-ssim", weights.lambda_ssim)->check(CLI::Range(0.0, 1.0));
  loss_cmd->add_option("--lambda-depth", weights.lambda_depth)->check(CLI::Range(0.0, 1.0));

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Compare a run against the dataset's ground truth");
  std::string v_dataset, v_out;
  double v_tol = 1e-4;
  verify_cmd->add_option("--dataset,-d", v_dataset, "Dataset directory with gt/")->required()->check(CLI::ExistingDirectory);
  verify_cmd->add_option("--out,-o", v_out, "Run directory")->required()->check(CLI::ExistingDirectory);
  verify_cmd->add_option("--rmse-tol", v_tol, "Trajectory RMSE tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_pattern("[%l] %v");
  const pipeline::RunOptions options{jobs};

  try {
    if (*synth_cmd) {
      const auto spec = synth_spec.empty() ? synth::default_scene() : synth::scene_from_json(io::read_file(synth_spec));
      synth::write_dataset(spec, synth_tracks, track_seed, synth_out);
      PipelineConfig c;
      c.dataset = ".";
      c.flow.n_tracks = synth_tracks;
      c.encode.d_fourier = synth_fourier;
      io::write_file(fs::path(synth_out) / "pipeline.toml", to_toml(c));
      std::cout << fmt::format("wrote {} ({} frames, {}x{})\n", synth_out, spec.frame_count, spec.width, spec.height);
    } else if (*detect_cmd || *track_cmd || *flow_cmd || *encode_cmd || *init_cmd) {
      StageArgs& a = *detect_cmd ? detect_a : *track_cmd ? track_a : *flow_cmd ? flow_a : *encode_cmd ? encode_a : init_a;
      PipelineConfig c = resolve_config(a);
      if (*track_cmd && !provider.empty()) c.track.provider = provider;
      fs::create_directories(a.out);
      pipeline::write_config(c, a.out);
      if (*detect_cmd) pipeline::run_detect(c, a.out, options);
      if (*track_cmd) pipeline::run_track(c, a.out, options);
      if (*flow_cmd) pipeline::run_flow(c, a.out, options);
      if (*encode_cmd) pipeline::run_encode(c, a.out, options);
      if (*init_cmd) pipeline::run_init(c, a.out, options);
    } else if (*run_cmd) {
      pipeline::run_pipeline(resolve_config(run_a), run_a.out, options);
      std::cout << fmt::format("run complete: {}\n", run_a.out);
    } else if (*edit_cmd) {
      const auto ply = io::read_gaussians_ply(edit_in);
      InstanceFilter filter;
      filter.include_static = !edit_no_static;
      if (!edit_keep.empty()) {
        filter.mode = InstanceFilter::Mode::Keep;
        filter.ids = parse_ids(edit_keep);
      } else {
        filter.ids = parse_ids(edit_remove);
      }
      const auto kept = filter_by_instance(ply.records, filter);
      io::write_gaussians_ply(edit_out, kept, ply.spec);
      std::cout << fmt::format("{} of {} Gaussians kept\n", kept.size(), ply.records.size());
    } else if (*loss_cmd) {
      const auto terms = combined_loss(read_image(li), read_image(lr), io::read_pfm(ld).values, io::read_pfm(lrd).values,
                                       weights);
      const nlohmann::json out = {{"l1", terms.l1},
                                  {"ssim", terms.ssim},
                                  {"depth", terms.depth},
                                  {"total", terms.total},
                                  {"psnr", psnr(read_image(li), read_image(lr))},
                                  {"lambda_ssim", weights.lambda_ssim},
                                  {"lambda_depth", weights.lambda_depth}};
      std::cout << out.dump(1) << "\n";
    } else if (*verify_cmd) {
      const auto report = pipeline::verify(v_dataset, v_out, v_tol);
      std::cout << report.table();
      return report.passed() ? kExitOk : kExitValidation;
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.code() == ErrorCode::InvalidArgument ? kExitValidation : kExitError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  }
  return kExitOk;
}
