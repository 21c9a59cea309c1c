// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dyninit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "dyninit/detection.hpp"
#include "dyninit/initialization.hpp"
#include "dyninit/io.hpp"
#include "dyninit/parallel.hpp"
#include "dyninit/scene_flow.hpp"
#include "dyninit/synthetic.hpp"
#include "dyninit/tracking.hpp"
#include "dyninit/trajectory.hpp"

namespace dyninit::pipeline {

namespace {

using nlohmann::json;

/// Collects inputs and outputs of one stage and writes its manifest.
class StageRecorder {
 public:
  StageRecorder(std::string name, const PipelineConfig& config, const fs::path& out)
      : name_(std::move(name)), dataset_(config.dataset), out_(out), start_(std::chrono::steady_clock::now()) {}

  fs::path input(const fs::path& p) {
    if (!fs::exists(p)) throw Error(ErrorCode::MissingInput, p.string());
    inputs_.push_back(p);
    return p;
  }
  fs::path output(const fs::path& relative) {
    outputs_.push_back(out_ / relative);
    return outputs_.back();
  }
  void parameter(const std::string& key, json value) { parameters_[key] = std::move(value); }

  void finish() {
    json inputs = json::object(), outputs = json::object();
    for (const auto& p : inputs_) inputs[label(p)] = sha256_file(p);
    for (const auto& p : outputs_) outputs[label(p)] = sha256_file(p);
    const json manifest = {{"stage", name_}, {"parameters", parameters_}, {"inputs", inputs}, {"outputs", outputs}};
    io::write_file(out_ / kManifests / (name_ + ".json"), manifest.dump(1) + "\n");

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const fs::path tp = timings_path(out_);
    json timings = json::object();
    if (fs::exists(tp)) {
      try {
        timings = json::parse(io::read_file(tp));
      } catch (const json::exception&) {
        timings = json::object();
      }
    }
    timings[name_] = seconds;
    io::write_file(tp, timings.dump(1) + "\n");
    spdlog::info("{}: {} outputs in {:.2f} s", name_, outputs_.size(), seconds);
  }

 private:
  std::string label(const fs::path& path) const {
    const fs::path p = fs::absolute(path).lexically_normal();
    const auto rel_out = p.lexically_relative(fs::absolute(out_).lexically_normal());
    if (!rel_out.empty() && *rel_out.begin() != "..") return "out/" + rel_out.generic_string();
    const auto rel_ds = p.lexically_relative(fs::absolute(dataset_).lexically_normal());
    if (!rel_ds.empty() && *rel_ds.begin() != "..") return "dataset/" + rel_ds.generic_string();
    return p.generic_string();
  }

  std::string name_;
  fs::path dataset_;
  fs::path out_;
  std::chrono::steady_clock::time_point start_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
  json parameters_ = json::object();
};

template <typename Fn>
void stage(const char* name, const PipelineConfig& config, const fs::path& out, Fn&& body) {
  try {
    validate(config);
    StageRecorder rec(name, config, out);
    body(rec);
    rec.finish();
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("stage {}: {}", name, e.message()));
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Io, fmt::format("stage {}: {}", name, e.what()));
  }
}

fs::path require_dir(StageRecorder&, const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingInput, "missing directory " + dir.string());
  return dir;
}

std::vector<Camera> load_cameras(StageRecorder& rec, const PipelineConfig& config) {
  return io::read_cameras(rec.input(config.dataset / "cameras.json"));
}

std::vector<DepthMap> load_depths(StageRecorder& rec, const PipelineConfig& config, int T, const std::set<int>& only = {}) {
  const fs::path dir = require_dir(rec, config.dataset / "depth");
  std::vector<DepthMap> out(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    if (!only.empty() && !only.count(t)) continue;
    out[std::size_t(t)] = io::read_pfm(rec.input(dir / io::frame_name(t, "pfm")), t);
  }
  return out;
}

std::vector<InstanceMaskFrame> load_track_masks(StageRecorder& rec, const fs::path& out, int T) {
  const fs::path dir = require_dir(rec, out / kTrackMasks);
  std::vector<InstanceMaskFrame> masks;
  for (int t = 0; t < T; ++t) {
    const fs::path p = dir / io::frame_name(t, "pgm");
    rec.input(io::mask_sidecar_path(p));
    auto m = io::read_masks(rec.input(p));
    m.frame_index = t;
    masks.push_back(std::move(m));
  }
  return masks;
}

BasisSpec basis_of(const PipelineConfig& config, int T) {
  BasisSpec spec;
  spec.d_pol = config.encode.d_pol;
  spec.d_fourier = config.encode.d_fourier;
  spec.omega = config.encode.omega;
  spec.frame_count = T;
  return spec;
}

/// Keeps at most n distinct track ids, chosen by a seeded shuffle.
TrackTable limit_tracks(const TrackTable& tracks, int n, std::uint64_t seed) {
  std::set<std::int64_t> ids;
  for (const auto& o : tracks) ids.insert(o.track_id);
  if (ids.size() <= std::size_t(n)) return tracks;
  std::vector<std::int64_t> order(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < std::size_t(n); ++i) std::swap(order[i], order[i + rng() % (order.size() - i)]);
  const std::set<std::int64_t> keep(order.begin(), order.begin() + n);
  TrackTable out;
  for (const auto& o : tracks) {
    if (keep.count(o.track_id)) out.push_back(o);
  }
  spdlog::info("using {} of {} tracks", n, ids.size());
  return out;
}

}  // namespace

fs::path timings_path(const fs::path& out) {
  fs::path base = fs::absolute(out).lexically_normal();
  if (base.filename().empty()) base = base.parent_path();
  return base.parent_path() / (base.filename().string() + ".timings.json");
}

std::string sha256_file(const fs::path& path) {
  const std::string bytes = io::read_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "SHA-256 failed for " + path.string());
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

void write_config(const PipelineConfig& config, const fs::path& out) {
  io::write_file(out / kConfigFile, to_toml(config));
}

// ---------------------------------------------------------------------------

void run_detect(const PipelineConfig& config, const fs::path& out, const RunOptions& options) {
  stage("detect", config, out, [&](StageRecorder& rec) {
    const auto cams = load_cameras(rec, config);
    const int T = static_cast<int>(cams.size());
    const fs::path flow_dir = require_dir(rec, config.dataset / "flow");
    const int min_area = min_area_pixels(cams.front().width, cams.front().height, config.detect.min_area_fraction);
    rec.parameter("tau_epi", config.detect.tau_epi);
    rec.parameter("min_area_fraction", config.detect.min_area_fraction);
    rec.parameter("min_area_pixels", min_area);
    rec.parameter("stride", config.detect.stride);

    std::vector<int> frames;
    for (int t = 0; t + 1 < T; t += config.detect.stride) frames.push_back(t);
    for (int t : frames) rec.input(flow_dir / io::frame_name(t, "flo"));

    std::vector<DynamicRegionSet> regions(frames.size());
    parallel_for(frames.size(), options.jobs, [&](std::size_t k) {
      const int t = frames[k];
      const FlowField flow = io::read_flo(flow_dir / io::frame_name(t, "flo"));
      regions[k] = detect_dynamic(flow, cams[std::size_t(t)], cams[std::size_t(t + 1)], config.detect.tau_epi, min_area);
      regions[k].frame = t;
    });

    json doc = json::array();
    for (const auto& r : regions) {
      io::write_binary_mask(rec.output(fs::path(kDetectMasks) / io::frame_name(r.frame, "pgm")), r.mask);
      json boxes = json::array();
      for (const auto& b : r.boxes) boxes.push_back({{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}, {"area", b.area}});
      doc.push_back({{"frame", r.frame}, {"boxes", boxes}});
    }
    io::write_file(rec.output(kDetectRegions), doc.dump(1) + "\n");
  });
}

void run_track(const PipelineConfig& config, const fs::path& out, const RunOptions&) {
  stage("track", config, out, [&](StageRecorder& rec) {
    const auto cams = load_cameras(rec, config);
    const int T = static_cast<int>(cams.size());
    const int W = cams.front().width, H = cams.front().height;

    std::map<int, DynamicRegionSet> regions;
    json doc;
    try {
      doc = json::parse(io::read_file(rec.input(out / kDetectRegions)));
      for (const auto& entry : doc) {
        DynamicRegionSet r;
        r.frame = entry.at("frame").get<int>();
        r.mask = io::read_binary_mask(rec.input(out / kDetectMasks / io::frame_name(r.frame, "pgm")));
        for (const auto& b : entry.at("boxes")) {
          r.boxes.push_back({b.at("x0").get<int>(), b.at("y0").get<int>(), b.at("x1").get<int>(), b.at("y1").get<int>(),
                             b.at("area").get<int>()});
        }
        regions[r.frame] = std::move(r);
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedHeader, std::string("regions: ") + e.what());
    }

    std::unique_ptr<MaskProvider> provider;
    if (config.track.provider == "oracle") {
      const auto spec = synth::scene_from_json(io::read_file(rec.input(config.dataset / "scene.json")));
      provider = LabelMapProvider::oracle(synth::SyntheticScene(spec));
    } else {
      fs::path dir = config.track.provider_dir;
      if (dir.is_relative()) dir = config.dataset / dir;
      require_dir(rec, dir);
      for (int t = 0; t < T; ++t) {
        const fs::path p = dir / io::frame_name(t, "pgm");
        rec.input(p);
        if (fs::exists(io::mask_sidecar_path(p))) rec.input(io::mask_sidecar_path(p));
      }
      provider = LabelMapProvider::from_directory(dir, T);
    }
    if (provider->frame_count() != T || provider->width() != W || provider->height() != H) {
      throw Error(ErrorCode::DimensionMismatch, "provider frames do not match the cameras");
    }

    TrackingParams params;
    params.tau_mask = config.track.tau_mask;
    params.propagation_interval = config.track.propagation_interval;
    params.min_area = min_area_pixels(W, H, config.detect.min_area_fraction);
    rec.parameter("tau_mask", params.tau_mask);
    rec.parameter("propagation_interval", params.propagation_interval);
    rec.parameter("provider", config.track.provider);
    rec.parameter("min_area_pixels", params.min_area);

    TrackingResult result = run_tracking(regions, *provider, params);
    reverse_propagate(result, *provider);

    for (const auto& frame : result.frames) {
      const fs::path p = rec.output(fs::path(kTrackMasks) / io::frame_name(frame.frame_index, "pgm"));
      io::write_masks(p, frame);
      rec.output(fs::path(kTrackMasks) / io::mask_sidecar_path(p).filename());
    }
    io::write_file(rec.output(kTrackTimelines), timelines_to_json(result.timelines()));
  });
}

void run_flow(const PipelineConfig& config, const fs::path& out, const RunOptions& options) {
  stage("flow", config, out, [&](StageRecorder& rec) {
    const auto cams = load_cameras(rec, config);
    const int T = static_cast<int>(cams.size());
    const auto tracks = limit_tracks(
        io::read_tracks(rec.input(config.dataset / "tracks.csv"), cams.front().width, cams.front().height),
        config.flow.n_tracks, config.seed);
    const auto masks = load_track_masks(rec, out, T);
    const auto depths = load_depths(rec, config, T);

    SceneFlowParams params;
    params.refine.max_iters = config.flow.ransac_iters;
    params.refine.tol_fraction = config.flow.ransac_tol_fraction;
    params.refine.seed = config.seed;
    params.jobs = options.jobs;
    rec.parameter("n_tracks", config.flow.n_tracks);
    rec.parameter("ransac_iters", params.refine.max_iters);
    rec.parameter("ransac_tol_fraction", params.refine.tol_fraction);
    rec.parameter("seed", config.seed);

    const auto result = compute_scene_flow(tracks, masks, depths, cams, params);
    write_trajectories(rec.output(kFlowTrajectories), result.trajectories);
    io::write_file(rec.output(kFlowMotions), motions_to_json(result.motions));
  });
}

void run_encode(const PipelineConfig& config, const fs::path& out, const RunOptions& options) {
  stage("encode", config, out, [&](StageRecorder& rec) {
    const auto cams = load_cameras(rec, config);
    const int T = static_cast<int>(cams.size());
    const auto trajectories = read_trajectories(rec.input(out / kFlowTrajectories));
    const BasisSpec spec = basis_of(config, T);
    rec.parameter("d_pol", spec.d_pol);
    rec.parameter("d_fourier", spec.d_fourier);
    rec.parameter("omega", spec.omega);
    rec.parameter("frame_count", spec.frame_count);
    rec.parameter("ridge", config.encode.ridge);

    const TrajectoryFitter<double> fitter(spec, config.encode.ridge);
    std::vector<FitResult<double>> fits(trajectories.size());
    parallel_for(trajectories.size(), options.jobs, [&](std::size_t k) {
      const auto& tr = trajectories[k];
      if (tr.frame_count() != T || !tr.total()) {
        throw Error(ErrorCode::InvalidArgument, fmt::format("track {} is not total over {} frames", tr.track_id, T));
      }
      Eigen::Matrix<double, Eigen::Dynamic, 3> samples(T, 3);
      for (int t = 0; t < T; ++t) samples.row(t) = tr.position[std::size_t(t)].transpose();
      fits[k] = fitter.fit(samples);
    });

    GaussianSet records;
    std::string csv = "track_id,instance_id,axis,residual_rms";
    for (int c = 0; c < spec.dim(); ++c) csv += fmt::format(",c{}", c);
    csv += "\n";
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
      GaussianRecord g;
      g.kind = GaussianKind::Dynamic;
      g.track_id = trajectories[k].track_id;
      g.instance_id = trajectories[k].instance_id;
      auto params = DeformationParams<double>::zero(spec);
      params.position = fits[k].curve.coefficients;
      g.mu0 = params.mu0();
      g.deformation = std::move(params);
      records.push_back(std::move(g));
      for (int axis = 0; axis < 3; ++axis) {
        csv += fmt::format("{},{},{},{}", g.track_id, g.instance_id, "xyz"[axis], fits[k].residual_rms(axis));
        for (int c = 0; c < spec.dim(); ++c) csv += fmt::format(",{}", fits[k].curve.coefficients(axis, c));
        csv += "\n";
      }
    }
    io::write_gaussians_ply(rec.output(kEncodePly), records, spec);
    io::write_file(rec.output(kEncodeCsv), csv);
  });
}

void run_init(const PipelineConfig& config, const fs::path& out, const RunOptions& options) {
  stage("init", config, out, [&](StageRecorder& rec) {
    const auto cams = load_cameras(rec, config);
    const int T = static_cast<int>(cams.size());
    const auto trajectories = read_trajectories(rec.input(out / kFlowTrajectories));
    const auto encoded = io::read_gaussians_ply(rec.input(out / kEncodePly));
    const auto masks = load_track_masks(rec, out, T);

    std::map<std::int64_t, const GaussianRecord*> by_track;
    for (const auto& g : encoded.records) {
      if (g.is_dynamic()) by_track[g.track_id] = &g;
    }
    std::vector<PolyFourierCurve<double>> curves;
    std::set<int> needed;
    for (int t = 0; t < T; t += config.init.static_stride) needed.insert(t);
    for (const auto& tr : trajectories) {
      const auto it = by_track.find(tr.track_id);
      if (it == by_track.end() || !it->second->deformation) {
        throw Error(ErrorCode::MissingInput, fmt::format("no encoded curve for track {}", tr.track_id));
      }
      curves.push_back({encoded.spec, it->second->deformation->position});
      needed.insert(tr.query_frame());
    }

    const fs::path rgb_dir = require_dir(rec, config.dataset / "rgb");
    std::vector<RgbImage> images(static_cast<std::size_t>(T));
    for (int t : needed) images[std::size_t(t)] = io::read_rgb_pfm(rec.input(rgb_dir / io::frame_name(t, "pfm")));
    const auto depths = load_depths(rec, config, T, needed);

    ScaleParams scale{config.init.k_scale, config.init.eps_log, config.init.r_min, config.init.r_max};
    StaticSamplingParams sp;
    sp.stride = config.init.static_stride;
    sp.n_per_frame = config.init.n_per_frame;
    sp.sigma = config.init.log_sigma;
    sp.opacity = config.init.opacity;
    sp.scale = scale;
    sp.seed = config.seed;
    sp.jobs = options.jobs;
    rec.parameter("static_stride", sp.stride);
    rec.parameter("n_per_frame", sp.n_per_frame);
    rec.parameter("log_sigma", sp.sigma);
    rec.parameter("k_scale", scale.k_scale);
    rec.parameter("eps_log", scale.eps_log);
    rec.parameter("r_min", scale.r_min);
    rec.parameter("r_max", scale.r_max);
    rec.parameter("opacity", sp.opacity);
    rec.parameter("seed", config.seed);

    GaussianSet records = sample_static(images, masks, depths, cams, sp);

    std::vector<int> query(needed.begin(), needed.end());
    std::vector<LogMap> logs(query.size());
    parallel_for(query.size(), options.jobs,
                 [&](std::size_t k) { logs[k] = log_magnitude(images[std::size_t(query[k])], config.init.log_sigma); });
    std::map<int, FrameData> frames;
    for (std::size_t k = 0; k < query.size(); ++k) {
      const auto f = std::size_t(query[k]);
      frames[query[k]] = {&images[f], &logs[k], &depths[f], &cams[f]};
    }
    const GaussianSet dynamic = init_dynamic(trajectories, curves, frames, scale, config.init.opacity);
    records.insert(records.end(), dynamic.begin(), dynamic.end());
    io::write_gaussians_ply(rec.output(kInitPly), records, encoded.spec);
    spdlog::info("init: {} static + {} dynamic Gaussians", records.size() - dynamic.size(), dynamic.size());
  });
}

void run_pipeline(const PipelineConfig& config, const fs::path& out, const RunOptions& options) {
  validate(config);
  fs::create_directories(out);
  write_config(config, out);
  const fs::path tp = timings_path(out);
  if (fs::exists(tp)) fs::remove(tp);
  run_detect(config, out, options);
  run_track(config, out, options);
  run_flow(config, out, options);
  run_encode(config, out, options);
  run_init(config, out, options);
}

// ---------------------------------------------------------------------------

bool VerifyReport::masks_ok() const {
  if (instances.empty() || !unmatched_truth.empty()) return false;
  return std::all_of(instances.begin(), instances.end(), [](const InstanceIou& r) { return r.min_iou == 1.0; });
}

bool VerifyReport::trajectories_ok() const {
  return tracks > 0 && missing_truth == 0 && trajectory_rmse < rmse_tolerance;
}

std::string VerifyReport::table() const {
  std::string s = "instance  truth  frames  min_iou   mean_iou\n";
  for (const auto& r : instances) {
    s += fmt::format("{:>8}  {:>5}  {:>6}  {:<8.6f}  {:<8.6f}\n", r.predicted, r.truth, r.frames, r.min_iou, r.mean_iou);
  }
  for (auto id : unmatched_truth) s += fmt::format("truth instance {} has no prediction\n", id);
  s += fmt::format("\ndynamic tracks  {}\nmissing truth   {}\nrmse            {:.3e}\nmax error       {:.3e}\n", tracks,
                   missing_truth, trajectory_rmse, trajectory_max);
  s += fmt::format("masks           {}\ntrajectories    {} (rmse < {:.0e})\n", masks_ok() ? "PASS" : "FAIL",
                   trajectories_ok() ? "PASS" : "FAIL", rmse_tolerance);
  return s;
}

VerifyReport verify(const fs::path& dataset, const fs::path& out, double rmse_tolerance) {
  VerifyReport report;
  report.rmse_tolerance = rmse_tolerance;
  const auto cams = io::read_cameras(dataset / "cameras.json");
  const int T = static_cast<int>(cams.size());

  // Masks: each predicted instance is matched to the truth id it overlaps most.
  std::vector<InstanceMaskFrame> pred, truth;
  for (int t = 0; t < T; ++t) {
    pred.push_back(io::read_masks(out / kTrackMasks / io::frame_name(t, "pgm")));
    truth.push_back(io::read_masks(dataset / "gt" / "masks" / io::frame_name(t, "pgm")));
  }
  std::map<InstanceId, std::map<InstanceId, long>> overlap;
  std::set<InstanceId> truth_ids;
  for (int t = 0; t < T; ++t) {
    const auto& p = pred[std::size_t(t)].ids;
    const auto& g = truth[std::size_t(t)].ids;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (g(i) != 0) truth_ids.insert(g(i));
      if (p(i) != 0) ++overlap[p(i)][g(i)];
    }
  }
  std::set<InstanceId> matched;
  for (const auto& [pid, counts] : overlap) {
    InstanceIou row;
    row.predicted = pid;
    long best = 0;
    for (const auto& [gid, n] : counts) {
      if (gid != 0 && n > best) {
        best = n;
        row.truth = gid;
      }
    }
    row.min_iou = 1.0;
    double sum = 0.0;
    for (int t = 0; t < T; ++t) {
      const Mask a = pred[std::size_t(t)].ids == pid;
      const Mask b = row.truth == 0 ? Mask(Mask::Constant(a.rows(), a.cols(), false)) : Mask(truth[std::size_t(t)].ids == row.truth);
      const long uni = (a || b).count();
      if (uni == 0) continue;
      const double iou = double((a && b).count()) / double(uni);
      row.min_iou = std::min(row.min_iou, iou);
      sum += iou;
      ++row.frames;
    }
    row.mean_iou = row.frames ? sum / row.frames : 0.0;
    if (row.truth == 0) row.min_iou = 0.0;
    matched.insert(row.truth);
    report.instances.push_back(row);
  }
  for (auto id : truth_ids) {
    if (!matched.count(id)) report.unmatched_truth.push_back(id);
  }

  // Trajectories: every dynamic record against its ground-truth track.
  std::map<std::int64_t, std::vector<Vector3<double>>> gt;
  {
    std::istringstream in(io::read_file(dataset / "gt" / "trajectories.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string f;
      std::vector<std::string> fields;
      while (std::getline(ls, f, ',')) fields.push_back(f);
      if (fields.size() != 6) throw Error(ErrorCode::MalformedHeader, "gt trajectories: 6 fields expected");
      try {
        auto& v = gt[std::stoll(fields[0])];
        const int t = std::stoi(fields[1]);
        if (t < 0) throw std::out_of_range("frame");
        if (int(v.size()) <= t) v.resize(std::size_t(t + 1), Vector3<double>::Zero());
        v[std::size_t(t)] = {std::stod(fields[2]), std::stod(fields[3]), std::stod(fields[4])};
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::MalformedHeader, "gt trajectories: bad row '" + line + "'");
      }
    }
  }
  const auto ply = io::read_gaussians_ply(out / kInitPly);
  double se = 0.0;
  long n = 0;
  for (const auto& g : ply.records) {
    if (!g.is_dynamic() || !g.deformation) continue;
    const auto it = gt.find(g.track_id);
    if (it == gt.end() || int(it->second.size()) != T) {
      ++report.missing_truth;
      continue;
    }
    ++report.tracks;
    for (int t = 0; t < T; ++t) {
      const double e = (eval_position(*g.deformation, ply.spec.normalized_time(t)) - it->second[std::size_t(t)]).norm();
      se += e * e;
      report.trajectory_max = std::max(report.trajectory_max, e);
      ++n;
    }
  }
  report.trajectory_rmse = n ? std::sqrt(se / double(n)) : std::numeric_limits<double>::infinity();
  return report;
}

}  // namespace dyninit::pipeline
