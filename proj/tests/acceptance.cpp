// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: acceptance --cli <path to dyninit> --work <dir>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <string>

#include <sys/wait.h>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dyninit/config.hpp"
#include "dyninit/detection.hpp"
#include "dyninit/io.hpp"
#include "dyninit/losses.hpp"
#include "dyninit/pipeline.hpp"
#include "dyninit/scene_flow.hpp"
#include "dyninit/synthetic.hpp"
#include "dyninit/trajectory.hpp"

using namespace dyninit;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances, one block per criterion.
constexpr double kC1StaticMax = 1e-6;
constexpr double kC1DynamicFraction = 0.99;
constexpr double kC1MinDisplacement = 2.0;
constexpr double kC1Seconds = 10.0;
constexpr double kC2Exact = 1e-9;
constexpr double kC2Robust = 1e-6;
constexpr double kC2RobustFraction = 0.99;
constexpr double kC3Rmse = 1e-5;
constexpr double kC4Coefficient = 1e-8;
constexpr double kC4Residual = 1e-10;
constexpr double kC5Norm = 1e-12;
constexpr double kC6Step = 1e-6;
constexpr double kC6Relative = 1e-5;
constexpr double kC7Affine = 1e-9;
constexpr double kC7Anti = 1e-9;
constexpr double kC9Rmse = 1e-4;
constexpr double kC9Seconds = 120.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Matrix3<double> random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Quaternion<double>(n(rng), n(rng), n(rng), n(rng)).normalized().toRotationMatrix();
}

Vector3<double> random_vector(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

// ---------------------------------------------------------------------------

Outcome epipolar_exactness() {
  const synth::SyntheticScene scene(synth::default_scene());
  const auto& spec = scene.spec();
  long static_n = 0, dynamic_n = 0, dynamic_hit = 0, undefined = 0;
  double static_max = 0.0, elapsed = 0.0;
  const int min_area = min_area_pixels(spec.width, spec.height);
  for (int t = 0; t + 1 < spec.frame_count; ++t) {
    const auto frame = scene.render_frame(t);
    const auto flow = scene.render_flow(t, frame);
    const auto start = std::chrono::steady_clock::now();
    const auto err = sampson_error(flow, fundamental_matrix(scene.camera(t), scene.camera(t + 1)));
    const Mask dynamic = threshold_dynamic(err, kDefaultTauEpi);
    (void)detect_dynamic(flow, scene.camera(t), scene.camera(t + 1), kDefaultTauEpi, min_area);
    elapsed += seconds_since(start);
    for (Eigen::Index i = 0; i < err.error.size(); ++i) {
      if (std::isnan(err.error(i))) {
        ++undefined;
        continue;
      }
      if (frame.masks.ids(i) == 0) {
        ++static_n;
        static_max = std::max(static_max, err.error(i));
      } else if (std::hypot(flow.u(i), flow.v(i)) >= kC1MinDisplacement) {
        ++dynamic_n;
        dynamic_hit += dynamic(i) ? 1 : 0;
      }
    }
  }
  const double fraction = dynamic_n ? double(dynamic_hit) / double(dynamic_n) : 0.0;
  Outcome o;
  o.pass = static_n > 0 && static_max < kC1StaticMax && dynamic_n > 0 && fraction >= kC1DynamicFraction &&
           elapsed < kC1Seconds;
  o.detail = fmt::format(
      "static max {:.2e} over {} px (< {:.0e}); dynamic >= {} px flagged {}/{} = {:.4f} (>= {}); {} px with target "
      "outside the image excluded; {:.2f} s (< {} s)",
      static_max, static_n, kC1StaticMax, kC1MinDisplacement, dynamic_hit, dynamic_n, fraction, kC1DynamicFraction,
      undefined, elapsed, kC1Seconds);
  return o;
}

Outcome rigid_recovery() {
  std::mt19937_64 rng(20260101);
  double worst_rot = 0.0, worst_t = 0.0;
  int robust_ok = 0;
  const int trials = 1000;
  for (int trial = 0; trial < trials; ++trial) {
    const Rigid g{random_rotation(rng), random_vector(rng, -5.0, 5.0)};
    std::vector<Vector3<double>> src, dst;
    for (int i = 0; i < 50; ++i) {
      src.push_back(random_vector(rng, -1.0, 1.0));
      dst.push_back(g(src.back()));
    }
    RansacParams params;
    params.seed = std::uint64_t(trial);
    const Rigid est = estimate_rigid(src, dst, params).transform;
    worst_rot = std::max(worst_rot, geodesic_distance(est.R, g.R));
    worst_t = std::max(worst_t, (est.t - g.t).norm());

    // 30% of the destinations replaced by uniform points in the target's bounding box
    Vector3<double> lo = dst.front(), hi = dst.front();
    for (const auto& p : dst) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto noisy = dst;
    for (int i = 0; i < 15; ++i) {
      for (int a = 0; a < 3; ++a) noisy[std::size_t(i)](a) = lo(a) + u(rng) * (hi(a) - lo(a));
    }
    params.inlier_tol = 1e-3;
    const Rigid robust = estimate_rigid(src, noisy, params).transform;
    if (geodesic_distance(robust.R, g.R) < kC2Robust && (robust.t - g.t).norm() < kC2Robust) ++robust_ok;
  }
  const double fraction = double(robust_ok) / trials;
  Outcome o;
  o.pass = worst_rot < kC2Exact && worst_t < kC2Exact && fraction >= kC2RobustFraction;
  o.detail = fmt::format("noiseless worst rotation {:.2e} rad, translation {:.2e} (< {:.0e}); 30% outliers {}/{} within "
                         "{:.0e} (>= {})",
                         worst_rot, worst_t, kC2Exact, robust_ok, trials, kC2Robust, kC2RobustFraction);
  return o;
}

Outcome occlusion_fill() {
  // One rigid instance, 50 tracks, 40 frames. Tracks 0-9 (20%) are occluded for
  // frames 15-24; tracks 10-14 first appear at frame 12.
  std::mt19937_64 rng(77);
  const int T = 40, n = 50;
  std::vector<Rigid> pairs;
  for (int t = 0; t + 1 < T; ++t) {
    const Vector3<double> axis = random_vector(rng, -1.0, 1.0).normalized();
    pairs.push_back({Eigen::AngleAxisd(0.03, axis).toRotationMatrix(), random_vector(rng, -0.05, 0.05)});
  }
  std::vector<Trajectory3D> tracks;
  std::vector<std::vector<Vector3<double>>> truth;
  for (int i = 0; i < n; ++i) {
    std::vector<Vector3<double>> path = {random_vector(rng, -1.0, 1.0) + Vector3<double>(0, 0, 4)};
    for (int t = 0; t + 1 < T; ++t) path.push_back(pairs[std::size_t(t)](path.back()));
    Trajectory3D tr(T);
    tr.track_id = i;
    tr.instance_id = 1;
    for (int t = 0; t < T; ++t) {
      if (i < 10 && t >= 15 && t < 25) continue;
      if (i >= 10 && i < 15 && t < 12) continue;
      tr.position[std::size_t(t)] = path[std::size_t(t)];
      tr.provenance[std::size_t(t)] = Provenance::Observed;
    }
    tracks.push_back(tr);
    truth.push_back(path);
  }
  std::vector<Trajectory3D*> group;
  for (auto& tr : tracks) group.push_back(&tr);
  const auto motion = refine_forward(group, 1, RefineParams{});
  refine_backward(group, motion);

  double se_fwd = 0.0, se_bwd = 0.0;
  long n_fwd = 0, n_bwd = 0;
  bool provenance_ok = true;
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < T; ++t) {
      const auto f = std::size_t(t);
      const double e = (tracks[std::size_t(i)].position[f] - truth[std::size_t(i)][f]).squaredNorm();
      if (i < 10 && t >= 15 && t < 25) {
        se_fwd += e;
        ++n_fwd;
        provenance_ok &= tracks[std::size_t(i)].provenance[f] == Provenance::RigidForward;
      } else if (i >= 10 && i < 15 && t < 12) {
        se_bwd += e;
        ++n_bwd;
        provenance_ok &= tracks[std::size_t(i)].provenance[f] == Provenance::RigidBackward;
      }
    }
  }
  const double rmse_fwd = std::sqrt(se_fwd / double(n_fwd)), rmse_bwd = std::sqrt(se_bwd / double(n_bwd));
  Outcome o;
  o.pass = rmse_fwd < kC3Rmse && rmse_bwd < kC3Rmse && provenance_ok;
  o.detail = fmt::format("occluded span RMSE {:.2e} over {} samples, pre-appearance RMSE {:.2e} over {} samples "
                         "(< {:.0e}); provenance {}",
                         rmse_fwd, n_fwd, rmse_bwd, n_bwd, kC3Rmse, provenance_ok ? "ok" : "wrong");
  return o;
}

BasisSpec basis(int d_pol, int d_fourier, int frames) {
  BasisSpec s;
  s.d_pol = d_pol;
  s.d_fourier = d_fourier;
  s.frame_count = frames;
  return s;
}

MatrixX<double> random_matrix(int rows, int cols, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  MatrixX<double> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
  return m;
}

Outcome poly_fourier_recovery() {
  std::mt19937_64 rng(4);
  const BasisSpec s = basis(3, 8, 100);
  const TrajectoryFitter<double> fitter(s);
  double coeff = 0.0, residual = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const MatrixX<double> truth = random_matrix(3, s.dim(), rng, 1.0);
    const auto fit = fitter.fit(fitter.design() * truth.transpose());
    coeff = std::max(coeff, (fit.curve.coefficients - truth).cwiseAbs().maxCoeff());
    residual = std::max(residual, fit.residual_rms.maxCoeff());
  }
  Outcome o;
  o.pass = coeff < kC4Coefficient && residual < kC4Residual;
  o.detail = fmt::format("100 fits, worst coefficient error {:.2e} (< {:.0e}), worst residual RMS {:.2e} (< {:.0e})",
                         coeff, kC4Coefficient, residual, kC4Residual);
  return o;
}

DeformationParams<double> random_params(const BasisSpec& s, std::mt19937_64& rng, double rot_scale) {
  auto p = DeformationParams<double>::zero(s);
  p.position = random_matrix(3, s.dim(), rng, 1.0);
  p.rotation = random_matrix(4, s.dim() - 1, rng, rot_scale);
  std::normal_distribution<double> n(0.0, 1.0);
  p.q0 = Quaternion<double>(n(rng), n(rng), n(rng), n(rng)).normalized();
  return p;
}

Outcome rotation_contract() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const BasisSpec s = basis(3, 8, 60);
  double worst = 0.0;
  long exact = 0, degenerate = 0;
  const long samples = 100000;
  for (long k = 0; k < samples; ++k) {
    const auto p = random_params(s, rng, 0.3);
    const double tau = u(rng);
    try {
      worst = std::max(worst, std::abs(eval_rotation(p, tau).norm() - 1.0));
    } catch (const Error&) {
      ++degenerate;
    }
    auto zero = DeformationParams<double>::zero(s);
    zero.q0 = p.q0;
    if (eval_rotation(zero, tau).coeffs() == p.q0.coeffs()) ++exact;
  }
  Outcome o;
  o.pass = worst < kC5Norm && exact == samples && degenerate == 0;
  o.detail = fmt::format("{} samples: worst | |q| - 1 | = {:.2e} (< {:.0e}); zero coefficients gave q0 exactly {}/{}; "
                         "{} degenerate",
                         samples, worst, kC5Norm, exact, samples, degenerate);
  return o;
}

Outcome gradient_checks() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const BasisSpec s = basis(3, 8, 60);
  const int n = s.dim() - 1;
  double worst_pos = 0.0, worst_rot = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_params(s, rng, 0.2);
    const double tau = u(rng);
    const auto Jp = jacobian_position(p, tau);
    MatrixX<double> fd_p(3, 3 * s.dim());
    for (int axis = 0; axis < 3; ++axis) {
      for (int k = 0; k < s.dim(); ++k) {
        auto plus = p, minus = p;
        plus.position(axis, k) += kC6Step;
        minus.position(axis, k) -= kC6Step;
        fd_p.col(axis * s.dim() + k) = (eval_position(plus, tau) - eval_position(minus, tau)) / (2.0 * kC6Step);
      }
    }
    worst_pos = std::max(worst_pos, (fd_p - Jp).cwiseAbs().maxCoeff() / Jp.cwiseAbs().maxCoeff());

    const auto Jr = jacobian_rotation(p, tau);
    MatrixX<double> fd_r(4, 4 * n);
    const auto wxyz = [](const Quaternion<double>& q) { return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z()); };
    for (int c = 0; c < 4; ++c) {
      for (int k = 0; k < n; ++k) {
        auto plus = p, minus = p;
        plus.rotation(c, k) += kC6Step;
        minus.rotation(c, k) -= kC6Step;
        fd_r.col(c * n + k) = (wxyz(eval_rotation(plus, tau)) - wxyz(eval_rotation(minus, tau))) / (2.0 * kC6Step);
      }
    }
    worst_rot = std::max(worst_rot, (fd_r - Jr).cwiseAbs().maxCoeff() / Jr.cwiseAbs().maxCoeff());
  }
  Outcome o;
  o.pass = worst_pos < kC6Relative && worst_rot < kC6Relative;
  o.detail = fmt::format("100 samples, step {:.0e}: worst relative error position {:.2e}, rotation {:.2e} (< {:.0e}; "
                         "max-abs difference over max-abs analytic entry)",
                         kC6Step, worst_pos, worst_rot, kC6Relative);
  return o;
}

Outcome pearson_invariance() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> depth(0.5, 20.0), scale(0.01, 100.0), shift(-50.0, 50.0);
  double worst = 0.0, worst_anti = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Raster<float> d(48, 64);
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = float(depth(rng));
    const float a = float(scale(rng)), b = float(shift(rng));
    const Raster<float> affine = a * d + b;
    const Raster<float> anti = -a * d + b;
    worst = std::max(worst, pearson_depth_loss(d, affine));
    worst_anti = std::max(worst_anti, std::abs(pearson_depth_loss(d, anti) - 2.0));
  }
  Outcome o;
  o.pass = worst < kC7Affine && worst_anti < kC7Anti;
  o.detail = fmt::format("100 float rasters: worst loss(d, a d + b) {:.2e} (< {:.0e}); worst |loss(d, -a d + b) - 2| "
                         "{:.2e} (< {:.0e})",
                         worst, kC7Affine, worst_anti, kC7Anti);
  return o;
}

template <typename T>
bool same_bits(const T& a, const T& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(*a.data()) * std::size_t(a.size())) == 0;
}

Outcome format_round_trips(const fs::path& work) {
  const fs::path dir = work / "formats";
  fs::create_directories(dir);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> size(1, 40);
  std::uniform_real_distribution<float> val(-1e3f, 1e3f);
  std::map<std::string, int> ok;
  const auto reemit = [&](const fs::path& a, const fs::path& b) { return io::read_file(a) == io::read_file(b); };
  for (int trial = 0; trial < 50; ++trial) {
    const int w = size(rng), h = size(rng);

    DepthMap depth;
    depth.values.resize(h, w);
    for (Eigen::Index i = 0; i < depth.values.size(); ++i) depth.values(i) = val(rng);
    io::write_pfm(dir / "d.pfm", depth);
    const auto depth_back = io::read_pfm(dir / "d.pfm");
    io::write_pfm(dir / "d2.pfm", depth_back);
    RgbImage rgb(w, h);
    for (int c = 0; c < 3; ++c)
      for (Eigen::Index i = 0; i < rgb.r.size(); ++i) rgb.channel(c)(i) = val(rng);
    io::write_rgb_pfm(dir / "c.pfm", rgb);
    const auto rgb_back = io::read_rgb_pfm(dir / "c.pfm");
    if (same_bits(depth.values, depth_back.values) && reemit(dir / "d.pfm", dir / "d2.pfm") &&
        same_bits(rgb.r, rgb_back.r) && same_bits(rgb.g, rgb_back.g) && same_bits(rgb.b, rgb_back.b)) {
      ++ok["PFM"];
    }

    // valid flow stays below max(width, height) in magnitude
    FlowField flow(w, h);
    const float reach = 0.7f * float(std::max(w, h));
    std::uniform_real_distribution<float> disp(-reach, reach);
    for (Eigen::Index i = 0; i < flow.u.size(); ++i) {
      flow.u(i) = disp(rng);
      flow.v(i) = disp(rng);
    }
    io::write_flo(dir / "f.flo", flow);
    const auto flow_back = io::read_flo(dir / "f.flo");
    io::write_flo(dir / "f2.flo", flow_back);
    if (same_bits(flow.u, flow_back.u) && same_bits(flow.v, flow_back.v) && reemit(dir / "f.flo", dir / "f2.flo")) {
      ++ok["flo"];
    }

    InstanceMaskFrame masks(trial, w, h);
    std::uniform_int_distribution<int> id(0, 65535);
    for (Eigen::Index i = 0; i < masks.ids.size(); ++i) {
      masks.ids(i) = InstanceId(id(rng) % 4 == 0 ? 0 : id(rng));
      if (masks.ids(i) != 0) masks.confidence[masks.ids(i)] = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    }
    io::write_masks(dir / "m.pgm", masks);
    const auto masks_back = io::read_masks(dir / "m.pgm");
    io::write_masks(dir / "m2.pgm", masks_back);
    if (same_bits(masks.ids, masks_back.ids) && masks.confidence == masks_back.confidence &&
        masks.frame_index == masks_back.frame_index && reemit(dir / "m.pgm", dir / "m2.pgm") &&
        reemit(io::mask_sidecar_path(dir / "m.pgm"), io::mask_sidecar_path(dir / "m2.pgm"))) {
      ++ok["PGM masks"];
    }

    TrackTable tracks;
    std::uniform_real_distribution<double> px(0.0, double(w - 1)), py(0.0, double(h - 1)), far(-1e6, 1e6);
    const int n_tracks = size(rng);
    for (int k = 0; k < n_tracks; ++k) {
      for (int t = 0; t < 5; ++t) {
        const bool visible = (rng() % 3) != 0;
        tracks.push_back({std::int64_t(k) * 1000003, t, visible ? px(rng) : far(rng), visible ? py(rng) : far(rng), visible});
      }
    }
    io::write_tracks(dir / "t.csv", tracks);
    const auto tracks_back = io::read_tracks(dir / "t.csv", w, h);
    io::write_tracks(dir / "t2.csv", tracks_back);
    bool tracks_same = tracks_back.size() == tracks.size();
    for (std::size_t k = 0; tracks_same && k < tracks.size(); ++k) {
      tracks_same = tracks[k].track_id == tracks_back[k].track_id && tracks[k].frame == tracks_back[k].frame &&
                    std::memcmp(&tracks[k].x, &tracks_back[k].x, sizeof(double)) == 0 &&
                    std::memcmp(&tracks[k].y, &tracks_back[k].y, sizeof(double)) == 0 &&
                    tracks[k].visible == tracks_back[k].visible;
    }
    if (tracks_same && reemit(dir / "t.csv", dir / "t2.csv")) ++ok["tracks CSV"];

    // PLY stores float32, so record values are drawn as floats.
    const BasisSpec spec = basis(trial % 4, trial % 5, 30);
    GaussianSet records;
    const auto f = [&]() { return double(val(rng)); };
    const int n_static = size(rng) - 1, n_dynamic = size(rng) - 1;
    for (int k = 0; k < n_static + n_dynamic; ++k) {
      GaussianRecord g;
      g.kind = k < n_static ? GaussianKind::Static : GaussianKind::Dynamic;
      g.mu0 = {f(), f(), f()};
      g.q0 = Quaternion<double>(f(), f(), f(), f());
      g.log_scale = {f(), f(), f()};
      g.opacity = double(float(std::uniform_real_distribution<double>(0.0, 1.0)(rng)));
      g.color = {f(), f(), f()};
      if (g.is_dynamic()) {
        g.instance_id = InstanceId(1 + rng() % 65535);
        g.track_id = std::int64_t(rng() % 2000000000);
        auto p = DeformationParams<double>::zero(spec);
        for (Eigen::Index i = 0; i < p.position.size(); ++i) p.position(i) = f();
        for (Eigen::Index i = 0; i < p.rotation.size(); ++i) p.rotation(i) = f();
        p.position.col(0) = g.mu0;
        p.q0 = g.q0;
        g.deformation = p;
      }
      records.push_back(g);
    }
    io::write_gaussians_ply(dir / "g.ply", records, spec);
    const auto ply = io::read_gaussians_ply(dir / "g.ply");
    io::write_gaussians_ply(dir / "g2.ply", ply.records, ply.spec);
    bool ply_same = ply.records.size() == records.size() && ply.spec.d_pol == spec.d_pol &&
                    ply.spec.d_fourier == spec.d_fourier && ply.spec.frame_count == spec.frame_count &&
                    ply.spec.omega == spec.omega;
    for (std::size_t k = 0; ply_same && k < records.size(); ++k) {
      const auto& a = records[k];
      const auto& b = ply.records[k];
      ply_same = a.kind == b.kind && a.mu0 == b.mu0 && a.q0.coeffs() == b.q0.coeffs() && a.log_scale == b.log_scale &&
                 a.opacity == b.opacity && a.color == b.color && a.instance_id == b.instance_id &&
                 a.track_id == b.track_id && a.deformation.has_value() == b.deformation.has_value();
      if (ply_same && a.deformation) {
        ply_same = a.deformation->position == b.deformation->position &&
                   a.deformation->rotation == b.deformation->rotation;
      }
    }
    if (ply_same && reemit(dir / "g.ply", dir / "g2.ply")) ++ok["PLY"];
  }
  Outcome o;
  o.pass = true;
  std::string parts;
  for (const char* name : {"PFM", "flo", "PGM masks", "tracks CSV", "PLY"}) {
    o.pass &= ok[name] == 50;
    parts += fmt::format("{}{} {}/50", parts.empty() ? "" : ", ", name, ok[name]);
  }
  o.detail = parts + " bitwise identical after read and re-write";
  return o;
}

int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = fmt::format("\"{}\" {} > \"{}\" 2>&1", cli, args, log.string());
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = io::read_file(e.path());
  }
  return out;
}

Outcome end_to_end(const std::string& cli, const fs::path& work) {
  const fs::path dir = work / "e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path data = dir / "data";
  Outcome o;
  if (const int rc = run_cli(cli, fmt::format("synth --out \"{}\"", data.string()), dir / "synth.log"); rc != 0) {
    o.detail = fmt::format("synth exited {} (see {})", rc, (dir / "synth.log").string());
    return o;
  }
  double worst_seconds = 0.0;
  for (const char* name : {"run_a", "run_b"}) {
    const auto start = std::chrono::steady_clock::now();
    const int rc = run_cli(cli, fmt::format("run --config \"{}\" --out \"{}\"", (data / "pipeline.toml").string(),
                                            (dir / name).string()),
                           dir / (std::string(name) + ".log"));
    worst_seconds = std::max(worst_seconds, seconds_since(start));
    if (rc != 0) {
      o.detail = fmt::format("{} exited {} (see {})", name, rc, (dir / (std::string(name) + ".log")).string());
      return o;
    }
  }
  const auto a = snapshot(dir / "run_a"), b = snapshot(dir / "run_b");
  std::string first_diff;
  for (const auto& [name, bytes] : a) {
    if (!b.count(name) || b.at(name) != bytes) {
      first_diff = name;
      break;
    }
  }
  const bool identical = a.size() == b.size() && first_diff.empty();
  const int verify_rc = run_cli(
      cli, fmt::format("verify --dataset \"{}\" --out \"{}\"", data.string(), (dir / "run_a").string()), dir / "verify.log");
  const auto report = pipeline::verify(data, dir / "run_a", kC9Rmse);
  double min_iou = report.instances.empty() ? 0.0 : 1.0;
  for (const auto& r : report.instances) min_iou = std::min(min_iou, r.min_iou);
  o.pass = identical && verify_rc == 0 && report.passed() && report.trajectory_rmse < kC9Rmse && min_iou == 1.0 &&
           worst_seconds < kC9Seconds;
  o.detail = fmt::format("{} files, reruns {}; verify exit {}; {} dynamic tracks RMSE {:.2e} (< {:.0e}); min IoU {} over "
                         "{} instances; slowest run {:.1f} s (< {} s)",
                         a.size(), identical ? "byte-identical" : "differ at " + first_diff, verify_rc, report.tracks,
                         report.trajectory_rmse, kC9Rmse, min_iou, report.instances.size(), worst_seconds, kC9Seconds);
  return o;
}

Outcome constants_conformance() {
  const std::string toml = to_toml(PipelineConfig{});
  const std::vector<std::pair<std::string, std::string>> expected = {
      {"detect", "tau_epi = 3.0"},       {"track", "tau_mask = 0.8"},     {"encode", "d_pol = 3"},
      {"encode", "d_fourier = 32"},      {"loss", "lambda_ssim = 0.2"},   {"loss", "lambda_depth = 0.2"},
      {"init", "static_stride = 20"},    {"flow", "n_tracks = 10000"}};
  const auto parsed = config_from_toml(toml);
  std::string missing;
  for (const auto& [table, line] : expected) {
    const auto at = toml.find("[" + table + "]\n");
    const auto next = toml.find("\n[", at + 1);
    const auto hit = toml.find("\n" + line + "\n", at);
    if (at == std::string::npos || hit == std::string::npos || (next != std::string::npos && hit > next)) {
      missing += (missing.empty() ? "" : ", ") + table + "." + line;
    }
  }
  Outcome o;
  o.pass = missing.empty() && parsed == PipelineConfig{};
  o.detail = missing.empty() ? fmt::format("all {} defaults present in the serialised config and re-parse equal",
                                           expected.size())
                             : "missing: " + missing;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dyninit acceptance suite"};
  std::string cli, work = "acceptance_work";
  app.add_option("--cli", cli, "Path to the dyninit executable")->required();
  app.add_option("--work", work, "Scratch directory");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);
  fs::create_directories(work);

  const std::vector<std::tuple<int, std::string, std::function<Outcome()>>> criteria = {
      {1, "epipolar exactness", epipolar_exactness},
      {2, "rigid recovery", rigid_recovery},
      {3, "occlusion fill", occlusion_fill},
      {4, "poly-Fourier exact recovery", poly_fourier_recovery},
      {5, "rotation contract", rotation_contract},
      {6, "gradient checks", gradient_checks},
      {7, "Pearson affine invariance", pearson_invariance},
      {8, "format round trips", [&] { return format_round_trips(work); }},
      {9, "end-to-end determinism", [&] { return end_to_end(cli, work); }},
      {10, "constants conformance", constants_conformance},
  };
  int failed = 0;
  for (const auto& [id, name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    failed += o.pass ? 0 : 1;
    std::cout << fmt::format("[{}] {} {}: {}", o.pass ? "PASS" : "FAIL", id, name, o.detail) << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - std::size_t(failed), criteria.size())
            << std::endl;
  return failed == 0 ? 0 : 1;
}
