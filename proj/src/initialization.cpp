// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dyninit/initialization.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dyninit/parallel.hpp"

namespace dyninit {

namespace {

int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * n - 2 - i;
  return i;
}

Raster<double> convolve_rows(const Raster<double>& in, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  const int H = static_cast<int>(in.rows()), W = static_cast<int>(in.cols());
  Raster<double> out(H, W);
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      double s = 0.0;
      for (int d = -r; d <= r; ++d) s += k[std::size_t(d + r)] * in(i, reflect101(j + d, W));
      out(i, j) = s;
    }
  }
  return out;
}

Raster<double> convolve_cols(const Raster<double>& in, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  const int H = static_cast<int>(in.rows()), W = static_cast<int>(in.cols());
  Raster<double> out(H, W);
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      double s = 0.0;
      for (int d = -r; d <= r; ++d) s += k[std::size_t(d + r)] * in(reflect101(i + d, H), j);
      out(i, j) = s;
    }
  }
  return out;
}

}  // namespace

LogMap log_magnitude(const RgbImage& image, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "LoG sigma must be positive");
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> g(static_cast<std::size_t>(2 * radius + 1)), g2(g.size());
  double gsum = 0.0;
  for (int x = -radius; x <= radius; ++x) {
    g[std::size_t(x + radius)] = std::exp(-0.5 * x * x / (sigma * sigma));
    gsum += g[std::size_t(x + radius)];
  }
  double g2sum = 0.0;
  for (int x = -radius; x <= radius; ++x) {
    auto& gx = g[std::size_t(x + radius)];
    gx /= gsum;
    g2[std::size_t(x + radius)] = (x * x - sigma * sigma) / std::pow(sigma, 4) * gx;
    g2sum += g2[std::size_t(x + radius)];
  }
  for (auto& v : g2) v -= g2sum / double(g2.size());

  const Raster<double> gray = 0.299 * image.r.cast<double>() + 0.587 * image.g.cast<double>() +
                              0.114 * image.b.cast<double>();
  const Raster<double> lxx = convolve_cols(convolve_rows(gray, g2), g);
  const Raster<double> lyy = convolve_cols(convolve_rows(gray, g), g2);
  LogMap out;
  out.sigma = sigma;
  out.values = (lxx + lyy).abs();
  return out;
}

Vector3<double> estimate_scale(const LogMap& log_map, double depth, const Camera& cam, int row, int col,
                               const ScaleParams& params) {
  if (!(depth > 0.0)) throw Error(ErrorCode::NonPositiveDepth, fmt::format("depth {} at ({}, {})", depth, col, row));
  const double radius = std::clamp(params.k_scale / (log_map.values(row, col) + params.eps_log), params.r_min,
                                   params.r_max);
  return Vector3<double>::Constant(radius * depth / cam.fx());
}

std::vector<Eigen::Index> weighted_sample(const Raster<double>& weight, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<double, Eigen::Index>> keys;
  for (Eigen::Index i = 0; i < weight.size(); ++i) {
    const double u = unit(rng);
    if (weight(i) > 0.0) keys.emplace_back(-std::log1p(-u) / weight(i), i);
  }
  const std::size_t k = std::min<std::size_t>(keys.size(), std::size_t(std::max(n, 0)));
  std::partial_sort(keys.begin(), keys.begin() + std::ptrdiff_t(k), keys.end());
  std::vector<Eigen::Index> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(keys[i].second);
  return out;
}

GaussianSet sample_static(const std::vector<RgbImage>& images, const std::vector<InstanceMaskFrame>& masks,
                          const std::vector<DepthMap>& depths, const std::vector<Camera>& cams,
                          const StaticSamplingParams& params) {
  if (params.stride < 1) throw Error(ErrorCode::InvalidArgument, "static stride must be >= 1");
  const int T = static_cast<int>(cams.size());
  if (int(images.size()) != T || int(depths.size()) != T || int(masks.size()) != T) {
    throw Error(ErrorCode::DimensionMismatch, "images, masks, depths and cameras differ in frame count");
  }
  std::vector<int> frames;
  for (int t = 0; t < T; t += params.stride) frames.push_back(t);

  std::vector<GaussianSet> per_frame(frames.size());
  parallel_for(frames.size(), params.jobs, [&](std::size_t k) {
    const int t = frames[k];
    const auto f = std::size_t(t);
    const LogMap log_map = log_magnitude(images[f], params.sigma);
    Raster<double> P = log_map.values;
    const auto& ids = masks[f].ids;
    const auto& depth = depths[f].values;
    for (Eigen::Index i = 0; i < P.size(); ++i) {
      if (ids(i) != 0 || !(depth(i) > 0.0f)) P(i) = 0.0;
    }
    if (!(P.sum() > 0.0)) {
      spdlog::warn("{}: frame {} has no sampling mass, skipped",
                   to_string(ErrorCode::AllMaskedFrame), t);
      return;
    }
    std::seed_seq seq{std::uint64_t(params.seed), std::uint64_t(t)};
    std::mt19937_64 rng(seq);
    const int W = static_cast<int>(P.cols());
    for (Eigen::Index idx : weighted_sample(P, params.n_per_frame, rng)) {
      const int row = static_cast<int>(idx / W);
      const int col = static_cast<int>(idx % W);
      const double z = depth(row, col);
      GaussianRecord g;
      g.kind = GaussianKind::Static;
      g.mu0 = unproject(Vector2<double>(col, row), z, cams[f]);
      g.log_scale = estimate_scale(log_map, z, cams[f], row, col, params.scale).array().log();
      g.opacity = params.opacity;
      g.color = {images[f].r(row, col), images[f].g(row, col), images[f].b(row, col)};
      per_frame[k].push_back(g);
    }
  });
  GaussianSet out;
  for (auto& g : per_frame) out.insert(out.end(), g.begin(), g.end());
  return out;
}

GaussianSet init_dynamic(const std::vector<Trajectory3D>& trajectories,
                         const std::vector<PolyFourierCurve<double>>& curves, const std::map<int, FrameData>& frames,
                         const ScaleParams& scale, double opacity) {
  if (curves.size() != trajectories.size()) throw Error(ErrorCode::DimensionMismatch, "one curve per trajectory expected");
  GaussianSet out;
  out.reserve(trajectories.size());
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const auto& tr = trajectories[k];
    const auto& curve = curves[k];
    if (curve.coefficients.rows() != 3 || curve.coefficients.cols() != curve.spec.dim()) {
      throw Error(ErrorCode::DimensionMismatch, fmt::format("track {}: curve is not 3 x dim", tr.track_id));
    }
    const int q = tr.query_frame();
    if (q < 0) throw Error(ErrorCode::EmptyTrajectory, fmt::format("track {} has no observed frame", tr.track_id));
    const auto fd = frames.find(q);
    if (fd == frames.end() || !fd->second.image || !fd->second.log_map || !fd->second.depth || !fd->second.camera) {
      throw Error(ErrorCode::MissingInput, fmt::format("frame {} data needed by track {}", q, tr.track_id));
    }
    const auto& data = fd->second;
    int row = 0, col = 0;
    const auto& px = tr.pixel[std::size_t(q)];
    if (!nearest_pixel(px.x(), px.y(), data.image->width(), data.image->height(), row, col)) {
      throw Error(ErrorCode::OutOfBoundsPixel, fmt::format("track {} query pixel", tr.track_id));
    }
    GaussianRecord g;
    g.kind = GaussianKind::Dynamic;
    g.track_id = tr.track_id;
    g.instance_id = tr.instance_id;
    g.opacity = opacity;
    g.color = {data.image->r(row, col), data.image->g(row, col), data.image->b(row, col)};
    const double z = data.camera->to_camera(tr.position[std::size_t(q)]).z();
    g.log_scale = estimate_scale(*data.log_map, z, *data.camera, row, col, scale).array().log();
    auto params = DeformationParams<double>::zero(curve.spec);
    params.position = curve.coefficients;
    g.mu0 = params.mu0();
    g.q0 = params.q0;
    g.deformation = std::move(params);
    out.push_back(std::move(g));
  }
  return out;
}

GaussianSet filter_by_instance(const GaussianSet& records, const InstanceFilter& filter) {
  GaussianSet out;
  for (const auto& g : records) {
    bool keep;
    if (!g.is_dynamic()) {
      keep = filter.include_static;
    } else {
      const bool listed = filter.ids.count(g.instance_id) > 0;
      keep = filter.mode == InstanceFilter::Mode::Keep ? listed : !listed;
    }
    if (keep) out.push_back(g);
  }
  return out;
}

}  // namespace dyninit
