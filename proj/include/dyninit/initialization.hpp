// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "dyninit/gaussians.hpp"
#include "dyninit/geometry.hpp"
#include "dyninit/raster.hpp"
#include "dyninit/scene_flow.hpp"
#include "dyninit/trajectory.hpp"

namespace dyninit {

/// |LoG| of the luma image (0.299, 0.587, 0.114).
struct LogMap {
  Raster<double> values;
  double sigma = 1.6;
};

/// Separable Laplacian-of-Gaussian, kernel radius ceil(4 sigma), reflect-101 borders.
LogMap log_magnitude(const RgbImage& image, double sigma = 1.6);

struct ScaleParams {
  double k_scale = 1.5;  // pixels
  double eps_log = 1e-4;
  double r_min = 0.5;  // pixels
  double r_max = 8.0;  // pixels
};

/// Isotropic scale clamp(k / (LoG + eps), r_min, r_max) * depth / fx at the pixel.
Vector3<double> estimate_scale(const LogMap& log_map, double depth, const Camera& cam, int row, int col,
                               const ScaleParams& params = {});

/// Draws up to n distinct pixels with probability proportional to weight
/// (exponential-key weighted sampling without replacement). Returned as flat
/// row-major indices in draw order.
std::vector<Eigen::Index> weighted_sample(const Raster<double>& weight, int n, std::mt19937_64& rng);

struct StaticSamplingParams {
  int stride = 20;
  int n_per_frame = 4000;
  double sigma = 1.6;
  double opacity = 0.1;
  ScaleParams scale;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Static Gaussians from frames 0, stride, 2 stride, ... with P = LoG outside
/// instance masks and 0 inside them or over missing depth.
GaussianSet sample_static(const std::vector<RgbImage>& images, const std::vector<InstanceMaskFrame>& masks,
                          const std::vector<DepthMap>& depths, const std::vector<Camera>& cams,
                          const StaticSamplingParams& params);

struct FrameData {
  const RgbImage* image = nullptr;
  const LogMap* log_map = nullptr;
  const DepthMap* depth = nullptr;
  const Camera* camera = nullptr;
};

/// One dynamic record per trajectory, colour and scale taken at its query-frame
/// pixel. `frames` must hold every query frame.
GaussianSet init_dynamic(const std::vector<Trajectory3D>& trajectories,
                         const std::vector<PolyFourierCurve<double>>& curves, const std::map<int, FrameData>& frames,
                         const ScaleParams& scale = {}, double opacity = 0.1);

struct InstanceFilter {
  enum class Mode { Keep, Remove };
  Mode mode = Mode::Remove;
  std::set<InstanceId> ids;
  bool include_static = true;
};

GaussianSet filter_by_instance(const GaussianSet& records, const InstanceFilter& filter);

}  // namespace dyninit
