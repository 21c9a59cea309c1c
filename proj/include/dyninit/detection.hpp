// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "dyninit/geometry.hpp"
#include "dyninit/raster.hpp"

namespace dyninit {

/// Sampson error of the flow correspondences between frames (t, t + 1).
/// NaN marks pixels whose flow target leaves the image.
struct EpipolarErrorMap {
  int frame = 0;
  Raster<double> error;
};

/// Axis-aligned box with inclusive pixel bounds and the pixel count of the
/// component it encloses.
struct Box {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int area = 0;

  bool operator==(const Box&) const = default;
};

struct DynamicRegionSet {
  int frame = 0;
  Mask mask;               // only the components that survived the area filter
  std::vector<Box> boxes;  // area descending
};

inline constexpr double kDefaultTauEpi = 3.0;
inline constexpr double kDefaultMinAreaFraction = 0.0005;

EpipolarErrorMap sampson_error(const FlowField& flow, const Matrix3<double>& F);

/// err > tau; NaN pixels are never dynamic.
Mask threshold_dynamic(const EpipolarErrorMap& err, double tau_epi);

/// 8-connected components of `mask`; components smaller than min_area are dropped.
DynamicRegionSet extract_regions(const Mask& mask, int min_area, int frame = 0);

int min_area_pixels(int width, int height, double fraction = kDefaultMinAreaFraction);

/// Runs the full per-pair detector. Returns an empty region set when the two
/// cameras share a centre (no epipolar constraint).
DynamicRegionSet detect_dynamic(const FlowField& flow, const Camera& cam_t, const Camera& cam_next, double tau_epi,
                                int min_area);

}  // namespace dyninit
