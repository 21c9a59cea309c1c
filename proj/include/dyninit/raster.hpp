// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Core>

namespace dyninit {

/// Row-major image plane: rows() = height, cols() = width. Pixel (row i, col j)
/// has its centre at x = j, y = i.
template <typename T>
using Raster = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Mask = Raster<bool>;
using InstanceId = std::uint16_t;

/// Depth in scene units; 0.0 marks a missing sample.
struct DepthMap {
  int frame_index = 0;
  Raster<float> values;

  int width() const { return static_cast<int>(values.cols()); }
  int height() const { return static_cast<int>(values.rows()); }
  bool valid(int row, int col) const { return values(row, col) != 0.0f; }
};

/// Per-pixel displacement from frame t to t + 1, in pixels.
struct FlowField {
  Raster<float> u;
  Raster<float> v;

  FlowField() = default;
  FlowField(int width, int height) : u(Raster<float>::Zero(height, width)), v(Raster<float>::Zero(height, width)) {}

  int width() const { return static_cast<int>(u.cols()); }
  int height() const { return static_cast<int>(u.rows()); }
};

/// Linear RGB in [0, 1].
struct RgbImage {
  Raster<float> r, g, b;

  RgbImage() = default;
  RgbImage(int width, int height)
      : r(Raster<float>::Zero(height, width)), g(Raster<float>::Zero(height, width)), b(Raster<float>::Zero(height, width)) {}

  int width() const { return static_cast<int>(r.cols()); }
  int height() const { return static_cast<int>(r.rows()); }

  const Raster<float>& channel(int c) const { return c == 0 ? r : (c == 1 ? g : b); }
  Raster<float>& channel(int c) { return c == 0 ? r : (c == 1 ? g : b); }
};

/// Instance label map; 0 is static background. Every nonzero id present in
/// `ids` has an entry in `confidence`.
struct InstanceMaskFrame {
  int frame_index = 0;
  Raster<InstanceId> ids;
  std::map<InstanceId, double> confidence;

  InstanceMaskFrame() = default;
  InstanceMaskFrame(int frame, int width, int height) : frame_index(frame), ids(Raster<InstanceId>::Zero(height, width)) {}

  int width() const { return static_cast<int>(ids.cols()); }
  int height() const { return static_cast<int>(ids.rows()); }

  Mask mask_of(InstanceId id) const { return ids == id; }
  Mask dynamic_mask() const { return ids != InstanceId(0); }
};

struct TrackObservation {
  std::int64_t track_id = 0;
  int frame = 0;
  double x = 0.0;
  double y = 0.0;
  bool visible = false;

  bool operator==(const TrackObservation&) const = default;
};

using TrackTable = std::vector<TrackObservation>;

/// Nearest pixel of a sub-pixel location; false when it falls outside the raster.
inline bool nearest_pixel(double x, double y, int width, int height, int& row, int& col) {
  if (!(x >= 0.0 && y >= 0.0 && x <= width - 1.0 && y <= height - 1.0)) return false;
  col = static_cast<int>(std::lround(x));
  row = static_cast<int>(std::lround(y));
  return true;
}

}  // namespace dyninit
