// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dyninit/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

namespace dyninit {

EpipolarErrorMap sampson_error(const FlowField& flow, const Matrix3<double>& F) {
  if (flow.u.rows() != flow.v.rows() || flow.u.cols() != flow.v.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "flow components differ in size");
  }
  const int width = flow.width();
  const int height = flow.height();
  EpipolarErrorMap out;
  out.error.resize(height, width);
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      const double xt = col + double(flow.u(row, col));
      const double yt = row + double(flow.v(row, col));
      if (!(xt >= 0.0 && yt >= 0.0 && xt <= width - 1.0 && yt <= height - 1.0)) {
        out.error(row, col) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const Vector3<double> x(col, row, 1.0);
      const Vector3<double> xp(xt, yt, 1.0);
      const Vector3<double> Fx = F * x;
      const Vector3<double> Ftxp = F.transpose() * xp;
      const double num = xp.dot(Fx);
      const double den = Fx(0) * Fx(0) + Fx(1) * Fx(1) + Ftxp(0) * Ftxp(0) + Ftxp(1) * Ftxp(1);
      out.error(row, col) = den > 0.0 ? num * num / den : 0.0;
    }
  }
  return out;
}

Mask threshold_dynamic(const EpipolarErrorMap& err, double tau_epi) {
  if (!(tau_epi > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau_epi must be positive");
  // NaN compares false.
  return err.error > tau_epi;
}

DynamicRegionSet extract_regions(const Mask& mask, int min_area, int frame) {
  const int height = static_cast<int>(mask.rows());
  const int width = static_cast<int>(mask.cols());
  DynamicRegionSet out;
  out.frame = frame;
  out.mask = Mask::Constant(height, width, false);

  Raster<int> label = Raster<int>::Constant(height, width, -1);
  std::vector<std::pair<int, int>> stack;
  std::vector<std::pair<int, int>> component;
  for (int r0 = 0; r0 < height; ++r0) {
    for (int c0 = 0; c0 < width; ++c0) {
      if (!mask(r0, c0) || label(r0, c0) >= 0) continue;
      component.clear();
      stack.assign(1, {r0, c0});
      label(r0, c0) = 1;
      Box box{c0, r0, c0, r0, 0};
      while (!stack.empty()) {
        const auto [r, c] = stack.back();
        stack.pop_back();
        component.emplace_back(r, c);
        box.x0 = std::min(box.x0, c);
        box.x1 = std::max(box.x1, c);
        box.y0 = std::min(box.y0, r);
        box.y1 = std::max(box.y1, r);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = r + dr;
            const int cc = c + dc;
            if (rr < 0 || cc < 0 || rr >= height || cc >= width) continue;
            if (!mask(rr, cc) || label(rr, cc) >= 0) continue;
            label(rr, cc) = 1;
            stack.emplace_back(rr, cc);
          }
        }
      }
      box.area = static_cast<int>(component.size());
      if (box.area < min_area) continue;
      for (const auto& [r, c] : component) out.mask(r, c) = true;
      out.boxes.push_back(box);
    }
  }
  std::stable_sort(out.boxes.begin(), out.boxes.end(), [](const Box& a, const Box& b) { return a.area > b.area; });
  return out;
}

int min_area_pixels(int width, int height, double fraction) {
  return static_cast<int>(std::ceil(fraction * double(width) * double(height)));
}

DynamicRegionSet detect_dynamic(const FlowField& flow, const Camera& cam_t, const Camera& cam_next, double tau_epi,
                                int min_area) {
  Matrix3<double> F;
  try {
    F = fundamental_matrix(cam_t, cam_next);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateBaseline) throw;
    spdlog::warn("frame {}: {}; no detections from this pair", cam_t.frame_index, e.what());
    DynamicRegionSet empty;
    empty.frame = cam_t.frame_index;
    empty.mask = Mask::Constant(flow.height(), flow.width(), false);
    return empty;
  }
  return extract_regions(threshold_dynamic(sampson_error(flow, F), tau_epi), min_area, cam_t.frame_index);
}

}  // namespace dyninit
