// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dyninit/geometry.hpp"
#include "dyninit/raster.hpp"
#include "dyninit/trajectory.hpp"

namespace dyninit {

enum class GaussianKind { Static, Dynamic };

struct GaussianRecord {
  GaussianKind kind = GaussianKind::Static;
  Vector3<double> mu0 = Vector3<double>::Zero();
  Quaternion<double> q0 = Quaternion<double>::Identity();
  Vector3<double> log_scale = Vector3<double>::Zero();
  double opacity = 0.1;
  Vector3<double> color = Vector3<double>::Zero();
  // Dynamic records only.
  InstanceId instance_id = 0;
  std::int64_t track_id = -1;
  std::optional<DeformationParams<double>> deformation;

  bool is_dynamic() const { return kind == GaussianKind::Dynamic; }
};

using GaussianSet = std::vector<GaussianRecord>;

}  // namespace dyninit
