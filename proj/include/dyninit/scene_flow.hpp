// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dyninit/geometry.hpp"
#include "dyninit/raster.hpp"

namespace dyninit {

enum class Provenance { Missing, Observed, RigidForward, RigidBackward, Interpolated };

const char* to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

/// A track lifted to 3D. Frames run over [0, T).
struct Trajectory3D {
  std::int64_t track_id = 0;
  InstanceId instance_id = 0;
  std::vector<Vector3<double>> position;
  std::vector<Provenance> provenance;
  std::vector<Vector2<double>> pixel;  // observed pixel, NaN when the track has no record
  std::vector<bool> observed_visible;  // visibility flag as ingested

  explicit Trajectory3D(int frame_count = 0);

  int frame_count() const { return static_cast<int>(position.size()); }
  bool valid(int t) const { return provenance[std::size_t(t)] != Provenance::Missing; }
  bool total() const;
  /// First frame with an observed (lifted) position, -1 if none.
  int query_frame() const;
};

struct InstanceMotion {
  InstanceId instance_id = 0;
  std::vector<Rigid> pairs;  // frame t -> t + 1
  std::vector<int> inliers;
};

/// Majority vote over visible observations (background included). Ties go to
/// the smaller nonzero id; background wins only with a strict majority. Tracks
/// without visible observations map to 0.
std::map<std::int64_t, InstanceId> assign_tracks(const TrackTable& tracks, const std::vector<InstanceMaskFrame>& masks);

/// Lifts every track with nearest-pixel depth. Observations over missing depth
/// become invisible. Tracks absent from `assignment` get instance 0.
std::vector<Trajectory3D> lift_tracks(const TrackTable& tracks, const std::vector<DepthMap>& depths,
                                      const std::vector<Camera>& cams,
                                      const std::map<std::int64_t, InstanceId>& assignment = {});

struct RansacParams {
  double inlier_tol = 1e-3;
  int max_iters = 256;
  std::uint64_t seed = 0;
};

struct RigidEstimate {
  Rigid transform;
  std::vector<int> inliers;
};

/// Closed-form least-squares rotation and translation with dst ~ R src + t.
Rigid kabsch(const std::vector<Vector3<double>>& src, const std::vector<Vector3<double>>& dst);

RigidEstimate estimate_rigid(const std::vector<Vector3<double>>& src, const std::vector<Vector3<double>>& dst,
                             const RansacParams& params);

struct RefineParams {
  int max_iters = 256;
  double tol_fraction = 0.02;  // of the instance bounding-box diagonal
  std::uint64_t seed = 0;
};

/// Estimates per-pair motions of one instance from co-visible tracks and fills
/// positions forward (R P + t).
InstanceMotion refine_forward(std::vector<Trajectory3D*>& instance, InstanceId id, const RefineParams& params);

/// Fills positions backward with the inverse pair motions.
void refine_backward(std::vector<Trajectory3D*>& instance, const InstanceMotion& motion);

/// Linear interpolation between bracketing valid frames, constant extension at
/// the ends.
void interpolate_gaps(Trajectory3D& trajectory);

struct SceneFlowParams {
  RefineParams refine;
  int jobs = 1;
};

struct SceneFlowResult {
  std::vector<Trajectory3D> trajectories;  // dynamic, total, sorted by track id
  std::vector<InstanceMotion> motions;     // sorted by instance id
};

/// assign -> lift -> refine forward/backward -> interpolate, one worker per instance.
SceneFlowResult compute_scene_flow(const TrackTable& tracks, const std::vector<InstanceMaskFrame>& masks,
                                   const std::vector<DepthMap>& depths, const std::vector<Camera>& cams,
                                   const SceneFlowParams& params);

// Trajectory CSV: track header columns plus X,Y,Z,provenance,instance_id.
inline constexpr const char* kTrajectoriesHeader = "track_id,frame,x,y,visible,X,Y,Z,provenance,instance_id";
void write_trajectories(const std::filesystem::path& path, const std::vector<Trajectory3D>& trajectories);
std::vector<Trajectory3D> read_trajectories(const std::filesystem::path& path);

std::string motions_to_json(const std::vector<InstanceMotion>& motions);

}  // namespace dyninit
