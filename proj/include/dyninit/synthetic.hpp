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

namespace dyninit::synth {

/// Scripted rigid motion over normalised time tau = t / (T - 1):
///   R(tau) = AngleAxis(rotation_phase + 2 pi rotation_harmonic tau, rotation_axis)
///   t(tau) = origin + velocity tau + sin_amplitude sin(2 pi harmonic tau) + cos_amplitude cos(2 pi harmonic tau)
/// Frames before static_until hold the pose of frame static_until.
struct MotionSpec {
  Vector3<double> origin = Vector3<double>::Zero();
  Vector3<double> velocity = Vector3<double>::Zero();
  Vector3<double> sin_amplitude = Vector3<double>::Zero();
  Vector3<double> cos_amplitude = Vector3<double>::Zero();
  int harmonic = 1;
  Vector3<double> rotation_axis = Vector3<double>::UnitZ();
  double rotation_phase = 0.0;
  int rotation_harmonic = 0;
  int static_until = 0;
};

enum class Shape { Patch, Box };

struct ObjectSpec {
  InstanceId instance_id = 1;
  Shape shape = Shape::Patch;
  Vector3<double> offset = Vector3<double>::Zero();  // point-set centre in the object frame
  double size = 0.5;
  int grid = 32;  // samples per side (per face for boxes)
  Vector3<double> color = {0.8, 0.2, 0.2};
  double confidence = 0.95;  // what the oracle segmenter reports for this object
  MotionSpec motion;
};

struct CameraPathSpec {
  double fx = 100.0, fy = 100.0, cx = 63.5, cy = 63.5;
  MotionSpec motion;  // camera centre and camera-to-world rotation
};

struct BackgroundSpec {
  double depth = 8.0;     // world z of the fronto-parallel plane
  double extent = 6.0;    // half side length
  double spacing = 0.04;  // sample spacing
};

struct SceneSpec {
  int frame_count = 60;
  int width = 128;
  int height = 128;
  std::uint64_t seed = 7;
  CameraPathSpec camera;
  BackgroundSpec background;
  std::vector<ObjectSpec> objects;
};

/// Two textured patches orbiting the optical axis in front of a textured wall,
/// camera dollying forward. All motion lies in the Poly-Fourier span for d_F >= 3.
SceneSpec default_scene();

std::string to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const std::string& text);

struct FrameRender {
  RgbImage rgb;
  DepthMap depth;
  InstanceMaskFrame masks;
  Raster<std::int32_t> winner;  // point index per pixel, -1 if empty
  Raster<double> z;             // winner camera depth in double precision
};

struct TrackTruth {
  std::int64_t track_id = 0;
  InstanceId instance_id = 0;
  std::size_t point_index = 0;
  Eigen::Matrix<double, Eigen::Dynamic, 3> positions;  // T x 3 world positions
};

struct GroundTruth {
  std::vector<TrackTruth> tracks;
  std::map<InstanceId, std::vector<Rigid>> pair_motion;  // t -> t + 1 for t in [0, T - 1)
};

/// Point-set scene with exact analytic ground truth.
class SyntheticScene {
 public:
  explicit SyntheticScene(SceneSpec spec);

  const SceneSpec& spec() const { return spec_; }
  int frame_count() const { return spec_.frame_count; }

  Camera camera(int t) const;
  std::vector<Camera> cameras() const;
  Rigid object_pose(std::size_t object, int t) const;

  std::size_t point_count() const { return local_.size(); }
  Vector3<double> world_point(std::size_t point, int t) const;
  InstanceId point_instance(std::size_t point) const;

  /// z-buffered splatting with a 1-pixel footprint; ties keep the lower point index.
  FrameRender render_frame(int t) const;

  /// Exact flow t -> t + 1 at pixel centres: the centre is unprojected at the
  /// winner's depth, moved with the winner's rigid motion and reprojected.
  FlowField render_flow(int t) const;
  FlowField render_flow(int t, const FrameRender& frame) const;

  /// Per-pixel length of the motion a pixel's surface sample undergoes beyond
  /// what the camera motion alone explains (0 for background).
  Raster<double> object_displacement(int t, const FrameRender& frame) const;

  /// Samples up to n_tracks object points and reports them in every frame;
  /// visible means the point wins the z-buffer at its pixel.
  TrackTable render_tracks(int n_tracks, std::uint64_t seed) const;
  GroundTruth ground_truth(int n_tracks, std::uint64_t seed) const;

 private:
  std::vector<std::size_t> sample_track_points(int n_tracks, std::uint64_t seed) const;

  SceneSpec spec_;
  std::vector<Vector3<double>> local_;  // point in its object frame (world for background)
  std::vector<Vector3<float>> color_;
  std::vector<int> object_;             // -1 for background
  std::size_t first_object_point_ = 0;
};

// Free-function forms.
FrameRender render_frame(const SceneSpec& spec, int t);
FlowField render_flow(const SceneSpec& spec, int t);
TrackTable render_tracks(const SceneSpec& spec, int n_tracks, std::uint64_t seed);
GroundTruth ground_truth(const SceneSpec& spec, int n_tracks, std::uint64_t seed);

/// Writes a complete dataset directory:
///   scene.json, cameras.json, rgb/, depth/, flow/, tracks.csv,
///   gt/masks/ (instance PGM + sidecars), gt/trajectories.csv, gt/motions.json
void write_dataset(const SceneSpec& spec, int n_tracks, std::uint64_t track_seed, const std::filesystem::path& dir);

}  // namespace dyninit::synth
