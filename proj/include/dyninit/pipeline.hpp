// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dyninit/config.hpp"
#include "dyninit/raster.hpp"

namespace dyninit::pipeline {

namespace fs = std::filesystem;

// Output directory layout, relative to the run directory.
inline constexpr const char* kConfigFile = "config.toml";
inline constexpr const char* kDetectMasks = "detect/masks";
inline constexpr const char* kDetectRegions = "detect/regions.json";
inline constexpr const char* kTrackMasks = "track/masks";
inline constexpr const char* kTrackTimelines = "track/timelines.json";
inline constexpr const char* kFlowTrajectories = "flow/trajectories.csv";
inline constexpr const char* kFlowMotions = "flow/motions.json";
inline constexpr const char* kEncodePly = "encode/coefficients.ply";
inline constexpr const char* kEncodeCsv = "encode/coefficients.csv";
inline constexpr const char* kInitPly = "init/gaussians.ply";
inline constexpr const char* kManifests = "manifests";

struct RunOptions {
  int jobs = 1;
};

/// Wall-clock timings go next to the run directory (<out>.timings.json) so
/// that the directory itself is a pure function of config and inputs.
fs::path timings_path(const fs::path& out);

// Each stage reads only files (dataset and earlier stage outputs) and writes
// its outputs plus manifests/<stage>.json. Failures rethrow with the stage name.
void run_detect(const PipelineConfig& config, const fs::path& out, const RunOptions& options = {});
void run_track(const PipelineConfig& config, const fs::path& out, const RunOptions& options = {});
void run_flow(const PipelineConfig& config, const fs::path& out, const RunOptions& options = {});
void run_encode(const PipelineConfig& config, const fs::path& out, const RunOptions& options = {});
void run_init(const PipelineConfig& config, const fs::path& out, const RunOptions& options = {});

/// Writes <out>/config.toml and runs every stage in order.
void run_pipeline(const PipelineConfig& config, const fs::path& out, const RunOptions& options = {});

/// Writes <out>/config.toml (stages run individually need it for reruns).
void write_config(const PipelineConfig& config, const fs::path& out);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

struct InstanceIou {
  InstanceId predicted = 0;
  InstanceId truth = 0;
  double min_iou = 0.0;
  double mean_iou = 0.0;
  int frames = 0;
};

struct VerifyReport {
  std::vector<InstanceIou> instances;
  std::vector<InstanceId> unmatched_truth;
  std::size_t tracks = 0;
  std::size_t missing_truth = 0;  // dynamic records without a ground-truth track
  double trajectory_rmse = 0.0;
  double trajectory_max = 0.0;
  double rmse_tolerance = 1e-4;

  bool masks_ok() const;
  bool trajectories_ok() const;
  bool passed() const { return masks_ok() && trajectories_ok(); }
  std::string table() const;
};

/// Compares a run directory against the dataset's ground truth (gt/).
VerifyReport verify(const fs::path& dataset, const fs::path& out, double rmse_tolerance = 1e-4);

}  // namespace dyninit::pipeline
