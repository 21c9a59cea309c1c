// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>

namespace dyninit {

/// Every stage parameter of the pipeline. Serialised as a flat TOML file with
/// one table per stage.
struct PipelineConfig {
  std::filesystem::path dataset;
  std::uint64_t seed = 0;

  struct Detect {
    double tau_epi = 3.0;
    double min_area_fraction = 0.0005;
    int stride = 1;

    bool operator==(const Detect&) const = default;
  } detect;

  struct Track {
    double tau_mask = 0.8;
    int propagation_interval = 10;
    std::string provider = "oracle";  // oracle | files
    std::filesystem::path provider_dir = "provider_masks";

    bool operator==(const Track&) const = default;
  } track;

  struct Flow {
    int n_tracks = 10000;
    int ransac_iters = 256;
    double ransac_tol_fraction = 0.02;

    bool operator==(const Flow&) const = default;
  } flow;

  struct Encode {
    int d_pol = 3;
    int d_fourier = 32;
    double omega = 2.0 * std::numbers::pi;
    double ridge = 0.0;

    bool operator==(const Encode&) const = default;
  } encode;

  struct Init {
    int static_stride = 20;
    int n_per_frame = 4000;
    double log_sigma = 1.6;
    double k_scale = 1.5;
    double eps_log = 1e-4;
    double r_min = 0.5;
    double r_max = 8.0;
    double opacity = 0.1;

    bool operator==(const Init&) const = default;
  } init;

  struct Loss {
    double lambda_ssim = 0.2;
    double lambda_depth = 0.2;

    bool operator==(const Loss&) const = default;
  } loss;

  bool operator==(const PipelineConfig&) const = default;
};

std::string to_toml(const PipelineConfig& config);

/// A relative dataset path resolves against `base`; a relative provider_dir
/// resolves against the dataset at run time.
PipelineConfig config_from_toml(const std::string& text, const std::filesystem::path& base = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Range checks on every field; throws InvalidArgument.
void validate(const PipelineConfig& config);

}  // namespace dyninit
