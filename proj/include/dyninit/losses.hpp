// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "dyninit/raster.hpp"

namespace dyninit {

struct LossWeights {
  double lambda_ssim = 0.2;
  double lambda_depth = 0.2;
};

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;
};

/// Mean |img - ref| over unmasked pixels and all channels. `mask` selects the
/// pixels that count.
double l1_loss(const RgbImage& img, const RgbImage& ref, const std::optional<Mask>& mask = std::nullopt);

/// Mean SSIM of one channel over all positions where the window fits.
double ssim(const Raster<float>& a, const Raster<float>& b, const SsimParams& params = {});

/// 1 - channel-averaged mean SSIM.
double ssim_loss(const RgbImage& img, const RgbImage& ref, const SsimParams& params = {});

/// 1 - Pearson correlation over the valid pixels (all pixels when no mask).
double pearson_depth_loss(const Raster<float>& d, const Raster<float>& ref, const std::optional<Mask>& valid = std::nullopt);
double pearson_depth_loss(const Raster<double>& d, const Raster<double>& ref,
                          const std::optional<Mask>& valid = std::nullopt);

struct LossTerms {
  double l1 = 0.0;
  double ssim = 0.0;
  double depth = 0.0;
  double total = 0.0;
};

/// (1 - l_ssim) L1 + l_ssim SSIM + l_depth depth.
LossTerms combined_loss(const RgbImage& img, const RgbImage& ref, const Raster<float>& d, const Raster<float>& ref_d,
                        const LossWeights& weights = {}, const std::optional<Mask>& depth_valid = std::nullopt);

/// Peak signal-to-noise ratio in dB on [0, 1] images; infinite for identical inputs.
double psnr(const RgbImage& img, const RgbImage& ref);

}  // namespace dyninit
