// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dyninit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/format.h>

#include "dyninit/errors.hpp"

namespace dyninit {

namespace {

void check_same(const RgbImage& a, const RgbImage& b) {
  for (int c = 0; c < 3; ++c) {
    if (a.channel(c).rows() != b.channel(c).rows() || a.channel(c).cols() != b.channel(c).cols() ||
        a.channel(c).rows() != a.r.rows() || a.channel(c).cols() != a.r.cols()) {
      throw Error(ErrorCode::DimensionMismatch,
                  fmt::format("images {}x{} and {}x{}", a.width(), a.height(), b.width(), b.height()));
    }
  }
}

template <typename A, typename B>
void check_same(const A& a, const B& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch, fmt::format("{}: {}x{} vs {}x{}", what, a.cols(), a.rows(), b.cols(), b.rows()));
  }
}

}  // namespace

double l1_loss(const RgbImage& img, const RgbImage& ref, const std::optional<Mask>& mask) {
  check_same(img, ref);
  if (mask) check_same(*mask, img.r, "mask");
  double sum = 0.0;
  long count = 0;
  for (int c = 0; c < 3; ++c) {
    const auto& a = img.channel(c);
    const auto& b = ref.channel(c);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (mask && !(*mask)(i)) continue;
      sum += std::abs(double(a(i)) - double(b(i)));
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::EmptyMask, "L1 loss over an empty pixel set");
  return sum / double(count);
}

double ssim(const Raster<float>& a, const Raster<float>& b, const SsimParams& params) {
  check_same(a, b, "ssim");
  const int n = params.window;
  const int H = static_cast<int>(a.rows()), W = static_cast<int>(a.cols());
  if (H < n || W < n) throw Error(ErrorCode::ImageTooSmall, fmt::format("{}x{} below the {}x{} window", W, H, n, n));
  std::vector<double> g(static_cast<std::size_t>(n));
  double gs = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = i - (n - 1) / 2.0;
    g[std::size_t(i)] = std::exp(-x * x / (2.0 * params.sigma * params.sigma));
    gs += g[std::size_t(i)];
  }
  for (auto& v : g) v /= gs;

  double total = 0.0;
  for (int r0 = 0; r0 + n <= H; ++r0) {
    for (int c0 = 0; c0 + n <= W; ++c0) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double w = g[std::size_t(i)] * g[std::size_t(j)];
          const double x = a(r0 + i, c0 + j), y = b(r0 + i, c0 + j);
          mx += w * x;
          my += w * y;
          sxx += w * x * x;
          syy += w * y * y;
          sxy += w * x * y;
        }
      }
      const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
      total += ((2 * mx * my + params.c1) * (2 * cxy + params.c2)) /
               ((mx * mx + my * my + params.c1) * (vx + vy + params.c2));
    }
  }
  return total / double((H - n + 1) * (W - n + 1));
}

double ssim_loss(const RgbImage& img, const RgbImage& ref, const SsimParams& params) {
  check_same(img, ref);
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += ssim(img.channel(c), ref.channel(c), params);
  return 1.0 - s / 3.0;
}

namespace {

template <typename T>
double pearson_impl(const Raster<T>& d, const Raster<T>& ref, const std::optional<Mask>& valid) {
  check_same(d, ref, "depth");
  if (valid) check_same(*valid, d, "valid mask");
  double sx = 0, sy = 0;
  long n = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (valid && !(*valid)(i)) continue;
    sx += d(i);
    sy += ref(i);
    ++n;
  }
  if (n < 2) throw Error(ErrorCode::EmptyMask, "Pearson loss needs at least 2 valid pixels");
  const double mx = sx / double(n), my = sy / double(n);
  double vxx = 0, vyy = 0, vxy = 0, ax = 0, ay = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (valid && !(*valid)(i)) continue;
    const double x = d(i) - mx, y = ref(i) - my;
    vxx += x * x;
    vyy += y * y;
    vxy += x * y;
    ax = std::max(ax, std::abs(double(d(i))));
    ay = std::max(ay, std::abs(double(ref(i))));
  }
  // Variance below the rounding level of the data counts as constant.
  const double eps = std::numeric_limits<T>::epsilon();
  if (std::sqrt(vxx / double(n)) <= eps * std::max(ax, 1e-30) || std::sqrt(vyy / double(n)) <= eps * std::max(ay, 1e-30)) {
    throw Error(ErrorCode::DegenerateVariance, "depth raster has zero variance");
  }
  const double rho = std::clamp(vxy / std::sqrt(vxx * vyy), -1.0, 1.0);
  return 1.0 - rho;
}

}  // namespace

double pearson_depth_loss(const Raster<float>& d, const Raster<float>& ref, const std::optional<Mask>& valid) {
  return pearson_impl(d, ref, valid);
}

double pearson_depth_loss(const Raster<double>& d, const Raster<double>& ref, const std::optional<Mask>& valid) {
  return pearson_impl(d, ref, valid);
}

LossTerms combined_loss(const RgbImage& img, const RgbImage& ref, const Raster<float>& d, const Raster<float>& ref_d,
                        const LossWeights& weights, const std::optional<Mask>& depth_valid) {
  if (!(weights.lambda_ssim >= 0.0 && weights.lambda_ssim <= 1.0 && weights.lambda_depth >= 0.0 &&
        weights.lambda_depth <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "loss weights must lie in [0, 1]");
  }
  LossTerms t;
  t.l1 = l1_loss(img, ref);
  t.ssim = ssim_loss(img, ref);
  t.depth = pearson_depth_loss(d, ref_d, depth_valid);
  t.total = (1.0 - weights.lambda_ssim) * t.l1 + weights.lambda_ssim * t.ssim + weights.lambda_depth * t.depth;
  return t;
}

double psnr(const RgbImage& img, const RgbImage& ref) {
  check_same(img, ref);
  double se = 0.0;
  for (int c = 0; c < 3; ++c) se += (img.channel(c).cast<double>() - ref.channel(c).cast<double>()).square().sum();
  const double mse = se / (3.0 * double(img.r.size()));
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

}  // namespace dyninit
