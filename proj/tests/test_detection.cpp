// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <doctest.h>

#include "dyninit/detection.hpp"
#include "test_util.hpp"

using namespace dyninit;

namespace {

// First-order geometric error from a numerically differentiated constraint
// c(x, y, x', y') = x'^T F x: c^2 / |grad c|^2.
double sampson_oracle(const Matrix3<double>& F, double x, double y, double xp, double yp) {
  const auto c = [&](double a, double b, double ap, double bp) {
    return Vector3<double>(ap, bp, 1.0).dot(F * Vector3<double>(a, b, 1.0));
  };
  const double h = 1e-3;  // c is bilinear, so central differences are exact up to rounding
  const double g[4] = {(c(x + h, y, xp, yp) - c(x - h, y, xp, yp)) / (2 * h),
                       (c(x, y + h, xp, yp) - c(x, y - h, xp, yp)) / (2 * h),
                       (c(x, y, xp + h, yp) - c(x, y, xp - h, yp)) / (2 * h),
                       (c(x, y, xp, yp + h) - c(x, y, xp, yp - h)) / (2 * h)};
  const double v = c(x, y, xp, yp);
  return v * v / (g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3]);
}

Camera bare_camera(const Vector3<double>& t) {
  Camera c;
  c.t = t;
  c.width = 8;
  c.height = 8;
  return c;
}

/// Union-find labelling with 8-connectivity; returns component sizes.
std::vector<int> component_sizes(const Mask& m) {
  const int H = int(m.rows()), W = int(m.cols());
  std::vector<int> parent(std::size_t(H * W));
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](int a) {
    while (parent[std::size_t(a)] != a) a = parent[std::size_t(a)] = parent[std::size_t(parent[std::size_t(a)])];
    return a;
  };
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      if (!m(r, c)) continue;
      for (int dr = -1; dr <= 0; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc >= 0) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || cc >= W || !m(rr, cc)) continue;
          parent[std::size_t(find(r * W + c))] = find(rr * W + cc);
        }
      }
    }
  }
  std::map<int, int> size;
  for (int i = 0; i < H * W; ++i) {
    if (m(i / W, i % W)) ++size[find(i)];
  }
  std::vector<int> out;
  for (const auto& [root, n] : size) out.push_back(n);
  std::sort(out.rbegin(), out.rend());
  return out;
}

}  // namespace

TEST_CASE("Sampson error matches the first-order geometric error") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Camera a = dyninit::testing::make_camera(dyninit::testing::random_rotation(rng),
                                                   dyninit::testing::random_vector(rng, -1.0, 1.0), 16, 12);
    const Camera b = dyninit::testing::make_camera(dyninit::testing::random_rotation(rng),
                                                   dyninit::testing::random_vector(rng, -1.0, 1.0), 16, 12);
    const Matrix3<double> F = fundamental_matrix(a, b);
    FlowField flow(16, 12);
    for (int i = 0; i < flow.u.size(); ++i) {
      flow.u(i) = float(u(rng));
      flow.v(i) = float(u(rng));
    }
    const auto err = sampson_error(flow, F);
    for (int r = 0; r < 12; ++r) {
      for (int c = 0; c < 16; ++c) {
        const double xp = c + double(flow.u(r, c)), yp = r + double(flow.v(r, c));
        if (xp < 0 || yp < 0 || xp > 15 || yp > 11) {
          CHECK(std::isnan(err.error(r, c)));
          continue;
        }
        const double expected = sampson_oracle(F, c, r, xp, yp);
        CHECK(err.error(r, c) == doctest::Approx(expected).epsilon(1e-6).scale(1e-12));
      }
    }
  }
}

TEST_CASE("perpendicular displacement under horizontal translation gives delta^2 / 2") {
  // Pure x translation: epipolar lines are image rows, both gradient terms have unit length.
  const Matrix3<double> F = fundamental_matrix(bare_camera(Vector3<double>::Zero()),
                                               bare_camera(Vector3<double>(1.0, 0.0, 0.0)));
  FlowField flow(8, 8);
  flow.v.setConstant(2.0f);
  flow.u.setConstant(-1.0f);
  const auto err = sampson_error(flow, F);
  CHECK(err.error(0, 3) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::isnan(err.error(7, 3)));  // target leaves the image
  CHECK(std::isnan(err.error(0, 0)));

  flow.v.setConstant(3.0f);
  const auto err3 = sampson_error(flow, F);
  CHECK(err3.error(1, 4) == doctest::Approx(4.5).epsilon(1e-12));

  const Mask dyn = threshold_dynamic(err3, 3.0);
  CHECK(dyn(1, 4));
  CHECK_FALSE(threshold_dynamic(err, 3.0)(0, 3));
  CHECK_FALSE(dyn(7, 3));  // NaN is never dynamic
}

TEST_CASE("Sampson error is invariant to scaling F") {
  std::mt19937_64 rng(43);
  const Camera a = dyninit::testing::make_camera(dyninit::testing::random_rotation(rng),
                                                 dyninit::testing::random_vector(rng, -1.0, 1.0), 10, 10);
  const Camera b = dyninit::testing::make_camera(dyninit::testing::random_rotation(rng),
                                                 dyninit::testing::random_vector(rng, -1.0, 1.0), 10, 10);
  const Matrix3<double> F = fundamental_matrix(a, b);
  FlowField flow(10, 10);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < flow.u.size(); ++i) {
    flow.u(i) = float(u(rng));
    flow.v(i) = float(u(rng));
  }
  const auto e1 = sampson_error(flow, F);
  for (double c : {0.5, 2.0, 1e3}) {
    const auto ec = sampson_error(flow, c * F);
    for (int i = 0; i < e1.error.size(); ++i) {
      if (std::isnan(e1.error(i))) {
        CHECK(std::isnan(ec.error(i)));
      } else {
        CHECK(ec.error(i) == doctest::Approx(e1.error(i)).epsilon(1e-12).scale(1e-300));
      }
    }
  }
}

TEST_CASE("raising the threshold never adds pixels") {
  std::mt19937_64 rng(47);
  std::exponential_distribution<double> e(0.3);
  EpipolarErrorMap err;
  err.error.resize(20, 20);
  for (int i = 0; i < err.error.size(); ++i) err.error(i) = e(rng);
  err.error(3, 3) = std::nan("");
  Mask previous = threshold_dynamic(err, 0.01);
  for (double tau = 0.5; tau < 20.0; tau += 0.5) {
    const Mask next = threshold_dynamic(err, tau);
    CHECK((next && !previous).count() == 0);
    previous = next;
  }
  CHECK_THROWS_CODE(threshold_dynamic(err, 0.0), ErrorCode::InvalidArgument);
}

TEST_CASE("regions use 8-connectivity and drop small components") {
  Mask m = Mask::Constant(6, 7, false);
  // diagonal chain of 3 joins under 8-connectivity
  m(0, 0) = m(1, 1) = m(2, 2) = true;
  // 2x3 block
  m.block(4, 3, 2, 3).setConstant(true);
  // isolated pixel
  m(0, 6) = true;
  const auto regions = extract_regions(m, 2, 5);
  CHECK(regions.frame == 5);
  REQUIRE(regions.boxes.size() == 2);
  CHECK(regions.boxes[0] == Box{3, 4, 5, 5, 6});
  CHECK(regions.boxes[1] == Box{0, 0, 2, 2, 3});
  CHECK_FALSE(regions.mask(0, 6));
  CHECK(regions.mask.count() == 9);
}

TEST_CASE("component areas agree with a union-find labelling") {
  std::mt19937_64 rng(53);
  std::bernoulli_distribution on(0.35);
  for (int trial = 0; trial < 50; ++trial) {
    Mask m(24, 31);
    for (int i = 0; i < m.size(); ++i) m(i) = on(rng);
    const auto regions = extract_regions(m, 1);
    std::vector<int> areas;
    for (const auto& b : regions.boxes) areas.push_back(b.area);
    CHECK(areas == component_sizes(m));
    CHECK((regions.mask == m).all());
    for (const auto& b : regions.boxes) {
      CHECK(b.x0 <= b.x1);
      CHECK(b.y0 <= b.y1);
      CHECK(b.area <= (b.x1 - b.x0 + 1) * (b.y1 - b.y0 + 1));
    }
  }
}

TEST_CASE("minimum area is a ceiling fraction of the image") {
  CHECK(min_area_pixels(128, 128) == 9);  // 0.0005 * 16384 = 8.192
  CHECK(min_area_pixels(100, 100, 0.001) == 10);
  CHECK(min_area_pixels(10, 10, 0.0) == 0);
}

TEST_CASE("coincident camera centres yield no detections") {
  FlowField flow(8, 8);
  flow.u.setConstant(3.0f);
  const auto regions = detect_dynamic(flow, bare_camera(Vector3<double>::Zero()),
                                      bare_camera(Vector3<double>::Zero()), 3.0, 1);
  CHECK(regions.boxes.empty());
  CHECK(regions.mask.size() == 64);
  CHECK_FALSE(regions.mask.any());
}

TEST_CASE("a moving square is detected against a translating camera") {
  // Static scene: the camera translates along x, so static flow is purely horizontal.
  FlowField flow(32, 32);
  flow.u.setConstant(-1.5f);
  flow.v.block(10, 12, 6, 5).setConstant(4.0f);
  const auto regions = detect_dynamic(flow, bare_camera(Vector3<double>::Zero()),
                                      bare_camera(Vector3<double>(1.0, 0.0, 0.0)), 3.0, 4);
  REQUIRE(regions.boxes.size() == 1);
  CHECK(regions.boxes[0] == Box{12, 10, 16, 15, 30});
}
