// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for the unit tests.

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <doctest.h>

#include "dyninit/errors.hpp"
#include "dyninit/geometry.hpp"

namespace dyninit::testing {

#define CHECK_THROWS_CODE(expr, expected_code)                     \
  do {                                                             \
    bool dyninit_thrown = false;                                   \
    try {                                                          \
      (void)(expr);                                                \
    } catch (const ::dyninit::Error& dyninit_e) {                  \
      dyninit_thrown = true;                                       \
      CHECK_MESSAGE(dyninit_e.code() == (expected_code), dyninit_e.what()); \
    }                                                              \
    CHECK_MESSAGE(dyninit_thrown, "expected " #expected_code);     \
  } while (0)

inline Matrix3<double> random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quaternion<double> q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline Vector3<double> random_vector(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

inline Camera make_camera(const Matrix3<double>& R, const Vector3<double>& t, int w = 128, int h = 96,
                          double f = 110.0) {
  Camera cam;
  cam.K << f, 0.0, (w - 1) / 2.0, 0.0, f * 1.05, (h - 1) / 2.0, 0.0, 0.0, 1.0;
  cam.R = R;
  cam.t = t;
  cam.width = w;
  cam.height = h;
  return cam;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("dyninit_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace dyninit::testing
