// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dyninit/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "dyninit/errors.hpp"
#include "dyninit/io.hpp"

namespace dyninit {

namespace {

std::string number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15) return fmt::format("{:.1f}", v);
  return fmt::format("{}", v);
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Strips a trailing comment that is not inside a string.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && in_string) {
      ++i;
    } else if (s[i] == '"') {
      in_string = !in_string;
    } else if (s[i] == '#' && !in_string) {
      return s.substr(0, i);
    }
  }
  return s;
}

struct Value {
  std::string raw;
  int line = 0;
};

[[noreturn]] void bad(const std::string& key, const Value& v, const char* expected) {
  throw Error(ErrorCode::InvalidArgument, fmt::format("config line {}: {} = {} is not {}", v.line, key, v.raw, expected));
}

double as_double(const std::string& key, const Value& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.raw.data(), v.raw.data() + v.raw.size(), out);
  if (ec != std::errc() || ptr != v.raw.data() + v.raw.size()) bad(key, v, "a number");
  return out;
}

template <typename Int>
Int as_int(const std::string& key, const Value& v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.raw.data(), v.raw.data() + v.raw.size(), out);
  if (ec != std::errc() || ptr != v.raw.data() + v.raw.size()) bad(key, v, "an integer");
  return out;
}

std::string as_string(const std::string& key, const Value& v) {
  const auto& r = v.raw;
  if (r.size() < 2 || r.front() != '"' || r.back() != '"') bad(key, v, "a quoted string");
  std::string out;
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    if (r[i] == '\\' && i + 2 < r.size()) ++i;
    out += r[i];
  }
  return out;
}

}  // namespace

std::string to_toml(const PipelineConfig& c) {
  std::string s;
  s += fmt::format("dataset = {}\n", quoted(c.dataset.generic_string()));
  s += fmt::format("seed = {}\n", c.seed);
  s += "\n[detect]\n";
  s += fmt::format("tau_epi = {}\n", number(c.detect.tau_epi));
  s += fmt::format("min_area_fraction = {}\n", number(c.detect.min_area_fraction));
  s += fmt::format("stride = {}\n", c.detect.stride);
  s += "\n[track]\n";
  s += fmt::format("tau_mask = {}\n", number(c.track.tau_mask));
  s += fmt::format("propagation_interval = {}\n", c.track.propagation_interval);
  s += fmt::format("provider = {}\n", quoted(c.track.provider));
  s += fmt::format("provider_dir = {}\n", quoted(c.track.provider_dir.generic_string()));
  s += "\n[flow]\n";
  s += fmt::format("n_tracks = {}\n", c.flow.n_tracks);
  s += fmt::format("ransac_iters = {}\n", c.flow.ransac_iters);
  s += fmt::format("ransac_tol_fraction = {}\n", number(c.flow.ransac_tol_fraction));
  s += "\n[encode]\n";
  s += fmt::format("d_pol = {}\n", c.encode.d_pol);
  s += fmt::format("d_fourier = {}\n", c.encode.d_fourier);
  s += fmt::format("omega = {}\n", number(c.encode.omega));
  s += fmt::format("ridge = {}\n", number(c.encode.ridge));
  s += "\n[init]\n";
  s += fmt::format("static_stride = {}\n", c.init.static_stride);
  s += fmt::format("n_per_frame = {}\n", c.init.n_per_frame);
  s += fmt::format("log_sigma = {}\n", number(c.init.log_sigma));
  s += fmt::format("k_scale = {}\n", number(c.init.k_scale));
  s += fmt::format("eps_log = {}\n", number(c.init.eps_log));
  s += fmt::format("r_min = {}\n", number(c.init.r_min));
  s += fmt::format("r_max = {}\n", number(c.init.r_max));
  s += fmt::format("opacity = {}\n", number(c.init.opacity));
  s += "\n[loss]\n";
  s += fmt::format("lambda_ssim = {}\n", number(c.loss.lambda_ssim));
  s += fmt::format("lambda_depth = {}\n", number(c.loss.lambda_depth));
  return s;
}

PipelineConfig config_from_toml(const std::string& text, const std::filesystem::path& base) {
  std::map<std::string, Value> values;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::InvalidArgument, fmt::format("config line {}: bad table", line_no));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, fmt::format("config line {}: expected key = value", line_no));
    const std::string key = (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
    if (values.count(key)) throw Error(ErrorCode::InvalidArgument, fmt::format("config line {}: {} set twice", line_no, key));
    values[key] = {trim(line.substr(eq + 1)), line_no};
  }

  PipelineConfig c;
  std::map<std::string, std::function<void(const std::string&, const Value&)>> setters = {
      {"dataset", [&](auto& k, auto& v) { c.dataset = as_string(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.seed = as_int<std::uint64_t>(k, v); }},
      {"detect.tau_epi", [&](auto& k, auto& v) { c.detect.tau_epi = as_double(k, v); }},
      {"detect.min_area_fraction", [&](auto& k, auto& v) { c.detect.min_area_fraction = as_double(k, v); }},
      {"detect.stride", [&](auto& k, auto& v) { c.detect.stride = as_int<int>(k, v); }},
      {"track.tau_mask", [&](auto& k, auto& v) { c.track.tau_mask = as_double(k, v); }},
      {"track.propagation_interval", [&](auto& k, auto& v) { c.track.propagation_interval = as_int<int>(k, v); }},
      {"track.provider", [&](auto& k, auto& v) { c.track.provider = as_string(k, v); }},
      {"track.provider_dir", [&](auto& k, auto& v) { c.track.provider_dir = as_string(k, v); }},
      {"flow.n_tracks", [&](auto& k, auto& v) { c.flow.n_tracks = as_int<int>(k, v); }},
      {"flow.ransac_iters", [&](auto& k, auto& v) { c.flow.ransac_iters = as_int<int>(k, v); }},
      {"flow.ransac_tol_fraction", [&](auto& k, auto& v) { c.flow.ransac_tol_fraction = as_double(k, v); }},
      {"encode.d_pol", [&](auto& k, auto& v) { c.encode.d_pol = as_int<int>(k, v); }},
      {"encode.d_fourier", [&](auto& k, auto& v) { c.encode.d_fourier = as_int<int>(k, v); }},
      {"encode.omega", [&](auto& k, auto& v) { c.encode.omega = as_double(k, v); }},
      {"encode.ridge", [&](auto& k, auto& v) { c.encode.ridge = as_double(k, v); }},
      {"init.static_stride", [&](auto& k, auto& v) { c.init.static_stride = as_int<int>(k, v); }},
      {"init.n_per_frame", [&](auto& k, auto& v) { c.init.n_per_frame = as_int<int>(k, v); }},
      {"init.log_sigma", [&](auto& k, auto& v) { c.init.log_sigma = as_double(k, v); }},
      {"init.k_scale", [&](auto& k, auto& v) { c.init.k_scale = as_double(k, v); }},
      {"init.eps_log", [&](auto& k, auto& v) { c.init.eps_log = as_double(k, v); }},
      {"init.r_min", [&](auto& k, auto& v) { c.init.r_min = as_double(k, v); }},
      {"init.r_max", [&](auto& k, auto& v) { c.init.r_max = as_double(k, v); }},
      {"init.opacity", [&](auto& k, auto& v) { c.init.opacity = as_double(k, v); }},
      {"loss.lambda_ssim", [&](auto& k, auto& v) { c.loss.lambda_ssim = as_double(k, v); }},
      {"loss.lambda_depth", [&](auto& k, auto& v) { c.loss.lambda_depth = as_double(k, v); }},
  };
  for (const auto& [key, value] : values) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::InvalidArgument, fmt::format("config line {}: unknown key {}", value.line, key));
    it->second(key, value);
  }
  if (!base.empty()) {
    if (!c.dataset.empty() && c.dataset.is_relative()) {
      c.dataset = (base / c.dataset).lexically_normal();
      if (c.dataset.filename().empty()) c.dataset = c.dataset.parent_path();
    }
  }
  validate(c);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return config_from_toml(io::read_file(path), std::filesystem::absolute(path).parent_path());
}

void validate(const PipelineConfig& c) {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, std::string("config: ") + what);
  };
  require(c.detect.tau_epi > 0.0, "detect.tau_epi must be positive");
  require(c.detect.min_area_fraction >= 0.0 && c.detect.min_area_fraction <= 1.0, "detect.min_area_fraction in [0, 1]");
  require(c.detect.stride >= 1, "detect.stride >= 1");
  require(c.track.tau_mask >= 0.0 && c.track.tau_mask <= 1.0, "track.tau_mask in [0, 1]");
  require(c.track.propagation_interval >= 1, "track.propagation_interval >= 1");
  require(c.track.provider == "oracle" || c.track.provider == "files", "track.provider is oracle or files");
  require(c.flow.n_tracks >= 1, "flow.n_tracks >= 1");
  require(c.flow.ransac_iters >= 1, "flow.ransac_iters >= 1");
  require(c.flow.ransac_tol_fraction > 0.0, "flow.ransac_tol_fraction > 0");
  require(c.encode.d_pol >= 0 && c.encode.d_fourier >= 0, "encode degrees >= 0");
  require(c.encode.omega > 0.0, "encode.omega > 0");
  require(c.encode.ridge >= 0.0, "encode.ridge >= 0");
  require(c.init.static_stride >= 1, "init.static_stride >= 1");
  require(c.init.n_per_frame >= 0, "init.n_per_frame >= 0");
  require(c.init.log_sigma > 0.0, "init.log_sigma > 0");
  require(c.init.k_scale > 0.0 && c.init.eps_log > 0.0, "init.k_scale and init.eps_log > 0");
  require(c.init.r_min > 0.0 && c.init.r_max >= c.init.r_min, "0 < init.r_min <= init.r_max");
  require(c.init.opacity > 0.0 && c.init.opacity < 1.0, "init.opacity in (0, 1)");
  require(c.loss.lambda_ssim >= 0.0 && c.loss.lambda_ssim <= 1.0, "loss.lambda_ssim in [0, 1]");
  require(c.loss.lambda_depth >= 0.0 && c.loss.lambda_depth <= 1.0, "loss.lambda_depth in [0, 1]");
}

}  // namespace dyninit
