// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dyninit/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <regex>
#include <string_view>
#include <set>
#include <sstream>
#include <utility>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <zlib.h>

namespace dyninit::io {

static_assert(std::endian::native == std::endian::little, "binary writers assume a little-endian host");

namespace {

using nlohmann::json;

template <typename T>
void append_raw(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T load_raw(const char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

float load_float(const char* p, bool big_endian) {
  auto bits = load_raw<std::uint32_t>(p);
  if (big_endian) bits = __builtin_bswap32(bits);
  return std::bit_cast<float>(bits);
}

/// Reads one '\n'-terminated header line starting at pos; the terminator is consumed.
std::string header_line(const std::string& bytes, std::size_t& pos, const fs::path& path) {
  constexpr std::size_t kMaxLine = 4096;
  const std::size_t end = bytes.find('\n', pos);
  if (end == std::string::npos || end - pos > kMaxLine) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": unterminated header line");
  }
  std::string line = bytes.substr(pos, end - pos);
  pos = end + 1;
  return line;
}

std::pair<int, int> parse_dimensions(const std::string& line, const fs::path& path) {
  static const std::regex kDims("([1-9][0-9]{0,5}) ([1-9][0-9]{0,5})");
  std::smatch m;
  if (!std::regex_match(line, m, kDims)) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": bad dimension line '" + line + "'");
  }
  return {std::stoi(m[1].str()), std::stoi(m[2].str())};
}

void check_payload(std::size_t available, std::size_t expected, const fs::path& path) {
  if (available < expected) {
    throw Error(ErrorCode::TruncatedPayload, path.string() + ": expected " + std::to_string(expected) +
                                                 " payload bytes, found " + std::to_string(available));
  }
  if (available > expected) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": " + std::to_string(available - expected) +
                                                " bytes beyond the size declared in the header");
  }
}

struct PfmPayload {
  int width = 0;
  int height = 0;
  bool big_endian = false;
  std::size_t offset = 0;
};

PfmPayload parse_pfm_header(const std::string& bytes, const std::string& magic, int channels, const fs::path& path) {
  std::size_t pos = 0;
  if (header_line(bytes, pos, path) != magic) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": expected PFM magic '" + magic + "'");
  }
  const auto [width, height] = parse_dimensions(header_line(bytes, pos, path), path);
  // Unit scale only, so the integer part is exactly "1" (no leading zeros).
  static const std::regex kScale("-?1\\.0+");
  const std::string scale_line = header_line(bytes, pos, path);
  if (!std::regex_match(scale_line, kScale)) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": bad scale line '" + scale_line + "'");
  }
  const double scale = std::stod(scale_line);
  if (std::abs(scale) != 1.0) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": only unit PFM scale is supported");
  }
  check_payload(bytes.size() - pos, std::size_t(width) * height * channels * sizeof(float), path);
  return {width, height, scale > 0.0, pos};
}

std::string pfm_header(const std::string& magic, int width, int height) {
  return fmt::format("{}\n{} {}\n-1.0\n", magic, width, height);
}

std::string pgm_header(int width, int height, int maxval) {
  return fmt::format("P5\n{} {}\n{}\n", width, height, maxval);
}

std::pair<std::pair<int, int>, std::size_t> parse_pgm_header(const std::string& bytes, const std::string& maxval,
                                                             const fs::path& path) {
  std::size_t pos = 0;
  if (header_line(bytes, pos, path) != "P5") throw Error(ErrorCode::MalformedHeader, path.string() + ": expected P5");
  const auto dims = parse_dimensions(header_line(bytes, pos, path), path);
  if (header_line(bytes, pos, path) != maxval) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": expected maxval " + maxval);
  }
  return {dims, pos};
}

}  // namespace

// ---------------------------------------------------------------------------

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::string frame_name(int frame, const std::string& extension) { return fmt::format("{:06d}.{}", frame, extension); }

// ---------------------------------------------------------------------------
// PFM

DepthMap read_pfm(const fs::path& path, int frame_index) {
  const std::string bytes = read_file(path);
  const PfmPayload h = parse_pfm_header(bytes, "Pf", 1, path);
  DepthMap depth;
  depth.frame_index = frame_index;
  depth.values.resize(h.height, h.width);
  const char* p = bytes.data() + h.offset;
  for (int file_row = 0; file_row < h.height; ++file_row) {
    const int row = h.height - 1 - file_row;
    for (int col = 0; col < h.width; ++col, p += 4) depth.values(row, col) = load_float(p, h.big_endian);
  }
  return depth;
}

void write_pfm(const fs::path& path, const DepthMap& depth) {
  std::string out = pfm_header("Pf", depth.width(), depth.height());
  out.reserve(out.size() + std::size_t(depth.values.size()) * 4);
  for (int row = depth.height() - 1; row >= 0; --row) {
    for (int col = 0; col < depth.width(); ++col) append_raw(out, depth.values(row, col));
  }
  write_file(path, out);
}

RgbImage read_rgb_pfm(const fs::path& path) {
  const std::string bytes = read_file(path);
  const PfmPayload h = parse_pfm_header(bytes, "PF", 3, path);
  RgbImage image(h.width, h.height);
  const char* p = bytes.data() + h.offset;
  for (int file_row = 0; file_row < h.height; ++file_row) {
    const int row = h.height - 1 - file_row;
    for (int col = 0; col < h.width; ++col) {
      for (int c = 0; c < 3; ++c, p += 4) image.channel(c)(row, col) = load_float(p, h.big_endian);
    }
  }
  return image;
}

void write_rgb_pfm(const fs::path& path, const RgbImage& image) {
  std::string out = pfm_header("PF", image.width(), image.height());
  out.reserve(out.size() + std::size_t(image.r.size()) * 12);
  for (int row = image.height() - 1; row >= 0; --row) {
    for (int col = 0; col < image.width(); ++col) {
      for (int c = 0; c < 3; ++c) append_raw(out, image.channel(c)(row, col));
    }
  }
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// .flo

FlowField read_flo(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 12) throw Error(ErrorCode::TruncatedPayload, path.string() + ": shorter than the .flo header");
  if (std::bit_cast<std::uint32_t>(load_raw<float>(bytes.data())) != std::bit_cast<std::uint32_t>(kFloMagic)) {
    throw Error(ErrorCode::BadMagic, path.string() + ": tag is not 202021.25");
  }
  const auto width = load_raw<std::int32_t>(bytes.data() + 4);
  const auto height = load_raw<std::int32_t>(bytes.data() + 8);
  if (width < 1 || width > 99999 || height < 1 || height > 99999) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": illegal size " + std::to_string(width) + "x" +
                                                std::to_string(height));
  }
  check_payload(bytes.size() - 12, std::size_t(width) * height * 8, path);
  FlowField flow(width, height);
  const float bound = static_cast<float>(std::max(width, height));
  const char* p = bytes.data() + 12;
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col, p += 8) {
      const float u = load_raw<float>(p);
      const float v = load_raw<float>(p + 4);
      if (!std::isfinite(u) || !std::isfinite(v) || std::hypot(u, v) >= bound) {
        throw Error(ErrorCode::InvalidArgument, fmt::format("{}: flow ({}, {}) at ({}, {}) fails the sanity bound",
                                                            path.string(), u, v, col, row));
      }
      flow.u(row, col) = u;
      flow.v(row, col) = v;
    }
  }
  return flow;
}

void write_flo(const fs::path& path, const FlowField& flow) {
  std::string out;
  out.reserve(12 + std::size_t(flow.u.size()) * 8);
  out.append("PIEH");
  append_raw(out, std::int32_t(flow.width()));
  append_raw(out, std::int32_t(flow.height()));
  for (int row = 0; row < flow.height(); ++row) {
    for (int col = 0; col < flow.width(); ++col) {
      append_raw(out, flow.u(row, col));
      append_raw(out, flow.v(row, col));
    }
  }
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Masks

fs::path mask_sidecar_path(const fs::path& pgm_path) {
  fs::path p = pgm_path;
  p.replace_extension(".json");
  return p;
}

InstanceMaskFrame read_masks(const fs::path& pgm_path) {
  const std::string bytes = read_file(pgm_path);
  const auto [dims, offset] = parse_pgm_header(bytes, "65535", pgm_path);
  const auto [width, height] = dims;
  check_payload(bytes.size() - offset, std::size_t(width) * height * 2, pgm_path);

  InstanceMaskFrame frame(0, width, height);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  std::set<InstanceId> present;
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col, p += 2) {
      const auto id = static_cast<InstanceId>((p[0] << 8) | p[1]);
      frame.ids(row, col) = id;
      if (id != 0) present.insert(id);
    }
  }

  const fs::path sidecar = mask_sidecar_path(pgm_path);
  if (fs::exists(sidecar)) {
    json doc;
    try {
      doc = json::parse(read_file(sidecar));
      frame.frame_index = doc.at("frame").get<int>();
      for (const auto& [key, value] : doc.at("confidence").items()) {
        const int id = std::stoi(key);
        const double p_conf = value.get<double>();
        if (id <= 0 || id > 65535 || !(p_conf >= 0.0 && p_conf <= 1.0)) {
          throw Error(ErrorCode::InvalidArgument, sidecar.string() + ": bad confidence entry " + key);
        }
        frame.confidence[static_cast<InstanceId>(id)] = p_conf;
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedHeader, sidecar.string() + ": " + e.what());
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::MalformedHeader, sidecar.string() + ": confidence keys must be integer ids");
    }
  }
  for (InstanceId id : present) {
    if (!frame.confidence.contains(id)) {
      throw Error(ErrorCode::ConfidenceMissingForID, pgm_path.string() + ": id " + std::to_string(id));
    }
  }
  return frame;
}

void write_masks(const fs::path& pgm_path, const InstanceMaskFrame& frame) {
  std::string out = pgm_header(frame.width(), frame.height(), 65535);
  out.reserve(out.size() + std::size_t(frame.ids.size()) * 2);
  for (int row = 0; row < frame.height(); ++row) {
    for (int col = 0; col < frame.width(); ++col) {
      const InstanceId id = frame.ids(row, col);
      out.push_back(static_cast<char>(id >> 8));
      out.push_back(static_cast<char>(id & 0xff));
    }
  }
  write_file(pgm_path, out);

  json conf = json::object();
  for (const auto& [id, p] : frame.confidence) conf[std::to_string(id)] = p;
  json doc = {{"frame", frame.frame_index}, {"confidence", conf}};
  write_file(mask_sidecar_path(pgm_path), doc.dump(1) + "\n");
}

Mask read_binary_mask(const fs::path& path) {
  const std::string bytes = read_file(path);
  const auto [dims, offset] = parse_pgm_header(bytes, "255", path);
  const auto [width, height] = dims;
  check_payload(bytes.size() - offset, std::size_t(width) * height, path);
  Mask mask(height, width);
  for (int i = 0; i < height * width; ++i) mask(i / width, i % width) = bytes[offset + i] != 0;
  return mask;
}

void write_binary_mask(const fs::path& path, const Mask& mask) {
  std::string out = pgm_header(int(mask.cols()), int(mask.rows()), 255);
  for (int row = 0; row < mask.rows(); ++row) {
    for (int col = 0; col < mask.cols(); ++col) out.push_back(mask(row, col) ? char(0xff) : char(0));
  }
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Tracks

namespace {

template <typename T>
T parse_field(std::string_view field, const fs::path& path, std::size_t line_no) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("{}:{}: cannot parse field '{}'", path.string(), line_no, std::string(field)));
  }
  return value;
}

}  // namespace

TrackTable read_tracks(const fs::path& path, int width, int height) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || (line != kTracksHeader && line != std::string(kTracksHeader) + "\r")) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": expected header '" + kTracksHeader + "'");
  }
  TrackTable table;
  std::set<std::pair<std::int64_t, int>> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (std::size_t comma; (comma = rest.find(',')) != std::string_view::npos; rest.remove_prefix(comma + 1)) {
      fields.push_back(rest.substr(0, comma));
    }
    fields.push_back(rest);
    if (fields.size() != 5) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("{}:{}: expected 5 fields", path.string(), line_no));
    }
    TrackObservation obs;
    obs.track_id = parse_field<std::int64_t>(fields[0], path, line_no);
    obs.frame = parse_field<int>(fields[1], path, line_no);
    obs.x = parse_field<double>(fields[2], path, line_no);
    obs.y = parse_field<double>(fields[3], path, line_no);
    const int visible = parse_field<int>(fields[4], path, line_no);
    if ((visible != 0 && visible != 1) || obs.frame < 0) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("{}:{}: bad frame/visible field", path.string(), line_no));
    }
    obs.visible = visible == 1;
    if (!seen.emplace(obs.track_id, obs.frame).second) {
      throw Error(ErrorCode::DuplicateObservation,
                  fmt::format("{}:{}: track {} frame {}", path.string(), line_no, obs.track_id, obs.frame));
    }
    if (obs.visible && !(obs.x >= 0.0 && obs.x < width && obs.y >= 0.0 && obs.y < height)) {
      throw Error(ErrorCode::OutOfBoundsPixel, fmt::format("{}:{}: ({}, {}) outside {}x{}", path.string(), line_no,
                                                           obs.x, obs.y, width, height));
    }
    table.push_back(obs);
  }
  return table;
}

void write_tracks(const fs::path& path, const TrackTable& tracks) {
  std::string out = std::string(kTracksHeader) + "\n";
  for (const auto& o : tracks) out += fmt::format("{},{},{},{},{}\n", o.track_id, o.frame, o.x, o.y, o.visible ? 1 : 0);
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Cameras

std::vector<Camera> read_cameras(const fs::path& path) {
  std::vector<Camera> cameras;
  try {
    const json doc = json::parse(read_file(path));
    if (!doc.is_array()) throw Error(ErrorCode::MalformedHeader, path.string() + ": expected a JSON array");
    for (const auto& f : doc) {
      Camera cam;
      cam.frame_index = f.at("frame").get<int>();
      const auto K = f.at("K").get<std::vector<double>>();
      const auto R = f.at("R").get<std::vector<double>>();
      const auto t = f.at("t").get<std::vector<double>>();
      if (K.size() != 9 || R.size() != 9 || t.size() != 3) {
        throw Error(ErrorCode::MalformedHeader, path.string() + ": K/R need 9 entries and t needs 3");
      }
      cam.K = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(K.data());
      cam.R = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(R.data());
      cam.t = Eigen::Map<const Eigen::Vector3d>(t.data());
      cam.width = f.at("width").get<int>();
      cam.height = f.at("height").get<int>();
      validate(cam);
      cameras.push_back(cam);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": " + e.what());
  }
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    if (cameras[i].frame_index != static_cast<int>(i)) {
      throw Error(ErrorCode::InvalidArgument, path.string() + ": frames must be listed as 0, 1, 2, ...");
    }
  }
  return cameras;
}

void write_cameras(const fs::path& path, const std::vector<Camera>& cameras) {
  json doc = json::array();
  for (const auto& cam : cameras) {
    std::vector<double> K(9), R(9);
    Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(K.data()) = cam.K;
    Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(R.data()) = cam.R;
    doc.push_back({{"frame", cam.frame_index},
                   {"K", K},
                   {"R", R},
                   {"t", {cam.t.x(), cam.t.y(), cam.t.z()}},
                   {"width", cam.width},
                   {"height", cam.height}});
  }
  write_file(path, doc.dump(1) + "\n");
}

// ---------------------------------------------------------------------------
// Gaussian PLY

namespace {

constexpr const char* kAxes[] = {"x", "y", "z"};
constexpr const char* kQuatComponents[] = {"w", "x", "y", "z"};
constexpr int kCommonFloats = 14;

std::string ply_header_body(const BasisSpec& spec, std::size_t n_static, std::size_t n_dynamic) {
  std::string h;
  h += "ply\n";
  h += "format binary_little_endian 1.0\n";
  h += "comment generator dyninit\n";
  h += fmt::format("comment d_pol {}\n", spec.d_pol);
  h += fmt::format("comment d_fourier {}\n", spec.d_fourier);
  h += fmt::format("comment omega {:.17g}\n", spec.omega);
  h += fmt::format("comment frame_count {}\n", spec.frame_count);
  h += "comment time normalization: tau = frame / (frame_count - 1)\n";
  h += "comment basis column k: 0 = 1, 1..d_pol = tau^k, then cos(j omega tau), sin(j omega tau) for j = 1..d_fourier\n";
  h += "comment mu(tau) = (x, y, z) + sum_k pos_<axis>_<k> * basis_k(tau), k >= 1\n";
  h += "comment q(tau) = normalize((1, 0, 0, 0) + sum_k rot_<c>_<k> * basis_k(tau)) * (qw, qx, qy, qz)\n";
  h += "comment scale stored as log; opacity as linear alpha; r g b linear colour (SH degree 0)\n";
  const auto common_props = [&h] {
    for (const char* name : {"x", "y", "z", "qw", "qx", "qy", "qz", "sx", "sy", "sz", "opacity", "r", "g", "b"}) {
      h += fmt::format("property float {}\n", name);
    }
  };
  h += fmt::format("element vertex {}\n", n_static);
  common_props();
  h += fmt::format("element dynamic_vertex {}\n", n_dynamic);
  common_props();
  h += "property ushort instance_id\n";
  h += "property int track_id\n";
  const int n = spec.dim() - 1;
  for (const char* axis : kAxes) {
    for (int k = 1; k <= n; ++k) h += fmt::format("property float pos_{}_{}\n", axis, k);
  }
  for (const char* c : kQuatComponents) {
    for (int k = 1; k <= n; ++k) h += fmt::format("property float rot_{}_{}\n", c, k);
  }
  return h;
}

std::string ply_crc_line(const std::string& body) {
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
  return fmt::format("comment crc32 {:08x}\n", crc);
}

std::size_t dynamic_row_bytes(const BasisSpec& spec) {
  return kCommonFloats * 4 + 2 + 4 + std::size_t(7) * (spec.dim() - 1) * 4;
}

void append_common(std::string& out, const GaussianRecord& r) {
  const double values[kCommonFloats] = {r.mu0.x(),       r.mu0.y(),       r.mu0.z(),       r.q0.w(), r.q0.x(),
                                        r.q0.y(),        r.q0.z(),        r.log_scale.x(), r.log_scale.y(),
                                        r.log_scale.z(), r.opacity,       r.color.x(),     r.color.y(),
                                        r.color.z()};
  for (double v : values) append_raw(out, static_cast<float>(v));
}

const char* read_common(const char* p, GaussianRecord& r) {
  double v[kCommonFloats];
  for (int i = 0; i < kCommonFloats; ++i, p += 4) v[i] = load_raw<float>(p);
  r.mu0 = {v[0], v[1], v[2]};
  r.q0 = Quaternion<double>(v[3], v[4], v[5], v[6]);
  r.log_scale = {v[7], v[8], v[9]};
  r.opacity = v[10];
  r.color = {v[11], v[12], v[13]};
  return p;
}

std::size_t header_count(const std::string& header, const std::string& key, const fs::path& path) {
  // first complete line of the form "<key> <digits>"
  std::string text;
  for (std::size_t start = 0; start < header.size();) {
    const std::size_t end = header.find('\n', start);
    if (end == std::string::npos) break;
    const std::string_view line(header.data() + start, end - start);
    if (line.size() > key.size() + 1 && line.starts_with(key) && line[key.size()] == ' ') {
      const auto digits = line.substr(key.size() + 1);
      if (digits.find_first_not_of("0123456789") == std::string_view::npos) {
        text = digits;
        break;
      }
    }
    start = end + 1;
  }
  if (text.empty()) throw Error(ErrorCode::MalformedHeader, path.string() + ": missing '" + key + "'");
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": bad count for '" + key + "'");
  }
  return value;
}

}  // namespace

int position_float_count(const BasisSpec& spec) { return 3 + 3 * (spec.dim() - 1); }

void write_gaussians_ply(const fs::path& path, const GaussianSet& records, const BasisSpec& spec) {
  std::size_t n_static = 0;
  std::size_t n_dynamic = 0;
  for (const auto& r : records) {
    if (!r.is_dynamic()) {
      ++n_static;
      continue;
    }
    ++n_dynamic;
    if (!r.deformation || !(r.deformation->spec.d_pol == spec.d_pol && r.deformation->spec.d_fourier == spec.d_fourier) ||
        r.deformation->position.cols() != spec.dim() || r.deformation->rotation.cols() != spec.dim() - 1) {
      throw Error(ErrorCode::InvalidArgument, "dynamic record without a deformation block matching the file basis");
    }
    if (r.track_id < 0 || r.track_id > std::numeric_limits<std::int32_t>::max()) {
      throw Error(ErrorCode::InvalidArgument, "track id does not fit the PLY int property");
    }
  }

  const std::string body = ply_header_body(spec, n_static, n_dynamic);
  std::string out = body + ply_crc_line(body) + "end_header\n";
  for (const auto& r : records) {
    if (!r.is_dynamic()) append_common(out, r);
  }
  const int n = spec.dim() - 1;
  for (const auto& r : records) {
    if (!r.is_dynamic()) continue;
    append_common(out, r);
    append_raw(out, static_cast<std::uint16_t>(r.instance_id));
    append_raw(out, static_cast<std::int32_t>(r.track_id));
    for (int axis = 0; axis < 3; ++axis) {
      for (int k = 1; k <= n; ++k) append_raw(out, static_cast<float>(r.deformation->position(axis, k)));
    }
    for (int c = 0; c < 4; ++c) {
      for (int k = 0; k < n; ++k) append_raw(out, static_cast<float>(r.deformation->rotation(c, k)));
    }
  }
  write_file(path, out);
}

GaussianPly read_gaussians_ply(const fs::path& path) {
  const std::string bytes = read_file(path);
  const std::string terminator = "end_header\n";
  const std::size_t end = bytes.find(terminator);
  if (bytes.rfind("ply\n", 0) != 0 || end == std::string::npos) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": not a PLY file");
  }
  const std::string header = bytes.substr(0, end);

  BasisSpec spec;
  spec.d_pol = static_cast<int>(header_count(header, "comment d_pol", path));
  spec.d_fourier = static_cast<int>(header_count(header, "comment d_fourier", path));
  spec.frame_count = static_cast<int>(header_count(header, "comment frame_count", path));
  {
    static const std::regex kOmega("\\ncomment omega ([-+0-9.eE]+)\\n");
    std::smatch m;
    if (!std::regex_search(header, m, kOmega)) throw Error(ErrorCode::MalformedHeader, path.string() + ": missing omega");
    const std::string text = m[1].str();
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), spec.omega);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw Error(ErrorCode::MalformedHeader, path.string() + ": bad omega '" + text + "'");
    }
  }
  const std::size_t n_static = header_count(header, "element vertex", path);
  const std::size_t n_dynamic = header_count(header, "element dynamic_vertex", path);
  if (spec.d_pol > 64 || spec.d_fourier > 1024) throw Error(ErrorCode::MalformedHeader, path.string() + ": absurd degrees");

  const std::string body = ply_header_body(spec, n_static, n_dynamic);
  if (header != body + ply_crc_line(body)) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": header does not match the Gaussian layout or its CRC");
  }

  const std::size_t offset = end + terminator.size();
  check_payload(bytes.size() - offset, n_static * kCommonFloats * 4 + n_dynamic * dynamic_row_bytes(spec), path);

  GaussianPly ply;
  ply.spec = spec;
  ply.records.reserve(n_static + n_dynamic);
  const char* p = bytes.data() + offset;
  for (std::size_t i = 0; i < n_static; ++i) {
    GaussianRecord r;
    p = read_common(p, r);
    ply.records.push_back(std::move(r));
  }
  const int n = spec.dim() - 1;
  for (std::size_t i = 0; i < n_dynamic; ++i) {
    GaussianRecord r;
    r.kind = GaussianKind::Dynamic;
    p = read_common(p, r);
    r.instance_id = load_raw<std::uint16_t>(p);
    r.track_id = load_raw<std::int32_t>(p + 2);
    p += 6;
    auto params = DeformationParams<double>::zero(spec);
    params.position.col(0) = r.mu0;
    params.q0 = r.q0;
    for (int axis = 0; axis < 3; ++axis) {
      for (int k = 1; k <= n; ++k, p += 4) params.position(axis, k) = load_raw<float>(p);
    }
    for (int c = 0; c < 4; ++c) {
      for (int k = 0; k < n; ++k, p += 4) params.rotation(c, k) = load_raw<float>(p);
    }
    r.deformation = std::move(params);
    ply.records.push_back(std::move(r));
  }
  return ply;
}

}  // namespace dyninit::io
