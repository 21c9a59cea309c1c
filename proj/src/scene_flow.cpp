// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dyninit/scene_flow.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/SVD>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "dyninit/io.hpp"
#include "dyninit/parallel.hpp"

namespace dyninit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix3<double> cross_covariance(const std::vector<Vector3<double>>& src, const std::vector<Vector3<double>>& dst,
                                 Vector3<double>& cs, Vector3<double>& cd) {
  cs.setZero();
  cd.setZero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= double(src.size());
  cd /= double(src.size());
  Matrix3<double> H = Matrix3<double>::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) H += (src[i] - cs) * (dst[i] - cd).transpose();
  return H;
}

/// Returns false when the cross-covariance has rank < 2.
bool kabsch_impl(const std::vector<Vector3<double>>& src, const std::vector<Vector3<double>>& dst, Rigid& out) {
  Vector3<double> cs, cd;
  const Matrix3<double> H = cross_covariance(src, dst, cs, cd);
  const Eigen::JacobiSVD<Matrix3<double>> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(1) <= 1e-12 * s(0)) return false;
  const Matrix3<double> U = svd.matrixU();
  const Matrix3<double> V = svd.matrixV();
  Matrix3<double> D = Matrix3<double>::Identity();
  D(2, 2) = (V * U.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  out.R = V * D * U.transpose();
  out.t = cd - out.R * cs;
  return true;
}

double bbox_diagonal(const std::vector<Vector3<double>>& pts) {
  if (pts.empty()) return 0.0;
  Vector3<double> lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::MalformedHeader, fmt::format("trajectories line {}: bad number '{}'", line_no, field));
  }
  return value;
}

}  // namespace

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Missing: return "missing";
    case Provenance::Observed: return "observed";
    case Provenance::RigidForward: return "rigid_forward";
    case Provenance::RigidBackward: return "rigid_backward";
    case Provenance::Interpolated: return "interpolated";
  }
  return "missing";
}

Provenance provenance_from_string(const std::string& s) {
  for (auto p : {Provenance::Missing, Provenance::Observed, Provenance::RigidForward, Provenance::RigidBackward,
                 Provenance::Interpolated}) {
    if (s == to_string(p)) return p;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown provenance " + s);
}

Trajectory3D::Trajectory3D(int frame_count)
    : position(std::size_t(frame_count), Vector3<double>::Constant(kNaN)),
      provenance(std::size_t(frame_count), Provenance::Missing),
      pixel(std::size_t(frame_count), Vector2<double>::Constant(kNaN)),
      observed_visible(std::size_t(frame_count), false) {}

bool Trajectory3D::total() const {
  return std::none_of(provenance.begin(), provenance.end(), [](Provenance p) { return p == Provenance::Missing; });
}

int Trajectory3D::query_frame() const {
  for (int t = 0; t < frame_count(); ++t) {
    if (provenance[std::size_t(t)] == Provenance::Observed) return t;
  }
  return -1;
}

// ---------------------------------------------------------------------------

std::map<std::int64_t, InstanceId> assign_tracks(const TrackTable& tracks, const std::vector<InstanceMaskFrame>& masks) {
  std::map<std::int64_t, std::map<InstanceId, long>> votes;
  for (const auto& obs : tracks) {
    auto& v = votes[obs.track_id];
    if (!obs.visible || obs.frame < 0 || obs.frame >= int(masks.size())) continue;
    const auto& m = masks[std::size_t(obs.frame)];
    int row = 0, col = 0;
    if (!nearest_pixel(obs.x, obs.y, m.width(), m.height(), row, col)) continue;
    ++v[m.ids(row, col)];
  }
  std::map<std::int64_t, InstanceId> out;
  for (const auto& [id, v] : votes) {
    InstanceId best = 0;
    long best_count = 0;
    for (const auto& [inst, n] : v) {
      if (inst != 0 && n > best_count) {
        best = inst;
        best_count = n;
      }
    }
    const auto bg = v.find(InstanceId(0));
    if (bg != v.end() && bg->second > best_count) best = 0;
    out[id] = best;
  }
  return out;
}

std::vector<Trajectory3D> lift_tracks(const TrackTable& tracks, const std::vector<DepthMap>& depths,
                                      const std::vector<Camera>& cams,
                                      const std::map<std::int64_t, InstanceId>& assignment) {
  const int T = static_cast<int>(cams.size());
  if (depths.size() != cams.size()) throw Error(ErrorCode::DimensionMismatch, "depth and camera counts differ");
  std::map<std::int64_t, Trajectory3D> by_id;
  for (const auto& obs : tracks) {
    if (obs.frame < 0 || obs.frame >= T) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("track {} references frame {}", obs.track_id, obs.frame));
    }
    auto it = by_id.find(obs.track_id);
    if (it == by_id.end()) {
      it = by_id.emplace(obs.track_id, Trajectory3D(T)).first;
      it->second.track_id = obs.track_id;
      const auto a = assignment.find(obs.track_id);
      it->second.instance_id = a == assignment.end() ? InstanceId(0) : a->second;
    }
    auto& tr = it->second;
    const auto f = std::size_t(obs.frame);
    tr.pixel[f] = {obs.x, obs.y};
    tr.observed_visible[f] = obs.visible;
    if (!obs.visible) continue;
    const auto& depth = depths[f];
    int row = 0, col = 0;
    if (!nearest_pixel(obs.x, obs.y, depth.width(), depth.height(), row, col) || !depth.valid(row, col)) continue;
    const double z = depth.values(row, col);
    if (!(z > 0.0)) continue;
    tr.position[f] = unproject(Vector2<double>(obs.x, obs.y), z, cams[f]);
    tr.provenance[f] = Provenance::Observed;
  }
  std::vector<Trajectory3D> out;
  out.reserve(by_id.size());
  for (auto& [id, tr] : by_id) out.push_back(std::move(tr));
  return out;
}

Rigid kabsch(const std::vector<Vector3<double>>& src, const std::vector<Vector3<double>>& dst) {
  if (src.size() != dst.size()) throw Error(ErrorCode::DimensionMismatch, "point lists differ in length");
  if (src.size() < 3) throw Error(ErrorCode::TooFewPoints, fmt::format("{} correspondences, need 3", src.size()));
  Rigid out;
  if (!kabsch_impl(src, dst, out)) throw Error(ErrorCode::DegenerateConfiguration, "cross-covariance rank < 2");
  return out;
}

RigidEstimate estimate_rigid(const std::vector<Vector3<double>>& src, const std::vector<Vector3<double>>& dst,
                             const RansacParams& params) {
  if (src.size() != dst.size()) throw Error(ErrorCode::DimensionMismatch, "point lists differ in length");
  const std::size_t n = src.size();
  if (n < 3) throw Error(ErrorCode::TooFewPoints, fmt::format("{} correspondences, need 3", n));

  std::mt19937_64 rng(params.seed);
  std::vector<int> best_inliers;
  bool any_valid = false;
  std::vector<Vector3<double>> s(3), d(3);
  std::vector<int> inliers;
  for (int iter = 0; iter < params.max_iters; ++iter) {
    std::size_t idx[3];
    idx[0] = rng() % n;
    do idx[1] = rng() % n; while (idx[1] == idx[0]);
    do idx[2] = rng() % n; while (idx[2] == idx[0] || idx[2] == idx[1]);
    for (int k = 0; k < 3; ++k) {
      s[std::size_t(k)] = src[idx[k]];
      d[std::size_t(k)] = dst[idx[k]];
    }
    Rigid candidate;
    if (!kabsch_impl(s, d, candidate)) continue;
    any_valid = true;
    inliers.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if ((candidate(src[i]) - dst[i]).norm() < params.inlier_tol) inliers.push_back(int(i));
    }
    if (inliers.size() > best_inliers.size()) best_inliers = inliers;
    if (best_inliers.size() == n) break;
  }
  if (!any_valid) {
    throw Error(ErrorCode::DegenerateConfiguration, fmt::format("all {} minimal samples were collinear", params.max_iters));
  }

  RigidEstimate out;
  out.inliers = best_inliers;
  if (best_inliers.size() >= 3) {
    std::vector<Vector3<double>> si, di;
    for (int i : best_inliers) {
      si.push_back(src[std::size_t(i)]);
      di.push_back(dst[std::size_t(i)]);
    }
    if (kabsch_impl(si, di, out.transform)) return out;
  }
  throw Error(ErrorCode::DegenerateConfiguration, "no non-degenerate inlier set");
}

InstanceMotion refine_forward(std::vector<Trajectory3D*>& instance, InstanceId id, const RefineParams& params) {
  InstanceMotion motion;
  motion.instance_id = id;
  if (instance.empty()) return motion;
  const int T = instance.front()->frame_count();
  std::mt19937_64 seeder(params.seed ^ (0x9E3779B97F4A7C15ULL * (std::uint64_t(id) + 1)));
  Rigid previous = Rigid::identity();
  std::vector<Vector3<double>> src, dst, at_t;
  for (int t = 0; t + 1 < T; ++t) {
    src.clear();
    dst.clear();
    at_t.clear();
    for (const auto* tr : instance) {
      if (!tr->valid(t)) continue;
      at_t.push_back(tr->position[std::size_t(t)]);
      if (tr->valid(t + 1)) {
        src.push_back(tr->position[std::size_t(t)]);
        dst.push_back(tr->position[std::size_t(t + 1)]);
      }
    }
    Rigid current = previous;
    int inlier_count = 0;
    const std::uint64_t pair_seed = seeder();
    if (src.size() >= 3) {
      RansacParams rp;
      rp.max_iters = params.max_iters;
      rp.seed = pair_seed;
      rp.inlier_tol = std::max(params.tol_fraction * bbox_diagonal(at_t), 1e-12);
      try {
        const auto est = estimate_rigid(src, dst, rp);
        current = est.transform;
        inlier_count = static_cast<int>(est.inliers.size());
      } catch (const Error& e) {
        spdlog::warn("instance {} pair {}: {}; carrying previous transform", id, t, e.what());
      }
    } else {
      spdlog::debug("instance {} pair {}: {} co-visible points; carrying previous transform", id, t, src.size());
    }
    motion.pairs.push_back(current);
    motion.inliers.push_back(inlier_count);
    previous = current;

    for (auto* tr : instance) {
      if (tr->valid(t) && !tr->valid(t + 1)) {
        tr->position[std::size_t(t + 1)] = current(tr->position[std::size_t(t)]);
        tr->provenance[std::size_t(t + 1)] = Provenance::RigidForward;
      }
    }
  }
  return motion;
}

void refine_backward(std::vector<Trajectory3D*>& instance, const InstanceMotion& motion) {
  if (instance.empty()) return;
  const int T = instance.front()->frame_count();
  for (int t = T - 1; t >= 1; --t) {
    const Rigid back = motion.pairs.at(std::size_t(t - 1)).inverse();
    for (auto* tr : instance) {
      if (tr->valid(t) && !tr->valid(t - 1)) {
        tr->position[std::size_t(t - 1)] = back(tr->position[std::size_t(t)]);
        tr->provenance[std::size_t(t - 1)] = Provenance::RigidBackward;
      }
    }
  }
}

void interpolate_gaps(Trajectory3D& tr) {
  const int T = tr.frame_count();
  std::vector<int> valid;
  for (int t = 0; t < T; ++t) {
    if (tr.valid(t)) valid.push_back(t);
  }
  if (valid.empty()) throw Error(ErrorCode::EmptyTrajectory, fmt::format("track {} has no valid frame", tr.track_id));
  const auto fill = [&](int t, const Vector3<double>& p) {
    tr.position[std::size_t(t)] = p;
    tr.provenance[std::size_t(t)] = Provenance::Interpolated;
  };
  for (int t = 0; t < valid.front(); ++t) fill(t, tr.position[std::size_t(valid.front())]);
  for (int t = valid.back() + 1; t < T; ++t) fill(t, tr.position[std::size_t(valid.back())]);
  for (std::size_t k = 0; k + 1 < valid.size(); ++k) {
    const int a = valid[k], b = valid[k + 1];
    const Vector3<double> pa = tr.position[std::size_t(a)];
    const Vector3<double> pb = tr.position[std::size_t(b)];
    for (int t = a + 1; t < b; ++t) {
      const double w = double(t - a) / double(b - a);
      fill(t, (1.0 - w) * pa + w * pb);
    }
  }
}

SceneFlowResult compute_scene_flow(const TrackTable& tracks, const std::vector<InstanceMaskFrame>& masks,
                                   const std::vector<DepthMap>& depths, const std::vector<Camera>& cams,
                                   const SceneFlowParams& params) {
  const auto assignment = assign_tracks(tracks, masks);
  auto lifted = lift_tracks(tracks, depths, cams, assignment);

  std::map<InstanceId, std::vector<Trajectory3D*>> groups;
  for (auto& tr : lifted) {
    if (tr.instance_id != 0 && tr.query_frame() >= 0) groups[tr.instance_id].push_back(&tr);
  }
  std::vector<InstanceId> ids;
  for (const auto& [id, g] : groups) ids.push_back(id);

  SceneFlowResult result;
  result.motions.resize(ids.size());
  parallel_for(ids.size(), params.jobs, [&](std::size_t k) {
    auto& group = groups.at(ids[k]);
    result.motions[k] = refine_forward(group, ids[k], params.refine);
    refine_backward(group, result.motions[k]);
    for (auto* tr : group) interpolate_gaps(*tr);
  });

  for (auto& tr : lifted) {
    if (tr.instance_id != 0 && tr.query_frame() >= 0) result.trajectories.push_back(std::move(tr));
  }
  spdlog::info("scene flow: {} of {} tracks kept across {} instances", result.trajectories.size(), lifted.size(),
               ids.size());
  return result;
}

// ---------------------------------------------------------------------------

void write_trajectories(const std::filesystem::path& path, const std::vector<Trajectory3D>& trajectories) {
  std::string out = std::string(kTrajectoriesHeader) + "\n";
  for (const auto& tr : trajectories) {
    for (int t = 0; t < tr.frame_count(); ++t) {
      const auto f = std::size_t(t);
      out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", tr.track_id, t, tr.pixel[f].x(), tr.pixel[f].y(),
                         tr.observed_visible[f] ? 1 : 0, tr.position[f].x(), tr.position[f].y(), tr.position[f].z(),
                         to_string(tr.provenance[f]), tr.instance_id);
    }
  }
  io::write_file(path, out);
}

std::vector<Trajectory3D> read_trajectories(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoriesHeader) {
    throw Error(ErrorCode::MalformedHeader, "trajectories CSV header mismatch in " + path.string());
  }
  struct Row {
    int frame;
    double x, y;
    bool visible;
    Vector3<double> p;
    Provenance prov;
    InstanceId instance;
  };
  std::map<std::int64_t, std::vector<Row>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 10) throw Error(ErrorCode::MalformedHeader, fmt::format("trajectories line {}: 10 fields expected", line_no));
    Row r;
    const auto id = parse_number<std::int64_t>(f[0], line_no);
    r.frame = parse_number<int>(f[1], line_no);
    r.x = parse_number<double>(f[2], line_no);
    r.y = parse_number<double>(f[3], line_no);
    r.visible = parse_number<int>(f[4], line_no) != 0;
    r.p = {parse_number<double>(f[5], line_no), parse_number<double>(f[6], line_no), parse_number<double>(f[7], line_no)};
    r.prov = provenance_from_string(std::string(f[8]));
    r.instance = parse_number<InstanceId>(f[9], line_no);
    rows[id].push_back(r);
  }
  std::vector<Trajectory3D> out;
  for (const auto& [id, list] : rows) {
    int T = 0;
    for (const auto& r : list) T = std::max(T, r.frame + 1);
    Trajectory3D tr(T);
    tr.track_id = id;
    tr.instance_id = list.front().instance;
    for (const auto& r : list) {
      if (r.frame < 0) throw Error(ErrorCode::InvalidArgument, "negative frame in trajectories");
      const auto fi = std::size_t(r.frame);
      if (tr.provenance[fi] != Provenance::Missing) {
        throw Error(ErrorCode::DuplicateObservation, fmt::format("track {} frame {} repeated", id, r.frame));
      }
      tr.pixel[fi] = {r.x, r.y};
      tr.observed_visible[fi] = r.visible;
      tr.position[fi] = r.p;
      tr.provenance[fi] = r.prov;
    }
    out.push_back(std::move(tr));
  }
  return out;
}

std::string motions_to_json(const std::vector<InstanceMotion>& motions) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& m : motions) {
    nlohmann::json pairs = nlohmann::json::array();
    for (std::size_t t = 0; t < m.pairs.size(); ++t) {
      std::vector<double> R(9);
      Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(R.data()) = m.pairs[t].R;
      const auto& tv = m.pairs[t].t;
      pairs.push_back({{"frame", t}, {"R", R}, {"t", {tv.x(), tv.y(), tv.z()}}, {"inliers", m.inliers[t]}});
    }
    doc.push_back({{"instance_id", m.instance_id}, {"pairs", pairs}});
  }
  return doc.dump(1) + "\n";
}

}  // namespace dyninit
