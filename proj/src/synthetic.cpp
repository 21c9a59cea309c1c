// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dyninit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "dyninit/io.hpp"

namespace dyninit::synth {

namespace {

using nlohmann::json;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double normalized_time(int t, int frame_count) {
  return frame_count > 1 ? double(t) / double(frame_count - 1) : 0.0;
}

Rigid motion_pose(const MotionSpec& m, int t, int frame_count) {
  const double tau = normalized_time(std::max(t, m.static_until), frame_count);
  Rigid pose;
  const double angle = m.rotation_phase + kTwoPi * m.rotation_harmonic * tau;
  pose.R = Eigen::AngleAxisd(angle, m.rotation_axis.normalized()).toRotationMatrix();
  const double phase = kTwoPi * m.harmonic * tau;
  pose.t = m.origin + m.velocity * tau + m.sin_amplitude * std::sin(phase) + m.cos_amplitude * std::cos(phase);
  return pose;
}

float checker(double u, double v, double period) {
  const auto cu = static_cast<long>(std::floor(u / period));
  const auto cv = static_cast<long>(std::floor(v / period));
  return ((cu + cv) & 1) ? 1.0f : 0.0f;
}

// ---- JSON helpers ----------------------------------------------------------

json vec(const Vector3<double>& v) { return json::array({v.x(), v.y(), v.z()}); }

Vector3<double> vec(const json& j) {
  const auto a = j.get<std::vector<double>>();
  if (a.size() != 3) throw Error(ErrorCode::InvalidArgument, "expected a 3-vector");
  return {a[0], a[1], a[2]};
}

json motion_json(const MotionSpec& m) {
  return {{"origin", vec(m.origin)},
          {"velocity", vec(m.velocity)},
          {"sin_amplitude", vec(m.sin_amplitude)},
          {"cos_amplitude", vec(m.cos_amplitude)},
          {"harmonic", m.harmonic},
          {"rotation_axis", vec(m.rotation_axis)},
          {"rotation_phase", m.rotation_phase},
          {"rotation_harmonic", m.rotation_harmonic},
          {"static_until", m.static_until}};
}

MotionSpec motion_from(const json& j) {
  MotionSpec m;
  m.origin = vec(j.at("origin"));
  m.velocity = vec(j.at("velocity"));
  m.sin_amplitude = vec(j.at("sin_amplitude"));
  m.cos_amplitude = vec(j.at("cos_amplitude"));
  m.harmonic = j.at("harmonic").get<int>();
  m.rotation_axis = vec(j.at("rotation_axis"));
  m.rotation_phase = j.at("rotation_phase").get<double>();
  m.rotation_harmonic = j.at("rotation_harmonic").get<int>();
  m.static_until = j.value("static_until", 0);
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------

SceneSpec default_scene() {
  SceneSpec s;
  s.frame_count = 60;
  s.width = 128;
  s.height = 128;
  s.seed = 7;
  s.camera.motion.velocity = {0.0, 0.0, 0.6};

  ObjectSpec a;
  a.instance_id = 1;
  a.offset = {0.7, 0.0, 0.0};
  a.size = 0.5;
  a.grid = 40;
  a.color = {0.85, 0.25, 0.2};
  a.confidence = 0.97;
  a.motion.origin = {0.0, 0.0, 3.0};
  a.motion.sin_amplitude = {0.0, 0.0, 0.2};
  a.motion.harmonic = 1;
  a.motion.rotation_harmonic = 3;

  ObjectSpec b;
  b.instance_id = 2;
  b.offset = {-0.7, 0.0, 0.0};
  b.size = 0.4;
  b.grid = 36;
  b.color = {0.2, 0.45, 0.9};
  b.confidence = 0.93;
  b.motion.origin = {0.0, 0.0, 3.6};
  b.motion.cos_amplitude = {0.0, 0.0, 0.3};
  b.motion.harmonic = 2;
  b.motion.rotation_harmonic = 3;

  s.objects = {a, b};
  return s;
}

std::string to_json(const SceneSpec& spec) {
  json objects = json::array();
  for (const auto& o : spec.objects) {
    objects.push_back({{"instance_id", o.instance_id},
                       {"shape", o.shape == Shape::Patch ? "patch" : "box"},
                       {"offset", vec(o.offset)},
                       {"size", o.size},
                       {"grid", o.grid},
                       {"color", vec(o.color)},
                       {"confidence", o.confidence},
                       {"motion", motion_json(o.motion)}});
  }
  const json doc = {{"frame_count", spec.frame_count},
                    {"width", spec.width},
                    {"height", spec.height},
                    {"seed", spec.seed},
                    {"camera",
                     {{"fx", spec.camera.fx},
                      {"fy", spec.camera.fy},
                      {"cx", spec.camera.cx},
                      {"cy", spec.camera.cy},
                      {"motion", motion_json(spec.camera.motion)}}},
                    {"background",
                     {{"depth", spec.background.depth},
                      {"extent", spec.background.extent},
                      {"spacing", spec.background.spacing}}},
                    {"objects", objects}};
  return doc.dump(1) + "\n";
}

SceneSpec scene_from_json(const std::string& text) {
  SceneSpec s;
  try {
    const json doc = json::parse(text);
    s.frame_count = doc.at("frame_count").get<int>();
    s.width = doc.at("width").get<int>();
    s.height = doc.at("height").get<int>();
    s.seed = doc.at("seed").get<std::uint64_t>();
    const auto& cam = doc.at("camera");
    s.camera.fx = cam.at("fx").get<double>();
    s.camera.fy = cam.at("fy").get<double>();
    s.camera.cx = cam.at("cx").get<double>();
    s.camera.cy = cam.at("cy").get<double>();
    s.camera.motion = motion_from(cam.at("motion"));
    const auto& bg = doc.at("background");
    s.background.depth = bg.at("depth").get<double>();
    s.background.extent = bg.at("extent").get<double>();
    s.background.spacing = bg.at("spacing").get<double>();
    for (const auto& o : doc.at("objects")) {
      ObjectSpec obj;
      obj.instance_id = o.at("instance_id").get<InstanceId>();
      const auto shape = o.at("shape").get<std::string>();
      if (shape != "patch" && shape != "box") throw Error(ErrorCode::InvalidArgument, "unknown shape " + shape);
      obj.shape = shape == "patch" ? Shape::Patch : Shape::Box;
      obj.offset = vec(o.at("offset"));
      obj.size = o.at("size").get<double>();
      obj.grid = o.at("grid").get<int>();
      obj.color = vec(o.at("color"));
      obj.confidence = o.at("confidence").get<double>();
      obj.motion = motion_from(o.at("motion"));
      s.objects.push_back(obj);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("scene spec: ") + e.what());
  }
  if (s.frame_count < 2 || s.width < 1 || s.height < 1) {
    throw Error(ErrorCode::InvalidArgument, "scene spec needs >= 2 frames and a positive image size");
  }
  for (const auto& o : s.objects) {
    if (o.instance_id == 0) throw Error(ErrorCode::InvalidArgument, "object instance ids must be >= 1");
    const int points = o.shape == Shape::Patch ? o.grid * o.grid : 6 * o.grid * o.grid;
    if (points < 100) throw Error(ErrorCode::InvalidArgument, "objects need at least 100 points");
  }
  return s;
}

// ---------------------------------------------------------------------------

SyntheticScene::SyntheticScene(SceneSpec spec) : spec_(std::move(spec)) {
  std::mt19937_64 rng(spec_.seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);

  const auto& bg = spec_.background;
  const int n_bg = static_cast<int>(std::floor(2.0 * bg.extent / bg.spacing)) + 1;
  for (int i = 0; i < n_bg; ++i) {
    for (int j = 0; j < n_bg; ++j) {
      const double x = -bg.extent + j * bg.spacing;
      const double y = -bg.extent + i * bg.spacing;
      local_.emplace_back(x, y, bg.depth);
      const float shade = 0.45f + 0.2f * float(std::sin(3.1 * x) * std::cos(2.3 * y)) + 0.25f * checker(x, y, 0.35);
      color_.emplace_back(shade, 0.9f * shade + 0.05f, 0.75f * shade + 0.1f);
      object_.push_back(-1);
    }
  }
  first_object_point_ = local_.size();

  for (std::size_t k = 0; k < spec_.objects.size(); ++k) {
    const auto& o = spec_.objects[k];
    const double step = o.size / o.grid;
    const auto add = [&](const Vector3<double>& p, double u, double v) {
      local_.push_back(o.offset + p);
      const float tex = 0.55f + 0.45f * checker(u, v, o.size / 4.0);
      color_.push_back((o.color * tex).cast<float>());
      object_.push_back(static_cast<int>(k));
    };
    for (int face = 0; face < (o.shape == Shape::Patch ? 1 : 6); ++face) {
      for (int i = 0; i < o.grid; ++i) {
        for (int j = 0; j < o.grid; ++j) {
          const double u = -0.5 * o.size + (j + 0.5 + 0.6 * unit(rng)) * step;
          const double v = -0.5 * o.size + (i + 0.5 + 0.6 * unit(rng)) * step;
          const double w = 0.004 * o.size * unit(rng);
          if (o.shape == Shape::Patch) {
            add({u, v, w}, u, v);
            continue;
          }
          const double h = 0.5 * o.size + w;
          const int axis = face / 2;
          const double sign = (face % 2) ? 1.0 : -1.0;
          Vector3<double> p;
          p(axis) = sign * h;
          p((axis + 1) % 3) = u;
          p((axis + 2) % 3) = v;
          add(p, u, v);
        }
      }
    }
  }
}

Camera SyntheticScene::camera(int t) const {
  const Rigid cam_to_world = motion_pose(spec_.camera.motion, t, spec_.frame_count);
  Camera cam;
  cam.frame_index = t;
  cam.K << spec_.camera.fx, 0.0, spec_.camera.cx, 0.0, spec_.camera.fy, spec_.camera.cy, 0.0, 0.0, 1.0;
  cam.R = cam_to_world.R.transpose();
  cam.t = -(cam.R * cam_to_world.t);
  cam.width = spec_.width;
  cam.height = spec_.height;
  return cam;
}

std::vector<Camera> SyntheticScene::cameras() const {
  std::vector<Camera> out;
  for (int t = 0; t < spec_.frame_count; ++t) out.push_back(camera(t));
  return out;
}

Rigid SyntheticScene::object_pose(std::size_t object, int t) const {
  return motion_pose(spec_.objects.at(object).motion, t, spec_.frame_count);
}

Vector3<double> SyntheticScene::world_point(std::size_t point, int t) const {
  const int k = object_[point];
  return k < 0 ? local_[point] : object_pose(std::size_t(k), t)(local_[point]);
}

InstanceId SyntheticScene::point_instance(std::size_t point) const {
  const int k = object_[point];
  return k < 0 ? InstanceId(0) : spec_.objects[std::size_t(k)].instance_id;
}

FrameRender SyntheticScene::render_frame(int t) const {
  if (t < 0 || t >= spec_.frame_count) throw Error(ErrorCode::InvalidArgument, "frame out of range");
  const int W = spec_.width;
  const int H = spec_.height;
  const Camera cam = camera(t);
  std::vector<Rigid> poses;
  for (std::size_t k = 0; k < spec_.objects.size(); ++k) poses.push_back(object_pose(k, t));

  FrameRender out;
  out.winner = Raster<std::int32_t>::Constant(H, W, -1);
  out.z = Raster<double>::Zero(H, W);
  for (std::size_t i = 0; i < local_.size(); ++i) {
    const int k = object_[i];
    const Vector3<double> pw = k < 0 ? local_[i] : poses[std::size_t(k)](local_[i]);
    const Vector3<double> pc = cam.to_camera(pw);
    if (!(pc.z() > 1e-6)) continue;
    const Vector3<double> h = cam.K * pc;
    int row = 0, col = 0;
    if (!nearest_pixel(h.x() / h.z(), h.y() / h.z(), W, H, row, col)) continue;
    if (out.winner(row, col) < 0 || pc.z() < out.z(row, col)) {
      out.winner(row, col) = static_cast<std::int32_t>(i);
      out.z(row, col) = pc.z();
    }
  }

  out.rgb = RgbImage(W, H);
  out.depth.frame_index = t;
  out.depth.values = Raster<float>::Zero(H, W);
  out.masks = InstanceMaskFrame(t, W, H);
  for (int row = 0; row < H; ++row) {
    for (int col = 0; col < W; ++col) {
      const std::int32_t w = out.winner(row, col);
      if (w < 0) continue;
      const auto& c = color_[std::size_t(w)];
      out.rgb.r(row, col) = c.x();
      out.rgb.g(row, col) = c.y();
      out.rgb.b(row, col) = c.z();
      out.depth.values(row, col) = static_cast<float>(out.z(row, col));
      const int k = object_[std::size_t(w)];
      if (k >= 0) {
        const auto& obj = spec_.objects[std::size_t(k)];
        out.masks.ids(row, col) = obj.instance_id;
        out.masks.confidence[obj.instance_id] = obj.confidence;
      }
    }
  }
  return out;
}

FlowField SyntheticScene::render_flow(int t) const { return render_flow(t, render_frame(t)); }

FlowField SyntheticScene::render_flow(int t, const FrameRender& frame) const {
  if (t < 0 || t + 1 >= spec_.frame_count) throw Error(ErrorCode::InvalidArgument, "flow needs frames t and t + 1");
  const int W = spec_.width;
  const int H = spec_.height;
  const Camera cam = camera(t);
  const Camera next = camera(t + 1);
  std::vector<Rigid> step;
  for (std::size_t k = 0; k < spec_.objects.size(); ++k) step.push_back(object_pose(k, t + 1) * object_pose(k, t).inverse());

  FlowField flow(W, H);
  for (int row = 0; row < H; ++row) {
    for (int col = 0; col < W; ++col) {
      const std::int32_t w = frame.winner(row, col);
      if (w < 0) continue;
      const Vector3<double> q = unproject(Vector2<double>(col, row), frame.z(row, col), cam);
      const int k = object_[std::size_t(w)];
      const Vector3<double> moved = k < 0 ? q : step[std::size_t(k)](q);
      const Vector3<double> pc = next.to_camera(moved);
      if (!(pc.z() > 1e-6)) continue;
      const Vector3<double> h = next.K * pc;
      flow.u(row, col) = static_cast<float>(h.x() / h.z() - col);
      flow.v(row, col) = static_cast<float>(h.y() / h.z() - row);
    }
  }
  return flow;
}

Raster<double> SyntheticScene::object_displacement(int t, const FrameRender& frame) const {
  const int W = spec_.width;
  const int H = spec_.height;
  const Camera cam = camera(t);
  const Camera next = camera(t + 1);
  Raster<double> out = Raster<double>::Zero(H, W);
  for (int row = 0; row < H; ++row) {
    for (int col = 0; col < W; ++col) {
      const std::int32_t w = frame.winner(row, col);
      if (w < 0 || object_[std::size_t(w)] < 0) continue;
      const auto k = std::size_t(object_[std::size_t(w)]);
      const Vector3<double> q = unproject(Vector2<double>(col, row), frame.z(row, col), cam);
      const Vector3<double> moved = (object_pose(k, t + 1) * object_pose(k, t).inverse())(q);
      out(row, col) = (project(moved, next).pixel - project(q, next).pixel).norm();
    }
  }
  return out;
}

std::vector<std::size_t> SyntheticScene::sample_track_points(int n_tracks, std::uint64_t seed) const {
  std::vector<std::size_t> pool;
  for (std::size_t i = first_object_point_; i < local_.size(); ++i) pool.push_back(i);
  const std::size_t n = std::min<std::size_t>(pool.size(), std::size_t(std::max(n_tracks, 0)));
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + std::size_t(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  return pool;
}

TrackTable SyntheticScene::render_tracks(int n_tracks, std::uint64_t seed) const {
  const auto points = sample_track_points(n_tracks, seed);
  const int T = spec_.frame_count;
  std::vector<TrackTable> per_track(points.size());
  for (int t = 0; t < T; ++t) {
    const Camera cam = camera(t);
    const FrameRender frame = render_frame(t);
    for (std::size_t k = 0; k < points.size(); ++k) {
      TrackObservation obs;
      obs.track_id = static_cast<std::int64_t>(k);
      obs.frame = t;
      const Vector3<double> pc = cam.to_camera(world_point(points[k], t));
      if (pc.z() > 1e-6) {
        const Vector3<double> h = cam.K * pc;
        obs.x = h.x() / h.z();
        obs.y = h.y() / h.z();
        int row = 0, col = 0;
        obs.visible = nearest_pixel(obs.x, obs.y, spec_.width, spec_.height, row, col) &&
                      frame.winner(row, col) == static_cast<std::int32_t>(points[k]);
      }
      per_track[k].push_back(obs);
    }
  }
  TrackTable table;
  table.reserve(points.size() * std::size_t(T));
  for (auto& rows : per_track) table.insert(table.end(), rows.begin(), rows.end());
  return table;
}

GroundTruth SyntheticScene::ground_truth(int n_tracks, std::uint64_t seed) const {
  GroundTruth gt;
  const int T = spec_.frame_count;
  const auto points = sample_track_points(n_tracks, seed);
  for (std::size_t k = 0; k < points.size(); ++k) {
    TrackTruth truth;
    truth.track_id = static_cast<std::int64_t>(k);
    truth.point_index = points[k];
    truth.instance_id = point_instance(points[k]);
    truth.positions.resize(T, 3);
    for (int t = 0; t < T; ++t) truth.positions.row(t) = world_point(points[k], t).transpose();
    gt.tracks.push_back(std::move(truth));
  }
  for (std::size_t k = 0; k < spec_.objects.size(); ++k) {
    auto& motions = gt.pair_motion[spec_.objects[k].instance_id];
    for (int t = 0; t + 1 < T; ++t) motions.push_back(object_pose(k, t + 1) * object_pose(k, t).inverse());
  }
  return gt;
}

// ---------------------------------------------------------------------------

FrameRender render_frame(const SceneSpec& spec, int t) { return SyntheticScene(spec).render_frame(t); }
FlowField render_flow(const SceneSpec& spec, int t) { return SyntheticScene(spec).render_flow(t); }
TrackTable render_tracks(const SceneSpec& spec, int n_tracks, std::uint64_t seed) {
  return SyntheticScene(spec).render_tracks(n_tracks, seed);
}
GroundTruth ground_truth(const SceneSpec& spec, int n_tracks, std::uint64_t seed) {
  return SyntheticScene(spec).ground_truth(n_tracks, seed);
}

void write_dataset(const SceneSpec& spec, int n_tracks, std::uint64_t track_seed, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const SyntheticScene scene(spec);
  const int T = spec.frame_count;
  fs::create_directories(dir);
  io::write_file(dir / "scene.json", to_json(spec));
  io::write_cameras(dir / "cameras.json", scene.cameras());
  for (int t = 0; t < T; ++t) {
    const FrameRender frame = scene.render_frame(t);
    io::write_rgb_pfm(dir / "rgb" / io::frame_name(t, "pfm"), frame.rgb);
    io::write_pfm(dir / "depth" / io::frame_name(t, "pfm"), frame.depth);
    io::write_masks(dir / "gt" / "masks" / io::frame_name(t, "pgm"), frame.masks);
    if (t + 1 < T) io::write_flo(dir / "flow" / io::frame_name(t, "flo"), scene.render_flow(t, frame));
  }
  io::write_tracks(dir / "tracks.csv", scene.render_tracks(n_tracks, track_seed));

  const GroundTruth gt = scene.ground_truth(n_tracks, track_seed);
  std::string csv = "track_id,frame,X,Y,Z,instance_id\n";
  for (const auto& tr : gt.tracks) {
    for (int t = 0; t < T; ++t) {
      csv += fmt::format("{},{},{},{},{},{}\n", tr.track_id, t, tr.positions(t, 0), tr.positions(t, 1),
                         tr.positions(t, 2), tr.instance_id);
    }
  }
  io::write_file(dir / "gt" / "trajectories.csv", csv);

  json motions = json::object();
  for (const auto& [id, pairs] : gt.pair_motion) {
    json list = json::array();
    for (const auto& m : pairs) {
      std::vector<double> R(9);
      Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(R.data()) = m.R;
      list.push_back({{"R", R}, {"t", {m.t.x(), m.t.y(), m.t.z()}}});
    }
    motions[std::to_string(id)] = list;
  }
  io::write_file(dir / "gt" / "motions.json", motions.dump(1) + "\n");
  spdlog::info("synthetic dataset: {} frames, {} tracks -> {}", T, gt.tracks.size(), dir.string());
}

}  // namespace dyninit::synth
