// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dyninit/tracking.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "dyninit/io.hpp"
#include "dyninit/synthetic.hpp"

namespace dyninit {

namespace {

/// Most frequent nonzero label among the selected pixels; ties go to the lower id.
InstanceId majority_label(const Raster<InstanceId>& ids, const Mask& select) {
  std::map<InstanceId, long> counts;
  for (Eigen::Index i = 0; i < ids.size(); ++i) {
    if (select(i) && ids(i) != 0) ++counts[ids(i)];
  }
  InstanceId best = 0;
  long best_count = 0;
  for (const auto& [id, n] : counts) {
    if (n > best_count) {
      best = id;
      best_count = n;
    }
  }
  return best;
}

Mask box_mask(const Box& box, int width, int height) {
  Mask m = Mask::Constant(height, width, false);
  const int x0 = std::max(box.x0, 0), y0 = std::max(box.y0, 0);
  const int x1 = std::min(box.x1, width - 1), y1 = std::min(box.y1, height - 1);
  if (x1 >= x0 && y1 >= y0) m.block(y0, x0, y1 - y0 + 1, x1 - x0 + 1).setConstant(true);
  return m;
}

template <typename Fn>
auto provider_call(int frame, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ProviderFailure) throw;
    throw Error(ErrorCode::ProviderFailure, fmt::format("frame {}: {}", frame, e.message()));
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ProviderFailure, fmt::format("frame {}: {}", frame, e.what()));
  }
}

}  // namespace

// ---- LabelMapProvider ------------------------------------------------------

LabelMapProvider::LabelMapProvider(std::vector<InstanceMaskFrame> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw Error(ErrorCode::InvalidArgument, "label provider needs at least one frame");
  for (const auto& f : labels_) {
    if (f.width() != labels_.front().width() || f.height() != labels_.front().height()) {
      throw Error(ErrorCode::DimensionMismatch, "label maps differ in size");
    }
  }
}

std::unique_ptr<LabelMapProvider> LabelMapProvider::oracle(const synth::SyntheticScene& scene) {
  std::vector<InstanceMaskFrame> labels;
  for (int t = 0; t < scene.frame_count(); ++t) labels.push_back(scene.render_frame(t).masks);
  return std::make_unique<LabelMapProvider>(std::move(labels));
}

std::unique_ptr<LabelMapProvider> LabelMapProvider::from_directory(const std::filesystem::path& dir, int frame_count) {
  std::vector<InstanceMaskFrame> labels;
  for (int t = 0; t < frame_count; ++t) {
    auto frame = io::read_masks(dir / io::frame_name(t, "pgm"));
    frame.frame_index = t;
    labels.push_back(std::move(frame));
  }
  return std::make_unique<LabelMapProvider>(std::move(labels));
}

int LabelMapProvider::width() const { return labels_.front().width(); }
int LabelMapProvider::height() const { return labels_.front().height(); }

const InstanceMaskFrame& LabelMapProvider::at(int frame) const {
  if (frame < 0 || frame >= frame_count()) {
    throw Error(ErrorCode::ProviderFailure, fmt::format("frame {} outside the provider's {} frames", frame, frame_count()));
  }
  return labels_[std::size_t(frame)];
}

SegmentResult LabelMapProvider::label_result(int frame, InstanceId id) const {
  const auto& labels = at(frame);
  SegmentResult r;
  r.mask = id == 0 ? Mask::Constant(height(), width(), false) : labels.mask_of(id);
  if (id != 0 && r.mask.any()) {
    const auto it = labels.confidence.find(id);
    r.confidence = it == labels.confidence.end() ? 0.0 : it->second;
  }
  return r;
}

std::vector<SegmentResult> LabelMapProvider::segment(int frame, const std::vector<Box>& prompts) const {
  std::vector<SegmentResult> out;
  for (const auto& box : prompts) {
    out.push_back(label_result(frame, majority_label(at(frame).ids, box_mask(box, width(), height()))));
  }
  return out;
}

std::vector<SegmentResult> LabelMapProvider::propagate(int seed_frame, const std::vector<Mask>& seeds,
                                                       int target_frame) const {
  std::vector<SegmentResult> out;
  for (const auto& seed : seeds) {
    if (seed.rows() != height() || seed.cols() != width()) {
      throw Error(ErrorCode::DimensionMismatch, "seed mask size differs from the label maps");
    }
    out.push_back(label_result(target_frame, majority_label(at(seed_frame).ids, seed)));
  }
  return out;
}

// ---- timelines -------------------------------------------------------------

bool InstanceTimeline::contiguous() const {
  if (confidence.empty()) return true;
  return confidence.begin()->first == first_frame && confidence.rbegin()->first == last_frame &&
         static_cast<int>(confidence.size()) == last_frame - first_frame + 1;
}

std::vector<InstanceTimeline> TrackingResult::timelines() const {
  std::vector<InstanceTimeline> out;
  for (const auto& inst : instances) {
    InstanceTimeline tl;
    tl.instance_id = inst.instance_id;
    for (const auto& [frame, r] : inst.masks) tl.confidence[frame] = r.confidence;
    if (!tl.confidence.empty()) {
      tl.first_frame = tl.confidence.begin()->first;
      tl.last_frame = tl.confidence.rbegin()->first;
    }
    out.push_back(std::move(tl));
  }
  return out;
}

std::string timelines_to_json(const std::vector<InstanceTimeline>& timelines) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& tl : timelines) {
    std::vector<int> frames;
    std::vector<double> conf;
    for (const auto& [f, c] : tl.confidence) {
      frames.push_back(f);
      conf.push_back(c);
    }
    doc.push_back({{"instance_id", tl.instance_id},
                   {"first_frame", tl.first_frame},
                   {"last_frame", tl.last_frame},
                   {"frames", frames},
                   {"confidence", conf}});
  }
  return doc.dump(1) + "\n";
}

std::vector<InstanceTimeline> timelines_from_json(const std::string& text) {
  std::vector<InstanceTimeline> out;
  try {
    for (const auto& j : nlohmann::json::parse(text)) {
      InstanceTimeline tl;
      tl.instance_id = j.at("instance_id").get<InstanceId>();
      tl.first_frame = j.at("first_frame").get<int>();
      tl.last_frame = j.at("last_frame").get<int>();
      const auto frames = j.at("frames").get<std::vector<int>>();
      const auto conf = j.at("confidence").get<std::vector<double>>();
      if (frames.size() != conf.size()) throw Error(ErrorCode::MalformedHeader, "timeline frames/confidence mismatch");
      for (std::size_t i = 0; i < frames.size(); ++i) tl.confidence[frames[i]] = conf[i];
      out.push_back(std::move(tl));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, std::string("timelines: ") + e.what());
  }
  return out;
}

// ---- orchestration ---------------------------------------------------------

std::vector<Box> compute_prompts(const DynamicRegionSet& regions, const InstanceMaskFrame& existing, int min_area) {
  if (regions.mask.size() == 0) return {};
  if (existing.ids.size() != 0 &&
      (existing.ids.rows() != regions.mask.rows() || existing.ids.cols() != regions.mask.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "region mask and instance masks differ in size");
  }
  Mask remaining = regions.mask;
  if (existing.ids.size() != 0) remaining = remaining && (existing.ids == InstanceId(0));
  return extract_regions(remaining, min_area, regions.frame).boxes;
}

std::vector<AcceptedMask> accept_masks(const std::vector<SegmentResult>& candidates, double tau_mask,
                                       InstanceId& next_id) {
  if (!(tau_mask >= 0.0 && tau_mask <= 1.0)) throw Error(ErrorCode::InvalidArgument, "tau_mask must lie in [0, 1]");
  std::vector<AcceptedMask> out;
  for (const auto& c : candidates) {
    if (c.confidence < tau_mask) continue;
    out.push_back({next_id, c});
    ++next_id;
  }
  return out;
}

void compose_frames(TrackingResult& result, int width, int height, int frame_count) {
  result.frames.clear();
  for (int t = 0; t < frame_count; ++t) {
    InstanceMaskFrame frame(t, width, height);
    Raster<double> owner_conf = Raster<double>::Constant(height, width, -1.0);
    std::vector<const TrackedInstance*> order;
    for (const auto& inst : result.instances) order.push_back(&inst);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->instance_id < b->instance_id; });
    for (const auto* inst : order) {
      const auto it = inst->masks.find(t);
      if (it == inst->masks.end()) continue;
      const auto& r = it->second;
      for (Eigen::Index i = 0; i < frame.ids.size(); ++i) {
        if (r.mask(i) && r.confidence > owner_conf(i)) {
          frame.ids(i) = inst->instance_id;
          owner_conf(i) = r.confidence;
        }
      }
    }
    for (const auto* inst : order) {
      const auto it = inst->masks.find(t);
      if (it != inst->masks.end() && (frame.ids == inst->instance_id).any()) {
        frame.confidence[inst->instance_id] = it->second.confidence;
      }
    }
    result.frames.push_back(std::move(frame));
  }
}

TrackingResult run_tracking(const std::map<int, DynamicRegionSet>& regions, const MaskProvider& provider,
                            const TrackingParams& params) {
  if (params.propagation_interval < 1) throw Error(ErrorCode::InvalidArgument, "propagation interval must be >= 1");
  const int T = provider.frame_count();
  const int W = provider.width();
  const int H = provider.height();
  TrackingResult result;
  InstanceId next_id = 1;
  std::vector<std::size_t> live;  // indices into result.instances

  for (int b = 0; b < T; b += params.propagation_interval) {
    const auto reg = regions.find(b);
    if (reg != regions.end()) {
      InstanceMaskFrame existing(b, W, H);
      for (std::size_t k : live) {
        const auto& inst = result.instances[k];
        existing.ids = inst.masks.at(b).mask.select(inst.instance_id, existing.ids);
      }
      const auto prompts = compute_prompts(reg->second, existing, params.min_area);
      if (!prompts.empty()) {
        const auto candidates = provider_call(b, [&] { return provider.segment(b, prompts); });
        Mask claimed = existing.ids != InstanceId(0);
        std::vector<SegmentResult> fresh;
        for (const auto& c : candidates) {
          if (c.empty()) continue;
          const double inside = double((c.mask && claimed).count()) / double(c.mask.count());
          if (inside > params.duplicate_overlap) continue;
          if (c.confidence >= params.tau_mask) claimed = claimed || c.mask;
          fresh.push_back(c);
        }
        for (auto& a : accept_masks(fresh, params.tau_mask, next_id)) {
          TrackedInstance inst;
          inst.instance_id = a.instance_id;
          inst.masks[b] = std::move(a.result);
          result.instances.push_back(std::move(inst));
          live.push_back(result.instances.size() - 1);
          spdlog::debug("frame {}: new instance {}", b, a.instance_id);
        }
      }
    }

    const int end = std::min(b + params.propagation_interval, T - 1);
    if (live.empty() || end <= b) continue;
    std::vector<Mask> seeds;
    for (std::size_t k : live) seeds.push_back(result.instances[k].masks.at(b).mask);
    std::vector<bool> alive(live.size(), true);
    for (int f = b + 1; f <= end; ++f) {
      const auto out = provider_call(f, [&] { return provider.propagate(b, seeds, f); });
      if (out.size() != seeds.size()) {
        throw Error(ErrorCode::ProviderFailure, fmt::format("frame {}: provider returned {} masks for {} seeds", f,
                                                            out.size(), seeds.size()));
      }
      for (std::size_t s = 0; s < live.size(); ++s) {
        if (!alive[s]) continue;
        if (out[s].empty()) {
          alive[s] = false;
          continue;
        }
        result.instances[live[s]].masks[f] = out[s];
      }
    }
    std::vector<std::size_t> still;
    for (std::size_t s = 0; s < live.size(); ++s) {
      if (alive[s] && result.instances[live[s]].masks.count(end)) still.push_back(live[s]);
    }
    live = std::move(still);
  }
  compose_frames(result, W, H, T);
  return result;
}

void reverse_propagate(TrackingResult& result, const MaskProvider& provider) {
  for (auto& inst : result.instances) {
    if (inst.masks.empty()) continue;
    const int first = inst.masks.begin()->first;
    if (first == 0) continue;
    const std::vector<Mask> seed{inst.masks.begin()->second.mask};
    for (int f = first - 1; f >= 0; --f) {
      const auto out = provider_call(f, [&] { return provider.propagate(first, seed, f); });
      if (out.empty() || out.front().empty()) break;
      inst.masks[f] = out.front();
    }
    spdlog::debug("instance {}: reverse pass starts at frame {}", inst.instance_id, inst.masks.begin()->first);
  }
  compose_frames(result, provider.width(), provider.height(), provider.frame_count());
}

}  // namespace dyninit
