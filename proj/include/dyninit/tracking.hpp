// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dyninit/detection.hpp"
#include "dyninit/raster.hpp"

namespace dyninit {

namespace synth {
class SyntheticScene;
}

inline constexpr double kDefaultTauMask = 0.8;
inline constexpr int kDefaultPropagationInterval = 10;

/// A mask with the provider's confidence. An empty mask means "absent".
struct SegmentResult {
  Mask mask;
  double confidence = 0.0;

  bool empty() const { return mask.size() == 0 || !mask.any(); }
};

/// Prompt-based segmenter / video propagator.
class MaskProvider {
 public:
  virtual ~MaskProvider() = default;

  virtual int frame_count() const = 0;
  virtual int width() const = 0;
  virtual int height() const = 0;

  /// One result per box prompt.
  virtual std::vector<SegmentResult> segment(int frame, const std::vector<Box>& prompts) const = 0;

  /// Carries each seed mask (given at seed_frame) to target_frame, which may lie
  /// before or after the seed.
  virtual std::vector<SegmentResult> propagate(int seed_frame, const std::vector<Mask>& seeds,
                                               int target_frame) const = 0;
};

/// Provider backed by per-frame instance label maps. A box selects the label
/// covering most of the box; propagation follows the label that overlaps the
/// seed mask most. Backs both the synthetic oracle and externally produced masks.
class LabelMapProvider final : public MaskProvider {
 public:
  explicit LabelMapProvider(std::vector<InstanceMaskFrame> labels);

  static std::unique_ptr<LabelMapProvider> oracle(const synth::SyntheticScene& scene);
  /// Reads <dir>/000000.pgm ... with their confidence sidecars.
  static std::unique_ptr<LabelMapProvider> from_directory(const std::filesystem::path& dir, int frame_count);

  int frame_count() const override { return static_cast<int>(labels_.size()); }
  int width() const override;
  int height() const override;
  std::vector<SegmentResult> segment(int frame, const std::vector<Box>& prompts) const override;
  std::vector<SegmentResult> propagate(int seed_frame, const std::vector<Mask>& seeds, int target_frame) const override;

 private:
  const InstanceMaskFrame& at(int frame) const;
  SegmentResult label_result(int frame, InstanceId id) const;

  std::vector<InstanceMaskFrame> labels_;
};

struct InstanceTimeline {
  InstanceId instance_id = 0;
  int first_frame = 0;
  int last_frame = -1;
  std::map<int, double> confidence;  // frames where the instance has a mask

  bool contiguous() const;
};

struct TrackedInstance {
  InstanceId instance_id = 0;
  std::map<int, SegmentResult> masks;
};

struct TrackingResult {
  std::vector<TrackedInstance> instances;
  std::vector<InstanceMaskFrame> frames;  // composed label maps, one per frame

  std::vector<InstanceTimeline> timelines() const;
};

struct TrackingParams {
  double tau_mask = kDefaultTauMask;
  int propagation_interval = kDefaultPropagationInterval;
  int min_area = 1;
  double duplicate_overlap = 0.5;  // candidates this much inside existing instances are duplicates
};

/// Boxes of the dynamic pixels not yet claimed by an existing instance.
std::vector<Box> compute_prompts(const DynamicRegionSet& regions, const InstanceMaskFrame& existing, int min_area = 1);

struct AcceptedMask {
  InstanceId instance_id = 0;
  SegmentResult result;
};

/// Keeps candidates with confidence >= tau_mask and assigns ids from next_id
/// upwards. next_id is advanced past every id handed out.
std::vector<AcceptedMask> accept_masks(const std::vector<SegmentResult>& candidates, double tau_mask,
                                       InstanceId& next_id);

/// Per-pixel composition; overlapping masks go to the higher confidence, then
/// the lower id.
void compose_frames(TrackingResult& result, int width, int height, int frame_count);

/// Forward pass. `regions` holds the detector output of the frames it processed,
/// keyed by frame; prompts are issued only at interval boundaries that have one.
TrackingResult run_tracking(const std::map<int, DynamicRegionSet>& regions, const MaskProvider& provider,
                            const TrackingParams& params);

/// Extends every instance backward from its first frame until the provider
/// reports absence, then recomposes the label maps.
void reverse_propagate(TrackingResult& result, const MaskProvider& provider);

std::string timelines_to_json(const std::vector<InstanceTimeline>& timelines);
std::vector<InstanceTimeline> timelines_from_json(const std::string& text);

}  // namespace dyninit
