// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dyninit/gaussians.hpp"
#include "dyninit/geometry.hpp"
#include "dyninit/raster.hpp"
#include "dyninit/trajectory.hpp"

namespace dyninit::io {

namespace fs = std::filesystem;

// Portable Float Map. Depth uses the grayscale "Pf" variant, colour images the
// "PF" variant. Files are written little-endian (scale -1.0), rows bottom to
// top as the format prescribes. Readers accept either endianness but only
// |scale| == 1 and require the payload size to match the header exactly.
DepthMap read_pfm(const fs::path& path, int frame_index = 0);
void write_pfm(const fs::path& path, const DepthMap& depth);
RgbImage read_rgb_pfm(const fs::path& path);
void write_rgb_pfm(const fs::path& path, const RgbImage& image);

// Middlebury .flo: float tag 202021.25, int32 width, int32 height, then
// interleaved (u, v) float32 in row order.
inline constexpr float kFloMagic = 202021.25f;
FlowField read_flo(const fs::path& path);
void write_flo(const fs::path& path, const FlowField& flow);

// Instance masks: 16-bit binary PGM (P5, maxval 65535, big-endian samples)
// plus a JSON sidecar next to it (same stem, ".json") holding
// {"frame": n, "confidence": {"<id>": p, ...}}.
fs::path mask_sidecar_path(const fs::path& pgm_path);
InstanceMaskFrame read_masks(const fs::path& pgm_path);
void write_masks(const fs::path& pgm_path, const InstanceMaskFrame& frame);

// 8-bit binary mask (P5, maxval 255, 0 / 255) used for detector output.
Mask read_binary_mask(const fs::path& path);
void write_binary_mask(const fs::path& path, const Mask& mask);

// Tracks CSV with header "track_id,frame,x,y,visible". Coordinates are printed
// with round-trip precision. Reading validates that visible points fall inside
// a width x height image and that (track_id, frame) pairs are unique.
inline constexpr const char* kTracksHeader = "track_id,frame,x,y,visible";
TrackTable read_tracks(const fs::path& path, int width, int height);
void write_tracks(const fs::path& path, const TrackTable& tracks);

// Cameras: JSON array of {"frame", "K" (9, row-major), "R" (9, row-major),
// "t" (3), "width", "height"}.
std::vector<Camera> read_cameras(const fs::path& path);
void write_cameras(const fs::path& path, const std::vector<Camera>& cameras);

// Gaussian PLY (binary_little_endian). Static records go to element "vertex",
// dynamic records to element "dynamic_vertex". The header carries the basis
// parameters as comments and ends with a CRC-32 of all preceding header bytes.
struct GaussianPly {
  BasisSpec spec;
  GaussianSet records;
};
void write_gaussians_ply(const fs::path& path, const GaussianSet& records, const BasisSpec& spec);
GaussianPly read_gaussians_ply(const fs::path& path);

/// Number of float properties of a dynamic_vertex row that encode the position
/// curve: x, y, z plus 3 (dim - 1) offset coefficients.
int position_float_count(const BasisSpec& spec);

// Frame file naming shared by every stage: 000042.<ext>.
std::string frame_name(int frame, const std::string& extension);

// Whole-file helpers.
std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& bytes);

}  // namespace dyninit::io
