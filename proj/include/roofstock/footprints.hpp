// Copyright 2026 The roofstock Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "roofstock/geocore.hpp"

namespace roofstock {

/// Text-prompted detector settings forwarded to the segmentation backend.
struct SegmenterConfig {
    std::string text_prompt = "house";
    double box_threshold = 0.30;   ///< detection confidence cut-off
    double text_threshold = 0.30;  ///< prompt-association cut-off

    void validate() const;
    friend bool operator==(const SegmenterConfig&, const SegmenterConfig&) = default;
};

/// Binary instance mask in the frame of the segmented window.
///
/// Only the bounding box of the foreground is stored; `width`/`height` give
/// the full window frame and `box` locates the stored block inside it.
struct InstanceMask {
    int width = 0;
    int height = 0;
    PixelRect box;
    std::vector<std::uint8_t> bits;  ///< box.height() x box.width(), 0 or 1
    double score = 1.0;

    bool at(int row, int col) const;
    std::size_t foreground_count() const;

    /// Crops a full-frame 0/1 grid down to its foreground bounding box.
    static InstanceMask from_full(int width, int height, std::span<const std::uint8_t> full, double score);
};

struct SegmentRequest {
    std::span<const std::uint8_t> window;
    int width = 0;
    int height = 0;
    int bands = 0;
    SegmenterConfig cfg;
};

/// Prompted instance segmentation backend (adapter boundary).
class PromptedSegmenter {
public:
    virtual ~PromptedSegmenter() = default;
    virtual std::vector<InstanceMask> segment(const SegmentRequest& request) = 0;
    /// Whether concurrent calls to segment() are safe.
    virtual bool reentrant() const { return false; }
};

/// Deterministic backend: mean intensity >= 128 is foreground, one mask per
/// 4-connected component, score 1. Records every config it receives.
class ThresholdSegmenter : public PromptedSegmenter {
public:
    std::vector<InstanceMask> segment(const SegmentRequest& request) override;
    bool reentrant() const override { return true; }

    std::vector<SegmenterConfig> received_configs() const;

private:
    mutable std::mutex mutex_;
    std::vector<SegmenterConfig> received_;
};

/// One polygon per 4-connected foreground component, vertices on pixel
/// corners in (x = col, y = row) window coordinates. Exterior rings have
/// positive shoelace area in that frame, holes negative. Collinear vertices
/// are merged, so the shoelace area equals the component's pixel count.
std::vector<Polygon> mask_to_polygons(const InstanceMask& mask);

/// Douglas-Peucker on an open polyline; keeps both endpoints. A vertex is
/// kept when its distance to the current chord segment exceeds `tolerance`.
std::vector<Point> simplify_polyline(std::span<const Point> points, double tolerance);

/// Closed-ring simplification: the ring is cut at vertex 0 and at the vertex
/// farthest from it, and both arcs are simplified. If the result would have
/// fewer than 4 vertices or lose its area the input ring is returned.
Ring simplify_ring(const Ring& ring, double tolerance);

inline constexpr double kDefaultSimplifyTolerance = 5e-6;

Polygon simplify_dp(const Polygon& poly, double tolerance = kDefaultSimplifyTolerance);

struct SegmentOptions {
    SegmenterConfig segmenter;
    double simplify_tolerance = kDefaultSimplifyTolerance;  ///< CRS units
    double min_area_m2 = 9.0;
    double min_hole_area_m2 = 1.0;
    double overlap_iou = 0.5;  ///< lower-scored instance dropped above this IoU
    std::string source = "sam";
};

/// Runs the segmenter over the raster and vectorises its masks into
/// world-coordinate footprints with ids `<raster id>_<n>` (n in scan order).
FootprintCollection segment_buildings(const GeoRaster& raster, PromptedSegmenter& segmenter,
                                      const SegmentOptions& options = {});

struct AlignmentReport {
    double mean_iou = 0.0;
    double median_centroid_offset_m = 0.0;
    double matched_fraction = 0.0;
    std::size_t matched = 0;
};

/// Compares two footprint layers (e.g. third-party vs. image-derived).
/// Features are paired one-to-one, greedily by descending IoU (> 0).
/// mean_iou averages over `a` (unmatched count as 0); matched_fraction is
/// 2 * pairs / (|a| + |b|); offsets are centroid distances of pairs in metres.
AlignmentReport alignment_report(const FootprintCollection& a, const FootprintCollection& b);

/// Copies roof_type / roof_material from `labeled` onto the best-matching
/// target features (one-to-one, IoU >= min_iou). Returns the number labelled.
std::size_t transfer_labels(FootprintCollection& target, const FootprintCollection& labeled, double min_iou = 0.5);

}  // namespace roofstock
