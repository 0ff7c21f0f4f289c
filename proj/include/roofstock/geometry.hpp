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

#include <span>
#include <vector>

namespace roofstock {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

/// Closed ring: the first vertex is repeated as the last one.
using Ring = std::vector<Point>;

struct Polygon {
    Ring exterior;
    std::vector<Ring> holes;
};

/// Shoelace signed area of a closed ring (positive when counter-clockwise in a y-up frame).
double signed_area(std::span<const Point> ring);

/// Exterior area minus hole areas.
double polygon_area(const Polygon& poly);

/// Area-weighted centroid of the polygon (exterior minus holes).
Point polygon_centroid(const Polygon& poly);

bool is_closed(std::span<const Point> ring);

/// Exterior counter-clockwise (positive area), holes clockwise.
void orient_polygon(Polygon& poly);

/// Distance from p to the closed segment [a, b].
double point_segment_distance(const Point& p, const Point& a, const Point& b);

/// Even-odd point-in-polygon test over exterior and holes.
bool contains_point(const Polygon& poly, const Point& p);

struct Envelope {
    double min_x, min_y, max_x, max_y;
};

Envelope envelope(const Polygon& poly);

bool envelopes_intersect(const Envelope& a, const Envelope& b);

/// Area of the intersection of two (possibly non-convex, holed) polygons.
double intersection_area(const Polygon& a, const Polygon& b);

/// Intersection over union; 0 when both areas vanish.
double polygon_iou(const Polygon& a, const Polygon& b);

struct IouMatch {
    std::size_t a = 0;
    std::size_t b = 0;
    double iou = 0.0;
};

/// One-to-one pairing by descending IoU (ties keep index order). Pairs need
/// IoU >= min_iou, or IoU > 0 when min_iou is 0. Sorted by `a`.
std::vector<IouMatch> greedy_iou_match(std::span<const Polygon> a, std::span<const Polygon> b, double min_iou);

}  // namespace roofstock
