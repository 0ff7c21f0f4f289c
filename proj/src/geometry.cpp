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

#include "roofstock/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>

namespace roofstock {

namespace bg = boost::geometry;

namespace {

using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint>;
using BgMultiPolygon = bg::model::multi_polygon<BgPolygon>;

BgPolygon to_boost(const Polygon& poly) {
    BgPolygon out;
    for (const auto& p : poly.exterior) out.outer().emplace_back(p.x, p.y);
    for (const auto& hole : poly.holes) {
        out.inners().emplace_back();
        for (const auto& p : hole) out.inners().back().emplace_back(p.x, p.y);
    }
    bg::correct(out);
    return out;
}

}  // namespace

double signed_area(std::span<const Point> ring) {
    if (ring.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i)
        twice += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
    if (!is_closed(ring)) twice += ring.back().x * ring.front().y - ring.front().x * ring.back().y;
    return 0.5 * twice;
}

double polygon_area(const Polygon& poly) {
    double area = std::abs(signed_area(poly.exterior));
    for (const auto& hole : poly.holes) area -= std::abs(signed_area(hole));
    return area;
}

namespace {

// Returns (signed area, first moments) of a ring.
void ring_moments(std::span<const Point> ring, double& area, double& mx, double& my) {
    area = mx = my = 0.0;
    const std::size_t n = ring.size();
    if (n < 3) return;
    // Translate to the first vertex to limit cancellation for geographic coordinates.
    const Point o = ring.front();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = ring[i];
        const Point& b = ring[(i + 1) % n];
        const double ax = a.x - o.x, ay = a.y - o.y, bx = b.x - o.x, by = b.y - o.y;
        const double cross = ax * by - bx * ay;
        area += cross;
        mx += (ax + bx) * cross;
        my += (ay + by) * cross;
    }
    area *= 0.5;
    mx /= 6.0;
    my /= 6.0;
    // Shift moments back to absolute coordinates.
    mx += o.x * area;
    my += o.y * area;
}

}  // namespace

Point polygon_centroid(const Polygon& poly) {
    double a, mx, my;
    ring_moments(poly.exterior, a, mx, my);
    const double sign = a < 0 ? -1.0 : 1.0;
    double area = sign * a, sx = sign * mx, sy = sign * my;
    for (const auto& hole : poly.holes) {
        double ha, hx, hy;
        ring_moments(hole, ha, hx, hy);
        const double hs = ha < 0 ? -1.0 : 1.0;
        area -= hs * ha;
        sx -= hs * hx;
        sy -= hs * hy;
    }
    if (area == 0.0) {
        const auto& r = poly.exterior;
        return r.empty() ? Point{} : r.front();
    }
    return {sx / area, sy / area};
}

bool is_closed(std::span<const Point> ring) {
    return ring.size() >= 2 && ring.front() == ring.back();
}

void orient_polygon(Polygon& poly) {
    if (signed_area(poly.exterior) < 0) std::reverse(poly.exterior.begin(), poly.exterior.end());
    for (auto& hole : poly.holes)
        if (signed_area(hole) > 0) std::reverse(hole.begin(), hole.end());
}

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) return std::hypot(p.x - a.x, p.y - a.y);
    double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

namespace {

bool ring_contains(std::span<const Point> ring, const Point& p) {
    bool inside = false;
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = ring[i];
        const Point& b = ring[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

}  // namespace

bool contains_point(const Polygon& poly, const Point& p) {
    if (poly.exterior.size() < 3 || !ring_contains(poly.exterior, p)) return false;
    for (const auto& hole : poly.holes)
        if (hole.size() >= 3 && ring_contains(hole, p)) return false;
    return true;
}

Envelope envelope(const Polygon& poly) {
    Envelope e{INFINITY, INFINITY, -INFINITY, -INFINITY};
    for (const auto& p : poly.exterior) {
        e.min_x = std::min(e.min_x, p.x);
        e.min_y = std::min(e.min_y, p.y);
        e.max_x = std::max(e.max_x, p.x);
        e.max_y = std::max(e.max_y, p.y);
    }
    return e;
}

bool envelopes_intersect(const Envelope& a, const Envelope& b) {
    return a.min_x <= b.max_x && b.min_x <= a.max_x && a.min_y <= b.max_y && b.min_y <= a.max_y;
}

double intersection_area(const Polygon& a, const Polygon& b) {
    if (!envelopes_intersect(envelope(a), envelope(b))) return 0.0;
    BgMultiPolygon out;
    bg::intersection(to_boost(a), to_boost(b), out);
    return bg::area(out);
}

double polygon_iou(const Polygon& a, const Polygon& b) {
    const double inter = intersection_area(a, b);
    const double uni = polygon_area(a) + polygon_area(b) - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<IouMatch> greedy_iou_match(std::span<const Polygon> a, std::span<const Polygon> b, double min_iou) {
    std::vector<Envelope> eb;
    eb.reserve(b.size());
    for (const auto& p : b) eb.push_back(envelope(p));
    std::vector<IouMatch> pairs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Envelope ea = envelope(a[i]);
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (!envelopes_intersect(ea, eb[j])) continue;
            const double iou = polygon_iou(a[i], b[j]);
            if (iou > 0.0 && iou >= min_iou) pairs.push_back({i, j, iou});
        }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const IouMatch& x, const IouMatch& y) { return x.iou > y.iou; });
    std::vector<std::uint8_t> used_a(a.size(), 0), used_b(b.size(), 0);
    std::vector<IouMatch> out;
    for (const IouMatch& p : pairs) {
        if (used_a[p.a] || used_b[p.b]) continue;
        used_a[p.a] = used_b[p.b] = 1;
        out.push_back(p);
    }
    std::sort(out.begin(), out.end(), [](const IouMatch& x, const IouMatch& y) { return x.a < y.a; });
    return out;
}

}  // namespace roofstock
