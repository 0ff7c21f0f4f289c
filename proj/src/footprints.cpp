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

#include "roofstock/footprints.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <utility>

#include "roofstock/errors.hpp"

namespace roofstock {

void SegmenterConfig::validate() const {
    if (text_prompt.empty()) throw ConfigError("segmenter text_prompt must not be empty");
    if (!(box_threshold > 0.0 && box_threshold <= 1.0)) throw ConfigError("box_threshold must be in (0, 1]");
    if (!(text_threshold > 0.0 && text_threshold <= 1.0)) throw ConfigError("text_threshold must be in (0, 1]");
}

bool InstanceMask::at(int row, int col) const {
    if (row < box.row_min || row >= box.row_max || col < box.col_min || col >= box.col_max) return false;
    return bits[std::size_t(row - box.row_min) * box.width() + (col - box.col_min)] != 0;
}

std::size_t InstanceMask::foreground_count() const {
    return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

InstanceMask InstanceMask::from_full(int width, int height, std::span<const std::uint8_t> full, double score) {
    if (full.size() != std::size_t(width) * height) throw ValidationError("mask size does not match its frame");
    InstanceMask m;
    m.width = width;
    m.height = height;
    m.score = score;
    int r0 = height, r1 = -1, c0 = width, c1 = -1;
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            if (full[std::size_t(r) * width + c]) {
                r0 = std::min(r0, r);
                r1 = std::max(r1, r);
                c0 = std::min(c0, c);
                c1 = std::max(c1, c);
            }
    if (r1 < 0) return m;
    m.box = {r0, c0, r1 + 1, c1 + 1};
    m.bits.resize(std::size_t(m.box.height()) * m.box.width());
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
            m.bits[std::size_t(r - r0) * m.box.width() + (c - c0)] = full[std::size_t(r) * width + c] ? 1 : 0;
    return m;
}

// ---------------------------------------------------------------------------
// Connected components

namespace {

struct Components {
    int width = 0, height = 0;
    std::vector<int> label;  ///< -1 for background
    int count = 0;
};

// 4-connected labelling of a 0/1 grid, labels assigned in raster scan order.
Components label_components(std::span<const std::uint8_t> grid, int width, int height) {
    Components c{width, height, std::vector<int>(grid.size(), -1), 0};
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < grid.size(); ++start) {
        if (!grid[start] || c.label[start] >= 0) continue;
        const int id = c.count++;
        c.label[start] = id;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            const int r = static_cast<int>(i / width), col = static_cast<int>(i % width);
            const auto visit = [&](int rr, int cc) {
                if (rr < 0 || rr >= height || cc < 0 || cc >= width) return;
                const std::size_t j = std::size_t(rr) * width + cc;
                if (grid[j] && c.label[j] < 0) {
                    c.label[j] = id;
                    stack.push_back(j);
                }
            };
            visit(r - 1, col);
            visit(r + 1, col);
            visit(r, col - 1);
            visit(r, col + 1);
        }
    }
    return c;
}

// Directions on the corner lattice: 0:+x 1:+y 2:-x 3:-y.
constexpr std::array<int, 4> kDx = {1, 0, -1, 0};
constexpr std::array<int, 4> kDy = {0, 1, 0, -1};

// Traces the boundary loops of one component given as a 0/1 grid over its
// bounding box. Vertices are returned in box-local corner coordinates.
std::vector<std::vector<std::pair<int, int>>> trace_loops(const std::vector<std::uint8_t>& in_comp, int w, int h) {
    const int vw = w + 1;
    const auto vid = [vw](int x, int y) { return std::size_t(y) * vw + x; };
    const auto fg = [&](int r, int c) { return r >= 0 && r < h && c >= 0 && c < w && in_comp[std::size_t(r) * w + c]; };

    // edges[v] bit d set when a directed boundary edge leaves vertex v in direction d.
    std::vector<std::uint8_t> edges(std::size_t(vw) * (h + 1), 0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            if (!fg(r, c)) continue;
            if (!fg(r - 1, c)) edges[vid(c, r)] |= 1u << 0;          // top: (c,r) -> (c+1,r)
            if (!fg(r, c + 1)) edges[vid(c + 1, r)] |= 1u << 1;      // right: (c+1,r) -> (c+1,r+1)
            if (!fg(r + 1, c)) edges[vid(c + 1, r + 1)] |= 1u << 2;  // bottom: (c+1,r+1) -> (c,r+1)
            if (!fg(r, c - 1)) edges[vid(c, r + 1)] |= 1u << 3;      // left: (c,r+1) -> (c,r)
        }

    std::vector<std::uint8_t> used(edges.size(), 0);
    std::vector<std::vector<std::pair<int, int>>> loops;
    for (int y = 0; y <= h; ++y)
        for (int x = 0; x <= w; ++x) {
            for (int d0 = 0; d0 < 4; ++d0) {
                const std::size_t v0 = vid(x, y);
                if (!(edges[v0] & (1u << d0)) || (used[v0] & (1u << d0))) continue;
                std::vector<std::pair<int, int>> loop;
                int cx = x, cy = y, d = d0;
                while (true) {
                    used[vid(cx, cy)] |= static_cast<std::uint8_t>(1u << d);
                    loop.emplace_back(cx, cy);
                    cx += kDx[d];
                    cy += kDy[d];
                    const std::uint8_t out = edges[vid(cx, cy)];
                    // Tightest left turn first keeps diagonal pixels apart (4-connectivity).
                    int next = -1;
                    for (int turn : {1, 0, 3}) {
                        const int nd = (d + turn) % 4;
                        if (out & (1u << nd)) {
                            next = nd;
                            break;
                        }
                    }
                    if (next < 0) break;  // unreachable on a well-formed boundary
                    if (cx == x && cy == y && next == d0) break;
                    d = next;
                }
                loops.push_back(std::move(loop));
            }
        }
    return loops;
}

// Drops vertices whose incoming and outgoing edges are collinear; returns a closed ring.
Ring compress_loop(const std::vector<std::pair<int, int>>& loop, double ox, double oy) {
    const std::size_t n = loop.size();
    Ring ring;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& prev = loop[(i + n - 1) % n];
        const auto& cur = loop[i];
        const auto& next = loop[(i + 1) % n];
        const int ax = cur.first - prev.first, ay = cur.second - prev.second;
        const int bx = next.first - cur.first, by = next.second - cur.second;
        if (ax * by - ay * bx == 0 && ax * bx + ay * by > 0) continue;
        ring.push_back({cur.first + ox, cur.second + oy});
    }
    if (!ring.empty()) ring.push_back(ring.front());
    return ring;
}

}  // namespace

std::vector<Polygon> mask_to_polygons(const InstanceMask& mask) {
    const int w = static_cast<int>(mask.box.width());
    const int h = static_cast<int>(mask.box.height());
    std::vector<Polygon> out;
    if (w <= 0 || h <= 0) return out;
    const Components comps = label_components(mask.bits, w, h);
    for (int id = 0; id < comps.count; ++id) {
        // Crop the component to its own box.
        int r0 = h, r1 = -1, c0 = w, c1 = -1;
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                if (comps.label[std::size_t(r) * w + c] == id) {
                    r0 = std::min(r0, r);
                    r1 = std::max(r1, r);
                    c0 = std::min(c0, c);
                    c1 = std::max(c1, c);
                }
        const int cw = c1 - c0 + 1, ch = r1 - r0 + 1;
        std::vector<std::uint8_t> in_comp(std::size_t(cw) * ch, 0);
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c)
                in_comp[std::size_t(r - r0) * cw + (c - c0)] = comps.label[std::size_t(r) * w + c] == id;

        const double ox = static_cast<double>(mask.box.col_min + c0);
        const double oy = static_cast<double>(mask.box.row_min + r0);
        Polygon poly;
        double best = 0.0;
        std::vector<Ring> negatives;
        for (const auto& loop : trace_loops(in_comp, cw, ch)) {
            Ring ring = compress_loop(loop, ox, oy);
            const double a = signed_area(ring);
            if (a > 0) {
                if (a > best) {
                    best = a;
                    poly.exterior = std::move(ring);
                }
            } else if (a < 0) {
                negatives.push_back(std::move(ring));
            }
        }
        poly.holes = std::move(negatives);
        out.push_back(std::move(poly));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Douglas-Peucker

std::vector<Point> simplify_polyline(std::span<const Point> points, double tolerance) {
    const std::size_t n = points.size();
    if (n <= 2 || tolerance <= 0.0) return {points.begin(), points.end()};
    std::vector<std::uint8_t> keep(n, 0);
    keep.front() = keep.back() = 1;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
    while (!stack.empty()) {
        const auto [first, last] = stack.back();
        stack.pop_back();
        if (last <= first + 1) continue;
        double max_dist = -1.0;
        std::size_t index = first;
        for (std::size_t i = first + 1; i < last; ++i) {
            const double d = point_segment_distance(points[i], points[first], points[last]);
            if (d > max_dist) {
                max_dist = d;
                index = i;
            }
        }
        if (max_dist > tolerance) {
            keep[index] = 1;
            stack.emplace_back(index, last);
            stack.emplace_back(first, index);
        }
    }
    std::vector<Point> out;
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i]) out.push_back(points[i]);
    return out;
}

Ring simplify_ring(const Ring& ring, double tolerance) {
    if (tolerance <= 0.0 || ring.size() < 4 || !is_closed(ring)) return ring;
    const std::size_t n = ring.size();
    std::size_t split = 0;
    double far = -1.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double d = std::hypot(ring[i].x - ring[0].x, ring[i].y - ring[0].y);
        if (d > far) {
            far = d;
            split = i;
        }
    }
    const std::span<const Point> all(ring);
    auto head = simplify_polyline(all.subspan(0, split + 1), tolerance);
    const auto tail = simplify_polyline(all.subspan(split), tolerance);
    head.insert(head.end(), tail.begin() + 1, tail.end());
    const double before = signed_area(ring);
    const double after = signed_area(head);
    if (head.size() < 4 || after == 0.0 || (after > 0) != (before > 0)) return ring;
    return head;
}

Polygon simplify_dp(const Polygon& poly, double tolerance) {
    if (tolerance < 0.0) throw ValidationError("simplification tolerance must be >= 0");
    Polygon out;
    out.exterior = simplify_ring(poly.exterior, tolerance);
    out.holes.reserve(poly.holes.size());
    for (const auto& hole : poly.holes) out.holes.push_back(simplify_ring(hole, tolerance));
    return out;
}

// ---------------------------------------------------------------------------
// Stub backend

std::vector<InstanceMask> ThresholdSegmenter::segment(const SegmentRequest& request) {
    {
        std::lock_guard lock(mutex_);
        received_.push_back(request.cfg);
    }
    const int w = request.width, h = request.height, bands = request.bands;
    if (bands <= 0 || request.window.size() != std::size_t(w) * h * bands)
        throw ValidationError("segment request window size does not match its dimensions");
    std::vector<std::uint8_t> fg(std::size_t(w) * h);
    for (std::size_t i = 0; i < fg.size(); ++i) {
        int sum = 0;
        for (int b = 0; b < bands; ++b) sum += request.window[i * bands + b];
        fg[i] = sum >= 128 * bands ? 1 : 0;
    }
    const Components comps = label_components(fg, w, h);
    struct Box {
        int r0, c0, r1, c1;
    };
    std::vector<Box> boxes(comps.count, Box{h, w, -1, -1});
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const int id = comps.label[std::size_t(r) * w + c];
            if (id < 0) continue;
            Box& b = boxes[id];
            b.r0 = std::min(b.r0, r);
            b.c0 = std::min(b.c0, c);
            b.r1 = std::max(b.r1, r);
            b.c1 = std::max(b.c1, c);
        }
    std::vector<InstanceMask> masks(comps.count);
    for (int id = 0; id < comps.count; ++id) {
        const Box& b = boxes[id];
        InstanceMask& m = masks[id];
        m.width = w;
        m.height = h;
        m.score = 1.0;
        m.box = {b.r0, b.c0, b.r1 + 1, b.c1 + 1};
        const int bw = b.c1 - b.c0 + 1;
        m.bits.assign(std::size_t(bw) * (b.r1 - b.r0 + 1), 0);
        for (int r = b.r0; r <= b.r1; ++r)
            for (int c = b.c0; c <= b.c1; ++c)
                if (comps.label[std::size_t(r) * w + c] == id) m.bits[std::size_t(r - b.r0) * bw + (c - b.c0)] = 1;
    }
    return masks;
}

std::vector<SegmenterConfig> ThresholdSegmenter::received_configs() const {
    std::lock_guard lock(mutex_);
    return received_;
}

// ---------------------------------------------------------------------------
// Segmentation driver

namespace {

Ring ring_to_world(const Ring& ring, const AffineGeoTransform& t) {
    Ring out;
    out.reserve(ring.size());
    for (const auto& p : ring) out.push_back(pixel_to_world(t, p.y, p.x));
    return out;
}

struct Candidate {
    Polygon polygon;
    double score;
    double scan_row, scan_col;
    std::size_t order;
};

}  // namespace

FootprintCollection segment_buildings(const GeoRaster& raster, PromptedSegmenter& segmenter,
                                      const SegmentOptions& options) {
    options.segmenter.validate();
    raster.validate();
    if (options.simplify_tolerance < 0) throw ConfigError("simplify_tolerance must be >= 0");

    SegmentRequest request{raster.image.data, raster.width(), raster.height(), raster.band_count(), options.segmenter};
    std::vector<InstanceMask> masks;
    try {
        masks = segmenter.segment(request);
    } catch (const std::exception& e) {
        throw BackendError(std::string("segmenter backend failed: ") + e.what());
    }

    std::vector<Candidate> candidates;
    for (const auto& mask : masks) {
        if (mask.width != raster.width() || mask.height != raster.height())
            throw BackendError("segmenter returned a mask whose frame does not match the window");
        if (mask.score < options.segmenter.box_threshold || mask.foreground_count() == 0) continue;
        for (auto& pixel_poly : mask_to_polygons(mask)) {
            const Envelope e = envelope(pixel_poly);
            Polygon world;
            world.exterior = simplify_ring(ring_to_world(pixel_poly.exterior, raster.transform), options.simplify_tolerance);
            for (const auto& hole : pixel_poly.holes) {
                Polygon h{ring_to_world(hole, raster.transform), {}};
                if (polygon_area_m2(h, raster.crs) < options.min_hole_area_m2) continue;
                world.holes.push_back(simplify_ring(h.exterior, options.simplify_tolerance));
            }
            orient_polygon(world);
            if (polygon_area_m2(world, raster.crs) < options.min_area_m2) continue;
            candidates.push_back({std::move(world), mask.score, e.min_y, e.min_x, candidates.size()});
        }
    }

    // Overlapping instances: the higher-scored one wins.
    std::vector<std::size_t> by_score(candidates.size());
    std::iota(by_score.begin(), by_score.end(), 0);
    std::stable_sort(by_score.begin(), by_score.end(),
                     [&](std::size_t a, std::size_t b) { return candidates[a].score > candidates[b].score; });
    std::vector<std::uint8_t> dropped(candidates.size(), 0);
    std::vector<std::size_t> kept;
    for (std::size_t i : by_score) {
        for (std::size_t k : kept)
            if (polygon_iou(candidates[i].polygon, candidates[k].polygon) > options.overlap_iou) {
                dropped[i] = 1;
                break;
            }
        if (!dropped[i]) kept.push_back(i);
    }
    std::sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
        const Candidate& x = candidates[a];
        const Candidate& y = candidates[b];
        if (x.scan_row != y.scan_row) return x.scan_row < y.scan_row;
        if (x.scan_col != y.scan_col) return x.scan_col < y.scan_col;
        return x.order < y.order;
    });

    FootprintCollection out;
    out.crs = raster.crs;
    for (std::size_t n = 0; n < kept.size(); ++n) {
        Candidate& c = candidates[kept[n]];
        FootprintFeature f;
        f.id = raster.id + "_" + std::to_string(n);
        f.polygon = std::move(c.polygon);
        f.properties.source = options.source;
        f.properties.confidence = c.score;
        out.features.push_back(std::move(f));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Alignment diagnosis

AlignmentReport alignment_report(const FootprintCollection& a, const FootprintCollection& b) {
    require_same_crs(a.crs, b.crs, "alignment_report");
    AlignmentReport report;
    if (a.features.empty() || b.features.empty()) return report;

    std::vector<Polygon> pa, pb;
    for (const auto& f : a.features) pa.push_back(f.polygon);
    for (const auto& f : b.features) pb.push_back(f.polygon);
    double iou_sum = 0.0;
    std::vector<double> offsets;
    for (const IouMatch& m : greedy_iou_match(pa, pb, 0.0)) {
        iou_sum += m.iou;
        offsets.push_back(metric_distance(polygon_centroid(pa[m.a]), polygon_centroid(pb[m.b]), a.crs));
    }
    report.matched = offsets.size();
    report.mean_iou = iou_sum / static_cast<double>(a.features.size());
    report.matched_fraction = 2.0 * static_cast<double>(report.matched) /
                              static_cast<double>(a.features.size() + b.features.size());
    if (!offsets.empty()) {
        std::sort(offsets.begin(), offsets.end());
        const std::size_t m = offsets.size();
        report.median_centroid_offset_m = m % 2 ? offsets[m / 2] : 0.5 * (offsets[m / 2 - 1] + offsets[m / 2]);
    }
    return report;
}

std::size_t transfer_labels(FootprintCollection& target, const FootprintCollection& labeled, double min_iou) {
    require_same_crs(target.crs, labeled.crs, "transfer_labels");
    std::vector<Polygon> pt, pl;
    for (const auto& f : target.features) pt.push_back(f.polygon);
    for (const auto& f : labeled.features) pl.push_back(f.polygon);
    const auto matches = greedy_iou_match(pt, pl, min_iou);
    for (const IouMatch& m : matches) {
        auto& props = target.features[m.a].properties;
        props.roof_type = labeled.features[m.b].properties.roof_type;
        props.roof_material = labeled.features[m.b].properties.roof_material;
    }
    return matches.size();
}

}  // namespace roofstock
