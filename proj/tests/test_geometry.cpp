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

#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "roofstock/errors.hpp"
#include "roofstock/footprints.hpp"
#include "roofstock/geometry.hpp"
#include "roofstock/random.hpp"

using namespace roofstock;

namespace {

Polygon rect(double x0, double y0, double x1, double y1) {
    Polygon p;
    p.exterior = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
    return p;
}

std::vector<Point> random_polyline(Rng& rng, std::size_t n) {
    std::vector<Point> pts;
    double x = 0, y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        x += rng.uniform(0.1, 2.0);
        y += rng.uniform(-1.5, 1.5);
        pts.push_back({x, y});
    }
    return pts;
}

}  // namespace

TEST_CASE("shoelace area, orientation and centroid") {
    Polygon sq = rect(0, 0, 2, 2);
    CHECK(signed_area(sq.exterior) == doctest::Approx(4.0));
    std::reverse(sq.exterior.begin(), sq.exterior.end());
    CHECK(signed_area(sq.exterior) == doctest::Approx(-4.0));
    orient_polygon(sq);
    CHECK(signed_area(sq.exterior) > 0);

    Polygon holed = rect(0, 0, 4, 4);
    holed.holes.push_back({{1, 1}, {1, 2}, {2, 2}, {2, 1}, {1, 1}});
    orient_polygon(holed);
    CHECK(polygon_area(holed) == doctest::Approx(15.0));
    CHECK_FALSE(contains_point(holed, {1.5, 1.5}));
    CHECK(contains_point(holed, {3, 3}));
    const Point c = polygon_centroid(rect(2, 4, 6, 8));
    CHECK(c.x == doctest::Approx(4.0));
    CHECK(c.y == doctest::Approx(6.0));
}

TEST_CASE("IoU of a unit square and its half-shifted copy is 1/3") {
    CHECK(polygon_iou(rect(0, 0, 1, 1), rect(0.5, 0, 1.5, 1)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(polygon_iou(rect(0, 0, 1, 1), rect(0, 0, 1, 1)) == doctest::Approx(1.0));
    CHECK(polygon_iou(rect(0, 0, 1, 1), rect(5, 5, 6, 6)) == 0.0);
}

TEST_CASE("greedy IoU matching is one-to-one and prefers the best pair") {
    const std::vector<Polygon> a = {rect(0, 0, 10, 10), rect(20, 0, 30, 10)};
    const std::vector<Polygon> b = {rect(1, 0, 11, 10), rect(0, 0, 10, 10), rect(50, 50, 51, 51)};
    const auto m = greedy_iou_match(a, b, 0.5);
    REQUIRE(m.size() == 1);
    CHECK(m[0].a == 0);
    CHECK(m[0].b == 1);
    CHECK(m[0].iou == doctest::Approx(1.0));
}

TEST_CASE("simplify_polyline matches the recursive oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const auto pts = random_polyline(rng, 3 + rng.uniform_index(60));
        const double tol = rng.uniform(0.05, 3.0);
        const auto got = simplify_polyline(pts, tol);
        const auto idx = oracle::douglas_peucker(pts, tol);
        REQUIRE(got.size() == idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) CHECK(got[i] == pts[idx[i]]);
    }
}

TEST_CASE("simplify: removed vertices stay within tolerance of the output") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto pts = random_polyline(rng, 50);
        const double tol = rng.uniform(0.1, 2.0);
        const auto got = simplify_polyline(pts, tol);
        std::size_t k = 0;
        for (const auto& p : pts) {
            while (k + 1 < got.size() && !(got[k] == p) && p.x > got[k + 1].x) ++k;
            if (k + 1 < got.size()) CHECK(oracle::segment_distance(p, got[k], got[k + 1]) <= tol + 1e-12);
        }
    }
}

TEST_CASE("simplify edge cases") {
    const std::vector<Point> two = {{0, 0}, {1, 1}};
    CHECK(simplify_polyline(two, 1.0).size() == 2);
    const std::vector<Point> line = {{0, 0}, {1, 0.01}, {2, 0}};
    CHECK(simplify_polyline(line, 0.0).size() == 3);
    CHECK(simplify_polyline(line, 0.1).size() == 2);

    // A ring never collapses below a triangle.
    Polygon tri;
    tri.exterior = {{0, 0}, {1, 0}, {0.5, 0.01}, {0, 0}};
    CHECK(simplify_dp(tri, 1.0).exterior.size() == 4);
    // Square with noisy edge midpoints loses only the noise.
    Polygon sq;
    sq.exterior = {{0, 0}, {5, 0.001}, {10, 0}, {10, 10}, {0, 10}, {0, 0}};
    const Polygon s = simplify_dp(sq, 0.01);
    CHECK(s.exterior.size() == 5);
    CHECK(polygon_area(s) == doctest::Approx(100.0));
}

TEST_CASE("mask_to_polygons round-trips through rasterisation") {
    Rng rng(3);
    for (int trial = 0; trial < 60; ++trial) {
        const int w = 5 + int(rng.uniform_index(20)), h = 5 + int(rng.uniform_index(20));
        std::vector<std::uint8_t> full(std::size_t(w) * h);
        const double p = rng.uniform(0.2, 0.8);
        for (auto& v : full) v = rng.bernoulli(p);
        if (std::count(full.begin(), full.end(), 1) == 0) full[0] = 1;
        const InstanceMask mask = InstanceMask::from_full(w, h, full, 1.0);
        const auto polys = mask_to_polygons(mask);
        double area = 0;
        for (const auto& poly : polys) area += polygon_area(poly);
        CHECK(area == doctest::Approx(double(mask.foreground_count())));
        CHECK(oracle::rasterize(polys, w, h) == full);
    }
}

TEST_CASE("mask_to_polygons traces holes and 4-connected components") {
    // 3x3 ring of pixels with a hole, plus a diagonal neighbour.
    const int w = 5, h = 4;
    std::vector<std::uint8_t> full = {1, 1, 1, 0, 0,  //
                                      1, 0, 1, 0, 0,  //
                                      1, 1, 1, 0, 0,  //
                                      0, 0, 0, 1, 0};
    const auto polys = mask_to_polygons(InstanceMask::from_full(w, h, full, 1.0));
    REQUIRE(polys.size() == 2);
    CHECK(polys[0].holes.size() == 1);
    CHECK(polygon_area(polys[0]) == doctest::Approx(8.0));
    CHECK(signed_area(polys[0].holes[0]) < 0);
    CHECK(polygon_area(polys[1]) == doctest::Approx(1.0));
}
