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

#include "roofstock/errors.hpp"
#include "roofstock/footprints.hpp"
#include "roofstock/synthetic.hpp"

using namespace roofstock;

namespace {

GeoRaster blank(int w, int h) {
    GeoRaster r;
    r.id = "scene";
    r.image = Image(w, h, 3);
    r.transform.origin_x = -61.4;
    r.transform.origin_y = 15.3;
    r.transform.pixel_width = 1e-6;
    r.transform.pixel_height = -1e-6;
    return r;
}

void paint(GeoRaster& r, int row0, int col0, int h, int w, std::uint8_t v) {
    for (int row = row0; row < row0 + h; ++row)
        for (int col = col0; col < col0 + w; ++col)
            for (int b = 0; b < 3; ++b) r.image.at(row, col, b) = v;
}

Polygon rect(double x0, double y0, double x1, double y1) {
    Polygon p;
    p.exterior = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
    return p;
}

struct FailingSegmenter : PromptedSegmenter {
    std::vector<InstanceMask> segment(const SegmentRequest&) override { throw std::runtime_error("model offline"); }
    bool reentrant() const override { return false; }
};

struct OverlapSegmenter : PromptedSegmenter {
    std::vector<InstanceMask> segment(const SegmentRequest& req) override {
        std::vector<std::uint8_t> a(std::size_t(req.width) * req.height, 0), b = a;
        for (int row = 10; row < 50; ++row)
            for (int col = 10; col < 50; ++col) a[std::size_t(row) * req.width + col] = 1;
        for (int row = 12; row < 50; ++row)
            for (int col = 10; col < 50; ++col) b[std::size_t(row) * req.width + col] = 1;
        return {InstanceMask::from_full(req.width, req.height, a, 0.6),
                InstanceMask::from_full(req.width, req.height, b, 0.9)};
    }
    bool reentrant() const override { return true; }
};

}  // namespace

TEST_CASE("segmenter config defaults reach the backend") {
    GeoRaster r = blank(40, 40);
    ThresholdSegmenter stub;
    segment_buildings(r, stub);
    const auto seen = stub.received_configs();
    REQUIRE(seen.size() == 1);
    CHECK(seen[0].text_prompt == "house");
    CHECK(seen[0].box_threshold == 0.30);
    CHECK(seen[0].text_threshold == 0.30);

    SegmenterConfig bad;
    bad.box_threshold = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = {};
    bad.text_prompt = "";
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("three painted rectangles give three footprints with matching areas") {
    GeoRaster r = blank(300, 200);
    paint(r, 20, 20, 40, 60, 200);
    paint(r, 100, 150, 50, 50, 220);
    paint(r, 30, 200, 60, 40, 180);
    ThresholdSegmenter stub;
    const FootprintCollection fc = segment_buildings(r, stub);
    REQUIRE(fc.features.size() == 3);
    CHECK(fc.features[0].id == "scene_0");
    const double px_m2 = polygon_area_m2(rect(-61.4, 15.3, -61.4 + 1e-6, 15.3 + 1e-6), r.crs);
    std::vector<double> drawn = {40 * 60, 40 * 60, 50 * 50};
    std::vector<double> got;
    for (const auto& f : fc.features) got.push_back(polygon_area_m2(f.polygon, r.crs) / px_m2);
    std::sort(got.begin(), got.end());
    std::sort(drawn.begin(), drawn.end());
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(got[i] - drawn[i]) / drawn[i] < 0.05);
    for (const auto& f : fc.features) CHECK(f.properties.confidence == 1.0);
}

TEST_CASE("blank raster, area filter, determinism and backend errors") {
    GeoRaster r = blank(100, 100);
    ThresholdSegmenter stub;
    CHECK(segment_buildings(r, stub).features.empty());
    paint(r, 10, 10, 30, 30, 200);
    SegmentOptions big;
    big.min_area_m2 = 1e6;
    CHECK(segment_buildings(r, stub, big).features.empty());
    const auto a = save_footprints(segment_buildings(r, stub)).dump();
    const auto b = save_footprints(segment_buildings(r, stub)).dump();
    CHECK(a == b);
    FailingSegmenter failing;
    try {
        segment_buildings(r, failing);
        FAIL("expected a backend error");
    } catch (const BackendError& e) {
        CHECK(std::string(e.what()).find("model offline") != std::string::npos);
    }
}

TEST_CASE("overlapping instances keep the higher score") {
    GeoRaster r = blank(80, 80);
    OverlapSegmenter seg;
    const FootprintCollection fc = segment_buildings(r, seg);
    REQUIRE(fc.features.size() == 1);
    CHECK(fc.features[0].properties.confidence == 0.9);
}

TEST_CASE("small holes are removed, large ones kept") {
    GeoRaster r = blank(200, 200);
    paint(r, 10, 10, 150, 150, 200);
    paint(r, 30, 30, 3, 3, 0);    // about 0.1 m2
    paint(r, 60, 60, 40, 40, 0);  // ~19 m2
    ThresholdSegmenter stub;
    const FootprintCollection fc = segment_buildings(r, stub);
    REQUIRE(fc.features.size() == 1);
    CHECK(fc.features[0].polygon.holes.size() == 1);
}

TEST_CASE("alignment report") {
    FootprintCollection a, b;
    FootprintFeature f;
    f.id = "s";
    f.polygon = rect(-61.4, 15.3, -61.39999, 15.30001);
    a.features.push_back(f);
    const AlignmentReport same = alignment_report(a, a);
    CHECK(same.mean_iou == doctest::Approx(1.0));
    CHECK(same.median_centroid_offset_m == doctest::Approx(0.0));
    CHECK(same.matched_fraction == doctest::Approx(1.0));

    f.polygon = rect(-61.3, 15.3, -61.29999, 15.30001);
    b.features.push_back(f);
    CHECK(alignment_report(a, b).mean_iou == 0.0);
    CHECK(alignment_report(a, b).matched_fraction == 0.0);
    CHECK(alignment_report(a, FootprintCollection{}).matched_fraction == 0.0);

    FootprintCollection shifted;
    f.polygon = rect(-61.4 + 0.5e-5, 15.3, -61.39999 + 0.5e-5, 15.30001);
    shifted.features.push_back(f);
    const AlignmentReport half = alignment_report(a, shifted);
    CHECK(half.mean_iou == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
    // Half a 1e-5 degree step of longitude at 15.3 N.
    CHECK(half.median_centroid_offset_m == doctest::Approx(0.537).epsilon(0.01));
}

TEST_CASE("labels transfer onto segmented footprints by IoU") {
    SyntheticOptions o;
    o.size = 600;
    o.grid = 5;
    const SyntheticScene scene = make_synthetic_scene(o);
    ThresholdSegmenter stub;
    FootprintCollection fc = segment_buildings(scene.raster, stub);
    REQUIRE(fc.features.size() == 25);
    CHECK(transfer_labels(fc, scene.truth) == 25);
    for (const auto& f : fc.features) CHECK(f.properties.roof_material.has_value());
}
