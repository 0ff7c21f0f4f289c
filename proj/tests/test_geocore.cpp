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
#include <filesystem>

#include "roofstock/errors.hpp"
#include "roofstock/geocore.hpp"
#include "roofstock/random.hpp"

using namespace roofstock;
using nlohmann::json;

namespace {

GeoRaster ramp_raster(int w, int h, int bands) {
    GeoRaster r;
    r.id = "ramp";
    r.image = Image(w, h, bands);
    for (int row = 0; row < h; ++row)
        for (int col = 0; col < w; ++col)
            for (int b = 0; b < bands; ++b) r.image.at(row, col, b) = std::uint8_t(1 + (row * 7 + col * 3 + b) % 250);
    r.transform.origin_x = -61.4;
    r.transform.origin_y = 15.3;
    r.transform.pixel_width = 1e-6;
    r.transform.pixel_height = -1e-6;
    r.provenance = {ImagerySource::Drone, 2017, "test", 10.0};
    return r;
}

json square_feature(const std::string& id, double x0, double y0, double s, bool closed = true) {
    json ring = {{x0, y0}, {x0 + s, y0}, {x0 + s, y0 + s}, {x0, y0 + s}};
    if (closed) ring.push_back({x0, y0});
    return {{"type", "Feature"},
            {"properties", {{"id", id}, {"source", "osm"}}},
            {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}}};
}

}  // namespace

TEST_CASE("affine transform examples") {
    AffineGeoTransform id;
    const PixelCoord p0 = world_to_pixel(id, 0, 0);
    CHECK(p0.row == 0.0);
    CHECK(p0.col == 0.0);

    AffineGeoTransform t;
    t.origin_x = 100;
    t.origin_y = 50;
    t.pixel_width = 0.5;
    t.pixel_height = -0.5;
    const PixelCoord p = world_to_pixel(t, 101, 49);
    CHECK(p.row == doctest::Approx(2.0));
    CHECK(p.col == doctest::Approx(2.0));

    AffineGeoTransform singular;
    singular.pixel_width = 0;
    CHECK_THROWS_AS(singular.validate(), ConfigError);
    CHECK_THROWS_AS(world_to_pixel(singular, 1, 1), ConfigError);
}

TEST_CASE("affine round trip on random invertible transforms") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        AffineGeoTransform t;
        t.origin_x = rng.uniform(-180, 180);
        t.origin_y = rng.uniform(-80, 80);
        t.pixel_width = rng.uniform(1e-3, 2.0);
        t.pixel_height = -rng.uniform(1e-3, 2.0);
        t.row_rotation = rng.uniform(-0.1, 0.1);
        t.col_rotation = rng.uniform(-0.1, 0.1);
        const double x = rng.uniform(-200, 200), y = rng.uniform(-100, 100);
        const PixelCoord px = world_to_pixel(t, x, y);
        const Point back = pixel_to_world(t, px.row, px.col);
        CHECK(std::abs(back.x - x) < 1e-9);
        CHECK(std::abs(back.y - y) < 1e-9);
    }
}

TEST_CASE("read_window copies inside and zero-fills outside") {
    const GeoRaster r = ramp_raster(20, 10, 3);
    const WindowRead inside = read_window(r, {2, 3, 6, 9});
    CHECK_FALSE(inside.empty_content);
    REQUIRE(inside.image.width == 6);
    REQUIRE(inside.image.height == 4);
    for (int row = 0; row < 4; ++row)
        for (int col = 0; col < 6; ++col) CHECK(inside.image.at(row, col, 1) == r.image.at(row + 2, col + 3, 1));

    const WindowRead edge = read_window(r, {0, 15, 5, 25});
    CHECK(edge.image.at(0, 4, 0) == r.image.at(0, 19, 0));
    CHECK(edge.image.at(0, 5, 0) == 0);
    CHECK(edge.image.at(4, 9, 2) == 0);

    const WindowRead outside = read_window(r, {50, 50, 60, 60});
    CHECK(outside.empty_content);
    CHECK(std::all_of(outside.image.data.begin(), outside.image.data.end(), [](auto v) { return v == 0; }));
    CHECK(read_window(r, {1, 1, 4, 4}).image == read_window(r, {1, 1, 4, 4}).image);
}

TEST_CASE("raster validation") {
    GeoRaster r = ramp_raster(4, 4, 3);
    CHECK_NOTHROW(r.validate());
    r.provenance.resolution_cm_px = 0;
    CHECK_THROWS_AS(r.validate(), ValidationError);
    r = ramp_raster(4, 4, 3);
    r.image.data.pop_back();
    CHECK_THROWS_AS(r.validate(), ValidationError);
}

TEST_CASE("load_footprints: valid, multipolygon, auto-close and rejection") {
    json doc = {{"type", "FeatureCollection"}, {"features", json::array()}};
    doc["features"].push_back(square_feature("a", 0, 0, 2));
    doc["features"].push_back(square_feature("open", 10, 10, 1, false));
    json mp = {{"type", "Feature"},
               {"properties", {{"id", "x"}}},
               {"geometry",
                {{"type", "MultiPolygon"},
                 {"coordinates",
                  {{{{0, 5}, {1, 5}, {1, 6}, {0, 6}, {0, 5}}}, {{{3, 5}, {4, 5}, {4, 6}, {3, 6}, {3, 5}}}}}}}};
    doc["features"].push_back(mp);
    json flat = square_feature("flat", 0, 0, 0);
    doc["features"].push_back(flat);
    json tiny = {{"type", "Feature"},
                 {"properties", {{"id", "tiny"}}},
                 {"geometry", {{"type", "Polygon"}, {"coordinates", {{{0, 0}, {1, 0}, {0, 0}}}}}}};
    doc["features"].push_back(tiny);

    const LoadResult r = load_footprints(doc);
    std::vector<std::string> ids;
    for (const auto& f : r.collection.features) ids.push_back(f.id);
    CHECK(ids == std::vector<std::string>{"a", "open", "x_0", "x_1"});
    CHECK(polygon_area(r.collection.features[0].polygon) == doctest::Approx(4.0));
    CHECK(r.report.auto_closed == std::vector<std::string>{"open"});
    CHECK(r.collection.features[1].polygon.exterior.size() == 5);
    REQUIRE(r.report.rejected.size() == 2);
    CHECK(r.report.rejected[0].id == "flat");
    CHECK(r.report.rejected[1].id == "tiny");
    CHECK(r.report.accepted == 4);
}

TEST_CASE("save/load round trip keeps geometry and properties") {
    Rng rng(9);
    FootprintCollection fc;
    for (int i = 0; i < 100; ++i) {
        FootprintFeature f;
        f.id = "f" + std::to_string(i);
        const double cx = rng.uniform(-61.5, -61.2), cy = rng.uniform(15.2, 15.6);
        const int n = 3 + int(rng.uniform_index(8));
        for (int k = 0; k < n; ++k) {
            const double a = 6.283185307179586 * k / n;
            const double rad = rng.uniform(1e-5, 3e-5);
            f.polygon.exterior.push_back({cx + rad * std::cos(a), cy + rad * std::sin(a)});
        }
        f.polygon.exterior.push_back(f.polygon.exterior.front());
        f.properties.source = "sam";
        if (i % 2) f.properties.roof_type = "Gable";
        if (i % 3 == 0) f.properties.roof_material = "Blue tarpaulin";
        if (i % 5 == 0) f.properties.confidence = rng.uniform01();
        fc.features.push_back(f);
    }
    const LoadResult back = load_footprints(json::parse(save_footprints(fc).dump()));
    REQUIRE(back.collection.features.size() == fc.features.size());
    for (std::size_t i = 0; i < fc.features.size(); ++i) {
        const auto& a = fc.features[i];
        const auto& b = back.collection.features[i];
        CHECK(a.id == b.id);
        CHECK(a.properties == b.properties);
        REQUIRE(a.polygon.exterior.size() == b.polygon.exterior.size());
        for (std::size_t k = 0; k < a.polygon.exterior.size(); ++k) {
            CHECK(std::abs(a.polygon.exterior[k].x - b.polygon.exterior[k].x) < 1e-9);
            CHECK(std::abs(a.polygon.exterior[k].y - b.polygon.exterior[k].y) < 1e-9);
        }
    }
    const FootprintCollection empty;
    CHECK(load_footprints(save_footprints(empty)).collection.features.empty());

    FootprintCollection utm;
    utm.crs = "EPSG:32620";
    CHECK(load_footprints(save_footprints(utm)).collection.crs == "EPSG:32620");
}

TEST_CASE("CRS checks and metric helpers") {
    CHECK_THROWS_AS(require_same_crs("EPSG:4326", "EPSG:32620", "join"), ValidationError);
    CHECK_NOTHROW(require_same_crs("EPSG:4326", "EPSG:4326", "join"));
    CHECK(is_geographic_crs("EPSG:4326"));
    CHECK_FALSE(is_geographic_crs("EPSG:32620"));
    // One thousandth of a degree of latitude is about 110.6 m near 15 N.
    CHECK(metric_distance({-61.4, 15.3}, {-61.4, 15.301}, "EPSG:4326") == doctest::Approx(110.6).epsilon(0.01));
    CHECK(metric_distance({0, 0}, {3, 4}, "EPSG:32620") == doctest::Approx(5.0));
}

TEST_CASE("metadata sidecar parsing") {
    const RasterMetadata m = parse_raster_metadata("# inventory\nsource=aircraft\nyear=2014\nprovider=Gov\nresolution_cm_px=20\n");
    const Provenance p = m.provenance();
    CHECK(p.source == ImagerySource::Aircraft);
    CHECK(p.year == 2014);
    CHECK(p.provider == "Gov");
    CHECK(p.resolution_cm_px == 20.0);
    CHECK_THROWS_AS(parse_raster_metadata("source=satellite\n").provenance(), ValidationError);
    CHECK(metadata_path_for("a/b.tif") == std::filesystem::path("a/b.tif.meta"));
}

TEST_CASE("GeoTIFF write/read round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "roofstock_geotiff_test";
    std::filesystem::create_directories(dir);
    for (int bands : {1, 3}) {
        GeoRaster r = ramp_raster(37, 23, bands);
        r.id = "scene" + std::to_string(bands);
        const auto path = dir / (r.id + ".tif");
        write_geotiff(path, r);
        const GeoRaster back = GeoTiffReader().read(path);
        CHECK(back.id == r.id);
        CHECK(back.image == r.image);
        CHECK(back.crs == r.crs);
        CHECK(back.transform.origin_x == doctest::Approx(r.transform.origin_x));
        CHECK(back.transform.pixel_height == doctest::Approx(r.transform.pixel_height));
        CHECK(back.provenance.year == 2017);
        CHECK(back.provenance.source == ImagerySource::Drone);
    }
    CHECK_THROWS_AS(GeoTiffReader().read(dir / "missing.tif"), IoError);
    std::filesystem::remove_all(dir);
}
