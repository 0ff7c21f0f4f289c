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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roofstock/geometry.hpp"

namespace roofstock {

/// Six-parameter affine mapping between pixel indices and world coordinates.
///
///     x = origin_x + col * pixel_width + row * row_rotation
///     y = origin_y + col * col_rotation + row * pixel_height
///
/// Integer (row, col) address the upper-left corner of a pixel.
struct AffineGeoTransform {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixel_width = 1.0;
    double pixel_height = -1.0;
    double row_rotation = 0.0;
    double col_rotation = 0.0;

    double determinant() const { return pixel_width * pixel_height - row_rotation * col_rotation; }

    /// Throws ConfigError when the linear part is singular or non-finite.
    void validate() const;
};

struct PixelCoord {
    double row = 0.0;
    double col = 0.0;
};

Point pixel_to_world(const AffineGeoTransform& t, double row, double col);
PixelCoord world_to_pixel(const AffineGeoTransform& t, double x, double y);

enum class ImagerySource { Aircraft, Drone };

std::string to_string(ImagerySource s);
ImagerySource parse_imagery_source(const std::string& s);

/// Imagery inventory entry (coverage metadata of one orthophoto).
struct Provenance {
    ImagerySource source = ImagerySource::Drone;
    int year = 0;
    std::string provider;
    double resolution_cm_px = 1.0;
};

/// Interleaved 8-bit image, row-major, `bands` samples per pixel.
struct Image {
    int width = 0;
    int height = 0;
    int bands = 0;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h, int b) : width(w), height(h), bands(b), data(std::size_t(w) * h * b, 0) {}

    bool empty() const { return data.empty(); }
    std::uint8_t& at(int row, int col, int band) {
        return data[(std::size_t(row) * width + col) * bands + band];
    }
    std::uint8_t at(int row, int col, int band) const {
        return data[(std::size_t(row) * width + col) * bands + band];
    }
    friend bool operator==(const Image&, const Image&) = default;
};

/// Integer pixel rectangle, inclusive min / exclusive max.
struct PixelRect {
    std::int64_t row_min = 0;
    std::int64_t col_min = 0;
    std::int64_t row_max = 0;
    std::int64_t col_max = 0;

    std::int64_t height() const { return row_max - row_min; }
    std::int64_t width() const { return col_max - col_min; }
    std::int64_t area() const { return height() * width(); }
    bool valid() const { return row_max > row_min && col_max > col_min; }
    friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

inline constexpr const char* kDefaultCrs = "EPSG:4326";

/// Georeferenced pixel grid. Immutable once loaded.
struct GeoRaster {
    std::string id;
    Image image;
    AffineGeoTransform transform;
    std::string crs = kDefaultCrs;
    Provenance provenance;

    int width() const { return image.width; }
    int height() const { return image.height; }
    int band_count() const { return image.bands; }

    /// Checks data length, band count, transform and resolution.
    void validate() const;
};

struct WindowRead {
    Image image;
    /// True when the window did not overlap the raster at all.
    bool empty_content = false;
};

/// Copies `rect` out of the raster; pixels outside the extent are zero.
WindowRead read_window(const GeoRaster& r, const PixelRect& rect);

/// CRS identifiers that carry lon/lat degrees.
bool is_geographic_crs(const std::string& crs);

/// Metres per CRS unit along x and y near `at` (1, 1 for projected CRSs).
Point metric_scale(const std::string& crs, const Point& at);

double polygon_area_m2(const Polygon& poly, const std::string& crs);

/// Metric distance between two points in the same CRS.
double metric_distance(const Point& a, const Point& b, const std::string& crs);

/// Throws ValidationError when two CRS identifiers differ.
void require_same_crs(const std::string& a, const std::string& b, const std::string& context);

// ---------------------------------------------------------------------------
// Footprints

struct FootprintProperties {
    std::string source;
    std::optional<std::string> roof_type;
    std::optional<std::string> roof_material;
    std::optional<double> confidence;

    friend bool operator==(const FootprintProperties&, const FootprintProperties&) = default;
};

struct FootprintFeature {
    std::string id;
    Polygon polygon;
    FootprintProperties properties;
};

struct FootprintCollection {
    std::string crs = kDefaultCrs;
    std::vector<FootprintFeature> features;
};

struct LoadReport {
    struct Rejection {
        std::string id;
        std::string reason;
    };
    std::size_t accepted = 0;
    std::vector<std::string> auto_closed;
    std::vector<Rejection> rejected;
};

struct LoadResult {
    FootprintCollection collection;
    LoadReport report;
};

/// Parses a GeoJSON FeatureCollection of Polygon / MultiPolygon features.
/// Multipolygons become one feature per part with ids `<id>_<k>`.
LoadResult load_footprints(const nlohmann::json& document);
LoadResult load_footprints_file(const std::filesystem::path& path);

nlohmann::json save_footprints(const FootprintCollection& features);
void save_footprints_file(const FootprintCollection& features, const std::filesystem::path& path);

/// GeoJSON `crs` member helpers shared by every writer in the pipeline.
nlohmann::json crs_member(const std::string& crs);
std::string read_crs_member(const nlohmann::json& document);
nlohmann::json polygon_to_geojson(const Polygon& poly);

// ---------------------------------------------------------------------------
// Raster access

/// key=value sidecar next to a raster (`<raster>.meta`).
struct RasterMetadata {
    std::map<std::string, std::string> entries;

    Provenance provenance() const;
    std::optional<std::string> get(const std::string& key) const;
};

RasterMetadata parse_raster_metadata(const std::string& text);
RasterMetadata read_raster_metadata(const std::filesystem::path& path);
void write_raster_metadata(const std::filesystem::path& path, const RasterMetadata& meta);
std::filesystem::path metadata_path_for(const std::filesystem::path& raster_path);

class RasterReader {
public:
    virtual ~RasterReader() = default;
    virtual GeoRaster read(const std::filesystem::path& path) const = 0;
};

/// Serves rasters registered by key; used by tests and synthetic runs.
class InMemoryRasterReader : public RasterReader {
public:
    void add(const std::string& key, GeoRaster raster);
    GeoRaster read(const std::filesystem::path& path) const override;

private:
    std::map<std::string, GeoRaster> rasters_;
};

/// Stripped/tiled 8-bit GeoTIFF via libtiff plus the `.meta` sidecar for
/// provenance, CRS and raster id.
class GeoTiffReader : public RasterReader {
public:
    GeoRaster read(const std::filesystem::path& path) const override;
};

/// Writes an 8-bit GeoTIFF with ModelPixelScale/ModelTiepoint (or
/// ModelTransformation for rotated grids) plus its `.meta` sidecar.
void write_geotiff(const std::filesystem::path& path, const GeoRaster& raster);

}  // namespace roofstock
