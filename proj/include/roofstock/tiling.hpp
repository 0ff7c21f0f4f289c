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

#include <filesystem>
#include <string>
#include <vector>

#include "roofstock/geocore.hpp"

namespace roofstock {

struct WorldRect {
    double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
};

/// One rooftop chip cut from a raster around a footprint.
struct RoofTile {
    std::string tile_id;
    Image image;
    std::string footprint_id;
    std::string raster_id;
    WorldRect world_rect;
    Provenance provenance;
    int target_size = 0;  ///< 0 until padded
    bool empty = false;   ///< window held no raster content
};

inline constexpr double kDefaultScaleFactor = 1.5;
inline constexpr int kDefaultTileSize = 224;

/// Axis-aligned pixel envelope of the polygon's exterior, floored/ceiled
/// outward. Throws ValidationError for zero-extent polygons.
PixelRect bounding_rect(const Polygon& poly, const AffineGeoTransform& transform);

/// Grows the rectangle about its centre; each side is multiplied by `factor`
/// and the result rounded outward.
PixelRect scale_rect(const PixelRect& rect, double factor = kDefaultScaleFactor);

/// Crops `rect` (zero-filled outside the raster). tile_id is
/// `<raster id>__<footprint id>`.
RoofTile extract_tile(const GeoRaster& raster, const PixelRect& rect, const std::string& footprint_id);

/// Bilinear resampling with pixel-centre alignment.
Image resize_bilinear(const Image& img, int width, int height);

/// Downscales (aspect preserved) when larger than `target`, then zero-pads
/// symmetrically to target x target; odd remainders go right/bottom.
Image pad_to_square(const Image& img, int target = kDefaultTileSize);

struct TilingOptions {
    double scale_factor = kDefaultScaleFactor;
    int target_size = kDefaultTileSize;
};

/// bounding_rect -> scale_rect -> extract_tile -> pad_to_square.
RoofTile make_roof_tile(const GeoRaster& raster, const FootprintFeature& footprint, const TilingOptions& options = {});

std::string tile_file_name(const std::string& raster_id, const std::string& footprint_id);

// PNG codec (8-bit gray or RGB).
void write_png(const std::filesystem::path& path, const Image& img);
std::vector<std::uint8_t> encode_png(const Image& img);
Image read_png(const std::filesystem::path& path);

}  // namespace roofstock
