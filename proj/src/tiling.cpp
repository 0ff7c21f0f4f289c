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

#include "roofstock/tiling.hpp"

#include <algorithm>
#include <cmath>

#include "roofstock/errors.hpp"

namespace roofstock {

namespace {

// Floors/ceils with a snap so that 9.9999999999 stays 10 instead of leaking a pixel.
constexpr double kSnap = 1e-9;

std::int64_t floor_snapped(double v) {
    const double r = std::round(v);
    return static_cast<std::int64_t>(std::abs(v - r) < kSnap ? r : std::floor(v));
}

std::int64_t ceil_snapped(double v) {
    const double r = std::round(v);
    return static_cast<std::int64_t>(std::abs(v - r) < kSnap ? r : std::ceil(v));
}

}  // namespace

PixelRect bounding_rect(const Polygon& poly, const AffineGeoTransform& transform) {
    if (poly.exterior.empty()) throw ValidationError("bounding_rect: polygon has no vertices");
    double rmin = INFINITY, rmax = -INFINITY, cmin = INFINITY, cmax = -INFINITY;
    for (const auto& p : poly.exterior) {
        const PixelCoord pc = world_to_pixel(transform, p.x, p.y);
        rmin = std::min(rmin, pc.row);
        rmax = std::max(rmax, pc.row);
        cmin = std::min(cmin, pc.col);
        cmax = std::max(cmax, pc.col);
    }
    PixelRect rect{floor_snapped(rmin), floor_snapped(cmin), ceil_snapped(rmax), ceil_snapped(cmax)};
    if (!(rmax > rmin) || !(cmax > cmin) || !rect.valid())
        throw ValidationError("bounding_rect: degenerate (zero-extent) polygon");
    return rect;
}

PixelRect scale_rect(const PixelRect& rect, double factor) {
    if (!(factor >= 1.0)) throw ValidationError("scale_rect: factor must be >= 1");
    if (!rect.valid()) throw ValidationError("scale_rect: invalid rectangle");
    const double cr = 0.5 * double(rect.row_min + rect.row_max);
    const double cc = 0.5 * double(rect.col_min + rect.col_max);
    const double hr = 0.5 * factor * double(rect.height());
    const double hc = 0.5 * factor * double(rect.width());
    return {floor_snapped(cr - hr), floor_snapped(cc - hc), ceil_snapped(cr + hr), ceil_snapped(cc + hc)};
}

RoofTile extract_tile(const GeoRaster& raster, const PixelRect& rect, const std::string& footprint_id) {
    WindowRead window = read_window(raster, rect);
    RoofTile tile;
    tile.tile_id = raster.id + "__" + footprint_id;
    tile.footprint_id = footprint_id;
    tile.raster_id = raster.id;
    tile.provenance = raster.provenance;
    tile.empty = window.empty_content ||
                 std::all_of(window.image.data.begin(), window.image.data.end(), [](std::uint8_t v) { return v == 0; });
    tile.image = std::move(window.image);
    const Point corners[4] = {
        pixel_to_world(raster.transform, double(rect.row_min), double(rect.col_min)),
        pixel_to_world(raster.transform, double(rect.row_min), double(rect.col_max)),
        pixel_to_world(raster.transform, double(rect.row_max), double(rect.col_min)),
        pixel_to_world(raster.transform, double(rect.row_max), double(rect.col_max)),
    };
    tile.world_rect = {INFINITY, INFINITY, -INFINITY, -INFINITY};
    for (const auto& p : corners) {
        tile.world_rect.min_x = std::min(tile.world_rect.min_x, p.x);
        tile.world_rect.min_y = std::min(tile.world_rect.min_y, p.y);
        tile.world_rect.max_x = std::max(tile.world_rect.max_x, p.x);
        tile.world_rect.max_y = std::max(tile.world_rect.max_y, p.y);
    }
    return tile;
}

Image resize_bilinear(const Image& img, int width, int height) {
    if (img.empty() || width <= 0 || height <= 0) throw ValidationError("resize_bilinear: empty image or size");
    Image out(width, height, img.bands);
    const double sx = double(img.width) / width;
    const double sy = double(img.height) / height;
    for (int r = 0; r < height; ++r) {
        const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, double(img.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int c = 0; c < width; ++c) {
            const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, double(img.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            for (int b = 0; b < img.bands; ++b) {
                const double top = img.at(y0, x0, b) * (1 - wx) + img.at(y0, x1, b) * wx;
                const double bottom = img.at(y1, x0, b) * (1 - wx) + img.at(y1, x1, b) * wx;
                out.at(r, c, b) = static_cast<std::uint8_t>(std::lround(top * (1 - wy) + bottom * wy));
            }
        }
    }
    return out;
}

Image pad_to_square(const Image& img, int target) {
    if (target < 1) throw ValidationError("pad_to_square: target must be >= 1");
    if (img.empty() || img.width <= 0 || img.height <= 0) throw ValidationError("pad_to_square: empty image");
    const Image* src = &img;
    Image scaled;
    const int longest = std::max(img.width, img.height);
    if (longest > target) {
        const double s = double(target) / longest;
        const int w = std::clamp(static_cast<int>(std::lround(img.width * s)), 1, target);
        const int h = std::clamp(static_cast<int>(std::lround(img.height * s)), 1, target);
        scaled = resize_bilinear(img, w, h);
        src = &scaled;
    }
    Image out(target, target, src->bands);
    const int top = (target - src->height) / 2;
    const int left = (target - src->width) / 2;
    const std::size_t span = std::size_t(src->width) * src->bands;
    for (int r = 0; r < src->height; ++r)
        std::copy_n(&src->data[r * span], span, &out.data[(std::size_t(r + top) * target + left) * src->bands]);
    return out;
}

RoofTile make_roof_tile(const GeoRaster& raster, const FootprintFeature& footprint, const TilingOptions& options) {
    const PixelRect rect = scale_rect(bounding_rect(footprint.polygon, raster.transform), options.scale_factor);
    RoofTile tile = extract_tile(raster, rect, footprint.id);
    tile.image = pad_to_square(tile.image, options.target_size);
    tile.target_size = options.target_size;
    return tile;
}

std::string tile_file_name(const std::string& raster_id, const std::string& footprint_id) {
    return raster_id + "__" + footprint_id + ".png";
}

}  // namespace roofstock
