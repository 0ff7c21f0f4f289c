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

#include <cmath>
#include <cstring>
#include <memory>
#include <mutex>
#include <cstdarg>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <tiffio.h>

#include "roofstock/errors.hpp"
#include "roofstock/geocore.hpp"

namespace roofstock {

namespace {

constexpr ttag_t kModelPixelScale = 33550;
constexpr ttag_t kModelTiepoint = 33922;
constexpr ttag_t kModelTransformation = 34264;
constexpr ttag_t kGeoKeyDirectory = 34735;

const TIFFFieldInfo kGeoTiffFields[] = {
    {kModelPixelScale, TIFF_VARIABLE, TIFF_VARIABLE, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("ModelPixelScaleTag")},
    {kModelTiepoint, TIFF_VARIABLE, TIFF_VARIABLE, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("ModelTiepointTag")},
    {kModelTransformation, TIFF_VARIABLE, TIFF_VARIABLE, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("ModelTransformationTag")},
    {kGeoKeyDirectory, TIFF_VARIABLE, TIFF_VARIABLE, TIFF_SHORT, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("GeoKeyDirectoryTag")},
};

TIFFExtendProc g_parent_extender = nullptr;
thread_local std::string g_last_tiff_error;

void capture_tiff_error(const char* module, const char* fmt, va_list args) {
    char buf[512];
    std::vsnprintf(buf, sizeof buf, fmt, args);
    g_last_tiff_error = module ? std::string(module) + ": " + buf : std::string(buf);
}

std::string tiff_error() {
    return g_last_tiff_error.empty() ? std::string() : " (" + g_last_tiff_error + ")";
}

void geotiff_tag_extender(TIFF* tif) {
    TIFFMergeFieldInfo(tif, kGeoTiffFields, sizeof(kGeoTiffFields) / sizeof(kGeoTiffFields[0]));
    if (g_parent_extender) g_parent_extender(tif);
}

void register_geotiff_tags() {
    static std::once_flag once;
    std::call_once(once, [] {
        g_parent_extender = TIFFSetTagExtender(geotiff_tag_extender);
        TIFFSetWarningHandler(nullptr);
        TIFFSetErrorHandler(capture_tiff_error);
    });
}

struct TiffCloser {
    void operator()(TIFF* t) const { TIFFClose(t); }
};
using TiffHandle = std::unique_ptr<TIFF, TiffCloser>;

std::vector<double> get_doubles(TIFF* tif, ttag_t tag) {
    std::uint16_t count = 0;
    double* values = nullptr;
    if (TIFFGetField(tif, tag, &count, &values) != 1 || values == nullptr) return {};
    return {values, values + count};
}

std::vector<std::uint16_t> get_shorts(TIFF* tif, ttag_t tag) {
    std::uint16_t count = 0;
    std::uint16_t* values = nullptr;
    if (TIFFGetField(tif, tag, &count, &values) != 1 || values == nullptr) return {};
    return {values, values + count};
}

// EPSG code from GeographicTypeGeoKey (2048) or ProjectedCSTypeGeoKey (3072).
std::string crs_from_geokeys(const std::vector<std::uint16_t>& keys) {
    if (keys.size() < 4) return {};
    const std::size_t n = keys[3];
    for (std::size_t i = 0; i < n && 4 + 4 * i + 3 < keys.size(); ++i) {
        const std::uint16_t id = keys[4 + 4 * i];
        const std::uint16_t location = keys[4 + 4 * i + 1];
        const std::uint16_t value = keys[4 + 4 * i + 3];
        if ((id == 2048 || id == 3072) && location == 0 && value != 0 && value != 32767)
            return "EPSG:" + std::to_string(value);
    }
    return {};
}

std::optional<int> epsg_code(const std::string& crs) {
    if (crs.rfind("EPSG:", 0) != 0) return std::nullopt;
    try {
        const int code = std::stoi(crs.substr(5));
        if (code > 0 && code < 65535) return code;
    } catch (const std::exception&) {
    }
    return std::nullopt;
}

}  // namespace

GeoRaster GeoTiffReader::read(const std::filesystem::path& path) const {
    register_geotiff_tags();
    g_last_tiff_error.clear();
    TiffHandle tif(TIFFOpen(path.string().c_str(), "r"));
    if (!tif) throw IoError("cannot open GeoTIFF " + path.string() + tiff_error());

    std::uint32_t width = 0, height = 0;
    std::uint16_t spp = 1, bps = 8, planar = PLANARCONFIG_CONTIG;
    TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &width);
    TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &height);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
    if (bps != 8) throw ValidationError(path.string() + ": only 8-bit imagery is supported");
    if (spp != 1 && spp != 3 && spp != 4)
        throw ValidationError(path.string() + ": unsupported samples per pixel " + std::to_string(spp));
    if (planar != PLANARCONFIG_CONTIG) throw ValidationError(path.string() + ": planar-separate TIFF not supported");

    // Read into an spp-interleaved buffer, then drop a 4th (alpha) band.
    std::vector<std::uint8_t> raw(std::size_t(width) * height * spp);
    if (TIFFIsTiled(tif.get())) {
        std::uint32_t tw = 0, th = 0;
        TIFFGetField(tif.get(), TIFFTAG_TILEWIDTH, &tw);
        TIFFGetField(tif.get(), TIFFTAG_TILELENGTH, &th);
        std::vector<std::uint8_t> tile(TIFFTileSize(tif.get()));
        for (std::uint32_t y = 0; y < height; y += th)
            for (std::uint32_t x = 0; x < width; x += tw) {
                if (TIFFReadTile(tif.get(), tile.data(), x, y, 0, 0) < 0)
                    throw IoError(path.string() + ": tile read failed" + tiff_error());
                const std::uint32_t rows = std::min(th, height - y);
                const std::uint32_t cols = std::min(tw, width - x);
                for (std::uint32_t r = 0; r < rows; ++r)
                    std::memcpy(&raw[((std::size_t(y) + r) * width + x) * spp], &tile[std::size_t(r) * tw * spp],
                                std::size_t(cols) * spp);
            }
    } else {
        for (std::uint32_t row = 0; row < height; ++row)
            if (TIFFReadScanline(tif.get(), &raw[std::size_t(row) * width * spp], row) < 0)
                throw IoError(path.string() + ": scanline read failed at row " + std::to_string(row) + tiff_error());
    }

    GeoRaster r;
    const int bands = spp == 4 ? 3 : spp;
    r.image = Image(static_cast<int>(width), static_cast<int>(height), bands);
    if (bands == spp) {
        r.image.data = std::move(raw);
    } else {
        for (std::size_t i = 0, n = std::size_t(width) * height; i < n; ++i)
            for (int b = 0; b < bands; ++b) r.image.data[i * bands + b] = raw[i * spp + b];
    }

    const auto transform = get_doubles(tif.get(), kModelTransformation);
    const auto scale = get_doubles(tif.get(), kModelPixelScale);
    const auto tie = get_doubles(tif.get(), kModelTiepoint);
    if (transform.size() >= 8) {
        r.transform = {transform[3], transform[7], transform[0], transform[5], transform[1], transform[4]};
    } else if (scale.size() >= 2 && tie.size() >= 6) {
        r.transform.pixel_width = scale[0];
        r.transform.pixel_height = -scale[1];
        r.transform.origin_x = tie[3] - tie[0] * scale[0];
        r.transform.origin_y = tie[4] + tie[1] * scale[1];
    } else {
        throw ValidationError(path.string() + ": no georeferencing tags");
    }

    const auto meta_path = metadata_path_for(path);
    const RasterMetadata meta = read_raster_metadata(meta_path);
    r.provenance = meta.provenance();
    r.id = meta.get("id").value_or(path.stem().string());
    if (auto crs = meta.get("crs")) r.crs = *crs;
    else if (auto keyed = crs_from_geokeys(get_shorts(tif.get(), kGeoKeyDirectory)); !keyed.empty()) r.crs = keyed;
    r.validate();
    return r;
}

void write_geotiff(const std::filesystem::path& path, const GeoRaster& raster) {
    raster.validate();
    register_geotiff_tags();
    g_last_tiff_error.clear();
    TiffHandle tif(TIFFOpen(path.string().c_str(), "w"));
    if (!tif) throw IoError("cannot create GeoTIFF " + path.string() + tiff_error());
    const Image& img = raster.image;
    TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(img.width));
    TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(img.height));
    TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, static_cast<std::uint16_t>(img.bands));
    TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, static_cast<std::uint16_t>(8));
    TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
    TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, img.bands == 3 ? PHOTOMETRIC_RGB : PHOTOMETRIC_MINISBLACK);
    TIFFSetField(tif.get(), TIFFTAG_COMPRESSION, COMPRESSION_ADOBE_DEFLATE);
    TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, TIFFDefaultStripSize(tif.get(), 0));

    const auto& t = raster.transform;
    if (t.row_rotation == 0.0 && t.col_rotation == 0.0 && t.pixel_height < 0) {
        const double scale[3] = {t.pixel_width, -t.pixel_height, 0.0};
        const double tie[6] = {0.0, 0.0, 0.0, t.origin_x, t.origin_y, 0.0};
        TIFFSetField(tif.get(), kModelPixelScale, 3, scale);
        TIFFSetField(tif.get(), kModelTiepoint, 6, tie);
    } else {
        const double m[16] = {t.pixel_width, t.row_rotation, 0, t.origin_x, t.col_rotation, t.pixel_height, 0,
                              t.origin_y,    0,              0, 0, 0,          0,              0,              0, 1};
        TIFFSetField(tif.get(), kModelTransformation, 16, m);
    }
    const bool geographic = is_geographic_crs(raster.crs);
    const std::uint16_t code = static_cast<std::uint16_t>(epsg_code(raster.crs).value_or(geographic ? 4326 : 32767));
    const std::uint16_t keys[] = {1, 1, 0, 3,
                                  1024, 0, 1, static_cast<std::uint16_t>(geographic ? 2 : 1),
                                  1025, 0, 1, 1,
                                  static_cast<std::uint16_t>(geographic ? 2048 : 3072), 0, 1, code};
    TIFFSetField(tif.get(), kGeoKeyDirectory, 16, keys);

    const std::size_t stride = std::size_t(img.width) * img.bands;
    std::vector<std::uint8_t> line(stride);
    for (int row = 0; row < img.height; ++row) {
        std::memcpy(line.data(), &img.data[row * stride], stride);
        if (TIFFWriteScanline(tif.get(), line.data(), row, 0) < 0)
            throw IoError("scanline write failed for " + path.string() + tiff_error());
    }
    tif.reset();

    RasterMetadata meta;
    meta.entries["id"] = raster.id;
    meta.entries["crs"] = raster.crs;
    meta.entries["source"] = to_string(raster.provenance.source);
    meta.entries["year"] = std::to_string(raster.provenance.year);
    meta.entries["provider"] = raster.provenance.provider;
    std::ostringstream res;
    res << raster.provenance.resolution_cm_px;
    meta.entries["resolution_cm_px"] = res.str();
    write_raster_metadata(metadata_path_for(path), meta);
}

}  // namespace roofstock
