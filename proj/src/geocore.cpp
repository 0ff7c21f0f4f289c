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

#include "roofstock/geocore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "roofstock/errors.hpp"

namespace roofstock {

using nlohmann::json;

void AffineGeoTransform::validate() const {
    const double values[] = {origin_x, origin_y, pixel_width, pixel_height, row_rotation, col_rotation};
    for (double v : values)
        if (!std::isfinite(v)) throw ConfigError("geotransform has a non-finite coefficient");
    if (determinant() == 0.0) throw ConfigError("geotransform is singular (zero determinant)");
}

Point pixel_to_world(const AffineGeoTransform& t, double row, double col) {
    return {t.origin_x + col * t.pixel_width + row * t.row_rotation,
            t.origin_y + col * t.col_rotation + row * t.pixel_height};
}

PixelCoord world_to_pixel(const AffineGeoTransform& t, double x, double y) {
    const double det = t.determinant();
    if (det == 0.0 || !std::isfinite(det)) throw ConfigError("geotransform is singular (zero determinant)");
    const double dx = x - t.origin_x;
    const double dy = y - t.origin_y;
    const double col = (t.pixel_height * dx - t.row_rotation * dy) / det;
    const double row = (t.pixel_width * dy - t.col_rotation * dx) / det;
    return {row, col};
}

std::string to_string(ImagerySource s) {
    return s == ImagerySource::Aircraft ? "aircraft" : "drone";
}

ImagerySource parse_imagery_source(const std::string& s) {
    if (s == "aircraft") return ImagerySource::Aircraft;
    if (s == "drone") return ImagerySource::Drone;
    throw ValidationError("unknown imagery source '" + s + "' (expected aircraft|drone)");
}

void GeoRaster::validate() const {
    if (image.bands != 1 && image.bands != 3)
        throw ValidationError("raster '" + id + "' must have 1 or 3 bands, has " + std::to_string(image.bands));
    if (image.width <= 0 || image.height <= 0)
        throw ValidationError("raster '" + id + "' has empty extent");
    if (image.data.size() != std::size_t(image.width) * image.height * image.bands)
        throw ValidationError("raster '" + id + "' data length does not match width x height x bands");
    if (!(provenance.resolution_cm_px > 0))
        throw ValidationError("raster '" + id + "' resolution_cm_px must be > 0");
    transform.validate();
}

WindowRead read_window(const GeoRaster& r, const PixelRect& rect) {
    if (!rect.valid()) throw ValidationError("window must have positive width and height");
    WindowRead out;
    out.image = Image(static_cast<int>(rect.width()), static_cast<int>(rect.height()), r.image.bands);
    const std::int64_t r0 = std::max<std::int64_t>(rect.row_min, 0);
    const std::int64_t r1 = std::min<std::int64_t>(rect.row_max, r.image.height);
    const std::int64_t c0 = std::max<std::int64_t>(rect.col_min, 0);
    const std::int64_t c1 = std::min<std::int64_t>(rect.col_max, r.image.width);
    if (r0 >= r1 || c0 >= c1) {
        out.empty_content = true;
        return out;
    }
    const std::size_t bands = r.image.bands;
    const std::size_t span = std::size_t(c1 - c0) * bands;
    for (std::int64_t row = r0; row < r1; ++row) {
        const auto* src = &r.image.data[(std::size_t(row) * r.image.width + c0) * bands];
        auto* dst = &out.image.data[(std::size_t(row - rect.row_min) * out.image.width + (c0 - rect.col_min)) * bands];
        std::copy_n(src, span, dst);
    }
    return out;
}

bool is_geographic_crs(const std::string& crs) {
    return crs == "EPSG:4326" || crs == "OGC:CRS84" || crs == "WGS84" || crs == "urn:ogc:def:crs:OGC:1.3:CRS84" ||
           crs == "urn:ogc:def:crs:EPSG::4326";
}

Point metric_scale(const std::string& crs, const Point& at) {
    if (!is_geographic_crs(crs)) return {1.0, 1.0};
    // Local equirectangular approximation on the WGS84 ellipsoid.
    const double lat = at.y * std::numbers::pi / 180.0;
    const double m_per_deg_lat = 111132.92 - 559.82 * std::cos(2 * lat) + 1.175 * std::cos(4 * lat);
    const double m_per_deg_lon = 111412.84 * std::cos(lat) - 93.5 * std::cos(3 * lat);
    return {m_per_deg_lon, m_per_deg_lat};
}

double polygon_area_m2(const Polygon& poly, const std::string& crs) {
    const Point s = metric_scale(crs, polygon_centroid(poly));
    return polygon_area(poly) * s.x * s.y;
}

double metric_distance(const Point& a, const Point& b, const std::string& crs) {
    const Point s = metric_scale(crs, {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
    return std::hypot((a.x - b.x) * s.x, (a.y - b.y) * s.y);
}

void require_same_crs(const std::string& a, const std::string& b, const std::string& context) {
    if (a != b) throw ValidationError(context + ": CRS mismatch ('" + a + "' vs '" + b + "')");
}

// ---------------------------------------------------------------------------
// GeoJSON

json crs_member(const std::string& crs) {
    return {{"type", "name"}, {"properties", {{"name", crs}}}};
}

std::string read_crs_member(const json& document) {
    const auto it = document.find("crs");
    if (it == document.end() || it->is_null()) return kDefaultCrs;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_object()) {
        const auto props = it->find("properties");
        if (props != it->end() && props->contains("name") && (*props)["name"].is_string())
            return (*props)["name"].get<std::string>();
    }
    throw ValidationError("unrecognised 'crs' member in footprint document");
}

json polygon_to_geojson(const Polygon& poly) {
    auto ring_json = [](const Ring& ring) {
        json arr = json::array();
        for (const auto& p : ring) arr.push_back({p.x, p.y});
        return arr;
    };
    json coords = json::array();
    coords.push_back(ring_json(poly.exterior));
    for (const auto& hole : poly.holes) coords.push_back(ring_json(hole));
    return {{"type", "Polygon"}, {"coordinates", std::move(coords)}};
}

namespace {

// Parses and validates one ring; returns an error reason on failure.
std::optional<std::string> parse_ring(const json& coords, Ring& ring, bool& closed_here) {
    closed_here = false;
    if (!coords.is_array()) return "ring is not an array";
    ring.clear();
    for (const auto& c : coords) {
        if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
            return "malformed coordinate";
        const Point p{c[0].get<double>(), c[1].get<double>()};
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) return "non-finite coordinate";
        ring.push_back(p);
    }
    if (ring.empty()) return "empty ring";
    if (!is_closed(ring)) {
        ring.push_back(ring.front());
        closed_here = true;
    }
    if (ring.size() < 4) return "ring has fewer than 4 vertices";
    if (signed_area(ring) == 0.0) return "zero-area ring";
    return std::nullopt;
}

std::string feature_id(const json& feature, std::size_t index) {
    const auto props = feature.find("properties");
    const json* id = nullptr;
    if (props != feature.end() && props->is_object() && props->contains("id")) id = &(*props)["id"];
    else if (feature.contains("id")) id = &feature["id"];
    if (id && id->is_string()) return id->get<std::string>();
    if (id && id->is_number_integer()) return std::to_string(id->get<long long>());
    if (id && id->is_number()) return id->dump();
    return "feature_" + std::to_string(index);
}

FootprintProperties parse_properties(const json& feature) {
    FootprintProperties out;
    const auto it = feature.find("properties");
    if (it == feature.end() || !it->is_object()) return out;
    const json& p = *it;
    if (p.contains("source") && p["source"].is_string()) out.source = p["source"].get<std::string>();
    if (p.contains("roof_type") && p["roof_type"].is_string()) out.roof_type = p["roof_type"].get<std::string>();
    if (p.contains("roof_material") && p["roof_material"].is_string())
        out.roof_material = p["roof_material"].get<std::string>();
    if (p.contains("confidence") && p["confidence"].is_number()) out.confidence = p["confidence"].get<double>();
    return out;
}

}  // namespace

LoadResult load_footprints(const json& document) {
    if (!document.is_object() || document.value("type", "") != "FeatureCollection")
        throw ValidationError("footprint document is not a GeoJSON FeatureCollection");
    LoadResult result;
    result.collection.crs = read_crs_member(document);
    const auto features = document.find("features");
    if (features == document.end() || !features->is_array())
        throw ValidationError("FeatureCollection has no 'features' array");

    std::size_t index = 0;
    for (const auto& feature : *features) {
        const std::string id = feature_id(feature, index++);
        const auto geom = feature.find("geometry");
        if (geom == feature.end() || !geom->is_object()) {
            result.report.rejected.push_back({id, "missing geometry"});
            continue;
        }
        const std::string type = geom->value("type", "");
        const json& coords = (*geom)["coordinates"];
        std::vector<std::pair<std::string, const json*>> parts;
        if (type == "Polygon") {
            parts.emplace_back(id, &coords);
        } else if (type == "MultiPolygon" && coords.is_array()) {
            for (std::size_t k = 0; k < coords.size(); ++k) parts.emplace_back(id + "_" + std::to_string(k), &coords[k]);
        } else {
            result.report.rejected.push_back({id, "unsupported geometry type '" + type + "'"});
            continue;
        }
        const FootprintProperties props = parse_properties(feature);
        for (const auto& [part_id, rings] : parts) {
            if (!rings->is_array() || rings->empty()) {
                result.report.rejected.push_back({part_id, "polygon has no rings"});
                continue;
            }
            FootprintFeature f;
            f.id = part_id;
            f.properties = props;
            bool closed_any = false;
            std::optional<std::string> problem;
            for (std::size_t k = 0; k < rings->size() && !problem; ++k) {
                Ring ring;
                bool closed_here = false;
                problem = parse_ring((*rings)[k], ring, closed_here);
                closed_any |= closed_here;
                if (!problem) {
                    if (k == 0) f.polygon.exterior = std::move(ring);
                    else f.polygon.holes.push_back(std::move(ring));
                }
            }
            if (!problem && !(polygon_area(f.polygon) > 0.0)) problem = "zero-area geometry";
            if (problem) {
                result.report.rejected.push_back({part_id, *problem});
                continue;
            }
            if (closed_any) result.report.auto_closed.push_back(part_id);
            result.collection.features.push_back(std::move(f));
        }
    }
    result.report.accepted = result.collection.features.size();
    return result;
}

LoadResult load_footprints_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open footprint file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError("cannot parse footprint file " + path.string() + ": " + e.what());
    }
    return load_footprints(doc);
}

json save_footprints(const FootprintCollection& collection) {
    json doc = {{"type", "FeatureCollection"}, {"features", json::array()}};
    if (collection.crs != kDefaultCrs) doc["crs"] = crs_member(collection.crs);
    for (const auto& f : collection.features) {
        json props = {{"id", f.id}, {"source", f.properties.source}};
        if (f.properties.roof_type) props["roof_type"] = *f.properties.roof_type;
        if (f.properties.roof_material) props["roof_material"] = *f.properties.roof_material;
        if (f.properties.confidence) props["confidence"] = *f.properties.confidence;
        doc["features"].push_back(
            {{"type", "Feature"}, {"id", f.id}, {"properties", std::move(props)}, {"geometry", polygon_to_geojson(f.polygon)}});
    }
    return doc;
}

void save_footprints_file(const FootprintCollection& features, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write footprint file " + path.string());
    out << save_footprints(features).dump() << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Metadata sidecar

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::optional<std::string> RasterMetadata::get(const std::string& key) const {
    const auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    return it->second;
}

Provenance RasterMetadata::provenance() const {
    Provenance p;
    const auto source = get("source");
    if (!source) throw ValidationError("raster metadata is missing 'source'");
    p.source = parse_imagery_source(*source);
    const auto res = get("resolution_cm_px");
    if (!res) throw ValidationError("raster metadata is missing 'resolution_cm_px'");
    try {
        p.resolution_cm_px = std::stod(*res);
        if (const auto year = get("year")) p.year = std::stoi(*year);
    } catch (const std::exception&) {
        throw ValidationError("raster metadata has a malformed numeric field");
    }
    if (!(p.resolution_cm_px > 0)) throw ValidationError("resolution_cm_px must be > 0");
    p.provider = get("provider").value_or("");
    return p;
}

RasterMetadata parse_raster_metadata(const std::string& text) {
    RasterMetadata meta;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError("metadata line " + std::to_string(line_no) + " is not key=value");
        meta.entries[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return meta;
}

RasterMetadata read_raster_metadata(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open raster metadata " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_raster_metadata(ss.str());
}

void write_raster_metadata(const std::filesystem::path& path, const RasterMetadata& meta) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write raster metadata " + path.string());
    for (const auto& [k, v] : meta.entries) out << k << '=' << v << '\n';
}

std::filesystem::path metadata_path_for(const std::filesystem::path& raster_path) {
    return std::filesystem::path(raster_path.string() + ".meta");
}

void InMemoryRasterReader::add(const std::string& key, GeoRaster raster) {
    rasters_[key] = std::move(raster);
}

GeoRaster InMemoryRasterReader::read(const std::filesystem::path& path) const {
    const auto it = rasters_.find(path.string());
    if (it == rasters_.end()) throw IoError("no in-memory raster registered as " + path.string());
    return it->second;
}

}  // namespace roofstock
