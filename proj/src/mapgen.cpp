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

#include "roofstock/mapgen.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "roofstock/errors.hpp"

namespace roofstock {

using nlohmann::json;

ClassifiedMap classify_footprints(const GeoRaster& raster, const FootprintCollection& footprints,
                                  const ModelArtifact& artifact, const BackboneProvider& provider,
                                  double scale_factor) {
    require_same_crs(raster.crs, footprints.crs, "classify_footprints");
    ClassifiedMap map;
    map.raster_id = raster.id;
    map.crs = raster.crs;
    map.task = artifact.task;

    std::vector<const FootprintFeature*> order;
    for (const auto& f : footprints.features) order.push_back(&f);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });
    if (order.empty()) return map;

    const Predictor predictor(artifact, provider);
    const TilingOptions tiling{scale_factor, artifact.input_size};
    for (const FootprintFeature* f : order) {
        ClassifiedFootprint c{*f, kUnknownLabel, 0.0, artifact.model_id, raster.provenance.year};
        const RoofTile tile = make_roof_tile(raster, *f, tiling);
        if (tile.empty) {
            map.skipped.push_back(f->id);
        } else {
            const Prediction p = predictor.predict(tile.tile_id, tile.image);
            c.label = p.label;
            c.confidence = p.confidence;
        }
        map.items.push_back(std::move(c));
    }
    return map;
}

std::string class_fill(const std::string& label) {
    static const std::map<std::string, std::string> palette = {
        {"Gable", "#8c564b"},           {"Hip", "#9467bd"},
        {"Flat", "#17becf"},            {"No Roof", "#bcbd22"},
        {"Healthy metal", "#2ca02c"},   {"Irregular metal", "#ff7f0e"},
        {"Concrete/cement", "#7f7f7f"}, {"Blue tarpaulin", "#1f77ff"},
        {"Incomplete", "#d62728"},
    };
    const auto it = palette.find(label);
    return it == palette.end() ? "#000000" : it->second;
}

json classified_geojson(const ClassifiedMap& map) {
    json doc = {{"type", "FeatureCollection"},
                {"raster_id", map.raster_id},
                {"task", to_string(map.task)},
                {"features", json::array()}};
    if (map.crs != kDefaultCrs) doc["crs"] = crs_member(map.crs);
    for (const auto& c : map.items) {
        json props = {{"id", c.feature.id},
                      {to_string(map.task), c.label},
                      {"confidence", c.confidence},
                      {"model_id", c.model_id},
                      {"year", c.year},
                      {"fill", class_fill(c.label)}};
        doc["features"].push_back({{"type", "Feature"},
                                   {"id", c.feature.id},
                                   {"properties", std::move(props)},
                                   {"geometry", polygon_to_geojson(c.feature.polygon)}});
    }
    return doc;
}

namespace {

std::filesystem::path write_json(const json& doc, const std::filesystem::path& dir, const std::string& name) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump() << '\n';
    if (!out) throw IoError("write failed for " + path.string());
    return path;
}

}  // namespace

std::filesystem::path write_classified(const ClassifiedMap& map, const std::filesystem::path& dir) {
    return write_json(classified_geojson(map), dir, "classified_" + map.raster_id + ".geojson");
}

ClassifiedMap read_classified(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("malformed GeoJSON in " + path.string() + ": " + e.what());
    }
    ClassifiedMap map;
    try {
        map.raster_id = doc.value("raster_id", path.stem().string());
        map.task = parse_task(doc.at("task").get<std::string>());
        const LoadResult loaded = load_footprints(doc);
        if (loaded.collection.features.size() != doc.at("features").size())
            throw ValidationError("classified map " + path.string() + " contains invalid or multi-part geometry");
        map.crs = loaded.collection.crs;
        const std::string key = to_string(map.task);
        for (std::size_t i = 0; i < loaded.collection.features.size(); ++i) {
            const json& props = doc["features"][i].at("properties");
            ClassifiedFootprint c;
            c.feature = loaded.collection.features[i];
            c.label = props.at(key).get<std::string>();
            c.confidence = props.value("confidence", 0.0);
            c.model_id = props.value("model_id", "");
            c.year = props.value("year", 0);
            if (c.label == kUnknownLabel) map.skipped.push_back(c.feature.id);
            map.items.push_back(std::move(c));
        }
    } catch (const json::exception& e) {
        throw ValidationError("classified map " + path.string() + ": " + e.what());
    }
    return map;
}

std::string to_string(ChangeStatus s) {
    switch (s) {
        case ChangeStatus::Unchanged: return "unchanged";
        case ChangeStatus::Changed: return "changed";
        case ChangeStatus::Appeared: return "appeared";
        case ChangeStatus::Disappeared: return "disappeared";
    }
    return "unchanged";
}

std::vector<ChangeRecord> change_map(const ClassifiedMap& before, const ClassifiedMap& after, double iou_match) {
    require_same_crs(before.crs, after.crs, "change_map");
    if (!(iou_match > 0.0 && iou_match <= 1.0)) throw ValidationError("iou_match must be in (0, 1]");
    std::vector<Polygon> pa, pb;
    for (const auto& c : before.items) pa.push_back(c.feature.polygon);
    for (const auto& c : after.items) pb.push_back(c.feature.polygon);

    std::vector<ChangeRecord> out;
    std::vector<std::uint8_t> seen_a(pa.size(), 0), seen_b(pb.size(), 0);
    for (const IouMatch& m : greedy_iou_match(pa, pb, iou_match)) {
        const auto& x = before.items[m.a];
        const auto& y = after.items[m.b];
        seen_a[m.a] = seen_b[m.b] = 1;
        out.push_back({x.feature.id, y.feature.id, x.label, y.label,
                       x.label == y.label ? ChangeStatus::Unchanged : ChangeStatus::Changed, m.iou, y.feature.polygon});
    }
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (!seen_a[i])
            out.push_back({before.items[i].feature.id, std::nullopt, before.items[i].label, std::nullopt,
                           ChangeStatus::Disappeared, 0.0, pa[i]});
    for (std::size_t j = 0; j < pb.size(); ++j)
        if (!seen_b[j])
            out.push_back({std::nullopt, after.items[j].feature.id, std::nullopt, after.items[j].label,
                           ChangeStatus::Appeared, 0.0, pb[j]});
    return out;
}

json change_geojson(const std::vector<ChangeRecord>& records, const std::string& crs) {
    json doc = {{"type", "FeatureCollection"}, {"features", json::array()}};
    if (crs != kDefaultCrs) doc["crs"] = crs_member(crs);
    const auto opt = [](const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); };
    for (const auto& r : records) {
        json props = {{"before_id", opt(r.before_id)},   {"after_id", opt(r.after_id)},
                      {"label_before", opt(r.label_before)}, {"label_after", opt(r.label_after)},
                      {"status", to_string(r.status)},   {"iou", r.iou}};
        doc["features"].push_back(
            {{"type", "Feature"}, {"properties", std::move(props)}, {"geometry", polygon_to_geojson(r.geometry)}});
    }
    return doc;
}

std::filesystem::path write_changes(const std::vector<ChangeRecord>& records, const std::string& crs,
                                    const std::string& t0, const std::string& t1, const std::filesystem::path& dir) {
    return write_json(change_geojson(records, crs), dir, "changes_" + t0 + "_" + t1 + ".geojson");
}

}  // namespace roofstock
