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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roofstock/classifier.hpp"
#include "roofstock/geocore.hpp"
#include "roofstock/tiling.hpp"

namespace roofstock {

inline const std::string kUnknownLabel = "Unknown";

struct ClassifiedFootprint {
    FootprintFeature feature;
    std::string label;
    double confidence = 0.0;
    std::string model_id;
    int year = 0;
};

struct ClassifiedMap {
    std::string raster_id;
    std::string crs = kDefaultCrs;
    Task task = Task::RoofMaterial;
    std::vector<ClassifiedFootprint> items;  ///< sorted by footprint id
    std::vector<std::string> skipped;        ///< footprints whose tile held no imagery
};

/// Tiles every footprint with the artifact's input size, predicts, and keeps
/// argmax + confidence. Empty tiles become "Unknown" with confidence 0.
ClassifiedMap classify_footprints(const GeoRaster& raster, const FootprintCollection& footprints,
                                  const ModelArtifact& artifact, const BackboneProvider& provider,
                                  double scale_factor = kDefaultScaleFactor);

/// Display colour per class, "#rrggbb".
std::string class_fill(const std::string& label);

nlohmann::json classified_geojson(const ClassifiedMap& map);
/// Writes classified_<raster_id>.geojson into `dir`.
std::filesystem::path write_classified(const ClassifiedMap& map, const std::filesystem::path& dir);
ClassifiedMap read_classified(const std::filesystem::path& path);

enum class ChangeStatus { Unchanged, Changed, Appeared, Disappeared };
std::string to_string(ChangeStatus s);

struct ChangeRecord {
    std::optional<std::string> before_id;
    std::optional<std::string> after_id;
    std::optional<std::string> label_before;
    std::optional<std::string> label_after;
    ChangeStatus status = ChangeStatus::Unchanged;
    double iou = 0.0;
    Polygon geometry;  ///< after-epoch outline when present, else before
};

/// Greedy best-IoU matching (IoU >= iou_match). Matched records come in
/// before-id order, then disappeared, then appeared.
std::vector<ChangeRecord> change_map(const ClassifiedMap& before, const ClassifiedMap& after,
                                     double iou_match = 0.5);

nlohmann::json change_geojson(const std::vector<ChangeRecord>& records, const std::string& crs);
/// Writes changes_<t0>_<t1>.geojson into `dir`.
std::filesystem::path write_changes(const std::vector<ChangeRecord>& records, const std::string& crs,
                                    const std::string& t0, const std::string& t1, const std::filesystem::path& dir);

}  // namespace roofstock
