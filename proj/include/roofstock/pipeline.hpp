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
#include <utility>
#include <vector>

#include <json.hpp>

#include "roofstock/classifier.hpp"
#include "roofstock/dataset.hpp"
#include "roofstock/evaluation.hpp"
#include "roofstock/footprints.hpp"
#include "roofstock/mapgen.hpp"
#include "roofstock/tiling.hpp"

namespace roofstock {

/// Every tunable of the workflow in one document. Sections mirror the
/// stages; unknown keys anywhere are rejected.
struct PipelineConfig {
    std::uint64_t seed = kDefaultSeed;  ///< governs split, training and augmentation
    SegmenterConfig segmenter;
    struct Footprints {
        double simplify_tolerance = kDefaultSimplifyTolerance;
        double min_area_m2 = 9.0;
        double min_hole_area_m2 = 1.0;
        double overlap_iou = 0.5;
    } footprints;
    struct Tiling {
        double scale_factor = kDefaultScaleFactor;
        int target_size = kDefaultTileSize;
        bool keep_empty = false;
        double label_match_iou = 0.5;
    } tiling;
    struct SplitSection {
        double test_frac = 0.2;
    } split;
    TrainConfig train;
    struct Mapgen {
        double change_iou = 0.5;
    } mapgen;
    struct Paths {
        std::string tiles = "tiles";
        std::string models = "models";
        std::string reports = "reports";
        std::string maps = "maps";
    } paths;

    void validate() const;
    SegmentOptions segment_options() const;
};

nlohmann::json to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

/// Defaults, overlaid with `path` when given, then ROOFSTOCK_SEED when set.
PipelineConfig load_pipeline_config(const std::optional<std::filesystem::path>& path);

/// Applies a ROOFSTOCK_SEED-style override value.
void apply_seed_override(PipelineConfig& cfg, const std::string& value);

FootprintCollection run_segment(const GeoRaster& raster, PromptedSegmenter& segmenter, const PipelineConfig& cfg);

struct TileRunResult {
    DatasetManifest manifest;
    std::vector<std::string> empty_tiles;  ///< footprints whose tile held no imagery
    std::size_t labels_transferred = 0;
};

/// Writes one PNG per footprint into `out_dir` and returns their manifest
/// rows (tile_path relative to `out_dir`). Labels come from the footprint
/// properties, or from `labels` matched by IoU when given.
TileRunResult run_tile(const GeoRaster& raster, const FootprintCollection& footprints, const PipelineConfig& cfg,
                       const std::string& country, const std::filesystem::path& out_dir,
                       const FootprintCollection* labels = nullptr);

DatasetManifest run_split(const DatasetManifest& manifest, Task task, const PipelineConfig& cfg);

/// Every (model, test set) pair, in the order given.
std::vector<CrossCountryCell> run_eval(Task task,
                                       const std::vector<std::pair<std::string, ModelArtifact>>& models,
                                       const std::vector<std::pair<std::string, LabeledTiles>>& tests,
                                       const BackboneProvider& provider);

}  // namespace roofstock
