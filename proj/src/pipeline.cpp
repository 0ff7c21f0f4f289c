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

#include "roofstock/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "roofstock/errors.hpp"

namespace roofstock {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::string& section, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError("unknown config key '" + (section.empty() ? k : section + "." + k) + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& section) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + section + "." + key + "' has the wrong type");
    }
}

}  // namespace

void PipelineConfig::validate() const {
    segmenter.validate();
    if (!(footprints.simplify_tolerance >= 0)) throw ConfigError("footprints.simplify_tolerance must be >= 0");
    if (!(footprints.min_area_m2 >= 0)) throw ConfigError("footprints.min_area_m2 must be >= 0");
    if (!(footprints.min_hole_area_m2 >= 0)) throw ConfigError("footprints.min_hole_area_m2 must be >= 0");
    if (!(footprints.overlap_iou > 0 && footprints.overlap_iou <= 1))
        throw ConfigError("footprints.overlap_iou must be in (0, 1]");
    if (!(tiling.scale_factor >= 1)) throw ConfigError("tiling.scale_factor must be >= 1");
    if (tiling.target_size < 1) throw ConfigError("tiling.target_size must be >= 1");
    if (!(tiling.label_match_iou > 0 && tiling.label_match_iou <= 1))
        throw ConfigError("tiling.label_match_iou must be in (0, 1]");
    if (!(split.test_frac > 0 && split.test_frac < 1)) throw ConfigError("split.test_frac must be in (0, 1)");
    train.validate();
    if (train.input_size != tiling.target_size)
        throw ConfigError("train.input_size (" + std::to_string(train.input_size) + ") differs from tiling.target_size (" +
                          std::to_string(tiling.target_size) + ")");
    if (!(mapgen.change_iou > 0 && mapgen.change_iou <= 1)) throw ConfigError("mapgen.change_iou must be in (0, 1]");
}

SegmentOptions PipelineConfig::segment_options() const {
    SegmentOptions o;
    o.segmenter = segmenter;
    o.simplify_tolerance = footprints.simplify_tolerance;
    o.min_area_m2 = footprints.min_area_m2;
    o.min_hole_area_m2 = footprints.min_hole_area_m2;
    o.overlap_iou = footprints.overlap_iou;
    return o;
}

json to_json(const PipelineConfig& c) {
    json train = to_json(c.train);
    train.erase("seed");
    return {{"seed", c.seed},
            {"segmenter",
             {{"text_prompt", c.segmenter.text_prompt},
              {"box_threshold", c.segmenter.box_threshold},
              {"text_threshold", c.segmenter.text_threshold}}},
            {"footprints",
             {{"simplify_tolerance", c.footprints.simplify_tolerance},
              {"min_area_m2", c.footprints.min_area_m2},
              {"min_hole_area_m2", c.footprints.min_hole_area_m2},
              {"overlap_iou", c.footprints.overlap_iou}}},
            {"tiling",
             {{"scale_factor", c.tiling.scale_factor},
              {"target_size", c.tiling.target_size},
              {"keep_empty", c.tiling.keep_empty},
              {"label_match_iou", c.tiling.label_match_iou}}},
            {"split", {{"test_frac", c.split.test_frac}}},
            {"train", train},
            {"mapgen", {{"change_iou", c.mapgen.change_iou}}},
            {"paths",
             {{"tiles", c.paths.tiles}, {"models", c.paths.models}, {"reports", c.paths.reports}, {"maps", c.paths.maps}}}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
    PipelineConfig c;
    require_keys(j, "", {"seed", "segmenter", "footprints", "tiling", "split", "train", "mapgen", "paths"});
    read(j, "seed", c.seed, "");
    if (j.contains("segmenter")) {
        const json& s = j["segmenter"];
        require_keys(s, "segmenter", {"text_prompt", "box_threshold", "text_threshold"});
        read(s, "text_prompt", c.segmenter.text_prompt, "segmenter");
        read(s, "box_threshold", c.segmenter.box_threshold, "segmenter");
        read(s, "text_threshold", c.segmenter.text_threshold, "segmenter");
    }
    if (j.contains("footprints")) {
        const json& s = j["footprints"];
        require_keys(s, "footprints", {"simplify_tolerance", "min_area_m2", "min_hole_area_m2", "overlap_iou"});
        read(s, "simplify_tolerance", c.footprints.simplify_tolerance, "footprints");
        read(s, "min_area_m2", c.footprints.min_area_m2, "footprints");
        read(s, "min_hole_area_m2", c.footprints.min_hole_area_m2, "footprints");
        read(s, "overlap_iou", c.footprints.overlap_iou, "footprints");
    }
    bool target_given = false;
    if (j.contains("tiling")) {
        const json& s = j["tiling"];
        require_keys(s, "tiling", {"scale_factor", "target_size", "keep_empty", "label_match_iou"});
        read(s, "scale_factor", c.tiling.scale_factor, "tiling");
        read(s, "target_size", c.tiling.target_size, "tiling");
        read(s, "keep_empty", c.tiling.keep_empty, "tiling");
        read(s, "label_match_iou", c.tiling.label_match_iou, "tiling");
        target_given = s.contains("target_size");
    }
    if (j.contains("split")) {
        require_keys(j["split"], "split", {"test_frac"});
        read(j["split"], "test_frac", c.split.test_frac, "split");
    }
    if (j.contains("train")) {
        if (j["train"].is_object() && j["train"].contains("seed"))
            throw ConfigError("config key 'train.seed' is not allowed; use the top-level seed");
        c.train = train_config_from_json(j["train"]);
        // The tile size follows the backbone unless set explicitly.
        if (!target_given) c.tiling.target_size = c.train.input_size;
    }
    if (j.contains("mapgen")) {
        require_keys(j["mapgen"], "mapgen", {"change_iou"});
        read(j["mapgen"], "change_iou", c.mapgen.change_iou, "mapgen");
    }
    if (j.contains("paths")) {
        const json& s = j["paths"];
        require_keys(s, "paths", {"tiles", "models", "reports", "maps"});
        read(s, "tiles", c.paths.tiles, "paths");
        read(s, "models", c.paths.models, "paths");
        read(s, "reports", c.paths.reports, "paths");
        read(s, "maps", c.paths.maps, "paths");
    }
    c.train.seed = c.seed;
    return c;
}

void apply_seed_override(PipelineConfig& cfg, const std::string& value) {
    std::size_t used = 0;
    unsigned long long seed = 0;
    try {
        seed = std::stoull(value, &used, 10);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size() || value[0] == '-')
        throw ConfigError("ROOFSTOCK_SEED must be a non-negative integer, got '" + value + "'");
    cfg.seed = seed;
    cfg.train.seed = seed;
}

PipelineConfig load_pipeline_config(const std::optional<std::filesystem::path>& path) {
    PipelineConfig cfg;
    if (path) {
        std::ifstream in(*path);
        if (!in) throw IoError("cannot open config " + path->string());
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("malformed config " + path->string() + ": " + e.what());
        }
        cfg = pipeline_config_from_json(doc);
    }
    if (const char* env = std::getenv("ROOFSTOCK_SEED"); env && *env) apply_seed_override(cfg, env);
    cfg.validate();
    return cfg;
}

FootprintCollection run_segment(const GeoRaster& raster, PromptedSegmenter& segmenter, const PipelineConfig& cfg) {
    return segment_buildings(raster, segmenter, cfg.segment_options());
}

TileRunResult run_tile(const GeoRaster& raster, const FootprintCollection& footprints, const PipelineConfig& cfg,
                       const std::string& country, const std::filesystem::path& out_dir,
                       const FootprintCollection* labels) {
    require_same_crs(raster.crs, footprints.crs, "tile");
    FootprintCollection fp = footprints;
    TileRunResult result;
    if (labels) {
        for (auto& f : fp.features) f.properties.roof_type = f.properties.roof_material = std::nullopt;
        result.labels_transferred = transfer_labels(fp, *labels, cfg.tiling.label_match_iou);
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create tile directory " + out_dir.string() + ": " + ec.message());

    result.manifest.seed = cfg.seed;
    const TilingOptions tiling{cfg.tiling.scale_factor, cfg.tiling.target_size};
    for (const auto& f : fp.features) {
        const RoofTile tile = make_roof_tile(raster, f, tiling);
        if (tile.empty) {
            result.empty_tiles.push_back(f.id);
            if (!cfg.tiling.keep_empty) continue;
        }
        const std::string name = tile_file_name(raster.id, f.id);
        write_png(out_dir / name, tile.image);
        ManifestRow row;
        row.tile_id = tile.tile_id;
        row.tile_path = name;
        row.country = country;
        row.source = raster.provenance.source;
        row.roof_type = f.properties.roof_type;
        row.roof_material = f.properties.roof_material;
        result.manifest.rows.push_back(std::move(row));
    }
    result.manifest.sort_rows();
    result.manifest.validate();
    return result;
}

DatasetManifest run_split(const DatasetManifest& manifest, Task task, const PipelineConfig& cfg) {
    return stratified_split(manifest, task, cfg.split.test_frac, cfg.seed);
}

std::vector<CrossCountryCell> run_eval(Task task,
                                       const std::vector<std::pair<std::string, ModelArtifact>>& models,
                                       const std::vector<std::pair<std::string, LabeledTiles>>& tests,
                                       const BackboneProvider& provider) {
    if (models.empty()) throw ValidationError("eval needs at least one model");
    if (tests.empty()) throw ValidationError("eval needs at least one test set");
    std::vector<CrossCountryCell> cells;
    for (const auto& [source, artifact] : models) {
        if (artifact.task != task)
            throw ValidationError("model '" + source + "' is for task " + to_string(artifact.task));
        for (const auto& [country, t] : tests) {
            if (t.tile_ids.empty()) throw ValidationError("test set '" + country + "' is empty");
            std::vector<std::string> labels;
            for (const auto& p : predict(artifact, t.tile_ids, t.tiles, provider)) labels.push_back(p.label);
            cells.push_back(evaluate_cell(source, country, task, artifact.classes, t.truth, labels));
        }
    }
    return cells;
}

}  // namespace roofstock
