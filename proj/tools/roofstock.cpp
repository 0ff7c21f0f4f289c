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

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "roofstock/annotation.hpp"
#include "roofstock/classifier.hpp"
#include "roofstock/errors.hpp"
#include "roofstock/evaluation.hpp"
#include "roofstock/footprints.hpp"
#include "roofstock/geocore.hpp"
#include "roofstock/mapgen.hpp"
#include "roofstock/pipeline.hpp"
#include "roofstock/synthetic.hpp"

namespace fs = std::filesystem;
using namespace roofstock;
using nlohmann::json;

namespace {

struct Global {
    std::string config;
    PipelineConfig load() const {
        return load_pipeline_config(config.empty() ? std::nullopt : std::optional<fs::path>(config));
    }
};

GeoRaster read_raster(const fs::path& path) {
    return GeoTiffReader().read(path);
}

FootprintCollection read_footprints(const fs::path& path) {
    LoadResult r = load_footprints_file(path);
    for (const auto& rej : r.report.rejected)
        std::cerr << "warning: " << path.string() << ": dropped feature '" << rej.id << "': " << rej.reason << "\n";
    return std::move(r.collection);
}

/// "name=value" pairs from repeated options.
std::vector<std::pair<std::string, std::string>> pairs(const std::vector<std::string>& items, const std::string& flag) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
            throw ValidationError(flag + " expects NAME=PATH, got '" + item + "'");
        out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
    return out;
}

fs::path manifest_dir(const fs::path& manifest) {
    const fs::path parent = manifest.parent_path();
    return parent.empty() ? fs::path(".") : parent;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string out, id = "synthetic", palette = "a";
    std::uint64_t seed = kDefaultSeed;
    int year = 2018;
    int size = 2000;
    int grid = 17;
};

int cmd_synth(const SynthArgs& a) {
    SyntheticOptions o;
    o.id = a.id;
    o.palette = palette_by_name(a.palette);
    o.seed = a.seed;
    o.year = a.year;
    o.size = a.size;
    o.grid = a.grid;
    const SyntheticScene scene = make_synthetic_scene(o);
    fs::create_directories(a.out);
    const fs::path tif = fs::path(a.out) / (a.id + ".tif");
    const fs::path truth = fs::path(a.out) / (a.id + "_truth.geojson");
    write_geotiff(tif, scene.raster);
    save_footprints_file(scene.truth, truth);
    std::cout << "wrote " << tif.string() << " and " << truth.string() << " (" << scene.truth.features.size()
              << " roofs)\n";
    return 0;
}

struct SegmentArgs {
    std::string raster, out;
};

int cmd_segment(const Global& g, const SegmentArgs& a) {
    const PipelineConfig cfg = g.load();
    const GeoRaster raster = read_raster(a.raster);
    ThresholdSegmenter segmenter;
    const FootprintCollection fc = run_segment(raster, segmenter, cfg);
    save_footprints_file(fc, a.out);
    std::cout << "segmented " << fc.features.size() << " footprints into " << a.out << "\n";
    return 0;
}

struct TileArgs {
    std::string raster, footprints, out, country, labels, manifest;
};

int cmd_tile(const Global& g, const TileArgs& a) {
    const PipelineConfig cfg = g.load();
    const GeoRaster raster = read_raster(a.raster);
    const FootprintCollection fc = read_footprints(a.footprints);
    std::optional<FootprintCollection> labels;
    if (!a.labels.empty()) labels = read_footprints(a.labels);
    const TileRunResult r = run_tile(raster, fc, cfg, a.country, a.out, labels ? &*labels : nullptr);
    const fs::path manifest = a.manifest.empty() ? fs::path(a.out) / "manifest.jsonl" : fs::path(a.manifest);
    DatasetManifest m = r.manifest;
    if (manifest_dir(manifest) != fs::path(a.out))
        for (auto& row : m.rows)
            row.tile_path = fs::relative(fs::absolute(fs::path(a.out) / row.tile_path), fs::absolute(manifest_dir(manifest)))
                                .generic_string();
    save_manifest(manifest, m);
    std::cout << "wrote " << m.rows.size() << " tiles, manifest " << manifest.string();
    if (labels) std::cout << ", " << r.labels_transferred << " labelled from " << a.labels;
    if (!r.empty_tiles.empty()) std::cout << ", " << r.empty_tiles.size() << " empty tiles";
    std::cout << "\n";
    return 0;
}

struct SplitArgs {
    std::string manifest, task, out;
    std::optional<double> test_frac;
    std::optional<std::uint64_t> seed;
};

int cmd_split(const Global& g, const SplitArgs& a) {
    PipelineConfig cfg = g.load();
    if (a.test_frac) cfg.split.test_frac = *a.test_frac;
    if (a.seed) cfg.seed = *a.seed;
    cfg.validate();
    const Task task = parse_task(a.task);
    const DatasetManifest m = run_split(load_manifest(a.manifest), task, cfg);
    const fs::path out = a.out.empty() ? fs::path(a.manifest) : fs::path(a.out);
    if (manifest_dir(out) != manifest_dir(a.manifest))
        throw ValidationError("--out must be in the same directory as the input manifest");
    save_manifest(out, m);
    std::size_t train = 0, test = 0;
    for (const auto& row : m.rows) (row.split == Split::Test ? test : train) += 1;
    std::cout << "split " << out.string() << ": " << train << " train / " << test << " test (seed " << m.seed << ")\n";
    return 0;
}

struct CombineArgs {
    std::vector<std::string> manifests;
    std::string out;
};

int cmd_combine(const CombineArgs& a) {
    DatasetManifest combined;
    const fs::path out_dir = fs::absolute(manifest_dir(a.out));
    bool first = true;
    for (const auto& path : a.manifests) {
        DatasetManifest m = load_manifest(path);
        for (auto& row : m.rows)
            if (fs::path(row.tile_path).is_relative())
                row.tile_path =
                    fs::relative(fs::absolute(manifest_dir(path) / row.tile_path), out_dir).generic_string();
        if (first) {
            combined = std::move(m);
            first = false;
        } else {
            combined = combine_manifests(combined, m);
        }
    }
    save_manifest(a.out, combined);
    std::cout << "combined " << a.manifests.size() << " manifests into " << a.out << " (" << combined.rows.size()
              << " rows)\n";
    return 0;
}

struct TrainArgs {
    std::string manifest, task, out, backbone;
    std::optional<int> epochs, batch_size;
    std::optional<double> lr;
};

int cmd_train(const Global& g, const TrainArgs& a) {
    PipelineConfig cfg = g.load();
    TrainConfig t = cfg.train;
    t.task = parse_task(a.task);
    if (!a.backbone.empty()) {
        t.backbone_id = a.backbone;
        t.input_size = a.backbone == "tiny_test" ? cfg.tiling.target_size : default_input_size(a.backbone);
    }
    if (a.epochs) t.max_epochs = *a.epochs;
    if (a.batch_size) t.batch_size = *a.batch_size;
    if (a.lr) t.initial_lr = *a.lr;
    BuiltinBackboneProvider provider;
    const DatasetManifest m = load_manifest(a.manifest);
    ModelArtifact art = train_classifier(m, t, provider, png_tile_loader(manifest_dir(a.manifest)));
    save_artifact(art, a.out);
    std::cout << "trained " << art.model_id << " (" << art.classes.size() << " classes, " << art.history.size()
              << " epochs, best " << art.best_epoch << ") into " << a.out << "\n";
    return 0;
}

struct EvalArgs {
    std::string task, out, predictions;
    std::vector<std::string> models, tests;
};

std::vector<CrossCountryCell> cells_from_predictions(Task task, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open predictions " + path.string());
    struct Group {
        std::vector<std::string> truth, pred;
        std::optional<std::vector<std::string>> classes;
    };
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, Group> groups;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            const std::pair key{j.at("train_source").get<std::string>(), j.at("test_source").get<std::string>()};
            if (!groups.count(key)) order.push_back(key);
            Group& grp = groups[key];
            grp.truth.push_back(j.at("truth").get<std::string>());
            grp.pred.push_back(j.at("pred").get<std::string>());
            if (j.contains("model_classes")) grp.classes = j["model_classes"].get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    std::vector<CrossCountryCell> cells;
    for (const auto& key : order) {
        const Group& grp = groups[key];
        cells.push_back(evaluate_cell(key.first, key.second, task, grp.classes.value_or(task_classes(task)), grp.truth,
                                      grp.pred));
    }
    return cells;
}

int cmd_eval(const Global& g, const EvalArgs& a) {
    PipelineConfig cfg = g.load();
    const Task task = parse_task(a.task);
    std::vector<CrossCountryCell> cells;
    if (!a.predictions.empty()) {
        if (!a.models.empty() || !a.tests.empty())
            throw ValidationError("--predictions cannot be combined with --model/--test");
        cells = cells_from_predictions(task, a.predictions);
    } else {
        std::vector<std::pair<std::string, ModelArtifact>> models;
        for (const auto& [name, dir] : pairs(a.models, "--model")) models.emplace_back(name, load_artifact(dir));
        std::vector<std::pair<std::string, LabeledTiles>> tests;
        for (const auto& [country, path] : pairs(a.tests, "--test"))
            tests.emplace_back(country, labeled_test_tiles(load_manifest(path), task, png_tile_loader(manifest_dir(path))));
        BuiltinBackboneProvider provider;
        cells = run_eval(task, models, tests, provider);
    }
    const fs::path out = a.out.empty() ? fs::path(cfg.paths.reports) : fs::path(a.out);
    for (const auto& p : write_reports(cells, out)) std::cout << "wrote " << p.string() << "\n";
    for (const auto& r : emit_report(cells)) std::cout << "\n" << r.markdown;
    return 0;
}

struct MapgenArgs {
    std::string raster, footprints, model, out, before;
};

int cmd_mapgen(const Global& g, const MapgenArgs& a) {
    const PipelineConfig cfg = g.load();
    const GeoRaster raster = read_raster(a.raster);
    const FootprintCollection fc = read_footprints(a.footprints);
    const ModelArtifact art = load_artifact(a.model);
    BuiltinBackboneProvider provider;
    const ClassifiedMap map = classify_footprints(raster, fc, art, provider, cfg.tiling.scale_factor);
    const fs::path out = a.out.empty() ? fs::path(cfg.paths.maps) : fs::path(a.out);
    std::cout << "wrote " << write_classified(map, out).string() << " (" << map.items.size() << " footprints, "
              << map.skipped.size() << " skipped)\n";
    if (!a.before.empty()) {
        const ClassifiedMap before = read_classified(a.before);
        const auto records = change_map(before, map, cfg.mapgen.change_iou);
        const std::string t0 = before.items.empty() ? before.raster_id : std::to_string(before.items.front().year);
        const std::string t1 = std::to_string(raster.provenance.year);
        std::cout << "wrote " << write_changes(records, map.crs, t0, t1, out).string() << " (" << records.size()
                  << " records)\n";
    }
    return 0;
}

struct ServeArgs {
    std::string manifest, log, tiles, task = "roof_type", ui_dir, host = "127.0.0.1";
    int port = 8080;
};

httplib::Server* g_server = nullptr;

int cmd_serve(const ServeArgs& a) {
    AnnotationOptions opts;
    opts.default_task = parse_task(a.task);
    const fs::path log = a.log.empty() ? fs::path(a.manifest + ".labels.jsonl") : fs::path(a.log);
    const fs::path tiles = a.tiles.empty() ? manifest_dir(a.manifest) : fs::path(a.tiles);
    AnnotationService service(a.manifest, log, tiles, opts);
    httplib::Server server;
    register_annotation_routes(server, service, a.ui_dir);
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    std::cout << "serving " << a.manifest << " on http://" << a.host << ":" << a.port << std::endl;
    if (!server.listen(a.host, a.port)) throw IoError("cannot listen on " + a.host + ":" + std::to_string(a.port));
    service.compact();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"roofstock: rooftop classification pipeline for aerial imagery"};
    app.require_subcommand(1);
    Global g;
    app.add_option("--config", g.config, "JSON pipeline config overriding defaults");
    app.fallthrough();

    int status = 0;
    const auto guard = [&status](auto fn) {
        return [&status, fn] { status = fn(); };
    };

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic orthophoto and its truth footprints");
    s->add_option("--out", synth.out, "Output directory")->required();
    s->add_option("--id", synth.id, "Raster id");
    s->add_option("--palette", synth.palette, "Colour palette: a or b");
    s->add_option("--seed", synth.seed, "Generator seed");
    s->add_option("--year", synth.year, "Imagery year");
    s->add_option("--size", synth.size, "Raster side in pixels");
    s->add_option("--grid", synth.grid, "Roofs per row");
    s->callback(guard([&] { return cmd_synth(synth); }));

    SegmentArgs seg;
    s = app.add_subcommand("segment", "Extract building footprints from a GeoTIFF");
    s->add_option("--raster", seg.raster, "Input GeoTIFF")->required();
    s->add_option("--out", seg.out, "Output GeoJSON")->required();
    s->callback(guard([&] { return cmd_segment(g, seg); }));

    TileArgs tile;
    s = app.add_subcommand("tile", "Cut one padded roof tile per footprint");
    s->add_option("--raster", tile.raster, "Input GeoTIFF")->required();
    s->add_option("--footprints", tile.footprints, "Footprint GeoJSON")->required();
    s->add_option("--out", tile.out, "Tile directory")->required();
    s->add_option("--country", tile.country, "Country recorded on each row")->required();
    s->add_option("--labels", tile.labels, "Labelled footprints to transfer by IoU");
    s->add_option("--manifest", tile.manifest, "Manifest path (default <out>/manifest.jsonl)");
    s->callback(guard([&] { return cmd_tile(g, tile); }));

    SplitArgs split;
    s = app.add_subcommand("split", "Source-aware stratified train/test split");
    s->add_option("--manifest", split.manifest, "Manifest to split")->required();
    s->add_option("--task", split.task, "roof_type or roof_material")->required();
    s->add_option("--test-frac", split.test_frac, "Test share per class");
    s->add_option("--seed", split.seed, "Split seed");
    s->add_option("--out", split.out, "Output manifest (default: in place)");
    s->callback(guard([&] { return cmd_split(g, split); }));

    CombineArgs combine;
    s = app.add_subcommand("combine", "Union of manifests with disjoint tile ids");
    s->add_option("--manifest", combine.manifests, "Input manifest (repeat)")->required();
    s->add_option("--out", combine.out, "Output manifest")->required();
    s->callback(guard([&] { return cmd_combine(combine); }));

    TrainArgs train;
    s = app.add_subcommand("train", "Train a roof classifier");
    s->add_option("--manifest", train.manifest, "Split manifest")->required();
    s->add_option("--task", train.task, "roof_type or roof_material")->required();
    s->add_option("--out", train.out, "Artifact directory")->required();
    s->add_option("--backbone", train.backbone, "Backbone id");
    s->add_option("--epochs", train.epochs, "Maximum epochs");
    s->add_option("--batch-size", train.batch_size, "Batch size");
    s->add_option("--lr", train.lr, "Initial learning rate");
    s->callback(guard([&] { return cmd_train(g, train); }));

    EvalArgs ev;
    s = app.add_subcommand("eval", "Cross-country evaluation reports");
    s->add_option("--task", ev.task, "roof_type or roof_material")->required();
    s->add_option("--model", ev.models, "TRAIN_SOURCE=ARTIFACT_DIR (repeat)");
    s->add_option("--test", ev.tests, "COUNTRY=MANIFEST (repeat)");
    s->add_option("--predictions", ev.predictions, "JSONL of precomputed predictions");
    s->add_option("--out", ev.out, "Report directory");
    s->callback(guard([&] { return cmd_eval(g, ev); }));

    MapgenArgs mg;
    s = app.add_subcommand("mapgen", "Classification map (and change map) as GeoJSON");
    s->add_option("--raster", mg.raster, "Input GeoTIFF")->required();
    s->add_option("--footprints", mg.footprints, "Footprint GeoJSON")->required();
    s->add_option("--model", mg.model, "Artifact directory")->required();
    s->add_option("--out", mg.out, "Output directory");
    s->add_option("--before", mg.before, "Earlier classified map for a change map");
    s->callback(guard([&] { return cmd_mapgen(g, mg); }));

    ServeArgs serve;
    s = app.add_subcommand("serve", "Annotation HTTP service");
    s->add_option("--manifest", serve.manifest, "Manifest to label")->required();
    s->add_option("--log", serve.log, "Label log (default <manifest>.labels.jsonl)");
    s->add_option("--tiles", serve.tiles, "Tile directory (default: manifest directory)");
    s->add_option("--task", serve.task, "Default task");
    s->add_option("--port", serve.port, "Port");
    s->add_option("--host", serve.host, "Bind address");
    s->add_option("--ui-dir", serve.ui_dir, "Built UI assets to serve at /");
    s->callback(guard([&] { return cmd_serve(serve); }));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return status;
}
