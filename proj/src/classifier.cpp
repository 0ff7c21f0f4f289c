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

#include "roofstock/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "roofstock/errors.hpp"
#include "roofstock/loss.hpp"
#include "roofstock/tiling.hpp"

namespace roofstock {

using nlohmann::json;

void TrainConfig::validate() const {
    const auto& ids = known_backbones();
    if (std::find(ids.begin(), ids.end(), backbone_id) == ids.end())
        throw ConfigError("unknown backbone_id '" + backbone_id + "'");
    if (backbone_id == "inceptionv3" ? input_size != 299 : (backbone_id != "tiny_test" && input_size != 224))
        throw ConfigError("input_size " + std::to_string(input_size) + " does not match backbone '" + backbone_id + "'");
    if (input_size < 32) throw ConfigError("input_size must be >= 32");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
    if (!(initial_lr > 0)) throw ConfigError("initial_lr must be > 0");
    if (plateau_patience < 1) throw ConfigError("plateau_patience must be >= 1");
    if (!(plateau_factor > 0 && plateau_factor < 1)) throw ConfigError("plateau_factor must be in (0, 1)");
    if (!(label_smoothing >= 0 && label_smoothing < 1)) throw ConfigError("label_smoothing must be in [0, 1)");
    if (!(validation_frac >= 0 && validation_frac < 1)) throw ConfigError("validation_frac must be in [0, 1)");
}

json to_json(const TrainConfig& cfg) {
    return {{"task", to_string(cfg.task)},
            {"backbone_id", cfg.backbone_id},
            {"input_size", cfg.input_size},
            {"batch_size", cfg.batch_size},
            {"max_epochs", cfg.max_epochs},
            {"initial_lr", cfg.initial_lr},
            {"plateau_patience", cfg.plateau_patience},
            {"plateau_factor", cfg.plateau_factor},
            {"label_smoothing", cfg.label_smoothing},
            {"validation_frac", cfg.validation_frac},
            {"seed", cfg.seed},
            {"adam",
             {{"beta1", cfg.adam.beta1},
              {"beta2", cfg.adam.beta2},
              {"epsilon", cfg.adam.epsilon},
              {"weight_decay", cfg.adam.weight_decay}}}};
}

TrainConfig train_config_from_json(const json& j) {
    static const std::set<std::string> keys = {"task",           "backbone_id",      "input_size",     "batch_size",
                                               "max_epochs",     "initial_lr",       "plateau_patience",
                                               "plateau_factor", "label_smoothing",  "validation_frac", "seed",
                                               "adam"};
    if (!j.is_object()) throw ConfigError("train config must be an object");
    TrainConfig cfg;
    for (const auto& [k, v] : j.items())
        if (!keys.count(k)) throw ConfigError("unknown train config key '" + k + "'");
    try {
        if (j.contains("task")) cfg.task = parse_task(j["task"].get<std::string>());
        cfg.backbone_id = j.value("backbone_id", cfg.backbone_id);
        cfg.input_size = j.value("input_size", default_input_size(cfg.backbone_id));
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
        cfg.initial_lr = j.value("initial_lr", cfg.initial_lr);
        cfg.plateau_patience = j.value("plateau_patience", cfg.plateau_patience);
        cfg.plateau_factor = j.value("plateau_factor", cfg.plateau_factor);
        cfg.label_smoothing = j.value("label_smoothing", cfg.label_smoothing);
        cfg.validation_frac = j.value("validation_frac", cfg.validation_frac);
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("adam")) {
            const json& a = j["adam"];
            for (const auto& [k, v] : a.items())
                if (k != "beta1" && k != "beta2" && k != "epsilon" && k != "weight_decay")
                    throw ConfigError("unknown adam key '" + k + "'");
            cfg.adam.beta1 = a.value("beta1", cfg.adam.beta1);
            cfg.adam.beta2 = a.value("beta2", cfg.adam.beta2);
            cfg.adam.epsilon = a.value("epsilon", cfg.adam.epsilon);
            cfg.adam.weight_decay = a.value("weight_decay", cfg.adam.weight_decay);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed train config: ") + e.what());
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Artifact persistence

namespace {

std::uint64_t fnv1a(std::span<const float> weights) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(weights.data());
    for (std::size_t i = 0; i < weights.size_bytes(); ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

std::string history_csv(const ModelArtifact& artifact) {
    std::string out = "epoch,train_loss,val_loss,lr\n";
    for (const auto& h : artifact.history)
        out += std::to_string(h.epoch) + "," + fmt(h.train_loss) + "," + fmt(h.val_loss) + "," + fmt(h.lr) + "\n";
    return out;
}

void save_artifact(const ModelArtifact& a, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create artifact directory " + dir.string() + ": " + ec.message());

    json history = json::array();
    for (const auto& h : a.history)
        history.push_back({{"epoch", h.epoch},
                           {"train_loss", h.train_loss},
                           {"val_loss", h.val_loss},
                           {"train_accuracy", h.train_accuracy},
                           {"val_accuracy", h.val_accuracy},
                           {"lr", h.lr}});
    const json doc = {{"model_id", a.model_id},
                      {"backbone_id", a.backbone_id},
                      {"task", to_string(a.task)},
                      {"classes", a.classes},
                      {"input_size", a.input_size},
                      {"normalization",
                       {{"mean", std::vector<float>(a.normalization.mean.begin(), a.normalization.mean.end())},
                        {"std", std::vector<float>(a.normalization.stddev.begin(), a.normalization.stddev.end())}}},
                      {"config", to_json(a.config)},
                      {"history", history},
                      {"best_epoch", a.best_epoch},
                      {"weights", {{"file", "weights.bin"}, {"count", a.weights.size()}, {"fnv1a", hex(fnv1a(a.weights))}}}};
    {
        std::ofstream out(dir / "artifact.json");
        if (!out) throw IoError("cannot write " + (dir / "artifact.json").string());
        out << doc.dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "weights.bin", std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / "weights.bin").string());
        out.write(reinterpret_cast<const char*>(a.weights.data()),
                  static_cast<std::streamsize>(a.weights.size() * sizeof(float)));
    }
    std::ofstream csv(dir / "history.csv");
    if (!csv) throw IoError("cannot write " + (dir / "history.csv").string());
    csv << history_csv(a);
}

ModelArtifact load_artifact(const std::filesystem::path& dir) {
    std::ifstream in(dir / "artifact.json");
    if (!in) throw IoError("cannot open " + (dir / "artifact.json").string());
    ModelArtifact a;
    try {
        const json doc = json::parse(in);
        a.model_id = doc.at("model_id").get<std::string>();
        a.backbone_id = doc.at("backbone_id").get<std::string>();
        a.task = parse_task(doc.at("task").get<std::string>());
        a.classes = doc.at("classes").get<std::vector<std::string>>();
        a.input_size = doc.at("input_size").get<int>();
        const auto mean = doc.at("normalization").at("mean").get<std::vector<float>>();
        const auto sd = doc.at("normalization").at("std").get<std::vector<float>>();
        for (std::size_t i = 0; i < 3 && i < mean.size() && i < sd.size(); ++i) {
            a.normalization.mean[i] = mean[i];
            a.normalization.stddev[i] = sd[i];
        }
        a.config = train_config_from_json(doc.at("config"));
        for (const auto& h : doc.at("history"))
            a.history.push_back({h.at("epoch").get<int>(), h.at("train_loss").get<double>(),
                                 h.at("val_loss").get<double>(), h.value("train_accuracy", 0.0),
                                 h.value("val_accuracy", 0.0), h.at("lr").get<double>()});
        a.best_epoch = doc.at("best_epoch").get<int>();
        const auto& w = doc.at("weights");
        const std::size_t count = w.at("count").get<std::size_t>();
        std::ifstream bin(dir / w.at("file").get<std::string>(), std::ios::binary);
        if (!bin) throw IoError("cannot open weights for " + dir.string());
        a.weights.resize(count);
        bin.read(reinterpret_cast<char*>(a.weights.data()), static_cast<std::streamsize>(count * sizeof(float)));
        if (bin.gcount() != static_cast<std::streamsize>(count * sizeof(float)))
            throw IoError("weights file for " + dir.string() + " is truncated");
        if (w.contains("fnv1a") && w["fnv1a"].get<std::string>() != hex(fnv1a(a.weights)))
            throw IoError("weights checksum mismatch for " + dir.string());
    } catch (const json::exception& e) {
        throw IoError("malformed artifact.json in " + dir.string() + ": " + e.what());
    }
    for (const auto& c : a.classes)
        if (!is_valid_label(a.task, c)) throw ValidationError("artifact class '" + c + "' is not in the task schema");
    return a;
}

TileLoader png_tile_loader(std::filesystem::path base_dir) {
    return [base = std::move(base_dir)](const ManifestRow& row) {
        std::filesystem::path p(row.tile_path);
        if (p.is_relative()) p = base / p;
        return read_png(p);
    };
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct Sample {
    std::size_t image;  // index into the decoded image table
    std::size_t label;  // index into artifact classes
};

void check_tile(const Image& img, int size, const std::string& tile_id) {
    if (img.width != size || img.height != size)
        throw ValidationError("tile '" + tile_id + "' is " + std::to_string(img.width) + "x" +
                              std::to_string(img.height) + ", expected " + std::to_string(size) + "x" +
                              std::to_string(size));
}

struct PassResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

std::vector<double> to_double(std::span<const float> v) {
    return {v.begin(), v.end()};
}

void require_finite(std::span<const float> logits, const std::string& where) {
    for (float v : logits)
        if (!std::isfinite(v)) throw Error("training diverged: non-finite logits " + where);
}

}  // namespace

ModelArtifact train_classifier(const DatasetManifest& manifest, const TrainConfig& cfg,
                               const BackboneProvider& provider, const TileLoader& loader) {
    cfg.validate();
    const Task task = cfg.task;

    std::vector<ManifestRow> train_rows;
    for (const auto& row : manifest.rows) {
        if (row.split != Split::Train) continue;
        if (!row.label(task)) throw ValidationError("train tile '" + row.tile_id + "' has no " + to_string(task) + " label");
        train_rows.push_back(row);
    }
    if (train_rows.empty()) throw ValidationError("train split is empty");
    std::sort(train_rows.begin(), train_rows.end(),
              [](const ManifestRow& a, const ManifestRow& b) { return a.tile_id < b.tile_id; });
    if (!provider.available(cfg.backbone_id))
        throw BackendError("backbone '" + cfg.backbone_id + "' is unavailable from the configured provider");

    ModelArtifact artifact;
    artifact.backbone_id = cfg.backbone_id;
    artifact.task = task;
    artifact.input_size = cfg.input_size;
    artifact.config = cfg;
    artifact.normalization = provider.normalization(cfg.backbone_id);
    std::vector<std::size_t> schema_to_output(task_classes(task).size(), SIZE_MAX);
    for (const auto& [name, n] : class_counts(train_rows, task))
        if (n > 0) {
            schema_to_output[class_index(task, name)] = artifact.classes.size();
            artifact.classes.push_back(name);
        }

    auto network = provider.create(cfg.backbone_id, cfg.input_size, static_cast<int>(artifact.classes.size()), cfg.seed);
    const auto finish = [&](std::vector<float> weights) {
        artifact.weights = std::move(weights);
        artifact.model_id = cfg.backbone_id + "-" + to_string(task) + "-" + hex(fnv1a(artifact.weights)).substr(0, 8);
        return artifact;
    };
    if (cfg.max_epochs == 0) {
        const auto p = network->parameters();
        return finish({p.begin(), p.end()});
    }

    // Stratified validation carve-out; every class keeps at least one fit row.
    std::vector<ManifestRow> fit_rows, val_rows;
    {
        std::vector<std::vector<std::size_t>> by_class(task_classes(task).size());
        for (std::size_t i = 0; i < train_rows.size(); ++i)
            by_class[class_index(task, *train_rows[i].label(task))].push_back(i);
        std::vector<std::uint8_t> is_val(train_rows.size(), 0);
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            auto& idx = by_class[c];
            if (idx.empty()) continue;
            const std::size_t quota = std::min(test_quota(cfg.validation_frac, idx.size()), idx.size() - 1);
            Rng rng(derive_seed(cfg.seed, 0x7a11da7e + c));
            rng.shuffle(idx);
            for (std::size_t k = 0; k < quota; ++k) is_val[idx[k]] = 1;
        }
        for (std::size_t i = 0; i < train_rows.size(); ++i) (is_val[i] ? val_rows : fit_rows).push_back(train_rows[i]);
    }
    const std::vector<ManifestRow> epoch_rows = oversample(fit_rows, task, cfg.seed);

    // Decode every distinct tile once.
    std::vector<Image> images;
    std::map<std::string, std::size_t> image_of;
    const auto intern = [&](const ManifestRow& row) {
        const auto it = image_of.find(row.tile_id);
        if (it != image_of.end()) return it->second;
        Image img = loader(row);
        check_tile(img, cfg.input_size, row.tile_id);
        images.push_back(std::move(img));
        return image_of[row.tile_id] = images.size() - 1;
    };
    std::vector<Sample> fit, val;
    for (const auto& row : epoch_rows) fit.push_back({intern(row), schema_to_output[class_index(task, *row.label(task))]});
    for (const auto& row : val_rows) val.push_back({intern(row), schema_to_output[class_index(task, *row.label(task))]});
    std::vector<std::string> id_of(images.size());
    for (const auto& [id, i] : image_of) id_of[i] = id;

    const std::size_t n_params = network->parameters().size();
    const std::size_t k_out = artifact.classes.size();
    auto ws = network->make_workspace();
    std::vector<float> logits(k_out), dlogits(k_out), grad(n_params);
    Adam adam(n_params, cfg.adam);
    PlateauScheduler scheduler(cfg.initial_lr, cfg.plateau_patience, cfg.plateau_factor);
    double lr = cfg.initial_lr;
    double best = std::numeric_limits<double>::infinity();
    std::vector<float> best_weights(network->parameters().begin(), network->parameters().end());

    // Validation tensors never change.
    std::vector<std::vector<float>> val_tensors;
    for (const auto& s : val) val_tensors.push_back(to_tensor(images[s.image], artifact.normalization));

    const auto score = [&](std::size_t label) {
        const auto ld = to_double(logits);
        const double loss = smoothed_cross_entropy(ld, label, cfg.label_smoothing);
        const bool hit = std::size_t(std::max_element(logits.begin(), logits.end()) - logits.begin()) == label;
        return std::pair{loss, hit};
    };

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::vector<std::size_t> order(fit.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffler(derive_seed(cfg.seed, 0xe90c0000ULL + epoch));
        shuffler.shuffle(order);

        PassResult train;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch_size));
            std::fill(grad.begin(), grad.end(), 0.0f);
            const float inv_n = 1.0f / static_cast<float>(end - start);
            for (std::size_t pos = start; pos < end; ++pos) {
                const Sample& s = fit[order[pos]];
                Rng aug_rng(derive_seed(derive_seed(cfg.seed, 0xa0000000ULL + epoch), order[pos]));
                const auto x = to_tensor(augment(images[s.image], aug_rng), artifact.normalization);
                network->forward(x, *ws, logits);
                require_finite(logits, "at epoch " + std::to_string(epoch) + " on tile '" + id_of[s.image] + "'");
                const auto [loss, hit] = score(s.label);
                if (!std::isfinite(loss)) throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch));
                train.loss += loss;
                train.accuracy += hit;
                const auto g = smoothed_cross_entropy_grad(to_double(logits), s.label, cfg.label_smoothing);
                for (std::size_t k = 0; k < k_out; ++k) dlogits[k] = static_cast<float>(g[k]) * inv_n;
                network->backward(*ws, dlogits, grad);
            }
            adam.step(network->parameters(), grad, lr);
        }
        train.loss /= double(fit.size());
        train.accuracy /= double(fit.size());

        PassResult valid;
        for (std::size_t i = 0; i < val.size(); ++i) {
            network->forward(val_tensors[i], *ws, logits);
            require_finite(logits, "during validation at epoch " + std::to_string(epoch));
            const auto [loss, hit] = score(val[i].label);
            valid.loss += loss;
            valid.accuracy += hit;
        }
        if (!val.empty()) {
            valid.loss /= double(val.size());
            valid.accuracy /= double(val.size());
        }
        const double monitored = val.empty() ? train.loss : valid.loss;
        artifact.history.push_back({epoch, train.loss, val.empty() ? train.loss : valid.loss, train.accuracy,
                                    val.empty() ? train.accuracy : valid.accuracy, lr});
        if (monitored < best) {
            best = monitored;
            artifact.best_epoch = epoch;
            const auto p = network->parameters();
            best_weights.assign(p.begin(), p.end());
        }
        lr = scheduler.step(monitored);
    }
    return finish(std::move(best_weights));
}

// ---------------------------------------------------------------------------
// Prediction

Predictor::Predictor(const ModelArtifact& artifact, const BackboneProvider& provider) : artifact_(artifact) {
    if (artifact.classes.empty()) throw ValidationError("artifact has no classes");
    network_ = provider.create(artifact.backbone_id, artifact.input_size, static_cast<int>(artifact.classes.size()), 0);
    auto params = network_->parameters();
    if (params.size() != artifact.weights.size())
        throw ValidationError("artifact weights do not match backbone '" + artifact.backbone_id + "'");
    std::copy(artifact.weights.begin(), artifact.weights.end(), params.begin());
    workspace_ = network_->make_workspace();
}

Prediction Predictor::predict(const std::string& tile_id, const Image& tile) const {
    check_tile(tile, artifact_.input_size, tile_id);
    std::vector<float> logits(artifact_.classes.size());
    network_->forward(to_tensor(tile, artifact_.normalization), *workspace_, logits);
    Prediction p;
    p.tile_id = tile_id;
    p.probabilities = softmax(to_double(logits));
    const auto best = std::max_element(p.probabilities.begin(), p.probabilities.end()) - p.probabilities.begin();
    p.label = artifact_.classes[best];
    p.confidence = p.probabilities[best];
    return p;
}

std::vector<Prediction> predict(const ModelArtifact& artifact, std::span<const std::string> tile_ids,
                                std::span<const Image> tiles, const BackboneProvider& provider,
                                std::size_t batch_size) {
    if (tile_ids.size() != tiles.size()) throw ValidationError("predict: tile ids and images differ in length");
    if (batch_size == 0) throw ValidationError("predict: batch_size must be >= 1");
    const Predictor predictor(artifact, provider);
    std::vector<Prediction> out;
    out.reserve(tiles.size());
    for (std::size_t start = 0; start < tiles.size(); start += batch_size)
        for (std::size_t i = start; i < std::min(tiles.size(), start + batch_size); ++i)
            out.push_back(predictor.predict(tile_ids[i], tiles[i]));
    return out;
}

}  // namespace roofstock
