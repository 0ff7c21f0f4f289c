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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "roofstock/dataset.hpp"
#include "roofstock/network.hpp"

namespace roofstock {

struct TrainConfig {
    Task task = Task::RoofMaterial;
    std::string backbone_id = "resnet50";
    int input_size = 224;
    int batch_size = 32;
    int max_epochs = 60;
    double initial_lr = 1e-5;
    int plateau_patience = 7;
    double plateau_factor = 0.1;
    double label_smoothing = 0.1;
    /// Stratified share of the train split held out to monitor the plateau rule.
    double validation_frac = 0.1;
    std::uint64_t seed = kDefaultSeed;
    AdamSettings adam;

    void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double lr = 0.0;  ///< learning rate used during this epoch
};

struct ModelArtifact {
    std::string model_id;
    std::string backbone_id;
    Task task = Task::RoofMaterial;
    std::vector<std::string> classes;  ///< frozen output order
    int input_size = 224;
    Normalization normalization;
    TrainConfig config;
    std::vector<EpochRecord> history;
    int best_epoch = -1;
    std::vector<float> weights;
};

/// Writes `artifact.json`, `weights.bin` and `history.csv` into `dir`.
void save_artifact(const ModelArtifact& artifact, const std::filesystem::path& dir);
ModelArtifact load_artifact(const std::filesystem::path& dir);
std::string history_csv(const ModelArtifact& artifact);

/// Supplies the (padded) tile image for a manifest row.
using TileLoader = std::function<Image(const ManifestRow&)>;

/// Loads PNG tiles, resolving relative tile paths against `base_dir`.
TileLoader png_tile_loader(std::filesystem::path base_dir);

/// Fine-tunes a backbone on the manifest's train rows.
///
/// A stratified validation share is carved out of the train rows, the rest is
/// oversampled once (seeded) and each epoch runs an augmented pass in seeded
/// shuffled order, a validation pass, and a plateau-rule lr update. The
/// returned weights are those of the epoch with the lowest validation loss.
ModelArtifact train_classifier(const DatasetManifest& manifest, const TrainConfig& cfg,
                               const BackboneProvider& provider, const TileLoader& loader);

struct Prediction {
    std::string tile_id;
    std::vector<double> probabilities;  ///< over artifact.classes
    std::string label;
    double confidence = 0.0;
};

/// Rebuilds the artifact's network once and scores tiles one at a time.
class Predictor {
public:
    Predictor(const ModelArtifact& artifact, const BackboneProvider& provider);
    Prediction predict(const std::string& tile_id, const Image& tile) const;
    const ModelArtifact& artifact() const { return artifact_; }

private:
    ModelArtifact artifact_;
    std::unique_ptr<Network> network_;
    std::unique_ptr<Network::Workspace> workspace_;
};

/// One prediction per tile; tiles must be input_size x input_size.
std::vector<Prediction> predict(const ModelArtifact& artifact, std::span<const std::string> tile_ids,
                                std::span<const Image> tiles, const BackboneProvider& provider,
                                std::size_t batch_size = 32);

}  // namespace roofstock
