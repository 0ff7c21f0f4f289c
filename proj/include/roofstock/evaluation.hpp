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

#include <map>
#include <span>
#include <string>
#include <vector>

#include "roofstock/classifier.hpp"
#include "roofstock/dataset.hpp"

namespace roofstock {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<std::size_t>> counts;

    std::size_t total() const;
    std::size_t trace() const;
};

ConfusionMatrix confusion_matrix(std::span<const std::string> truth, std::span<const std::string> pred,
                                 const std::vector<std::string>& classes);

/// Per-class scores as fractions in [0, 1].
struct ClassScores {
    std::string name;
    std::size_t support = 0;  ///< true count
    std::size_t predicted = 0;
    double precision = 0.0;  ///< 0 when nothing was predicted as this class
    double recall = 0.0;
    double f1 = 0.0;
};

std::vector<ClassScores> class_scores(const ConfusionMatrix& cm);

/// Percentages, unrounded. Use format_percent for display.
struct MetricBundle {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double accuracy = 0.0;
};

/// Macro averages over the classes that occur in the truth; accuracy is trace / total.
MetricBundle macro_metrics(const ConfusionMatrix& cm);

std::string format_percent(double value);

inline const std::string kCombinedSource = "Combined";
inline const std::vector<std::string> kDefaultCountries = {"Dominica", "Saint Lucia"};

struct CrossCountryCell {
    std::string train_source;
    std::string test_source;
    Task task = Task::RoofType;
    MetricBundle metrics;
    /// Truth classes the model cannot output; those samples count as errors.
    std::vector<std::string> missing_classes;
};

/// Scores one (model, test set) pair. The matrix spans the task schema so
/// labels unknown to the model still land on the diagonal row they belong to.
CrossCountryCell evaluate_cell(const std::string& train_source, const std::string& test_source, Task task,
                               const std::vector<std::string>& model_classes, std::span<const std::string> truth,
                               std::span<const std::string> pred);

struct LabeledTiles {
    std::vector<std::string> tile_ids;
    std::vector<std::string> truth;
    std::vector<Image> tiles;
};

/// Test rows of a manifest (sorted by tile id) with their labels and images.
/// Every row must be drone imagery.
LabeledTiles labeled_test_tiles(const DatasetManifest& manifest, Task task, const TileLoader& loader);

/// Every train source in `countries` + Combined against every test country.
std::vector<CrossCountryCell> cross_country_matrix(Task task, const std::vector<std::string>& countries,
                                                   const std::map<std::string, ModelArtifact>& artifacts,
                                                   const std::map<std::string, LabeledTiles>& tests,
                                                   const BackboneProvider& provider);

struct Report {
    Task task = Task::RoofType;
    std::string markdown;
    std::string csv;
};

/// One report per task that has cells, rows ordered Dominica, Saint Lucia,
/// other sources, Combined.
std::vector<Report> emit_report(std::span<const CrossCountryCell> cells);

/// Parses the CSV rendering back; metrics carry the printed 2-decimal values.
std::vector<CrossCountryCell> parse_report_csv(const std::string& csv);

/// Writes report_<task>.md and report_<task>.csv; returns the written paths.
std::vector<std::filesystem::path> write_reports(std::span<const CrossCountryCell> cells,
                                                 const std::filesystem::path& dir);

}  // namespace roofstock
