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
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "roofstock/geocore.hpp"
#include "roofstock/random.hpp"

namespace roofstock {

enum class Task { RoofType, RoofMaterial };

std::string to_string(Task task);
Task parse_task(const std::string& s);

/// Canonical class spellings in schema order.
const std::vector<std::string>& task_classes(Task task);
bool is_valid_label(Task task, const std::string& label);
/// Index of `label` in task_classes(task); throws ValidationError if unknown.
std::size_t class_index(Task task, const std::string& label);

enum class Split { Train, Test, Unassigned };

std::string to_string(Split split);
Split parse_split(const std::string& s);

struct ManifestRow {
    std::string tile_id;
    std::string tile_path;
    std::string country;
    ImagerySource source = ImagerySource::Drone;
    std::optional<std::string> roof_type;
    std::optional<std::string> roof_material;
    Split split = Split::Unassigned;
    std::optional<std::string> annotator;
    std::string timestamp;

    const std::optional<std::string>& label(Task task) const {
        return task == Task::RoofType ? roof_type : roof_material;
    }
    std::optional<std::string>& label(Task task) { return task == Task::RoofType ? roof_type : roof_material; }

    friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

inline constexpr std::uint64_t kDefaultSeed = 42;

struct DatasetManifest {
    std::vector<ManifestRow> rows;
    std::uint64_t seed = kDefaultSeed;
    /// Last label-log sequence number folded into the rows.
    std::uint64_t log_seq = 0;

    /// Unique tile ids, schema-valid labels.
    void validate() const;
    void sort_rows();
    ManifestRow* find(const std::string& tile_id);
    const ManifestRow* find(const std::string& tile_id) const;
};

nlohmann::json row_to_json(const ManifestRow& row);
ManifestRow row_from_json(const nlohmann::json& j);

/// JSON-lines: a header object, then one row per line sorted by tile_id.
std::string to_jsonl(const DatasetManifest& manifest);
DatasetManifest parse_jsonl(const std::string& text);
/// Spreadsheet export with the manifest row columns.
std::string to_csv(const DatasetManifest& manifest);

DatasetManifest load_manifest(const std::filesystem::path& path);
/// Writes via a temporary file and rename so readers never see a torn file.
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Per-class row counts in schema order (classes with zero rows included).
std::vector<std::pair<std::string, std::size_t>> class_counts(std::span<const ManifestRow> rows, Task task);

/// round(test_frac * n) with exact halves rounded down.
std::size_t test_quota(double test_frac, std::size_t class_total);

/// Source-aware stratified split. Per class, test_quota(test_frac, n) rows are
/// drawn uniformly (seeded) from the class's drone rows; everything else,
/// including every aircraft row, goes to train.
DatasetManifest stratified_split(const DatasetManifest& manifest, Task task, double test_frac = 0.2,
                                 std::uint64_t seed = kDefaultSeed);

/// Random oversampling: every present class is topped up to the majority count
/// with seeded draws (with replacement) from its own rows. Originals come first.
std::vector<ManifestRow> oversample(std::span<const ManifestRow> train_rows, Task task,
                                    std::uint64_t seed = kDefaultSeed);

/// Union of two manifests; tile ids must be disjoint.
DatasetManifest combine_manifests(const DatasetManifest& a, const DatasetManifest& b);

// ---------------------------------------------------------------------------
// Train-time augmentation

struct AugmentParams {
    bool hflip = false;
    bool vflip = false;
    double angle_deg = 0.0;
};

/// Bernoulli(0.5) horizontal and vertical flips, rotation uniform on [-90, 90].
AugmentParams sample_augment(Rng& rng);

Image flip_horizontal(const Image& img);
Image flip_vertical(const Image& img);
/// Rotation about the image centre (counter-clockwise for positive angles), zero fill.
Image rotate_image(const Image& img, double angle_deg);

/// Flips first, then rotation.
Image apply_augment(const Image& img, const AugmentParams& params);
Image augment(const Image& img, Rng& rng);

}  // namespace roofstock
