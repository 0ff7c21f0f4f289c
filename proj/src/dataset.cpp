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

#include "roofstock/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "roofstock/errors.hpp"

namespace roofstock {

using nlohmann::json;

std::string to_string(Task task) {
    return task == Task::RoofType ? "roof_type" : "roof_material";
}

Task parse_task(const std::string& s) {
    if (s == "roof_type") return Task::RoofType;
    if (s == "roof_material") return Task::RoofMaterial;
    throw ValidationError("unknown task '" + s + "' (expected roof_type|roof_material)");
}

const std::vector<std::string>& task_classes(Task task) {
    static const std::vector<std::string> roof_type = {"Gable", "Hip", "Flat", "No Roof"};
    static const std::vector<std::string> roof_material = {"Healthy metal", "Irregular metal", "Concrete/cement",
                                                           "Blue tarpaulin", "Incomplete"};
    return task == Task::RoofType ? roof_type : roof_material;
}

bool is_valid_label(Task task, const std::string& label) {
    const auto& classes = task_classes(task);
    return std::find(classes.begin(), classes.end(), label) != classes.end();
}

std::size_t class_index(Task task, const std::string& label) {
    const auto& classes = task_classes(task);
    const auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw ValidationError("label '" + label + "' is not a " + to_string(task) + " class");
    return static_cast<std::size_t>(it - classes.begin());
}

std::string to_string(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Test: return "test";
        default: return "unassigned";
    }
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    if (s == "unassigned") return Split::Unassigned;
    throw ValidationError("unknown split '" + s + "'");
}

void DatasetManifest::validate() const {
    std::set<std::string> seen;
    for (const auto& row : rows) {
        if (row.tile_id.empty()) throw ValidationError("manifest row with empty tile_id");
        if (!seen.insert(row.tile_id).second) throw ValidationError("duplicate tile_id '" + row.tile_id + "'");
        for (Task t : {Task::RoofType, Task::RoofMaterial})
            if (row.label(t) && !is_valid_label(t, *row.label(t)))
                throw ValidationError("tile '" + row.tile_id + "': '" + *row.label(t) + "' is not a " + to_string(t) +
                                      " class");
    }
}

void DatasetManifest::sort_rows() {
    std::sort(rows.begin(), rows.end(), [](const ManifestRow& a, const ManifestRow& b) { return a.tile_id < b.tile_id; });
}

ManifestRow* DatasetManifest::find(const std::string& tile_id) {
    for (auto& row : rows)
        if (row.tile_id == tile_id) return &row;
    return nullptr;
}

const ManifestRow* DatasetManifest::find(const std::string& tile_id) const {
    return const_cast<DatasetManifest*>(this)->find(tile_id);
}

// ---------------------------------------------------------------------------
// Serialisation

namespace {

json optional_json(const std::optional<std::string>& v) {
    return v ? json(*v) : json(nullptr);
}

std::optional<std::string> optional_string(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ValidationError(std::string("manifest field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::string required_string(const json& j, const char* key) {
    const auto v = optional_string(j, key);
    if (!v) throw ValidationError(std::string("manifest row is missing '") + key + "'");
    return *v;
}

const char* kColumns[] = {"tile_id", "tile_path", "country", "source", "roof_type",
                          "roof_material", "split", "annotator", "timestamp"};

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

json row_to_json(const ManifestRow& row) {
    return {{"tile_id", row.tile_id},
            {"tile_path", row.tile_path},
            {"country", row.country},
            {"source", to_string(row.source)},
            {"roof_type", optional_json(row.roof_type)},
            {"roof_material", optional_json(row.roof_material)},
            {"split", to_string(row.split)},
            {"annotator", optional_json(row.annotator)},
            {"timestamp", row.timestamp}};
}

ManifestRow row_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("manifest row is not a JSON object");
    ManifestRow row;
    row.tile_id = required_string(j, "tile_id");
    row.tile_path = optional_string(j, "tile_path").value_or("");
    row.country = optional_string(j, "country").value_or("");
    row.source = parse_imagery_source(required_string(j, "source"));
    row.roof_type = optional_string(j, "roof_type");
    row.roof_material = optional_string(j, "roof_material");
    row.split = parse_split(optional_string(j, "split").value_or("unassigned"));
    row.annotator = optional_string(j, "annotator");
    row.timestamp = optional_string(j, "timestamp").value_or("");
    return row;
}

std::string to_jsonl(const DatasetManifest& manifest) {
    DatasetManifest sorted = manifest;
    sorted.sort_rows();
    std::string out = json{{"manifest", {{"seed", manifest.seed}, {"log_seq", manifest.log_seq}}}}.dump();
    out += '\n';
    for (const auto& row : sorted.rows) {
        out += row_to_json(row).dump();
        out += '\n';
    }
    return out;
}

DatasetManifest parse_jsonl(const std::string& text) {
    DatasetManifest m;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        if (j.is_object() && j.contains("manifest")) {
            const json& h = j["manifest"];
            m.seed = h.value("seed", kDefaultSeed);
            m.log_seq = h.value("log_seq", std::uint64_t{0});
            continue;
        }
        m.rows.push_back(row_from_json(j));
    }
    m.validate();
    m.sort_rows();
    return m;
}

std::string to_csv(const DatasetManifest& manifest) {
    DatasetManifest sorted = manifest;
    sorted.sort_rows();
    std::string out;
    for (std::size_t i = 0; i < std::size(kColumns); ++i) out += (i ? "," : "") + std::string(kColumns[i]);
    out += '\n';
    for (const auto& row : sorted.rows) {
        const std::string cells[] = {row.tile_id,
                                     row.tile_path,
                                     row.country,
                                     to_string(row.source),
                                     row.roof_type.value_or(""),
                                     row.roof_material.value_or(""),
                                     to_string(row.split),
                                     row.annotator.value_or(""),
                                     row.timestamp};
        for (std::size_t i = 0; i < std::size(cells); ++i) out += (i ? "," : "") + csv_escape(cells[i]);
        out += '\n';
    }
    return out;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_jsonl(ss.str());
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write manifest " + tmp.string());
        out << to_jsonl(manifest);
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot replace manifest " + path.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Splitting and balancing

std::vector<std::pair<std::string, std::size_t>> class_counts(std::span<const ManifestRow> rows, Task task) {
    std::vector<std::pair<std::string, std::size_t>> counts;
    for (const auto& c : task_classes(task)) counts.emplace_back(c, 0);
    for (const auto& row : rows)
        if (row.label(task)) ++counts[class_index(task, *row.label(task))].second;
    return counts;
}

std::size_t test_quota(double test_frac, std::size_t class_total) {
    // Snap away floating noise (0.1 * 15 = 1.5000000000000002) before the tie rule.
    const double v = std::round(test_frac * double(class_total) * 1e9) / 1e9;
    const double q = std::ceil(v - 0.5);
    return q <= 0 ? 0 : static_cast<std::size_t>(q);
}

namespace {

// Row indices per class (schema order), each list ordered by tile_id.
std::vector<std::vector<std::size_t>> rows_by_class(std::span<const ManifestRow> rows, Task task) {
    std::vector<std::vector<std::size_t>> groups(task_classes(task).size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& label = rows[i].label(task);
        if (!label) throw ValidationError("tile '" + rows[i].tile_id + "' has no " + to_string(task) + " label");
        groups[class_index(task, *label)].push_back(i);
    }
    for (auto& g : groups)
        std::sort(g.begin(), g.end(), [&](std::size_t a, std::size_t b) { return rows[a].tile_id < rows[b].tile_id; });
    return groups;
}

}  // namespace

DatasetManifest stratified_split(const DatasetManifest& manifest, Task task, double test_frac, std::uint64_t seed) {
    if (!(test_frac >= 0.0 && test_frac < 1.0)) throw ConfigError("test_frac must be in [0, 1)");
    manifest.validate();
    DatasetManifest out = manifest;
    out.seed = seed;
    const auto groups = rows_by_class(out.rows, task);
    const auto& names = task_classes(task);

    for (auto& row : out.rows) row.split = Split::Train;
    for (std::size_t c = 0; c < groups.size(); ++c) {
        const std::size_t quota = test_quota(test_frac, groups[c].size());
        std::vector<std::size_t> drone;
        for (std::size_t i : groups[c])
            if (out.rows[i].source == ImagerySource::Drone) drone.push_back(i);
        if (drone.size() < quota)
            throw ValidationError("class '" + names[c] + "' has " + std::to_string(drone.size()) +
                                  " drone rows but its test quota is " + std::to_string(quota));
        Rng rng(derive_seed(seed, c));
        rng.shuffle(drone);
        for (std::size_t k = 0; k < quota; ++k) out.rows[drone[k]].split = Split::Test;
    }
    out.sort_rows();
    return out;
}

std::vector<ManifestRow> oversample(std::span<const ManifestRow> train_rows, Task task, std::uint64_t seed) {
    const auto groups = rows_by_class(train_rows, task);
    std::size_t majority = 0;
    for (const auto& g : groups) majority = std::max(majority, g.size());
    std::vector<ManifestRow> out(train_rows.begin(), train_rows.end());
    for (std::size_t c = 0; c < groups.size(); ++c) {
        const auto& g = groups[c];
        if (g.empty()) continue;  // absent classes are never synthesised
        Rng rng(derive_seed(seed, 1000 + c));
        for (std::size_t k = g.size(); k < majority; ++k) out.push_back(train_rows[g[rng.uniform_index(g.size())]]);
    }
    return out;
}

DatasetManifest combine_manifests(const DatasetManifest& a, const DatasetManifest& b) {
    DatasetManifest out = a;
    std::set<std::string> ids;
    for (const auto& row : a.rows) ids.insert(row.tile_id);
    for (const auto& row : b.rows) {
        if (ids.count(row.tile_id)) throw ValidationError("tile_id collision while combining: '" + row.tile_id + "'");
        out.rows.push_back(row);
    }
    out.log_seq = 0;
    out.sort_rows();
    return out;
}

// ---------------------------------------------------------------------------
// Augmentation

AugmentParams sample_augment(Rng& rng) {
    AugmentParams p;
    p.hflip = rng.bernoulli(0.5);
    p.vflip = rng.bernoulli(0.5);
    p.angle_deg = rng.uniform(-90.0, 90.0);
    return p;
}

Image flip_horizontal(const Image& img) {
    Image out(img.width, img.height, img.bands);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            for (int b = 0; b < img.bands; ++b) out.at(r, img.width - 1 - c, b) = img.at(r, c, b);
    return out;
}

Image flip_vertical(const Image& img) {
    Image out(img.width, img.height, img.bands);
    const std::size_t stride = std::size_t(img.width) * img.bands;
    for (int r = 0; r < img.height; ++r)
        std::copy_n(&img.data[r * stride], stride, &out.data[(img.height - 1 - r) * stride]);
    return out;
}

Image rotate_image(const Image& img, double angle_deg) {
    if (angle_deg == 0.0) return img;
    Image out(img.width, img.height, img.bands);
    const double a = angle_deg * std::numbers::pi / 180.0;
    const double cs = std::cos(a), sn = std::sin(a);
    const double cx = 0.5 * (img.width - 1), cy = 0.5 * (img.height - 1);
    const auto sample = [&](int r, int c, int b) -> double {
        if (r < 0 || r >= img.height || c < 0 || c >= img.width) return 0.0;
        return img.at(r, c, b);
    };
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            // Inverse map: destination (x, y-up) rotated by -angle.
            const double dx = c - cx, dy = cy - r;
            const double sx = cs * dx + sn * dy;
            const double sy = -sn * dx + cs * dy;
            const double fc = cx + sx, fr = cy - sy;
            if (fc <= -1.0 || fc >= img.width || fr <= -1.0 || fr >= img.height) continue;
            const int c0 = static_cast<int>(std::floor(fc)), r0 = static_cast<int>(std::floor(fr));
            const double wx = fc - c0, wy = fr - r0;
            for (int b = 0; b < img.bands; ++b) {
                const double v = (sample(r0, c0, b) * (1 - wx) + sample(r0, c0 + 1, b) * wx) * (1 - wy) +
                                 (sample(r0 + 1, c0, b) * (1 - wx) + sample(r0 + 1, c0 + 1, b) * wx) * wy;
                out.at(r, c, b) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    return out;
}

Image apply_augment(const Image& img, const AugmentParams& params) {
    Image out = params.hflip ? flip_horizontal(img) : img;
    if (params.vflip) out = flip_vertical(out);
    return rotate_image(out, params.angle_deg);
}

Image augment(const Image& img, Rng& rng) {
    if (img.width != img.height) throw ValidationError("augment expects a square image");
    return apply_augment(img, sample_augment(rng));
}

}  // namespace roofstock
