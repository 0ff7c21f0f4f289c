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

#include "roofstock/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "roofstock/errors.hpp"

namespace roofstock {

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (const auto& row : counts)
        for (std::size_t v : row) n += v;
    return n;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
    return n;
}

ConfusionMatrix confusion_matrix(std::span<const std::string> truth, std::span<const std::string> pred,
                                 const std::vector<std::string>& classes) {
    if (truth.size() != pred.size())
        throw ValidationError("truth and prediction lists differ in length (" + std::to_string(truth.size()) +
                              " vs " + std::to_string(pred.size()) + ")");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < classes.size(); ++i)
        if (!index.emplace(classes[i], i).second) throw ValidationError("duplicate class '" + classes[i] + "'");
    const auto lookup = [&](const std::string& label) {
        const auto it = index.find(label);
        if (it == index.end()) throw ValidationError("unknown label '" + label + "'");
        return it->second;
    };
    ConfusionMatrix cm{classes, std::vector<std::vector<std::size_t>>(classes.size(),
                                                                      std::vector<std::size_t>(classes.size(), 0))};
    for (std::size_t i = 0; i < truth.size(); ++i) ++cm.counts[lookup(truth[i])][lookup(pred[i])];
    return cm;
}

std::vector<ClassScores> class_scores(const ConfusionMatrix& cm) {
    const std::size_t k = cm.classes.size();
    std::vector<ClassScores> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        ClassScores& s = out[i];
        s.name = cm.classes[i];
        for (std::size_t j = 0; j < k; ++j) {
            s.support += cm.counts[i][j];
            s.predicted += cm.counts[j][i];
        }
        const double tp = double(cm.counts[i][i]);
        s.precision = s.predicted ? tp / double(s.predicted) : 0.0;
        s.recall = s.support ? tp / double(s.support) : 0.0;
        s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    }
    return out;
}

MetricBundle macro_metrics(const ConfusionMatrix& cm) {
    const std::size_t total = cm.total();
    if (total == 0) throw ValidationError("cannot compute metrics over zero samples");
    MetricBundle m;
    std::size_t present = 0;
    for (const auto& s : class_scores(cm)) {
        if (s.support == 0) continue;
        ++present;
        m.precision += s.precision;
        m.recall += s.recall;
        m.f1 += s.f1;
    }
    m.precision *= 100.0 / double(present);
    m.recall *= 100.0 / double(present);
    m.f1 *= 100.0 / double(present);
    m.accuracy = 100.0 * double(cm.trace()) / double(total);
    return m;
}

std::string format_percent(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", value);
    return buf;
}

CrossCountryCell evaluate_cell(const std::string& train_source, const std::string& test_source, Task task,
                               const std::vector<std::string>& model_classes, std::span<const std::string> truth,
                               std::span<const std::string> pred) {
    CrossCountryCell cell{train_source, test_source, task, {}, {}};
    const ConfusionMatrix cm = confusion_matrix(truth, pred, task_classes(task));
    const std::set<std::string> known(model_classes.begin(), model_classes.end());
    for (const auto& s : class_scores(cm))
        if (s.support > 0 && !known.count(s.name)) cell.missing_classes.push_back(s.name);
    cell.metrics = macro_metrics(cm);
    return cell;
}

LabeledTiles labeled_test_tiles(const DatasetManifest& manifest, Task task, const TileLoader& loader) {
    std::vector<const ManifestRow*> rows;
    for (const auto& row : manifest.rows)
        if (row.split == Split::Test) rows.push_back(&row);
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->tile_id < b->tile_id; });
    LabeledTiles out;
    for (const ManifestRow* row : rows) {
        if (row->source != ImagerySource::Drone)
            throw ValidationError("test tile '" + row->tile_id + "' is not drone imagery");
        const auto label = row->label(task);
        if (!label) throw ValidationError("test tile '" + row->tile_id + "' has no " + to_string(task) + " label");
        out.tile_ids.push_back(row->tile_id);
        out.truth.push_back(*label);
        out.tiles.push_back(loader(*row));
    }
    return out;
}

std::vector<CrossCountryCell> cross_country_matrix(Task task, const std::vector<std::string>& countries,
                                                   const std::map<std::string, ModelArtifact>& artifacts,
                                                   const std::map<std::string, LabeledTiles>& tests,
                                                   const BackboneProvider& provider) {
    std::vector<std::string> sources = countries;
    sources.push_back(kCombinedSource);
    for (const auto& country : countries) {
        const auto it = tests.find(country);
        if (it == tests.end()) throw ValidationError("missing test set for '" + country + "'");
        if (it->second.tile_ids.empty()) throw ValidationError("test set for '" + country + "' is empty");
    }
    std::vector<CrossCountryCell> cells;
    for (const auto& source : sources) {
        const auto art = artifacts.find(source);
        if (art == artifacts.end()) throw ValidationError("missing model trained on '" + source + "'");
        if (art->second.task != task)
            throw ValidationError("model trained on '" + source + "' is for task " + to_string(art->second.task));
        for (const auto& country : countries) {
            const LabeledTiles& t = tests.at(country);
            const auto preds = predict(art->second, t.tile_ids, t.tiles, provider);
            std::vector<std::string> labels;
            for (const auto& p : preds) labels.push_back(p.label);
            cells.push_back(evaluate_cell(source, country, task, art->second.classes, t.truth, labels));
        }
    }
    return cells;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

int source_rank(const std::string& s) {
    if (s == "Dominica") return 0;
    if (s == "Saint Lucia") return 1;
    if (s == kCombinedSource) return 3;
    return 2;
}

bool cell_order(const CrossCountryCell& a, const CrossCountryCell& b) {
    const auto key = [](const CrossCountryCell& c) {
        return std::tuple(source_rank(c.train_source), c.train_source, source_rank(c.test_source), c.test_source);
    };
    return key(a) < key(b);
}

std::string title(Task task) { return task == Task::RoofType ? "Roof Type" : "Roof Material"; }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    return fields;
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

}  // namespace

std::vector<Report> emit_report(std::span<const CrossCountryCell> input) {
    std::vector<Report> reports;
    for (Task task : {Task::RoofType, Task::RoofMaterial}) {
        std::vector<CrossCountryCell> cells;
        for (const auto& c : input)
            if (c.task == task) cells.push_back(c);
        if (cells.empty()) continue;
        std::stable_sort(cells.begin(), cells.end(), cell_order);

        Report r{task, "", ""};
        std::string md = "## " + title(task) + "\n\n";
        md += "| Training Data | Test Data | F1 score | Precision | Recall | Accuracy |\n";
        md += "|---|---|---:|---:|---:|---:|\n";
        std::vector<std::string> notes;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto& c = cells[i];
            const bool first = i == 0 || cells[i - 1].train_source != c.train_source;
            std::string test = c.test_source;
            if (!c.missing_classes.empty()) {
                notes.push_back(c.train_source + " model on " + c.test_source +
                                " lacks: " + join(c.missing_classes, ", ") + " (scored as errors)");
                test += " [" + std::to_string(notes.size()) + "]";
            }
            md += "| " + (first ? c.train_source : std::string()) + " | " + test + " | " +
                  format_percent(c.metrics.f1) + " | " + format_percent(c.metrics.precision) + " | " +
                  format_percent(c.metrics.recall) + " | " + format_percent(c.metrics.accuracy) + " |\n";
        }
        if (!notes.empty()) {
            md += "\n";
            for (std::size_t i = 0; i < notes.size(); ++i) md += "[" + std::to_string(i + 1) + "] " + notes[i] + "\n";
        }
        r.markdown = md;

        std::string csv = "task,train_source,test_source,f1,precision,recall,accuracy,missing_classes\n";
        for (const auto& c : cells)
            csv += to_string(task) + "," + csv_field(c.train_source) + "," + csv_field(c.test_source) + "," +
                   format_percent(c.metrics.f1) + "," + format_percent(c.metrics.precision) + "," +
                   format_percent(c.metrics.recall) + "," + format_percent(c.metrics.accuracy) + "," +
                   csv_field(join(c.missing_classes, ";")) + "\n";
        r.csv = csv;
        reports.push_back(std::move(r));
    }
    return reports;
}

std::vector<CrossCountryCell> parse_report_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    std::vector<CrossCountryCell> cells;
    if (!std::getline(in, line) || line.rfind("task,train_source,test_source", 0) != 0)
        throw ValidationError("report CSV has no header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8) throw ValidationError("report CSV line " + std::to_string(lineno) + " has " +
                                                 std::to_string(f.size()) + " fields, expected 8");
        CrossCountryCell c;
        c.task = parse_task(f[0]);
        c.train_source = f[1];
        c.test_source = f[2];
        try {
            c.metrics = {std::stod(f[3]), std::stod(f[4]), std::stod(f[5]), std::stod(f[6])};
        } catch (const std::exception&) {
            throw ValidationError("report CSV line " + std::to_string(lineno) + " has a non-numeric metric");
        }
        std::string item;
        std::istringstream missing(f[7]);
        while (std::getline(missing, item, ';'))
            if (!item.empty()) c.missing_classes.push_back(item);
        cells.push_back(std::move(c));
    }
    return cells;
}

std::vector<std::filesystem::path> write_reports(std::span<const CrossCountryCell> cells,
                                                 const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create report directory " + dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    for (const auto& r : emit_report(cells)) {
        for (const auto& [ext, text] : {std::pair{".md", &r.markdown}, std::pair{".csv", &r.csv}}) {
            const auto path = dir / ("report_" + to_string(r.task) + ext);
            std::ofstream out(path);
            if (!out) throw IoError("cannot write " + path.string());
            out << *text;
            written.push_back(path);
        }
    }
    return written;
}

}  // namespace roofstock
