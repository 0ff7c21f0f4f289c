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

#include "roofstock/annotation.hpp"

#include <unistd.h>

#include <ctime>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "roofstock/errors.hpp"

namespace roofstock {

using nlohmann::json;

std::string encode_event(const LabelEvent& e) {
    json j = {{"seq", e.seq},           {"tile_id", e.tile_id},     {"task", to_string(e.task)},
              {"label", e.label},       {"annotator", e.annotator}, {"timestamp", e.timestamp}};
    if (e.previous) j["previous"] = *e.previous;
    return j.dump();
}

LabelEvent decode_event(const std::string& line) {
    LabelEvent e;
    try {
        const json j = json::parse(line);
        e.seq = j.at("seq").get<std::uint64_t>();
        e.tile_id = j.at("tile_id").get<std::string>();
        e.task = parse_task(j.at("task").get<std::string>());
        e.label = j.at("label").get<std::string>();
        e.annotator = j.at("annotator").get<std::string>();
        e.timestamp = j.at("timestamp").get<std::string>();
        if (j.contains("previous")) e.previous = j["previous"].get<std::string>();
    } catch (const json::exception& ex) {
        throw ValidationError(std::string("malformed label event: ") + ex.what());
    }
    return e;
}

namespace {

struct ParsedLog {
    std::vector<LabelEvent> events;
    std::size_t good_bytes = 0;  ///< prefix length holding complete events
    bool torn = false;
    bool missing_newline = false;
};

ParsedLog parse_log(const std::filesystem::path& path) {
    ParsedLog out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    std::size_t pos = 0, lineno = 0;
    std::uint64_t last = 0;
    while (pos < text.size()) {
        ++lineno;
        const std::size_t nl = text.find('\n', pos);
        const bool complete = nl != std::string::npos;
        const std::string line = text.substr(pos, complete ? nl - pos : std::string::npos);
        LabelEvent e;
        try {
            e = decode_event(line);
        } catch (const ValidationError&) {
            if (complete) throw IoError("label log " + path.string() + " is corrupt at line " + std::to_string(lineno));
            out.torn = true;
            break;
        }
        if (e.seq <= last)
            throw IoError("label log " + path.string() + " has out-of-order seq at line " + std::to_string(lineno));
        last = e.seq;
        out.events.push_back(std::move(e));
        pos = complete ? nl + 1 : text.size();
        out.good_bytes = pos;
        out.missing_newline = !complete;
    }
    return out;
}

}  // namespace

LabelLog::LabelLog(std::filesystem::path path) : path_(std::move(path)) {
    ParsedLog parsed = parse_log(path_);
    if (parsed.torn) {
        std::error_code ec;
        std::filesystem::resize_file(path_, parsed.good_bytes, ec);
        if (ec) throw IoError("cannot truncate torn label log " + path_.string() + ": " + ec.message());
        dropped_torn_ = true;
    }
    replayed_ = std::move(parsed.events);
    if (!replayed_.empty()) last_seq_ = replayed_.back().seq;
    file_ = std::fopen(path_.c_str(), "ab");
    if (!file_) throw IoError("cannot open label log " + path_.string());
    if (parsed.missing_newline && std::fputc('\n', file_) == EOF) throw IoError("cannot write " + path_.string());
}

LabelLog::~LabelLog() {
    if (file_) std::fclose(file_);
}

LabelEvent LabelLog::append(LabelEvent e) {
    e.seq = last_seq_ + 1;
    const std::string line = encode_event(e) + "\n";
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0)
        throw IoError("cannot append to label log " + path_.string());
    ::fsync(::fileno(file_));
    last_seq_ = e.seq;
    return e;
}

std::vector<LabelEvent> read_label_log(const std::filesystem::path& path) {
    return parse_log(path).events;
}

DatasetManifest replay_events(DatasetManifest manifest, const std::vector<LabelEvent>& events) {
    for (const auto& e : events) {
        if (e.seq <= manifest.log_seq) continue;
        ManifestRow* row = manifest.find(e.tile_id);
        if (!row) throw ValidationError("label event " + std::to_string(e.seq) + " names unknown tile '" + e.tile_id + "'");
        if (!is_valid_label(e.task, e.label))
            throw ValidationError("label event " + std::to_string(e.seq) + " has invalid label '" + e.label + "'");
        row->label(e.task) = e.label;
        row->annotator = e.annotator;
        row->timestamp = e.timestamp;
        manifest.log_seq = e.seq;
    }
    return manifest;
}

std::string utc_timestamp() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// Service

AnnotationService::AnnotationService(std::filesystem::path manifest_path, std::filesystem::path log_path,
                                     std::filesystem::path tiles_dir, AnnotationOptions options)
    : manifest_path_(std::move(manifest_path)),
      tiles_dir_(std::move(tiles_dir)),
      options_(std::move(options)),
      manifest_(load_manifest(manifest_path_)),
      log_(std::move(log_path)) {
    if (options_.lease.count() <= 0) throw ConfigError("lease duration must be positive");
    if (log_.last_seq() < manifest_.log_seq)
        throw IoError("label log " + log_.path().string() + " ends at seq " + std::to_string(log_.last_seq()) +
                      " but the manifest already folded seq " + std::to_string(manifest_.log_seq));
    manifest_.sort_rows();
    manifest_ = replay_events(std::move(manifest_), log_.replayed());
}

NextTile AnnotationService::next(Task task, const std::string& annotator) {
    if (annotator.empty()) throw ValidationError("annotator name is required");
    const std::lock_guard lock(mutex_);
    const auto now = options_.clock();
    // An annotator holds at most one live lease per task; hand it back.
    for (const auto& [key, lease] : leases_)
        if (key.first == task && lease.annotator == annotator && lease.expires > now) {
            const ManifestRow* row = manifest_.find(lease.tile_id);
            if (row && !row->label(task))
                return {false, lease.tile_id, task,
                        std::chrono::duration_cast<std::chrono::milliseconds>(lease.expires - now)};
        }
    for (const auto& row : manifest_.rows) {
        if (row.label(task)) continue;
        const auto it = leases_.find({task, row.tile_id});
        if (it != leases_.end() && it->second.expires > now) continue;
        leases_[{task, row.tile_id}] = {row.tile_id, task, annotator, now + options_.lease};
        return {false, row.tile_id, task, options_.lease};
    }
    return {true, "", task, std::chrono::milliseconds{0}};
}

LabelOutcome AnnotationService::label(const std::string& tile_id, Task task, const std::string& label,
                                      const std::string& annotator) {
    if (annotator.empty()) throw ValidationError("annotator name is required");
    const std::lock_guard lock(mutex_);
    ManifestRow* row = manifest_.find(tile_id);
    if (!row) return {LabelStatus::UnknownTile, "unknown tile '" + tile_id + "'", std::nullopt};
    if (!is_valid_label(task, label))
        return {LabelStatus::InvalidLabel, "'" + label + "' is not a " + to_string(task) + " class", std::nullopt};
    const auto now = options_.clock();
    const auto it = leases_.find({task, tile_id});
    if (it != leases_.end()) {
        const Lease& lease = it->second;
        const bool live = lease.expires > now;
        if (live && lease.annotator != annotator)
            return {LabelStatus::LeaseConflict, "tile '" + tile_id + "' is leased by another annotator", std::nullopt};
        if (!live && lease.annotator == annotator)
            return {LabelStatus::LeaseConflict, "lease on tile '" + tile_id + "' expired", std::nullopt};
    }
    LabelEvent e;
    e.tile_id = tile_id;
    e.task = task;
    e.label = label;
    e.annotator = annotator;
    e.timestamp = options_.wall_clock();
    e.previous = row->label(task);
    e = log_.append(std::move(e));
    manifest_ = replay_events(std::move(manifest_), {e});
    if (it != leases_.end()) leases_.erase(it);
    if (++since_compact_ >= options_.compact_every) {
        save_manifest(manifest_path_, manifest_);
        since_compact_ = 0;
    }
    return {LabelStatus::Ok, "", e};
}

bool AnnotationService::release(const std::string& tile_id, Task task, const std::string& annotator) {
    const std::lock_guard lock(mutex_);
    const auto it = leases_.find({task, tile_id});
    if (it == leases_.end() || it->second.annotator != annotator) return false;
    leases_.erase(it);
    return true;
}

Progress AnnotationService::progress(Task task) const {
    const std::lock_guard lock(mutex_);
    Progress p;
    p.task = task;
    p.total = manifest_.rows.size();
    for (const auto& c : task_classes(task)) p.per_class.emplace_back(c, 0);
    for (const auto& row : manifest_.rows) {
        const auto& l = row.label(task);
        if (!l) continue;
        ++p.labeled;
        ++p.per_class[class_index(task, *l)].second;
    }
    return p;
}

std::optional<std::filesystem::path> AnnotationService::tile_file(const std::string& tile_id) const {
    const std::lock_guard lock(mutex_);
    const ManifestRow* row = manifest_.find(tile_id);
    if (!row) return std::nullopt;
    std::filesystem::path p(row->tile_path);
    return p.is_relative() ? tiles_dir_ / p : p;
}

void AnnotationService::compact() {
    const std::lock_guard lock(mutex_);
    save_manifest(manifest_path_, manifest_);
    since_compact_ = 0;
}

DatasetManifest AnnotationService::snapshot() const {
    const std::lock_guard lock(mutex_);
    return manifest_;
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
}

std::optional<Task> task_param(const httplib::Request& req, httplib::Response& res, Task fallback) {
    if (!req.has_param("task") || req.get_param_value("task").empty()) return fallback;
    try {
        return parse_task(req.get_param_value("task"));
    } catch (const ValidationError& e) {
        send_error(res, 400, e.what());
        return std::nullopt;
    }
}

std::string tile_url(const std::string& tile_id) {
    return "/api/tile/" + httplib::detail::encode_url(tile_id) + ".png";
}

}  // namespace

void register_annotation_routes(httplib::Server& server, AnnotationService& service,
                                const std::filesystem::path& ui_dir) {
    const Task fallback = service.options().default_task;

    server.Get("/api/next", [&service, fallback](const httplib::Request& req, httplib::Response& res) {
        const auto task = task_param(req, res, fallback);
        if (!task) return;
        const std::string annotator = req.get_param_value("annotator");
        if (annotator.empty()) return send_error(res, 400, "annotator is required");
        const NextTile n = service.next(*task, annotator);
        if (n.done) return send_json(res, 200, {{"done", true}, {"task", to_string(*task)}});
        send_json(res, 200,
                  {{"done", false},
                   {"tile_id", n.tile_id},
                   {"image_url", tile_url(n.tile_id)},
                   {"task", to_string(n.task)},
                   {"classes", task_classes(n.task)},
                   {"lease_expires_in_ms", n.expires_in.count()}});
    });

    server.Post("/api/label", [&service, fallback](const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            return send_error(res, 400, "request body is not JSON");
        }
        if (!body.is_object()) return send_error(res, 400, "request body must be an object");
        std::string tile_id, label, annotator, task_name;
        try {
            tile_id = body.at("tile_id").get<std::string>();
            label = body.at("label").get<std::string>();
            annotator = body.at("annotator").get<std::string>();
            task_name = body.value("task", to_string(fallback));
        } catch (const json::exception&) {
            return send_error(res, 400, "tile_id, label and annotator are required strings");
        }
        if (annotator.empty()) return send_error(res, 400, "annotator is required");
        Task task;
        try {
            task = parse_task(task_name);
        } catch (const ValidationError& e) {
            return send_error(res, 400, e.what());
        }
        const LabelOutcome out = service.label(tile_id, task, label, annotator);
        switch (out.status) {
            case LabelStatus::UnknownTile: return send_error(res, 404, out.message);
            case LabelStatus::InvalidLabel: return send_error(res, 422, out.message);
            case LabelStatus::LeaseConflict: return send_error(res, 409, out.message);
            case LabelStatus::Ok: break;
        }
        json reply = {{"ok", true}, {"seq", out.event->seq}, {"tile_id", tile_id}, {"label", label}};
        reply["previous"] = out.event->previous ? json(*out.event->previous) : json(nullptr);
        send_json(res, 200, reply);
    });

    server.Post("/api/release", [&service, fallback](const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            return send_error(res, 400, "request body is not JSON");
        }
        try {
            const Task task = parse_task(body.value("task", to_string(fallback)));
            const bool released = service.release(body.at("tile_id").get<std::string>(), task,
                                                  body.at("annotator").get<std::string>());
            send_json(res, 200, {{"released", released}});
        } catch (const json::exception&) {
            send_error(res, 400, "tile_id and annotator are required strings");
        } catch (const ValidationError& e) {
            send_error(res, 400, e.what());
        }
    });

    server.Get("/api/progress", [&service, fallback](const httplib::Request& req, httplib::Response& res) {
        const auto task = task_param(req, res, fallback);
        if (!task) return;
        const Progress p = service.progress(*task);
        json per_class = json::object();
        for (const auto& [name, n] : p.per_class) per_class[name] = n;
        send_json(res, 200,
                  {{"task", to_string(p.task)}, {"labeled", p.labeled}, {"total", p.total}, {"per_class", per_class}});
    });

    server.Get(R"(/api/tile/(.+)\.png)", [&service](const httplib::Request& req, httplib::Response& res) {
        const std::string tile_id = req.matches[1];
        const auto path = service.tile_file(tile_id);
        if (!path) return send_error(res, 404, "unknown tile '" + tile_id + "'");
        std::ifstream in(*path, std::ios::binary);
        if (!in) return send_error(res, 404, "tile image missing for '" + tile_id + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        res.set_content(buf.str(), "image/png");
    });

    if (!ui_dir.empty() && !server.set_mount_point("/", ui_dir.string()))
        throw IoError("UI directory " + ui_dir.string() + " does not exist");
}

}  // namespace roofstock
