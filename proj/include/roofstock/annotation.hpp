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

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "roofstock/dataset.hpp"

namespace httplib {
class Server;
}

namespace roofstock {

/// One line of the label write-ahead log.
struct LabelEvent {
    std::uint64_t seq = 0;
    std::string tile_id;
    Task task = Task::RoofType;
    std::string label;
    std::string annotator;
    std::string timestamp;
    /// Label that this event overwrote, kept for the audit trail.
    std::optional<std::string> previous;

    friend bool operator==(const LabelEvent&, const LabelEvent&) = default;
};

std::string encode_event(const LabelEvent& e);
LabelEvent decode_event(const std::string& line);

/// Append-only JSONL log. Opening replays existing events; a torn final line
/// (no trailing newline, unparsable) is dropped and truncated away, any other
/// bad line is an error.
class LabelLog {
public:
    explicit LabelLog(std::filesystem::path path);
    ~LabelLog();
    LabelLog(const LabelLog&) = delete;
    LabelLog& operator=(const LabelLog&) = delete;

    const std::vector<LabelEvent>& replayed() const { return replayed_; }
    bool dropped_torn_line() const { return dropped_torn_; }
    std::uint64_t last_seq() const { return last_seq_; }

    /// Writes and flushes one event line; assigns the next sequence number.
    LabelEvent append(LabelEvent e);

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::FILE* file_ = nullptr;
    std::vector<LabelEvent> replayed_;
    bool dropped_torn_ = false;
    std::uint64_t last_seq_ = 0;
};

/// Reads every complete event of a log without modifying the file.
std::vector<LabelEvent> read_label_log(const std::filesystem::path& path);

/// Folds events with seq > manifest.log_seq into the manifest's labels.
DatasetManifest replay_events(DatasetManifest manifest, const std::vector<LabelEvent>& events);

using SteadyClock = std::function<std::chrono::steady_clock::time_point()>;
using WallClock = std::function<std::string()>;

std::string utc_timestamp();

struct AnnotationOptions {
    Task default_task = Task::RoofType;
    std::chrono::milliseconds lease{30000};
    /// Manifest is rewritten after this many labels (and on compact()).
    std::size_t compact_every = 1;
    SteadyClock clock = [] { return std::chrono::steady_clock::now(); };
    WallClock wall_clock = utc_timestamp;
};

struct Lease {
    std::string tile_id;
    Task task = Task::RoofType;
    std::string annotator;
    std::chrono::steady_clock::time_point expires;
};

struct NextTile {
    bool done = false;
    std::string tile_id;
    Task task = Task::RoofType;
    std::chrono::milliseconds expires_in{0};
};

enum class LabelStatus { Ok, UnknownTile, InvalidLabel, LeaseConflict };

struct LabelOutcome {
    LabelStatus status = LabelStatus::Ok;
    std::string message;
    std::optional<LabelEvent> event;
};

struct Progress {
    Task task = Task::RoofType;
    std::size_t labeled = 0;
    std::size_t total = 0;
    std::vector<std::pair<std::string, std::size_t>> per_class;  ///< schema order
};

/// Lease-based labelling queue over a manifest, persisted via a label log
/// plus periodic atomic manifest rewrites. Thread-safe; one mutex serialises
/// every state change.
class AnnotationService {
public:
    AnnotationService(std::filesystem::path manifest_path, std::filesystem::path log_path,
                      std::filesystem::path tiles_dir, AnnotationOptions options = {});

    NextTile next(Task task, const std::string& annotator);
    LabelOutcome label(const std::string& tile_id, Task task, const std::string& label, const std::string& annotator);
    bool release(const std::string& tile_id, Task task, const std::string& annotator);
    Progress progress(Task task) const;

    /// Path of the tile image, or nullopt for an unknown tile.
    std::optional<std::filesystem::path> tile_file(const std::string& tile_id) const;

    /// Rewrites the manifest (atomic rename) recording the last folded seq.
    void compact();

    DatasetManifest snapshot() const;
    const AnnotationOptions& options() const { return options_; }

private:
    std::filesystem::path manifest_path_;
    std::filesystem::path tiles_dir_;
    AnnotationOptions options_;
    mutable std::mutex mutex_;
    DatasetManifest manifest_;
    LabelLog log_;
    /// Latest lease per (task, tile); expired entries stay so a late submit
    /// from their holder can be told its lease ran out.
    std::map<std::pair<Task, std::string>, Lease> leases_;
    std::size_t since_compact_ = 0;
};

/// Registers the /api routes and, when `ui_dir` is non-empty, static files.
void register_annotation_routes(httplib::Server& server, AnnotationService& service,
                                const std::filesystem::path& ui_dir = {});

}  // namespace roofstock
