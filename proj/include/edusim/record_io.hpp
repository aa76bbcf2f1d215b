#pragma once

#include "edusim/engine.hpp"

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

namespace edusim {

inline constexpr int kRunRecordSchemaVersion = 1;

nlohmann::ordered_json run_config_to_json(const RunConfig& c);
// Missing fields keep their defaults; bad values throw ValidationError.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

nlohmann::ordered_json transcript_event_to_json(const TranscriptEvent& e);
TranscriptEvent transcript_event_from_json(const nlohmann::json& j);

// The record without its transcript; `transcript_file` names the sidecar.
nlohmann::ordered_json run_record_to_json(const RunRecord& r);
RunRecord run_record_from_json(const nlohmann::json& j);

// Files per run, named by run coordinates:
//   <run_id>.json              the record
//   <run_id>.transcript.jsonl  one transcript event per line
std::filesystem::path record_path(const std::filesystem::path& dir, const std::string& run_id);
void write_run_files(const RunRecord& r, const std::filesystem::path& dir);

// Appends one line per learning round / exam question to
// <run_id>.progress.jsonl and flushes it. The file is truncated on creation.
ProgressSink make_progress_writer(const std::filesystem::path& dir, const std::string& run_id);

std::optional<RunRecord> load_run_record(const std::filesystem::path& file);
// All run records in `dir`, ordered by file name.
std::vector<RunRecord> load_run_records(const std::filesystem::path& dir);

}  // namespace edusim
