#include "edusim/record_io.hpp"

#include "edusim/error.hpp"
#include "edusim/text.hpp"

#include <algorithm>
#include <fstream>
#include <memory>

namespace edusim {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json params_to_json(const RetrievalParams& p) {
  ordered_json j;
  j["threshold"] = p.threshold;
  j["top_k"] = p.top_k;
  j["max_content_len"] = p.max_content_len;
  return j;
}

RetrievalParams params_from_json(const json& j, RetrievalParams p) {
  p.threshold = j.value("threshold", p.threshold);
  p.top_k = j.value("top_k", p.top_k);
  p.max_content_len = j.value("max_content_len", p.max_content_len);
  return p;
}

ActionKind parse_action_name(const std::string& s) {
  for (ActionKind a : {ActionKind::SelfStudy, ActionKind::AskTeacher, ActionKind::Rest}) {
    if (action_name(a) == s) return a;
  }
  throw ParseError("unknown action '" + s + "'");
}

void write_text_file(const std::filesystem::path& path, const std::string& body) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw ValidationError("cannot write " + tmp);
    out << body;
    if (!out) throw ValidationError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

ordered_json run_config_to_json(const RunConfig& c) {
  ordered_json j;
  j["personality"] = trait_name(c.personality);
  j["variant"] = variant_name(c.variant);
  j["learning_rounds"] = c.learning_rounds;
  j["repeat"] = c.repeat;
  j["exam_topic"] = topic_name(c.exam_topic);
  j["exam_size"] = c.exam_size;
  j["seed"] = c.seed;
  j["student_temperature"] = c.agent.student_temperature;
  j["teacher_temperature"] = c.agent.teacher_temperature;
  j["max_new_tokens"] = c.agent.max_new_tokens;
  j["merge_threshold"] = c.agent.merge_threshold;
  j["learning"] = params_to_json(c.agent.learning);
  j["exam"] = params_to_json(c.exam);
  ordered_json costs;
  costs["self_study"] = c.costs.self_study;
  costs["ask_teacher"] = c.costs.ask_teacher;
  costs["rest"] = c.costs.rest;
  costs["exam_base"] = c.costs.exam_base;
  costs["exam_retry"] = c.costs.exam_retry;
  j["costs"] = costs;
  j["score_mode"] = score_mode_name(c.score_mode);
  j["shared_exam_set"] = c.shared_exam_set;
  return j;
}

RunConfig run_config_from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  try {
    if (j.contains("personality")) c.personality = parse_trait_or_throw(j.at("personality").get<std::string>());
    if (j.contains("variant")) {
      auto v = parse_variant(j.at("variant").get<std::string>());
      if (!v) throw ValidationError("variant must be 'concise' or 'elaborated'");
      c.variant = *v;
    }
    c.learning_rounds = j.value("learning_rounds", c.learning_rounds);
    c.repeat = j.value("repeat", c.repeat);
    if (j.contains("exam_topic")) c.exam_topic = parse_topic_or_throw(j.at("exam_topic").get<std::string>());
    c.exam_size = j.value("exam_size", c.exam_size);
    c.seed = j.value("seed", c.seed);
    c.agent.student_temperature = j.value("student_temperature", c.agent.student_temperature);
    c.agent.teacher_temperature = j.value("teacher_temperature", c.agent.teacher_temperature);
    c.agent.max_new_tokens = j.value("max_new_tokens", c.agent.max_new_tokens);
    c.agent.merge_threshold = j.value("merge_threshold", c.agent.merge_threshold);
    if (j.contains("learning")) c.agent.learning = params_from_json(j.at("learning"), c.agent.learning);
    if (j.contains("exam")) c.exam = params_from_json(j.at("exam"), c.exam);
    if (j.contains("costs")) {
      const auto& k = j.at("costs");
      c.costs.self_study = k.value("self_study", c.costs.self_study);
      c.costs.ask_teacher = k.value("ask_teacher", c.costs.ask_teacher);
      c.costs.rest = k.value("rest", c.costs.rest);
      c.costs.exam_base = k.value("exam_base", c.costs.exam_base);
      c.costs.exam_retry = k.value("exam_retry", c.costs.exam_retry);
    }
    if (j.contains("score_mode")) {
      auto m = parse_score_mode(j.at("score_mode").get<std::string>());
      if (!m) throw ValidationError("score_mode must be 'token_f1' or 'exact_match'");
      c.score_mode = *m;
    }
    c.shared_exam_set = j.value("shared_exam_set", c.shared_exam_set);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  return c;
}

ordered_json transcript_event_to_json(const TranscriptEvent& e) {
  ordered_json j;
  j["seq"] = e.seq;
  j["run_id"] = e.run_id;
  j["phase"] = e.phase;
  j["round"] = e.round;
  j["actor"] = e.actor;
  j["action"] = e.action;
  j["ref"] = e.ref;
  j["tokens_in"] = e.tokens_in;
  j["tokens_out"] = e.tokens_out;
  j["flags"] = e.flags;
  j["detail"] = e.detail;
  return j;
}

TranscriptEvent transcript_event_from_json(const json& j) {
  TranscriptEvent e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.run_id = j.at("run_id").get<std::string>();
  e.phase = j.at("phase").get<std::string>();
  e.round = j.at("round").get<int>();
  e.actor = j.at("actor").get<std::string>();
  e.action = j.at("action").get<std::string>();
  e.ref = j.at("ref").get<std::string>();
  e.tokens_in = j.at("tokens_in").get<int>();
  e.tokens_out = j.at("tokens_out").get<int>();
  e.flags = j.at("flags").get<std::vector<std::string>>();
  e.detail = j.at("detail").get<std::string>();
  return e;
}

ordered_json run_record_to_json(const RunRecord& r) {
  ordered_json j;
  j["kind"] = "run_record";
  j["schema_version"] = kRunRecordSchemaVersion;
  j["run_id"] = r.run_id;
  j["status"] = run_status_name(r.status);
  j["error"] = r.error;
  j["run_seed"] = r.run_seed;
  j["backend_id"] = r.backend_id;
  j["embedder_id"] = r.embedder_id;
  j["normalization"] = kNormalizationVersion;
  j["config"] = run_config_to_json(r.config);
  j["overrides"] = r.overrides;
  j["macro_f1"] = r.macro_f1;
  j["blank_count"] = r.blank_count;
  j["learning_total"] = r.ledger.learning_total();
  j["exam_total"] = r.ledger.exam_total();
  j["rounds_executed"] = r.rounds_executed();
  j["ask_teacher_count"] = r.ask_teacher_count();
  j["retry_count"] = r.retry_count();
  j["memory_entries"] = r.memory_entries;
  j["memory_writes"] = r.memory_writes;
  ordered_json learning = ordered_json::array();
  for (const auto& e : r.ledger.learning_events()) {
    ordered_json x;
    x["round"] = e.round;
    x["action"] = action_name(e.action);
    x["cost"] = e.cost;
    learning.push_back(x);
  }
  ordered_json exam = ordered_json::array();
  for (const auto& e : r.ledger.exam_events()) {
    ordered_json x;
    x["question_id"] = e.question_id;
    x["cost"] = e.cost;
    exam.push_back(x);
  }
  j["ledger"] = {{"learning", learning}, {"exam", exam}};
  ordered_json results = ordered_json::array();
  for (const auto& e : r.exam_results) {
    ordered_json x;
    x["question_id"] = e.question_id;
    x["raw_output"] = e.raw_output;
    x["extracted"] = e.extracted ? ordered_json(*e.extracted) : ordered_json(nullptr);
    x["f1_latex"] = e.f1_latex;
    x["f1_plain"] = e.f1_plain;
    x["f1"] = e.f1;
    x["blank"] = e.blank;
    x["cost"] = e.cost;
    results.push_back(x);
  }
  j["exam_results"] = results;
  j["exam_question_ids"] = r.exam_question_ids;
  j["seen_question_ids"] = r.seen_question_ids;
  j["transcript_file"] = r.run_id + ".transcript.jsonl";
  j["transcript_events"] = r.transcript.size();
  return j;
}

RunRecord run_record_from_json(const json& j) {
  if (j.value("kind", std::string()) != "run_record") throw ParseError("not a run record");
  const int version = j.at("schema_version").get<int>();
  if (version != kRunRecordSchemaVersion) {
    throw VersionError("unsupported run record schema_version " + std::to_string(version));
  }
  try {
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.status = j.at("status").get<std::string>() == "failed" ? RunStatus::Failed : RunStatus::Complete;
    r.error = j.at("error").get<std::string>();
    r.run_seed = j.at("run_seed").get<std::uint64_t>();
    r.backend_id = j.at("backend_id").get<std::string>();
    r.embedder_id = j.at("embedder_id").get<std::string>();
    r.config = run_config_from_json(j.at("config"));
    r.overrides = j.at("overrides").get<std::vector<std::string>>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    r.blank_count = j.at("blank_count").get<std::size_t>();
    r.memory_entries = j.at("memory_entries").get<std::size_t>();
    r.memory_writes = j.at("memory_writes").get<std::size_t>();
    std::vector<LearningEvent> learning;
    for (const auto& x : j.at("ledger").at("learning")) {
      learning.push_back(LearningEvent{x.at("round").get<int>(),
                                       parse_action_name(x.at("action").get<std::string>()),
                                       x.at("cost").get<int>()});
    }
    std::vector<ExamEvent> exam;
    for (const auto& x : j.at("ledger").at("exam")) {
      exam.push_back(ExamEvent{x.at("question_id").get<std::string>(), x.at("cost").get<int>()});
    }
    r.ledger = TimestampLedger::from_events(std::move(learning), std::move(exam));
    for (const auto& x : j.at("exam_results")) {
      ExamResult e;
      e.question_id = x.at("question_id").get<std::string>();
      e.raw_output = x.at("raw_output").get<std::string>();
      if (!x.at("extracted").is_null()) e.extracted = x.at("extracted").get<std::string>();
      e.f1_latex = x.at("f1_latex").get<double>();
      e.f1_plain = x.at("f1_plain").get<double>();
      e.f1 = x.at("f1").get<double>();
      e.blank = x.at("blank").get<bool>();
      e.cost = x.at("cost").get<int>();
      r.exam_results.push_back(std::move(e));
    }
    r.exam_question_ids = j.at("exam_question_ids").get<std::vector<std::string>>();
    r.seen_question_ids = j.at("seen_question_ids").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed run record: ") + e.what());
  }
}

std::filesystem::path record_path(const std::filesystem::path& dir, const std::string& run_id) {
  return dir / (run_id + ".json");
}

void write_run_files(const RunRecord& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string lines;
  for (const auto& e : r.transcript.events()) lines += transcript_event_to_json(e).dump() + "\n";
  write_text_file(dir / (r.run_id + ".transcript.jsonl"), lines);
  write_text_file(record_path(dir, r.run_id), run_record_to_json(r).dump(2) + "\n");
}

ProgressSink make_progress_writer(const std::filesystem::path& dir, const std::string& run_id) {
  std::filesystem::create_directories(dir);
  auto out = std::make_shared<std::ofstream>(dir / (run_id + ".progress.jsonl"),
                                             std::ios::trunc | std::ios::binary);
  if (!*out) throw ValidationError("cannot write progress file for " + run_id);
  return [out](std::string_view phase, int index, const StudentState& s, const TimestampLedger& l) {
    ordered_json j;
    j["phase"] = phase;
    j["index"] = index;
    j["learning_total"] = l.learning_total();
    j["exam_total"] = l.exam_total();
    j["memory_entries"] = s.memory.size();
    j["transcript_seq"] = s.transcript.last_seq();
    *out << j.dump() << '\n';
    out->flush();
  };
}

std::optional<RunRecord> load_run_record(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("kind", std::string()) != "run_record") return std::nullopt;
  RunRecord r;
  try {
    r = run_record_from_json(j);
  } catch (const Error& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
  // The transcript sidecar is optional; when present its seq numbers must be gapless.
  const auto sidecar = file.parent_path() / (r.run_id + ".transcript.jsonl");
  std::ifstream tin(sidecar);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(tin, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const TranscriptEvent e = transcript_event_from_json(json::parse(line));
      if (r.transcript.append(e).seq != e.seq) throw InvariantError("transcript seq gap");
    } catch (const std::exception& e) {
      throw ParseError(sidecar.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return r;
}

std::vector<RunRecord> load_run_records(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> out;
  for (const auto& f : files) {
    if (auto r = load_run_record(f)) out.push_back(std::move(*r));
  }
  return out;
}

}  // namespace edusim
