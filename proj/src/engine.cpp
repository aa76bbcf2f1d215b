#include "edusim/engine.hpp"

#include "edusim/error.hpp"
#include "edusim/hashing.hpp"
#include "edusim/prompts.hpp"
#include "edusim/text.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <thread>

namespace edusim {

// ---------------------------------------------------------------- ledger

int TimestampCosts::learning_cost(ActionKind a) const {
  switch (a) {
    case ActionKind::SelfStudy: return self_study;
    case ActionKind::AskTeacher: return ask_teacher;
    case ActionKind::Rest: break;
  }
  return rest;
}

void TimestampLedger::record_learning(int round, ActionKind action, const TimestampCosts& costs) {
  const int cost = costs.learning_cost(action);
  learning_.push_back(LearningEvent{round, action, cost});
  learning_total_ += cost;
}

void TimestampLedger::record_exam(std::string question_id, bool retried, const TimestampCosts& costs) {
  const int cost = costs.exam_base + (retried ? costs.exam_retry : 0);
  exam_.push_back(ExamEvent{std::move(question_id), cost});
  exam_total_ += cost;
}

TimestampLedger TimestampLedger::from_events(std::vector<LearningEvent> learning,
                                             std::vector<ExamEvent> exam) {
  TimestampLedger l;
  for (const auto& e : learning) {
    if (e.cost < 1 || e.cost > 3) throw InvariantError("learning event cost outside {1,2,3}");
    l.learning_total_ += e.cost;
  }
  for (const auto& e : exam) {
    if (e.cost < 2 || e.cost > 3) throw InvariantError("exam event cost outside {2,3}");
    l.exam_total_ += e.cost;
  }
  l.learning_ = std::move(learning);
  l.exam_ = std::move(exam);
  return l;
}

std::size_t TimestampLedger::count(ActionKind a) const {
  return static_cast<std::size_t>(std::count_if(learning_.begin(), learning_.end(),
                                                [a](const LearningEvent& e) { return e.action == a; }));
}

// ---------------------------------------------------------------- config

std::vector<std::string> RunConfig::validate(const QuestionBank* bank) const {
  std::vector<std::string> errors;
  auto check_params = [&](const char* name, const RetrievalParams& p) {
    try {
      p.validate();
    } catch (const std::exception& e) {
      errors.push_back(std::string(name) + ": " + e.what());
    }
  };
  if (learning_rounds < 0) errors.push_back("learning_rounds must be >= 0");
  if (repeat < 0) errors.push_back("repeat index must be >= 0");
  if (exam_size < 1) errors.push_back("exam_size must be >= 1");
  if (agent.student_temperature < 0.0 || agent.student_temperature > 2.0) {
    errors.push_back("student_temperature must lie in [0, 2]");
  }
  if (agent.teacher_temperature < 0.0 || agent.teacher_temperature > 2.0) {
    errors.push_back("teacher_temperature must lie in [0, 2]");
  }
  if (agent.max_new_tokens < 1) errors.push_back("max_new_tokens must be >= 1");
  if (!(agent.merge_threshold >= -1.0 && agent.merge_threshold <= 1.0)) {
    errors.push_back("merge_threshold must lie in [-1, 1]");
  }
  check_params("learning retrieval", agent.learning);
  check_params("exam retrieval", exam);
  for (int c : {costs.self_study, costs.ask_teacher, costs.rest}) {
    if (c < 1 || c > 3) {
      errors.push_back("learning action costs must lie in {1, 2, 3}");
      break;
    }
  }
  if (costs.exam_base < 2 || costs.exam_base + costs.exam_retry > 3 || costs.exam_retry < 0) {
    errors.push_back("exam costs must stay within {2, 3} per question");
  }
  if (bank) {
    const std::size_t pool = bank->ids(exam_topic, Split::Test).size();
    if (exam_size > pool) {
      errors.push_back("exam_size " + std::to_string(exam_size) + " exceeds the " +
                       std::to_string(pool) + " Test questions of topic " +
                       std::string(topic_name(exam_topic)));
    }
    for (Topic t : kAllTopics) {
      if (learning_rounds > 0 && bank->ids(t, Split::Dev).empty()) {
        errors.push_back("topic " + std::string(topic_name(t)) + " has no Dev questions to study");
      }
    }
  }
  return errors;
}

std::string run_id(const RunConfig& c) {
  return std::string(trait_name(c.personality)) + "_" + std::string(variant_name(c.variant)) + "_r" +
         std::to_string(c.learning_rounds) + "_" + std::string(topic_name(c.exam_topic)) + "_rep" +
         std::to_string(c.repeat);
}

std::uint64_t run_seed(const RunConfig& c) {
  const std::string rounds = std::to_string(c.learning_rounds);
  const std::string repeat = std::to_string(c.repeat);
  return derive_seed(c.seed, {"run", trait_name(c.personality), variant_name(c.variant), rounds,
                              repeat, topic_name(c.exam_topic)});
}

std::string_view run_status_name(RunStatus s) {
  return s == RunStatus::Failed ? "failed" : "complete";
}

std::size_t RunRecord::retry_count() const {
  return static_cast<std::size_t>(
      std::count_if(ledger.exam_events().begin(), ledger.exam_events().end(),
                    [this](const ExamEvent& e) { return e.cost > config.costs.exam_base; }));
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::vector<std::string> config_overrides(const RunConfig& c) {
  const RunConfig d;
  std::vector<std::string> out;
  auto note = [&out](const char* name, const std::string& value) {
    out.push_back(std::string(name) + "=" + value);
  };
  if (c.exam_size != d.exam_size) note("exam_size", std::to_string(c.exam_size));
  if (c.seed != d.seed) note("seed", std::to_string(c.seed));
  if (c.agent.student_temperature != d.agent.student_temperature)
    note("student_temperature", fmt_double(c.agent.student_temperature));
  if (c.agent.teacher_temperature != d.agent.teacher_temperature)
    note("teacher_temperature", fmt_double(c.agent.teacher_temperature));
  if (c.agent.max_new_tokens != d.agent.max_new_tokens)
    note("max_new_tokens", std::to_string(c.agent.max_new_tokens));
  if (c.agent.merge_threshold != d.agent.merge_threshold)
    note("merge_threshold", fmt_double(c.agent.merge_threshold));
  if (c.agent.learning.threshold != d.agent.learning.threshold)
    note("learning.threshold", fmt_double(c.agent.learning.threshold));
  if (c.agent.learning.top_k != d.agent.learning.top_k)
    note("learning.top_k", std::to_string(c.agent.learning.top_k));
  if (c.agent.learning.max_content_len != d.agent.learning.max_content_len)
    note("learning.max_content_len", std::to_string(c.agent.learning.max_content_len));
  if (c.exam.threshold != d.exam.threshold) note("exam.threshold", fmt_double(c.exam.threshold));
  if (c.exam.top_k != d.exam.top_k) note("exam.top_k", std::to_string(c.exam.top_k));
  if (c.exam.max_content_len != d.exam.max_content_len)
    note("exam.max_content_len", std::to_string(c.exam.max_content_len));
  if (!(c.costs == d.costs)) note("costs", "custom");
  if (c.score_mode != d.score_mode) note("score_mode", std::string(score_mode_name(c.score_mode)));
  if (c.shared_exam_set != d.shared_exam_set) note("shared_exam_set", "false");
  return out;
}

}  // namespace

// ---------------------------------------------------------------- learning

void run_learning_phase(const RunConfig& config, StudentState& student, AgentContext& ctx,
                        TimestampLedger& ledger, const ProgressSink& progress) {
  if (config.learning_rounds < 0) throw ValidationError("learning_rounds must be >= 0");
  for (int round = 1; round <= config.learning_rounds; ++round) {
    const ActionDecision d = decide_action(student, round, config.learning_rounds, ctx);
    switch (d.kind) {
      case ActionKind::SelfStudy:
        self_study(student, *d.topic, round, ctx);
        break;
      case ActionKind::AskTeacher:
        ask_teacher(student, *d.topic, round, ctx);
        break;
      case ActionKind::Rest:
        break;
    }
    ledger.record_learning(round, d.kind, config.costs);
    if (progress) progress("learning", round, student, ledger);
  }
}

// ---------------------------------------------------------------- exam

std::vector<std::string> sample_exam_questions(const RunConfig& config, const QuestionBank& bank) {
  std::vector<std::string> pool = bank.ids(config.exam_topic, Split::Test);
  if (config.exam_size > pool.size()) {
    throw ValidationError("exam_size " + std::to_string(config.exam_size) + " exceeds Test pool of " +
                          std::to_string(pool.size()));
  }
  const std::string repeat = std::to_string(config.repeat);
  const std::uint64_t seed =
      config.shared_exam_set
          ? derive_seed(config.seed, {"exam", topic_name(config.exam_topic), repeat})
          : derive_seed(run_seed(config), {"exam"});
  Rng rng(seed);
  rng.shuffle(pool);
  pool.resize(config.exam_size);
  return pool;
}

namespace {

std::string extract_query(std::string_view reply, std::string_view fallback) {
  constexpr std::string_view kMarker = "QUERY:";
  std::string_view s = reply;
  if (const std::size_t at = s.rfind(kMarker); at != std::string_view::npos) {
    s = s.substr(at + kMarker.size());
    s = s.substr(0, s.find('\n'));
  }
  std::string q = text::trim(s);
  return q.empty() ? std::string(fallback) : q;
}

class ExamConversation {
 public:
  ExamConversation(StudentState& student, AgentContext& ctx, const RunConfig& config, int index,
                   std::string question_id)
      : student_(student), ctx_(ctx), index_(index), qid_(std::move(question_id)) {
    req_.messages.push_back(
        {Role::System, prompts::student_system_prompt(student.profile, prompts::Phase::Exam)});
    req_.temperature = config.agent.student_temperature;
    req_.max_new_tokens = config.agent.max_new_tokens;
  }

  std::string ask(std::string action, std::string prompt) {
    req_.messages.push_back({Role::User, std::move(prompt)});
    const ChatResponse resp = ctx_.backend.complete(req_);
    req_.messages.push_back({Role::Assistant, resp.text});
    TranscriptEvent e = event("student", std::move(action));
    e.tokens_in = resp.usage ? resp.usage->prompt_tokens : text::estimate_tokens(transcript_text(req_));
    e.tokens_out = resp.usage ? resp.usage->completion_tokens : text::estimate_tokens(resp.text);
    e.detail = resp.text;
    student_.transcript.append(std::move(e));
    return resp.text;
  }

  TranscriptEvent event(std::string actor, std::string action) const {
    TranscriptEvent e;
    e.run_id = student_.run_id;
    e.phase = "exam";
    e.round = index_;
    e.actor = std::move(actor);
    e.action = std::move(action);
    e.ref = qid_;
    return e;
  }

 private:
  StudentState& student_;
  AgentContext& ctx_;
  int index_;
  std::string qid_;
  ChatRequest req_;
};

std::vector<Hit> retrieve_memories(StudentState& student, ExamConversation& conv,
                                   const std::string& query, const RunConfig& config,
                                   AgentContext& ctx, bool retry) {
  std::vector<Hit> hits;
  if (!student.memory.empty()) {
    hits = student.memory.query(embed(query, ctx.embedder), config.exam);
  }
  TranscriptEvent e = conv.event("retriever", "retrieve_memory");
  e.detail = std::to_string(hits.size()) + " hit(s)";
  if (retry) e.flags.push_back("retry");
  if (hits.empty()) e.flags.push_back("empty");
  student.transcript.append(std::move(e));
  return hits;
}

}  // namespace

std::vector<ExamResult> run_exam(const RunConfig& config, StudentState& student,
                                 const std::vector<std::string>& question_ids, AgentContext& ctx,
                                 TimestampLedger& ledger, const ProgressSink& progress) {
  const QuestionBank& bank = ctx.index.bank();
  std::vector<ExamResult> results;
  results.reserve(question_ids.size());
  for (const auto& id : question_ids) {
    if (student.seen_question_ids.count(id)) {
      throw InvariantError("exam question '" + id + "' was seen during learning");
    }
  }

  int index = 0;
  for (const auto& id : question_ids) {
    ++index;
    const Question& q = bank.at(id);
    if (q.split != Split::Test) throw InvariantError("exam question '" + id + "' is not in the Test split");
    ExamConversation conv(student, ctx, config, index, id);
    bool retried = false;
    std::string raw;
    ExamResult result;
    try {
      std::string query = extract_query(conv.ask("exam_query", prompts::exam_query_prompt(q.statement)),
                                        q.statement);
      std::vector<Hit> hits = retrieve_memories(student, conv, query, config, ctx, false);
      if (hits.empty()) {
        retried = true;
        query = extract_query(
            conv.ask("exam_requery", prompts::exam_retry_prompt(q.statement, query)), q.statement);
        hits = retrieve_memories(student, conv, query, config, ctx, true);
      }
      raw = conv.ask("exam_answer", prompts::exam_answer_prompt(q.statement, hits));
      result = score_question(extract_answer(raw), q, config.score_mode);
    } catch (const TransportError& e) {
      result = score_question(std::nullopt, q, config.score_mode);
      TranscriptEvent ev = conv.event("engine", "backend_error");
      ev.flags.push_back("blank");
      ev.detail = e.what();
      student.transcript.append(std::move(ev));
    } catch (const UnscriptedError& e) {
      result = score_question(std::nullopt, q, config.score_mode);
      TranscriptEvent ev = conv.event("engine", "backend_error");
      ev.flags.push_back("blank");
      ev.detail = e.what();
      student.transcript.append(std::move(ev));
    }
    result.raw_output = raw;
    result.cost = config.costs.exam_base + (retried ? config.costs.exam_retry : 0);
    ledger.record_exam(id, retried, config.costs);
    results.push_back(std::move(result));
    if (progress) progress("exam", index, student, ledger);
  }
  return results;
}

// ---------------------------------------------------------------- single run

RunRecord run_single(const RunConfig& config, RunEnvironment& env) {
  RunRecord rec;
  rec.run_id = run_id(config);
  rec.config = config;
  rec.run_seed = run_seed(config);
  rec.backend_id = env.backend.id();
  rec.embedder_id = env.embedder.id();
  rec.overrides = config_overrides(config);

  StudentState student(personality(config.personality, config.variant), env.index.dim(), rec.run_id);
  Rng rng(rec.run_seed);
  AgentContext ctx{env.index, env.embedder, env.backend, config.agent, rng};

  auto finish = [&](RunStatus status, std::string error) {
    rec.status = status;
    rec.error = std::move(error);
    rec.seen_question_ids.assign(student.seen_question_ids.begin(), student.seen_question_ids.end());
    rec.memory_entries = student.memory.size();
    rec.memory_writes = static_cast<std::size_t>(
        std::count_if(student.transcript.events().begin(), student.transcript.events().end(),
                      [](const TranscriptEvent& e) { return e.actor == "memory"; }));
    rec.transcript = std::move(student.transcript);
    return rec;
  };

  try {
    const auto errors = config.validate(&env.index.bank());
    if (!errors.empty()) throw ValidationError(text::join(errors, "; "));
    rec.exam_question_ids = sample_exam_questions(config, env.index.bank());
    run_learning_phase(config, student, ctx, rec.ledger, env.progress);
    for (const auto& id : rec.exam_question_ids) {
      if (student.seen_question_ids.count(id)) {
        throw InvariantError("exam question '" + id + "' was seen during learning");
      }
    }
    rec.exam_results = run_exam(config, student, rec.exam_question_ids, ctx, rec.ledger, env.progress);
    const ExamScore score = macro_f1(rec.exam_results);
    rec.macro_f1 = score.macro_f1;
    rec.blank_count = score.blank_count;
  } catch (const std::exception& e) {
    return finish(RunStatus::Failed, e.what());
  }
  return finish(RunStatus::Complete, {});
}

// ---------------------------------------------------------------- matrix

std::vector<RunConfig> plan_matrix(const RunConfig& base, const MatrixSpec& spec) {
  std::vector<RunConfig> out;
  for (Topic topic : spec.topics) {
    for (int rounds : spec.rounds) {
      for (int rep = 0; rep < spec.repeats; ++rep) {
        for (Trait trait : spec.personalities) {
          RunConfig c = base;
          c.exam_topic = topic;
          c.learning_rounds = rounds;
          c.repeat = rep;
          c.personality = trait;
          out.push_back(c);
        }
      }
    }
  }
  return out;
}

std::vector<RunRecord> run_experiment_matrix(const RunConfig& base, const MatrixSpec& spec,
                                             const BankIndex& index,
                                             const EmbeddingProvider& embedder,
                                             const BackendFactory& make_backend,
                                             const MatrixOptions& options) {
  const std::vector<RunConfig> plan = plan_matrix(base, spec);
  std::vector<RunRecord> records(plan.size());
  std::atomic<std::size_t> next{0};
  std::mutex sink_mutex;

  auto execute = [&](std::size_t i) {
    const RunConfig& cfg = plan[i];
    if (options.resume_lookup) {
      if (auto stored = options.resume_lookup(cfg)) {
        records[i] = std::move(*stored);
        return;
      }
    }
    RunRecord rec;
    try {
      auto backend = make_backend(cfg, run_seed(cfg));
      RunEnvironment env{index, embedder, *backend,
                         options.progress_for ? options.progress_for(cfg) : ProgressSink{}};
      rec = run_single(cfg, env);
    } catch (const std::exception& e) {
      rec.run_id = run_id(cfg);
      rec.config = cfg;
      rec.run_seed = run_seed(cfg);
      rec.status = RunStatus::Failed;
      rec.error = e.what();
    }
    if (options.on_record) {
      std::lock_guard lock(sink_mutex);
      options.on_record(rec);
    }
    records[i] = std::move(rec);
  };

  auto worker = [&] {
    for (std::size_t i = next++; i < plan.size(); i = next++) execute(i);
  };

  const int width = std::max(1, options.width);
  if (width == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < width; ++t) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }
  return records;
}

}  // namespace edusim
