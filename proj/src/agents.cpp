#include "edusim/agents.hpp"

#include "edusim/error.hpp"
#include "edusim/text.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>

namespace edusim {

std::string_view action_name(ActionKind a) {
  switch (a) {
    case ActionKind::SelfStudy: return "SELF_STUDY";
    case ActionKind::AskTeacher: return "ASK_TEACHER";
    case ActionKind::Rest: break;
  }
  return "REST";
}

std::string_view memory_source_name(MemorySource s) {
  return s == MemorySource::TeacherInteraction ? "teacher_interaction" : "self_study";
}

// ---------------------------------------------------------------- action parsing

namespace {

std::optional<Topic> topic_from_tail(std::string_view tail) {
  const auto words = text::split_whitespace(tail);
  for (std::size_t n = std::min<std::size_t>(4, words.size()); n >= 1; --n) {
    std::vector<std::string> head(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(n));
    if (auto t = parse_topic(text::join(head, " "))) return t;
  }
  return std::nullopt;
}

}  // namespace

ActionDecision resolve_action(std::string_view reply, Topic least_seen) {
  static const std::regex kToken(R"(\b(SELF[_ -]STUDY|ASK[_ -]TEACHER|REST)\b)",
                                 std::regex::icase);
  ActionDecision d;
  d.raw_reply = std::string(reply);
  const std::string s(reply);
  std::smatch m;
  if (!std::regex_search(s, m, kToken)) {
    if (auto t = keyword_topic(s)) {
      d.fallback = "no_action_keyword";
      d.topic = *t;
    } else {
      d.fallback = "no_action_least_seen";
      d.topic = least_seen;
    }
    d.kind = ActionKind::SelfStudy;
    return d;
  }
  const std::string token = text::to_lower(m.str(1));
  if (token == "rest") {
    d.kind = ActionKind::Rest;
    return d;
  }
  d.kind = token.rfind("self", 0) == 0 ? ActionKind::SelfStudy : ActionKind::AskTeacher;
  std::string tail = m.suffix().str();
  tail = tail.substr(0, tail.find('\n'));
  tail = text::trim(tail);
  if (!tail.empty() && tail.front() == ':') tail = text::trim(tail.substr(1));
  if (auto t = topic_from_tail(tail)) {
    d.topic = *t;
  } else if (auto k = keyword_topic(s)) {
    d.topic = *k;
    d.fallback = "topic_keyword";
  } else {
    d.topic = least_seen;
    d.fallback = "topic_least_seen";
  }
  return d;
}

// ---------------------------------------------------------------- transcript

const TranscriptEvent& Transcript::append(TranscriptEvent e) {
  e.seq = last_seq() + 1;
  events_.push_back(std::move(e));
  return events_.back();
}

// ---------------------------------------------------------------- memory

std::vector<MemoryEntry> StudentMemory::entries() const {
  std::vector<MemoryEntry> out;
  out.reserve(order_.size());
  for (const auto& id : order_) out.push_back(entries_.at(id));
  return out;
}

void StudentMemory::append(MemoryEntry e) {
  if (entries_.count(e.entry_id)) throw InvariantError("memory entry '" + e.entry_id + "' exists");
  store_.upsert(e.entry_id, e.content, e.vector);
  order_.push_back(e.entry_id);
  entries_.emplace(e.entry_id, std::move(e));
}

void StudentMemory::replace(MemoryEntry e) {
  auto it = entries_.find(e.entry_id);
  if (it == entries_.end()) throw InvariantError("memory entry '" + e.entry_id + "' not found");
  store_.upsert(e.entry_id, e.content, e.vector);
  it->second = std::move(e);
}

std::optional<Hit> StudentMemory::most_similar(const EmbeddingVector& v) const {
  auto hits = store_.query(v, RetrievalParams{-1.0, 1, 1});
  if (hits.empty()) return std::nullopt;
  return hits.front();
}

std::string StudentMemory::next_entry_id() const {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "m%04zu", entries_.size() + 1);
  return buf;
}

Topic StudentState::least_seen_topic() const {
  const auto it = std::min_element(studied_per_topic.begin(), studied_per_topic.end());
  return kAllTopics[static_cast<std::size_t>(it - studied_per_topic.begin())];
}

// ---------------------------------------------------------------- bank index

BankIndex::BankIndex(std::shared_ptr<const QuestionBank> bank, const EmbeddingProvider& embedder)
    : bank_(std::move(bank)), dim_(embedder.dimension()) {
  if (!bank_) throw ValidationError("bank index needs a bank");
  for (std::size_t i = 0; i < kAllTopics.size(); ++i) dev_.emplace_back(dim_);
  for (const auto& q : bank_->questions()) {
    if (q.split != Split::Dev) continue;
    EmbeddingVector v = q.embedding ? *q.embedding : embed(q.statement, embedder);
    if (v.dim() != dim_) {
      throw DimensionError("question '" + q.id + "' embedding has dimension " +
                           std::to_string(v.dim()) + ", embedder produces " + std::to_string(dim_));
    }
    dev_[topic_index(q.topic)].upsert(q.id, q.statement, std::move(v));
  }
}

// ---------------------------------------------------------------- operations

namespace {

std::string student_chat(StudentState& student, AgentContext& ctx, int round_no,
                      std::string action, std::string user_prompt) {
  ChatRequest req;
  req.messages = {{Role::System, prompts::student_system_prompt(student.profile, prompts::Phase::Learning)},
                  {Role::User, std::move(user_prompt)}};
  req.temperature = ctx.settings.student_temperature;
  req.max_new_tokens = ctx.settings.max_new_tokens;
  const ChatResponse resp = ctx.backend.complete(req);
  TranscriptEvent e;
  e.run_id = student.run_id;
  e.phase = "learning";
  e.round = round_no;
  e.actor = "student";
  e.action = std::move(action);
  e.tokens_in = resp.usage ? resp.usage->prompt_tokens : text::estimate_tokens(transcript_text(req));
  e.tokens_out = resp.usage ? resp.usage->completion_tokens : text::estimate_tokens(resp.text);
  e.detail = resp.text;
  student.transcript.append(std::move(e));
  return resp.text;
}

// Picks one Dev question of `topic` for the given query text.
const Question& retrieve_dev_question(StudentState& student, Topic topic, std::string_view query,
                                      int round_no, AgentContext& ctx) {
  const QuestionBank& bank = ctx.index.bank();
  const std::vector<std::string> pool = bank.ids(topic, Split::Dev);
  if (pool.empty()) {
    throw ValidationError("topic " + std::string(topic_name(topic)) + " has no Dev questions");
  }
  std::vector<std::string> unseen;
  for (const auto& id : pool) {
    if (!student.seen_question_ids.count(id)) unseen.push_back(id);
  }

  TranscriptEvent e;
  e.run_id = student.run_id;
  e.phase = "learning";
  e.round = round_no;
  e.actor = "retriever";
  e.action = "retrieve_question";

  std::string query_text = text::trim(query);
  if (query_text.empty()) {
    query_text = "review " + std::string(topic_label(topic));
    e.flags.push_back("empty_query");
  }
  const EmbeddingVector qv = embed(query_text, ctx.embedder);
  const bool exhausted = unseen.empty();
  if (exhausted) e.flags.push_back("pool_exhausted");

  auto hits = ctx.index.dev_store(topic).query(
      qv, ctx.settings.learning, [&](std::string_view id) {
        return !exhausted && student.seen_question_ids.count(std::string(id)) > 0;
      });
  std::string chosen;
  if (!hits.empty()) {
    chosen = hits.front().item_id;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "score=%.6f", hits.front().score);
    e.detail = buf;
  } else {
    const auto& candidates = exhausted ? pool : unseen;
    chosen = candidates[ctx.rng.below(candidates.size())];
    e.flags.push_back("retrieval_fallback");
  }
  e.ref = chosen;
  student.transcript.append(std::move(e));
  return bank.at(chosen);
}

void mark_studied(StudentState& student, const Question& q) {
  if (q.split != Split::Dev) {
    throw InvariantError("question '" + q.id + "' studied during learning is not in the Dev split");
  }
  student.seen_question_ids.insert(q.id);
  ++student.studied_per_topic[topic_index(q.topic)];
}

MemoryEntry make_candidate(int round_no, MemorySource source, Topic topic, std::string content,
                           AgentContext& ctx) {
  MemoryEntry c;
  c.round = round_no;
  c.source = source;
  c.topic = topic;
  c.content = text::truncate_chars(content, ctx.settings.learning.max_content_len);
  c.vector = embed(c.content, ctx.embedder);
  return c;
}

}  // namespace

ActionDecision decide_action(StudentState& student, int round_no, int total_rounds,
                             AgentContext& ctx) {
  if (round_no < 1) throw ValidationError("round numbers start at 1");
  prompts::StudySummary summary{student.studied_per_topic, student.memory.size()};
  const std::string reply = student_chat(student, ctx, round_no, "decide_action",
                                         prompts::action_prompt(round_no, total_rounds, summary));
  ActionDecision d = resolve_action(reply, student.least_seen_topic());
  TranscriptEvent e;
  e.run_id = student.run_id;
  e.phase = "learning";
  e.round = round_no;
  e.actor = "engine";
  e.action = std::string(action_name(d.kind));
  if (d.topic) e.ref = std::string(topic_name(*d.topic));
  if (!d.fallback.empty()) e.flags.push_back("action_fallback:" + d.fallback);
  student.transcript.append(std::move(e));
  return d;
}

MemoryWrite self_study(StudentState& student, Topic topic, int round_no, AgentContext& ctx) {
  const auto intent = student_chat(student, ctx, round_no, "study_intent",
                                   prompts::study_intent_prompt(topic));
  const Question& q = retrieve_dev_question(student, topic, intent, round_no, ctx);
  mark_studied(student, q);
  std::string content = "Question: " + q.statement + "\nSolution: " + q.solution;
  return encode_and_merge(
      student, make_candidate(round_no, MemorySource::SelfStudy, topic, std::move(content), ctx), ctx);
}

MemoryWrite ask_teacher(StudentState& student, Topic topic, int round_no, AgentContext& ctx) {
  std::string query = text::trim(student_chat(student, ctx, round_no, "teacher_query",
                                              prompts::teacher_question_prompt(topic)));
  if (query.empty()) query = "Can you explain " + std::string(topic_label(topic)) + "?";
  const Question& q = retrieve_dev_question(student, topic, query, round_no, ctx);

  ChatRequest req;
  req.messages = {{Role::System, prompts::teacher_system_prompt(student.profile)},
                  {Role::User, prompts::teacher_task_prompt(query, q.statement, q.solution)}};
  req.temperature = ctx.settings.teacher_temperature;
  req.max_new_tokens = ctx.settings.max_new_tokens;

  std::string explanation;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const ChatResponse resp = ctx.backend.complete(req);
    TranscriptEvent e;
    e.run_id = student.run_id;
    e.phase = "learning";
    e.round = round_no;
    e.actor = "teacher";
    e.action = "explain";
    e.ref = q.id;
    e.tokens_in = resp.usage ? resp.usage->prompt_tokens : text::estimate_tokens(transcript_text(req));
    e.tokens_out = resp.usage ? resp.usage->completion_tokens : text::estimate_tokens(resp.text);
    e.detail = resp.text;
    explanation = text::trim(resp.text);
    if (explanation.empty()) e.flags.push_back(attempt == 0 ? "teacher_empty_retry" : "teacher_empty");
    student.transcript.append(std::move(e));
    if (!explanation.empty()) break;
  }
  mark_studied(student, q);

  std::string content = "Worked example: " + q.statement + "\n";
  if (!explanation.empty()) content += "Teacher explanation: " + explanation + "\n";
  content += "Solution: " + q.solution;
  return encode_and_merge(
      student,
      make_candidate(round_no, MemorySource::TeacherInteraction, topic, std::move(content), ctx),
      ctx);
}

MemoryWrite encode_and_merge(StudentState& student, MemoryEntry candidate, AgentContext& ctx) {
  if (candidate.vector.dim() != student.memory.dim()) {
    throw DimensionError("memory candidate has dimension " + std::to_string(candidate.vector.dim()));
  }
  MemoryWrite w;
  TranscriptEvent e;
  e.run_id = student.run_id;
  e.phase = "learning";
  e.round = candidate.round;
  e.actor = "memory";

  const auto best = student.memory.most_similar(candidate.vector);
  if (best) w.best_similarity = best->score;
  if (best && best->score > ctx.settings.merge_threshold) {
    MemoryEntry merged = student.memory.entry(best->item_id);
    merged.content = text::truncate_chars(merged.content + "\n" + candidate.content,
                                          ctx.settings.learning.max_content_len);
    merged.vector = embed(merged.content, ctx.embedder);
    merged.round = candidate.round;
    e.action = "memory_merge";
    e.ref = merged.entry_id;
    merged.updated_seq = student.transcript.append(std::move(e)).seq;
    w.kind = MemoryWrite::Kind::Merged;
    w.entry_id = merged.entry_id;
    student.memory.replace(std::move(merged));
  } else {
    candidate.entry_id = student.memory.next_entry_id();
    e.action = "memory_append";
    e.ref = candidate.entry_id;
    candidate.created_seq = candidate.updated_seq = student.transcript.append(std::move(e)).seq;
    w.kind = MemoryWrite::Kind::Appended;
    w.entry_id = candidate.entry_id;
    student.memory.append(std::move(candidate));
  }
  return w;
}

}  // namespace edusim
