#pragma once

#include "edusim/hashing.hpp"
#include "edusim/llm.hpp"
#include "edusim/personality.hpp"
#include "edusim/prompts.hpp"
#include "edusim/qbank.hpp"
#include "edusim/topic.hpp"
#include "edusim/vecstore.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace edusim {

enum class ActionKind { SelfStudy, AskTeacher, Rest };
std::string_view action_name(ActionKind a);  // "SELF_STUDY", "ASK_TEACHER", "REST"

struct ActionDecision {
  ActionKind kind = ActionKind::Rest;
  std::optional<Topic> topic;  // present iff kind != Rest
  std::string raw_reply;
  // Empty when the reply followed the grammar; otherwise which fallback fired.
  std::string fallback;
};

// Grammar: SELF_STUDY:<topic> | ASK_TEACHER:<topic> | REST, case-insensitive,
// first token wins. A study token whose topic does not parse takes the topic
// from the keyword table; if that is ambiguous, `least_seen` is used. A reply
// with no grammar token becomes SelfStudy on the keyword topic, or on
// `least_seen`.
ActionDecision resolve_action(std::string_view reply, Topic least_seen);

// ---------------------------------------------------------------- transcript

struct TranscriptEvent {
  std::uint64_t seq = 0;
  std::string run_id;
  std::string phase;  // "learning" | "exam"
  int round = 0;      // learning round, or 1-based exam question index
  std::string actor;  // "student" | "teacher" | "retriever" | "memory" | "engine"
  std::string action;
  std::string ref;  // question id or memory entry id, when relevant
  int tokens_in = 0;
  int tokens_out = 0;
  std::vector<std::string> flags;
  std::string detail;

  friend bool operator==(const TranscriptEvent&, const TranscriptEvent&) = default;
};

// Append-only; sequence numbers start at 1 and have no gaps.
class Transcript {
 public:
  const TranscriptEvent& append(TranscriptEvent e);
  const std::vector<TranscriptEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  std::uint64_t last_seq() const { return events_.empty() ? 0 : events_.back().seq; }

 private:
  std::vector<TranscriptEvent> events_;
};

// ---------------------------------------------------------------- memory

enum class MemorySource { SelfStudy, TeacherInteraction };
std::string_view memory_source_name(MemorySource s);

struct MemoryEntry {
  std::string entry_id;
  int round = 0;  // round of the most recent write
  MemorySource source = MemorySource::SelfStudy;
  Topic topic = Topic::Algebra;
  std::string content;
  EmbeddingVector vector;
  std::uint64_t created_seq = 0;  // transcript seq of the creating write
  std::uint64_t updated_seq = 0;  // transcript seq of the latest write
};

struct MemoryWrite {
  enum class Kind { Appended, Merged } kind = Kind::Appended;
  std::string entry_id;
  double best_similarity = -1.0;  // against pre-existing entries; -1 when memory was empty
};

class StudentMemory {
 public:
  explicit StudentMemory(std::size_t dim) : store_(dim) {}

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t dim() const { return store_.dim(); }
  const MemoryEntry& entry(const std::string& id) const { return entries_.at(id); }
  // Entries in creation order.
  std::vector<MemoryEntry> entries() const;
  std::vector<Hit> query(const EmbeddingVector& v, const RetrievalParams& params) const {
    return store_.query(v, params);
  }

  // Raw storage operations used by encode_and_merge.
  void append(MemoryEntry e);
  void replace(MemoryEntry e);
  std::optional<Hit> most_similar(const EmbeddingVector& v) const;
  std::string next_entry_id() const;

 private:
  VectorStore store_;
  std::map<std::string, MemoryEntry> entries_;
  std::vector<std::string> order_;
};

struct StudentState {
  StudentState(const PersonalityProfile& p, std::size_t dim, std::string run = {})
      : profile(p), memory(dim), run_id(std::move(run)) {}

  PersonalityProfile profile;
  StudentMemory memory;
  std::set<std::string> seen_question_ids;
  std::array<std::size_t, 4> studied_per_topic{};
  Transcript transcript;
  std::string run_id;

  // Topic studied least so far; ties go to the earlier topic.
  Topic least_seen_topic() const;
};

// ---------------------------------------------------------------- context

struct AgentSettings {
  double student_temperature = 0.5;
  double teacher_temperature = 0.3;
  int max_new_tokens = 500;
  RetrievalParams learning{0.7, 1, 800};
  double merge_threshold = 0.95;
  friend bool operator==(const AgentSettings&, const AgentSettings&) = default;
};

// Per-topic Dev-question vector stores over an embedded bank. Immutable
// once built and shared by all runs.
class BankIndex {
 public:
  BankIndex(std::shared_ptr<const QuestionBank> bank, const EmbeddingProvider& embedder);

  const QuestionBank& bank() const { return *bank_; }
  const VectorStore& dev_store(Topic t) const { return dev_[topic_index(t)]; }
  std::size_t dim() const { return dim_; }

 private:
  std::shared_ptr<const QuestionBank> bank_;
  std::size_t dim_;
  std::vector<VectorStore> dev_;
};

struct AgentContext {
  const BankIndex& index;
  const EmbeddingProvider& embedder;
  ChatBackend& backend;
  const AgentSettings& settings;
  Rng& rng;
};

// ---------------------------------------------------------------- operations

ActionDecision decide_action(StudentState& student, int round_no, int total_rounds,
                             AgentContext& ctx);

MemoryWrite self_study(StudentState& student, Topic topic, int round_no, AgentContext& ctx);

// The teacher is stateless: its request depends only on the student profile,
// the student's query and the retrieved question.
MemoryWrite ask_teacher(StudentState& student, Topic topic, int round_no, AgentContext& ctx);

// Merges into the most similar entry when similarity > merge_threshold
// (contents concatenated, truncated, re-embedded); otherwise appends.
MemoryWrite encode_and_merge(StudentState& student, MemoryEntry candidate, AgentContext& ctx);

}  // namespace edusim
