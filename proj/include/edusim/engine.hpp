#pragma once

#include "edusim/agents.hpp"
#include "edusim/llm.hpp"
#include "edusim/personality.hpp"
#include "edusim/qbank.hpp"
#include "edusim/scoring.hpp"
#include "edusim/vecstore.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace edusim {

struct TimestampCosts {
  int self_study = 2;
  int ask_teacher = 3;
  int rest = 1;
  int exam_base = 2;
  int exam_retry = 1;  // added when the first memory retrieval is empty

  int learning_cost(ActionKind a) const;
  friend bool operator==(const TimestampCosts&, const TimestampCosts&) = default;
};

struct LearningEvent {
  int round = 0;
  ActionKind action = ActionKind::Rest;
  int cost = 0;
  friend bool operator==(const LearningEvent&, const LearningEvent&) = default;
};

struct ExamEvent {
  std::string question_id;
  int cost = 0;
  friend bool operator==(const ExamEvent&, const ExamEvent&) = default;
};

// Totals always equal the sum of recorded events.
class TimestampLedger {
 public:
  void record_learning(int round, ActionKind action, const TimestampCosts& costs);
  void record_exam(std::string question_id, bool retried, const TimestampCosts& costs);
  // Restores a ledger from stored events, re-checking the invariants.
  static TimestampLedger from_events(std::vector<LearningEvent> learning,
                                     std::vector<ExamEvent> exam);

  const std::vector<LearningEvent>& learning_events() const { return learning_; }
  const std::vector<ExamEvent>& exam_events() const { return exam_; }
  long learning_total() const { return learning_total_; }
  long exam_total() const { return exam_total_; }
  std::size_t count(ActionKind a) const;

  friend bool operator==(const TimestampLedger&, const TimestampLedger&) = default;

 private:
  std::vector<LearningEvent> learning_;
  std::vector<ExamEvent> exam_;
  long learning_total_ = 0;
  long exam_total_ = 0;
};

struct RunConfig {
  Trait personality = Trait::Openness;
  PromptVariant variant = PromptVariant::Concise;
  int learning_rounds = 10;
  int repeat = 0;
  Topic exam_topic = Topic::Algebra;
  std::size_t exam_size = 100;
  std::uint64_t seed = 42;
  AgentSettings agent;
  RetrievalParams exam{0.6, 2, 1000};
  TimestampCosts costs;
  ScoreMode score_mode = ScoreMode::TokenF1;
  // When set, the exam set depends only on (seed, topic, repeat), so all
  // personalities and round settings of a repeat sit the same questions.
  bool shared_exam_set = true;

  // Every problem found, not just the first. Bank checks are skipped when null.
  std::vector<std::string> validate(const QuestionBank* bank = nullptr) const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// "<personality>_<variant>_r<rounds>_<topic>_rep<k>"
std::string run_id(const RunConfig& c);
// Stable hash of (base seed, personality, variant, rounds, repeat, topic).
std::uint64_t run_seed(const RunConfig& c);

enum class RunStatus { Complete, Failed };
std::string_view run_status_name(RunStatus s);

struct RunRecord {
  std::string run_id;
  RunConfig config;
  std::uint64_t run_seed = 0;
  RunStatus status = RunStatus::Complete;
  std::string error;
  std::string backend_id;
  std::string embedder_id;
  std::vector<std::string> overrides;  // config fields differing from defaults
  TimestampLedger ledger;
  std::vector<ExamResult> exam_results;
  double macro_f1 = 0.0;
  std::size_t blank_count = 0;
  std::vector<std::string> exam_question_ids;
  std::vector<std::string> seen_question_ids;
  std::size_t memory_entries = 0;
  std::size_t memory_writes = 0;
  Transcript transcript;

  std::size_t rounds_executed() const { return ledger.learning_events().size(); }
  std::size_t ask_teacher_count() const { return ledger.count(ActionKind::AskTeacher); }
  std::size_t retry_count() const;
};

// Called after each learning round ("learning", round) and each exam
// question ("exam", index), for incremental persistence.
using ProgressSink =
    std::function<void(std::string_view phase, int index, const StudentState&, const TimestampLedger&)>;

// Everything a run needs besides its config.
struct RunEnvironment {
  const BankIndex& index;
  const EmbeddingProvider& embedder;
  ChatBackend& backend;
  ProgressSink progress;
};

void run_learning_phase(const RunConfig& config, StudentState& student, AgentContext& ctx,
                        TimestampLedger& ledger, const ProgressSink& progress = {});

// Seeded sample without replacement from the Test split of the exam topic.
std::vector<std::string> sample_exam_questions(const RunConfig& config, const QuestionBank& bank);

std::vector<ExamResult> run_exam(const RunConfig& config, StudentState& student,
                                 const std::vector<std::string>& question_ids, AgentContext& ctx,
                                 TimestampLedger& ledger, const ProgressSink& progress = {});

// Learning then exam. Failures are captured in the record, never thrown.
RunRecord run_single(const RunConfig& config, RunEnvironment& env);

struct MatrixSpec {
  std::vector<int> rounds{0, 10, 20, 50};
  int repeats = 3;
  std::vector<Trait> personalities{kAllTraits.begin(), kAllTraits.end()};
  std::vector<Topic> topics{kAllTopics.begin(), kAllTopics.end()};
};

// Run order: topic, rounds, repeat, personality.
std::vector<RunConfig> plan_matrix(const RunConfig& base, const MatrixSpec& spec);

using BackendFactory =
    std::function<std::unique_ptr<ChatBackend>(const RunConfig&, std::uint64_t run_seed)>;

struct MatrixOptions {
  int width = 1;
  // Called once per finished run (serialized across workers).
  std::function<void(const RunRecord&)> on_record;
  // Per-run progress sink factory; may return an empty sink.
  std::function<ProgressSink(const RunConfig&)> progress_for;
  // Returns a stored complete record to reuse instead of executing the run.
  std::function<std::optional<RunRecord>(const RunConfig&)> resume_lookup;
};

std::vector<RunRecord> run_experiment_matrix(const RunConfig& base, const MatrixSpec& spec,
                                             const BankIndex& index,
                                             const EmbeddingProvider& embedder,
                                             const BackendFactory& make_backend,
                                             const MatrixOptions& options = {});

}  // namespace edusim
