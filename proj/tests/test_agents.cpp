#include "edusim/agents.hpp"
#include "edusim/error.hpp"
#include "edusim/text.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace edusim;
using edusim::testing::make_question;
using nlohmann::json;

namespace {

// Records every request before delegating.
class RecordingBackend final : public ChatBackend {
 public:
  explicit RecordingBackend(std::unique_ptr<ChatBackend> inner) : inner_(std::move(inner)) {}
  ChatResponse complete(const ChatRequest& req) override {
    requests.push_back(req);
    return inner_->complete(req);
  }
  std::string id() const override { return inner_->id(); }
  std::vector<ChatRequest> requests;

 private:
  std::unique_ptr<ChatBackend> inner_;
};

std::shared_ptr<const QuestionBank> small_bank(std::vector<Question> extra = {}) {
  std::vector<Question> qs = {
      make_question("alg1", Topic::Algebra, "Solve the equation $x^{2}+4x+3=0$", Split::Dev,
                    "x_1=-1, x_2=-3", "-1 and -3"),
      make_question("alg2", Topic::Algebra, "Factorization: $2y^{2}-8$", Split::Dev, "2(y-2)(y+2)",
                    "2(y-2)(y+2)"),
      make_question("alg3", Topic::Algebra, "Compute the slope of the line through two points", Split::Test),
      make_question("geo1", Topic::Geometry, "Find the area of a circle with radius 2", Split::Dev),
      make_question("geo2", Topic::Geometry, "Find the hypotenuse of a right triangle", Split::Test),
  };
  for (auto& q : extra) qs.push_back(std::move(q));
  return std::make_shared<const QuestionBank>(QuestionBank(qs));
}

const std::vector<TranscriptEvent> events_with(const StudentState& s, const std::string& action) {
  std::vector<TranscriptEvent> out;
  for (const auto& e : s.transcript.events()) {
    if (e.action == action) out.push_back(e);
  }
  return out;
}

bool has_flag(const TranscriptEvent& e, const std::string& f) {
  return std::find(e.flags.begin(), e.flags.end(), f) != e.flags.end();
}

}  // namespace

TEST_CASE("resolve_action grammar") {
  auto d = resolve_action("ASK_TEACHER: geometry", Topic::Algebra);
  CHECK(d.kind == ActionKind::AskTeacher);
  CHECK(d.topic == Topic::Geometry);
  CHECK(d.fallback.empty());
  d = resolve_action("REST", Topic::Algebra);
  CHECK(d.kind == ActionKind::Rest);
  CHECK_FALSE(d.topic);
  d = resolve_action("self-study: number theory", Topic::Algebra);
  CHECK(d.kind == ActionKind::SelfStudy);
  CHECK(d.topic == Topic::NumberTheory);
  d = resolve_action("I think I will ask teacher about Counting and Probability", Topic::Algebra);
  CHECK(d.kind == ActionKind::AskTeacher);
  CHECK(d.topic == Topic::CountingProbability);
}

TEST_CASE("resolve_action fallbacks") {
  auto d = resolve_action("I want to look at primes today", Topic::Geometry);
  CHECK(d.kind == ActionKind::SelfStudy);
  CHECK(d.topic == Topic::NumberTheory);
  CHECK(d.fallback == "no_action_keyword");
  d = resolve_action("hmm", Topic::Geometry);
  CHECK(d.kind == ActionKind::SelfStudy);
  CHECK(d.topic == Topic::Geometry);
  CHECK(d.fallback == "no_action_least_seen");
  d = resolve_action("ASK_TEACHER: something about triangles", Topic::Algebra);
  CHECK(d.topic == Topic::Geometry);
  CHECK(d.fallback == "topic_keyword");
  d = resolve_action("SELF_STUDY: calculus", Topic::NumberTheory);
  CHECK(d.topic == Topic::NumberTheory);
  CHECK(d.fallback == "topic_least_seen");
  for (const char* reply : {"REST", "SELF_STUDY: algebra", "x", "ASK_TEACHER"}) {
    const auto r = resolve_action(reply, Topic::Algebra);
    CHECK(r.topic.has_value() == (r.kind != ActionKind::Rest));
  }
}

TEST_CASE("decide_action logs fallbacks in the transcript") {
  testing::Harness h(small_bank());
  auto backend = testing::scripted(json::array({json{{"match", "choose an action"}, {"response", "I want to look at primes today"}}}));
  auto ctx = h.context(*backend);
  StudentState s(personality(Trait::Openness), 256, "r");
  const auto d = decide_action(s, 1, 10, ctx);
  CHECK(d.topic == Topic::NumberTheory);
  const auto engine = events_with(s, "SELF_STUDY");
  REQUIRE(engine.size() == 1);
  CHECK(has_flag(engine[0], "action_fallback:no_action_keyword"));
  CHECK_THROWS_AS(decide_action(s, 0, 10, ctx), ValidationError);
}

TEST_CASE("self_study retrieves the most similar Dev question") {
  testing::Harness h(small_bank());
  auto backend = testing::scripted(json::array(
      {json{{"match", "state what you want to review"}, {"response", "Solve the equation $x^{2}+4x+3=0$"}}}));
  auto ctx = h.context(*backend);
  StudentState s(personality(Trait::Conscientiousness), 256, "r");
  const auto w = self_study(s, Topic::Algebra, 1, ctx);
  CHECK(w.kind == MemoryWrite::Kind::Appended);
  CHECK(s.seen_question_ids == std::set<std::string>{"alg1"});
  const auto& e = s.memory.entry(w.entry_id);
  CHECK(e.source == MemorySource::SelfStudy);
  CHECK(e.topic == Topic::Algebra);
  CHECK(e.round == 1);
  CHECK(e.content.find("x^{2}+4x+3=0") != std::string::npos);
  CHECK(e.vector.norm() == doctest::Approx(1.0));
}

TEST_CASE("self_study falls back to a seeded random unseen question") {
  testing::Harness h(small_bank());
  auto backend = testing::scripted(json::array({json{{"match", "state what you want to review"}, {"response", "zebra quartz"}}}));
  auto ctx = h.context(*backend);
  StudentState s(personality(Trait::Conscientiousness), 256, "r");
  self_study(s, Topic::Algebra, 1, ctx);
  const auto r = events_with(s, "retrieve_question");
  REQUIRE(r.size() == 1);
  CHECK(has_flag(r[0], "retrieval_fallback"));
  CHECK(s.seen_question_ids.size() == 1);
  CHECK(h.bank->at(*s.seen_question_ids.begin()).split == Split::Dev);
}

TEST_CASE("memory content is truncated to the learning limit") {
  auto q = make_question("long", Topic::NumberTheory, "Long prime problem", Split::Dev);
  q.solution = std::string(2000, 's');
  testing::Harness h(small_bank({q}));
  auto backend = testing::scripted(json::array({json{{"match", "state what you want to review"}, {"response", "Long prime problem"}}}));
  auto ctx = h.context(*backend);
  StudentState s(personality(Trait::Openness), 256, "r");
  const auto w = self_study(s, Topic::NumberTheory, 1, ctx);
  CHECK(text::char_count(s.memory.entry(w.entry_id).content) <= 800);
  CHECK(text::char_count(s.memory.entry(w.entry_id).content) == 800);
}

TEST_CASE("exhausted pools re-study seen questions without new seen ids") {
  testing::Harness h(small_bank());
  auto backend = testing::scripted(json::array({json{{"match", "state what you want to review"}, {"response", "circle"}}}));
  auto ctx = h.context(*backend);
  StudentState s(personality(Trait::Openness), 256, "r");
  self_study(s, Topic::Geometry, 1, ctx);
  self_study(s, Topic::Geometry, 2, ctx);
  CHECK(s.seen_question_ids == std::set<std::string>{"geo1"});
  const auto r = events_with(s, "retrieve_question");
  REQUIRE(r.size() == 2);
  CHECK(has_flag(r[1], "pool_exhausted"));
}

TEST_CASE("ask_teacher stores explanation plus worked example") {
  testing::Harness h(small_bank());
  const std::string query =
      "Can you explain how to factor quadratic expressions by completing the square, and maybe walk "
      "through an example step-by-step?";
  auto backend = std::make_unique<RecordingBackend>(testing::scripted(json::array({
      json{{"match", "Student question:"}, {"response", "Let's dive into completing the square together."}},
      json{{"match", "write the question you want to ask the teacher"}, {"response", query}},
  })));
  auto ctx = h.context(*backend);
  StudentState s(personality(Trait::Extraversion), 256, "r");
  const auto w = ask_teacher(s, Topic::Algebra, 4, ctx);
  const auto& e = s.memory.entry(w.entry_id);
  CHECK(e.source == MemorySource::TeacherInteraction);
  CHECK(e.content.find("completing the square together") != std::string::npos);
  CHECK(s.seen_question_ids.size() == 1);
  const auto& q = h.bank->at(*s.seen_question_ids.begin());
  CHECK(e.content.find(q.statement) != std::string::npos);
  REQUIRE(backend->requests.size() == 2);
  const auto& teacher = backend->requests[1];
  CHECK(teacher.temperature == doctest::Approx(0.3));
  CHECK(teacher.messages.size() == 2);
  CHECK(teacher.messages[0].text.find("Extraversion") != std::string::npos);
  CHECK(teacher.messages[1].text.find(query) != std::string::npos);
}

TEST_CASE("ask_teacher with the factoring query retrieves x^2+4x+3=0") {
  testing::Harness h(small_bank());
  h.settings.learning.threshold = -1.0;  // force the retrieval path over the fallback
  auto backend = testing::scripted(json::array({
      json{{"match", "Student question:"}, {"response", "Completing the square explained."}},
      json{{"match", "write the question you want to ask the teacher"}, {"response", "Solve the equation x^{2}+4x+3=0 by factoring"}},
  }));
  auto ctx = h.context(*backend);
  StudentState s(personality(Trait::Extraversion), 256, "r");
  const auto w = ask_teacher(s, Topic::Algebra, 4, ctx);
  const auto& content = s.memory.entry(w.entry_id).content;
  CHECK(content.find("x^{2}+4x+3=0") != std::string::npos);
  CHECK(content.find("Completing the square explained.") != std::string::npos);
}

TEST_CASE("teacher requests are stateless across calls") {
  testing::Harness h(small_bank());
  auto backend = std::make_unique<RecordingBackend>(testing::scripted(json::array({
      json{{"match", "Student question:"}, {"responses", json::array({"FIRST-EXPLANATION", "second"})}},
      json{{"match", "write the question you want to ask the teacher"}, {"responses", json::array({"FIRST-QUERY", "next query"})}},
  })));
  auto ctx = h.context(*backend);
  StudentState s(personality(Trait::Neuroticism), 256, "r");
  ask_teacher(s, Topic::Algebra, 1, ctx);
  ask_teacher(s, Topic::Algebra, 2, ctx);
  REQUIRE(backend->requests.size() == 4);
  const std::string second = transcript_text(backend->requests[3]);
  CHECK(second.find("FIRST-EXPLANATION") == std::string::npos);
  CHECK(second.find("FIRST-QUERY") == std::string::npos);
  CHECK(second.find("next query") != std::string::npos);
}

TEST_CASE("empty teacher reply is retried once then stored without explanation") {
  testing::Harness h(small_bank());
  auto backend = std::make_unique<RecordingBackend>(testing::scripted(json::array({
      json{{"match", "Student question:"}, {"response", "   "}},
      json{{"match", "write the question you want to ask the teacher"}, {"response", "circle area"}},
  })));
  auto ctx = h.context(*backend);
  StudentState s(personality(Trait::Openness), 256, "r");
  const auto w = ask_teacher(s, Topic::Geometry, 1, ctx);
  CHECK(backend->requests.size() == 3);
  const auto ex = events_with(s, "explain");
  REQUIRE(ex.size() == 2);
  CHECK(has_flag(ex[0], "teacher_empty_retry"));
  CHECK(has_flag(ex[1], "teacher_empty"));
  const auto& content = s.memory.entry(w.entry_id).content;
  CHECK(content.find("Teacher explanation") == std::string::npos);
  CHECK(content.find("Worked example: Find the area of a circle") == 0);
}

TEST_CASE("encode_and_merge append and merge branches") {
  testing::Harness h(small_bank());
  auto backend = testing::scripted(json::array());
  auto ctx = h.context(*backend);
  StudentState s(personality(Trait::Openness), 256, "r");
  auto candidate = [&](const std::string& content) {
    MemoryEntry c;
    c.round = 1;
    c.content = content;
    c.vector = embed(content, h.embedder);
    return c;
  };
  auto w = encode_and_merge(s, candidate("quadratic factoring notes"), ctx);
  CHECK(w.kind == MemoryWrite::Kind::Appended);
  CHECK(w.best_similarity == -1.0);
  CHECK(s.memory.size() == 1);
  w = encode_and_merge(s, candidate("quadratic factoring notes"), ctx);
  CHECK(w.kind == MemoryWrite::Kind::Merged);
  CHECK(w.best_similarity == doctest::Approx(1.0));
  CHECK(s.memory.size() == 1);
  const auto& e = s.memory.entry(w.entry_id);
  CHECK(e.content == "quadratic factoring notes\nquadratic factoring notes");
  CHECK(e.updated_seq > e.created_seq);
  CHECK(e.vector == embed(e.content, h.embedder));
}

TEST_CASE("mutually dissimilar candidates are all appended") {
  testing::Harness h(small_bank());
  auto backend = testing::scripted(json::array());
  auto ctx = h.context(*backend);
  StudentState s(personality(Trait::Openness), 256, "r");
  const std::vector<std::string> texts = {
      "linear equation slope",     "prime divisors of 360",   "probability of two heads",
      "area of a trapezoid",       "circle chord length",     "remainder modulo seven",
      "committee selection count", "quadratic vertex form",   "volume of a sphere",
      "expected value of a die"};
  std::vector<EmbeddingVector> vs;
  for (const auto& t : texts) vs.push_back(embed(t, h.embedder));
  for (std::size_t i = 0; i < vs.size(); ++i) {
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      double dot = 0;
      for (std::size_t k = 0; k < vs[i].dim(); ++k) dot += vs[i].values()[k] * vs[j].values()[k];
      REQUIRE(dot < 0.95);
    }
  }
  for (std::size_t i = 0; i < texts.size(); ++i) {
    MemoryEntry c;
    c.round = static_cast<int>(i + 1);
    c.content = texts[i];
    c.vector = vs[i];
    encode_and_merge(s, c, ctx);
  }
  CHECK(s.memory.size() == 10);
  std::uint64_t prev = 0;
  for (const auto& e : s.memory.entries()) {
    CHECK(e.created_seq > prev);
    prev = e.created_seq;
  }
}

TEST_CASE("studying a Test question is an invariant violation") {
  auto bank = std::make_shared<const QuestionBank>(QuestionBank({
      make_question("t1", Topic::Algebra, "alpha", Split::Test),
      make_question("d1", Topic::Geometry, "beta", Split::Dev),
  }));
  testing::Harness h(bank);
  auto backend = testing::scripted(json::array({json{{"match", "state what you want to review"}, {"response", "alpha"}}}));
  auto ctx = h.context(*backend);
  StudentState s(personality(Trait::Openness), 256, "r");
  CHECK_THROWS_AS(self_study(s, Topic::Algebra, 1, ctx), ValidationError);
  CHECK(s.seen_question_ids.empty());
}

TEST_CASE("transcript sequence numbers start at 1 without gaps") {
  Transcript t;
  for (int i = 0; i < 5; ++i) t.append(TranscriptEvent{});
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.events()[i].seq == i + 1);
}

TEST_CASE("least seen topic breaks ties by topic order") {
  StudentState s(personality(Trait::Openness), 8);
  CHECK(s.least_seen_topic() == Topic::Algebra);
  s.studied_per_topic = {1, 0, 0, 1};
  CHECK(s.least_seen_topic() == Topic::NumberTheory);
}
