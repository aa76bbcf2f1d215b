#pragma once

#include "edusim/personality.hpp"
#include "edusim/topic.hpp"
#include "edusim/vecstore.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace edusim::prompts {

enum class Phase { Learning, Exam };

// Fixed phrases each task prompt contains. Scripted scenarios and the
// seeded mock key on them.
inline constexpr std::string_view kActionCue = "choose an action";
inline constexpr std::string_view kStudyIntentCue = "state what you want to review";
inline constexpr std::string_view kTeacherQuestionCue = "write the question you want to ask the teacher";
inline constexpr std::string_view kTeacherTaskCue = "Student question:";
inline constexpr std::string_view kExamQueryCue = "write a memory query";
inline constexpr std::string_view kExamRetryCue = "returned no memories";
inline constexpr std::string_view kExamAnswerCue = "Now solve the problem";
inline constexpr std::string_view kWorkedExampleRule = "exactly one worked example";

std::string student_system_prompt(const PersonalityProfile& profile, Phase phase);
std::string teacher_system_prompt(const PersonalityProfile& student);

struct StudySummary {
  std::array<std::size_t, 4> studied_per_topic{};
  std::size_t memory_entries = 0;
};

std::string action_prompt(int round_no, int total_rounds, const StudySummary& summary);
std::string study_intent_prompt(Topic topic);
std::string teacher_question_prompt(Topic topic);
std::string teacher_task_prompt(std::string_view student_query, std::string_view example_statement,
                                std::string_view example_solution);
std::string exam_query_prompt(std::string_view statement);
std::string exam_retry_prompt(std::string_view statement, std::string_view failed_query);
std::string exam_answer_prompt(std::string_view statement, const std::vector<Hit>& memories);

}  // namespace edusim::prompts
