#include "edusim/prompts.hpp"

#include <sstream>

namespace edusim::prompts {

namespace {

std::string topic_menu() {
  std::string out;
  for (Topic t : kAllTopics) {
    if (!out.empty()) out += ", ";
    out += topic_name(t);
  }
  return out;
}

}  // namespace

std::string student_system_prompt(const PersonalityProfile& profile, Phase phase) {
  std::ostringstream os;
  os << profile.prompt_text << "\n\n";
  if (phase == Phase::Learning) {
    os << "You are in a mathematics learning session covering four topics: " << topic_menu()
       << ".\n"
       << "In every learning round you decide among three actions:\n"
       << "- SELF_STUDY: review a topic on your own by studying a related problem and its solution.\n"
       << "- ASK_TEACHER: ask the teacher about a topic and receive an explanation with a worked "
          "example.\n"
       << "- REST: skip this round.\n"
       << "When asked to choose an action, reply with exactly one line in one of these forms:\n"
       << "SELF_STUDY: <topic>\nASK_TEACHER: <topic>\nREST\n"
       << "where <topic> is one of: " << topic_menu() << ".";
  } else {
    os << "You are taking a mathematics exam. Only your final answer is graded.\n"
       << "For each problem, first decide what to recall: write a memory query on one line as\n"
       << "QUERY: <what to look up in your memory>\n"
       << "Then, after the retrieved memories are shown, solve the problem and finish with one "
          "line\n"
       << "ANSWER: <final answer>";
  }
  return os.str();
}

std::string teacher_system_prompt(const PersonalityProfile& student) {
  std::ostringstream os;
  os << "You are a patient mathematics teacher tutoring one student.\n"
     << "The student's personality profile is high " << trait_label(student.trait) << ": \""
     << student.prompt_text << "\"\n"
     << "Adapt your explanation to the student's personality. Explain the relevant knowledge "
        "for the student's question, then walk through "
     << kWorkedExampleRule
     << ": the problem retrieved from the question bank, solved step by step.\n"
     << "You keep no memory of earlier sessions.";
  return os.str();
}

std::string action_prompt(int round_no, int total_rounds, const StudySummary& summary) {
  std::ostringstream os;
  os << "Learning round " << round_no << " of " << total_rounds << ". Problems studied so far: ";
  for (std::size_t i = 0; i < kAllTopics.size(); ++i) {
    if (i) os << ", ";
    os << topic_name(kAllTopics[i]) << " " << summary.studied_per_topic[i];
  }
  os << ". Memory entries: " << summary.memory_entries << ".\n"
     << "Now " << kActionCue
     << " for this round. Reply with exactly one line: SELF_STUDY: <topic>, ASK_TEACHER: <topic>, "
        "or REST.";
  return os.str();
}

std::string study_intent_prompt(Topic topic) {
  std::ostringstream os;
  os << "You decided to self-study " << topic_label(topic) << ". In one sentence, "
     << kStudyIntentCue << ".";
  return os.str();
}

std::string teacher_question_prompt(Topic topic) {
  std::ostringstream os;
  os << "You decided to ask the teacher about " << topic_label(topic) << ". Please "
     << kTeacherQuestionCue << ".";
  return os.str();
}

std::string teacher_task_prompt(std::string_view student_query, std::string_view example_statement,
                                std::string_view example_solution) {
  std::ostringstream os;
  os << kTeacherTaskCue << "\n" << student_query << "\n\n"
     << "Retrieved question from the question bank:\n" << example_statement << "\n\n"
     << "Reference solution:\n" << example_solution << "\n\n"
     << "Explain the relevant knowledge, then walk through this worked example.";
  return os.str();
}

std::string exam_query_prompt(std::string_view statement) {
  std::ostringstream os;
  os << "Exam problem:\n" << statement << "\n\n"
     << "Before answering, " << kExamQueryCue << " describing what you want to recall. "
     << "Reply with one line: QUERY: <query>";
  return os.str();
}

std::string exam_retry_prompt(std::string_view statement, std::string_view failed_query) {
  std::ostringstream os;
  os << "Exam problem:\n" << statement << "\n\n"
     << "Your memory query \"" << failed_query << "\" " << kExamRetryCue << ". "
     << "Reconsider and " << kExamQueryCue
     << " with an alternative phrasing. Reply with one line: QUERY: <query>";
  return os.str();
}

std::string exam_answer_prompt(std::string_view statement, const std::vector<Hit>& memories) {
  std::ostringstream os;
  os << "Exam problem:\n" << statement << "\n\n";
  if (memories.empty()) {
    os << "No relevant memories were found.\n\n";
  } else {
    os << "Relevant memories:\n";
    for (std::size_t i = 0; i < memories.size(); ++i) {
      os << "[" << (i + 1) << "] " << memories[i].content << "\n";
    }
    os << "\n";
  }
  os << kExamAnswerCue << ". Finish with one line: ANSWER: <final answer>";
  return os.str();
}

}  // namespace edusim::prompts
