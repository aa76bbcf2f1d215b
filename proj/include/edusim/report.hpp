#pragma once

#include "edusim/engine.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace edusim {

struct MetricsRow {
  std::string run_id;
  Trait personality = Trait::Openness;
  PromptVariant variant = PromptVariant::Concise;
  int rounds = 0;
  Topic topic = Topic::Algebra;
  int repeat = 0;
  double macro_f1 = 0.0;
  std::size_t blank_count = 0;
  long learning_total = 0;
  long exam_total = 0;
  std::size_t ask_teacher_count = 0;
  double ask_teacher_rate = 0.0;  // 0 for runs without learning rounds
};

struct MetricsTable {
  std::vector<MetricsRow> rows;  // complete runs, by (personality, rounds, topic, repeat)
  std::size_t excluded_failed = 0;
};

MetricsTable metrics_table(const std::vector<RunRecord>& records);

// AskTeacher rounds / learning rounds per personality, complete runs only.
// Personalities without learning rounds are omitted; throws ValidationError
// if no record has any learning round.
std::map<Trait, double> interaction_probability(const std::vector<RunRecord>& records);

struct TimestampAverages {
  double learning = 0.0;
  double exam = 0.0;
  std::size_t runs = 0;
};
std::map<Trait, TimestampAverages> timestamp_averages(const std::vector<RunRecord>& records);

// Ranks of `scores` sorted descending, 1-based; tied scores share the mean rank.
std::vector<double> fractional_ranks(const std::vector<double>& scores);

struct RankSummary {
  struct Entry {
    Trait personality = Trait::Openness;
    double mean_rank = 0.0;
    double mean_macro_f1 = 0.0;
    std::size_t cells = 0;
  };
  std::vector<Entry> entries;  // trait order
  std::size_t cells_ranked = 0;
  std::vector<std::string> skipped_cells;  // cells lacking exactly one run per personality
};

// Cells are (variant, topic, rounds, repeat).
RankSummary rank_agents(const std::vector<RunRecord>& records);

enum class EmitFormat { Csv, JsonLines, PlotData };
std::optional<EmitFormat> parse_emit_format(std::string_view s);

// Six named groups, one per dashboard panel family; every series carries x/y arrays.
nlohmann::ordered_json plot_data(const std::vector<RunRecord>& records);
nlohmann::ordered_json summary_json(const std::vector<RunRecord>& records);

// Writes metrics.csv, runs.jsonl or plot_data.json into out_dir and returns the path.
std::filesystem::path emit(const std::vector<RunRecord>& records, EmitFormat format,
                           const std::filesystem::path& out_dir);

}  // namespace edusim
