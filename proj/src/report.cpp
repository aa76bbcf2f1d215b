#include "edusim/report.hpp"

#include "edusim/error.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <tuple>

namespace edusim {

using nlohmann::ordered_json;

namespace {

std::vector<const RunRecord*> complete(const std::vector<RunRecord>& records) {
  std::vector<const RunRecord*> out;
  for (const auto& r : records) {
    if (r.status == RunStatus::Complete) out.push_back(&r);
  }
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string fixed6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

MetricsTable metrics_table(const std::vector<RunRecord>& records) {
  MetricsTable t;
  for (const auto& r : records) {
    if (r.status != RunStatus::Complete) {
      ++t.excluded_failed;
      continue;
    }
    MetricsRow row;
    row.run_id = r.run_id;
    row.personality = r.config.personality;
    row.variant = r.config.variant;
    row.rounds = r.config.learning_rounds;
    row.topic = r.config.exam_topic;
    row.repeat = r.config.repeat;
    row.macro_f1 = r.macro_f1;
    row.blank_count = r.blank_count;
    row.learning_total = r.ledger.learning_total();
    row.exam_total = r.ledger.exam_total();
    row.ask_teacher_count = r.ask_teacher_count();
    const std::size_t n = r.rounds_executed();
    row.ask_teacher_rate = n ? static_cast<double>(row.ask_teacher_count) / static_cast<double>(n) : 0.0;
    t.rows.push_back(std::move(row));
  }
  std::stable_sort(t.rows.begin(), t.rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
    return std::make_tuple(a.personality, a.variant, a.rounds, a.topic, a.repeat, a.run_id) <
           std::make_tuple(b.personality, b.variant, b.rounds, b.topic, b.repeat, b.run_id);
  });
  return t;
}

std::map<Trait, double> interaction_probability(const std::vector<RunRecord>& records) {
  std::map<Trait, std::pair<std::size_t, std::size_t>> counts;  // asks, rounds
  for (const RunRecord* r : complete(records)) {
    auto& c = counts[r->config.personality];
    c.first += r->ask_teacher_count();
    c.second += r->rounds_executed();
  }
  std::map<Trait, double> out;
  for (const auto& [trait, c] : counts) {
    if (c.second > 0) out[trait] = static_cast<double>(c.first) / static_cast<double>(c.second);
  }
  if (out.empty()) throw ValidationError("no record contains a learning round");
  return out;
}

std::map<Trait, TimestampAverages> timestamp_averages(const std::vector<RunRecord>& records) {
  std::map<Trait, std::pair<std::vector<double>, std::vector<double>>> acc;
  for (const RunRecord* r : complete(records)) {
    auto& a = acc[r->config.personality];
    a.first.push_back(static_cast<double>(r->ledger.learning_total()));
    a.second.push_back(static_cast<double>(r->ledger.exam_total()));
  }
  if (acc.empty()) throw ValidationError("timestamp averages need at least one complete record");
  std::map<Trait, TimestampAverages> out;
  for (const auto& [trait, a] : acc) out[trait] = TimestampAverages{mean(a.first), mean(a.second), a.first.size()};
  return out;
}

std::vector<double> fractional_ranks(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> ranks(scores.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

RankSummary rank_agents(const std::vector<RunRecord>& records) {
  using CellKey = std::tuple<PromptVariant, Topic, int, int>;
  std::map<CellKey, std::vector<const RunRecord*>> cells;
  for (const RunRecord* r : complete(records)) {
    cells[{r->config.variant, r->config.exam_topic, r->config.learning_rounds, r->config.repeat}]
        .push_back(r);
  }
  std::array<std::vector<double>, 5> ranks;
  std::array<std::vector<double>, 5> f1s;
  RankSummary out;
  for (const auto& [key, members] : cells) {
    std::set<Trait> traits;
    for (const RunRecord* r : members) traits.insert(r->config.personality);
    if (members.size() != kAllTraits.size() || traits.size() != kAllTraits.size()) {
      const auto& [variant, topic, rounds, repeat] = key;
      out.skipped_cells.push_back(std::string(variant_name(variant)) + "/" +
                                  std::string(topic_name(topic)) + "/r" + std::to_string(rounds) +
                                  "/rep" + std::to_string(repeat));
      continue;
    }
    std::vector<double> scores;
    for (const RunRecord* r : members) scores.push_back(r->macro_f1);
    const auto cell_ranks = fractional_ranks(scores);
    for (std::size_t i = 0; i < members.size(); ++i) {
      const std::size_t t = trait_index(members[i]->config.personality);
      ranks[t].push_back(cell_ranks[i]);
      f1s[t].push_back(members[i]->macro_f1);
    }
    ++out.cells_ranked;
  }
  for (Trait t : kAllTraits) {
    const std::size_t i = trait_index(t);
    if (ranks[i].empty()) continue;
    out.entries.push_back(RankSummary::Entry{t, mean(ranks[i]), mean(f1s[i]), ranks[i].size()});
  }
  return out;
}

std::optional<EmitFormat> parse_emit_format(std::string_view s) {
  if (s == "csv") return EmitFormat::Csv;
  if (s == "json-lines" || s == "jsonl") return EmitFormat::JsonLines;
  if (s == "plot-data") return EmitFormat::PlotData;
  return std::nullopt;
}

// ---------------------------------------------------------------- plot data

namespace {

ordered_json series(const std::string& name, const std::string& aggregate, ordered_json x,
                    ordered_json y) {
  ordered_json s;
  s["name"] = name;
  s["aggregate"] = aggregate;
  s["x"] = std::move(x);
  s["y"] = std::move(y);
  return s;
}

ordered_json group(const std::string& name, ordered_json panels) {
  ordered_json g;
  g["name"] = name;
  g["panels"] = std::move(panels);
  return g;
}

using Metric = double (*)(const RunRecord&);

// Series over learning rounds for records selected by `keep`: one mean
// series plus one trace per repeat.
ordered_json rounds_series(const std::vector<const RunRecord*>& recs, const std::string& name,
                           Metric metric) {
  std::map<int, std::vector<double>> by_round;
  std::map<int, std::map<int, double>> by_repeat;
  for (const RunRecord* r : recs) {
    by_round[r->config.learning_rounds].push_back(metric(*r));
    by_repeat[r->config.repeat][r->config.learning_rounds] = metric(*r);
  }
  ordered_json out = ordered_json::array();
  ordered_json x = ordered_json::array(), y = ordered_json::array();
  for (const auto& [rounds, values] : by_round) {
    x.push_back(rounds);
    y.push_back(mean(values));
  }
  out.push_back(series(name, "mean", x, y));
  for (const auto& [repeat, points] : by_repeat) {
    ordered_json rx = ordered_json::array(), ry = ordered_json::array();
    for (const auto& [rounds, v] : points) {
      rx.push_back(rounds);
      ry.push_back(v);
    }
    out.push_back(series(name, "repeat " + std::to_string(repeat), rx, ry));
  }
  return out;
}

double f1_of(const RunRecord& r) { return r.macro_f1; }
double blanks_of(const RunRecord& r) { return static_cast<double>(r.blank_count); }

ordered_json per_topic_panels(const std::vector<const RunRecord*>& recs, Metric metric) {
  ordered_json panels = ordered_json::array();
  for (Topic topic : kAllTopics) {
    ordered_json s = ordered_json::array();
    for (Trait trait : kAllTraits) {
      std::vector<const RunRecord*> sel;
      for (const RunRecord* r : recs) {
        if (r->config.exam_topic == topic && r->config.personality == trait) sel.push_back(r);
      }
      if (sel.empty()) continue;
      for (auto& x : rounds_series(sel, std::string(trait_name(trait)), metric)) s.push_back(x);
    }
    if (s.empty()) continue;
    ordered_json p;
    p["title"] = topic_name(topic);
    p["series"] = s;
    panels.push_back(p);
  }
  return panels;
}

}  // namespace

ordered_json plot_data(const std::vector<RunRecord>& records) {
  const auto recs = complete(records);
  ordered_json groups = ordered_json::array();

  groups.push_back(group("f1_vs_rounds", per_topic_panels(recs, f1_of)));
  groups.push_back(group("blanks_vs_rounds", per_topic_panels(recs, blanks_of)));

  ordered_json topic_panels = ordered_json::array();
  for (Trait trait : kAllTraits) {
    ordered_json s = ordered_json::array();
    for (Topic topic : kAllTopics) {
      std::vector<const RunRecord*> sel;
      for (const RunRecord* r : recs) {
        if (r->config.exam_topic == topic && r->config.personality == trait) sel.push_back(r);
      }
      if (sel.empty()) continue;
      s.push_back(rounds_series(sel, std::string(topic_name(topic)), f1_of).at(0));
    }
    if (s.empty()) continue;
    ordered_json p;
    p["title"] = trait_name(trait);
    p["series"] = s;
    topic_panels.push_back(p);
  }
  groups.push_back(group("topic_comparison", topic_panels));

  auto bar_panel = [](const std::string& title, ordered_json s) {
    ordered_json p;
    p["title"] = title;
    p["series"] = std::move(s);
    return ordered_json::array({p});
  };

  {
    ordered_json x = ordered_json::array(), y = ordered_json::array();
    std::map<Trait, double> rates;
    try {
      rates = interaction_probability(records);
    } catch (const ValidationError&) {
    }
    for (const auto& [trait, rate] : rates) {
      x.push_back(trait_name(trait));
      y.push_back(rate);
    }
    groups.push_back(group("interaction_probability",
                           bar_panel("interaction_probability",
                                     ordered_json::array({series("ask_teacher_rate", "pooled", x, y)}))));
  }
  {
    ordered_json x = ordered_json::array(), yl = ordered_json::array(), ye = ordered_json::array();
    if (!recs.empty()) {
      for (const auto& [trait, avg] : timestamp_averages(records)) {
        x.push_back(trait_name(trait));
        yl.push_back(avg.learning);
        ye.push_back(avg.exam);
      }
    }
    groups.push_back(group("timestamps", bar_panel("timestamps", ordered_json::array(
                                                                     {series("learning", "mean", x, yl),
                                                                      series("exam", "mean", x, ye)}))));
  }
  {
    const RankSummary ranks = rank_agents(records);
    ordered_json x = ordered_json::array(), y = ordered_json::array(), yf = ordered_json::array();
    for (const auto& e : ranks.entries) {
      x.push_back(trait_name(e.personality));
      y.push_back(e.mean_rank);
      yf.push_back(e.mean_macro_f1);
    }
    groups.push_back(group("rank", bar_panel("rank", ordered_json::array(
                                                         {series("mean_rank", "mean", x, y),
                                                          series("mean_macro_f1", "mean", x, yf)}))));
  }

  ordered_json out;
  out["kind"] = "plot_data";
  out["groups"] = groups;
  return out;
}

ordered_json summary_json(const std::vector<RunRecord>& records) {
  const MetricsTable table = metrics_table(records);
  ordered_json j;
  j["kind"] = "summary";
  j["complete_runs"] = table.rows.size();
  j["failed_runs"] = table.excluded_failed;
  ordered_json inter = ordered_json::object();
  try {
    for (const auto& [t, rate] : interaction_probability(records)) inter[std::string(trait_name(t))] = rate;
  } catch (const ValidationError&) {
  }
  j["interaction_probability"] = inter;
  ordered_json ts = ordered_json::object();
  if (!table.rows.empty()) {
    for (const auto& [t, a] : timestamp_averages(records)) {
      ordered_json x;
      x["learning"] = a.learning;
      x["exam"] = a.exam;
      x["runs"] = a.runs;
      ts[std::string(trait_name(t))] = x;
    }
  }
  j["timestamp_averages"] = ts;
  const RankSummary ranks = rank_agents(records);
  ordered_json rk = ordered_json::array();
  for (const auto& e : ranks.entries) {
    ordered_json x;
    x["personality"] = trait_name(e.personality);
    x["mean_rank"] = e.mean_rank;
    x["mean_macro_f1"] = e.mean_macro_f1;
    x["cells"] = e.cells;
    rk.push_back(x);
  }
  j["rank_summary"] = rk;
  j["cells_ranked"] = ranks.cells_ranked;
  j["skipped_cells"] = ranks.skipped_cells;
  return j;
}

std::filesystem::path emit(const std::vector<RunRecord>& records, EmitFormat format,
                           const std::filesystem::path& out_dir) {
  if (records.empty()) throw ValidationError("nothing to emit: no run records");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  std::filesystem::path path;
  std::string body;
  const MetricsTable table = metrics_table(records);
  switch (format) {
    case EmitFormat::Csv: {
      path = out_dir / "metrics.csv";
      body = "run_id,personality,variant,rounds,topic,repeat,macro_f1,blank_count,learning_total,"
             "exam_total,ask_teacher_count,ask_teacher_rate\n";
      for (const auto& r : table.rows) {
        body += r.run_id + "," + std::string(trait_name(r.personality)) + "," +
                std::string(variant_name(r.variant)) + "," + std::to_string(r.rounds) + "," +
                std::string(topic_name(r.topic)) + "," + std::to_string(r.repeat) + "," +
                fixed6(r.macro_f1) + "," + std::to_string(r.blank_count) + "," +
                std::to_string(r.learning_total) + "," + std::to_string(r.exam_total) + "," +
                std::to_string(r.ask_teacher_count) + "," + fixed6(r.ask_teacher_rate) + "\n";
      }
      break;
    }
    case EmitFormat::JsonLines: {
      path = out_dir / "runs.jsonl";
      for (const auto& r : table.rows) {
        ordered_json j;
        j["run_id"] = r.run_id;
        j["personality"] = trait_name(r.personality);
        j["variant"] = variant_name(r.variant);
        j["rounds"] = r.rounds;
        j["topic"] = topic_name(r.topic);
        j["repeat"] = r.repeat;
        j["macro_f1"] = r.macro_f1;
        j["blank_count"] = r.blank_count;
        j["learning_total"] = r.learning_total;
        j["exam_total"] = r.exam_total;
        j["ask_teacher_count"] = r.ask_teacher_count;
        j["ask_teacher_rate"] = r.ask_teacher_rate;
        body += j.dump() + "\n";
      }
      break;
    }
    case EmitFormat::PlotData:
      path = out_dir / "plot_data.json";
      body = plot_data(records).dump(2) + "\n";
      break;
  }
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << body;
  if (!out) throw ValidationError("write failed for " + path.string());
  return path;
}

}  // namespace edusim
