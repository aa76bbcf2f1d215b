#include "edusim/cli.hpp"

#include "edusim/error.hpp"
#include "edusim/record_io.hpp"
#include "edusim/report.hpp"
#include "edusim/text.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace edusim {

namespace {

struct UsageError : Error {
  using Error::Error;
};

// Lists every validation problem at once.
struct ConfigErrors : Error {
  explicit ConfigErrors(std::vector<std::string> e) : Error("invalid configuration"), errors(std::move(e)) {}
  std::vector<std::string> errors;
};

std::string fmt(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

template <typename T>
T parse_or_usage(std::optional<T> v, const std::string& what, const std::string& raw,
                 const std::string& valid) {
  if (!v) throw UsageError("invalid " + what + " '" + raw + "'; valid: " + valid);
  return *v;
}

std::string trait_list() {
  std::string s;
  for (Trait t : kAllTraits) s += (s.empty() ? "" : ", ") + std::string(trait_name(t));
  return s;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      const std::string t = text::trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return out;
}

// Values given on the command line; applied over the config file.
struct Flags {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string bank, out, backend, script, model, embedder, variant, score_mode;
  std::size_t embedding_dim = 0, exam_size = 0;
  double student_temperature = 0, teacher_temperature = 0;
  int max_new_tokens = 0;
  // run
  std::string personality, topic;
  int rounds = 0, repeat = 0;
  // matrix
  std::string rounds_list, personalities, topics;
  int repeats = 0, width = 0;
  // prepare-bank
  std::string classifier;
  double min_confidence = 0, dev_fraction = 0;

  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_common(CLI::App* app, Flags& f) {
  f.opts["config"] = app->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  f.opts["seed"] = app->add_option("--seed", f.seed, "base seed");
  f.opts["bank"] = app->add_option("--bank", f.bank, "question bank file");
  f.opts["out"] = app->add_option("--out", f.out, "output directory");
  f.opts["embedder"] = app->add_option("--embedder", f.embedder, "hash | remote");
  f.opts["embedding-dim"] = app->add_option("--embedding-dim", f.embedding_dim, "embedding dimension");
}

void add_run_common(CLI::App* app, Flags& f) {
  add_common(app, f);
  f.opts["backend"] = app->add_option("--backend", f.backend, "mock | scripted | remote");
  f.opts["script"] = app->add_option("--script", f.script, "scripted backend scenario file");
  f.opts["model"] = app->add_option("--model", f.model, "remote model name");
  f.opts["variant"] = app->add_option("--variant", f.variant, "concise | elaborated");
  f.opts["exam-size"] = app->add_option("--exam-size", f.exam_size, "exam questions per run");
  f.opts["score-mode"] = app->add_option("--score-mode", f.score_mode, "token_f1 | exact_match");
  f.opts["student-temperature"] = app->add_option("--student-temperature", f.student_temperature, "student sampling temperature");
  f.opts["teacher-temperature"] = app->add_option("--teacher-temperature", f.teacher_temperature, "teacher sampling temperature");
  f.opts["max-new-tokens"] = app->add_option("--max-new-tokens", f.max_new_tokens, "completion token limit");
}

// Defaults, then the config file, then flags.
AppConfig resolve(const Flags& f) {
  AppConfig c;
  if (!f.config_path.empty()) {
    try {
      c = load_app_config(f.config_path, c);
    } catch (const ValidationError& e) {
      throw UsageError(f.config_path + ": " + e.what());
    } catch (const ParseError& e) {
      throw UsageError(e.what());
    }
  }
  if (f.given("seed")) c.run.seed = f.seed;
  if (f.given("bank")) c.bank_path = f.bank;
  if (f.given("out")) c.output_dir = f.out;
  if (f.given("embedder")) c.embedder = f.embedder;
  if (f.given("embedding-dim")) c.embedding_dim = f.embedding_dim;
  if (f.given("backend"))
    c.backend = parse_or_usage(parse_backend_kind(f.backend), "backend", f.backend, "mock, scripted, remote");
  if (f.given("script")) c.script_path = f.script;
  if (f.given("model")) c.llm_model = f.model;
  if (f.given("variant"))
    c.run.variant = parse_or_usage(parse_variant(f.variant), "variant", f.variant, "concise, elaborated");
  if (f.given("exam-size")) c.run.exam_size = f.exam_size;
  if (f.given("score-mode"))
    c.run.score_mode =
        parse_or_usage(parse_score_mode(f.score_mode), "score mode", f.score_mode, "token_f1, exact_match");
  if (f.given("student-temperature")) c.run.agent.student_temperature = f.student_temperature;
  if (f.given("teacher-temperature")) c.run.agent.teacher_temperature = f.teacher_temperature;
  if (f.given("max-new-tokens")) c.run.agent.max_new_tokens = f.max_new_tokens;
  if (f.given("personality"))
    c.run.personality = parse_or_usage(parse_trait(f.personality), "personality", f.personality, trait_list());
  if (f.given("topic"))
    c.run.exam_topic = parse_or_usage(parse_topic(f.topic), "topic", f.topic, valid_topic_list());
  if (f.given("rounds")) c.run.learning_rounds = f.rounds;
  if (f.given("repeat")) c.run.repeat = f.repeat;
  if (f.given("rounds-list")) {
    c.matrix.rounds.clear();
    for (const auto& s : split_csv(f.rounds_list)) {
      try {
        c.matrix.rounds.push_back(std::stoi(s));
      } catch (const std::exception&) {
        throw UsageError("invalid rounds value '" + s + "'");
      }
    }
  }
  if (f.given("repeats")) c.matrix.repeats = f.repeats;
  if (f.given("personalities")) {
    c.matrix.personalities.clear();
    for (const auto& s : split_csv(f.personalities))
      c.matrix.personalities.push_back(parse_or_usage(parse_trait(s), "personality", s, trait_list()));
  }
  if (f.given("topics")) {
    c.matrix.topics.clear();
    for (const auto& s : split_csv(f.topics))
      c.matrix.topics.push_back(parse_or_usage(parse_topic(s), "topic", s, valid_topic_list()));
  }
  if (f.given("width")) c.width = f.width;
  if (f.given("classifier")) c.classifier = f.classifier;
  if (f.given("min-confidence")) c.min_confidence = f.min_confidence;
  if (f.given("dev-fraction")) c.dev_fraction = f.dev_fraction;
  return c;
}

void check(const AppConfig& c, const QuestionBank* bank = nullptr) {
  auto errors = c.validate(bank);
  if (!errors.empty()) throw ConfigErrors(std::move(errors));
}

std::shared_ptr<const QuestionBank> open_bank(const AppConfig& c) {
  if (!std::filesystem::exists(c.bank_path)) throw UsageError("bank file not found: " + c.bank_path);
  return std::make_shared<const QuestionBank>(load_bank(c.bank_path));
}

void print_topic_counts(const QuestionBank& bank, std::ostream& out) {
  for (Topic t : kAllTopics) {
    out << topic_name(t) << ": " << bank.count(t);
    if (bank.is_split()) {
      out << " (dev " << bank.ids(t, Split::Dev).size() << ", test " << bank.ids(t, Split::Test).size() << ")";
    }
    out << "\n";
  }
  out << "total: " << bank.size() << "\n";
}

std::string record_line(const RunRecord& r) {
  std::string s = r.run_id + " " + std::string(run_status_name(r.status));
  if (r.status == RunStatus::Complete) {
    s += " macro_f1=" + fmt(r.macro_f1) + " blanks=" + std::to_string(r.blank_count) +
         " learning=" + std::to_string(r.ledger.learning_total()) +
         " exam=" + std::to_string(r.ledger.exam_total());
  } else {
    s += " error=" + r.error;
  }
  return s;
}

int cmd_prepare_bank(const Flags& f, const std::string& input, const std::string& output,
                     const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                     const EnvLookup& env) {
  AppConfig c = resolve(f);
  if (!output.empty()) c.bank_path = output;
  check(c);
  const auto records = load_raw_records(input);
  auto classifier = make_classifier(c, env);
  IngestResult ingested = ingest(records, *classifier, c.min_confidence);
  out << "records: " << records.size() << ", kept: " << ingested.bank.size()
      << ", skipped: " << ingested.skipped.size() << "\n";
  if (ingested.bank.empty()) {
    err << "warning: bank is empty; no record was classified above confidence " << c.min_confidence << "\n";
    return kExitRuntime;
  }
  QuestionBank bank = split_bank(ingested.bank, c.dev_fraction, c.run.seed);
  auto embedder = make_embedder(c, env);
  bank = embed_bank(bank, *embedder);
  save_bank(bank, c.bank_path);
  print_topic_counts(bank, out);
  write_manifest(c.bank_path + ".manifest.json", make_manifest("prepare-bank", c, args));
  return kExitOk;
}

int cmd_run(const Flags& f, const std::vector<std::string>& args, std::ostream& out, const EnvLookup& env) {
  const AppConfig c = resolve(f);
  check(c);
  const auto bank = open_bank(c);
  check(c, bank.get());
  auto embedder = make_embedder(c, env);
  const BankIndex index(bank, *embedder);
  auto backend = make_backend_factory(c, env)(c.run, run_seed(c.run));
  const std::string id = run_id(c.run);
  std::filesystem::create_directories(c.output_dir);
  RunEnvironment renv{index, *embedder, *backend, make_progress_writer(c.output_dir, id)};
  const RunRecord rec = run_single(c.run, renv);
  write_run_files(rec, c.output_dir);
  write_manifest(std::filesystem::path(c.output_dir) / (id + ".manifest.json"), make_manifest("run", c, args));
  out << record_line(rec) << "\n";
  return rec.status == RunStatus::Complete ? kExitOk : kExitRuntime;
}

int cmd_matrix(const Flags& f, bool resume, const std::vector<std::string>& args, std::ostream& out,
               const EnvLookup& env) {
  const AppConfig c = resolve(f);
  check(c);
  const auto bank = open_bank(c);
  check(c, bank.get());
  auto embedder = make_embedder(c, env);
  const BankIndex index(bank, *embedder);
  const auto factory = make_backend_factory(c, env);
  const std::filesystem::path dir = c.output_dir;
  std::filesystem::create_directories(dir);
  write_manifest(dir / "matrix.manifest.json", make_manifest("matrix", c, args));

  const std::size_t total = plan_matrix(c.run, c.matrix).size();
  std::size_t done = 0;
  MatrixOptions opts;
  opts.width = c.width;
  opts.on_record = [&](const RunRecord& r) {
    write_run_files(r, dir);
    out << "[" << ++done << "/" << total << "] " << record_line(r) << "\n";
  };
  opts.progress_for = [&dir](const RunConfig& rc) { return make_progress_writer(dir, run_id(rc)); };
  if (resume) {
    opts.resume_lookup = [&dir](const RunConfig& rc) -> std::optional<RunRecord> {
      const auto path = record_path(dir, run_id(rc));
      if (!std::filesystem::exists(path)) return std::nullopt;
      auto stored = load_run_record(path);
      if (!stored || stored->status != RunStatus::Complete || !(stored->config == rc)) return std::nullopt;
      return stored;
    };
  }
  const auto records = run_experiment_matrix(c.run, c.matrix, index, *embedder, factory, opts);
  const auto failed = std::count_if(records.begin(), records.end(),
                                    [](const RunRecord& r) { return r.status != RunStatus::Complete; });
  out << "runs: " << records.size() << ", complete: " << records.size() - static_cast<std::size_t>(failed)
      << ", failed: " << failed << ", reused: " << total - done << "\n";
  return failed == 0 ? kExitOk : kExitRuntime;
}

int cmd_report(const std::string& in_dir, std::string out_dir, const std::string& format,
               const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (out_dir.empty()) out_dir = (std::filesystem::path(in_dir) / "report").string();
  std::vector<EmitFormat> formats;
  if (format == "all") {
    formats = {EmitFormat::Csv, EmitFormat::JsonLines, EmitFormat::PlotData};
  } else {
    formats.push_back(parse_or_usage(parse_emit_format(format), "format", format,
                                     "csv, json-lines, plot-data, all"));
  }
  if (!std::filesystem::is_directory(in_dir)) throw UsageError("not a directory: " + in_dir);
  const auto records = load_run_records(in_dir);
  if (records.empty()) throw ValidationError("no run records in " + in_dir);
  const MetricsTable table = metrics_table(records);
  out << "records: " << records.size() << ", complete: " << table.rows.size()
      << ", failed (excluded): " << table.excluded_failed << "\n";
  if (table.rows.empty()) throw ValidationError("no complete run records in " + in_dir);

  for (EmitFormat fmt_kind : formats) out << "wrote " << emit(records, fmt_kind, out_dir).string() << "\n";
  const auto summary = summary_json(records);
  const auto summary_path = std::filesystem::path(out_dir) / "summary.json";
  write_manifest(summary_path, summary);
  out << "wrote " << summary_path.string() << "\n";

  const RankSummary ranks = rank_agents(records);
  for (const auto& cell : ranks.skipped_cells) err << "warning: incomplete cell skipped: " << cell << "\n";
  for (const auto& e : ranks.entries) {
    out << trait_name(e.personality) << ": mean_rank=" << fmt(e.mean_rank, 3)
        << " mean_macro_f1=" << fmt(e.mean_macro_f1) << " cells=" << e.cells << "\n";
  }
  AppConfig c;
  c.output_dir = out_dir;
  write_manifest(std::filesystem::path(out_dir) / "report.manifest.json", make_manifest("report", c, args));
  return kExitOk;
}

int cmd_validate_config(const Flags& f, std::ostream& out) {
  const AppConfig c = resolve(f);
  std::unique_ptr<QuestionBank> bank;
  if (std::filesystem::exists(c.bank_path)) bank = std::make_unique<QuestionBank>(load_bank(c.bank_path));
  out << app_config_to_json(c).dump(2) << "\n";
  check(c, bank.get());
  out << "config ok" << (bank ? " (checked against " + c.bank_path + ")" : std::string()) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env) {
  CLI::App app{"Personality-driven student agent simulation"};
  app.name("edusim");
  app.require_subcommand(1);

  Flags prep_flags, run_flags, matrix_flags, validate_flags;
  std::string input, output, report_in, report_out, report_format = "all";
  bool resume = false;

  auto* prep = app.add_subcommand("prepare-bank", "classify, split, embed and save a question bank");
  add_common(prep, prep_flags);
  prep->add_option("--input", input, "raw problem records (JSON lines)")->required()->check(CLI::ExistingFile);
  prep->add_option("--output", output, "bank file to write");
  prep_flags.opts["classifier"] = prep->add_option("--classifier", prep_flags.classifier, "keyword | remote");
  prep_flags.opts["min-confidence"] = prep->add_option("--min-confidence", prep_flags.min_confidence, "classifier confidence floor");
  prep_flags.opts["dev-fraction"] = prep->add_option("--dev-fraction", prep_flags.dev_fraction, "share of each topic used for learning");

  auto* run = app.add_subcommand("run", "execute one learning + exam run");
  add_run_common(run, run_flags);
  run_flags.opts["personality"] = run->add_option("--personality", run_flags.personality, "big-five trait");
  run_flags.opts["topic"] = run->add_option("--topic", run_flags.topic, "exam topic");
  run_flags.opts["rounds"] = run->add_option("--rounds", run_flags.rounds, "learning rounds");
  run_flags.opts["repeat"] = run->add_option("--repeat", run_flags.repeat, "repeat index");

  auto* matrix = app.add_subcommand("matrix", "execute personalities x rounds x topics x repeats");
  add_run_common(matrix, matrix_flags);
  matrix_flags.opts["rounds-list"] = matrix->add_option("--rounds", matrix_flags.rounds_list, "e.g. 0,10,20,50");
  matrix_flags.opts["repeats"] = matrix->add_option("--repeats", matrix_flags.repeats, "repeats per cell");
  matrix_flags.opts["personalities"] = matrix->add_option("--personalities", matrix_flags.personalities, "comma-separated traits");
  matrix_flags.opts["topics"] = matrix->add_option("--topics", matrix_flags.topics, "comma-separated topics");
  matrix_flags.opts["width"] = matrix->add_option("--width", matrix_flags.width, "parallel runs");
  matrix->add_flag("--resume", resume, "reuse complete records already in the output directory");

  auto* report = app.add_subcommand("report", "aggregate run records into metric files");
  report->add_option("--in", report_in, "directory of run records")->required();
  report->add_option("--out", report_out, "output directory (default <in>/report)");
  report->add_option("--format", report_format, "csv | json-lines | plot-data | all");

  auto* validate = app.add_subcommand("validate-config", "print the resolved config and check it");
  add_run_common(validate, validate_flags);
  validate_flags.opts["personality"] = validate->add_option("--personality", validate_flags.personality, "big-five trait");
  validate_flags.opts["topic"] = validate->add_option("--topic", validate_flags.topic, "exam topic");
  validate_flags.opts["rounds"] = validate->add_option("--rounds", validate_flags.rounds, "learning rounds");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (prep->parsed()) return cmd_prepare_bank(prep_flags, input, output, args, out, err, env);
    if (run->parsed()) return cmd_run(run_flags, args, out, env);
    if (matrix->parsed()) return cmd_matrix(matrix_flags, resume, args, out, env);
    if (report->parsed()) return cmd_report(report_in, report_out, report_format, args, out, err);
    if (validate->parsed()) return cmd_validate_config(validate_flags, out);
  } catch (const ConfigErrors& e) {
    for (const auto& msg : e.errors) err << "config error: " << msg << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace edusim
