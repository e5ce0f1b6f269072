// examkit command-line driver.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "examkit/examkit.hpp"

namespace fs = std::filesystem;
using namespace examkit;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string cache_dir = ".examkit-cache";
  std::string output_dir = ".";
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path);
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

fs::path output_path(const Globals& g, const std::string& explicit_path, const std::string& default_name) {
  if (!explicit_path.empty()) return explicit_path;
  return fs::path(g.output_dir) / default_name;
}

SubjectMap load_subjects(const std::string& path) {
  return path.empty() ? SubjectMap{} : parse_subject_map(read_file(path));
}

std::vector<ExamTask> load_split(const std::string& path, const std::string& subjects_path) {
  auto tasks = parse_exam_file_strict(read_file(path));
  assign_subjects(tasks, load_subjects(subjects_path));
  return tasks;
}

PromptMode mode_option(const std::string& s) {
  auto mode = parse_prompt_mode(s);
  if (!mode) throw ConfigError("unknown mode " + s + " (expected al, cot or cot-wt)");
  return *mode;
}

Split split_option(const std::string& s) {
  auto split = parse_split(s);
  if (!split) throw ConfigError("unknown split " + s);
  return *split;
}

RunRecord load_run(const std::string& path) { return run_from_json(Json::parse(read_file(path))); }

void print_card(const ScoreCard& card) {
  std::cout << "single_answer " << card.single_answer << "/" << card.max_single << ", matching " << card.matching
            << "/" << card.max_matching << ", total " << card.total << "/" << card.max_total() << "\n";
}

// --- subcommands ------------------------------------------------------------

struct PrepareArgs {
  std::string input;
  std::string subjects;
};

void run_prepare(const Globals& g, const PrepareArgs& a) {
  if (g.config.empty()) throw ConfigError("prepare needs --config with a split_assignment");
  PrepareConfig cfg = parse_prepare_config(read_file(g.config));
  if (g.seed) cfg.shuffle_seed = *g.seed;

  ParseResult parsed = parse_exam_file(read_file(a.input));
  for (const auto& issue : parsed.issues) std::cerr << "invalid: " << issue.describe() << "\n";
  assign_subjects(parsed.tasks, load_subjects(a.subjects));

  const SplitSet splits = prepare(parsed.tasks, cfg);
  const fs::path dir = g.output_dir;
  for (Split s : {Split::train, Split::validation, Split::test})
    write_file(dir / (std::string(to_string(s)) + ".json"), serialize_exam_file(splits[s]));
  write_file(dir / "removals.csv", removals_csv(splits.removals));

  for (Split s : {Split::train, Split::validation, Split::test}) {
    const ScoreCard max = max_card(splits[s]);
    std::cout << to_string(s) << ": " << splits[s].size() << " tasks, max single_answer " << max.max_single
              << ", matching " << max.max_matching << ", total " << max.max_total() << "\n";
  }
  for (const auto& [reason, n] : removal_counts(splits.removals))
    std::cout << "removed " << to_string(reason) << ": " << n << "\n";
  if (!parsed.issues.empty()) std::cout << "invalid records: " << parsed.issues.size() << "\n";
}

struct PromptsArgs {
  std::string input;
  std::string mode = "al";
  std::string solutions;
  bool targets = false;
  std::string system_message;
  std::string output;
};

void run_prompts(const Globals& g, const PromptsArgs& a) {
  const PromptMode mode = mode_option(a.mode);
  const auto tasks = parse_exam_file_strict(read_file(a.input));
  const SolutionMap solutions = a.solutions.empty() ? SolutionMap{} : parse_solution_map(read_file(a.solutions));
  PromptOptions options;
  if (!a.system_message.empty()) options.system_message = a.system_message;
  const auto records = build_records(tasks, mode, solutions, a.targets, options);
  const fs::path out = output_path(g, a.output, std::string("prompts-") + to_string(mode) + ".jsonl");
  std::ostringstream buf;
  const std::size_t n = emit_training_jsonl(records, buf);
  write_file(out, buf.str());
  std::cout << "wrote " << n << " records to " << out.string() << "\n";
}

struct EvalArgs {
  std::string input;
  std::string mode = "al";
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  std::size_t concurrency = 4;
  int max_new_tokens = 2048;
  double temperature = 0.0;
  std::vector<std::string> stop;
  double timeout_s = 300;
  int retries = 3;
  bool no_cache = false;
  std::string system_message;
  std::string output;
};

int run_eval_cmd(const Globals& g, const EvalArgs& a) {
  const PromptMode mode = mode_option(a.mode);
  const auto tasks = parse_exam_file_strict(read_file(a.input));
  EndpointConfig endpoint;
  endpoint.base_url = a.base_url;
  endpoint.model_id = a.model;
  endpoint.api_key_env = a.api_key_env;
  endpoint.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(a.timeout_s * 1000));
  endpoint.max_retries = a.retries;
  DecodingConfig decoding{a.temperature, a.max_new_tokens, a.stop};
  decoding.validate();

  ChatCompletionsClient client(endpoint);
  std::optional<GenerationCache> cache;
  if (!a.no_cache) cache.emplace(g.cache_dir);
  EvalOptions options;
  options.max_in_flight = a.concurrency;
  if (!a.system_message.empty()) options.prompt.system_message = a.system_message;

  const EvalRun run = run_eval(tasks, mode, decoding, client, cache ? &*cache : nullptr, options);
  const fs::path out = output_path(g, a.output, std::string("generations-") + to_string(mode) + ".jsonl");
  std::ostringstream buf;
  write_generations_jsonl(run.generations, buf);
  write_file(out, buf.str());

  std::size_t truncated = 0;
  for (const auto& gen : run.generations)
    if (gen.finish_reason == "length") ++truncated;
  std::cout << "generations: " << run.generations.size() << " (endpoint calls " << run.endpoint_calls
            << ", cache hits " << run.cache_hits << ", truncated " << truncated << ")\n";
  for (const auto& f : run.failures)
    std::cerr << "failed " << f.key.str() << " [" << to_string(f.category) << "]: " << f.message << "\n";
  if (!run.failures.empty()) {
    std::cout << "failures: " << run.failures.size() << "\n";
    return exit_code(run.failures.front().category);
  }
  return 0;
}

struct ExtractArgs {
  std::string input;
  std::string generations;
  std::string output;
};

void run_extract(const Globals& g, const ExtractArgs& a) {
  const auto tasks = parse_exam_file_strict(read_file(a.input));
  std::map<TaskKey, const ExamTask*> by_key;
  for (const auto& t : tasks) by_key[t.key()] = &t;
  auto in = open_in(a.generations);
  const auto gens = read_generations_jsonl(in);

  std::ostringstream buf;
  std::map<ExtractStatus, std::size_t> counts;
  for (const auto& gen : gens) {
    auto it = by_key.find(gen.key);
    if (it == by_key.end()) throw ConfigError("generation for unknown task " + gen.key.str());
    const ExtractedAnswer answer = extract_answer(gen.text, *it->second);
    ++counts[answer.status];
    buf << extracted_to_json(gen.key, answer).dump(-1, ' ', false) << '\n';
  }
  const fs::path out = output_path(g, a.output, "extracted.jsonl");
  write_file(out, buf.str());
  std::cout << "extracted " << gens.size() << " answers";
  for (const auto& [status, n] : counts) std::cout << ", " << to_string(status) << " " << n;
  std::cout << "\n";
}

struct ScoreArgs {
  std::string input;
  std::string subjects;
  std::string extracted;
  std::string model = "unknown";
  std::string mode = "al";
  std::string split = "validation";
  std::optional<int> epoch;
  std::string output;
};

void run_score(const Globals& g, const ScoreArgs& a) {
  const auto tasks = load_split(a.input, a.subjects);
  std::map<TaskKey, ExtractedAnswer> answers;
  auto in = open_in(a.extracted);
  std::string line;
  while (std::getline(in, line)) {
    if (utf8::trim(line).empty()) continue;
    auto [key, answer] = extracted_from_json(Json::parse(line));
    answers[key] = std::move(answer);
  }

  RunRecord run;
  run.model_id = a.model;
  run.mode = mode_option(a.mode);
  run.split = split_option(a.split);
  run.epoch = a.epoch;
  run.timestamp = utc_timestamp();
  std::size_t short_answers = 0;
  for (const auto& t : tasks) {
    auto it = answers.find(t.key());
    ExtractedAnswer answer;
    answer.kind = t.kind();
    if (it == answers.end()) {
      ++run.failures;  // no generation reached extraction; scored as absent
    } else {
      answer = it->second;
    }
    run.scores.push_back(score_task(t, answer));
    if (run.scores.back().short_answer) ++short_answers;
  }
  run.card = aggregate(run.scores, subject_lookup(tasks));
  check_run(run, tasks);

  const fs::path out = output_path(g, a.output, "run.json");
  write_file(out, run_to_json(run).dump(2, ' ', false) + "\n");
  print_card(run.card);
  if (run.card.has_literature()) {
    std::cout << "literature: ";
    const SubjectScore lit = run.card.subject(Subject::literature);
    std::cout << lit.single_answer << "/" << lit.max_single << ", " << lit.matching << "/" << lit.max_matching << "\n";
  }
  if (run.failures) std::cout << "tasks without an answer record: " << run.failures << "\n";
  if (short_answers) std::cout << "short matching answers: " << short_answers << "\n";
}

struct BaselineArgs {
  std::string input;
  std::string subjects;
  std::int64_t trials = 10000;
  unsigned threads = 0;
  std::string output;
};

void run_baseline(const Globals& g, const BaselineArgs& a) {
  const auto tasks = load_split(a.input, a.subjects);
  const std::uint64_t seed = g.seed.value_or(0);
  const Expectation analytic = expected_random_score(tasks);
  const SimulationResult sim = simulate_random(tasks, seed, a.trials, a.threads);
  Json out = baseline_to_json(analytic, sim);
  Json by = Json::object();
  for (Subject s : {Subject::language, Subject::literature}) {
    const Expectation e = expected_random_score(tasks, s);
    if (e.total > 0) by[to_string(s)] = expectation_to_json(e);
  }
  out["analytic_by_subject"] = std::move(by);
  const std::string text = out.dump(2, ' ', false) + "\n";
  if (!a.output.empty()) write_file(a.output, text);
  std::cout << text;
}

struct SelectArgs {
  std::string manifest;
  std::vector<std::string> runs;
};

void run_select(const Globals&, const SelectArgs& a) {
  const auto manifest = parse_manifest(read_file(a.manifest));
  std::vector<RunRecord> runs;
  for (const auto& p : a.runs) runs.push_back(load_run(p));
  const Selection sel = select_from_manifest(manifest, runs);
  Json out = {{"epoch", sel.checkpoint.epoch},
              {"artifact_path", sel.checkpoint.artifact_path},
              {"total", sel.card.total},
              {"card", card_to_json(sel.card)}};
  std::cout << out.dump(2, ' ', false) << "\n";
}

struct ReportArgs {
  std::vector<std::string> runs;
  std::string format = "markdown";
  std::string input;
  std::string subjects;
  bool with_max = false;
  bool with_random = false;
  std::vector<std::string> gains;
  std::string output;
};

void run_report(const Globals&, const ReportArgs& a) {
  auto format = parse_table_format(a.format);
  if (!format) throw ConfigError("unknown format " + a.format);
  std::vector<RunRecord> runs;
  for (const auto& p : a.runs) runs.push_back(load_run(p));

  TableExtras extras;
  if (a.with_max || a.with_random) {
    if (a.input.empty()) throw ConfigError("--with-max and --with-random need --input");
    const auto tasks = load_split(a.input, a.subjects);
    if (a.with_max) extras.max = max_card(tasks);
    if (a.with_random) {
      std::map<Subject, Expectation> random;
      for (Subject s : {Subject::language, Subject::literature}) {
        const Expectation e = expected_random_score(tasks, s);
        if (e.total > 0) random[s] = e;
      }
      extras.random = random;
    }
  }
  std::string text = render_table(runs, *format, extras);
  if (*format == TableFormat::json) text += "\n";
  for (const auto& spec : a.gains) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw ConfigError("--gain expects A:B row numbers, got " + spec);
    const auto ia = std::stoul(spec.substr(0, colon));
    const auto ib = std::stoul(spec.substr(colon + 1));
    if (ia < 1 || ib < 1 || ia > runs.size() || ib > runs.size())
      throw ConfigError("--gain row out of range: " + spec);
    const RunRecord& ra = runs[ia - 1];
    const RunRecord& rb = runs[ib - 1];
    text += "\n" + gain_line(ra.model_id + " " + to_string(ra.mode), ra.card.total,
                             rb.model_id + " " + to_string(rb.mode), rb.card.total);
  }
  if (!a.gains.empty()) text += "\n";
  if (a.output.empty()) {
    std::cout << text;
  } else {
    write_file(a.output, text);
  }
}

struct DiffArgs {
  std::string a;
  std::string b;
  bool json = false;
};

void run_diff(const Globals&, const DiffArgs& a) {
  const RunRecord ra = load_run(a.a);
  const RunRecord rb = load_run(a.b);
  const auto deltas = diff_runs(ra, rb);
  if (a.json) {
    Json out = Json::array();
    for (const auto& d : deltas)
      out.push_back({{"test_id", d.key.test_id}, {"task_id", d.key.task_id}, {"a", d.points_a}, {"b", d.points_b},
                     {"delta", d.delta}});
    std::cout << out.dump(2, ' ', false) << "\n";
    return;
  }
  for (const auto& d : deltas)
    std::cout << d.key.str() << "\t" << d.points_a << " -> " << d.points_b << "\t" << (d.delta > 0 ? "+" : "")
              << d.delta << "\n";
  std::cout << deltas.size() << " tasks differ\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exam-task evaluation harness"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON config (prepare settings)");
  app.add_option("--seed", g.seed, "Seed for shuffling and baseline simulation");
  app.add_option("--cache-dir", g.cache_dir, "Generation cache directory")->capture_default_str();
  app.add_option("--output-dir", g.output_dir, "Directory for output files")->capture_default_str();

  PrepareArgs prep;
  auto* prepare_cmd = app.add_subcommand("prepare", "Clean, split, de-leak and shuffle a corpus");
  prepare_cmd->add_option("--input", prep.input, "Exam file (JSON array of tasks)")->required();
  prepare_cmd->add_option("--subjects", prep.subjects, "test_id -> subject sidecar");

  PromptsArgs pr;
  auto* prompts_cmd = app.add_subcommand("prompts", "Emit prompt (and target) JSONL");
  prompts_cmd->add_option("--input", pr.input, "Split file")->required();
  prompts_cmd->add_option("--mode", pr.mode, "al, cot or cot-wt")->capture_default_str();
  prompts_cmd->add_option("--solutions", pr.solutions, "Solutions file for cot targets");
  prompts_cmd->add_flag("--targets", pr.targets, "Include training targets");
  prompts_cmd->add_option("--system-message", pr.system_message);
  prompts_cmd->add_option("--output", pr.output);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Generate answers through a chat-completions endpoint");
  eval_cmd->add_option("--input", ev.input, "Split file")->required();
  eval_cmd->add_option("--mode", ev.mode)->capture_default_str();
  eval_cmd->add_option("--base-url", ev.base_url)->capture_default_str();
  eval_cmd->add_option("--model", ev.model, "Model id sent to the endpoint")->required();
  eval_cmd->add_option("--api-key-env", ev.api_key_env)->capture_default_str();
  eval_cmd->add_option("--concurrency", ev.concurrency)->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--max-new-tokens", ev.max_new_tokens)->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--temperature", ev.temperature)->capture_default_str();
  eval_cmd->add_option("--stop", ev.stop, "Stop sequence (repeatable)");
  eval_cmd->add_option("--timeout", ev.timeout_s, "Request timeout in seconds")->capture_default_str();
  eval_cmd->add_option("--retries", ev.retries)->capture_default_str();
  eval_cmd->add_flag("--no-cache", ev.no_cache);
  eval_cmd->add_option("--system-message", ev.system_message);
  eval_cmd->add_option("--output", ev.output);

  ExtractArgs ex;
  auto* extract_cmd = app.add_subcommand("extract", "Extract answers from generations");
  extract_cmd->add_option("--input", ex.input, "Split file")->required();
  extract_cmd->add_option("--generations", ex.generations)->required();
  extract_cmd->add_option("--output", ex.output);

  ScoreArgs sc;
  auto* score_cmd = app.add_subcommand("score", "Score extracted answers into a run record");
  score_cmd->add_option("--input", sc.input, "Split file")->required();
  score_cmd->add_option("--subjects", sc.subjects);
  score_cmd->add_option("--extracted", sc.extracted)->required();
  score_cmd->add_option("--model", sc.model)->capture_default_str();
  score_cmd->add_option("--mode", sc.mode)->capture_default_str();
  score_cmd->add_option("--split", sc.split)->capture_default_str();
  score_cmd->add_option("--epoch", sc.epoch);
  score_cmd->add_option("--output", sc.output);

  BaselineArgs bl;
  auto* baseline_cmd = app.add_subcommand("baseline", "Random-guess baseline (analytic and simulated)");
  baseline_cmd->add_option("--input", bl.input, "Split file")->required();
  baseline_cmd->add_option("--subjects", bl.subjects);
  baseline_cmd->add_option("--trials", bl.trials)->capture_default_str()->check(CLI::PositiveNumber);
  baseline_cmd->add_option("--threads", bl.threads, "0 = hardware concurrency")->capture_default_str();
  baseline_cmd->add_option("--output", bl.output);

  SelectArgs se;
  auto* select_cmd = app.add_subcommand("select", "Pick the best checkpoint by validation total");
  select_cmd->add_option("--manifest", se.manifest)->required();
  select_cmd->add_option("--run", se.runs, "Validation run record per epoch")->required();

  ReportArgs rp;
  auto* report_cmd = app.add_subcommand("report", "Render a score table");
  report_cmd->add_option("--run", rp.runs)->required();
  report_cmd->add_option("--format", rp.format, "markdown, csv or json")->capture_default_str();
  report_cmd->add_option("--input", rp.input, "Split file for max/random rows");
  report_cmd->add_option("--subjects", rp.subjects);
  report_cmd->add_flag("--with-max", rp.with_max);
  report_cmd->add_flag("--with-random", rp.with_random);
  report_cmd->add_option("--gain", rp.gains, "A:B run numbers; prints the total gain of A over B");
  report_cmd->add_option("--output", rp.output);

  DiffArgs df;
  auto* diff_cmd = app.add_subcommand("diff", "Per-task point changes between two runs");
  diff_cmd->add_option("a", df.a)->required();
  diff_cmd->add_option("b", df.b)->required();
  diff_cmd->add_flag("--json", df.json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*prepare_cmd) run_prepare(g, prep);
    else if (*prompts_cmd) run_prompts(g, pr);
    else if (*eval_cmd) return run_eval_cmd(g, ev);
    else if (*extract_cmd) run_extract(g, ex);
    else if (*score_cmd) run_score(g, sc);
    else if (*baseline_cmd) run_baseline(g, bl);
    else if (*select_cmd) run_select(g, se);
    else if (*report_cmd) run_report(g, rp);
    else if (*diff_cmd) run_diff(g, df);
  } catch (const Error& e) {
    std::cerr << "examkit: " << to_string(e.category()) << " error: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "examkit: parse error: " << e.what() << "\n";
    return exit_code(ErrorCategory::parse);
  } catch (const std::exception& e) {
    std::cerr << "examkit: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
