#pragma once

// Score tables (model rows plus optional max-score and random-guess rows),
// run records, per-task diffs between runs, and checkpoint manifests.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "examkit/baseline.hpp"
#include "examkit/corpus.hpp"
#include "examkit/prompt.hpp"
#include "examkit/scoring.hpp"

namespace examkit {

struct RunRecord {
  std::string model_id;
  PromptMode mode = PromptMode::letter;
  Split split = Split::validation;
  ScoreCard card;
  int failures = 0;
  std::string timestamp;
  std::vector<TaskScore> scores;
  std::optional<int> epoch;

  bool operator==(const RunRecord&) const = default;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Card maxima must cover every task of the split, so callers score failed
// tasks as zero rather than dropping them.
inline void check_run(const RunRecord& run, std::span<const ExamTask> tasks) {
  const ScoreCard max = max_card(tasks);
  if (run.card.max_single != max.max_single || run.card.max_matching != max.max_matching)
    throw ContractViolation("run maxima " + std::to_string(run.card.max_single) + "/" +
                            std::to_string(run.card.max_matching) + " do not match the task list (" +
                            std::to_string(max.max_single) + "/" + std::to_string(max.max_matching) + ")");
}

inline Json run_to_json(const RunRecord& r) {
  Json scores = Json::array();
  for (const auto& s : r.scores) scores.push_back(score_to_json(s));
  Json j = {{"model_id", r.model_id}, {"mode", to_string(r.mode)}, {"split", to_string(r.split)},
            {"timestamp", r.timestamp}, {"failures", r.failures}, {"card", card_to_json(r.card)}};
  if (r.epoch) j["epoch"] = *r.epoch;
  j["scores"] = std::move(scores);
  return j;
}

inline RunRecord run_from_json(const Json& j) {
  try {
    RunRecord r;
    r.model_id = j.at("model_id").get<std::string>();
    auto mode = parse_prompt_mode(j.at("mode").get<std::string>());
    auto split = parse_split(j.at("split").get<std::string>());
    if (!mode || !split) throw ConfigError("unknown mode or split in run record");
    r.mode = *mode;
    r.split = *split;
    r.timestamp = j.value("timestamp", std::string());
    r.failures = j.value("failures", 0);
    r.card = card_from_json(j.at("card"));
    if (j.contains("epoch") && !j["epoch"].is_null()) r.epoch = j["epoch"].get<int>();
    if (j.contains("scores"))
      for (const auto& s : j["scores"]) r.scores.push_back(score_from_json(s));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run record: ") + e.what());
  }
}

// --- tables -----------------------------------------------------------------

enum class TableFormat { markdown, csv, json };

inline std::optional<TableFormat> parse_table_format(std::string_view s) {
  if (s == "markdown" || s == "md") return TableFormat::markdown;
  if (s == "csv") return TableFormat::csv;
  if (s == "json") return TableFormat::json;
  return std::nullopt;
}

struct TableExtras {
  std::optional<ScoreCard> max;
  // Random-guess expectation per subject.
  std::optional<std::map<Subject, Expectation>> random;
};

// Up to two decimals, trailing zeros dropped: 20.25, 12.8, 56.
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", std::round(v * 100.0) / 100.0);
  std::string s = buf;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

namespace detail {

struct Cells {
  std::string model;
  std::string mode;
  std::array<double, 3> main{};  // single, matching, total
  std::array<double, 3> literature{};
};

inline Cells card_cells(std::string model, std::string mode, const ScoreCard& card, bool split_subjects) {
  Cells c{std::move(model), std::move(mode), {}, {}};
  if (split_subjects) {
    const SubjectScore lang = card.subject(Subject::language);
    const SubjectScore lit = card.subject(Subject::literature);
    c.main = {double(lang.single_answer), double(lang.matching), double(lang.total)};
    c.literature = {double(lit.single_answer), double(lit.matching), double(lit.total)};
  } else {
    c.main = {double(card.single_answer), double(card.matching), double(card.total)};
  }
  return c;
}

inline Cells max_cells(const ScoreCard& card, bool split_subjects) {
  Cells c{"Max possible score", "", {}, {}};
  if (split_subjects) {
    const SubjectScore lang = card.subject(Subject::language);
    const SubjectScore lit = card.subject(Subject::literature);
    c.main = {double(lang.max_single), double(lang.max_matching), double(lang.max_total())};
    c.literature = {double(lit.max_single), double(lit.max_matching), double(lit.max_total())};
  } else {
    c.main = {double(card.max_single), double(card.max_matching), double(card.max_total())};
  }
  return c;
}

inline Cells random_cells(const std::map<Subject, Expectation>& random, bool split_subjects) {
  Cells c{"Random guess", "", {}, {}};
  auto get = [&](Subject s) {
    auto it = random.find(s);
    return it == random.end() ? Expectation{} : it->second;
  };
  if (split_subjects) {
    const Expectation lang = get(Subject::language);
    const Expectation lit = get(Subject::literature);
    c.main = {lang.single_answer, lang.matching, lang.total};
    c.literature = {lit.single_answer, lit.matching, lit.total};
  } else {
    for (const auto& [subject, e] : random) {
      c.main[0] += e.single_answer;
      c.main[1] += e.matching;
      c.main[2] += e.total;
    }
  }
  return c;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string md_field(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

// Markdown/CSV columns: model, mode, single answer, matching, total. When any
// row has literature scores, main cells hold the language score and the
// literature addition follows as "(+N)" (a separate column in CSV).
inline std::string render_table(std::span<const RunRecord> rows, TableFormat format,
                                const TableExtras& extras = {}) {
  if (format == TableFormat::json) {
    Json out = Json::array();
    for (const auto& r : rows) out.push_back(run_to_json(r));
    return out.dump(2, ' ', false);
  }
  if (rows.empty()) throw ContractViolation("render_table needs at least one row for markdown or csv");

  bool split_subjects = std::any_of(rows.begin(), rows.end(), [](const RunRecord& r) { return r.card.has_literature(); });
  if (extras.max && extras.max->has_literature()) split_subjects = true;

  std::vector<detail::Cells> cells;
  if (extras.max) cells.push_back(detail::max_cells(*extras.max, split_subjects));
  if (extras.random) cells.push_back(detail::random_cells(*extras.random, split_subjects));
  for (const auto& r : rows) {
    std::string mode = to_string(r.mode);
    if (r.epoch) mode += " (epoch " + std::to_string(*r.epoch) + ")";
    cells.push_back(detail::card_cells(r.model_id, mode, r.card, split_subjects));
  }

  std::ostringstream out;
  if (format == TableFormat::markdown) {
    out << "| Model | Mode | Single answer | Matching | Total |\n";
    out << "|---|---|---:|---:|---:|\n";
    for (const auto& c : cells) {
      out << "| " << detail::md_field(c.model) << " | " << detail::md_field(c.mode) << " |";
      for (std::size_t i = 0; i < 3; ++i) {
        out << ' ' << format_number(c.main[i]);
        if (split_subjects) out << " (+" << format_number(c.literature[i]) << ")";
        out << " |";
      }
      out << '\n';
    }
  } else {
    out << "model,mode";
    for (const char* col : {"single_answer", "matching", "total"}) {
      out << ',' << col;
      if (split_subjects) out << ',' << col << "_literature";
    }
    out << '\n';
    for (const auto& c : cells) {
      out << detail::csv_field(c.model) << ',' << detail::csv_field(c.mode);
      for (std::size_t i = 0; i < 3; ++i) {
        out << ',' << format_number(c.main[i]);
        if (split_subjects) out << ',' << format_number(c.literature[i]);
      }
      out << '\n';
    }
  }
  return out.str();
}

inline std::vector<RunRecord> parse_run_table(std::string_view json) {
  Json j;
  try {
    j = Json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("run table: ") + e.what(), e.byte);
  }
  if (!j.is_array()) throw ConfigError("run table must be a JSON array");
  std::vector<RunRecord> out;
  for (const auto& r : j) out.push_back(run_from_json(r));
  return out;
}

// --- diffs and gains --------------------------------------------------------

struct TaskDelta {
  TaskKey key;
  int points_a = 0;
  int points_b = 0;
  int delta = 0;  // b - a

  bool operator==(const TaskDelta&) const = default;
};

// Tasks whose points differ between runs, largest change first.
inline std::vector<TaskDelta> diff_runs(const RunRecord& a, const RunRecord& b) {
  if (a.split != b.split)
    throw ContractViolation(std::string("cannot diff runs over different splits (") + to_string(a.split) + " vs " +
                            to_string(b.split) + ")");
  std::map<TaskKey, std::pair<int, int>> points;
  for (const auto& s : a.scores) points[s.key].first = s.points;
  for (const auto& s : b.scores) points[s.key].second = s.points;
  std::vector<TaskDelta> out;
  for (const auto& [key, p] : points)
    if (p.first != p.second) out.push_back({key, p.first, p.second, p.second - p.first});
  std::stable_sort(out.begin(), out.end(), [](const TaskDelta& x, const TaskDelta& y) {
    return std::abs(x.delta) > std::abs(y.delta);
  });
  return out;
}

// Relative gain of `a` over `b` in percent.
inline double percentage_gain(double a, double b) {
  if (b == 0.0) throw ContractViolation("percentage gain over a zero baseline");
  return (a - b) / b * 100.0;
}

inline std::string gain_line(const std::string& label_a, double a, const std::string& label_b, double b) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f%%", percentage_gain(a, b));
  return label_a + " vs " + label_b + ": " + format_number(a) + " vs " + format_number(b) + " (" + buf + ")";
}

// --- checkpoint manifests ---------------------------------------------------

struct CheckpointRecord {
  int epoch = 0;
  std::string artifact_path;
  std::int64_t trainable_params = 0;

  bool operator==(const CheckpointRecord&) const = default;
};

// Accepts {"checkpoints": [...]} or a bare array of records.
inline std::vector<CheckpointRecord> parse_manifest(std::string_view bytes) {
  Json j;
  try {
    j = Json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what(), e.byte);
  }
  const Json& list = j.is_object() && j.contains("checkpoints") ? j["checkpoints"] : j;
  if (!list.is_array()) throw ConfigError("manifest must list checkpoints in an array");
  std::vector<CheckpointRecord> out;
  try {
    for (const auto& c : list)
      out.push_back({c.at("epoch").get<int>(), c.at("artifact_path").get<std::string>(),
                     c.value("trainable_params", std::int64_t{0})});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest record: ") + e.what());
  }
  return out;
}

struct Selection {
  CheckpointRecord checkpoint;
  ScoreCard card;
};

// Pairs each manifest checkpoint with the validation run scored for its epoch
// and picks the best one.
inline Selection select_from_manifest(std::span<const CheckpointRecord> manifest, std::span<const RunRecord> runs) {
  std::vector<EpochCard> cards;
  for (const auto& c : manifest) {
    auto it = std::find_if(runs.begin(), runs.end(), [&](const RunRecord& r) { return r.epoch == c.epoch; });
    if (it == runs.end()) throw ConfigError("no scored run for checkpoint epoch " + std::to_string(c.epoch));
    if (it->split != Split::validation)
      throw ConfigError("checkpoint epoch " + std::to_string(c.epoch) + " was scored on the " + to_string(it->split) +
                        " split; selection uses validation");
    cards.push_back({c.epoch, it->card});
  }
  const int best = select_checkpoint(cards);
  const auto cp = std::find_if(manifest.begin(), manifest.end(), [&](const CheckpointRecord& c) { return c.epoch == best; });
  const auto card = std::find_if(cards.begin(), cards.end(), [&](const EpochCard& c) { return c.epoch == best; });
  return {*cp, card->card};
}

}  // namespace examkit
