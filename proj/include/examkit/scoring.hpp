#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "examkit/corpus.hpp"
#include "examkit/extract.hpp"

namespace examkit {

enum class ZeroReason { multi_letter_mc, overlong_matching, absent, unparseable };

inline const char* to_string(ZeroReason reason) {
  switch (reason) {
    case ZeroReason::multi_letter_mc: return "multi_letter_mc";
    case ZeroReason::overlong_matching: return "overlong_matching";
    case ZeroReason::absent: return "absent";
    case ZeroReason::unparseable: return "unparseable";
  }
  return "?";
}

inline std::optional<ZeroReason> parse_zero_reason(std::string_view s) {
  for (auto r : {ZeroReason::multi_letter_mc, ZeroReason::overlong_matching, ZeroReason::absent,
                 ZeroReason::unparseable})
    if (s == to_string(r)) return r;
  return std::nullopt;
}

struct TaskScore {
  TaskKey key;
  TaskKind kind = TaskKind::mc;
  int points = 0;
  int max_points = 1;
  std::optional<ZeroReason> zero_reason;
  // Matching answer with fewer letters than slots; scored on what was given.
  bool short_answer = false;

  bool operator==(const TaskScore&) const = default;
};

// Single-answer: 1 point for exactly the gold letter, 0 when more than one
// letter was generated. Matching: 1 point per position equal to the gold
// letter, 0 overall when more letters than slots were generated.
inline TaskScore score_task(const ExamTask& task, const ExtractedAnswer& answer) {
  TaskScore score;
  score.key = task.key();
  score.kind = task.kind();
  score.max_points = task.max_points();
  if (answer.kind != score.kind)
    throw ContractViolation("answer for task " + task.key().str() + " was extracted as " +
                            to_string(answer.kind) + " but the task is " + to_string(score.kind));

  if (answer.status == ExtractStatus::absent) {
    score.zero_reason = ZeroReason::absent;
    return score;
  }
  if (answer.status == ExtractStatus::unparseable) {
    score.zero_reason = ZeroReason::unparseable;
    return score;
  }

  if (score.kind == TaskKind::mc) {
    if (answer.letters.size() > 1) {
      score.zero_reason = ZeroReason::multi_letter_mc;
      return score;
    }
    score.points = !answer.letters.empty() && !task.correct_answer.empty() &&
                           answer.letters[0] == task.correct_answer[0]
                       ? 1
                       : 0;
    return score;
  }

  if (answer.status == ExtractStatus::overlong || answer.letters.size() > task.answer_hheader.size()) {
    score.zero_reason = ZeroReason::overlong_matching;
    return score;
  }
  for (std::size_t i = 0; i < task.correct_answer.size() && i < answer.letters.size(); ++i)
    if (answer.letters[i] == task.correct_answer[i]) ++score.points;
  score.short_answer = answer.letter_count() < task.answer_hheader.size();
  return score;
}

struct SubjectScore {
  int single_answer = 0;
  int matching = 0;
  int total = 0;
  int max_single = 0;
  int max_matching = 0;

  int max_total() const { return max_single + max_matching; }
  bool operator==(const SubjectScore&) const = default;
};

struct ScoreCard {
  int single_answer = 0;
  int matching = 0;
  int total = 0;
  std::map<Subject, SubjectScore> by_subject;
  int max_single = 0;
  int max_matching = 0;

  int max_total() const { return max_single + max_matching; }

  SubjectScore subject(Subject s) const {
    auto it = by_subject.find(s);
    return it == by_subject.end() ? SubjectScore{} : it->second;
  }

  bool has_literature() const { return subject(Subject::literature).max_total() > 0; }

  bool operator==(const ScoreCard&) const = default;
};

using SubjectLookup = std::map<TaskKey, Subject>;

inline SubjectLookup subject_lookup(std::span<const ExamTask> tasks) {
  SubjectLookup out;
  for (const auto& t : tasks) out[t.key()] = t.subject;
  return out;
}

inline ScoreCard aggregate(std::span<const TaskScore> scores, const SubjectLookup& subjects) {
  ScoreCard card;
  for (const auto& s : scores) {
    auto it = subjects.find(s.key);
    if (it == subjects.end()) throw ConfigError("no subject known for task " + s.key.str());
    SubjectScore& sub = card.by_subject[it->second];
    if (s.kind == TaskKind::mc) {
      card.single_answer += s.points;
      card.max_single += s.max_points;
      sub.single_answer += s.points;
      sub.max_single += s.max_points;
    } else {
      card.matching += s.points;
      card.max_matching += s.max_points;
      sub.matching += s.points;
      sub.max_matching += s.max_points;
    }
    sub.total = sub.single_answer + sub.matching;
  }
  card.total = card.single_answer + card.matching;
  return card;
}

// Maxima for a task list: the card that a perfect answer sheet would get.
inline ScoreCard max_card(std::span<const ExamTask> tasks) {
  std::vector<TaskScore> scores;
  scores.reserve(tasks.size());
  for (const auto& t : tasks) {
    TaskScore s{t.key(), t.kind(), t.max_points(), t.max_points(), std::nullopt, false};
    scores.push_back(s);
  }
  return aggregate(scores, subject_lookup(tasks));
}

struct EpochCard {
  int epoch = 0;
  ScoreCard card;
};

// Epoch with the highest combined validation total; ties go to the earliest epoch.
inline int select_checkpoint(std::span<const EpochCard> cards) {
  if (cards.empty()) throw ContractViolation("select_checkpoint needs at least one scored checkpoint");
  const EpochCard* best = &cards.front();
  for (const auto& c : cards) {
    if (c.card.total > best->card.total || (c.card.total == best->card.total && c.epoch < best->epoch))
      best = &c;
  }
  return best->epoch;
}

// --- JSONL ------------------------------------------------------------------

inline Json score_to_json(const TaskScore& s) {
  Json j = {{"test_id", s.key.test_id}, {"task_id", s.key.task_id}, {"kind", to_string(s.kind)},
            {"points", s.points},       {"max_points", s.max_points}};
  j["zero_reason"] = s.zero_reason ? Json(to_string(*s.zero_reason)) : Json(nullptr);
  if (s.short_answer) j["short_answer"] = true;
  return j;
}

inline TaskScore score_from_json(const Json& j) {
  try {
    TaskScore s;
    s.key = {j.at("test_id").get<std::string>(), j.at("task_id").get<std::int64_t>()};
    auto kind = parse_task_kind(j.at("kind").get<std::string>());
    if (!kind) throw ConfigError("unknown task kind in score record");
    s.kind = *kind;
    s.points = j.at("points").get<int>();
    s.max_points = j.at("max_points").get<int>();
    if (j.contains("zero_reason") && !j["zero_reason"].is_null()) {
      s.zero_reason = parse_zero_reason(j["zero_reason"].get<std::string>());
      if (!s.zero_reason) throw ConfigError("unknown zero_reason in score record");
    }
    s.short_answer = j.value("short_answer", false);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed score record: ") + e.what());
  }
}

inline Json card_to_json(const ScoreCard& c) {
  Json by = Json::object();
  for (const auto& [subject, s] : c.by_subject)
    by[to_string(subject)] = {{"single_answer", s.single_answer}, {"matching", s.matching}, {"total", s.total},
                              {"max_single", s.max_single},       {"max_matching", s.max_matching}};
  return {{"single_answer", c.single_answer}, {"matching", c.matching},     {"total", c.total},
          {"max_single", c.max_single},       {"max_matching", c.max_matching}, {"by_subject", std::move(by)}};
}

inline ScoreCard card_from_json(const Json& j) {
  try {
    ScoreCard c;
    c.single_answer = j.at("single_answer").get<int>();
    c.matching = j.at("matching").get<int>();
    c.total = j.at("total").get<int>();
    c.max_single = j.at("max_single").get<int>();
    c.max_matching = j.at("max_matching").get<int>();
    if (j.contains("by_subject")) {
      for (auto it = j["by_subject"].begin(); it != j["by_subject"].end(); ++it) {
        auto subject = parse_subject(it.key());
        if (!subject) throw ConfigError("unknown subject " + it.key());
        const Json& v = it.value();
        c.by_subject[*subject] = {v.at("single_answer").get<int>(), v.at("matching").get<int>(),
                                  v.at("total").get<int>(), v.at("max_single").get<int>(),
                                  v.at("max_matching").get<int>()};
      }
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed score card: ") + e.what());
  }
}

inline void write_scores_jsonl(std::span<const TaskScore> scores, std::ostream& out) {
  for (const auto& s : scores) out << score_to_json(s).dump(-1, ' ', false) << '\n';
  if (!out) throw IoError("failed writing score records");
}

inline std::vector<TaskScore> read_scores_jsonl(std::istream& in) {
  std::vector<TaskScore> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (utf8::trim(line).empty()) continue;
    try {
      out.push_back(score_from_json(Json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("score line " + std::to_string(line_no) + ": " + e.what(), e.byte);
    }
  }
  return out;
}

}  // namespace examkit
