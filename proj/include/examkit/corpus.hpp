#pragma once

// Exam task data model and the JSON exam-file schema
// (task_id, question, answers, answer_vheader, answer_hheader,
// correct_answer, comment, with_photo, test_id).

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "examkit/error.hpp"
#include "examkit/utf8.hpp"

namespace examkit {

using Json = nlohmann::ordered_json;

// А Б В Г Д, in exam order.
enum class AnswerLetter : std::uint8_t { A, B, V, H, D };

inline constexpr std::array<AnswerLetter, 5> kAllLetters = {
    AnswerLetter::A, AnswerLetter::B, AnswerLetter::V, AnswerLetter::H, AnswerLetter::D};

inline constexpr char32_t codepoint(AnswerLetter letter) {
  constexpr std::array<char32_t, 5> cps = {U'А', U'Б', U'В', U'Г', U'Д'};
  return cps[static_cast<std::size_t>(letter)];
}

inline std::string to_utf8(AnswerLetter letter) { return utf8::encode(codepoint(letter)); }

// Canonical Cyrillic capitals only. Lookalikes are handled by extract.
inline std::optional<AnswerLetter> canonical_letter(char32_t cp) {
  for (AnswerLetter letter : kAllLetters)
    if (codepoint(letter) == cp) return letter;
  return std::nullopt;
}

inline std::optional<AnswerLetter> parse_letter(std::string_view s) {
  std::size_t pos = 0;
  if (s.empty()) return std::nullopt;
  const char32_t cp = utf8::next(s, pos);
  if (pos != s.size()) return std::nullopt;
  return canonical_letter(cp);
}

inline std::string letters_to_string(std::span<const AnswerLetter> letters) {
  std::string out;
  for (AnswerLetter letter : letters) out += to_utf8(letter);
  return out;
}

enum class TaskKind { mc, matching };
enum class Subject { language, literature };
enum class Split { train, validation, test };

inline const char* to_string(TaskKind kind) { return kind == TaskKind::mc ? "mc" : "matching"; }

inline const char* to_string(Subject subject) {
  return subject == Subject::language ? "language" : "literature";
}

inline const char* to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

inline std::optional<TaskKind> parse_task_kind(std::string_view s) {
  if (s == "mc") return TaskKind::mc;
  if (s == "matching") return TaskKind::matching;
  return std::nullopt;
}

inline std::optional<Subject> parse_subject(std::string_view s) {
  if (s == "language") return Subject::language;
  if (s == "literature") return Subject::literature;
  return std::nullopt;
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  return std::nullopt;
}

struct TaskKey {
  std::string test_id;
  std::int64_t task_id = 0;

  auto operator<=>(const TaskKey&) const = default;
  bool operator==(const TaskKey&) const = default;

  std::string str() const { return test_id + "/" + std::to_string(task_id); }
};

struct AnswerOption {
  AnswerLetter letter = AnswerLetter::A;
  std::string text;

  bool operator==(const AnswerOption&) const = default;
};

struct ExamTask {
  std::int64_t task_id = 0;
  std::string question;
  std::vector<AnswerOption> answers;
  std::vector<AnswerLetter> answer_vheader;
  std::vector<std::string> answer_hheader;
  std::vector<AnswerLetter> correct_answer;
  std::string comment;
  bool with_photo = false;
  std::string test_id;
  // Not part of the file schema; filled from sidecar metadata.
  Subject subject = Subject::language;

  // Keys in the order they appeared in the source record, plus any fields
  // this schema does not know about. Both are replayed on serialization.
  std::vector<std::string> field_order;
  Json extra_fields = Json::object();

  TaskKey key() const { return {test_id, task_id}; }

  TaskKind kind() const { return answer_hheader.empty() ? TaskKind::mc : TaskKind::matching; }

  int max_points() const {
    return kind() == TaskKind::mc ? 1 : static_cast<int>(answer_hheader.size());
  }

  bool operator==(const ExamTask&) const = default;
};

inline TaskKind classify_task(const ExamTask& task) { return task.kind(); }

struct Topic {
  std::vector<std::string> path;

  // "Морфологія. Частини мови"
  std::string joined() const {
    std::string out;
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (i) out += ". ";
      out += path[i];
    }
    return out;
  }

  bool operator==(const Topic&) const = default;
};

inline constexpr std::string_view kTopicKeyword = "ТЕМА:";
inline constexpr std::string_view kCommentaryHeader = "Коментар";

// Parses "ТЕМА: Морфологія. Частини мови." (optionally preceded by a
// "Коментар" line). Only the first line after the keyword is the topic.
inline std::optional<Topic> parse_topic(std::string_view comment) {
  std::string text = utf8::trim(comment);
  if (utf8::starts_with(text, kCommentaryHeader)) {
    text = utf8::trim(std::string_view(text).substr(kCommentaryHeader.size()));
    if (utf8::starts_with(text, ":")) text = utf8::trim(std::string_view(text).substr(1));
  }
  if (!utf8::starts_with(text, kTopicKeyword)) return std::nullopt;
  std::string_view rest = std::string_view(text).substr(kTopicKeyword.size());
  if (const auto nl = rest.find('\n'); nl != std::string_view::npos) rest = rest.substr(0, nl);
  std::string line = utf8::trim(rest);
  while (!line.empty() && line.back() == '.') line = utf8::trim(line.substr(0, line.size() - 1));

  Topic topic;
  std::size_t start = 0;
  while (start <= line.size()) {
    const auto end = line.find(". ", start);
    const std::string segment =
        utf8::trim(std::string_view(line).substr(start, end == std::string::npos ? std::string::npos
                                                                                   : end - start));
    if (!segment.empty()) topic.path.push_back(segment);
    if (end == std::string::npos) break;
    start = end + 2;
  }
  if (topic.path.empty()) return std::nullopt;
  return topic;
}

inline std::optional<Topic> topic_of(const ExamTask& task) { return parse_topic(task.comment); }

// --- validation -------------------------------------------------------------

struct ValidationIssue {
  std::size_t record_index = 0;
  std::string test_id;
  std::optional<std::int64_t> task_id;
  std::string message;

  std::string describe() const {
    std::string where = "record " + std::to_string(record_index);
    if (task_id) where += " (test_id " + test_id + ", task_id " + std::to_string(*task_id) + ")";
    return where + ": " + message;
  }
};

// Invariant violations of a structurally parsed task; empty when valid.
// An empty correct_answer is allowed here: cleaning removes such tasks with
// an explicit no_answer record.
inline std::vector<std::string> check_invariants(const ExamTask& task) {
  std::vector<std::string> problems;
  if (task.answers.empty()) problems.push_back("task has no answer options");
  if (task.answers.size() != task.answer_vheader.size()) {
    problems.push_back("answers and answer_vheader differ in length");
  } else {
    for (std::size_t i = 0; i < task.answers.size(); ++i) {
      if (task.answers[i].letter != task.answer_vheader[i]) {
        problems.push_back("answer letter at position " + std::to_string(i) +
                           " does not match answer_vheader");
        break;
      }
    }
  }
  for (std::size_t i = 0; i < task.answer_vheader.size(); ++i)
    for (std::size_t j = i + 1; j < task.answer_vheader.size(); ++j)
      if (task.answer_vheader[i] == task.answer_vheader[j])
        problems.push_back("answer_vheader repeats letter " + to_utf8(task.answer_vheader[i]));
  for (AnswerLetter letter : task.correct_answer) {
    if (std::find(task.answer_vheader.begin(), task.answer_vheader.end(), letter) ==
        task.answer_vheader.end())
      problems.push_back("correct_answer letter " + to_utf8(letter) + " not in answer_vheader");
  }
  if (!task.correct_answer.empty()) {
    const std::size_t expected = task.answer_hheader.empty() ? 1 : task.answer_hheader.size();
    if (task.correct_answer.size() != expected)
      problems.push_back("correct_answer has " + std::to_string(task.correct_answer.size()) +
                         " letters, expected " + std::to_string(expected));
  }
  return problems;
}

// --- parsing ----------------------------------------------------------------

struct ParseResult {
  std::vector<ExamTask> tasks;
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
};

namespace detail {

inline const std::array<std::string_view, 9>& schema_fields() {
  static const std::array<std::string_view, 9> fields = {
      "task_id", "question",   "answers",    "answer_vheader", "answer_hheader",
      "correct_answer", "comment", "with_photo", "test_id"};
  return fields;
}

inline bool is_schema_field(std::string_view name) {
  const auto& f = schema_fields();
  return std::find(f.begin(), f.end(), name) != f.end();
}

struct RecordReader {
  const Json& record;
  std::vector<std::string>& problems;

  const Json* field(const char* name) {
    auto it = record.find(name);
    if (it == record.end()) {
      problems.push_back(std::string("missing field ") + name);
      return nullptr;
    }
    return &*it;
  }

  std::string string_field(const char* name) {
    const Json* v = field(name);
    if (!v) return {};
    if (!v->is_string()) {
      problems.push_back(std::string(name) + " must be a string");
      return {};
    }
    return v->get<std::string>();
  }

  std::optional<AnswerLetter> letter(const Json& v, const char* where) {
    if (!v.is_string()) {
      problems.push_back(std::string(where) + " entries must be strings");
      return std::nullopt;
    }
    const auto s = v.get<std::string>();
    auto letter = parse_letter(s);
    if (!letter) problems.push_back(std::string(where) + " has non-canonical letter \"" + s + "\"");
    return letter;
  }

  std::vector<AnswerLetter> letter_list(const char* name) {
    std::vector<AnswerLetter> out;
    const Json* v = field(name);
    if (!v) return out;
    if (!v->is_array()) {
      problems.push_back(std::string(name) + " must be an array");
      return out;
    }
    for (const auto& item : *v)
      if (auto l = letter(item, name)) out.push_back(*l);
    return out;
  }
};

}  // namespace detail

// Builds one task from a JSON record. Problems (structural and invariant)
// are appended to `problems`; the returned task is meaningful only when
// no problems were added.
inline ExamTask task_from_json(const Json& record, std::vector<std::string>& problems) {
  ExamTask task;
  if (!record.is_object()) {
    problems.push_back("record is not an object");
    return task;
  }
  detail::RecordReader reader{record, problems};

  if (const Json* id = reader.field("task_id")) {
    if (id->is_number_integer())
      task.task_id = id->get<std::int64_t>();
    else
      problems.push_back("task_id must be an integer");
  }
  task.question = reader.string_field("question");
  if (const Json* answers = reader.field("answers")) {
    if (!answers->is_array()) {
      problems.push_back("answers must be an array");
    } else {
      for (const auto& a : *answers) {
        if (!a.is_object() || !a.contains("answer") || !a.contains("text") ||
            !a["text"].is_string()) {
          problems.push_back("answers entries need string fields answer and text");
          continue;
        }
        if (auto letter = reader.letter(a["answer"], "answers"))
          task.answers.push_back({*letter, a["text"].get<std::string>()});
      }
    }
  }
  task.answer_vheader = reader.letter_list("answer_vheader");
  if (const Json* hh = reader.field("answer_hheader")) {
    if (!hh->is_array()) {
      problems.push_back("answer_hheader must be an array");
    } else {
      for (const auto& label : *hh) {
        if (label.is_string())
          task.answer_hheader.push_back(label.get<std::string>());
        else
          problems.push_back("answer_hheader entries must be strings");
      }
    }
  }
  task.correct_answer = reader.letter_list("correct_answer");
  task.comment = reader.string_field("comment");
  if (const Json* photo = reader.field("with_photo")) {
    if (photo->is_boolean())
      task.with_photo = photo->get<bool>();
    else
      problems.push_back("with_photo must be a boolean");
  }
  task.test_id = reader.string_field("test_id");

  for (auto it = record.begin(); it != record.end(); ++it) {
    task.field_order.push_back(it.key());
    if (!detail::is_schema_field(it.key())) task.extra_fields[it.key()] = it.value();
  }

  if (problems.empty())
    for (auto& p : check_invariants(task)) problems.push_back(std::move(p));
  return task;
}

inline Json task_to_json(const ExamTask& task) {
  auto known = [&](std::string_view name) -> std::optional<Json> {
    if (name == "task_id") return Json(task.task_id);
    if (name == "question") return Json(task.question);
    if (name == "answers") {
      Json arr = Json::array();
      for (const auto& a : task.answers) arr.push_back({{"answer", to_utf8(a.letter)}, {"text", a.text}});
      return arr;
    }
    if (name == "answer_vheader" || name == "correct_answer") {
      const auto& src = name == "answer_vheader" ? task.answer_vheader : task.correct_answer;
      Json arr = Json::array();
      for (AnswerLetter l : src) arr.push_back(to_utf8(l));
      return arr;
    }
    if (name == "answer_hheader") return Json(task.answer_hheader);
    if (name == "comment") return Json(task.comment);
    if (name == "with_photo") return Json(task.with_photo);
    if (name == "test_id") return Json(task.test_id);
    return std::nullopt;
  };

  Json out = Json::object();
  for (const auto& name : task.field_order) {
    if (auto v = known(name))
      out[name] = std::move(*v);
    else if (task.extra_fields.contains(name))
      out[name] = task.extra_fields.at(name);
  }
  for (auto name : detail::schema_fields())
    if (!out.contains(std::string(name))) out[std::string(name)] = *known(name);
  for (auto it = task.extra_fields.begin(); it != task.extra_fields.end(); ++it)
    if (!out.contains(it.key())) out[it.key()] = it.value();
  return out;
}

// Parses a whole exam file (a JSON array of task records). Syntax errors
// throw ParseError with the byte offset; invalid records are collected in
// the result's issue list and left out of `tasks`.
inline ParseResult parse_exam_file(std::string_view bytes) {
  Json doc;
  try {
    doc = Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!doc.is_array()) throw ParseError("exam file must be a JSON array of tasks", 0);

  ParseResult result;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    std::vector<std::string> problems;
    ExamTask task = task_from_json(doc[i], problems);
    if (problems.empty()) {
      result.tasks.push_back(std::move(task));
      continue;
    }
    for (auto& p : problems) {
      ValidationIssue issue;
      issue.record_index = i;
      if (doc[i].is_object()) {
        if (doc[i].contains("test_id") && doc[i]["test_id"].is_string())
          issue.test_id = doc[i]["test_id"].get<std::string>();
        if (doc[i].contains("task_id") && doc[i]["task_id"].is_number_integer())
          issue.task_id = doc[i]["task_id"].get<std::int64_t>();
      }
      issue.message = std::move(p);
      result.issues.push_back(std::move(issue));
    }
  }
  return result;
}

// Like parse_exam_file but throws ValidationError on the first issue.
inline std::vector<ExamTask> parse_exam_file_strict(std::string_view bytes) {
  ParseResult result = parse_exam_file(bytes);
  if (!result.ok()) throw ValidationError(result.issues.front().describe());
  return std::move(result.tasks);
}

inline std::string serialize_exam_file(std::span<const ExamTask> tasks) {
  Json arr = Json::array();
  for (const auto& t : tasks) arr.push_back(task_to_json(t));
  return arr.dump(2, ' ', false) + "\n";
}

// --- subjects ---------------------------------------------------------------

// test_id -> subject, from the sidecar metadata file.
using SubjectMap = std::map<std::string, Subject>;

inline SubjectMap parse_subject_map(std::string_view bytes) {
  Json doc;
  try {
    doc = Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!doc.is_object()) throw ConfigError("subject metadata must be a JSON object");
  SubjectMap map;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    std::optional<Subject> subject;
    if (it.value().is_string()) subject = parse_subject(it.value().get<std::string>());
    if (!subject)
      throw ConfigError("subject for test_id " + it.key() +
                        " must be \"language\" or \"literature\"");
    map[it.key()] = *subject;
  }
  return map;
}

inline constexpr std::string_view kLiteratureTopicPrefix = "Українська література";

// Sidecar entry when present, otherwise literature iff the topic starts with
// "Українська література".
inline Subject resolve_subject(const ExamTask& task, const SubjectMap& subjects) {
  if (auto it = subjects.find(task.test_id); it != subjects.end()) return it->second;
  if (auto topic = topic_of(task); topic && utf8::starts_with(topic->path.front(), kLiteratureTopicPrefix))
    return Subject::literature;
  return Subject::language;
}

inline void assign_subjects(std::span<ExamTask> tasks, const SubjectMap& subjects) {
  for (auto& t : tasks) t.subject = resolve_subject(t, subjects);
}

}  // namespace examkit
