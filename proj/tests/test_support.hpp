#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "examkit/examkit.hpp"

namespace examkit::testing {

inline std::filesystem::path data_dir() { return EXAMKIT_DATA_DIR; }
inline std::filesystem::path golden_dir() { return EXAMKIT_GOLDEN_DIR; }

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("test fixture missing: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string golden(const std::string& name) { return slurp(golden_dir() / name); }

inline std::vector<ExamTask> sample_tasks() { return parse_exam_file_strict(golden("sample_exam.json")); }

inline ExamTask sample_task(const std::vector<ExamTask>& tasks, std::int64_t task_id) {
  for (const auto& t : tasks)
    if (t.task_id == task_id) return t;
  throw ContractViolation("no sample task " + std::to_string(task_id));
}

inline std::vector<ExamTask> fixture_exams() {
  auto parsed = parse_exam_file(slurp(data_dir() / "fixture" / "exams.json"));
  assign_subjects(parsed.tasks, parse_subject_map(slurp(data_dir() / "fixture" / "subjects.json")));
  return parsed.tasks;
}

inline PrepareConfig fixture_config() { return parse_prepare_config(slurp(data_dir() / "fixture" / "config.json")); }

inline SolutionMap fixture_solutions() { return parse_solution_map(slurp(data_dir() / "fixture" / "solutions.json")); }

inline Json fixture_expected() { return Json::parse(slurp(data_dir() / "fixture" / "expected.json")); }

// Whitespace collapsed, en dashes and typographic apostrophes folded, so
// typeset reference text can be compared with generated text.
inline std::string loose(std::string_view s) {
  std::string out;
  bool space = false;
  std::size_t pos = 0;
  while (pos < s.size()) {
    char32_t cp = utf8::next(s, pos);
    if (utf8::is_space(cp)) {
      space = !out.empty();
      continue;
    }
    if (cp == U'–' || cp == U'—') cp = U'-';
    if (cp == U'’' || cp == U'ʼ') cp = U'\'';
    if (space) out += ' ';
    space = false;
    utf8::append(out, cp);
  }
  return out;
}

inline std::vector<AnswerLetter> letters(std::string_view s) {
  std::vector<AnswerLetter> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto l = canonical_letter(utf8::next(s, pos));
    if (!l) throw ContractViolation("not a canonical letter string");
    out.push_back(*l);
  }
  return out;
}

inline ExamTask make_mc(std::string test_id, std::int64_t task_id, std::string question,
                        std::vector<std::string> options, std::string gold,
                        std::string comment = "ТЕМА: Морфологія. Частини мови.") {
  ExamTask t;
  t.test_id = std::move(test_id);
  t.task_id = task_id;
  t.question = std::move(question);
  for (std::size_t i = 0; i < options.size(); ++i) {
    t.answers.push_back({kAllLetters[i], options[i]});
    t.answer_vheader.push_back(kAllLetters[i]);
  }
  t.correct_answer = letters(gold);
  t.comment = std::move(comment);
  return t;
}

inline ExamTask make_matching(std::string test_id, std::int64_t task_id, std::string question,
                              std::vector<std::string> options, std::string gold, std::size_t slots = 4,
                              std::string comment = "ТЕМА: Морфологія. Частини мови.") {
  ExamTask t = make_mc(std::move(test_id), task_id, std::move(question), std::move(options), gold, std::move(comment));
  for (std::size_t i = 1; i <= slots; ++i) t.answer_hheader.push_back(std::to_string(i));
  return t;
}

}  // namespace examkit::testing
