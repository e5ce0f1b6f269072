#pragma once

// Prompt and training-target construction for the three tuning modes:
// letter (answer letters only), cot (step-by-step solution) and cot_wt
// (topic line, then solution).

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "examkit/corpus.hpp"
#include "examkit/extract.hpp"

namespace examkit {

enum class PromptMode { letter, cot, cot_wt };

inline const char* to_string(PromptMode mode) {
  switch (mode) {
    case PromptMode::letter: return "letter";
    case PromptMode::cot: return "cot";
    case PromptMode::cot_wt: return "cot_wt";
  }
  return "?";
}

inline std::optional<PromptMode> parse_prompt_mode(std::string_view s) {
  if (s == "letter" || s == "al") return PromptMode::letter;
  if (s == "cot") return PromptMode::cot;
  if (s == "cot_wt" || s == "cot-wt") return PromptMode::cot_wt;
  return std::nullopt;
}

enum class Role { system, user };

inline const char* to_string(Role role) { return role == Role::system ? "system" : "user"; }

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatPrompt {
  std::vector<ChatMessage> messages;

  const ChatMessage& user_message() const {
    for (const auto& m : messages)
      if (m.role == Role::user) return m;
    throw ContractViolation("prompt has no user message");
  }

  bool operator==(const ChatPrompt&) const = default;
};

struct PromptOptions {
  // No system message by default.
  std::optional<std::string> system_message;
};

inline constexpr std::string_view kDetailedInstruction =
    "Дайте розгорнуту відповідь на завдання, починаючи з ключового слова \"Відповідь:\" та "
    "використовуючи лише наведені нижче варіанти.";
inline constexpr std::string_view kLetterInstruction =
    "Дайте лише літеру(и) відповіді на завдання, починаючи з ключового слова \"Відповідь:\" та "
    "використовуючи лише наведені нижче варіанти.";
inline constexpr std::string_view kTaskHeader = "Завдання:";
inline constexpr std::string_view kOptionsHeader = "Варіанти відповіді:";

// The user message: instruction, question, then one "<letter> - <text>" line
// per option. Matching stems stay inline in the question with their labels.
inline ChatPrompt build_prompt(const ExamTask& task, PromptMode mode,
                               const PromptOptions& options = {}) {
  std::string content(mode == PromptMode::letter ? kLetterInstruction : kDetailedInstruction);
  content += "\n\n";
  content += kTaskHeader;
  content += ' ';
  content += utf8::trim(task.question);
  content += "\n\n";
  content += kOptionsHeader;
  for (const auto& option : task.answers) {
    content += '\n';
    content += to_utf8(option.letter);
    content += " - ";
    content += option.text;
  }

  ChatPrompt prompt;
  if (options.system_message) prompt.messages.push_back({Role::system, *options.system_message});
  prompt.messages.push_back({Role::user, std::move(content)});
  return prompt;
}

// --- targets ----------------------------------------------------------------

struct Solution {
  std::string topic;          // "Морфологія. Частини мови"; may be empty
  std::string solution_text;  // step-by-step body, may end in its own answer line

  bool operator==(const Solution&) const = default;
};

using SolutionMap = std::map<TaskKey, Solution>;

// Splits a commentary block laid out as "Коментар / ТЕМА: ... / body" into
// topic and solution body.
inline Solution solution_from_commentary(std::string_view raw) {
  std::string text = utf8::trim(raw);
  if (utf8::starts_with(text, kCommentaryHeader))
    text = utf8::trim(std::string_view(text).substr(kCommentaryHeader.size()));
  Solution solution;
  if (utf8::starts_with(text, kTopicKeyword)) {
    const auto nl = text.find('\n');
    if (auto topic = parse_topic(text)) solution.topic = topic->joined();
    text = nl == std::string::npos ? std::string() : utf8::trim(std::string_view(text).substr(nl + 1));
  }
  solution.solution_text = std::move(text);
  return solution;
}

// {"<test_id>": {"<task_id>": {"topic": "...", "solution_text": "..."}}}
inline SolutionMap parse_solution_map(std::string_view bytes) {
  Json doc;
  try {
    doc = Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!doc.is_object()) throw ConfigError("solutions file must be a JSON object keyed by test_id");
  SolutionMap map;
  for (auto test = doc.begin(); test != doc.end(); ++test) {
    if (!test.value().is_object())
      throw ConfigError("solutions for test_id " + test.key() + " must be an object");
    for (auto task = test.value().begin(); task != test.value().end(); ++task) {
      std::int64_t task_id = 0;
      try {
        std::size_t used = 0;
        task_id = std::stoll(task.key(), &used);
        if (used != task.key().size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError("solution key " + task.key() + " under test_id " + test.key() +
                          " is not a task_id");
      }
      const Json& entry = task.value();
      if (!entry.is_object() || !entry.contains("solution_text") || !entry["solution_text"].is_string())
        throw ConfigError("solution " + test.key() + "/" + task.key() + " needs a solution_text string");
      Solution s;
      s.solution_text = entry["solution_text"].get<std::string>();
      if (entry.contains("topic") && entry["topic"].is_string()) s.topic = entry["topic"].get<std::string>();
      map[TaskKey{test.key(), task_id}] = std::move(s);
    }
  }
  return map;
}

inline std::string serialize_solution_map(const SolutionMap& map) {
  Json doc = Json::object();
  for (const auto& [key, s] : map)
    doc[key.test_id][std::to_string(key.task_id)] = Json{{"topic", s.topic}, {"solution_text", s.solution_text}};
  return doc.dump(2, ' ', false) + "\n";
}

struct TargetText {
  std::string content;
  std::vector<AnswerLetter> terminal_answer;

  bool operator==(const TargetText&) const = default;
};

// "Відповідь – В." for single-answer tasks,
// "Відповідь: 1 – Б, 2 – Д, 3 – А, 4 – Г." for matching tasks.
inline std::string answer_segment(const ExamTask& task) {
  if (task.kind() == TaskKind::mc) return "Відповідь – " + letters_to_string(task.correct_answer) + ".";
  std::string out = "Відповідь: ";
  for (std::size_t i = 0; i < task.answer_hheader.size(); ++i) {
    if (i) out += ", ";
    out += task.answer_hheader[i] + " – " + to_utf8(task.correct_answer[i]);
  }
  return out + ".";
}

inline TargetText build_target(const ExamTask& task, const Solution* solution, PromptMode mode) {
  if (task.correct_answer.empty())
    throw ConfigError("task " + task.key().str() + " has no correct answer to build a target from");

  TargetText target;
  target.terminal_answer = task.correct_answer;
  if (mode == PromptMode::letter) {
    target.content = "Відповідь: " + letters_to_string(task.correct_answer);
    return target;
  }

  if (!solution || utf8::trim(solution->solution_text).empty())
    throw ConfigError("mode " + std::string(to_string(mode)) + " needs a solution for task " +
                      task.key().str());

  std::string body = utf8::trim(solution->solution_text);
  const ExtractedAnswer own = extract_answer(body, task);
  if (own.status == ExtractStatus::absent || own.status == ExtractStatus::unparseable) {
    body += "\n" + answer_segment(task);
  } else if (!own.matches(task.correct_answer)) {
    throw ConfigError("solution for task " + task.key().str() + " ends in answer \"" + own.raw_span +
                      "\" which disagrees with correct_answer " +
                      letters_to_string(task.correct_answer));
  }

  if (mode == PromptMode::cot_wt) {
    std::string topic = utf8::trim(solution->topic);
    if (topic.empty())
      if (auto parsed = topic_of(task)) topic = parsed->joined();
    while (!topic.empty() && topic.back() == '.') topic.pop_back();
    if (topic.empty())
      throw ConfigError("mode cot_wt needs a topic for task " + task.key().str());
    target.content = std::string(kTopicKeyword) + " " + topic + ".\n" + body;
  } else {
    target.content = std::move(body);
  }
  return target;
}

inline TargetText build_target(const ExamTask& task, const std::optional<Solution>& solution,
                               PromptMode mode) {
  return build_target(task, solution ? &*solution : nullptr, mode);
}

// --- JSONL ------------------------------------------------------------------

struct TrainingRecord {
  TaskKey key;
  PromptMode mode = PromptMode::letter;
  ChatPrompt prompt;
  std::optional<TargetText> target;  // absent for evaluation prompts

  bool operator==(const TrainingRecord&) const = default;
};

inline Json record_to_json(const TrainingRecord& r) {
  Json messages = Json::array();
  for (const auto& m : r.prompt.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  Json out = {{"test_id", r.key.test_id}, {"task_id", r.key.task_id}, {"mode", to_string(r.mode)},
              {"messages", std::move(messages)}};
  if (r.target) {
    Json answer = Json::array();
    for (AnswerLetter l : r.target->terminal_answer) answer.push_back(to_utf8(l));
    out["target"] = {{"content", r.target->content}, {"answer", std::move(answer)}};
  }
  return out;
}

inline TrainingRecord record_from_json(const Json& j) {
  try {
    TrainingRecord r;
    r.key = {j.at("test_id").get<std::string>(), j.at("task_id").get<std::int64_t>()};
    const auto mode = parse_prompt_mode(j.at("mode").get<std::string>());
    if (!mode) throw ConfigError("unknown mode " + j.at("mode").get<std::string>());
    r.mode = *mode;
    for (const auto& m : j.at("messages")) {
      const auto role = m.at("role").get<std::string>();
      if (role != "system" && role != "user") throw ConfigError("unsupported role " + role);
      r.prompt.messages.push_back({role == "system" ? Role::system : Role::user, m.at("content").get<std::string>()});
    }
    if (j.contains("target")) {
      TargetText t;
      t.content = j["target"].at("content").get<std::string>();
      for (const auto& l : j["target"].at("answer")) {
        auto letter = parse_letter(l.get<std::string>());
        if (!letter) throw ConfigError("target answer has non-canonical letter");
        t.terminal_answer.push_back(*letter);
      }
      r.target = std::move(t);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed prompt record: ") + e.what());
  }
}

// One JSON object per line: test_id, task_id, mode, messages, target.
inline std::size_t emit_training_jsonl(std::span<const TrainingRecord> records, std::ostream& sink) {
  std::size_t written = 0;
  for (const auto& r : records) {
    sink << record_to_json(r).dump(-1, ' ', false) << '\n';
    if (!sink) throw IoError("failed writing prompt record " + std::to_string(written + 1));
    ++written;
  }
  sink.flush();
  if (!sink) throw IoError("failed flushing prompt records");
  return written;
}

inline std::vector<TrainingRecord> parse_training_jsonl(std::istream& in) {
  std::vector<TrainingRecord> out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (utf8::trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_start + e.byte);
    }
    out.push_back(record_from_json(j));
  }
  return out;
}

// Builds prompt/target pairs for a task list. Solutions are looked up by
// task key; pass `with_targets = false` for evaluation prompts.
inline std::vector<TrainingRecord> build_records(std::span<const ExamTask> tasks, PromptMode mode,
                                                 const SolutionMap& solutions, bool with_targets,
                                                 const PromptOptions& options = {}) {
  std::vector<TrainingRecord> out;
  out.reserve(tasks.size());
  for (const auto& task : tasks) {
    TrainingRecord r{task.key(), mode, build_prompt(task, mode, options), std::nullopt};
    if (with_targets) {
      auto it = solutions.find(task.key());
      r.target = build_target(task, it == solutions.end() ? nullptr : &it->second, mode);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace examkit
