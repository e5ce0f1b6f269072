#pragma once

// Corpus cleaning, duplicate and paraphrase detection, exam-level split
// assignment, cross-split leakage removal, and answer-option shuffling.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "examkit/corpus.hpp"
#include "examkit/rng.hpp"
#include "examkit/utf8.hpp"

namespace examkit {

// Patterns are ECMAScript regexes matched bytewise against the whole
// normalized text (lowercase, apostrophes joined, punctuation replaced by
// single spaces). The bounded matching-instruction pattern skips questions
// that carry numbered stems.
inline std::vector<std::string> default_generic_patterns() {
  return {
      "установіть відповідність",
      "установіть відповідність між [^0-9]{1,240}",
      "доберіть відповідники",
      "іменник",
      "прикметник",
      "числівник",
      "займенник",
      "дієслово",
      "прислівник",
      "прийменник",
      "сполучник",
      "частка",
      "вигук",
      "дієприкметник",
      "дієприслівник",
      "форма дієслова.*",
      "службова частина мови.*",
  };
}

class GenericFilter {
 public:
  GenericFilter() : GenericFilter(default_generic_patterns()) {}

  explicit GenericFilter(const std::vector<std::string>& patterns) {
    for (const auto& p : patterns) {
      try {
        patterns_.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
      } catch (const std::regex_error& e) {
        throw ConfigError("invalid generic pattern \"" + p + "\": " + e.what());
      }
    }
  }

  // True for empty text as well: empty text is never duplicate evidence.
  bool is_generic(const std::string& normalized) const {
    if (normalized.empty()) return true;
    return std::any_of(patterns_.begin(), patterns_.end(),
                       [&](const std::regex& re) { return std::regex_match(normalized, re); });
  }

 private:
  std::vector<std::regex> patterns_;
};

enum class RemovalReason { duplicate, paraphrase, no_answer, no_topic, has_photo, leakage };

inline const char* to_string(RemovalReason reason) {
  switch (reason) {
    case RemovalReason::duplicate: return "duplicate";
    case RemovalReason::paraphrase: return "paraphrase";
    case RemovalReason::no_answer: return "no_answer";
    case RemovalReason::no_topic: return "no_topic";
    case RemovalReason::has_photo: return "has_photo";
    case RemovalReason::leakage: return "leakage";
  }
  return "?";
}

struct RemovalRecord {
  TaskKey key;
  RemovalReason reason = RemovalReason::duplicate;
  std::string evidence;

  bool operator==(const RemovalRecord&) const = default;
};

struct CleanConfig {
  double paraphrase_threshold = 0.9;
  std::vector<std::string> generic_patterns = default_generic_patterns();
  // When set, duplicate survivors are chosen test first, then train, then
  // validation, so cleaning never takes a task away from the test exams.
  std::map<std::string, Split> split_assignment;
};

struct CleanResult {
  std::vector<ExamTask> kept;
  std::vector<RemovalRecord> removals;
};

namespace detail {

inline std::string exact_signature(const ExamTask& t) {
  std::vector<std::string> options;
  for (const auto& a : t.answers) options.push_back(utf8::normalize_for_matching(a.text));
  std::sort(options.begin(), options.end());
  std::string sig = utf8::normalize_for_matching(t.question);
  for (const auto& o : options) {
    sig += '\x1f';
    sig += o;
  }
  return sig;
}

// Sorted, de-duplicated token hashes of question and option texts.
inline std::vector<std::uint64_t> token_set(const ExamTask& t) {
  std::vector<std::uint64_t> tokens;
  auto add = [&](std::string_view text) {
    const std::string norm = utf8::normalize_for_matching(text);
    for (auto tok : utf8::split_spaces(norm)) tokens.push_back(fnv1a(tok));
  };
  add(t.question);
  for (const auto& a : t.answers) add(a.text);
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

inline double jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++common;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

inline int split_rank(const std::map<std::string, Split>& assignment, const std::string& test_id) {
  if (assignment.empty()) return 0;
  auto it = assignment.find(test_id);
  if (it == assignment.end()) return 3;
  switch (it->second) {
    case Split::test: return 0;
    case Split::train: return 1;
    case Split::validation: return 2;
  }
  return 3;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace detail

// Token-set Jaccard similarity of two tasks' normalized question and option text.
inline double task_similarity(const ExamTask& a, const ExamTask& b) {
  return detail::jaccard(detail::token_set(a), detail::token_set(b));
}

// Removes, in order: exact duplicates, paraphrases (similarity above the
// threshold), tasks without a correct answer, tasks without a topic, and
// tasks with photos. Kept tasks stay in input order.
inline CleanResult clean_corpus(std::span<const ExamTask> tasks, const CleanConfig& config) {
  const std::size_t n = tasks.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const int ra = detail::split_rank(config.split_assignment, tasks[a].test_id);
    const int rb = detail::split_rank(config.split_assignment, tasks[b].test_id);
    if (ra != rb) return ra < rb;
    if (tasks[a].key() != tasks[b].key()) return tasks[a].key() < tasks[b].key();
    return a < b;
  });

  std::vector<std::optional<RemovalRecord>> removed(n);

  std::unordered_map<std::string, std::size_t> survivors;
  for (std::size_t idx : order) {
    auto [it, inserted] = survivors.emplace(detail::exact_signature(tasks[idx]), idx);
    if (!inserted)
      removed[idx] = RemovalRecord{tasks[idx].key(), RemovalReason::duplicate, tasks[it->second].key().str()};
  }

  // Each remaining task is compared to the higher-ranked tasks already kept.
  std::vector<std::vector<std::uint64_t>> tokens(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!removed[i]) tokens[i] = detail::token_set(tasks[i]);
  std::vector<std::size_t> kept_so_far;
  for (std::size_t idx : order) {
    if (removed[idx]) continue;
    const double size_i = static_cast<double>(tokens[idx].size());
    for (std::size_t other : kept_so_far) {
      const double size_o = static_cast<double>(tokens[other].size());
      // Jaccard can't exceed min/max of the set sizes.
      if (std::min(size_i, size_o) <= config.paraphrase_threshold * std::max(size_i, size_o)) continue;
      if (detail::jaccard(tokens[idx], tokens[other]) > config.paraphrase_threshold) {
        removed[idx] = RemovalRecord{tasks[idx].key(), RemovalReason::paraphrase, tasks[other].key().str()};
        break;
      }
    }
    if (!removed[idx]) kept_so_far.push_back(idx);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (removed[i]) continue;
    const ExamTask& t = tasks[i];
    if (t.correct_answer.empty())
      removed[i] = RemovalRecord{t.key(), RemovalReason::no_answer, "correct_answer is empty"};
    else if (!topic_of(t))
      removed[i] = RemovalRecord{t.key(), RemovalReason::no_topic, "comment has no ТЕМА: line"};
    else if (t.with_photo)
      removed[i] = RemovalRecord{t.key(), RemovalReason::has_photo, "with_photo"};
  }

  CleanResult result;
  for (std::size_t i = 0; i < n; ++i) {
    if (removed[i])
      result.removals.push_back(std::move(*removed[i]));
    else
      result.kept.push_back(tasks[i]);
  }
  return result;
}

// Groups of task indices connected by a shared normalized question or a
// shared non-generic option text. Singletons are not reported.
inline std::vector<std::vector<std::size_t>> detect_duplicates(std::span<const ExamTask> tasks,
                                                               const GenericFilter& filter) {
  detail::UnionFind uf(tasks.size());
  std::unordered_map<std::string, std::size_t> by_question;
  std::unordered_map<std::string, std::size_t> by_option;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::string q = utf8::normalize_for_matching(tasks[i].question);
    if (!filter.is_generic(q)) {
      auto [it, inserted] = by_question.emplace(q, i);
      if (!inserted) uf.unite(i, it->second);
    }
    for (const auto& a : tasks[i].answers) {
      const std::string o = utf8::normalize_for_matching(a.text);
      if (filter.is_generic(o)) continue;
      auto [it, inserted] = by_option.emplace(o, i);
      if (!inserted) uf.unite(i, it->second);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < tasks.size(); ++i) groups[uf.find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : groups)
    if (members.size() > 1) out.push_back(std::move(members));
  return out;
}

inline std::vector<std::vector<std::size_t>> detect_duplicates(std::span<const ExamTask> tasks,
                                                               const std::vector<std::string>& patterns) {
  return detect_duplicates(tasks, GenericFilter(patterns));
}

// Lookup of the non-generic question and option texts of one task list.
class DuplicateIndex {
 public:
  DuplicateIndex(std::span<const ExamTask> tasks, const GenericFilter& filter) : filter_(&filter) {
    for (const auto& t : tasks) {
      const std::string q = utf8::normalize_for_matching(t.question);
      if (!filter.is_generic(q)) questions_.emplace(q, t.key());
      for (const auto& a : t.answers) {
        const std::string o = utf8::normalize_for_matching(a.text);
        if (!filter.is_generic(o)) options_.emplace(o, t.key());
      }
    }
  }

  // Key of an indexed task sharing a question or option text with `task`.
  std::optional<TaskKey> match(const ExamTask& task) const {
    const std::string q = utf8::normalize_for_matching(task.question);
    if (!filter_->is_generic(q))
      if (auto it = questions_.find(q); it != questions_.end()) return it->second;
    for (const auto& a : task.answers) {
      const std::string o = utf8::normalize_for_matching(a.text);
      if (filter_->is_generic(o)) continue;
      if (auto it = options_.find(o); it != options_.end()) return it->second;
    }
    return std::nullopt;
  }

 private:
  const GenericFilter* filter_;
  std::unordered_map<std::string, TaskKey> questions_;
  std::unordered_map<std::string, TaskKey> options_;
};

// Duplicate groups that contain tasks from both lists.
inline std::vector<std::vector<TaskKey>> cross_split_groups(std::span<const ExamTask> a,
                                                            std::span<const ExamTask> b,
                                                            const GenericFilter& filter) {
  std::vector<ExamTask> both(a.begin(), a.end());
  both.insert(both.end(), b.begin(), b.end());
  std::vector<std::vector<TaskKey>> out;
  for (const auto& group : detect_duplicates(both, filter)) {
    const bool has_a = std::any_of(group.begin(), group.end(), [&](std::size_t i) { return i < a.size(); });
    const bool has_b = std::any_of(group.begin(), group.end(), [&](std::size_t i) { return i >= a.size(); });
    if (!has_a || !has_b) continue;
    std::vector<TaskKey> keys;
    for (std::size_t i : group) keys.push_back(both[i].key());
    out.push_back(std::move(keys));
  }
  return out;
}

struct SplitSet {
  std::vector<ExamTask> train;
  std::vector<ExamTask> validation;
  std::vector<ExamTask> test;
  std::vector<RemovalRecord> removals;

  std::vector<ExamTask>& operator[](Split s) {
    return s == Split::train ? train : s == Split::validation ? validation : test;
  }
  const std::vector<ExamTask>& operator[](Split s) const {
    return s == Split::train ? train : s == Split::validation ? validation : test;
  }

  bool operator==(const SplitSet&) const = default;
};

// Groups tasks by exam. Every test_id must be assigned; test exams may only
// hold language tasks.
inline SplitSet split_corpus(std::span<const ExamTask> tasks, const std::map<std::string, Split>& assignment) {
  SplitSet out;
  for (const auto& t : tasks) {
    auto it = assignment.find(t.test_id);
    if (it == assignment.end()) throw ConfigError("test_id " + t.test_id + " has no split assignment");
    if (it->second == Split::test && t.subject != Subject::language)
      throw ConfigError("test exam " + t.test_id + " contains non-language task " + t.key().str());
    out[it->second].push_back(t);
  }
  return out;
}

// Drops train/validation tasks that duplicate a test task, then validation
// tasks that duplicate a train task. The test split is never modified.
inline SplitSet enforce_no_leakage(const SplitSet& splits, const GenericFilter& filter) {
  SplitSet out;
  out.test = splits.test;
  out.removals = splits.removals;

  const DuplicateIndex test_index(splits.test, filter);
  auto drop_matching = [&](const std::vector<ExamTask>& from, const DuplicateIndex& index,
                           const char* against, std::vector<ExamTask>& keep) {
    for (const auto& t : from) {
      if (auto hit = index.match(t))
        out.removals.push_back({t.key(), RemovalReason::leakage, std::string(against) + ":" + hit->str()});
      else
        keep.push_back(t);
    }
  };

  std::vector<ExamTask> validation;
  drop_matching(splits.train, test_index, "test", out.train);
  drop_matching(splits.validation, test_index, "test", validation);
  const DuplicateIndex train_index(out.train, filter);
  drop_matching(validation, train_index, "train", out.validation);
  return out;
}

// --- shuffling --------------------------------------------------------------

namespace detail {

struct StemMarker {
  std::size_t begin;  // byte offset of the label digits
  std::size_t end;
  std::size_t label_index;
};

// Finds each hheader label exactly once, either as "(n)" anywhere or as a
// line-leading "n" followed by ".", ")" or a space.
inline std::optional<std::vector<StemMarker>> find_stem_markers(const std::string& question,
                                                                std::span<const std::string> labels) {
  auto label_index = [&](std::string_view digits) -> std::optional<std::size_t> {
    for (std::size_t k = 0; k < labels.size(); ++k)
      if (labels[k] == digits) return k;
    return std::nullopt;
  };
  auto collect = [&](bool parenthesized) {
    std::vector<StemMarker> found;
    for (std::size_t i = 0; i < question.size(); ++i) {
      const bool digit = question[i] >= '0' && question[i] <= '9';
      if (!digit) continue;
      if (i > 0 && question[i - 1] >= '0' && question[i - 1] <= '9') continue;
      std::size_t j = i;
      while (j < question.size() && question[j] >= '0' && question[j] <= '9') ++j;
      bool ok;
      if (parenthesized) {
        ok = i > 0 && question[i - 1] == '(' && j < question.size() && question[j] == ')';
      } else {
        std::size_t k = i;
        while (k > 0 && (question[k - 1] == ' ' || question[k - 1] == '\t')) --k;
        ok = (k == 0 || question[k - 1] == '\n') &&
             (j == question.size() || question[j] == '.' || question[j] == ')' || question[j] == ' ');
      }
      if (!ok) continue;
      if (auto idx = label_index(std::string_view(question).substr(i, j - i)))
        found.push_back({i, j, *idx});
    }
    return found;
  };
  for (bool parenthesized : {true, false}) {
    auto found = collect(parenthesized);
    std::vector<int> seen(labels.size(), 0);
    for (const auto& m : found) ++seen[m.label_index];
    if (!found.empty() && std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; })) return found;
  }
  return std::nullopt;
}

}  // namespace detail

// Applies explicit permutations. option_perm[j] is the old option index
// whose text moves to position j; letters keep their order. stem_perm[j] is
// the old stem index whose content gets label hheader[j]. Stem order is only
// changed when every label can be located in the question text.
inline ExamTask shuffle_with_permutation(const ExamTask& task, std::span<const std::size_t> option_perm,
                                         std::span<const std::size_t> stem_perm) {
  if (option_perm.size() != task.answers.size())
    throw ContractViolation("option permutation size does not match task " + task.key().str());
  ExamTask out = task;
  std::vector<std::size_t> option_inv(option_perm.size());
  for (std::size_t j = 0; j < option_perm.size(); ++j) {
    out.answers[j].text = task.answers[option_perm[j]].text;
    option_inv[option_perm[j]] = j;
  }
  auto remap_letter = [&](AnswerLetter old) {
    for (std::size_t k = 0; k < task.answers.size(); ++k)
      if (task.answers[k].letter == old) return task.answers[option_inv[k]].letter;
    return old;
  };

  std::vector<std::size_t> stems(task.answer_hheader.size());
  std::iota(stems.begin(), stems.end(), 0);
  if (task.kind() == TaskKind::matching && stem_perm.size() == stems.size()) {
    if (auto markers = detail::find_stem_markers(task.question, task.answer_hheader)) {
      stems.assign(stem_perm.begin(), stem_perm.end());
      std::vector<std::size_t> stem_inv(stems.size());
      for (std::size_t j = 0; j < stems.size(); ++j) stem_inv[stems[j]] = j;
      std::string q;
      std::size_t last = 0;
      for (const auto& m : *markers) {
        q.append(task.question, last, m.begin - last);
        q += task.answer_hheader[stem_inv[m.label_index]];
        last = m.end;
      }
      q.append(task.question, last, std::string::npos);
      out.question = std::move(q);
    }
  }

  out.correct_answer.clear();
  if (task.kind() == TaskKind::mc) {
    for (AnswerLetter l : task.correct_answer) out.correct_answer.push_back(remap_letter(l));
  } else if (!task.correct_answer.empty()) {
    for (std::size_t j = 0; j < stems.size(); ++j) out.correct_answer.push_back(remap_letter(task.correct_answer[stems[j]]));
  }
  return out;
}

// Seed-deterministic shuffle of option texts (and matching stems).
inline ExamTask shuffle_answers(const ExamTask& task, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const auto option_perm = random_permutation(rng, task.answers.size());
  const auto stem_perm =
      task.kind() == TaskKind::matching ? random_permutation(rng, task.answer_hheader.size()) : std::vector<std::size_t>{};
  return shuffle_with_permutation(task, option_perm, stem_perm);
}

// Per-task seed so a task's shuffle does not depend on its position.
inline std::uint64_t task_seed(std::uint64_t base, const TaskKey& key) {
  return mix64(base ^ fnv1a(key.str()));
}

// --- pipeline ---------------------------------------------------------------

struct PrepareConfig {
  CleanConfig clean;
  std::map<std::string, Split> split_assignment;
  std::uint64_t shuffle_seed = 0;
  bool shuffle_test = true;
};

inline PrepareConfig parse_prepare_config(std::string_view bytes) {
  Json doc;
  try {
    doc = Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  PrepareConfig cfg;
  try {
    if (doc.contains("paraphrase_threshold")) cfg.clean.paraphrase_threshold = doc["paraphrase_threshold"].get<double>();
    if (doc.contains("generic_patterns"))
      cfg.clean.generic_patterns = doc["generic_patterns"].get<std::vector<std::string>>();
    if (doc.contains("shuffle_seed")) cfg.shuffle_seed = doc["shuffle_seed"].get<std::uint64_t>();
    if (doc.contains("shuffle_test")) cfg.shuffle_test = doc["shuffle_test"].get<bool>();
    if (doc.contains("split_assignment")) {
      for (auto it = doc["split_assignment"].begin(); it != doc["split_assignment"].end(); ++it) {
        auto split = parse_split(it.value().get<std::string>());
        if (!split) throw ConfigError("split for test_id " + it.key() + " must be train, validation or test");
        cfg.split_assignment[it.key()] = *split;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (cfg.clean.paraphrase_threshold <= 0.0 || cfg.clean.paraphrase_threshold > 1.0)
    throw ConfigError("paraphrase_threshold must be in (0, 1]");
  cfg.clean.split_assignment = cfg.split_assignment;
  return cfg;
}

// Shuffles every task of the test split with a per-task seed.
inline std::vector<ExamTask> shuffle_split(std::span<const ExamTask> tasks, std::uint64_t seed) {
  std::vector<ExamTask> out;
  out.reserve(tasks.size());
  for (const auto& t : tasks) out.push_back(shuffle_answers(t, task_seed(seed, t.key())));
  return out;
}

// clean -> split -> leakage enforcement -> test shuffling.
inline SplitSet prepare(std::span<const ExamTask> tasks, const PrepareConfig& config) {
  CleanConfig clean = config.clean;
  clean.split_assignment = config.split_assignment;
  CleanResult cleaned = clean_corpus(tasks, clean);
  SplitSet splits = split_corpus(cleaned.kept, config.split_assignment);
  splits.removals = std::move(cleaned.removals);
  SplitSet enforced = enforce_no_leakage(splits, GenericFilter(clean.generic_patterns));
  if (config.shuffle_test) enforced.test = shuffle_split(enforced.test, config.shuffle_seed);
  return enforced;
}

namespace detail {
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}
}  // namespace detail

inline std::string removals_csv(std::span<const RemovalRecord> removals) {
  std::ostringstream out;
  out << "test_id,task_id,reason,evidence\n";
  for (const auto& r : removals)
    out << detail::csv_field(r.key.test_id) << ',' << r.key.task_id << ',' << to_string(r.reason) << ','
        << detail::csv_field(r.evidence) << '\n';
  return out.str();
}

inline std::map<RemovalReason, std::size_t> removal_counts(std::span<const RemovalRecord> removals) {
  std::map<RemovalReason, std::size_t> counts;
  for (const auto& r : removals) ++counts[r.reason];
  return counts;
}

}  // namespace examkit
