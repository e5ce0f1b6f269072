#pragma once

// Answer extraction from free-text generations: the answer is read from the
// segment after the last "Відповідь" keyword, either as enumerated
// label-letter pairs ("1 – Б, 2 – Д") or as a letter run ("БДАГ", "В").

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "examkit/corpus.hpp"
#include "examkit/utf8.hpp"

namespace examkit {

struct HomoglyphEntry {
  char32_t from;
  AnswerLetter to;
};

// Characters that render like an answer letter. Anything not listed here
// (Latin E, Cyrillic Е, lowercase letters, ...) never becomes a letter.
inline constexpr std::array<HomoglyphEntry, 11> kHomoglyphTable = {{
    {U'А', AnswerLetter::A},
    {U'Б', AnswerLetter::B},
    {U'В', AnswerLetter::V},
    {U'Г', AnswerLetter::H},
    {U'Д', AnswerLetter::D},
    {U'A', AnswerLetter::A},     // U+0041 LATIN CAPITAL A
    {U'B', AnswerLetter::V},     // U+0042 LATIN CAPITAL B
    {U'Α', AnswerLetter::A},  // GREEK CAPITAL ALPHA
    {U'Β', AnswerLetter::V},  // GREEK CAPITAL BETA
    {U'Ａ', AnswerLetter::A},  // FULLWIDTH A
    {U'Ｂ', AnswerLetter::V},  // FULLWIDTH B
}};

inline std::optional<AnswerLetter> letter_of(char32_t cp) {
  for (const auto& entry : kHomoglyphTable)
    if (entry.from == cp) return entry.to;
  return std::nullopt;
}

// Keeps only characters that map into {А, Б, В, Г, Д}, in order.
inline std::vector<AnswerLetter> normalize_letters(std::string_view s) {
  std::vector<AnswerLetter> out;
  for (std::size_t pos = 0; pos < s.size();)
    if (auto letter = letter_of(utf8::next(s, pos))) out.push_back(*letter);
  return out;
}

enum class ExtractStatus { ok, absent, overlong, unparseable };

inline const char* to_string(ExtractStatus status) {
  switch (status) {
    case ExtractStatus::ok: return "ok";
    case ExtractStatus::absent: return "absent";
    case ExtractStatus::overlong: return "overlong";
    case ExtractStatus::unparseable: return "unparseable";
  }
  return "?";
}

inline std::optional<ExtractStatus> parse_extract_status(std::string_view s) {
  for (auto st : {ExtractStatus::ok, ExtractStatus::absent, ExtractStatus::overlong,
                  ExtractStatus::unparseable})
    if (s == to_string(st)) return st;
  return std::nullopt;
}

// A missing slot means the generation gave no letter for that matching label.
using LetterSlot = std::optional<AnswerLetter>;

struct ExtractedAnswer {
  TaskKind kind = TaskKind::mc;
  std::vector<LetterSlot> letters;
  std::string raw_span;
  ExtractStatus status = ExtractStatus::absent;

  std::size_t letter_count() const {
    return static_cast<std::size_t>(
        std::count_if(letters.begin(), letters.end(), [](const LetterSlot& s) { return s.has_value(); }));
  }

  bool matches(std::span<const AnswerLetter> expected) const {
    if (letters.size() != expected.size()) return false;
    for (std::size_t i = 0; i < expected.size(); ++i)
      if (letters[i] != expected[i]) return false;
    return true;
  }

  bool operator==(const ExtractedAnswer&) const = default;
};

inline std::vector<LetterSlot> to_slots(std::span<const AnswerLetter> letters) {
  return {letters.begin(), letters.end()};
}

inline std::string slots_to_string(std::span<const LetterSlot> slots) {
  std::string out;
  for (const auto& s : slots) out += s ? to_utf8(*s) : std::string("_");
  return out;
}

namespace detail {

struct AnswerToken {
  enum class Kind { number, word, punct } kind;
  std::size_t begin;  // code point offsets
  std::size_t end;
  std::u32string text;
  bool all_letters = false;  // word made only of answer letters / lookalikes
};

inline std::vector<AnswerToken> tokenize_answer(std::u32string_view s) {
  std::vector<AnswerToken> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    const char32_t cp = s[i];
    if (utf8::is_space(cp)) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (utf8::is_digit(cp)) {
      while (i < s.size() && utf8::is_digit(s[i])) ++i;
      tokens.push_back({AnswerToken::Kind::number, start, i, std::u32string(s.substr(start, i - start))});
    } else if (utf8::is_letter(cp) || letter_of(cp)) {
      while (i < s.size() && (utf8::is_letter(s[i]) || letter_of(s[i]) ||
                              (utf8::is_apostrophe(s[i]) && i + 1 < s.size() && utf8::is_letter(s[i + 1]))))
        ++i;
      AnswerToken tok{AnswerToken::Kind::word, start, i, std::u32string(s.substr(start, i - start))};
      tok.all_letters = std::all_of(tok.text.begin(), tok.text.end(),
                                    [](char32_t c) { return letter_of(c).has_value(); });
      tokens.push_back(std::move(tok));
    } else {
      ++i;
      tokens.push_back({AnswerToken::Kind::punct, start, i, std::u32string(1, cp)});
    }
  }
  return tokens;
}

// Sentence punctuation ends a letter run once it has started.
inline bool is_run_terminator(const AnswerToken& tok) {
  if (tok.kind != AnswerToken::Kind::punct) return false;
  const char32_t cp = tok.text[0];
  return cp == U'.' || cp == U'!' || cp == U'?' || cp == U';' || cp == 0x2026;
}

struct PairScan {
  std::vector<std::pair<std::u32string, AnswerLetter>> pairs;
  std::size_t last_end = 0;
};

// Finds "<label> [sep] <letter>" patterns anywhere in the token stream.
inline PairScan scan_pairs(const std::vector<AnswerToken>& tokens) {
  PairScan scan;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind != AnswerToken::Kind::number) continue;
    std::size_t j = i + 1;
    while (j < tokens.size() && tokens[j].kind == AnswerToken::Kind::punct && j - i <= 2) ++j;
    if (j < tokens.size() && tokens[j].kind == AnswerToken::Kind::word && tokens[j].all_letters &&
        tokens[j].text.size() == 1) {
      scan.pairs.emplace_back(tokens[i].text, *letter_of(tokens[j].text[0]));
      scan.last_end = tokens[j].end;
      i = j;
    }
  }
  return scan;
}

inline constexpr std::u32string_view kAnswerKeyword = U"Відповідь";

// Code point offset of the last keyword occurrence that stands as a word.
inline std::optional<std::size_t> find_last_keyword(std::u32string_view text) {
  std::size_t pos = text.rfind(kAnswerKeyword);
  while (pos != std::u32string_view::npos) {
    const std::size_t after = pos + kAnswerKeyword.size();
    const bool left_ok = pos == 0 || !utf8::is_letter(text[pos - 1]);
    const bool right_ok = after >= text.size() || !utf8::is_letter(text[after]);
    if (left_ok && right_ok) return pos;
    if (pos == 0) break;
    pos = text.rfind(kAnswerKeyword, pos - 1);
  }
  return std::nullopt;
}

}  // namespace detail

// Parses enumerated pairs against the matching labels. Returns one slot per
// label in hheader order (gaps for labels never mentioned), or nullopt when
// no well-formed pair is present. Conflicting letters for one label yield an
// empty vector with `conflict` set.
struct PairParse {
  std::vector<LetterSlot> slots;
  std::size_t extra_pairs = 0;  // pairs whose label is not in hheader
  bool conflict = false;
};

inline std::optional<PairParse> parse_pairs(std::string_view segment,
                                            std::span<const std::string> hheader) {
  const std::u32string text = utf8::decode(segment);
  const auto scan = detail::scan_pairs(detail::tokenize_answer(text));
  if (scan.pairs.empty()) return std::nullopt;

  PairParse result;
  result.slots.assign(hheader.size(), std::nullopt);
  std::set<std::u32string> extra_labels;
  for (const auto& [label, letter] : scan.pairs) {
    const std::string label8 = utf8::encode(label);
    auto it = std::find(hheader.begin(), hheader.end(), label8);
    if (it == hheader.end()) {
      extra_labels.insert(label);
      continue;
    }
    auto& slot = result.slots[static_cast<std::size_t>(it - hheader.begin())];
    if (slot && *slot != letter) result.conflict = true;
    slot = letter;
  }
  result.extra_pairs = extra_labels.size();
  if (result.conflict) result.slots.clear();
  return result;
}

inline ExtractedAnswer extract_answer(std::string_view text, TaskKind kind,
                                      std::span<const AnswerLetter> vheader,
                                      std::span<const std::string> hheader) {
  (void)vheader;  // letters outside the alphabet are never recovered; scoring compares positions
  ExtractedAnswer result;
  result.kind = kind;

  const std::u32string u = utf8::decode(text);
  const auto kw = detail::find_last_keyword(u);
  if (!kw) {
    result.status = ExtractStatus::absent;
    return result;
  }

  std::size_t seg = *kw + detail::kAnswerKeyword.size();
  while (seg < u.size() && utf8::is_space(u[seg])) ++seg;
  if (seg < u.size() && (u[seg] == U':' || utf8::is_dash(u[seg]))) ++seg;
  const std::u32string_view segment = std::u32string_view(u).substr(seg);
  const auto tokens = detail::tokenize_answer(segment);

  auto finish = [&](std::size_t consumed_end, ExtractStatus status) {
    result.raw_span = utf8::encode(std::u32string_view(u).substr(*kw, seg - *kw + consumed_end));
    result.status = status;
    return result;
  };

  if (kind == TaskKind::matching && !hheader.empty()) {
    const auto scan = detail::scan_pairs(tokens);
    if (!scan.pairs.empty()) {
      const auto parsed = parse_pairs(utf8::encode(segment), hheader);
      if (parsed->conflict) return finish(scan.last_end, ExtractStatus::unparseable);
      result.letters = parsed->slots;
      if (parsed->extra_pairs > 0) {
        // Letters given for labels the task does not have.
        for (const auto& [label, letter] : scan.pairs)
          if (std::find(hheader.begin(), hheader.end(), utf8::encode(label)) == hheader.end())
            result.letters.push_back(letter);
        return finish(scan.last_end, ExtractStatus::overlong);
      }
      return finish(scan.last_end, ExtractStatus::ok);
    }
  }

  std::size_t consumed = 0;
  for (const auto& tok : tokens) {
    if (tok.kind == detail::AnswerToken::Kind::punct) {
      if (!result.letters.empty() && detail::is_run_terminator(tok)) break;
      continue;
    }
    if (tok.kind == detail::AnswerToken::Kind::word && tok.all_letters) {
      for (char32_t c : tok.text) result.letters.push_back(*letter_of(c));
      consumed = tok.end;
      continue;
    }
    break;
  }
  if (result.letters.empty()) return finish(0, ExtractStatus::unparseable);
  if (kind == TaskKind::matching && result.letters.size() > hheader.size())
    return finish(consumed, ExtractStatus::overlong);
  return finish(consumed, ExtractStatus::ok);
}

inline ExtractedAnswer extract_answer(std::string_view text, const ExamTask& task) {
  return extract_answer(text, task.kind(), task.answer_vheader, task.answer_hheader);
}

// One line of `extract` output: the task key plus the extracted answer.
// Gaps in a matching answer are written as null.
inline Json extracted_to_json(const TaskKey& key, const ExtractedAnswer& a) {
  Json letters = Json::array();
  for (const auto& s : a.letters) letters.push_back(s ? Json(to_utf8(*s)) : Json(nullptr));
  return {{"test_id", key.test_id}, {"task_id", key.task_id}, {"kind", to_string(a.kind)},
          {"status", to_string(a.status)}, {"letters", std::move(letters)}, {"raw_span", a.raw_span}};
}

inline std::pair<TaskKey, ExtractedAnswer> extracted_from_json(const Json& j) {
  try {
    TaskKey key{j.at("test_id").get<std::string>(), j.at("task_id").get<std::int64_t>()};
    ExtractedAnswer a;
    auto kind = parse_task_kind(j.at("kind").get<std::string>());
    auto status = parse_extract_status(j.at("status").get<std::string>());
    if (!kind || !status) throw ConfigError("unknown kind or status in extracted record " + key.str());
    a.kind = *kind;
    a.status = *status;
    for (const auto& l : j.at("letters")) {
      if (l.is_null()) {
        a.letters.emplace_back();
        continue;
      }
      auto letter = parse_letter(l.get<std::string>());
      if (!letter) throw ConfigError("bad letter in extracted record " + key.str());
      a.letters.emplace_back(*letter);
    }
    a.raw_span = j.value("raw_span", std::string());
    return {std::move(key), std::move(a)};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed extracted record: ") + e.what());
  }
}

}  // namespace examkit
