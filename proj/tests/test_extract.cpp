#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace examkit;
using namespace examkit::testing;

namespace {

const std::vector<std::string> kSlots4 = {"1", "2", "3", "4"};
const std::vector<AnswerLetter> kLetters5 = {AnswerLetter::A, AnswerLetter::B, AnswerLetter::V, AnswerLetter::H,
                                             AnswerLetter::D};

ExtractedAnswer mc(std::string_view text) { return extract_answer(text, TaskKind::mc, kLetters5, {}); }
ExtractedAnswer matching(std::string_view text) {
  return extract_answer(text, TaskKind::matching, kLetters5, kSlots4);
}

}  // namespace

TEST(ExtractGolden, McSolution) {
  const auto a = mc(golden("solution_mc.txt"));
  EXPECT_EQ(a.status, ExtractStatus::ok);
  EXPECT_TRUE(a.matches(letters("В")));
  EXPECT_EQ(a.raw_span, "Відповідь – В");
}

TEST(ExtractGolden, MatchingGenerationPairForm) {
  const auto a = matching(golden("generation_matching.txt"));
  EXPECT_EQ(a.status, ExtractStatus::ok);
  EXPECT_TRUE(a.matches(letters("БДАГ")));
}

TEST(ExtractGolden, McGenerationLastKeywordWins) {
  const auto a = mc(golden("generation_mc.txt"));
  EXPECT_EQ(a.status, ExtractStatus::ok);
  EXPECT_TRUE(a.matches(letters("В")));
}

TEST(ExtractGolden, MatchingSolutionRunForm) {
  const auto a = matching(golden("solution_matching.txt"));
  EXPECT_EQ(a.status, ExtractStatus::ok);
  EXPECT_TRUE(a.matches(letters("БДАГ")));
}

TEST(Extract, NoKeywordIsAbsent) {
  const auto a = mc("Правильна буква В.");
  EXPECT_EQ(a.status, ExtractStatus::absent);
  EXPECT_TRUE(a.letters.empty());
  EXPECT_EQ(mc("").status, ExtractStatus::absent);
}

TEST(Extract, KeywordMustBeAWord) {
  EXPECT_EQ(mc("Відповіді немає: В").status, ExtractStatus::absent);
}

TEST(Extract, OverlongMatchingRun) {
  const auto a = matching("Відповідь: АБВГД");
  EXPECT_EQ(a.status, ExtractStatus::overlong);
  EXPECT_EQ(a.letters.size(), 5u);
}

TEST(Extract, KeywordWithNothingUsableIsUnparseable) {
  EXPECT_EQ(mc("Відповідь: не знаю").status, ExtractStatus::unparseable);
  EXPECT_EQ(mc("Відповідь:").status, ExtractStatus::unparseable);
}

TEST(Extract, McMultipleLettersAreKept) {
  const auto a = mc("Відповідь: В, А");
  EXPECT_EQ(a.status, ExtractStatus::ok);
  EXPECT_TRUE(a.matches(letters("ВА")));
}

TEST(Extract, RunStopsAtSentenceEnd) {
  const auto a = mc("Відповідь – Г. А далі пояснення.");
  EXPECT_TRUE(a.matches(letters("Г")));
}

TEST(Extract, HomoglyphsInAnswer) {
  EXPECT_TRUE(mc("Відповідь: B").matches(letters("В")));   // Latin B
  EXPECT_TRUE(mc("Відповідь: Α").matches(letters("А")));   // Greek Alpha
  EXPECT_TRUE(mc("Відповідь: Ｂ").matches(letters("В")));  // fullwidth B
  EXPECT_TRUE(matching("Відповідь: 1-A, 2-B, 3-Г, 4-Д").matches(letters("АВГД")));
}

TEST(Extract, ShortMatchingKeepsGaps) {
  const auto a = matching("Відповідь: 1 – Б, 3 – А");
  EXPECT_EQ(a.status, ExtractStatus::ok);
  ASSERT_EQ(a.letters.size(), 4u);
  EXPECT_EQ(a.letters[0], AnswerLetter::B);
  EXPECT_FALSE(a.letters[1]);
  EXPECT_EQ(a.letters[2], AnswerLetter::A);
  EXPECT_FALSE(a.letters[3]);
  EXPECT_EQ(a.letter_count(), 2u);
  EXPECT_EQ(slots_to_string(a.letters), "Б_А_");
}

TEST(Extract, PairsWithUnknownLabelAreOverlong) {
  EXPECT_EQ(matching("Відповідь: 1 – Б, 2 – Д, 3 – А, 4 – Г, 5 – В").status, ExtractStatus::overlong);
}

TEST(Extract, ConflictingPairsAreUnparseable) {
  EXPECT_EQ(matching("Відповідь: 1 – Б, 1 – В").status, ExtractStatus::unparseable);
}

TEST(NormalizeLetters, Examples) {
  EXPECT_EQ(normalize_letters("БДАГ"), letters("БДАГ"));
  EXPECT_EQ(normalize_letters("B"), letters("В"));
  EXPECT_EQ(normalize_letters("1-Б, 2-Д"), letters("БД"));
}

TEST(NormalizeLetters, LatinBMapsToCyrillicVe) {
  // Oracle: the homoglyph table row for U+0042 must target U+0412.
  bool found = false;
  for (const auto& row : kHomoglyphTable)
    if (row.from == U'B') {
      found = true;
      EXPECT_EQ(codepoint(row.to), U'В');
    }
  EXPECT_TRUE(found);
  EXPECT_EQ(letter_of(U'B'), AnswerLetter::V);
}

TEST(ParsePairs, OrderFollowsHheader) {
  const std::vector<std::string> h2 = {"1", "2"};
  auto p = parse_pairs("2 – Д, 1 – Б", h2);
  ASSERT_TRUE(p);
  ASSERT_EQ(p->slots.size(), 2u);
  EXPECT_EQ(p->slots[0], AnswerLetter::B);
  EXPECT_EQ(p->slots[1], AnswerLetter::D);
  p = parse_pairs("1 – Б, 2 – Д, 3 – А, 4 – Г", kSlots4);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->slots, to_slots(letters("БДАГ")));
  p = parse_pairs("1 – Б, 1 – В", kSlots4);
  ASSERT_TRUE(p);
  EXPECT_TRUE(p->conflict);
  EXPECT_FALSE(parse_pairs("без пар", kSlots4));
}

TEST(ExtractJson, RoundTrip) {
  const TaskKey key{"363", 27};
  const auto a = matching("Відповідь: 1 – Б, 3 – А");
  const auto [k, b] = extracted_from_json(Json::parse(extracted_to_json(key, a).dump()));
  EXPECT_EQ(k, key);
  EXPECT_EQ(b, a);
}
