#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace examkit;
using namespace examkit::testing;

namespace {

ScoreCard card(int single, int matching, int lit_single = 0, int lit_matching = 0, int lit_max = 0) {
  ScoreCard c;
  c.single_answer = single + lit_single;
  c.matching = matching + lit_matching;
  c.total = c.single_answer + c.matching;
  c.by_subject[Subject::language] = {single, matching, single + matching, 92, 64};
  c.max_single = 92;
  c.max_matching = 64;
  if (lit_max > 0) {
    c.by_subject[Subject::literature] = {lit_single, lit_matching, lit_single + lit_matching, lit_max, 0};
    c.max_single += lit_max;
  }
  return c;
}

RunRecord run(const std::string& model, PromptMode mode, ScoreCard c, Split split = Split::test) {
  RunRecord r;
  r.model_id = model;
  r.mode = mode;
  r.split = split;
  r.card = c;
  r.timestamp = "2024-01-01T00:00:00Z";
  return r;
}

TaskScore pts(const std::string& test_id, int task_id, int points) {
  TaskScore s;
  s.key = {test_id, task_id};
  s.points = points;
  return s;
}

}  // namespace

TEST(FormatNumber, TrimsZeros) {
  EXPECT_EQ(format_number(56), "56");
  EXPECT_EQ(format_number(12.8), "12.8");
  EXPECT_EQ(format_number(20.25), "20.25");
  EXPECT_EQ(format_number(12.7854), "12.79");
  EXPECT_EQ(format_number(-0.001), "0");
}

TEST(Table, MarkdownRow) {
  const std::vector<RunRecord> rows = {run("m", PromptMode::letter, card(33, 23))};
  const std::string md = render_table(rows, TableFormat::markdown);
  EXPECT_EQ(md.find("| Model | Mode | Single answer | Matching | Total |\n"), 0u);
  EXPECT_NE(md.find("| m | letter | 33 | 23 | 56 |"), std::string::npos);
}

TEST(Table, LiteratureAdditionInParentheses) {
  const std::vector<RunRecord> rows = {run("m", PromptMode::cot, card(40, 25, 8, 0, 27), Split::validation)};
  const std::string md = render_table(rows, TableFormat::markdown);
  EXPECT_NE(md.find("| 40 (+8) | 25 (+0) | 65 (+8) |"), std::string::npos) << md;
  const std::string csv = render_table(rows, TableFormat::csv);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "model,mode,single_answer,single_answer_literature,matching,matching_literature,total,total_literature");
  EXPECT_NE(csv.find("m,cot,40,8,25,0,65,8"), std::string::npos);
}

TEST(Table, MaxAndRandomRows) {
  TableExtras extras;
  extras.max = card(0, 0);
  extras.random = std::map<Subject, Expectation>{{Subject::language, {20.25, 12.8, 33.05}}};
  const std::vector<RunRecord> rows = {run("m", PromptMode::letter, card(33, 23))};
  const std::string md = render_table(rows, TableFormat::markdown, extras);
  EXPECT_NE(md.find("| Max possible score |  | 92 | 64 | 156 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| Random guess |  | 20.25 | 12.8 | 33.05 |"), std::string::npos) << md;
}

TEST(Table, EmptyRows) {
  EXPECT_EQ(render_table({}, TableFormat::json), "[]");
  EXPECT_THROW(render_table({}, TableFormat::markdown), ContractViolation);
  EXPECT_THROW(render_table({}, TableFormat::csv), ContractViolation);
}

TEST(Table, JsonRoundTripAndFormatsAgree) {
  RunRecord a = run("a", PromptMode::cot_wt, card(40, 25, 8, 3, 27), Split::validation);
  a.epoch = 2;
  a.scores = {pts("1", 1, 1)};
  a.failures = 1;
  const std::vector<RunRecord> rows = {a, run("b", PromptMode::letter, card(33, 23, 1, 1, 27))};
  EXPECT_EQ(parse_run_table(render_table(rows, TableFormat::json)), rows);

  // Numbers in markdown and CSV cells are the same values.
  const std::string md = render_table(rows, TableFormat::markdown);
  const std::string csv = render_table(rows, TableFormat::csv);
  std::vector<std::string> md_nums, csv_nums;
  std::string cur;
  auto flush = [&](std::vector<std::string>& v) {
    if (!cur.empty()) v.push_back(cur);
    cur.clear();
  };
  for (char c : md.substr(md.find('\n', md.find('\n') + 1)))
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') cur += c; else flush(md_nums);
  flush(md_nums);
  for (char c : csv.substr(csv.find('\n')))
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') cur += c; else flush(csv_nums);
  flush(csv_nums);
  EXPECT_EQ(md_nums, csv_nums);
  EXPECT_THROW(parse_run_table("{}"), ConfigError);
  EXPECT_THROW(parse_run_table("[{"), ParseError);
}

TEST(Table, FormatNames) {
  EXPECT_EQ(parse_table_format("md"), TableFormat::markdown);
  EXPECT_EQ(parse_table_format("csv"), TableFormat::csv);
  EXPECT_FALSE(parse_table_format("xml"));
}

TEST(CheckRun, MaximaMustMatchTasks) {
  const auto tasks = sample_tasks();
  RunRecord r;
  r.card = max_card(tasks);
  EXPECT_NO_THROW(check_run(r, tasks));
  r.card.max_matching = 3;
  EXPECT_THROW(check_run(r, tasks), ContractViolation);
}

TEST(Diff, SortedByMagnitude) {
  RunRecord a = run("a", PromptMode::letter, {}), b = run("b", PromptMode::letter, {});
  a.scores = {pts("1", 1, 1), pts("1", 2, 4), pts("1", 3, 0), pts("1", 4, 2)};
  b.scores = {pts("1", 1, 0), pts("1", 2, 1), pts("1", 3, 0), pts("1", 4, 3)};
  const auto d = diff_runs(a, b);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0], (TaskDelta{{"1", 2}, 4, 1, -3}));
  EXPECT_EQ(d[1].key, (TaskKey{"1", 1}));
  EXPECT_EQ(d[2].delta, 1);
  EXPECT_TRUE(diff_runs(a, a).empty());
  b.split = Split::validation;
  EXPECT_THROW(diff_runs(a, b), ContractViolation);
}

TEST(Gain, Examples) {
  EXPECT_NEAR(percentage_gain(27, 23), 17.39, 0.01);
  EXPECT_NEAR(percentage_gain(64, 56), 14.29, 0.01);
  EXPECT_EQ(gain_line("a", 27, "b", 23), "a vs b: 27 vs 23 (+17.4%)");
  EXPECT_THROW(percentage_gain(1, 0), ContractViolation);
}

TEST(Manifest, ParseBothShapes) {
  const auto a = parse_manifest(R"({"checkpoints": [{"epoch": 1, "artifact_path": "ckpt/1", "trainable_params": 1000}]})");
  const auto b = parse_manifest(R"([{"epoch": 1, "artifact_path": "ckpt/1", "trainable_params": 1000}])");
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a, b);
  EXPECT_THROW(parse_manifest(R"({"checkpoints": 3})"), ConfigError);
  EXPECT_THROW(parse_manifest(R"([{"epoch": 1}])"), ConfigError);
}

TEST(Manifest, SelectsBestValidationEpoch) {
  std::vector<CheckpointRecord> manifest;
  std::vector<RunRecord> runs;
  const int totals[] = {81, 126, 120, 118};
  for (int e = 1; e <= 4; ++e) {
    manifest.push_back({e, "ckpt/epoch-" + std::to_string(e), 1000});
    RunRecord r = run("ft", PromptMode::cot_wt, card(totals[e - 1], 0), Split::validation);
    r.epoch = e;
    runs.push_back(r);
  }
  const Selection s = select_from_manifest(manifest, runs);
  EXPECT_EQ(s.checkpoint.epoch, 2);
  EXPECT_EQ(s.checkpoint.artifact_path, "ckpt/epoch-2");
  EXPECT_EQ(s.card.total, 126);
  runs[1].split = Split::test;
  EXPECT_THROW(select_from_manifest(manifest, runs), ConfigError);
  runs.pop_back();
  EXPECT_THROW(select_from_manifest(manifest, runs), ConfigError);
}
