// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "test_support.hpp"

using namespace examkit;
using namespace examkit::testing;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "  " << detail << "\n";
  if (!ok) ++failures;
}

void check(const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [ok, detail] = body();
    report(name, ok, detail);
  } catch (const std::exception& e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << std::fixed << v;
  return s.str();
}

const std::vector<ExamTask>& corpus() {
  static const std::vector<ExamTask> tasks = fixture_exams();
  return tasks;
}

const SplitSet& prepared() {
  static const SplitSet s = prepare(corpus(), fixture_config());
  return s;
}

}  // namespace

int main() {
  // Baseline: analytic matching = 0.8 per 4x5 matching task, 10k-trial
  // simulation within 4 sigma / sqrt(n), published values within 0.5, < 10 s.
  check("baseline", [] {
    const auto& test = prepared().test;
    std::size_t matching_tasks = 0;
    bool shape = true;
    for (const auto& t : test)
      if (t.kind() == TaskKind::matching) {
        ++matching_tasks;
        shape = shape && t.answer_hheader.size() == 4 && t.answer_vheader.size() == 5;
      }
    const auto started = std::chrono::steady_clock::now();
    const Expectation e = expected_random_score(test);
    const SimulationResult sim = simulate_random(test, 7, 10000);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const double root_n = std::sqrt(10000.0);
    const bool matching_exact = shape && std::abs(e.matching - 0.8 * static_cast<double>(matching_tasks)) < 1e-9;
    const bool band = std::abs(sim.mean.single_answer - e.single_answer) <= 4 * sim.stddev.single_answer / root_n &&
                      std::abs(sim.mean.matching - e.matching) <= 4 * sim.stddev.matching / root_n &&
                      std::abs(sim.mean.total - e.total) <= 4 * sim.stddev.total / root_n;
    const bool table = std::abs(sim.mean.single_answer - 20.25) <= 0.5 && std::abs(sim.mean.matching - 12.78) <= 0.5 &&
                       std::abs(sim.mean.total - 33.03) <= 0.5;
    return std::pair{matching_exact && band && table && secs < 10.0,
                     "analytic " + fmt(e.single_answer, 2) + "/" + fmt(e.matching, 2) + "/" + fmt(e.total, 2) +
                         " (matching tasks " + std::to_string(matching_tasks) + " x 0.8), simulated " +
                         fmt(sim.mean.single_answer) + "/" + fmt(sim.mean.matching) + "/" + fmt(sim.mean.total) +
                         " vs 20.25/12.78/33.03 +-0.5, band 4sd/sqrt(n), " + fmt(secs, 2) + " s"};
  });

  check("validation and test maxima", [] {
    const Json exp = fixture_expected()["splits"];
    const ScoreCard val = max_card(prepared().validation);
    const ScoreCard test = max_card(prepared().test);
    const SubjectScore lang = val.subject(Subject::language);
    auto sums = [](const Json& j) {
      return std::array{j["single_answer"].get<int>(), j["matching"].get<int>(), j["total"].get<int>()};
    };
    const bool ok = std::array{lang.max_single, lang.max_matching, lang.max_total()} == std::array{233, 72, 305} &&
                    std::array{val.max_single, val.max_matching, val.max_total()} == std::array{260, 88, 348} &&
                    std::array{test.max_single, test.max_matching, test.max_total()} == std::array{92, 64, 156} &&
                    std::array{lang.max_single, lang.max_matching, lang.max_total()} ==
                        sums(exp["validation"]["max"]["language"]) &&
                    std::array{val.max_single, val.max_matching, val.max_total()} ==
                        sums(exp["validation"]["max"]["all"]) &&
                    std::array{test.max_single, test.max_matching, test.max_total()} == sums(exp["test"]["max"]["all"]);
    return std::pair{ok, "validation " + std::to_string(lang.max_single) + "/" + std::to_string(lang.max_matching) + "/" +
                             std::to_string(lang.max_total()) + ", with literature " + std::to_string(val.max_single) +
                             "/" + std::to_string(val.max_matching) + "/" + std::to_string(val.max_total()) +
                             ", test " + std::to_string(test.max_single) + "/" + std::to_string(test.max_matching) +
                             "/" + std::to_string(test.max_total()) + " (exact)"};
  });

  check("extraction golden suite", [] {
    const auto tasks = sample_tasks();
    const ExamTask t8 = sample_task(tasks, 8);
    const ExamTask t27 = sample_task(tasks, 27);
    const std::vector<std::tuple<std::string, const ExamTask*, std::string>> cases = {
        {"solution_mc.txt", &t8, "В"},
        {"generation_matching.txt", &t27, "БДАГ"},
        {"generation_mc.txt", &t8, "В"},
        {"solution_matching.txt", &t27, "БДАГ"}};
    int ok = 0;
    for (const auto& [file, task, want] : cases) {
      const ExtractedAnswer a = extract_answer(golden(file), *task);
      if (a.status == ExtractStatus::ok && a.matches(letters(want))) ++ok;
    }
    return std::pair{ok == 4, std::to_string(ok) + "/4 exact"};
  });

  check("scoring oracle equivalence", [] {
    std::mt19937_64 gen(20240917);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(gen() % n); };
    int agree = 0, cases = 0, multi_zeroed = 0, overlong_zeroed = 0;
    for (int c = 0; c < 5000; ++c, ++cases) {
      const std::size_t alphabet = 2 + pick(4);
      const std::size_t slots = pick(5);
      std::vector<std::string> options;
      for (std::size_t i = 0; i < alphabet; ++i) options.push_back("o" + std::to_string(i));
      std::string gold;
      for (std::size_t i = 0; i < std::max<std::size_t>(slots, 1); ++i) gold += to_utf8(kAllLetters[pick(alphabet)]);
      const ExamTask task =
          slots == 0 ? make_mc("a", c, "q", options, gold) : make_matching("a", c, "q", options, gold, slots);
      std::vector<AnswerLetter> given;
      for (std::size_t i = 0, n = pick(7); i < n; ++i) given.push_back(kAllLetters[pick(alphabet)]);
      int want = 0;
      if (!given.empty()) {
        if (slots == 0) {
          want = given.size() == 1 && given[0] == task.correct_answer[0];
          multi_zeroed += given.size() > 1;
        } else if (given.size() > slots) {
          overlong_zeroed += 1;
        } else {
          for (std::size_t i = 0; i < given.size(); ++i) want += given[i] == task.correct_answer[i];
        }
      }
      const ExtractedAnswer a = extract_answer("Відповідь: " + letters_to_string(given), task);
      agree += score_task(task, a).points == want;
    }
    return std::pair{agree == cases && multi_zeroed > 0 && overlong_zeroed > 0,
                     std::to_string(agree) + "/" + std::to_string(cases) + " agree (multi-letter zeroed " +
                         std::to_string(multi_zeroed) + ", overlong zeroed " + std::to_string(overlong_zeroed) + ")"};
  });

  check("self-consistency", [] {
    const SolutionMap sols = fixture_solutions();
    int ok = 0, total = 0;
    for (const auto& t : corpus()) {
      if (t.correct_answer.empty()) continue;
      const auto sol = sols.find(t.key());
      for (PromptMode mode : {PromptMode::letter, PromptMode::cot, PromptMode::cot_wt}) {
        ++total;
        if (sol == sols.end()) continue;
        const ExtractedAnswer a = extract_answer(build_target(t, &sol->second, mode).content, t);
        ok += a.status == ExtractStatus::ok && a.matches(t.correct_answer) && score_task(t, a).points == t.max_points();
      }
    }
    return std::pair{ok == total && total > 0, std::to_string(ok) + "/" + std::to_string(total) + " task-modes exact"};
  });

  check("leakage properties", [] {
    const PrepareConfig cfg = fixture_config();
    const GenericFilter filter(cfg.clean.generic_patterns);
    const SplitSet& s = prepared();
    const std::size_t groups = cross_split_groups(s.train, s.test, filter).size() +
                               cross_split_groups(s.validation, s.test, filter).size() +
                               cross_split_groups(s.validation, s.train, filter).size();
    CleanConfig clean = cfg.clean;
    const CleanResult cleaned = clean_corpus(corpus(), clean);
    const SplitSet before = split_corpus(cleaned.kept, cfg.split_assignment);
    const SplitSet after = enforce_no_leakage(before, filter);
    const bool identical = serialize_exam_file(before.test) == serialize_exam_file(after.test);
    const SplitSet rerun = prepare(corpus(), cfg);
    const bool deterministic = serialize_exam_file(rerun.train) == serialize_exam_file(s.train) &&
                               serialize_exam_file(rerun.validation) == serialize_exam_file(s.validation) &&
                               serialize_exam_file(rerun.test) == serialize_exam_file(s.test) &&
                               removals_csv(rerun.removals) == removals_csv(s.removals);
    return std::pair{groups == 0 && identical && deterministic,
                     "cross-split groups " + std::to_string(groups) + ", test split unchanged by enforcement: " +
                         (identical ? "yes" : "no") + ", rerun byte-identical: " + (deterministic ? "yes" : "no")};
  });

  check("shuffle invariance", [] {
    int ok = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const std::uint64_t s = mix64(seed);
      for (const auto& t : prepared().test) {
        ++total;
        const ExamTask sh = shuffle_answers(t, task_seed(s, t.key()));
        ExtractedAnswer gold;
        gold.kind = sh.kind();
        gold.status = ExtractStatus::ok;
        gold.letters = to_slots(sh.correct_answer);
        ok += score_task(sh, gold).points == t.max_points();
      }
    }
    return std::pair{ok == total, std::to_string(ok) + "/" + std::to_string(total) + " shuffled tasks at max (100 seeds)"};
  });

  check("checkpoint selection", [] {
    std::mt19937 gen(5);
    int ok = 0, total = 0;
    for (int c = 0; c < 1000; ++c, ++total) {
      std::vector<EpochCard> cards;
      int best_epoch = 0, best = -1;
      const int n = 1 + static_cast<int>(gen() % 8);
      for (int e = 1; e <= n; ++e) {
        ScoreCard card;
        card.total = static_cast<int>(gen() % 6);
        if (card.total > best) best = card.total, best_epoch = e;
        cards.push_back({e, card});
      }
      ok += select_checkpoint(cards) == best_epoch;
    }
    std::vector<EpochCard> tie;
    for (int e = 1; e <= 4; ++e) tie.push_back({e, ScoreCard{0, 0, 50, {}, 0, 0}});
    const bool earliest = select_checkpoint(tie) == 1;
    return std::pair{ok == total && earliest, std::to_string(ok) + "/" + std::to_string(total) +
                                                  " argmax exact, all-tie picks epoch " +
                                                  std::to_string(select_checkpoint(tie))};
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
