#pragma once

// Random-guess baselines. Single-answer tasks: one uniform pick among the
// task's options. Matching tasks: one uniform letter per slot, drawn
// independently (with replacement) from answer_vheader.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "examkit/corpus.hpp"
#include "examkit/extract.hpp"
#include "examkit/rng.hpp"
#include "examkit/scoring.hpp"

namespace examkit {

struct Expectation {
  double single_answer = 0.0;
  double matching = 0.0;
  double total = 0.0;

  bool operator==(const Expectation&) const = default;
};

inline Expectation expected_random_score(std::span<const ExamTask> tasks) {
  Expectation e;
  for (const auto& t : tasks) {
    if (t.kind() == TaskKind::mc) {
      if (!t.answers.empty()) e.single_answer += 1.0 / static_cast<double>(t.answers.size());
    } else if (!t.answer_vheader.empty()) {
      e.matching += static_cast<double>(t.answer_hheader.size()) / static_cast<double>(t.answer_vheader.size());
    }
  }
  e.total = e.single_answer + e.matching;
  return e;
}

inline Expectation expected_random_score(std::span<const ExamTask> tasks, Subject subject) {
  std::vector<ExamTask> subset;
  for (const auto& t : tasks)
    if (t.subject == subject) subset.push_back(t);
  return expected_random_score(subset);
}

struct SimulationResult {
  Expectation mean;
  Expectation stddev;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
};

// One random answer sheet for `task`, drawn from `rng`.
template <typename Rng>
ExtractedAnswer random_answer(const ExamTask& task, Rng& rng) {
  ExtractedAnswer a;
  a.kind = task.kind();
  a.status = ExtractStatus::ok;
  if (task.kind() == TaskKind::mc) {
    a.letters.push_back(task.answers[uniform_below(rng, task.answers.size())].letter);
  } else {
    for (std::size_t i = 0; i < task.answer_hheader.size(); ++i)
      a.letters.push_back(task.answer_vheader[uniform_below(rng, task.answer_vheader.size())]);
  }
  return a;
}

// Monte Carlo estimate of the random-guess score. Trial i draws from its own
// generator seeded with mix64(seed + i), so results do not depend on how the
// trials are spread across threads.
inline SimulationResult simulate_random(std::span<const ExamTask> tasks, std::uint64_t seed,
                                        std::int64_t trials, unsigned threads = 0) {
  if (trials < 1) throw ContractViolation("simulate_random needs at least one trial");
  std::vector<ExamTask> usable;
  for (const auto& t : tasks)
    if (!t.answers.empty() && !t.answer_vheader.empty() && !t.correct_answer.empty()) usable.push_back(t);

  const auto n = static_cast<std::size_t>(trials);
  std::vector<int> single(n, 0);
  std::vector<int> matching(n, 0);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      SplitMix64 rng(mix64(seed + i));
      for (const auto& t : usable) {
        const TaskScore s = score_task(t, random_answer(t, rng));
        (t.kind() == TaskKind::mc ? single[i] : matching[i]) += s.points;
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    run(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t b = 0; b < n; b += chunk) pool.emplace_back(run, b, std::min(n, b + chunk));
  }

  auto moments = [&](auto value) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += value(i);
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) sq += (value(i) - mean) * (value(i) - mean);
    const double sd = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
    return std::pair{mean, sd};
  };
  const auto [ms, ss] = moments([&](std::size_t i) { return static_cast<double>(single[i]); });
  const auto [mm, sm] = moments([&](std::size_t i) { return static_cast<double>(matching[i]); });
  const auto [mt, st] = moments([&](std::size_t i) { return static_cast<double>(single[i] + matching[i]); });

  SimulationResult r;
  r.mean = {ms, mm, mt};
  r.stddev = {ss, sm, st};
  r.trials = trials;
  r.seed = seed;
  return r;
}

inline Json expectation_to_json(const Expectation& e) {
  return {{"single_answer", e.single_answer}, {"matching", e.matching}, {"total", e.total}};
}

inline Expectation expectation_from_json(const Json& j) {
  return {j.at("single_answer").get<double>(), j.at("matching").get<double>(), j.at("total").get<double>()};
}

inline Json baseline_to_json(const Expectation& analytic, const SimulationResult& sim) {
  return {{"analytic", expectation_to_json(analytic)},
          {"simulated",
           {{"mean", expectation_to_json(sim.mean)},
            {"stddev", expectation_to_json(sim.stddev)},
            {"trials", sim.trials},
            {"seed", sim.seed}}}};
}

}  // namespace examkit
