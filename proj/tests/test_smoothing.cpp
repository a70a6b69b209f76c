#include <doctest.h>

#include <cmath>
#include <vector>

#include "smoothrl/env.hpp"
#include "smoothrl/errors.hpp"
#include "smoothrl/normal.hpp"
#include "smoothrl/smoothing.hpp"
#include "smoothrl/transcript.hpp"

using namespace smoothrl;

namespace {

Policy alternating_policy() {
  return [](std::span<const double> stacked) -> Action {
    return stacked[stacked.size() - 1] > 0.0 ? 1 : 0;
  };
}

}  // namespace

TEST_CASE("budget ledger accounting") {
  BudgetLedger ledger(1.0);
  CHECK(ledger.remaining() == 1.0);
  ledger.charge(std::vector<double>{0.6, 0.0});
  CHECK(ledger.used_sq() == doctest::Approx(0.36).epsilon(1e-15));
  CHECK(ledger.remaining() == doctest::Approx(0.8).epsilon(1e-12));
  ledger.charge(std::vector<double>{0.0, 0.8});
  CHECK(ledger.remaining() == doctest::Approx(0.0));
  CHECK_THROWS_AS(ledger.charge(std::vector<double>{0.1, 0.0}), BudgetExceeded);
  CHECK_THROWS_AS(BudgetLedger(-1.0), BadConfig);
}

TEST_CASE("frame buffer stacks oldest first with zero padding") {
  FrameBuffer buf(3, 2);
  const std::vector<double> zero{0.0, 0.0};
  buf.push(std::vector<double>{1.0, 2.0}, zero, zero);
  CHECK(buf.stacked() == std::vector<double>{0, 0, 0, 0, 1, 2});
  buf.push(std::vector<double>{3.0, 4.0}, zero, zero);
  CHECK(buf.stacked() == std::vector<double>{0, 0, 1, 2, 3, 4});
  buf.push(std::vector<double>{5.0, 6.0}, zero, zero);
  CHECK(buf.stacked() == std::vector<double>{1, 2, 3, 4, 5, 6});
  buf.push(std::vector<double>{7.0, 8.0}, zero, zero);
  CHECK(buf.stacked() == std::vector<double>{3, 4, 5, 6, 7, 8});
  CHECK_THROWS_AS(buf.push(std::vector<double>{1.0}, zero, zero), DimMismatch);
}

TEST_CASE("zero noise and no adversary reproduce the raw agent exactly") {
  CartPole env1, env2;
  const Policy policy = alternating_policy();
  const SmoothingConfig cfg{0.0, 1, 77};

  const Rollout r = rollout(env1, policy, cfg, 3);

  // Re-run the base loop by hand with the same env stream.
  const std::uint64_t ep_seed = derive_seed(cfg.seed, 3);
  Rng rng_env(derive_seed(ep_seed, 0));
  EnvState s = env2.reset(rng_env);
  double total = 0.0;
  while (!s.done) {
    const int a = s.features[3] > 0.0 ? 1 : 0;
    const StepResult sr = env2.step(a);
    total += sr.reward;
    s = sr.state;
  }
  CHECK(r.total_reward == total);
  for (const auto& step : r.steps) {
    for (double d : step.delta) CHECK(d == 0.0);
    for (double e : step.eps) CHECK(e == 0.0);
  }
}

TEST_CASE("identical seeds give bit-identical transcripts") {
  CartPole env;
  const Policy policy = alternating_policy();
  const SmoothingConfig cfg{0.3, 5, 123};
  const Rollout a = rollout(env, policy, cfg, 9);
  const Rollout b = rollout(env, policy, cfg, 9);
  CHECK(rollout_to_jsonl(a, true) == rollout_to_jsonl(b, true));
  const Rollout c = rollout(env, policy, cfg, 10);
  CHECK(rollout_to_jsonl(a, true) != rollout_to_jsonl(c, true));
}

TEST_CASE("each frame receives its noise exactly once across stacks") {
  // The policy records every stacked observation; each frame's noisy value
  // must reappear unchanged in later stacks.
  CartPole env;
  std::vector<std::vector<double>> seen;
  const Policy recorder = [&seen](std::span<const double> stacked) -> Action {
    seen.emplace_back(stacked.begin(), stacked.end());
    return seen.size() % 2 ? 0 : 1;
  };
  const int frames = 4, dim = 4;
  const SmoothingConfig cfg{0.25, frames, 321};
  const Rollout r = rollout(env, recorder, cfg, 0);

  REQUIRE(seen.size() == r.steps.size());
  for (std::size_t t = 0; t < r.steps.size(); ++t) {
    // Noisy frame t reconstructed from the transcript.
    std::vector<double> noisy(dim);
    for (int i = 0; i < dim; ++i)
      noisy[i] = r.steps[t].clean[i] + r.steps[t].eps[i] + r.steps[t].delta[i];
    // It must appear identically in every stack that includes frame t.
    for (std::size_t u = t; u < std::min(r.steps.size(), t + frames); ++u) {
      const int slot = frames - 1 - static_cast<int>(u - t);
      for (int i = 0; i < dim; ++i)
        CHECK(seen[u][slot * dim + i] == noisy[i]);
    }
  }
}

TEST_CASE("noise draws have the configured standard deviation") {
  WorstCaseGame env(1.0, {0.0, 0.0});
  const Policy policy = [](std::span<const double>) -> Action { return 0; };
  const double sigma = 0.7;
  const SmoothingConfig cfg{sigma, 1, 555};
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  for (std::uint64_t e = 0; e < 50000; ++e) {
    const Rollout r = rollout(env, policy, cfg, e);
    for (double d : r.steps[0].delta) {
      sum += d;
      sum_sq += d * d;
      ++n;
    }
  }
  const double mean = sum / n;
  const double std = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std == doctest::Approx(sigma).epsilon(0.01));
  CHECK(std::fabs(mean) < 0.01);
}

TEST_CASE("episode budget is respected for any adversary") {
  CartPole env;
  const Policy policy = alternating_policy();
  // Spends an equal slice of the remaining budget each step.
  const Adversary greedy_spender = [](const AdversaryView& view, Rng&) {
    std::vector<double> eps(view.clean_frame.size(), 0.0);
    eps[0] = view.remaining_budget * 0.3;
    return eps;
  };
  const SmoothingConfig cfg{0.2, 5, 888};
  for (double budget : {0.0, 0.5, 2.0}) {
    const Rollout r = rollout(env, policy, cfg, greedy_spender, budget, 1);
    CHECK(r.spent_sq <= budget * budget + 1e-12);
    double manual = 0.0;
    for (const auto& s : r.steps)
      for (double e : s.eps) manual += e * e;
    CHECK(manual == doctest::Approx(r.spent_sq).epsilon(1e-12));
  }
}

TEST_CASE("overspending adversaries are rejected") {
  CartPole env;
  const Policy policy = alternating_policy();
  const Adversary cheat = [](const AdversaryView& view, Rng&) {
    return std::vector<double>(view.clean_frame.size(), 10.0);
  };
  const SmoothingConfig cfg{0.0, 1, 1};
  CHECK_THROWS_AS(rollout(env, policy, cfg, cheat, 0.5, 0), BudgetExceeded);

  const Adversary wrong_dim = [](const AdversaryView&, Rng&) {
    return std::vector<double>{1.0};
  };
  CHECK_THROWS_AS(rollout(env, policy, cfg, wrong_dim, 10.0, 0), DimMismatch);
}

TEST_CASE("threshold policy success on the worst-case game matches the gaussian cdf") {
  // No adversary: P(success) = Phi((omega - o1) / sigma).
  const double sigma = 0.5;
  const double omega = 0.2;
  WorstCaseGame env(1.0, {0.0, 0.0});
  const Policy policy = [omega](std::span<const double> stacked) -> Action {
    return stacked[0] <= omega ? 0 : 1;
  };
  const SmoothingConfig cfg{sigma, 1, 31337};
  const std::uint64_t n = 200000;
  std::uint64_t wins = 0;
  for (std::uint64_t e = 0; e < n; ++e) {
    if (rollout(env, policy, cfg, e).total_reward == 1.0) ++wins;
  }
  const double p_hat = static_cast<double>(wins) / n;
  const double p_true = norm_cdf(omega / sigma);
  const double se = std::sqrt(p_true * (1.0 - p_true) / n);
  CHECK(std::fabs(p_hat - p_true) <= 3.5 * se);
}

TEST_CASE("transcript jsonl round trip") {
  CartPole env;
  const Policy policy = alternating_policy();
  const SmoothingConfig cfg{0.15, 3, 2024};
  const Rollout r = rollout(env, policy, cfg, 5);

  const Rollout back = rollout_from_jsonl(rollout_to_jsonl(r, true));
  CHECK(back.total_reward == r.total_reward);
  CHECK(back.sigma == r.sigma);
  CHECK(back.frames == r.frames);
  CHECK(back.steps.size() == r.steps.size());
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    CHECK(back.steps[i].clean == r.steps[i].clean);
    CHECK(back.steps[i].delta == r.steps[i].delta);
    CHECK(back.steps[i].eps == r.steps[i].eps);
    CHECK(back.steps[i].action == r.steps[i].action);
    CHECK(back.steps[i].reward == r.steps[i].reward);
  }

  const Rollout summary = rollout_from_jsonl(rollout_to_jsonl(r, false));
  CHECK(summary.total_reward == r.total_reward);
  CHECK(summary.steps.empty());
}
