#include "smoothrl/verify.hpp"

#include <algorithm>
#include <cmath>

#include "smoothrl/certify.hpp"
#include "smoothrl/env.hpp"
#include "smoothrl/errors.hpp"
#include "smoothrl/normal.hpp"
#include "smoothrl/smoothing.hpp"

namespace smoothrl {

namespace {

std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> v(points);
  if (points == 1) {
    v[0] = 0.5 * (lo + hi);
    return v;
  }
  for (int i = 0; i < points; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  return v;
}

}  // namespace

TightnessResult tightness_experiment(double p, double budget, double sigma,
                                     std::uint64_t episodes, std::uint64_t seed) {
  if (!(p > 0.0 && p < 1.0)) throw BadConfig("tightness needs p in (0,1)");
  if (!(sigma > 0.0)) throw InvalidSigma();

  WorstCaseGame env(/*nu=*/1.0, /*observation=*/{0.0, 0.0});
  const double omega = sigma * norm_ppf(p);  // o1 = 0

  const Policy policy = [omega](std::span<const double> stacked) -> Action {
    return stacked[0] <= omega ? 0 : 1;
  };
  const Adversary structured = [budget](const AdversaryView& view, Rng&) {
    std::vector<double> eps(view.clean_frame.size(), 0.0);
    if (view.step_index == 0) eps[0] = budget;
    return eps;
  };

  SmoothingConfig cfg{sigma, /*frames=*/1, seed};
  std::uint64_t successes = 0;
  for (std::uint64_t e = 0; e < episodes; ++e) {
    const Rollout r = rollout(env, policy, cfg, structured, budget, e);
    if (r.total_reward == env.nu()) ++successes;
  }

  TightnessResult res;
  res.p = p;
  res.budget = budget;
  res.sigma = sigma;
  res.bound = theorem1_lower(p, budget, sigma);
  res.empirical = static_cast<double>(successes) / static_cast<double>(episodes);
  res.std_err = std::sqrt(std::max(res.bound * (1.0 - res.bound), 1e-12) /
                          static_cast<double>(episodes));
  res.episodes = episodes;
  return res;
}

SoundnessResult soundness_search(double budget, double sigma, double omega1, double omega2,
                                 const SoundnessGrid& grid, std::uint64_t n_select,
                                 std::uint64_t n_eval, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw InvalidSigma();
  if (grid.eps1_points < 1 || grid.eps2_points < 1 || grid.buckets < 1)
    throw BadConfig("soundness grid must be non-empty");

  SoundnessResult res;
  res.budget = budget;
  res.sigma = sigma;
  res.n_select = n_select;
  res.n_eval = n_eval;

  // History buckets on the quantiles of the clean eta_1 distribution.
  std::vector<double> edges;
  for (int k = 1; k < grid.buckets; ++k)
    edges.push_back(sigma * norm_ppf(static_cast<double>(k) / grid.buckets));
  const auto bucket_of = [&edges](double eta1) {
    return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), eta1) - edges.begin());
  };

  // Clean success probability through the full rollout machinery. The game
  // always runs exactly two steps, so a parity toggle selects the per-step
  // threshold.
  TwoStepGame env(0.0, 0.0);
  int call_parity = 0;
  const Policy policy2 = [omega1, omega2, &call_parity](std::span<const double> stacked) -> Action {
    const double t = (call_parity == 0) ? omega1 : omega2;
    call_parity ^= 1;
    return stacked[0] <= t ? 0 : 1;
  };

  SmoothingConfig clean_cfg{sigma, 1, derive_seed(seed, 100)};
  std::uint64_t clean_successes = 0;
  for (std::uint64_t e = 0; e < n_eval; ++e) {
    call_parity = 0;
    const Rollout r = rollout(env, policy2, clean_cfg, e);
    if (r.total_reward == 1.0) ++clean_successes;
  }
  res.p0_hat = static_cast<double>(clean_successes) / static_cast<double>(n_eval);
  res.bound = theorem1_lower(res.p0_hat, budget, sigma);

  // Selection phase: direct sampling of (eta_1, delta_2); for each eps1 the
  // per-bucket minimizing eps2 is separable, so the grid minimum is exact
  // over the strategy class without enumerating 11^buckets combinations.
  Rng rng_sel(derive_seed(seed, 200));
  const std::vector<double> eps1_grid = linspace(-budget, budget, grid.eps1_points);
  double best_value = 2.0;
  double best_nonadaptive = 2.0;

  std::vector<std::vector<std::uint64_t>> counts(
      grid.buckets, std::vector<std::uint64_t>(grid.eps2_points, 0));

  for (double eps1 : eps1_grid) {
    const double rem_sq = budget * budget - eps1 * eps1;
    const double e2max = rem_sq > 0.0 ? std::sqrt(rem_sq) : 0.0;
    const std::vector<double> eps2_grid = linspace(-e2max, e2max, grid.eps2_points);
    for (double e2 : eps2_grid) {
      if (eps1 * eps1 + e2 * e2 > budget * budget * (1.0 + 1e-9) + 1e-15)
        throw GridInfeasible("grid strategy exceeds the episode budget");
    }
    for (auto& row : counts) std::fill(row.begin(), row.end(), 0);

    for (std::uint64_t i = 0; i < n_select; ++i) {
      const double eta1 = eps1 + sigma * rng_sel.normal();
      const double delta2 = sigma * rng_sel.normal();
      if (eta1 > omega1) continue;  // first action already wrong
      const int b = bucket_of(eta1);
      for (int c = 0; c < grid.eps2_points; ++c) {
        if (eps2_grid[c] + delta2 <= omega2) counts[b][c] += 1;
      }
    }

    double value = 0.0;
    std::vector<double> chosen(grid.buckets);
    for (int b = 0; b < grid.buckets; ++b) {
      int cbest = 0;
      for (int c = 1; c < grid.eps2_points; ++c)
        if (counts[b][c] < counts[b][cbest]) cbest = c;
      chosen[b] = eps2_grid[cbest];
      value += static_cast<double>(counts[b][cbest]);
    }
    value /= static_cast<double>(n_select);
    if (value < best_value) {
      best_value = value;
      res.chosen_eps1 = eps1;
      res.chosen_eps2 = chosen;
    }
    // Non-adaptive subset: one eps2 for every bucket.
    for (int c = 0; c < grid.eps2_points; ++c) {
      double v = 0.0;
      for (int b = 0; b < grid.buckets; ++b) v += static_cast<double>(counts[b][c]);
      best_nonadaptive = std::min(best_nonadaptive, v / static_cast<double>(n_select));
    }
  }
  res.min_adaptive_sel = best_value;
  res.min_nonadaptive_sel = best_nonadaptive;

  // Evaluation phase: fresh episodes of the chosen strategy through the
  // rollout machinery (unbiased; the selection minimum is optimistic).
  const double eps1_star = res.chosen_eps1;
  const std::vector<double> eps2_star = res.chosen_eps2;
  const Adversary adversary = [eps1_star, &eps2_star, &bucket_of](const AdversaryView& view,
                                                                  Rng&) {
    std::vector<double> eps(1, 0.0);
    if (view.step_index == 0) {
      eps[0] = eps1_star;
    } else {
      const double eta1 = view.history->noisy(0)[0] - view.history->clean(0)[0];
      eps[0] = eps2_star[bucket_of(eta1)];
    }
    return eps;
  };

  SmoothingConfig eval_cfg{sigma, 1, derive_seed(seed, 300)};
  std::uint64_t successes = 0;
  for (std::uint64_t e = 0; e < n_eval; ++e) {
    call_parity = 0;
    const Rollout r = rollout(env, policy2, eval_cfg, adversary, budget, e);
    if (r.total_reward == 1.0) ++successes;
  }
  res.min_adaptive = static_cast<double>(successes) / static_cast<double>(n_eval);

  // Combined allowance: binomial error of the evaluation plus the bound's
  // sensitivity to the p0 estimate.
  const double se_eval = std::sqrt(
      std::max(res.min_adaptive * (1.0 - res.min_adaptive), res.bound * (1.0 - res.bound)) /
      static_cast<double>(n_eval));
  const double se_p0 =
      std::sqrt(std::max(res.p0_hat * (1.0 - res.p0_hat), 1e-12) / static_cast<double>(n_eval));
  const double z0 = norm_ppf(std::clamp(res.p0_hat, 1e-12, 1.0 - 1e-12));
  const double dbound_dp = norm_pdf(z0 - budget / sigma) / norm_pdf(z0);
  res.tolerance = 3.0 * (se_eval + dbound_dp * se_p0);
  res.sound = res.min_adaptive >= res.bound - res.tolerance;
  return res;
}

NonisometryResult nonisometry_demo(double sigma, double c, bool adaptive,
                                   std::uint64_t episodes, std::uint64_t seed,
                                   std::size_t cloud_keep) {
  if (!(sigma > 0.0)) throw InvalidSigma();
  NonisometryResult res;
  res.sigma = sigma;
  res.c = c;
  res.adaptive = adaptive;
  res.episodes = episodes;
  res.expected_cov = adaptive ? c * sigma * std::sqrt(2.0 / M_PI) : 0.0;
  const double v = sigma * sigma + c * c;
  res.expected_kurtosis = 3.0 - 2.0 * c * c * c * c / (v * v);

  TwoStepGame env(0.0, 0.0);
  const Policy policy = [](std::span<const double>) -> Action { return 0; };
  const Adversary adversary = [c, adaptive](const AdversaryView& view, Rng& rng) {
    std::vector<double> eps(1, 0.0);
    if (view.step_index == 1) {
      if (adaptive) {
        const double eta1 = view.history->noisy(0)[0] - view.history->clean(0)[0];
        eps[0] = eta1 >= 0.0 ? c : -c;
      } else {
        eps[0] = rng.uniform() < 0.5 ? c : -c;
      }
    }
    return eps;
  };

  SmoothingConfig cfg{sigma, 1, seed};
  double s1 = 0.0, s2 = 0.0, s12 = 0.0, m2 = 0.0, m4 = 0.0;
  std::vector<double> eta2s;
  eta2s.reserve(episodes);
  for (std::uint64_t e = 0; e < episodes; ++e) {
    const Rollout r = rollout(env, policy, cfg, adversary, c, e);
    const double eta1 = r.steps[0].delta[0] + r.steps[0].eps[0];
    const double eta2 = r.steps[1].delta[0] + r.steps[1].eps[0];
    s1 += eta1;
    s2 += eta2;
    s12 += eta1 * eta2;
    eta2s.push_back(eta2);
    if (res.cloud.size() < cloud_keep) res.cloud.emplace_back(eta1, eta2);
  }
  const double n = static_cast<double>(episodes);
  const double mean1 = s1 / n, mean2 = s2 / n;
  res.cov_offdiag = s12 / n - mean1 * mean2;
  for (double x : eta2s) {
    const double d = x - mean2;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  res.kurtosis2 = m4 / (m2 * m2);
  return res;
}

}  // namespace smoothrl
