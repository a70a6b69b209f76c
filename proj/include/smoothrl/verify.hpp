#pragma once
// Empirical validation of the certificate: tightness on the worst-case
// one-step construction, a soundness search over discretized adaptive
// two-step adversaries, and the non-isometry illustration.

#include <cstdint>
#include <utility>
#include <vector>

namespace smoothrl {

struct TightnessResult {
  double p = 0.0;
  double budget = 0.0;
  double sigma = 0.0;
  double bound = 0.0;      // certified success probability
  double empirical = 0.0;  // observed success rate under the structured adversary
  double std_err = 0.0;    // binomial standard error at the bound
  std::uint64_t episodes = 0;
};

// Threshold policy at omega = o1 + sigma * Phi^-1(p) on the worst-case
// one-step game, attacked by the structured adversary that spends B on the
// first coordinate. The empirical success rate should match the bound.
TightnessResult tightness_experiment(double p, double budget, double sigma,
                                     std::uint64_t episodes, std::uint64_t seed);

struct SoundnessGrid {
  int eps1_points = 21;  // first-step offsets in [-B, B]
  int eps2_points = 11;  // second-step offsets per history bucket
  int buckets = 8;       // history buckets on eta_1 quantiles
};

struct SoundnessResult {
  double budget = 0.0;
  double sigma = 0.0;
  double p0_hat = 0.0;              // clean success estimate
  double bound = 0.0;               // theorem bound at p0_hat
  double min_adaptive = 0.0;        // fresh-sample estimate of the selected adversary
  double min_adaptive_sel = 0.0;    // selection-phase minimum, adaptive class
  double min_nonadaptive_sel = 0.0; // selection-phase minimum, constant-eps2 subset
  double tolerance = 0.0;           // combined 3-sigma Monte Carlo allowance
  bool sound = false;               // min_adaptive >= bound - tolerance
  double chosen_eps1 = 0.0;
  std::vector<double> chosen_eps2;  // per bucket
  std::uint64_t n_select = 0, n_eval = 0;
};

// Searches the discretized adaptive adversary class on the two-step game for
// the strategy minimizing the success probability, then re-evaluates the
// chosen strategy on fresh episodes through the rollout machinery.
// omega1/omega2 are the policy thresholds. Throws GridInfeasible if a grid
// strategy violates the episode budget (must not happen by construction).
SoundnessResult soundness_search(double budget, double sigma, double omega1, double omega2,
                                 const SoundnessGrid& grid, std::uint64_t n_select,
                                 std::uint64_t n_eval, std::uint64_t seed);

struct NonisometryResult {
  double sigma = 0.0;
  double c = 0.0;   // magnitude of the second-step response
  bool adaptive = true;
  double cov_offdiag = 0.0;        // empirical Cov(eta_1, eta_2)
  double kurtosis2 = 0.0;          // empirical kurtosis of eta_2
  double expected_cov = 0.0;       // c * sigma * sqrt(2/pi) when adaptive, else 0
  double expected_kurtosis = 0.0;  // 3 - 2c^4 / (sigma^2 + c^2)^2
  std::uint64_t episodes = 0;
  std::vector<std::pair<double, double>> cloud;  // (eta_1, eta_2) subset for plotting
};

// Second-step offset c*sign(eta_1) (adaptive) or c*coin (independent): the
// joint offset distribution stops being an isometric Gaussian exactly when
// the adversary adapts.
NonisometryResult nonisometry_demo(double sigma, double c, bool adaptive,
                                   std::uint64_t episodes, std::uint64_t seed,
                                   std::size_t cloud_keep = 0);

}  // namespace smoothrl
