#pragma once
// Certified lower bounds on expected total episode reward against any
// adaptive l2-budget-bounded observation adversary: the pointwise
// Gaussian-smoothing bound plus three ways of turning clean-rollout samples
// into an adversarial expected-reward certificate.

#include <cstddef>
#include <string>
#include <vector>

namespace smoothrl {

// Lower bound on P[h=1] under any budget-B adversary given clean probability
// p: Phi(Phi^-1(p) - B/sigma). p in {0,1} are fixed points; p is clamped to
// [1e-12, 1-1e-12] before inversion. Throws InvalidSigma on sigma <= 0.
double theorem1_lower(double p, double budget, double sigma);
// Matching upper bound with +B/sigma.
double theorem1_upper(double p, double budget, double sigma);

enum class CertMethod { BernoulliCP, CdfDkw, PerThresholdCP };

struct BoundInputs {
  std::vector<double> samples;   // episode total rewards
  double alpha = 0.05;           // overall failure probability
  double sigma = 0.0;            // smoothing noise std (> 0)
  std::vector<double> budgets;   // B values (>= 0)
  double reward_min = 0.0;       // known bounds on the episode total reward
  double reward_max = 0.0;
  // PerThresholdCP: number of unit-step thresholds above reward_min
  // (e.g. 200 for the 200-step survival task). 0 = round(reward_max - reward_min).
  int num_thresholds = 0;
};

struct CdfPoint {
  double x = 0.0;          // threshold
  double adv_upper = 0.0;  // adversarial upper bound on F(x)
};

struct BudgetCertificate {
  double budget = 0.0;
  double lower_bound = 0.0;  // certified expected-reward lower bound
  std::vector<CdfPoint> envelope;
};

struct Certificate {
  CertMethod method = CertMethod::CdfDkw;
  double alpha = 0.05;
  double sigma = 0.0;
  std::size_t n = 0;
  std::vector<BudgetCertificate> per_budget;
};

Certificate certify_expected_reward(const BoundInputs& inputs, CertMethod method);

// Default certification budget grid: 0 plus a geometric ladder up to 4*sigma.
std::vector<double> default_budget_grid(double sigma);

// Conservative output rounding (downward, 1e-9 granularity).
double round_down_output(double x);

const char* cert_method_name(CertMethod m);
CertMethod cert_method_from_name(const std::string& name);

}  // namespace smoothrl
