#include "smoothrl/certify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smoothrl/errors.hpp"
#include "smoothrl/normal.hpp"
#include "smoothrl/stats.hpp"

namespace smoothrl {

namespace {

constexpr double kProbClamp = 1e-12;

void check_sigma(double sigma) {
  if (!(sigma > 0.0)) throw InvalidSigma();
}

void check_inputs(const BoundInputs& in) {
  if (in.samples.empty()) throw BadConfig("empty sample set");
  if (!(in.alpha > 0.0) || in.alpha > 1.0) throw BadConfig("alpha must be in (0,1]");
  check_sigma(in.sigma);
  if (!std::isfinite(in.reward_min) || !std::isfinite(in.reward_max) ||
      !(in.reward_min <= in.reward_max))
    throw BadConfig("certification needs known finite reward bounds");
  for (double b : in.budgets)
    if (!(b >= 0.0)) throw BadConfig("budgets must be >= 0");
  for (double r : in.samples)
    if (r < in.reward_min - 1e-9 || r > in.reward_max + 1e-9)
      throw BadConfig("sample outside the declared reward bounds");
}

}  // namespace

double theorem1_lower(double p, double budget, double sigma) {
  check_sigma(sigma);
  if (!(budget >= 0.0)) throw BadConfig("budget must be >= 0");
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return norm_cdf(norm_ppf(pc) - budget / sigma);
}

double theorem1_upper(double p, double budget, double sigma) {
  check_sigma(sigma);
  if (!(budget >= 0.0)) throw BadConfig("budget must be >= 0");
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return norm_cdf(norm_ppf(pc) + budget / sigma);
}

double round_down_output(double x) { return std::floor(x * 1e9) / 1e9; }

std::vector<double> default_budget_grid(double sigma) {
  if (!(sigma > 0.0)) return {0.0};
  std::vector<double> grid{0.0};
  for (double m : {0.125, 0.25, 0.5, 1.0, 2.0, 4.0}) grid.push_back(m * sigma);
  return grid;
}

const char* cert_method_name(CertMethod m) {
  switch (m) {
    case CertMethod::BernoulliCP: return "bernoulli_cp";
    case CertMethod::CdfDkw: return "cdf_dkw";
    case CertMethod::PerThresholdCP: return "per_threshold_cp";
  }
  return "?";
}

CertMethod cert_method_from_name(const std::string& name) {
  if (name == "bernoulli_cp") return CertMethod::BernoulliCP;
  if (name == "cdf_dkw") return CertMethod::CdfDkw;
  if (name == "per_threshold_cp") return CertMethod::PerThresholdCP;
  throw BadConfig("unknown certification method: " + name);
}

namespace {

Certificate certify_bernoulli(const BoundInputs& in) {
  std::int64_t k = 0;
  for (double r : in.samples) {
    if (r == 1.0) {
      ++k;
    } else if (r != 0.0) {
      throw BadConfig("BernoulliCP requires {0,1} rewards");
    }
  }
  const auto n = static_cast<std::int64_t>(in.samples.size());
  const double p_lower = clopper_pearson_lower(k, n, in.alpha);

  Certificate cert;
  cert.method = CertMethod::BernoulliCP;
  cert.alpha = in.alpha;
  cert.sigma = in.sigma;
  cert.n = in.samples.size();
  for (double b : in.budgets) {
    BudgetCertificate bc;
    bc.budget = b;
    const double p_adv = theorem1_lower(p_lower, b, in.sigma);
    bc.lower_bound = round_down_output(p_adv);
    bc.envelope.push_back({0.0, 1.0 - p_adv});
    cert.per_budget.push_back(std::move(bc));
  }
  return cert;
}

Certificate certify_cdf_dkw(const BoundInputs& in) {
  EcdfBand band(in.samples, in.alpha);

  // Threshold grid: reward_min plus the distinct sample values; the last
  // interval is closed off at reward_max. Rewards are discrete, so the
  // step-function sum is exact.
  std::vector<double> grid{in.reward_min};
  for (double x : band.sorted_samples()) {
    if (x > grid.back() && x < in.reward_max) grid.push_back(x);
  }

  Certificate cert;
  cert.method = CertMethod::CdfDkw;
  cert.alpha = in.alpha;
  cert.sigma = in.sigma;
  cert.n = in.samples.size();
  for (double b : in.budgets) {
    BudgetCertificate bc;
    bc.budget = b;
    double acc = in.reward_min;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double x = grid[k];
      const double x_next = k + 1 < grid.size() ? grid[k + 1] : in.reward_max;
      const double adv_upper = std::min(1.0, theorem1_upper(band.upper(x), b, in.sigma));
      bc.envelope.push_back({x, adv_upper});
      acc += (x_next - x) * (1.0 - adv_upper);
    }
    bc.lower_bound = round_down_output(acc);
    cert.per_budget.push_back(std::move(bc));
  }
  return cert;
}

Certificate certify_per_threshold(const BoundInputs& in) {
  int t_count = in.num_thresholds;
  if (t_count == 0) t_count = static_cast<int>(std::llround(in.reward_max - in.reward_min));
  if (t_count < 1) throw BadConfig("PerThresholdCP needs at least one threshold");
  for (double r : in.samples) {
    if (std::fabs(r - std::round(r)) > 1e-9)
      throw BadConfig("PerThresholdCP requires integer rewards");
  }
  const auto n = static_cast<std::int64_t>(in.samples.size());
  const double alpha_each = in.alpha / t_count;

  // Survival counts per threshold in one sorted pass.
  std::vector<double> sorted = in.samples;
  std::sort(sorted.begin(), sorted.end());

  Certificate cert;
  cert.method = CertMethod::PerThresholdCP;
  cert.alpha = in.alpha;
  cert.sigma = in.sigma;
  cert.n = in.samples.size();

  std::vector<double> p_lower(t_count);
  for (int t = 1; t <= t_count; ++t) {
    const double threshold = in.reward_min + static_cast<double>(t);
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), threshold - 1e-9);
    const std::int64_t k = n - (it - sorted.begin());
    p_lower[t - 1] = clopper_pearson_lower(k, n, alpha_each);
  }

  for (double b : in.budgets) {
    BudgetCertificate bc;
    bc.budget = b;
    double acc = in.reward_min;
    for (int t = 1; t <= t_count; ++t) {
      const double p_adv = theorem1_lower(p_lower[t - 1], b, in.sigma);
      acc += p_adv;
      bc.envelope.push_back({in.reward_min + static_cast<double>(t - 1), 1.0 - p_adv});
    }
    bc.lower_bound = round_down_output(acc);
    cert.per_budget.push_back(std::move(bc));
  }
  return cert;
}

}  // namespace

Certificate certify_expected_reward(const BoundInputs& inputs, CertMethod method) {
  check_inputs(inputs);
  switch (method) {
    case CertMethod::BernoulliCP: return certify_bernoulli(inputs);
    case CertMethod::CdfDkw: return certify_cdf_dkw(inputs);
    case CertMethod::PerThresholdCP: return certify_per_threshold(inputs);
  }
  throw BadConfig("unknown certification method");
}

}  // namespace smoothrl
