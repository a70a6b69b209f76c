#pragma once
// Exact binomial (Clopper-Pearson) lower bounds and DKW empirical-CDF
// confidence envelopes.

#include <cstdint>
#include <vector>

namespace smoothrl {

// Regularized incomplete beta function I_x(a, b).
double reg_inc_beta(double a, double b, double x);

// Inverse of I_x(a, b) in x for fixed (a, b): smallest x with I_x(a,b) >= y.
double inv_reg_inc_beta(double a, double b, double y);

// One-sided exact lower confidence bound for a binomial proportion:
// the alpha-quantile of Beta(k, n-k+1); 0 when k == 0.
// Throws std::invalid_argument on k > n or alpha outside (0, 1].
double clopper_pearson_lower(std::int64_t k, std::int64_t n, double alpha);

// Empirical CDF over a sample with a simultaneous DKW band of half-width
// sqrt(ln(2/alpha) / (2m)), clipped to [0,1].
class EcdfBand {
 public:
  EcdfBand(std::vector<double> samples, double alpha);

  double ecdf(double x) const;        // F_m(x), fraction of samples <= x
  double lower(double x) const;       // max(F_m(x) - halfwidth, 0)
  double upper(double x) const;       // min(F_m(x) + halfwidth, 1)
  double half_width() const { return half_width_; }
  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted_samples() const { return sorted_; }

 private:
  std::vector<double> sorted_;
  double half_width_;
};

}  // namespace smoothrl
