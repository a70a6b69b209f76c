#include "smoothrl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smoothrl {

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double betacf(double a, double b, double x) {
  constexpr int max_iter = 400;
  constexpr double eps = 3e-16;
  constexpr double fpmin = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double inv_reg_inc_beta(double a, double b, double y) {
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  // Bisection to ~1e-15; the integrand is monotone in x.
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (reg_inc_beta(a, b, mid) < y) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-16 * (1.0 + mid)) break;
  }
  return 0.5 * (lo + hi);
}

double clopper_pearson_lower(std::int64_t k, std::int64_t n, double alpha) {
  if (n < 1 || k < 0 || k > n) throw std::invalid_argument("invalid binomial counts");
  if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("alpha must be in (0,1]");
  if (k == 0) return 0.0;
  if (k == n) return std::pow(alpha, 1.0 / static_cast<double>(n));
  return inv_reg_inc_beta(static_cast<double>(k), static_cast<double>(n - k + 1), alpha);
}

EcdfBand::EcdfBand(std::vector<double> samples, double alpha) : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw std::invalid_argument("empty sample");
  if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("alpha must be in (0,1]");
  std::sort(sorted_.begin(), sorted_.end());
  half_width_ = std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(sorted_.size())));
}

double EcdfBand::ecdf(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EcdfBand::lower(double x) const { return std::max(ecdf(x) - half_width_, 0.0); }

double EcdfBand::upper(double x) const { return std::min(ecdf(x) + half_width_, 1.0); }

}  // namespace smoothrl
