#pragma once
// Standard normal CDF, quantile and density. The quantile is the rational
// approximation of Wichura's PPND16 (absolute error well below 1e-12 across
// the open unit interval), the CDF goes through erfc.

namespace smoothrl {

double norm_cdf(double x);
double norm_pdf(double x);

// Inverse CDF; requires p in (0,1), returns +-inf at the endpoints.
double norm_ppf(double p);

}  // namespace smoothrl
