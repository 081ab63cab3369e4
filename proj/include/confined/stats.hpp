#pragma once

#include "confined/types.hpp"

#include <utility>
#include <vector>

namespace confined::stats {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Survival function of the chi-square distribution with df degrees of
/// freedom: P[X > x].
double chi2_sf(double x, double df);

/// Survival function of the Kolmogorov distribution,
/// Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_sf(double lambda);

/// Pearson chi-square statistic for observed counts against expected
/// probabilities (must sum to ~1). Returns (statistic, dof = cells - 1).
std::pair<double, int> chi2_statistic(const std::vector<long>& observed,
                                      const std::vector<double>& expected_prob);

/// One-sample Kolmogorov-Smirnov p-value against Uniform[0,1].
double ks_uniform_pvalue(std::vector<double> samples);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanStderr mean_stderr(const std::vector<double>& values);

/// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Slope of log(err) against log(h); the observed convergence order.
double loglog_order(const std::vector<double>& h,
                    const std::vector<double>& err);

}  // namespace confined::stats
