#pragma once

#include "confined/domain.hpp"
#include "confined/integrators.hpp"
#include "confined/types.hpp"

#include <nlohmann/json.hpp>

namespace confined {

struct MmdOptions {
  double bandwidth = 0.0;  // <= 0: median pairwise distance of X union Y
  int threads = 0;
};

/// Biased V-statistic MMD with Gaussian kernel exp(-|a-b|^2 / (2 sigma^2));
/// returns sqrt of the nonnegative MMD^2. Zero on identical multisets.
double mmd(const MatXd& x, const MatXd& y, const MmdOptions& options = {});

double median_pairwise_distance(const MatXd& pooled, int max_points = 4096);

/// Fraction of points with contains() false, at strict tolerance 0
/// (boundary counts as inside).
double constraint_violation(const MatXd& points, const Domain<double>& domain);

/// Position chi-square against the stationary law (uniform, or Gibbs weights
/// for nonzero drift) on a grid, plus velocity moment z-scores when
/// velocities are given. Needs at least 1000 samples; d <= 2.
struct StationarityReport {
  double position_chi2 = 0.0;
  int position_dof = 0;
  double position_p = 1.0;
  VecXd velocity_mean_z;
  VecXd velocity_var_z;
  VecXd velocity_kurtosis_z;

  nlohmann::json to_json() const;
};

StationarityReport stationarity_tests(const MatXd& positions,
                                      const MatXd* velocities,
                                      const Domain<double>& domain,
                                      const Drift<double>& drift,
                                      int grid = 10);

}  // namespace confined
