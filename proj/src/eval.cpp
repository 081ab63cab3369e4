#include "confined/eval.hpp"

#include "confined/errors.hpp"
#include "confined/parallel.hpp"
#include "confined/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace confined {

double median_pairwise_distance(const MatXd& pooled, int max_points) {
  const Index n = pooled.rows();
  if (n < 2) throw std::invalid_argument("median distance: need >= 2 points");
  // Deterministic stride subsample keeps the pair count bounded.
  std::vector<Index> idx;
  const Index stride = std::max<Index>(1, n / max_points);
  for (Index i = 0; i < n; i += stride) idx.push_back(i);
  std::vector<double> dists;
  dists.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i + 1; j < idx.size(); ++j)
      dists.push_back((pooled.row(idx[i]) - pooled.row(idx[j])).norm());
  auto mid = dists.begin() + dists.size() / 2;
  std::nth_element(dists.begin(), mid, dists.end());
  return *mid;
}

namespace {

// Mean kernel value between row blocks of a and b, diagonal included.
double mean_kernel(const MatXd& a, const MatXd& b, double inv_two_sigma2,
                   int threads) {
  const Index n = a.rows();
  std::vector<double> row_sums(n, 0.0);
  parallel_for(n, threads, [&](long begin, long end) {
    for (long i = begin; i < end; ++i) {
      double sum = 0.0;
      for (Index j = 0; j < b.rows(); ++j)
        sum += std::exp(-(a.row(i) - b.row(j)).squaredNorm() *
                        inv_two_sigma2);
      row_sums[i] = sum;
    }
  });
  double total = 0.0;
  for (double s : row_sums) total += s;  // fixed reduction order
  return total / (static_cast<double>(n) * b.rows());
}

}  // namespace

double mmd(const MatXd& x, const MatXd& y, const MmdOptions& options) {
  if (x.rows() == 0 || y.rows() == 0)
    throw std::invalid_argument("mmd: empty input");
  if (x.cols() != y.cols())
    throw std::invalid_argument("mmd: dimension mismatch");
  double sigma = options.bandwidth;
  if (sigma <= 0.0) {
    MatXd pooled(x.rows() + y.rows(), x.cols());
    pooled << x, y;
    sigma = median_pairwise_distance(pooled);
  }
  if (sigma <= 0.0) sigma = 1.0;  // degenerate pooled cloud
  const double inv = 1.0 / (2.0 * sigma * sigma);
  const int threads = resolve_threads(options.threads);
  const double kxx = mean_kernel(x, x, inv, threads);
  const double kyy = mean_kernel(y, y, inv, threads);
  const double kxy = mean_kernel(x, y, inv, threads);
  return std::sqrt(std::max(0.0, kxx + kyy - 2.0 * kxy));
}

double constraint_violation(const MatXd& points,
                            const Domain<double>& domain) {
  if (points.rows() == 0) return 0.0;
  long outside = 0;
  for (Index i = 0; i < points.rows(); ++i)
    if (!contains(domain, VecXd(points.row(i).transpose()), 0.0)) ++outside;
  return static_cast<double>(outside) / static_cast<double>(points.rows());
}

nlohmann::json StationarityReport::to_json() const {
  nlohmann::json j;
  j["position_chi2"] = position_chi2;
  j["position_dof"] = position_dof;
  j["position_p"] = position_p;
  j["velocity_mean_z"] =
      std::vector<double>(velocity_mean_z.begin(), velocity_mean_z.end());
  j["velocity_var_z"] =
      std::vector<double>(velocity_var_z.begin(), velocity_var_z.end());
  j["velocity_kurtosis_z"] = std::vector<double>(velocity_kurtosis_z.begin(),
                                                 velocity_kurtosis_z.end());
  return j;
}

StationarityReport stationarity_tests(const MatXd& positions,
                                      const MatXd* velocities,
                                      const Domain<double>& domain,
                                      const Drift<double>& drift, int grid) {
  const Index n = positions.rows();
  const Index d = positions.cols();
  if (n < 1000)
    throw std::invalid_argument("stationarity_tests: need >= 1000 samples");
  if (d > 2)
    throw std::invalid_argument("stationarity_tests: grid supports d <= 2");

  // Bounding box of G for the cell grid.
  VecXd lo(d), hi(d);
  if (domain.is_box()) {
    lo = domain.box().lo;
    hi = domain.box().hi;
  } else {
    lo = domain.ball().center.array() - domain.ball().radius;
    hi = domain.ball().center.array() + domain.ball().radius;
  }

  const int cells = d == 1 ? grid : grid * grid;
  auto cell_of = [&](const VecXd& x) {
    int cell = 0;
    for (Index a = 0; a < d; ++a) {
      int c = static_cast<int>((x[a] - lo[a]) / (hi[a] - lo[a]) * grid);
      c = std::clamp(c, 0, grid - 1);
      cell = cell * grid + c;
    }
    return cell;
  };

  // Expected cell weights ~ integral of e^{-U} over cell intersect G, by
  // midpoint quadrature on a fine refinement of the grid.
  const int refine = 40;
  std::vector<double> expected(cells, 0.0);
  double total_weight = 0.0;
  const int fine = grid * refine;
  VecXd point(d);
  auto weight_at = [&](const VecXd& x) {
    if (!contains(domain, x)) return 0.0;
    switch (drift.kind) {
      case Drift<double>::Kind::Zero:
        return 1.0;
      case Drift<double>::Kind::Linear:
        return std::exp(-0.5 * drift.scale * x.squaredNorm());
      case Drift<double>::Kind::Custom:
        throw std::invalid_argument(
            "stationarity_tests: custom drift has no built-in Gibbs weight");
    }
    return 0.0;
  };
  if (d == 1) {
    for (int i = 0; i < fine; ++i) {
      point[0] = lo[0] + (i + 0.5) * (hi[0] - lo[0]) / fine;
      const double w = weight_at(point);
      expected[i / refine] += w;
      total_weight += w;
    }
  } else {
    for (int i = 0; i < fine; ++i)
      for (int j = 0; j < fine; ++j) {
        point[0] = lo[0] + (i + 0.5) * (hi[0] - lo[0]) / fine;
        point[1] = lo[1] + (j + 0.5) * (hi[1] - lo[1]) / fine;
        const double w = weight_at(point);
        expected[(i / refine) * grid + (j / refine)] += w;
        total_weight += w;
      }
  }

  // Drop empty cells (outside G) and normalize.
  std::vector<long> observed_kept;
  std::vector<double> expected_kept;
  std::vector<long> counts(cells, 0);
  for (Index i = 0; i < n; ++i)
    counts[cell_of(positions.row(i).transpose())]++;
  for (int c = 0; c < cells; ++c) {
    if (expected[c] <= 0.0) continue;
    observed_kept.push_back(counts[c]);
    expected_kept.push_back(expected[c] / total_weight);
  }
  // Renormalize kept probabilities.
  double kept = 0.0;
  for (double p : expected_kept) kept += p;
  for (double& p : expected_kept) p /= kept;

  StationarityReport report;
  auto [stat, dof] = stats::chi2_statistic(observed_kept, expected_kept);
  report.position_chi2 = stat;
  report.position_dof = dof;
  report.position_p = stats::chi2_sf(stat, dof);

  if (velocities != nullptr) {
    const MatXd& v = *velocities;
    report.velocity_mean_z.resize(d);
    report.velocity_var_z.resize(d);
    report.velocity_kurtosis_z.resize(d);
    const double nn = static_cast<double>(n);
    for (Index a = 0; a < d; ++a) {
      const double mean = v.col(a).mean();
      const double var =
          (v.col(a).array() - mean).square().sum() / (nn - 1.0);
      const double m4 = (v.col(a).array() - mean).pow(4).sum() / nn;
      const double kurt = m4 / (var * var) - 3.0;
      report.velocity_mean_z[a] = mean / std::sqrt(1.0 / nn);
      report.velocity_var_z[a] = (var - 1.0) / std::sqrt(2.0 / (nn - 1.0));
      report.velocity_kurtosis_z[a] = kurt / std::sqrt(24.0 / nn);
    }
  }
  return report;
}

}  // namespace confined
