#include "confined/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace confined;

// Reference values computed with scipy.stats (chi2.sf, kstwobign.sf).
TEST_CASE("chi2 survival function matches reference values") {
  CHECK(stats::chi2_sf(123.5, 99) == doctest::Approx(0.0482834279625193).epsilon(1e-10));
  CHECK(stats::chi2_sf(80.0, 99) == doctest::Approx(0.91918787359809).epsilon(1e-10));
  CHECK(stats::chi2_sf(16.919, 9) == doctest::Approx(0.0499996408483498).epsilon(1e-10));
  CHECK(stats::chi2_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(stats::chi2_sf(1.0, 4) == doctest::Approx(0.90979598956895).epsilon(1e-10));
  CHECK(stats::chi2_sf(0.0, 7) == doctest::Approx(1.0));
}

TEST_CASE("kolmogorov survival function matches reference values") {
  CHECK(stats::kolmogorov_sf(0.5) == doctest::Approx(0.963945243664875).epsilon(1e-12));
  CHECK(stats::kolmogorov_sf(1.0) == doctest::Approx(0.269999671677355).epsilon(1e-12));
  CHECK(stats::kolmogorov_sf(1.5) == doctest::Approx(0.0222179626165251).epsilon(1e-12));
}

TEST_CASE("chi2 statistic on a fair split is small, on a biased one large") {
  std::vector<long> fair = {250, 249, 251, 250};
  std::vector<double> probs = {0.25, 0.25, 0.25, 0.25};
  auto [stat, dof] = stats::chi2_statistic(fair, probs);
  CHECK(dof == 3);
  CHECK(stat < 0.1);
  std::vector<long> biased = {400, 200, 200, 200};
  auto [stat2, dof2] = stats::chi2_statistic(biased, probs);
  CHECK(stats::chi2_sf(stat2, dof2) < 1e-6);
}

TEST_CASE("ks uniform p-value is large for a uniform grid") {
  std::vector<double> grid;
  for (int i = 0; i < 1000; ++i) grid.push_back((i + 0.5) / 1000.0);
  CHECK(stats::ks_uniform_pvalue(grid) > 0.99);
  std::vector<double> shifted;
  for (int i = 0; i < 1000; ++i) shifted.push_back(0.5 * (i + 0.5) / 1000.0);
  CHECK(stats::ks_uniform_pvalue(shifted) < 1e-10);
}

TEST_CASE("loglog order recovers a power law") {
  std::vector<double> h = {0.1, 0.05, 0.025, 0.0125};
  std::vector<double> err;
  for (double x : h) err.push_back(3.0 * std::pow(x, 1.5));
  CHECK(stats::loglog_order(h, err) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("mean_stderr") {
  auto ms = stats::mean_stderr({1.0, 2.0, 3.0, 4.0});
  CHECK(ms.mean == doctest::Approx(2.5));
  CHECK(ms.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
}
