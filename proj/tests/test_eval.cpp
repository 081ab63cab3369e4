#include "confined/eval.hpp"

#include "confined/rng.hpp"
#include "confined/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace confined;

namespace {

MatXd uniform_cloud(const Domain<double>& box, int n, std::uint64_t seed) {
  NoiseStream rng(seed, 0);
  const auto& b = box.box();
  MatXd x(n, b.dim());
  for (int i = 0; i < n; ++i)
    for (Index j = 0; j < b.dim(); ++j)
      x(i, j) = b.lo[j] + rng.uniform() * (b.hi[j] - b.lo[j]);
  return x;
}

}  // namespace

TEST_CASE("mmd: identical multisets give exactly zero") {
  const Domain<double> box(HyperBox<double>(-1.0, 1.0, 2));
  const MatXd x = uniform_cloud(box, 200, 1);
  CHECK(mmd(x, x) == 0.0);
}

TEST_CASE("mmd: two distant point masses approach sqrt(2)") {
  MatXd x(1, 2), y(1, 2);
  x << 0.0, 0.0;
  y << 10.0, 0.0;
  MmdOptions opt;
  opt.bandwidth = 1.0;
  CHECK(mmd(x, y, opt) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("mmd: same-law estimate decreases with n") {
  const Domain<double> box(HyperBox<double>(-1.0, 1.0, 2));
  MmdOptions opt;
  opt.bandwidth = 0.5;
  double prev = 1e9;
  for (const int n : {200, 800, 3200}) {
    const double v = mmd(uniform_cloud(box, n, 10 + n),
                         uniform_cloud(box, n, 20 + n), opt);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("mmd: symmetry, nonnegativity, scale consistency") {
  const Domain<double> box(HyperBox<double>(-1.0, 1.0, 2));
  const MatXd x = uniform_cloud(box, 150, 3);
  MatXd y = uniform_cloud(box, 120, 4);
  y.array() += 0.3;
  MmdOptions opt;
  opt.bandwidth = 0.7;
  const double a = mmd(x, y, opt);
  const double b = mmd(y, x, opt);
  CHECK(a == doctest::Approx(b).epsilon(1e-14));
  CHECK(a >= 0.0);
  MmdOptions scaled;
  scaled.bandwidth = 0.7 * 3.0;
  CHECK(mmd(MatXd(3.0 * x), MatXd(3.0 * y), scaled) ==
        doctest::Approx(a).epsilon(1e-12));
  CHECK_THROWS(mmd(MatXd(0, 2), y));
}

TEST_CASE("mmd is thread-count independent") {
  const Domain<double> box(HyperBox<double>(-1.0, 1.0, 2));
  const MatXd x = uniform_cloud(box, 300, 5);
  const MatXd y = uniform_cloud(box, 333, 6);
  MmdOptions one;
  one.threads = 1;
  MmdOptions two;
  two.threads = 2;
  CHECK(mmd(x, y, one) == mmd(x, y, two));
}

TEST_CASE("constraint_violation") {
  const Domain<double> box(HyperBox<double>(-3.0, 3.0, 2));
  MatXd pts = MatXd::Zero(100, 2);
  CHECK(constraint_violation(pts, box) == 0.0);
  pts(7, 0) = 4.0;
  CHECK(constraint_violation(pts, box) == doctest::Approx(0.01));
}

TEST_CASE("stationarity: uniform samples give uniform p-values") {
  const Domain<double> box(HyperBox<double>(-1.0, 1.0, 2));
  std::vector<double> pvalues;
  for (int rep = 0; rep < 60; ++rep) {
    const MatXd x = uniform_cloud(box, 3000, 100 + rep);
    const auto report =
        stationarity_tests(x, nullptr, box, Drift<double>::zero());
    pvalues.push_back(report.position_p);
  }
  // Kolmogorov check on the p's.
  CHECK(stats::ks_uniform_pvalue(pvalues) > 0.001);
}

TEST_CASE("stationarity: a shifted law is rejected hard") {
  const Domain<double> box(HyperBox<double>(-1.0, 1.0, 2));
  MatXd x = uniform_cloud(box, 5000, 5);
  x = x * 0.5;  // concentrated in the middle: far from uniform
  const auto report =
      stationarity_tests(x, nullptr, box, Drift<double>::zero());
  CHECK(report.position_p < 1e-6);
}

TEST_CASE("stationarity: standard normal velocities pass the moment checks") {
  const Domain<double> box(HyperBox<double>(-1.0, 1.0, 2));
  const MatXd x = uniform_cloud(box, 20000, 6);
  NoiseStream rng(7, 0);
  MatXd v(20000, 2);
  for (Index i = 0; i < v.rows(); ++i)
    for (Index j = 0; j < 2; ++j) v(i, j) = rng.gaussian();
  const auto report = stationarity_tests(x, &v, box, Drift<double>::zero());
  for (Index j = 0; j < 2; ++j) {
    CHECK(std::abs(report.velocity_var_z[j]) < 4.0);
    CHECK(std::abs(report.velocity_kurtosis_z[j]) < 4.0);
  }
  CHECK_THROWS(stationarity_tests(x.topRows(10), nullptr, box,
                                  Drift<double>::zero()));
}

TEST_CASE("stationarity: gibbs weights for the linear drift") {
  // Samples ~ N(0, I) truncated to the box must pass against the Gibbs law.
  const Domain<double> box(HyperBox<double>(-1.0, 1.0, 2));
  NoiseStream rng(8, 0);
  MatXd x(20000, 2);
  for (Index i = 0; i < x.rows(); ++i) {
    for (;;) {
      const double a = rng.gaussian(), b = rng.gaussian();
      if (std::abs(a) <= 1.0 && std::abs(b) <= 1.0) {
        x(i, 0) = a;
        x(i, 1) = b;
        break;
      }
    }
  }
  const auto good = stationarity_tests(x, nullptr, box, Drift<double>::linear());
  CHECK(good.position_p > 0.001);
  const auto wrong = stationarity_tests(x, nullptr, box, Drift<double>::zero());
  CHECK(wrong.position_p < 1e-6);
}
