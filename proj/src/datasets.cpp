#include "confined/datasets.hpp"

#include "confined/errors.hpp"
#include "confined/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <vector>

namespace confined {

namespace {

constexpr double kPi = std::numbers::pi;

/// Draw from `proposal` until the point lands in closure(G).
MatXd rejection_fill(const Domain<double>& domain, int n, NoiseStream& rng,
                     const std::function<VecXd(NoiseStream&)>& proposal) {
  MatXd out(n, domain.dim());
  for (int i = 0; i < n; ++i) {
    for (long tries = 0;; ++tries) {
      if (tries > 1000000)
        throw NumericError("dataset generator: rejection never accepted");
      VecXd x = proposal(rng);
      if (contains(domain, x, 0.0)) {
        out.row(i) = x.transpose();
        break;
      }
    }
  }
  return out;
}

/// Piecewise-linear or arc segments with lengths, sampled uniformly along
/// total length with isotropic jitter, rejected to the domain.
struct ShapeSampler {
  struct Piece {
    std::function<VecXd(double)> at;  // u in [0,1] -> point
    double length;
  };
  std::vector<Piece> pieces;
  double jitter = 0.05;

  void add_segment(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    pieces.push_back({[a, b](double u) -> VecXd {
                        return (a + u * (b - a)).eval();
                      },
                      (b - a).norm()});
  }
  void add_circle(const Eigen::Vector2d& c, double r, double from = 0.0,
                  double to = 2 * kPi) {
    pieces.push_back({[c, r, from, to](double u) -> VecXd {
                        const double phi = from + u * (to - from);
                        return VecXd(
                            (c + r * Eigen::Vector2d(std::cos(phi),
                                                     std::sin(phi)))
                                .eval());
                      },
                      r * std::abs(to - from)});
  }

  VecXd draw(NoiseStream& rng) const {
    double total = 0.0;
    for (const auto& p : pieces) total += p.length;
    double target = rng.uniform() * total;
    for (const auto& p : pieces) {
      if (target <= p.length) {
        VecXd x = p.at(target / p.length);
        for (Index j = 0; j < x.size(); ++j) x[j] += jitter * rng.gaussian();
        return x;
      }
      target -= p.length;
    }
    VecXd x = pieces.back().at(1.0);
    for (Index j = 0; j < x.size(); ++j) x[j] += jitter * rng.gaussian();
    return x;
  }
};

}  // namespace

PointCloud gen_gaussian_mixture(int n, std::uint64_t seed) {
  Domain<double> domain(HyperBox<double>(-3.0, 3.0, 2));
  NoiseStream rng(seed, 0);
  const double sd = 0.04;  // variance 0.2^4
  const Eigen::Vector2d means[4] = {{3, 0}, {-3, 0}, {0, 3}, {0, -3}};
  MatXd points = rejection_fill(domain, n, rng, [&](NoiseStream& r) -> VecXd {
    const auto& m = means[r.uniform_index(4)];
    return VecXd(Eigen::Vector2d(m[0] + sd * r.gaussian(),
                                 m[1] + sd * r.gaussian()));
  });
  return {std::move(points), domain, "gaussian_mixture"};
}

PointCloud gen_two_blob_unit_square(int n, std::uint64_t seed) {
  Domain<double> domain(HyperBox<double>(0.0, 1.0, 2));
  NoiseStream rng(seed, 0);
  const double sd = 0.04;
  const Eigen::Vector2d means[2] = {{0.5, 0.0}, {0.5, 1.0}};
  MatXd points = rejection_fill(domain, n, rng, [&](NoiseStream& r) -> VecXd {
    const auto& m = means[r.uniform_index(2)];
    return VecXd(Eigen::Vector2d(m[0] + sd * r.gaussian(),
                                 m[1] + sd * r.gaussian()));
  });
  return {std::move(points), domain, "two_blob"};
}

PointCloud gen_wheel_like(int n, std::uint64_t seed) {
  if (n <= 0) n = kWheelPoints;
  Domain<double> domain(HyperBox<double>(-3.0, 3.0, 2));
  NoiseStream rng(seed, 0);
  ShapeSampler shape;
  shape.jitter = 0.06;
  shape.add_circle({0, 0}, 2.3);
  shape.add_circle({0, 0}, 0.45);
  for (int s = 0; s < 6; ++s) {
    const double phi = s * kPi / 3.0;
    const Eigen::Vector2d dir(std::cos(phi), std::sin(phi));
    shape.add_segment(0.45 * dir, 2.3 * dir);
  }
  MatXd points = rejection_fill(
      domain, n, rng, [&](NoiseStream& r) { return shape.draw(r); });
  return {std::move(points), domain, "wheel"};
}

PointCloud gen_maze_like(int n, std::uint64_t seed) {
  if (n <= 0) n = kMazePoints;
  Domain<double> domain(HyperBox<double>(-3.0, 3.0, 2));
  NoiseStream rng(seed, 0);
  ShapeSampler shape;
  shape.jitter = 0.06;
  const double c = 2.5;
  // Nested rectangular corridors with gaps, maze fashion.
  shape.add_segment({-c, -c}, {c, -c});
  shape.add_segment({c, -c}, {c, c});
  shape.add_segment({c, c}, {-c, c});
  shape.add_segment({-c, c}, {-c, -0.8});
  shape.add_segment({-1.4, -1.4}, {1.4, -1.4});
  shape.add_segment({1.4, -1.4}, {1.4, 1.4});
  shape.add_segment({1.4, 1.4}, {-0.6, 1.4});
  shape.add_segment({-1.4, -1.4}, {-1.4, 0.4});
  shape.add_segment({-0.3, 0.3}, {0.5, 0.3});
  shape.add_segment({0.5, 0.3}, {0.5, -0.5});
  MatXd points = rejection_fill(
      domain, n, rng, [&](NoiseStream& r) { return shape.draw(r); });
  return {std::move(points), domain, "maze"};
}

PointCloud gen_flower_like(int n, std::uint64_t seed) {
  if (n <= 0) n = kFlowerPoints;
  Domain<double> domain(HyperBox<double>(-5.0, 5.0, 2));
  NoiseStream rng(seed, 0);
  const double jitter = 0.08;
  // Rose curve r = R cos(k phi), sampled uniformly in phi.
  const double R = 4.2;
  const int k = 5;
  MatXd points = rejection_fill(domain, n, rng, [&](NoiseStream& r) -> VecXd {
    const double phi = 2 * kPi * r.uniform();
    const double rad = R * std::cos(k * phi);
    return VecXd(Eigen::Vector2d(rad * std::cos(phi) + jitter * r.gaussian(),
                                 rad * std::sin(phi) + jitter * r.gaussian()));
  });
  return {std::move(points), domain, "flower"};
}

PointCloud generate_dataset(const std::string& set, int n,
                            std::uint64_t seed) {
  if (set == "gm" || set == "gaussian_mixture")
    return gen_gaussian_mixture(n > 0 ? n : 1000, seed);
  if (set == "two_blob") return gen_two_blob_unit_square(n > 0 ? n : 500, seed);
  if (set == "wheel") return gen_wheel_like(n, seed);
  if (set == "maze") return gen_maze_like(n, seed);
  if (set == "flower") return gen_flower_like(n, seed);
  throw ConfigError("unknown dataset '" + set + "'");
}

Domain<double> dataset_domain(const std::string& set) {
  if (set == "gm" || set == "gaussian_mixture" || set == "wheel" ||
      set == "maze")
    return HyperBox<double>(-3.0, 3.0, 2);
  if (set == "two_blob") return HyperBox<double>(0.0, 1.0, 2);
  if (set == "flower") return HyperBox<double>(-5.0, 5.0, 2);
  throw ConfigError("unknown dataset '" + set + "'");
}

PointCloud load_csv(const std::string& path, const Domain<double>& domain) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::string line;
  std::vector<std::vector<double>> rows;
  Index dim = -1;
  bool have_header = false;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!have_header) {
      have_header = true;  // header x0,...,x{d-1}
      dim = static_cast<Index>(std::count(line.begin(), line.end(), ',')) + 1;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t pos = 0;
      double value = 0;
      try {
        value = std::stod(cell, &pos);
      } catch (const std::exception&) {
        throw ValidationError("csv parse failure at line " +
                              std::to_string(lineno));
      }
      if (pos != cell.size() || !std::isfinite(value))
        throw ValidationError("csv parse failure at line " +
                              std::to_string(lineno));
      row.push_back(value);
    }
    if (static_cast<Index>(row.size()) != dim)
      throw ValidationError("csv column count mismatch at line " +
                            std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (have_header && dim != domain.dim())
    throw ValidationError("csv dimension does not match the domain");
  MatXd points(static_cast<Index>(rows.size()), domain.dim());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Index j = 0; j < domain.dim(); ++j) points(i, j) = rows[i][j];
  std::string offending;
  int bad = 0;
  for (Index i = 0; i < points.rows(); ++i) {
    if (!contains(domain, VecXd(points.row(i).transpose()))) {
      if (++bad <= 5) offending += (bad > 1 ? ", " : "") + std::to_string(i + 1);
    }
  }
  if (bad > 0)
    throw ValidationError("containment violation in '" + path + "' at row" +
                          (bad > 1 ? "s " : " ") + offending +
                          (bad > 5 ? ", ..." : "") + " (" +
                          std::to_string(bad) + " total)");
  return {std::move(points), domain, path};
}

void save_csv(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "'");
  for (int j = 0; j < cloud.dim(); ++j) out << (j ? ",x" : "x") << j;
  out << "\n";
  out.precision(17);
  for (Index i = 0; i < cloud.points.rows(); ++i) {
    for (Index j = 0; j < cloud.points.cols(); ++j)
      out << (j ? "," : "") << cloud.points(i, j);
    out << "\n";
  }
}

}  // namespace confined
