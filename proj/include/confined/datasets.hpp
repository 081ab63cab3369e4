#pragma once

#include "confined/domain.hpp"
#include "confined/types.hpp"

#include <cstdint>
#include <string>

namespace confined {

/// Point cloud tied to its constraint set; every point lies in closure(G).
struct PointCloud {
  MatXd points;
  Domain<double> domain;
  std::string provenance;

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
};

/// Four side-hugging Gaussians (std 0.04) on [-3,3]^2, rejection-sampled to
/// the closed box; equal weights, means at the side midpoints.
PointCloud gen_gaussian_mixture(int n, std::uint64_t seed);

/// Two blobs on opposite sides of the unit square (0,1)^2.
PointCloud gen_two_blob_unit_square(int n, std::uint64_t seed);

/// Shape-similar stand-ins for the wheel / maze / flower point sets, with
/// their published point counts as defaults.
PointCloud gen_wheel_like(int n, std::uint64_t seed);
PointCloud gen_maze_like(int n, std::uint64_t seed);
PointCloud gen_flower_like(int n, std::uint64_t seed);

inline constexpr int kWheelPoints = 1232;
inline constexpr int kMazePoints = 825;
inline constexpr int kFlowerPoints = 1185;

/// Dispatch by set name ("gm", "two_blob", "wheel", "maze", "flower");
/// n <= 0 selects the set's default count.
PointCloud generate_dataset(const std::string& set, int n, std::uint64_t seed);
Domain<double> dataset_domain(const std::string& set);

/// CSV ingestion (header x0,...,x{d-1}). Containment violations are hard
/// errors naming the offending rows.
PointCloud load_csv(const std::string& path, const Domain<double>& domain);
void save_csv(const PointCloud& cloud, const std::string& path);

}  // namespace confined
