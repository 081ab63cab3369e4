#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace confined {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowVecX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using VecXd = VecX<double>;
using MatXd = MatX<double>;
using Index = Eigen::Index;

// Tolerances shared by all boundary queries: points within kContainTol of
// the boundary count as inside; kBoundaryTol bounds how far a point handed
// to normal_at may sit from the boundary before we treat it as a caller bug.
inline constexpr double kContainTol = 1e-12;
inline constexpr double kBoundaryTol = 1e-9;

}  // namespace confined
