#pragma once

#include "confined/types.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <variant>

namespace confined {

/// Axis-aligned box [lo_i, hi_i]^d.
template <typename Scalar>
struct HyperBox {
  VecX<Scalar> lo;
  VecX<Scalar> hi;

  HyperBox() = default;
  HyperBox(VecX<Scalar> lo_, VecX<Scalar> hi_)
      : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size() || lo.size() == 0)
      throw std::invalid_argument("HyperBox: lo/hi size mismatch");
    for (Index i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i]))
        throw std::invalid_argument("HyperBox: requires lo[i] < hi[i]");
  }
  /// Cube [a, b]^d.
  HyperBox(Scalar a, Scalar b, Index d)
      : HyperBox(VecX<Scalar>::Constant(d, a), VecX<Scalar>::Constant(d, b)) {}

  Index dim() const { return lo.size(); }
  Scalar min_half_width() const { return ((hi - lo) / 2).minCoeff(); }
};

/// Euclidean ball of given center and radius.
template <typename Scalar>
struct Ball {
  VecX<Scalar> center;
  Scalar radius = Scalar(1);

  Ball() = default;
  Ball(VecX<Scalar> center_, Scalar radius_)
      : center(std::move(center_)), radius(radius_) {
    if (center.size() == 0) throw std::invalid_argument("Ball: empty center");
    if (!(radius > Scalar(0)))
      throw std::invalid_argument("Ball: requires radius > 0");
  }

  Index dim() const { return center.size(); }
};

/// Constraint set G: one of the supported concrete shapes.
template <typename Scalar>
class Domain {
 public:
  using Shape = std::variant<HyperBox<Scalar>, Ball<Scalar>>;

  Domain() : shape_(HyperBox<Scalar>(Scalar(-1), Scalar(1), 1)) {}
  Domain(HyperBox<Scalar> box) : shape_(std::move(box)) {}  // NOLINT(implicit)
  Domain(Ball<Scalar> ball) : shape_(std::move(ball)) {}    // NOLINT(implicit)

  Index dim() const {
    return std::visit([](const auto& s) { return s.dim(); }, shape_);
  }
  bool is_box() const {
    return std::holds_alternative<HyperBox<Scalar>>(shape_);
  }
  const HyperBox<Scalar>& box() const {
    return std::get<HyperBox<Scalar>>(shape_);
  }
  const Ball<Scalar>& ball() const { return std::get<Ball<Scalar>>(shape_); }
  const Shape& shape() const { return shape_; }

 private:
  Shape shape_;
};

/// First crossing of a straight segment with the boundary: the time tau in
/// (0, h], the boundary point and the outward unit normal there.
template <typename Scalar>
struct SegmentHit {
  Scalar tau{};
  VecX<Scalar> point;
  VecX<Scalar> normal;
};

namespace detail {

template <typename Scalar>
void check_dim(const Domain<Scalar>& domain, const VecX<Scalar>& x,
               const char* where) {
  if (x.size() != domain.dim())
    throw std::invalid_argument(std::string(where) + ": dimension mismatch");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Containment, projection, distances
// ---------------------------------------------------------------------------

template <typename Scalar>
bool contains(const HyperBox<Scalar>& box, const VecX<Scalar>& x,
              Scalar tol = Scalar(kContainTol)) {
  for (Index i = 0; i < box.dim(); ++i)
    if (x[i] < box.lo[i] - tol || x[i] > box.hi[i] + tol) return false;
  return true;
}

template <typename Scalar>
bool contains(const Ball<Scalar>& ball, const VecX<Scalar>& x,
              Scalar tol = Scalar(kContainTol)) {
  return (x - ball.center).norm() <= ball.radius + tol;
}

/// True iff x is in the closure of G (boundary within tolerance counts).
template <typename Scalar>
bool contains(const Domain<Scalar>& domain, const VecX<Scalar>& x,
              Scalar tol = Scalar(kContainTol)) {
  detail::check_dim(domain, x, "contains");
  return std::visit([&](const auto& s) { return contains(s, x, tol); },
                    domain.shape());
}

template <typename Scalar>
VecX<Scalar> project(const HyperBox<Scalar>& box, const VecX<Scalar>& x) {
  return x.cwiseMax(box.lo).cwiseMin(box.hi);
}

template <typename Scalar>
VecX<Scalar> project(const Ball<Scalar>& ball, const VecX<Scalar>& x) {
  const VecX<Scalar> r = x - ball.center;
  const Scalar len = r.norm();
  if (len <= ball.radius) return x;
  VecX<Scalar> q = r * (ball.radius / len);
  VecX<Scalar> out = ball.center + q;
  // Rounding can leave the assembled point one ulp outside; pull it in so
  // the projection is exactly idempotent and boundary points pass
  // contains() at tolerance zero.
  int guard = 0;
  while ((out - ball.center).norm() > ball.radius && guard++ < 16) {
    q *= Scalar(1) - Scalar(2) * std::numeric_limits<Scalar>::epsilon();
    out = ball.center + q;
  }
  return out;
}

/// Nearest point of closure(G); identity on the inside.
template <typename Scalar>
VecX<Scalar> project(const Domain<Scalar>& domain, const VecX<Scalar>& x) {
  detail::check_dim(domain, x, "project");
  return std::visit([&](const auto& s) { return project(s, x); },
                    domain.shape());
}

/// Signed distance to the boundary, positive inside.
template <typename Scalar>
Scalar dist_to_boundary(const HyperBox<Scalar>& box, const VecX<Scalar>& x) {
  Scalar d = std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < box.dim(); ++i)
    d = std::min(d, std::min(x[i] - box.lo[i], box.hi[i] - x[i]));
  return d;
}

template <typename Scalar>
Scalar dist_to_boundary(const Ball<Scalar>& ball, const VecX<Scalar>& x) {
  return ball.radius - (x - ball.center).norm();
}

template <typename Scalar>
Scalar dist_to_boundary(const Domain<Scalar>& domain, const VecX<Scalar>& x) {
  detail::check_dim(domain, x, "dist_to_boundary");
  return std::visit([&](const auto& s) { return dist_to_boundary(s, x); },
                    domain.shape());
}

// ---------------------------------------------------------------------------
// Normals
// ---------------------------------------------------------------------------

template <typename Scalar>
VecX<Scalar> normal_at(const HyperBox<Scalar>& box, const VecX<Scalar>& p) {
  // Active face: the axis whose face is nearest (or most violated).
  // Ties (edges/corners) break toward the lowest axis index.
  Index axis = 0;
  Scalar best = std::numeric_limits<Scalar>::infinity();
  Scalar sign = Scalar(1);
  for (Index i = 0; i < box.dim(); ++i) {
    const Scalar to_lo = p[i] - box.lo[i];
    const Scalar to_hi = box.hi[i] - p[i];
    const Scalar d = std::min(to_lo, to_hi);
    if (d < best) {
      best = d;
      axis = i;
      sign = (to_hi <= to_lo) ? Scalar(1) : Scalar(-1);
    }
  }
  if (std::abs(best) > Scalar(kBoundaryTol))
    throw std::invalid_argument("normal_at: point is not on the boundary");
  VecX<Scalar> n = VecX<Scalar>::Zero(box.dim());
  n[axis] = sign;
  return n;
}

template <typename Scalar>
VecX<Scalar> normal_at(const Ball<Scalar>& ball, const VecX<Scalar>& p) {
  const VecX<Scalar> r = p - ball.center;
  const Scalar len = r.norm();
  if (std::abs(len - ball.radius) > Scalar(kBoundaryTol))
    throw std::invalid_argument("normal_at: point is not on the boundary");
  return r / len;
}

/// Outward unit normal at a boundary point (within kBoundaryTol of it).
template <typename Scalar>
VecX<Scalar> normal_at(const Domain<Scalar>& domain, const VecX<Scalar>& p) {
  detail::check_dim(domain, p, "normal_at");
  return std::visit([&](const auto& s) { return normal_at(s, p); },
                    domain.shape());
}

// ---------------------------------------------------------------------------
// Segment exit
// ---------------------------------------------------------------------------

template <typename Scalar>
std::optional<SegmentHit<Scalar>> segment_exit(const HyperBox<Scalar>& box,
                                               const VecX<Scalar>& y,
                                               const VecX<Scalar>& z,
                                               Scalar h) {
  // Closed-form per-axis crossing times; the first exit wins. tau == 0 is
  // accepted for a start point sitting on a face with outward velocity.
  Scalar tau = std::numeric_limits<Scalar>::infinity();
  Index axis = -1;
  Scalar sign = Scalar(1);
  for (Index i = 0; i < box.dim(); ++i) {
    if (z[i] > Scalar(0)) {
      const Scalar t = (box.hi[i] - y[i]) / z[i];
      if (t >= Scalar(0) && t < tau) {
        tau = t;
        axis = i;
        sign = Scalar(1);
      }
    } else if (z[i] < Scalar(0)) {
      const Scalar t = (box.lo[i] - y[i]) / z[i];
      if (t >= Scalar(0) && t < tau) {
        tau = t;
        axis = i;
        sign = Scalar(-1);
      }
    }
  }
  if (axis < 0 || tau > h) return std::nullopt;
  SegmentHit<Scalar> hit;
  hit.tau = tau;
  hit.point = y + tau * z;
  hit.point[axis] = (sign > Scalar(0)) ? box.hi[axis] : box.lo[axis];
  hit.normal = VecX<Scalar>::Zero(box.dim());
  hit.normal[axis] = sign;
  return hit;
}

template <typename Scalar>
std::optional<SegmentHit<Scalar>> segment_exit(const Ball<Scalar>& ball,
                                               const VecX<Scalar>& y,
                                               const VecX<Scalar>& z,
                                               Scalar h) {
  const Scalar a = z.squaredNorm();
  if (a == Scalar(0)) return std::nullopt;
  const VecX<Scalar> r = y - ball.center;
  const Scalar b = r.dot(z);
  const Scalar c = r.squaredNorm() - ball.radius * ball.radius;
  const Scalar disc = b * b - a * c;
  if (disc < Scalar(0)) return std::nullopt;
  // From inside (c <= 0) the exit root is the larger one.
  const Scalar tau = (-b + std::sqrt(disc)) / a;
  if (tau < Scalar(0) || tau > h) return std::nullopt;
  SegmentHit<Scalar> hit;
  hit.tau = tau;
  VecX<Scalar> q = y + tau * z - ball.center;
  q *= ball.radius / q.norm();
  hit.point = ball.center + q;
  hit.normal = q / ball.radius;
  return hit;
}

/// First boundary crossing of t -> y + t z for t in (0, h]; nullopt when the
/// whole segment stays in closure(G). Requires y in closure(G); any reverse
/// sign (-1)^r is folded into z by the caller.
template <typename Scalar>
std::optional<SegmentHit<Scalar>> segment_exit(const Domain<Scalar>& domain,
                                               const VecX<Scalar>& y,
                                               const VecX<Scalar>& z,
                                               Scalar h) {
  detail::check_dim(domain, y, "segment_exit");
  detail::check_dim(domain, z, "segment_exit");
  return std::visit([&](const auto& s) { return segment_exit(s, y, z, h); },
                    domain.shape());
}

// ---------------------------------------------------------------------------
// Reflection and box folding
// ---------------------------------------------------------------------------

/// v - 2 <n, v> n for a unit normal n; preserves |v|.
template <typename Scalar>
VecX<Scalar> specular_reflect(const VecX<Scalar>& v, const VecX<Scalar>& n) {
  return v - Scalar(2) * n.dot(v) * n;
}

/// Per-axis iterated reflection of a point into the box. `signs`, when
/// given, receives -1 for every axis folded an odd number of times (the
/// velocity parity of the equivalent specular reflections).
template <typename Scalar>
VecX<Scalar> fold_box(const HyperBox<Scalar>& box, const VecX<Scalar>& y_aux,
                      VecX<Scalar>* signs = nullptr, int* fold_count = nullptr,
                      int max_folds = 64) {
  if (!y_aux.allFinite())
    throw std::invalid_argument("fold_box: non-finite input");
  VecX<Scalar> y = y_aux;
  if (signs) *signs = VecX<Scalar>::Ones(box.dim());
  int total = 0;
  for (Index i = 0; i < box.dim(); ++i) {
    int folds = 0;
    while (y[i] < box.lo[i] || y[i] > box.hi[i]) {
      if (y[i] > box.hi[i])
        y[i] = Scalar(2) * box.hi[i] - y[i];
      else
        y[i] = Scalar(2) * box.lo[i] - y[i];
      if (++folds + total > max_folds)
        throw std::runtime_error("fold_box: exceeded reflection cap");
    }
    total += folds;
    if (signs && (folds % 2 == 1)) (*signs)[i] = Scalar(-1);
  }
  if (fold_count) *fold_count = total;
  return y;
}

// ---------------------------------------------------------------------------
// JSON serialization:  {"type":"box","lo":[...],"hi":[...]} or
//                      {"type":"ball","center":[...],"radius":r}
// ---------------------------------------------------------------------------

inline nlohmann::json domain_to_json(const Domain<double>& domain) {
  nlohmann::json j;
  if (domain.is_box()) {
    j["type"] = "box";
    j["lo"] = std::vector<double>(domain.box().lo.begin(),
                                  domain.box().lo.end());
    j["hi"] = std::vector<double>(domain.box().hi.begin(),
                                  domain.box().hi.end());
  } else {
    j["type"] = "ball";
    j["center"] = std::vector<double>(domain.ball().center.begin(),
                                      domain.ball().center.end());
    j["radius"] = domain.ball().radius;
  }
  return j;
}

inline Domain<double> domain_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "box") {
    const auto lo = j.at("lo").get<std::vector<double>>();
    const auto hi = j.at("hi").get<std::vector<double>>();
    return HyperBox<double>(
        Eigen::Map<const VecXd>(lo.data(), static_cast<Index>(lo.size())),
        Eigen::Map<const VecXd>(hi.data(), static_cast<Index>(hi.size())));
  }
  if (type == "ball") {
    const auto c = j.at("center").get<std::vector<double>>();
    return Ball<double>(
        Eigen::Map<const VecXd>(c.data(), static_cast<Index>(c.size())),
        j.at("radius").get<double>());
  }
  throw std::invalid_argument("domain_from_json: unknown type '" + type + "'");
}

}  // namespace confined
