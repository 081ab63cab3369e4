#pragma once

#include "confined/domain.hpp"
#include "confined/rng.hpp"
#include "confined/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace confined {

// ---------------------------------------------------------------------------
// Drift b(x)
// ---------------------------------------------------------------------------

/// Drift field b. Zero and Linear (b(x) = -scale x, the gradient of
/// scale |x|^2 / 2) are handled without allocation; Custom takes any
/// user-supplied gradient field.
template <typename Scalar>
struct Drift {
  enum class Kind { Zero, Linear, Custom };
  Kind kind = Kind::Zero;
  Scalar scale = Scalar(1);
  std::function<VecX<Scalar>(const VecX<Scalar>&)> custom;

  static Drift zero() { return Drift{}; }
  static Drift linear(Scalar scale = Scalar(1)) {
    Drift d;
    d.kind = Kind::Linear;
    d.scale = scale;
    return d;
  }
  static Drift gradient(std::function<VecX<Scalar>(const VecX<Scalar>&)> b) {
    Drift d;
    d.kind = Kind::Custom;
    d.custom = std::move(b);
    return d;
  }

  bool is_zero() const { return kind == Kind::Zero; }

  /// out += coeff * b(x)
  template <typename XDerived, typename ODerived>
  void accumulate(const Eigen::MatrixBase<XDerived>& x, Scalar coeff,
                  Eigen::MatrixBase<ODerived>& out) const {
    switch (kind) {
      case Kind::Zero:
        return;
      case Kind::Linear:
        out -= (coeff * scale) * x;
        return;
      case Kind::Custom:
        out += coeff * custom(x);
        return;
    }
  }

  VecX<Scalar> operator()(const VecX<Scalar>& x) const {
    VecX<Scalar> b = VecX<Scalar>::Zero(x.size());
    accumulate(x, Scalar(1), b);
    return b;
  }
};

// ---------------------------------------------------------------------------
// States and per-step boundary record
// ---------------------------------------------------------------------------

template <typename Scalar>
struct KineticState {
  VecX<Scalar> x;
  VecX<Scalar> v;
};

template <typename Scalar>
struct OverdampedState {
  VecX<Scalar> x;
};

/// Per-step boundary interaction record. `d` is the overshoot of the raw
/// auxiliary point X' beyond the domain, `p_proj`/`n_proj` the projected
/// boundary point and its outward normal; d > 0 iff exited.
template <typename Scalar>
struct BoundaryEvent {
  bool exited = false;
  Scalar d = Scalar(0);
  VecX<Scalar> p_proj;
  VecX<Scalar> n_proj;
  Scalar t = Scalar(0);
  int reflections = 0;
  bool fallback = false;  // symmetrized mirror landed outside, projected
};

// ---------------------------------------------------------------------------
// A_c: ballistic transport with specular reflection
// ---------------------------------------------------------------------------

template <typename Scalar>
struct AcOutcome {
  VecX<Scalar> x;
  VecX<Scalar> v;
  int reflections = 0;
  bool exited = false;
  Scalar overshoot = Scalar(0);
  VecX<Scalar> hit_point;
  VecX<Scalar> hit_normal;
};

inline constexpr int kMaxReflections = 64;

/// Generic collision loop: follow the segment, reflect the velocity at each
/// boundary crossing, continue with the remaining time. Works on any domain;
/// the box fast path below must agree with it.
template <typename Scalar>
AcOutcome<Scalar> a_c_step_generic(const Domain<Scalar>& domain,
                                   const VecX<Scalar>& x,
                                   const VecX<Scalar>& v, Scalar h,
                                   bool reverse = false) {
  const Scalar dir = reverse ? Scalar(-1) : Scalar(1);
  AcOutcome<Scalar> out;
  out.x = x;
  VecX<Scalar> w = dir * v;  // effective motion velocity
  Scalar remaining = h;
  while (remaining > Scalar(0)) {
    auto hit = segment_exit(domain, out.x, w, remaining);
    if (!hit) {
      out.x += remaining * w;
      break;
    }
    if (!out.exited) {
      out.exited = true;
      out.hit_point = hit->point;
      out.hit_normal = hit->normal;
      // Overshoot of the raw (uncollided) endpoint of this sub-move.
      const VecX<Scalar> aux = out.x + remaining * w;
      out.overshoot = (aux - project(domain, aux)).norm();
    }
    out.x = hit->point;
    w = specular_reflect(w, hit->normal);
    remaining -= hit->tau;
    if (++out.reflections > kMaxReflections)
      throw std::runtime_error(
          "a_c_step: exceeded reflection cap (pathological h or |v|)");
  }
  out.v = dir * w;
  return out;
}

/// A_c transport over duration h. HyperBox domains take the per-axis folding
/// shortcut (velocity sign flips per odd fold count); other domains use the
/// generic reflection loop. |v| is preserved exactly across reflections.
template <typename Scalar>
AcOutcome<Scalar> a_c_step(const Domain<Scalar>& domain, const VecX<Scalar>& x,
                           const VecX<Scalar>& v, Scalar h,
                           bool reverse = false) {
  if (!domain.is_box()) return a_c_step_generic(domain, x, v, h, reverse);
  const auto& box = domain.box();
  const Scalar dir = reverse ? Scalar(-1) : Scalar(1);
  AcOutcome<Scalar> out;
  const VecX<Scalar> aux = x + (dir * h) * v;
  VecX<Scalar> signs;
  int folds = 0;
  out.x = fold_box(box, aux, &signs, &folds, kMaxReflections);
  out.v = v.cwiseProduct(signs);
  out.reflections = folds;
  out.exited = folds > 0 || !contains(box, aux, Scalar(0));
  if (out.exited) {
    out.overshoot = (aux - project(box, aux)).norm();
    if (auto hit = segment_exit(box, x, (dir * v).eval(), h)) {
      out.hit_point = hit->point;
      out.hit_normal = hit->normal;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// O, B, S kernels
// ---------------------------------------------------------------------------

/// Exact Ornstein-Uhlenbeck update: v e^{-gamma h} + sqrt(1 - e^{-2 gamma h}) xi.
template <typename Scalar, typename VD, typename XD>
VecX<Scalar> o_step_forward(const Eigen::MatrixBase<VD>& v, Scalar h,
                            Scalar gamma, const Eigen::MatrixBase<XD>& xi) {
  const Scalar decay = std::exp(-gamma * h);
  return decay * v + std::sqrt(Scalar(1) - decay * decay) * xi;
}

/// Reverse-time O step: p e^{gamma h} + sqrt(e^{2 gamma h} - 1) xi.
template <typename Scalar, typename VD, typename XD>
VecX<Scalar> o_step_reverse(const Eigen::MatrixBase<VD>& p, Scalar h,
                            Scalar gamma, const Eigen::MatrixBase<XD>& xi) {
  const Scalar grow = std::exp(gamma * h);
  return grow * p + std::sqrt(grow * grow - Scalar(1)) * xi;
}

/// B(q, p; h) = p - b(q) h (the reverse-sense drift kick).
template <typename Scalar>
VecX<Scalar> b_step(const VecX<Scalar>& p, const VecX<Scalar>& q, Scalar h,
                    const Drift<Scalar>& drift) {
  VecX<Scalar> out = p;
  drift.accumulate(q, -h, out);
  return out;
}

/// S(t, q, p; gamma_eff, h) = p - b(q) h + 2 gamma_eff s(T - t, q, p) h.
/// `score` is the forward-time score; the T - t remap happens here. Pass
/// gamma_eff = gamma for symmetric S half-steps and 2 gamma for single-S
/// schemes.
template <typename Scalar, typename ScoreFn>
VecX<Scalar> s_step(Scalar t, const VecX<Scalar>& q, const VecX<Scalar>& p,
                    Scalar gamma_eff, Scalar h, Scalar horizon,
                    const Drift<Scalar>& drift, ScoreFn&& score) {
  VecX<Scalar> out = p;
  drift.accumulate(q, -h, out);
  out += (Scalar(2) * gamma_eff * h) * score(horizon - t, q, p);
  return out;
}

// ---------------------------------------------------------------------------
// Forward kinetic schemes
// ---------------------------------------------------------------------------

enum class KineticScheme { AcOAc, OAcO, Cbbk };

KineticScheme kinetic_scheme_from_string(const std::string& name);
std::string to_string(KineticScheme);

namespace detail {

template <typename Scalar>
void merge_event(BoundaryEvent<Scalar>& event, const AcOutcome<Scalar>& ac) {
  event.reflections += ac.reflections;
  if (ac.exited && !event.exited) {
    event.exited = true;
    event.d = ac.overshoot;
    event.p_proj = ac.hit_point;
    event.n_proj = ac.hit_normal;
  }
}

}  // namespace detail

/// One full forward step of the named composition. AcOAc/OAcO carry nonzero
/// drift via B half-kick wraps ([BA_cOA_cB]-style); Cbbk handles drift
/// natively. The position stays in closure(G).
template <typename Scalar>
BoundaryEvent<Scalar> forward_cld_step(KineticScheme scheme,
                                       const Domain<Scalar>& domain,
                                       KineticState<Scalar>& state,
                                       const Drift<Scalar>& drift,
                                       Scalar gamma, Scalar h,
                                       NoiseStream& noise,
                                       bool rademacher = false) {
  BoundaryEvent<Scalar> event;
  const Index d = state.x.size();
  VecX<Scalar> xi(d);
  switch (scheme) {
    case KineticScheme::AcOAc: {
      drift.accumulate(state.x, h / 2, state.v);
      auto ac1 = a_c_step(domain, state.x, state.v, h / 2);
      detail::merge_event(event, ac1);
      xi = noise.vector(d, rademacher);
      VecX<Scalar> vhat = o_step_forward<Scalar>(ac1.v, h, gamma, xi);
      auto ac2 = a_c_step(domain, ac1.x, vhat, h / 2);
      detail::merge_event(event, ac2);
      state.x = ac2.x;
      state.v = ac2.v;
      drift.accumulate(state.x, h / 2, state.v);
      return event;
    }
    case KineticScheme::OAcO: {
      xi = noise.vector(d, rademacher);
      state.v = o_step_forward<Scalar>(state.v, h / 2, gamma, xi);
      drift.accumulate(state.x, h / 2, state.v);
      auto ac = a_c_step(domain, state.x, state.v, h);
      detail::merge_event(event, ac);
      state.x = ac.x;
      state.v = ac.v;
      drift.accumulate(state.x, h / 2, state.v);
      xi = noise.vector(d, rademacher);
      state.v = o_step_forward<Scalar>(state.v, h / 2, gamma, xi);
      return event;
    }
    case KineticScheme::Cbbk: {
      // BBK with the position update replaced by A_c transport.
      const Scalar kick = std::sqrt(gamma * h);
      xi = noise.vector(d, rademacher);
      VecX<Scalar> vhalf = state.v - (h * gamma / 2) * state.v + kick * xi;
      drift.accumulate(state.x, h / 2, vhalf);
      auto ac = a_c_step(domain, state.x, vhalf, h);
      detail::merge_event(event, ac);
      state.x = ac.x;
      xi = noise.vector(d, rademacher);
      VecX<Scalar> vnew = ac.v + kick * xi;
      drift.accumulate(state.x, h / 2, vnew);
      state.v = vnew / (Scalar(1) + h * gamma / 2);
      return event;
    }
  }
  throw std::logic_error("forward_cld_step: unknown scheme");
}

// ---------------------------------------------------------------------------
// Reverse kinetic schemes
// ---------------------------------------------------------------------------

enum class ReverseKineticScheme {
  Saoas,     // [SA_cOA_cS], 2 score evaluations per step
  Baoas,     // [BA_cOA_cS] = 1FE [SA_cOA_cS]
  Osaso,     // [OSA_cSO]
  Asosa,     // [A_cSOSA_c]
  Aosoa,     // [A_cOSOA_c], single middle S
  Obaso,     // [OBA_cSO]
  CbbkS,     // confined BBK with score
};

ReverseKineticScheme reverse_scheme_from_string(const std::string& name);
std::string to_string(ReverseKineticScheme);
/// Advertised score-network evaluations per step.
int scheme_nfe_per_step(ReverseKineticScheme scheme);
bool scheme_uses_drift(ReverseKineticScheme scheme);

/// One composed reverse step at reverse time t = t_k. `score(tf, q, p)` is
/// the forward-time score network; S steps evaluate it at tf = T - t_k.
/// A_c transport runs in the reverse direction (position moves by -P h).
template <typename Scalar, typename ScoreFn>
BoundaryEvent<Scalar> reverse_cld_step(ReverseKineticScheme scheme,
                                       const Domain<Scalar>& domain,
                                       KineticState<Scalar>& state,
                                       const Drift<Scalar>& drift,
                                       Scalar gamma, Scalar h, Scalar t,
                                       Scalar horizon, ScoreFn&& score,
                                       NoiseStream& noise,
                                       bool rademacher = false) {
  BoundaryEvent<Scalar> event;
  const Index d = state.x.size();
  VecX<Scalar>& q = state.x;
  VecX<Scalar>& p = state.v;
  auto s_kick = [&](Scalar gamma_eff, Scalar hh) {
    p = s_step<Scalar>(t, q, p, gamma_eff, hh, horizon, drift, score);
  };
  auto ac = [&](Scalar hh) {
    auto r = a_c_step(domain, q, p, hh, /*reverse=*/true);
    detail::merge_event(event, r);
    q = r.x;
    p = r.v;
  };
  auto o_rev = [&](Scalar hh) {
    const VecX<Scalar> xi = noise.vector(d, rademacher);
    p = o_step_reverse<Scalar>(p, hh, gamma, xi);
  };
  switch (scheme) {
    case ReverseKineticScheme::Saoas:
      s_kick(gamma, h / 2);
      ac(h / 2);
      o_rev(h);
      ac(h / 2);
      s_kick(gamma, h / 2);
      return event;
    case ReverseKineticScheme::Baoas:
      p = b_step(p, q, h / 2, drift);
      ac(h / 2);
      o_rev(h);
      ac(h / 2);
      s_kick(2 * gamma, h / 2);
      return event;
    case ReverseKineticScheme::Osaso:
      o_rev(h / 2);
      s_kick(gamma, h / 2);
      ac(h);
      s_kick(gamma, h / 2);
      o_rev(h / 2);
      return event;
    case ReverseKineticScheme::Asosa:
      ac(h / 2);
      s_kick(gamma, h / 2);
      o_rev(h);
      s_kick(gamma, h / 2);
      ac(h / 2);
      return event;
    case ReverseKineticScheme::Aosoa:
      ac(h / 2);
      o_rev(h / 2);
      s_kick(gamma, h);
      o_rev(h / 2);
      ac(h / 2);
      return event;
    case ReverseKineticScheme::Obaso:
      o_rev(h / 2);
      p = b_step(p, q, h / 2, drift);
      ac(h);
      s_kick(2 * gamma, h / 2);
      o_rev(h / 2);
      return event;
    case ReverseKineticScheme::CbbkS: {
      if (h * gamma / 2 >= Scalar(1))
        throw std::invalid_argument("CBBK-S: h*gamma/2 >= 1, divisor <= 0");
      const Scalar kick = std::sqrt(gamma * h);
      VecX<Scalar> xi = noise.vector(d, rademacher);
      VecX<Scalar> phalf = p + (h * gamma / 2) * p + kick * xi;
      drift.accumulate(q, -h / 2, phalf);
      auto r = a_c_step(domain, q, phalf, h, /*reverse=*/true);
      detail::merge_event(event, r);
      q = r.x;
      xi = noise.vector(d, rademacher);
      VecX<Scalar> pnew = r.v + kick * xi +
                          (2 * h * gamma) * score(horizon - t, q, r.v);
      drift.accumulate(q, -h / 2, pnew);
      p = pnew / (Scalar(1) - h * gamma / 2);
      return event;
    }
  }
  throw std::logic_error("reverse_cld_step: unknown scheme");
}

// ---------------------------------------------------------------------------
// Reflected (overdamped) steps
// ---------------------------------------------------------------------------

enum class ReflectedMethod { Projection, Symmetrized, Penalty, Barrier };

ReflectedMethod reflected_method_from_string(const std::string& name);
std::string to_string(ReflectedMethod);

template <typename Scalar>
struct ReflectedParams {
  // NaN sentinels mean "use the default": lambda = h, collar = 10% of the
  // domain half-width. Explicit nonpositive values are caller errors.
  Scalar lambda = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar eta = Scalar(0.05);
  Scalar collar = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar r_min = Scalar(1e-6);
};

/// Euler displacement delta_{k+1} = f h + sqrt(2 h) xi, with the drift value
/// f = f(t_k, X_k) already evaluated by the caller.
template <typename Scalar, typename FD, typename XD>
VecX<Scalar> euler_aux(const Eigen::MatrixBase<FD>& f_value, Scalar h,
                       const Eigen::MatrixBase<XD>& xi) {
  return f_value * h + std::sqrt(Scalar(2) * h) * xi;
}

template <typename Scalar>
Scalar default_barrier_collar(const Domain<Scalar>& domain) {
  if (domain.is_box()) return Scalar(0.1) * domain.box().min_half_width();
  return Scalar(0.1) * domain.ball().radius;
}

/// Inward-pointing barrier drift 2 grad R / (eta sinh(2 R / eta)) with
/// R = dist(x, boundary), active only inside the collar and clamped at
/// R <= r_min to dodge the sinh(0) singularity.
template <typename Scalar>
VecX<Scalar> barrier_drift(const Domain<Scalar>& domain, const VecX<Scalar>& x,
                           const ReflectedParams<Scalar>& params) {
  if (!(params.eta > Scalar(0)))
    throw std::invalid_argument("barrier: eta must be > 0");
  const Scalar collar = std::isnan(params.collar)
                            ? default_barrier_collar(domain)
                            : params.collar;
  const Scalar r_raw = dist_to_boundary(domain, x);
  if (r_raw > collar) return VecX<Scalar>::Zero(x.size());
  const Scalar r = std::max(r_raw, params.r_min);
  VecX<Scalar> grad_r;
  if (domain.is_box()) {
    const auto& box = domain.box();
    Index axis = 0;
    Scalar best = std::numeric_limits<Scalar>::infinity();
    Scalar sign = Scalar(1);
    for (Index i = 0; i < box.dim(); ++i) {
      const Scalar to_lo = x[i] - box.lo[i];
      const Scalar to_hi = box.hi[i] - x[i];
      if (to_lo < best) {
        best = to_lo;
        axis = i;
        sign = Scalar(1);  // inward from the low face is +e_i
      }
      if (to_hi < best) {
        best = to_hi;
        axis = i;
        sign = Scalar(-1);
      }
    }
    grad_r = VecX<Scalar>::Zero(box.dim());
    grad_r[axis] = sign;
  } else {
    const VecX<Scalar> rvec = x - domain.ball().center;
    const Scalar len = rvec.norm();
    grad_r = len > Scalar(0) ? VecX<Scalar>(-rvec / len)
                             : VecX<Scalar>::Zero(x.size());
  }
  const Scalar mag =
      Scalar(2) / (params.eta * std::sinh(Scalar(2) * r / params.eta));
  return mag * grad_r;
}

/// One reflected-SDE step from x with precomputed displacement delta.
/// Projection and symmetrized keep the state in closure(G); penalty may
/// leave it; barrier is monitored, not guaranteed.
template <typename Scalar>
BoundaryEvent<Scalar> reflected_step(ReflectedMethod method,
                                     const Domain<Scalar>& domain,
                                     VecX<Scalar>& x, const VecX<Scalar>& delta,
                                     Scalar h,
                                     const ReflectedParams<Scalar>& params) {
  BoundaryEvent<Scalar> event;
  switch (method) {
    case ReflectedMethod::Projection:
    case ReflectedMethod::Symmetrized: {
      const VecX<Scalar> aux = x + delta;
      if (contains(domain, aux)) {
        x = aux;
        return event;
      }
      event.exited = true;
      event.p_proj = project(domain, aux);
      event.d = (aux - event.p_proj).norm();
      event.n_proj = normal_at(domain, event.p_proj);
      if (method == ReflectedMethod::Projection) {
        x = event.p_proj;
        return event;
      }
      const VecX<Scalar> mirrored =
          aux - Scalar(2) * event.d * event.n_proj;
      if (contains(domain, mirrored)) {
        x = mirrored;
      } else {
        // Non-smooth corner: mirror along the face normal failed, project.
        x = event.p_proj;
        event.fallback = true;
      }
      return event;
    }
    case ReflectedMethod::Penalty: {
      const Scalar lambda = std::isnan(params.lambda) ? h : params.lambda;
      if (!(lambda > Scalar(0)))
        throw std::invalid_argument("penalty: lambda must be > 0");
      VecX<Scalar> pull = x - project(domain, x);
      const VecX<Scalar> aux = x + delta;
      x = aux - (h / lambda) * pull;
      if (!contains(domain, aux)) {
        event.exited = true;
        event.p_proj = project(domain, aux);
        event.d = (aux - event.p_proj).norm();
        event.n_proj = normal_at(domain, event.p_proj);
      }
      return event;
    }
    case ReflectedMethod::Barrier: {
      const VecX<Scalar> aux = x + delta + h * barrier_drift(domain, x, params);
      if (!contains(domain, aux)) {
        event.exited = true;
        event.p_proj = project(domain, aux);
        event.d = (aux - event.p_proj).norm();
        event.n_proj = normal_at(domain, event.p_proj);
      }
      x = aux;
      return event;
    }
  }
  throw std::logic_error("reflected_step: unknown method");
}

/// Baseline Euler step with no boundary handling at all.
template <typename Scalar>
void unconstrained_euler_step(VecX<Scalar>& x, const VecX<Scalar>& delta) {
  x += delta;
}

}  // namespace confined
