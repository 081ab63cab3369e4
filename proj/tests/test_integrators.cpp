#include "confined/integrators.hpp"

#include "confined/parallel.hpp"
#include "confined/simulate.hpp"
#include "confined/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace confined;

namespace {

VecXd vec2(double x, double y) {
  VecXd v(2);
  v << x, y;
  return v;
}
VecXd vec1(double x) {
  VecXd v(1);
  v << x;
  return v;
}

const Domain<double> kBox2(HyperBox<double>(-1.0, 1.0, 2));
const Domain<double> kBox1(HyperBox<double>(-1.0, 1.0, 1));

}  // namespace

TEST_CASE("a_c_step: hand-evaluated collision") {
  // x=(0.9,0), v=(1,0.5), h=0.3: tau=0.1 at the x-face, reflect at (1,0.05),
  // remaining 0.2 with v=(-1,0.5) -> (0.8, 0.15).
  auto out = a_c_step(kBox2, vec2(0.9, 0), vec2(1, 0.5), 0.3);
  CHECK((out.x - vec2(0.8, 0.15)).norm() < 1e-14);
  CHECK((out.v - vec2(-1, 0.5)).norm() == 0.0);
  CHECK(out.exited);
  CHECK(out.reflections == 1);
  CHECK((out.hit_point - vec2(1.0, 0.05)).norm() < 1e-14);
  CHECK(out.hit_normal == vec2(1, 0));

  auto still = a_c_step(kBox2, vec2(0.2, 0.1), vec2(0, 0), 0.5);
  CHECK(still.x == vec2(0.2, 0.1));
  CHECK(still.v == vec2(0, 0));
  CHECK_FALSE(still.exited);
}

TEST_CASE("a_c_step generic and fold path agree on the box") {
  NoiseStream rng(21, 0);
  double max_diff = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const VecXd x = vec2(1.9 * (rng.uniform() - 0.5),
                         1.9 * (rng.uniform() - 0.5));
    const VecXd v = vec2(8 * rng.gaussian(), 8 * rng.gaussian());
    const double h = 0.4 * rng.uniform();
    for (bool reverse : {false, true}) {
      const auto fold = a_c_step(kBox2, x, v, h, reverse);
      const auto gen = a_c_step_generic(kBox2, x, v, h, reverse);
      max_diff = std::max(max_diff, (fold.x - gen.x).norm());
      max_diff = std::max(max_diff, (fold.v - gen.v).norm());
    }
  }
  CHECK(max_diff <= 1e-12);
}

TEST_CASE("a_c_step conserves speed across collisions (box and ball)") {
  NoiseStream rng(22, 0);
  const Domain<double> ball(Ball<double>(vec2(0.1, -0.2), 1.1));
  double max_err = 0.0;
  for (int i = 0; i < 50000; ++i) {
    for (const auto& dom : {kBox2, ball}) {
      VecXd x = vec2(0.5 * rng.gaussian(), 0.5 * rng.gaussian());
      if (!contains(dom, x)) continue;
      const VecXd v = vec2(6 * rng.gaussian(), 6 * rng.gaussian());
      const auto out = a_c_step(dom, x, v, 0.3);
      max_err = std::max(max_err, std::abs(out.v.norm() - v.norm()));
      CHECK(contains(dom, out.x));
    }
  }
  CHECK(max_err <= 1e-12);
}

TEST_CASE("a_c_step errors beyond the reflection cap") {
  CHECK_THROWS_AS(a_c_step(kBox1, vec1(0.0), vec1(1000.0), 1.0),
                  std::runtime_error);
  CHECK_THROWS_AS(a_c_step_generic(kBox1, vec1(0.0), vec1(1000.0), 1.0),
                  std::runtime_error);
}

TEST_CASE("o_step forward: exact OU factors") {
  const VecXd v = vec1(1.0);
  CHECK(o_step_forward<double>(v, 0.0, 1.0, vec1(0.7))[0] == 1.0);
  CHECK(o_step_forward<double>(v, 0.1, 1.0, vec1(0.0))[0] ==
        doctest::Approx(0.904837418).epsilon(1e-9));
  // gamma h -> infinity: only the fresh noise survives.
  CHECK(o_step_forward<double>(v, 1000.0, 1.0, vec1(0.37))[0] ==
        doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("o_step reverse: expanding factors") {
  const VecXd p = vec1(1.0);
  CHECK(o_step_reverse<double>(p, 0.0, 1.0, vec1(0.7))[0] == 1.0);
  CHECK(o_step_reverse<double>(p, 0.1, 1.0, vec1(0.0))[0] ==
        doctest::Approx(1.105170918).epsilon(1e-9));
  // Noise amplitude at gamma=1, h=0.1: sqrt(e^{0.2} - 1).
  const double amp = o_step_reverse<double>(vec1(0.0), 0.1, 1.0, vec1(1.0))[0];
  CHECK(amp * amp == doctest::Approx(0.221402758).epsilon(1e-9));
}

TEST_CASE("b_step") {
  const auto drift = Drift<double>::linear();  // b(x) = -x
  CHECK(b_step<double>(vec2(0, 0), vec2(1, 0), 0.5, drift) == vec2(0.5, 0));
  CHECK(b_step<double>(vec2(0.3, 0), vec2(1, 0), 0.0, drift) == vec2(0.3, 0));
  CHECK(b_step<double>(vec2(0.3, 0), vec2(1, 0), 0.5, Drift<double>::zero()) ==
        vec2(0.3, 0));
}

TEST_CASE("s_step") {
  const auto drift = Drift<double>::linear();
  auto zero_score = [](double, const VecXd& q, const VecXd&) {
    return VecXd(VecXd::Zero(q.size()));
  };
  // score == 0, b = -x: p - b q h = p + q h.
  CHECK(s_step<double>(0.0, vec2(1, 0), vec2(0, 0), 1.0, 0.1, 1.0, drift,
                       zero_score) == vec2(0.1, 0));
  // s = -p at gamma_eff, h: kick 2 gamma_eff h (-p).
  auto neg_p = [](double, const VecXd&, const VecXd& p) { return VecXd(-p); };
  const auto out = s_step<double>(0.2, vec2(0, 0), vec2(1, 1), 2.0, 0.05, 1.0,
                                  Drift<double>::zero(), neg_p);
  CHECK((out - vec2(0.8, 0.8)).norm() < 1e-15);
}

TEST_CASE("forward CBBK: hand evaluation at zero noise") {
  // 1D box [-1,1], b=-x, gamma=1, h=0.1, x=0.5, v=0, xi=0:
  //   V_half = -(h/2) x = -0.025
  //   X1 = x + V_half h = 0.4975
  //   V1 = (V_half + (h/2) b(X1)) / (1 + h gamma/2) = -0.049875 / 1.05
  KineticState<double> state{vec1(0.5), vec1(0.0)};
  struct ZeroNoise : NoiseStream {
    ZeroNoise() : NoiseStream(0, 0) {}
  };
  // Zero noise via a stream wrapper is awkward; evaluate the composition
  // directly through a drift-only step: use gamma*h small but the exact
  // formula with xi=0 is deterministic, so emulate by subtracting the draws.
  // Instead: evaluate via the public API with a recorded stream and verify
  // against the same formula evaluated with those draws.
  NoiseStream stream(77, 3);
  NoiseStream replay(77, 3);
  const double h = 0.1, gamma = 1.0;
  auto event = forward_cld_step(KineticScheme::Cbbk, kBox1, state,
                                Drift<double>::linear(), gamma, h, stream);
  (void)event;
  const double xi1 = replay.gaussian();
  const double xi2 = replay.gaussian();
  const double kick = std::sqrt(gamma * h);
  const double vhalf = 0.0 - (h * gamma / 2) * 0.0 + kick * xi1 - (h / 2) * 0.5;
  const double x1 = 0.5 + vhalf * h;  // no collision for these draws
  const double v1 = (vhalf + kick * xi2 - (h / 2) * x1) / (1 + h * gamma / 2);
  REQUIRE(std::abs(x1) < 1.0);
  CHECK(state.x[0] == doctest::Approx(x1).epsilon(1e-15));
  CHECK(state.v[0] == doctest::Approx(v1).epsilon(1e-15));
}

TEST_CASE("forward AcOAc: fixed point at v=0, xi=0 only via zero-noise check") {
  // With zero drift and zero velocity the A_c halves do nothing; the O step
  // injects noise, so run gamma h = 0 to freeze the velocity instead.
  KineticState<double> state{vec2(0.3, -0.2), vec2(0, 0)};
  NoiseStream stream(5, 5);
  forward_cld_step(KineticScheme::AcOAc, kBox2, state, Drift<double>::zero(),
                   1.0, 1e-300, stream);
  CHECK(state.x == vec2(0.3, -0.2));
  CHECK(std::abs(state.v[0]) < 1e-140);
}

TEST_CASE("reverse schemes: score=0, b=0, zero gamma h freezes the state") {
  auto zero_score = [](double, const VecXd& q, const VecXd&) {
    return VecXd(VecXd::Zero(q.size()));
  };
  for (auto scheme :
       {ReverseKineticScheme::Saoas, ReverseKineticScheme::Baoas,
        ReverseKineticScheme::Osaso, ReverseKineticScheme::Asosa,
        ReverseKineticScheme::Aosoa, ReverseKineticScheme::Obaso,
        ReverseKineticScheme::CbbkS}) {
    KineticState<double> state{vec2(0.4, 0.1), vec2(0, 0)};
    NoiseStream stream(6, 6);
    reverse_cld_step(scheme, kBox2, state, Drift<double>::zero(), 1.0, 1e-300,
                     0.0, 1.0, zero_score, stream);
    CHECK((state.x - vec2(0.4, 0.1)).norm() < 1e-100);
    CHECK(state.v.norm() < 1e-100);
  }
}

TEST_CASE("CBBK-S: hand evaluation with zero noise") {
  // 1D box [-1,1], b=-x, gamma=1, h=0.1, q=0.5, p=0, xi=0, score=0:
  //   P_half = p + (h gamma/2) p - (h/2) b(q) = 0.025
  //   A_c reverse: Q1 = q - P_half h = 0.4975
  //   P1 = (P_half - (h/2) b(Q1)) / (1 - h gamma/2)
  //      = (0.025 + 0.05 * 0.4975) / 0.95 = 0.0525
  auto zero_score = [](double, const VecXd& q, const VecXd&) {
    return VecXd(VecXd::Zero(q.size()));
  };
  KineticState<double> state{vec1(0.5), vec1(0.0)};
  NoiseStream stream(7, 7);
  NoiseStream replay(7, 7);
  const double h = 0.1, gamma = 1.0;
  reverse_cld_step(ReverseKineticScheme::CbbkS, kBox1, state,
                   Drift<double>::linear(), gamma, h, 0.0, 1.0, zero_score,
                   stream);
  const double kick = std::sqrt(gamma * h);
  const double xi1 = replay.gaussian();
  const double xi2 = replay.gaussian();
  const double phalf = 0.0 + 0.05 * 0.0 + kick * xi1 + 0.05 * 0.5;
  const double q1 = 0.5 - phalf * h;
  const double p1 = (phalf + kick * xi2 + 0.05 * q1) / 0.95;
  REQUIRE(std::abs(q1) < 1.0);
  CHECK(state.x[0] == doctest::Approx(q1).epsilon(1e-15));
  CHECK(state.v[0] == doctest::Approx(p1).epsilon(1e-15));
}

TEST_CASE("CBBK-S rejects h gamma / 2 >= 1") {
  auto zero_score = [](double, const VecXd& q, const VecXd&) {
    return VecXd(VecXd::Zero(q.size()));
  };
  KineticState<double> state{vec1(0.0), vec1(0.0)};
  NoiseStream stream(8, 8);
  CHECK_THROWS_AS(
      reverse_cld_step(ReverseKineticScheme::CbbkS, kBox1, state,
                       Drift<double>::zero(), 21.0, 0.1, 0.0, 1.0, zero_score,
                       stream),
      std::invalid_argument);
}

TEST_CASE("NFE table") {
  CHECK(scheme_nfe_per_step(ReverseKineticScheme::Saoas) == 2);
  CHECK(scheme_nfe_per_step(ReverseKineticScheme::Osaso) == 2);
  CHECK(scheme_nfe_per_step(ReverseKineticScheme::Asosa) == 2);
  CHECK(scheme_nfe_per_step(ReverseKineticScheme::Baoas) == 1);
  CHECK(scheme_nfe_per_step(ReverseKineticScheme::Aosoa) == 1);
  CHECK(scheme_nfe_per_step(ReverseKineticScheme::Obaso) == 1);
  CHECK(scheme_nfe_per_step(ReverseKineticScheme::CbbkS) == 1);
}

TEST_CASE("euler_aux") {
  CHECK(euler_aux<double>(vec2(0, 0), 0.01, vec2(0, 0)) == vec2(0, 0));
  CHECK(euler_aux<double>(vec1(-1.0), 0.01, vec1(0.0))[0] ==
        doctest::Approx(-0.01));
  // Variance of the noise part in d=1 is 2h.
  const double amp = euler_aux<double>(vec1(0.0), 0.01, vec1(1.0))[0];
  CHECK(amp * amp == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("reflected_step: symmetrized, projection, penalty, barrier") {
  const Domain<double> box(HyperBox<double>(-3.0, 3.0, 1));
  ReflectedParams<double> params;

  SUBCASE("symmetrized mirrors the overshoot") {
    VecXd x = vec1(3.0 - 0.1);
    // delta pushing to 3.4: mirrored to 2.6.
    auto event = reflected_step(ReflectedMethod::Symmetrized, box, x,
                                vec1(0.5), 0.01, params);
    CHECK(x[0] == doctest::Approx(2.6).epsilon(1e-14));
    CHECK(event.exited);
    CHECK(event.d == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(event.p_proj[0] == 3.0);
    CHECK(event.n_proj[0] == 1.0);
  }
  SUBCASE("projection clamps") {
    VecXd x = vec1(2.9);
    reflected_step(ReflectedMethod::Projection, box, x, vec1(0.5), 0.01,
                   params);
    CHECK(x[0] == 3.0);
  }
  SUBCASE("penalty: zero correction inside") {
    VecXd x = vec1(1.0);
    reflected_step(ReflectedMethod::Penalty, box, x, vec1(0.25), 0.01, params);
    CHECK(x[0] == doctest::Approx(1.25));
    // Exterior state gets pulled back by (h/lambda)(x - Pi(x)) = full gap.
    VecXd y = vec1(3.5);
    reflected_step(ReflectedMethod::Penalty, box, y, vec1(0.0), 0.01, params);
    CHECK(y[0] == doctest::Approx(3.0));
    params.lambda = -1.0;
    CHECK_THROWS_AS(reflected_step(ReflectedMethod::Penalty, box, y, vec1(0.0),
                                   0.01, params),
                    std::invalid_argument);
  }
  SUBCASE("barrier drift magnitude matches the formula") {
    params.eta = 1.0;
    params.collar = 0.5;
    // R = 0.1: magnitude 2 / sinh(0.2).
    const VecXd drift = barrier_drift(box, vec1(2.9), params);
    CHECK(std::abs(drift[0]) ==
          doctest::Approx(2.0 / std::sinh(0.2)).epsilon(1e-12));
    CHECK(drift[0] < 0.0);  // pushes inward, away from the high face
    params.eta = -1.0;
    CHECK_THROWS_AS(barrier_drift(box, vec1(2.9), params),
                    std::invalid_argument);
  }
  SUBCASE("symmetrized corner fallback projects") {
    const Domain<double> b2(HyperBox<double>(-3.0, 3.0, 2));
    VecXd x = vec2(2.9, 2.9);
    auto event = reflected_step(ReflectedMethod::Symmetrized, b2, x,
                                vec2(0.6, 0.6), 0.01, params);
    CHECK(event.exited);
    CHECK(event.fallback);
    CHECK(contains(b2, x));
  }
}

TEST_CASE("unconstrained euler step just adds the displacement") {
  VecXd x = vec2(0.1, 0.2);
  unconstrained_euler_step(x, vec2(0.1414213562373095, 0.0));
  CHECK(x[0] == doctest::Approx(0.2414213562373095));
}

// Appendix-style moment bound: running mean of |V|^2 stays bounded with no
// upward trend, for b in {0, -x} and gamma in {1, 2} on [-1,1]^2.
TEST_CASE("bounded velocity moments over long horizons") {
  const Domain<double> box(HyperBox<double>(-1.0, 1.0, 2));
  const int n_traj = 4096;
  const double T = 100.0, h = 0.01;
  const int n_steps = static_cast<int>(T / h);
  const int sample_every = 10;
  const int n_samples = n_steps / sample_every;
  const int threads = 2;
  for (const bool linear : {false, true}) {
    for (const double gamma : {1.0, 2.0}) {
      const auto scheme = linear ? KineticScheme::Cbbk : KineticScheme::AcOAc;
      const auto drift =
          linear ? Drift<double>::linear() : Drift<double>::zero();
      // Per-thread partial sums of |V|^2 at the sampled times.
      std::vector<std::vector<double>> partial(
          threads, std::vector<double>(n_samples, 0.0));
      const long chunk = (n_traj + threads - 1) / threads;
      parallel_for(n_traj, threads, [&](long begin, long end) {
        auto& slot = partial[static_cast<int>(begin / chunk)];
        for (long i = begin; i < end; ++i) {
          NoiseStream stream(31, static_cast<std::uint64_t>(i));
          KineticState<double> state{VecXd::Zero(2),
                                     stream.gaussian_vector(2)};
          for (int k = 0; k < n_steps; ++k) {
            forward_cld_step(scheme, box, state, drift, gamma, h, stream);
            if ((k + 1) % sample_every == 0)
              slot[k / sample_every] += state.v.squaredNorm();
          }
        }
      });
      std::vector<double> times(n_samples), means(n_samples, 0.0);
      for (int s = 0; s < n_samples; ++s) {
        for (int t = 0; t < threads; ++t) means[s] += partial[t][s];
        means[s] /= n_traj;
        times[s] = (s + 1) * sample_every * h;
        CHECK(means[s] < 5.0);
      }
      // No upward trend over the last half of the horizon.
      const std::size_t half = times.size() / 2;
      std::vector<double> t2(times.begin() + half, times.end());
      std::vector<double> m2(means.begin() + half, means.end());
      CHECK(stats::ls_slope(t2, m2) <= 0.001);
    }
  }
}
