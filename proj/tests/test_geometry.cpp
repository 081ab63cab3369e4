#include "confined/domain.hpp"

#include "confined/integrators.hpp"
#include "confined/rng.hpp"

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

Domain<double> box2(double a, double b) {
  return HyperBox<double>(a, b, 2);
}

}  // namespace

TEST_CASE("contains: interior, exterior, boundary") {
  const auto box = box2(-3, 3);
  CHECK(contains(box, vec2(0, 0)));
  CHECK_FALSE(contains(box, vec2(3.0001, 0)));
  const Domain<double> ball(Ball<double>(vec2(0, 0), 1.0));
  CHECK(contains(ball, vec2(1, 0)));  // boundary counts as closure
  CHECK_FALSE(contains(ball, vec2(1.0 + 1e-9, 0)));
  CHECK_THROWS(contains(box, vec1(0.0)));  // dimension mismatch
}

TEST_CASE("project: clamp, radial, identity") {
  const auto box = box2(-3, 3);
  CHECK(project(box, vec2(4, 1)) == vec2(3, 1));
  CHECK(project(box, vec2(0, 0)) == vec2(0, 0));
  const Domain<double> ball(Ball<double>(vec2(0, 0), 1.0));
  CHECK((project(ball, vec2(2, 0)) - vec2(1, 0)).norm() < 1e-15);
}

TEST_CASE("project is idempotent on random points") {
  NoiseStream rng(11, 0);
  const auto box = box2(-1, 1);
  const Domain<double> ball(Ball<double>(vec2(0.5, -0.2), 1.7));
  for (int i = 0; i < 10000; ++i) {
    const VecXd x = 6.0 * vec2(rng.uniform() - 0.5, rng.uniform() - 0.5);
    for (const auto& dom : {box, ball}) {
      const VecXd p = project(dom, x);
      CHECK((project(dom, p) - p).norm() == 0.0);
      CHECK(contains(dom, p, 1e-12));
    }
  }
}

TEST_CASE("normal_at: faces, sphere, corner tie-break") {
  const auto box = box2(-1, 1);
  CHECK(normal_at(box, vec2(1, 0.3)) == vec2(1, 0));
  CHECK(normal_at(box, vec2(-1, 0.3)) == vec2(-1, 0));
  CHECK(normal_at(box, vec2(0.2, -1)) == vec2(0, -1));
  // Corner: lowest axis wins the tie.
  CHECK(normal_at(box, vec2(1, 1)) == vec2(1, 0));
  const Domain<double> ball(Ball<double>(vec2(0, 0), 1.0));
  CHECK((normal_at(ball, vec2(0, 1)) - vec2(0, 1)).norm() < 1e-12);
  CHECK_THROWS(normal_at(box, vec2(0.5, 0.5)));  // not on boundary
}

TEST_CASE("normal_at points outward") {
  NoiseStream rng(12, 0);
  const auto box = box2(-1, 1);
  const Domain<double> ball(Ball<double>(vec2(0, 0), 2.0));
  for (int i = 0; i < 2000; ++i) {
    for (const auto& dom : {box, ball}) {
      VecXd x = 3.0 * vec2(rng.gaussian(), rng.gaussian());
      if (contains(dom, x)) continue;
      const VecXd p = project(dom, x);
      const VecXd n = normal_at(dom, p);
      CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK_FALSE(contains(dom, VecXd(p + 1e-6 * n)));
    }
  }
}

TEST_CASE("segment_exit: hand-evaluated crossings") {
  const Domain<double> box1(HyperBox<double>(-1.0, 1.0, 1));
  auto hit = segment_exit(box1, vec1(0.9), vec1(1.0), 0.3);
  REQUIRE(hit.has_value());
  CHECK(hit->tau == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(hit->point[0] == 1.0);
  CHECK(hit->normal[0] == 1.0);

  CHECK_FALSE(segment_exit(box1, vec1(0.0), vec1(1.0), 0.5).has_value());

  const Domain<double> ball(Ball<double>(vec2(0, 0), 1.0));
  auto bhit = segment_exit(ball, vec2(0, 0), vec2(1, 0), 2.0);
  REQUIRE(bhit.has_value());
  CHECK(bhit->tau == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((bhit->point - vec2(1, 0)).norm() < 1e-14);
  CHECK((bhit->normal - vec2(1, 0)).norm() < 1e-14);
}

TEST_CASE("segment_exit consistency: inside before, outside after") {
  NoiseStream rng(13, 0);
  const auto box = box2(-1, 1);
  const Domain<double> ball(Ball<double>(vec2(0, 0), 1.3));
  int found = 0;
  for (int i = 0; i < 20000; ++i) {
    for (const auto& dom : {box, ball}) {
      VecXd y = vec2(1.8 * (rng.uniform() - 0.5), 1.8 * (rng.uniform() - 0.5));
      if (!contains(dom, y)) continue;
      const VecXd z = vec2(3 * rng.gaussian(), 3 * rng.gaussian());
      const double h = 0.5 * rng.uniform();
      auto hit = segment_exit(dom, y, z, h);
      if (!hit) {
        CHECK(contains(dom, VecXd(y + h * z), 1e-9));
        continue;
      }
      ++found;
      CHECK(hit->tau >= 0.0);
      CHECK(hit->tau <= h);
      CHECK(contains(dom, VecXd(y + (hit->tau - 1e-12) * z)));
      // Just past the crossing the point is outside (away from corners).
      const VecXd past = y + (hit->tau + 1e-9) * z;
      const VecXd on = project(dom, past);
      if ((past - on).norm() > 1e-12) CHECK_FALSE(contains(dom, past, 0.0));
    }
  }
  CHECK(found > 1000);
}

TEST_CASE("specular_reflect: mirror, tangential, norm conservation") {
  CHECK(specular_reflect(vec2(1, 1), vec2(1, 0)) == vec2(-1, 1));
  CHECK(specular_reflect(vec2(0, 1), vec2(1, 0)) == vec2(0, 1));
  NoiseStream rng(14, 0);
  double max_err = 0.0;
  for (int i = 0; i < 100000; ++i) {
    VecXd v = vec2(rng.gaussian() * 3, rng.gaussian() * 3);
    VecXd n = vec2(rng.gaussian(), rng.gaussian());
    n /= n.norm();
    max_err = std::max(max_err,
                       std::abs(specular_reflect(v, n).norm() - v.norm()));
  }
  // Reflection isometry to within 4 ulps of the typical magnitude.
  CHECK(max_err <= 4.0 * std::numeric_limits<double>::epsilon() * 8.0);
}

TEST_CASE("fold_box: single fold, double fold, identity") {
  const HyperBox<double> box(-1.0, 1.0, 1);
  CHECK(fold_box(box, vec1(1.2))[0] == doctest::Approx(0.8).epsilon(1e-15));
  // 3.5 -> -1.5 -> -0.5 (two folds)
  VecXd signs;
  CHECK(fold_box(box, vec1(3.5), &signs)[0] ==
        doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(signs[0] == 1.0);  // even number of folds
  CHECK(fold_box(box, vec1(0.3))[0] == 0.3);
  CHECK(fold_box(box, vec1(1.2), &signs)[0] == doctest::Approx(0.8));
  CHECK(signs[0] == -1.0);
  CHECK_THROWS(fold_box(box, vec1(std::nan(""))));
}

TEST_CASE("fold_box equals segment_exit+reflect ballistic transport") {
  // Pure ballistic motion in [-1,1]^2: the per-axis fold and the generic
  // reflection loop must land on the same point.
  NoiseStream rng(15, 0);
  const auto domain = box2(-1, 1);
  const auto& box = domain.box();
  double max_diff = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const VecXd x = vec2(1.98 * (rng.uniform() - 0.5),
                         1.98 * (rng.uniform() - 0.5));
    const VecXd v = vec2(6 * rng.gaussian(), 6 * rng.gaussian());
    const double h = 0.5 * rng.uniform();
    VecXd signs;
    const VecXd folded = fold_box(box, VecXd(x + h * v), &signs);
    const auto generic = a_c_step_generic(domain, x, v, h);
    max_diff = std::max(max_diff, (folded - generic.x).norm());
    max_diff = std::max(max_diff,
                        (v.cwiseProduct(signs) - generic.v).norm());
  }
  CHECK(max_diff <= 1e-12);
}

TEST_CASE("domain json round trip") {
  const auto box = box2(-3, 3);
  const auto j = domain_to_json(box);
  CHECK(j.at("type") == "box");
  const auto back = domain_from_json(j);
  CHECK(back.is_box());
  CHECK(back.box().lo == box.box().lo);
  CHECK(back.box().hi == box.box().hi);

  const Domain<double> ball(Ball<double>(vec2(0.5, -1), 2.0));
  const auto jb = domain_to_json(ball);
  const auto back_ball = domain_from_json(jb);
  CHECK_FALSE(back_ball.is_box());
  CHECK(back_ball.ball().radius == 2.0);
  CHECK_THROWS_AS(domain_from_json(nlohmann::json{{"type", "cone"}}),
                  std::invalid_argument);
}

TEST_CASE("invalid domains are rejected") {
  CHECK_THROWS(HyperBox<double>(1.0, -1.0, 2));
  CHECK_THROWS(Ball<double>(vec2(0, 0), 0.0));
}
