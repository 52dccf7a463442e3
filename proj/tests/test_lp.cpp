#include <doctest.h>

#include <cmath>
#include <limits>

#include "ohio/lp.hpp"
#include "ohio/rng.hpp"
#include "oracles.hpp"

using namespace ohio;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_certificates(const LpProblem& p, const LpSolution& s) {
  REQUIRE(s.status == LpStatus::Optimal);
  const LpResiduals r = lp_residuals(p, s);
  CHECK(r.primal < 1e-7);
  CHECK(r.complementarity < 1e-6);
  CHECK(r.duality_gap < 1e-6);
  CHECK((s.duals_ub.array() <= 1e-12).all());
}

}  // namespace

TEST_CASE("one-variable LP and its dual sign") {
  LpProblem p;
  p.c = Vec::Constant(1, -1.0);
  p.A_ub = Mat::Constant(1, 1, 1.0);
  p.b_ub = Vec::Constant(1, 1.0);
  const LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.x(0) == doctest::Approx(1.0));
  CHECK(s.objective_value == doctest::Approx(-1.0));
  CHECK(s.duals_ub(0) == doctest::Approx(-1.0));
  check_certificates(p, s);
}

TEST_CASE("infeasible LP with a Farkas certificate") {
  LpProblem p;
  p.c = Vec::Constant(1, 1.0);
  p.A_ub = Mat::Constant(1, 1, 1.0);
  p.b_ub = Vec::Constant(1, -1.0);
  const LpSolution s = solve_lp(p);
  CHECK(s.status == LpStatus::Infeasible);
  REQUIRE(s.certificate.size() == 1);
  // y <= 0 with A'y >= 0 and b'y > 0 proves {Ax <= b, x >= 0} empty.
  const double y = s.certificate(0);
  CHECK(y < 0.0);
  CHECK(p.b_ub(0) * y > 0.0);
}

TEST_CASE("unbounded LP returns an improving ray") {
  LpProblem p;
  p.c = Vec(2);
  p.c << -1.0, 0.0;
  p.A_ub = Mat(1, 2);
  p.A_ub << -1.0, 1.0;
  p.b_ub = Vec::Constant(1, 1.0);
  const LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::Unbounded);
  const Vec& d = s.certificate;
  CHECK(p.c.dot(d) < 0.0);
  CHECK((p.A_ub * d)(0) <= 1e-12);
  CHECK((d.array() >= -1e-12).all());
}

TEST_CASE("transportation LP matches vertex enumeration") {
  // Supplies {2, 0}, demands {1, 1}, costs x11 = 1, x12 = 3, x21 = 1, x22 = 1.
  LpProblem p;
  p.c = Vec(4);
  p.c << 1, 3, 1, 1;
  p.A_ub = Mat(2, 4);
  p.A_ub << 1, 1, 0, 0, 0, 0, 1, 1;
  p.b_ub = Vec(2);
  p.b_ub << 2, 0;
  p.A_eq = Mat(2, 4);
  p.A_eq << 1, 0, 1, 0, 0, 1, 0, 1;
  p.b_eq = Vec(2);
  p.b_eq << 1, 1;
  const LpSolution s = solve_lp(p);
  Vec arg;
  const auto best = oracle::lp_vertex_min(p.c, p.A_ub, p.b_ub, p.A_eq, p.b_eq, &arg);
  REQUIRE(best.has_value());
  CHECK(s.objective_value == doctest::Approx(*best).epsilon(1e-12));
  CHECK(*best == doctest::Approx(4.0));
  check_certificates(p, s);
}

TEST_CASE("Beale's cycling example terminates under Bland's rule") {
  LpProblem p;
  p.c = Vec(4);
  p.c << -0.75, 150, -0.02, 6;
  p.A_ub = Mat(3, 4);
  p.A_ub << 0.25, -60, -0.04, 9, 0.5, -90, -0.02, 3, 0, 0, 1, 0;
  p.b_ub = Vec(3);
  p.b_ub << 0, 0, 1;
  const LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.objective_value == doctest::Approx(-0.05));
  check_certificates(p, s);
}

TEST_CASE("general bounds: shifted, mirrored and free variables") {
  // min x0 - x1 + x2, x0 in [-2, 3], x1 <= 4 (no lower bound), x2 free,
  // x0 + x1 + x2 = 1, x2 - x0 <= 2, -x2 <= 5.
  LpProblem p;
  p.c = Vec(3);
  p.c << 1, -1, 1;
  p.lo = Vec(3);
  p.lo << -2, -kInf, -kInf;
  p.hi = Vec(3);
  p.hi << 3, 4, kInf;
  p.A_eq = Mat(1, 3);
  p.A_eq << 1, 1, 1;
  p.b_eq = Vec::Constant(1, 1.0);
  p.A_ub = Mat(2, 3);
  p.A_ub << -1, 0, 1, 0, 0, -1;
  p.b_ub = Vec(2);
  p.b_ub << 2, 5;
  const LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::Optimal);
  // x1 = 4 at its bound, x2 = -5, x0 = 2: objective 2 - 4 - 5 = -7.
  CHECK(s.objective_value == doctest::Approx(-7.0));
  check_certificates(p, s);
  CHECK(s.bound_hi(1) <= 1e-12);
}

TEST_CASE("redundant equality rows are tolerated") {
  LpProblem p;
  p.c = Vec(2);
  p.c << 1, 2;
  p.A_eq = Mat(2, 2);
  p.A_eq << 1, 1, 2, 2;
  p.b_eq = Vec(2);
  p.b_eq << 1, 2;
  const LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.objective_value == doctest::Approx(1.0));
  check_certificates(p, s);
}

TEST_CASE("inverted bounds are infeasible") {
  LpProblem p;
  p.c = Vec::Ones(1);
  p.lo = Vec::Constant(1, 2.0);
  p.hi = Vec::Constant(1, 1.0);
  CHECK(solve_lp(p).status == LpStatus::Infeasible);
}

TEST_CASE("malformed problems are rejected") {
  LpProblem p;
  p.c = Vec::Ones(2);
  p.A_ub = Mat::Ones(1, 3);
  p.b_ub = Vec::Ones(1);
  CHECK_THROWS_AS(solve_lp(p), Error);
  LpProblem q;
  q.c = Vec::Constant(1, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(solve_lp(q), Error);
}

TEST_CASE("simplex equals brute-force vertex enumeration on random small LPs") {
  SeededRng rng(1234);
  int optimal = 0, infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(5));  // 2..6 variables
    const int mu = 1 + static_cast<int>(rng.uniform_index(4));
    const int me = static_cast<int>(rng.uniform_index(2));
    LpProblem p;
    p.c = Vec(n);
    for (int j = 0; j < n; ++j) p.c(j) = std::round(rng.uniform(-5, 5));
    // A box row keeps every instance bounded.
    p.A_ub = Mat(mu + 1, n);
    p.b_ub = Vec(mu + 1);
    for (int i = 0; i < mu; ++i) {
      for (int j = 0; j < n; ++j) p.A_ub(i, j) = std::round(rng.uniform(-4, 4));
      p.b_ub(i) = std::round(rng.uniform(-2, 8));
    }
    p.A_ub.row(mu).setOnes();
    p.b_ub(mu) = 10.0;
    p.A_eq = Mat(me, n);
    p.b_eq = Vec(me);
    for (int i = 0; i < me; ++i) {
      for (int j = 0; j < n; ++j) p.A_eq(i, j) = std::round(rng.uniform(0, 3));
      p.A_eq(i, i % n) += 1.0;  // no all-zero equality rows
      p.b_eq(i) = std::round(rng.uniform(0, 6));
    }
    const LpSolution s = solve_lp(p);
    const auto best = oracle::lp_vertex_min(p.c, p.A_ub, p.b_ub, p.A_eq, p.b_eq);
    if (!best) {
      CHECK(s.status == LpStatus::Infeasible);
      ++infeasible;
      continue;
    }
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(std::abs(s.objective_value - *best) < 1e-8);
    check_certificates(p, s);
    ++optimal;
  }
  CHECK(optimal > 100);
  CHECK(infeasible > 0);
}
