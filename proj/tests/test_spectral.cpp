#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "qsc/spectral.hpp"

using namespace qsc;

TEST_CASE("leading data closed forms") {
  const Model m = test::ma();
  const LeadingData L = leading_data(m, test::solve_ma1());

  const cplx x(3, 0);
  const cplx S = cplx(1) / (x - cplx(1));
  REQUIRE(test::rel(L.W1.eval(x), S) < 1e-13);
  REQUIRE(test::rel(L.Y.eval(x), x - S) < 1e-13);

  // U_{0,0} = u0/(x-s) - tt0 + x, U_{0,1} = tt2 W1 - tt1, U_{0,2} = -tt2
  REQUIRE(L.U0.size() == 3);
  REQUIRE(test::rel(L.U0[0].eval(x), S + x) < 1e-13);
  REQUIRE(test::rel(L.U0[1].eval(x), S) < 1e-13);
  REQUIRE(test::rel(L.U0[2].eval(x), cplx(-1)) < 1e-13);
}

TEST_CASE("curve evaluation pinned sample") {
  const Model m = test::ma();
  const LeadingData L = leading_data(m, test::solve_ma1());
  // E(x,y) = (V1'(x)-y)(V2'(y)-x) - P0(x,y) + T + T/N at (2,3)
  REQUIRE(test::rel(curve_eval(L, cplx(2), cplx(3)), cplx(-9)) < 1e-12);
}

TEST_CASE("quantum curve annihilates the wave-function expansion") {
  REQUIRE(quantum_curve_residual(test::ma(), leading_data(test::ma(), test::solve_ma1()))
          < 1e-14);
  REQUIRE(quantum_curve_residual(test::ma(2), leading_data(test::ma(2), test::solve_ma2()))
          < 1e-8);
  REQUIRE(quantum_curve_residual(test::mb(2), leading_data(test::mb(2), test::solve_mb2()))
          < 1e-8);
  REQUIRE(quantum_curve_residual(test::mb(3), leading_data(test::mb(3), test::solve_mb3()))
          < 1e-8);
}

TEST_CASE("companion determinant reproduces the curve") {
  std::mt19937_64 rng(20240817);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);

  for (auto& [m, sol] : {std::pair{test::ma(2), test::solve_ma2()},
                         std::pair{test::mb(2), test::solve_mb2()}}) {
    const LeadingData L = leading_data(m, sol);
    for (int it = 0; it < 20; ++it) {
      const cplx x(dist(rng), dist(rng));
      const cplx y(dist(rng), dist(rng));
      const cplx lhs = companion_det(m, L, x, y);
      const cplx rhs = curve_eval(L, x, y);
      REQUIRE(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST_CASE("curve coefficients have the expected y-degrees") {
  const Model m = test::mb(2);
  const LeadingData L = leading_data(m, test::solve_mb2());
  REQUIRE(int(L.E.size()) == m.d2() + 2);
  REQUIRE(int(L.P00.size()) == m.d2());
  // top coefficients: E_{d2+1} = -tt_{d2}, from (V1'-y)(V2'-x)
  REQUIRE(test::rel(L.E[m.d2() + 1].coeff(0), -m.t2_top()) < 1e-13);
}
