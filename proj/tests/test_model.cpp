#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "qsc/model.hpp"

using namespace qsc;

TEST_CASE("model validation") {
  const Poly lin({cplx(0), cplx(1)});
  const Poly quad({cplx(0), cplx(0), cplx(1)});

  REQUIRE_NOTHROW(Model(lin, quad, 1.0, 1));
  // constant potential derivatives are rejected (degree < 1 after trimming)
  REQUIRE_THROWS_AS(Model(Poly({cplx(1)}), quad, 1.0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(Model(Poly({cplx(0), cplx(0)}), quad, 1.0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(Model(lin, Poly({cplx(1)}), 1.0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(Model(lin, quad, 1.0, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(Model(lin, quad, 0.0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(Model(lin, quad, -2.0, 1), std::invalid_argument);
}

TEST_CASE("model accessors") {
  const Model m = test::ma(2, 0.5);
  REQUIRE(m.d1() == 1);
  REQUIRE(m.d2() == 2);
  REQUIRE(m.t1(1) == cplx(1));
  REQUIRE(m.t1(0) == cplx(0));
  REQUIRE(m.t2(2) == cplx(1));
  REQUIRE(m.t2_top() == cplx(1));
  REQUIRE(m.hbar() == 0.25);

  REQUIRE(m.V1p.eval(cplx(2)) == cplx(2));
  REQUIRE(m.V2p.eval(cplx(3)) == cplx(9));
}

TEST_CASE("potentials integrate the derivatives") {
  const Model m = test::mc();
  const Poly V1 = m.V1();
  const Poly V2 = m.V2();
  // antiderivative convention: zero constant term
  REQUIRE(V1.coeff(0) == cplx(0));
  REQUIRE(V2.coeff(0) == cplx(0));
  for (int k = 0; k <= m.d1(); ++k)
    REQUIRE(std::abs(V1.deriv().coeff(k) - m.t1(k)) < 1e-15);
  for (int k = 0; k <= m.d2(); ++k)
    REQUIRE(std::abs(V2.deriv().coeff(k) - m.t2(k)) < 1e-15);
  // V1 = x^2/2 + 0.1 x^3 for V1' = x + 0.3 x^2
  REQUIRE(std::abs(V1.eval(cplx(2)) - cplx(2.0 + 0.8)) < 1e-14);
}
