#pragma once

// Shared test models.  ma: V1' = x, V2' = y^2 (all leading data known in
// closed form).  mb: V1' = x, V2' = y^3 (decoupled roots -1, 0, 1, so it has
// natural N = 2 and N = 3 branches).

#include "qsc/bethe.hpp"
#include "qsc/model.hpp"

namespace qsc::test {

inline Model ma(int N = 1, double T = 1.0) {
  return Model(Poly({cplx(0), cplx(1)}), Poly({cplx(0), cplx(0), cplx(1)}), T, N);
}

inline Model mb(int N, double T = 1.0) {
  return Model(Poly({cplx(0), cplx(1)}), Poly({cplx(0), cplx(0), cplx(0), cplx(1)}), T, N);
}

// d1 = 2 companion for the N = 1 closed forms (nonzero V1''').
inline Model mc() {
  return Model(Poly({cplx(0), cplx(1), cplx(0.3)}), Poly({cplx(0), cplx(0), cplx(1)}),
               1.0, 1);
}

inline BetheSolution solve(const Model& m, std::vector<int> sel) {
  BetheOptions opt;
  opt.selection = std::move(sel);
  return solve_bethe(m, opt);
}

inline BetheSolution solve_ma1() { return solve(ma(), {1}); }
inline BetheSolution solve_ma2() { return solve(ma(2), {0, 1}); }
inline BetheSolution solve_mb2() { return solve(mb(2), {0, 1}); }
inline BetheSolution solve_mb3() { return solve(mb(3), {0, 1, 2}); }

inline double rel(cplx got, cplx want) {
  const double s = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / s;
}

}  // namespace qsc::test
