#pragma once

// Model data: the two potential derivatives V1'(x) = sum t_k x^k and
// V2'(y) = sum tt_k y^k, the temperature T, and the number of roots N.

#include <stdexcept>

#include "qsc/ratfun.hpp"

namespace qsc {

struct Model {
  Poly V1p;   // V1'
  Poly V2p;   // V2'
  double T = 1.0;
  int N = 1;

  Model() = default;
  Model(Poly v1p, Poly v2p, double temp, int n)
      : V1p(std::move(v1p)), V2p(std::move(v2p)), T(temp), N(n) {
    validate();
  }

  void validate() const {
    if (V1p.degree() < 1) throw std::invalid_argument("model: deg V1' must be >= 1");
    if (V2p.degree() < 1) throw std::invalid_argument("model: deg V2' must be >= 1");
    if (N < 1) throw std::invalid_argument("model: N must be >= 1");
    if (!(T > 0)) throw std::invalid_argument("model: T must be > 0");
  }

  int d1() const { return V1p.degree(); }
  int d2() const { return V2p.degree(); }
  cplx t1(int k) const { return V1p.coeff(k); }    // coefficient of V1'
  cplx t2(int k) const { return V2p.coeff(k); }    // coefficient of V2'
  cplx t2_top() const { return V2p.coeff(d2()); }
  Poly V1() const { return V1p.antideriv(); }
  Poly V2() const { return V2p.antideriv(); }
  double hbar() const { return T / double(N); }    // the expansion step T/N
};

}  // namespace qsc
