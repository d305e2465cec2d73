#pragma once

// Leading spectral data attached to a converged Bethe solution: the
// resolvent W1, the auxiliary functions U_{0,k}, the classical curve
// E(x,y) with its P00 polynomial, the quantum curve residual, and the
// companion-matrix form of E.

#include <Eigen/Dense>

#include "qsc/bethe.hpp"
#include "qsc/model.hpp"

namespace qsc {

struct LeadingData {
  AnchorsPtr anchors;
  PoleSum W1;                // (T/N) sum_i 1/(x - s_i)
  PoleSum Y;                 // V1'(x) - W1(x)
  std::vector<PoleSum> U0;   // U_{0,k}, k = 0..d2
  std::vector<Poly> P00;     // y-coefficients of P0(x,y), degree d2-1 in y
  std::vector<Poly> E;       // y-coefficients of E(x,y), degree d2+1 in y
};

inline LeadingData leading_data(const Model& m, const BetheSolution& sol) {
  const int N = int(sol.s.size());
  const int d2 = m.d2();
  const double h = m.hbar();

  LeadingData L;
  L.anchors = make_anchors(std::vector<cplx>(sol.s.data(), sol.s.data() + N));

  L.W1 = PoleSum(L.anchors);
  for (int i = 0; i < N; ++i) L.W1.add_pole(i, 1, h);

  L.Y = PoleSum::from_poly(L.anchors, m.V1p) - L.W1;

  L.U0.assign(d2 + 1, PoleSum(L.anchors));
  for (int k = 0; k <= d2 - 2; ++k) {
    PoleSum f(L.anchors);
    for (int i = 0; i < N; ++i) f.add_pole(i, 1, sol.u[k](i));
    Poly p = Poly::constant(-m.t2(k));
    if (k == 0) p += Poly({cplx(0), cplx(1)});
    f += PoleSum::from_poly(L.anchors, p);
    L.U0[k] = f;
  }
  if (d2 >= 1)
    L.U0[d2 - 1] = L.W1 * m.t2_top() + PoleSum::from_poly(L.anchors, Poly::constant(-m.t2(d2 - 1)));
  L.U0[d2] = PoleSum::from_poly(L.anchors, Poly::constant(-m.t2_top()));

  // P0(x,y) = (T/N) e^T [ (V1'(x)-V1'(S))/(x-S) ] [ (V2'(y)-V2'(B))/(y-B) ] e
  L.P00.assign(std::max(d2, 1), Poly());
  const Vec e = Vec::Ones(N);
  for (int b = 0; b <= d2 - 1; ++b) {
    Mat Mb = Mat::Zero(N, N);
    Mat Bpow = Mat::Identity(N, N);
    // Mb = sum_{k >= b+1} tt_k B^{k-1-b}
    for (int k = b + 1; k <= d2; ++k) {
      Mb += m.t2(k) * Bpow;
      Bpow = Bpow * sol.B;
    }
    const Vec w = Mb * e;
    Poly acc;
    for (int i = 0; i < N; ++i) {
      // d_i(x) = (V1'(x) - V1'(s_i)) / (x - s_i)
      std::vector<cplx> di(std::max(m.d1(), 1), cplx(0));
      for (int k = 1; k <= m.d1(); ++k) {
        cplx spow = 1;
        for (int a = k - 1; a >= 0; --a) {
          di[a] += m.t1(k) * spow;
          spow *= sol.s(i);
        }
      }
      acc += Poly(di) * (h * w(i));
    }
    L.P00[b] = acc;
  }

  // E(x,y) = (V1'(x) - y)(V2'(y) - x) - P0(x,y) + T + T/N
  L.E.assign(d2 + 2, Poly());
  const Poly x_poly({cplx(0), cplx(1)});
  for (int j = 0; j <= d2 + 1; ++j) {
    Poly c;
    if (j <= d2) c += m.V1p * m.t2(j);
    if (j == 0) c -= x_poly * m.V1p;
    if (j >= 1 && j - 1 <= d2) c -= Poly::constant(m.t2(j - 1));
    if (j == 1) c += x_poly;
    if (j <= d2 - 1) c -= L.P00[j];
    if (j == 0) c += Poly::constant(m.T + h);
    L.E[j] = c;
  }
  return L;
}

inline cplx curve_eval(const LeadingData& L, cplx x, cplx y) {
  cplx r = 0;
  for (int j = int(L.E.size()) - 1; j >= 0; --j) r = r * y + L.E[j].eval(x);
  return r;
}

// Residual of the quantum curve sum_k (V1' - hb d/dx)^k [E_k psi] applied to
// psi = prod_i (x - s_i); powers act innermost-first.  Returns the maximal
// coefficient of the sum relative to the maximal coefficient of any summand.
inline double quantum_curve_residual(const Model& m, const LeadingData& L) {
  const auto& s = L.anchors->s;
  Poly psi = Poly::constant(1);
  for (auto& si : s) psi = psi * Poly({-si, cplx(1)});

  Poly total;
  double norm = 0;
  for (int k = 0; k < int(L.E.size()); ++k) {
    Poly p = L.E[k] * psi;
    for (int a = 0; a < k; ++a) p = m.V1p * p - p.deriv() * m.hbar();
    norm = std::max(norm, p.max_abs());
    total += p;
  }
  return (norm > 0) ? total.max_abs() / norm : 0.0;
}

// -tt_{d2} det( (y - V1'(x)) Id + C(x) ) with the companion matrix C(x):
// row 0: [tt_{d2-1}/tt_{d2}, -1, 0, ...]; rows r = 1..d2:
// C[r][0] = -E_{d2-r}/tt_{d2}, C[r][r] = V1'(x), C[r][r+1] = -1 (r < d2).
inline cplx companion_det(const Model& m, const LeadingData& L, cplx x, cplx y) {
  const int d2 = m.d2();
  const int n = d2 + 1;
  const cplx top = m.t2_top();
  const cplx v1 = m.V1p.eval(x);
  Mat M = Mat::Zero(n, n);
  M.diagonal().array() += y - v1;
  M(0, 0) += m.t2(d2 - 1) / top;
  if (n > 1) M(0, 1) += -1;
  for (int r = 1; r <= d2; ++r) {
    M(r, 0) += -L.E[d2 - r].eval(x) / top;
    M(r, r) += v1;
    if (r < d2) M(r, r + 1) += -1;
  }
  return -top * M.determinant();
}

}  // namespace qsc
