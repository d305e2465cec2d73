#pragma once

// The bracket functional and everything derived from its critical point:
//   S(R) = tr V1(S) + tr V2(St) - tr(S A St A^-1)
//          - hb ln Delta(S) - hb ln Delta(St) + hb ln det A - hb u^T (A e - e),
// with R = (s, st, A, u) of dimension 3N + N^2 and hb = T/N.  At the critical
// point u = e, A e = e, A St A^-1 = B, and st are the eigenvalues of B.
//
// Provides the analytic gradient and Hessian at a general point, free
// energies f0 = -hb S and f1 = -1/2 ln det Hess, third derivatives by
// differencing the analytic Hessian, and the 2- and 3-point pole tensors.

#include <Eigen/Dense>

#include "qsc/bethe.hpp"
#include "qsc/model.hpp"
#include "qsc/spectral.hpp"

namespace qsc {

struct StatePoint {
  Vec s, st, u;
  Mat A;
  int N() const { return int(s.size()); }
  int dim() const { return 3 * N() + N() * N(); }

  // Flat layout: s | st | A (row-major) | u.
  cplx get(int idx) const {
    const int n = N();
    if (idx < n) return s(idx);
    if (idx < 2 * n) return st(idx - n);
    if (idx < 2 * n + n * n) return A((idx - 2 * n) / n, (idx - 2 * n) % n);
    return u(idx - 2 * n - n * n);
  }
  void set(int idx, cplx v) {
    const int n = N();
    if (idx < n) s(idx) = v;
    else if (idx < 2 * n) st(idx - n) = v;
    else if (idx < 2 * n + n * n) A((idx - 2 * n) / n, (idx - 2 * n) % n) = v;
    else u(idx - 2 * n - n * n) = v;
  }
  double scale() const {
    double m = 1.0;
    for (int i = 0; i < dim(); ++i) m = std::max(m, std::abs(get(i)));
    return m;
  }
};

// Eigenframe of B^t: st = eigenvalues sorted by (Re, Im), A = V diag(c) with
// V c = e, so that A St A^-1 = B^t and A e = e.  The stationarity condition
// [S, A St A^-1] = hb (A e u^t - Id) fixes the off-diagonal entries of
// A St A^-1 to +hb/(s_i - s_j), which is the transpose of the Bethe matrix.
inline StatePoint critical_point(const BetheSolution& sol) {
  const int N = int(sol.s.size());
  Eigen::ComplexEigenSolver<Mat> es(Mat(sol.B.transpose()), true);
  std::vector<int> ord(N);
  for (int i = 0; i < N; ++i) ord[i] = i;
  const Vec ev = es.eigenvalues();
  std::sort(ord.begin(), ord.end(), [&](int a, int b) {
    if (ev(a).real() != ev(b).real()) return ev(a).real() < ev(b).real();
    return ev(a).imag() < ev(b).imag();
  });
  Mat V(N, N);
  Vec st(N);
  for (int j = 0; j < N; ++j) {
    st(j) = ev(ord[j]);
    V.col(j) = es.eigenvectors().col(ord[j]);
  }
  const Vec c = V.partialPivLu().solve(Vec::Ones(N));
  StatePoint pt;
  pt.s = sol.s;
  pt.st = st;
  pt.A = V * c.asDiagonal();
  pt.u = Vec::Ones(N);
  return pt;
}

inline cplx vandermonde_log(const Vec& v) {
  cplx r = 0;
  for (int i = 0; i < int(v.size()); ++i)
    for (int j = i + 1; j < int(v.size()); ++j) r += std::log(v(i) - v(j));
  return r;
}

inline cplx logdet_lu(const Mat& M) {
  Eigen::PartialPivLU<Mat> lu(M);
  cplx r = std::log(cplx(double(lu.permutationP().determinant())));
  for (int i = 0; i < M.rows(); ++i) r += std::log(lu.matrixLU()(i, i));
  return r;
}

inline cplx action(const Model& m, const StatePoint& pt) {
  const int N = pt.N();
  const double hb = m.hbar();
  const Poly V1 = m.V1(), V2 = m.V2();
  cplx r = 0;
  for (int i = 0; i < N; ++i) r += V1.eval(pt.s(i)) + V2.eval(pt.st(i));
  const Mat Ainv = pt.A.inverse();
  r -= (pt.s.asDiagonal() * pt.A * pt.st.asDiagonal() * Ainv).trace();
  r -= hb * (vandermonde_log(pt.s) + vandermonde_log(pt.st));
  r += hb * logdet_lu(pt.A);
  const Vec resid = pt.A * Vec::Ones(N) - Vec::Ones(N);
  r -= hb * (pt.u.transpose() * resid)(0);
  return r;
}

inline Vec action_grad(const Model& m, const StatePoint& pt) {
  const int N = pt.N();
  const double hb = m.hbar();
  const Mat F = pt.A.inverse();
  const Mat M = pt.A * pt.st.asDiagonal() * F;
  const Mat Mt = F * pt.s.asDiagonal() * pt.A;
  const Mat StFS = pt.st.asDiagonal() * F * pt.s.asDiagonal();
  const Mat MtStF = Mt * pt.st.asDiagonal() * F;
  const Vec Ae = pt.A * Vec::Ones(N);

  Vec g = Vec::Zero(pt.dim());
  for (int i = 0; i < N; ++i) {
    cplx v = m.V1p.eval(pt.s(i)) - M(i, i);
    for (int j = 0; j < N; ++j)
      if (j != i) v -= hb / (pt.s(i) - pt.s(j));
    g(i) = v;
  }
  for (int a = 0; a < N; ++a) {
    cplx v = m.V2p.eval(pt.st(a)) - Mt(a, a);
    for (int b = 0; b < N; ++b)
      if (b != a) v -= hb / (pt.st(a) - pt.st(b));
    g(N + a) = v;
  }
  for (int r = 0; r < N; ++r)
    for (int s = 0; s < N; ++s)
      g(2 * N + r * N + s) =
          -StFS(s, r) + MtStF(s, r) + hb * F(s, r) - hb * pt.u(r);
  for (int i = 0; i < N; ++i) g(2 * N + N * N + i) = -hb * (Ae(i) - 1.0);
  return g;
}

inline Mat action_hess(const Model& m, const StatePoint& pt) {
  const int N = pt.N();
  const double hb = m.hbar();
  const int D = pt.dim();
  const Poly V1pp = m.V1p.deriv(), V2pp = m.V2p.deriv();
  const Mat F = pt.A.inverse();
  const Mat M = pt.A * pt.st.asDiagonal() * F;
  const Mat Mt = F * pt.s.asDiagonal() * pt.A;
  const Mat StF = pt.st.asDiagonal() * F;
  const Mat FS = F * pt.s.asDiagonal();
  const Mat MtStF = Mt * StF;

  Mat H = Mat::Zero(D, D);
  auto iA = [N](int r, int s) { return 2 * N + r * N + s; };
  const int iu0 = 2 * N + N * N;

  for (int i = 0; i < N; ++i) {
    cplx d = V1pp.eval(pt.s(i));
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      const cplx w = hb / ((pt.s(i) - pt.s(j)) * (pt.s(i) - pt.s(j)));
      d += w;
      H(i, j) = -w;
    }
    H(i, i) = d;
  }
  for (int a = 0; a < N; ++a) {
    cplx d = V2pp.eval(pt.st(a));
    for (int b = 0; b < N; ++b) {
      if (b == a) continue;
      const cplx w = hb / ((pt.st(a) - pt.st(b)) * (pt.st(a) - pt.st(b)));
      d += w;
      H(N + a, N + b) = -w;
    }
    H(N + a, N + a) = d;
  }
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < N; ++a) {
      const cplx v = -pt.A(i, a) * F(a, i);
      H(i, N + a) = v;
      H(N + a, i) = v;
    }
  for (int i = 0; i < N; ++i)
    for (int r = 0; r < N; ++r)
      for (int s = 0; s < N; ++s) {
        const cplx v = -(r == i ? StF(s, i) : cplx(0)) + M(i, r) * F(s, i);
        H(i, iA(r, s)) = v;
        H(iA(r, s), i) = v;
      }
  for (int a = 0; a < N; ++a)
    for (int r = 0; r < N; ++r)
      for (int s = 0; s < N; ++s) {
        const cplx v = F(a, r) * Mt(s, a) - (a == s ? FS(a, r) : cplx(0));
        H(N + a, iA(r, s)) = v;
        H(iA(r, s), N + a) = v;
      }
  for (int i = 0; i < N; ++i)
    for (int s = 0; s < N; ++s) {
      H(iu0 + i, iA(i, s)) = -hb;
      H(iA(i, s), iu0 + i) = -hb;
    }
  for (int r = 0; r < N; ++r)
    for (int s = 0; s < N; ++s)
      for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) {
          const cplx v = StF(s, a) * FS(b, r) + FS(s, a) * StF(b, r)
                       - F(s, a) * MtStF(b, r) - MtStF(s, a) * F(b, r)
                       - hb * F(s, a) * F(b, r);
          H(iA(r, s), iA(a, b)) = v;
        }
  return H;
}

inline Mat action_hess_fd(const Model& m, const StatePoint& pt) {
  const int D = pt.dim();
  const double h = 1e-5 * pt.scale();
  Mat H(D, D);
  for (int j = 0; j < D; ++j) {
    StatePoint pp = pt, pm = pt;
    pp.set(j, pt.get(j) + h);
    pm.set(j, pt.get(j) - h);
    H.col(j) = (action_grad(m, pp) - action_grad(m, pm)) / (2 * h);
  }
  return H;
}

// Symmetrized third derivatives of the action by central differences of the
// analytic Hessian.  d3[g] holds d H / d x_g.
inline std::vector<Mat> action_third_fd(const Model& m, const StatePoint& pt) {
  const int D = pt.dim();
  const double h = 1e-4 * pt.scale();
  std::vector<Mat> dH(D);
  for (int g = 0; g < D; ++g) {
    StatePoint pp = pt, pm = pt;
    pp.set(g, pt.get(g) + h);
    pm.set(g, pt.get(g) - h);
    dH[g] = (action_hess(m, pp) - action_hess(m, pm)) / (2 * h);
  }
  std::vector<Mat> d3(D, Mat::Zero(D, D));
  for (int g = 0; g < D; ++g)
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b)
        d3[g](a, b) = (dH[g](a, b) + dH[a](b, g) + dH[b](a, g)) / 3.0;
  return d3;
}

struct ActionFrame {
  StatePoint pt;
  Mat H, Hinv;
  cplx f0 = 0, f1_full = 0, f1_reduced = 0;
  double grad_norm = 0;
};

inline ActionFrame build_action_frame(const Model& m, const BetheSolution& sol) {
  ActionFrame fr;
  fr.pt = critical_point(sol);
  fr.grad_norm = action_grad(m, fr.pt).lpNorm<Eigen::Infinity>();
  fr.H = action_hess(m, fr.pt);
  fr.Hinv = fr.H.partialPivLu().solve(Mat::Identity(fr.pt.dim(), fr.pt.dim()));
  fr.f0 = -m.hbar() * action(m, fr.pt);
  fr.f1_full = -0.5 * logdet_lu(fr.H);
  const int N = fr.pt.N();
  const int D = fr.pt.dim();
  const Mat H11 = fr.H.topLeftCorner(2 * N, 2 * N);
  const Mat H12 = fr.H.topRightCorner(2 * N, D - 2 * N);
  const Mat H21 = fr.H.bottomLeftCorner(D - 2 * N, 2 * N);
  const Mat H22 = fr.H.bottomRightCorner(D - 2 * N, D - 2 * N);
  const Mat red = H11 - H12 * H22.partialPivLu().solve(H21);
  fr.f1_reduced = -0.5 * logdet_lu(red);
  return fr;
}

// W2(x, x') = hb sum_{ij} (Hinv)_{ij} / ((x-s_i)^2 (x'-s_j)^2), s-block rows.
inline PoleTensor two_point_tensor(const Model& m, const ActionFrame& fr) {
  const int N = fr.pt.N();
  PoleTensor W(2);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      W.add({i, 2, j, 2}, m.hbar() * fr.Hinv(i, j));
  W.normalize();
  return W;
}

// W3 with the cubed-pole terms and the contracted third-derivative term.
inline PoleTensor three_point_tensor(const Model& m, const ActionFrame& fr) {
  const int N = fr.pt.N();
  const int D = fr.pt.dim();
  const double hb = m.hbar();
  const auto d3 = action_third_fd(m, fr.pt);

  // C_{ijk} = Hinv_{i.} Hinv_{j.} Hinv_{k.} contracted against d3
  const Mat Hs = fr.Hinv.topRows(N);
  std::vector<Mat> T1(D);
  for (int g = 0; g < D; ++g) T1[g] = Hs * d3[g] * Hs.transpose();

  PoleTensor W(3);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k) {
        W.add({i, 3, j, 2, k, 2}, 2 * hb * fr.Hinv(i, j) * fr.Hinv(i, k));
        W.add({i, 2, j, 3, k, 2}, 2 * hb * fr.Hinv(j, i) * fr.Hinv(j, k));
        W.add({i, 2, j, 2, k, 3}, 2 * hb * fr.Hinv(k, i) * fr.Hinv(k, j));
        cplx C = 0;
        for (int g = 0; g < D; ++g) C += Hs(k, g) * T1[g](i, j);
        W.add({i, 2, j, 2, k, 2}, -hb * C);
      }
  W.normalize();
  return W;
}

}  // namespace qsc
