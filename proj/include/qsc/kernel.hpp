#pragma once

// Recursion kernel.  K(x0, s_i) is a d2 x d2 matrix of pole sums in x0,
// obtained by inverting one linear system of size N*d2; its derivative jets
// K^{(m)}(x0, s_i) follow from a two-step ladder (interior rows, then the
// last row), seeded by the gauge facts that K' vanishes on rows p < d2-1
// and K'' vanishes on the last row.

#include <Eigen/Dense>

#include "qsc/bethe.hpp"
#include "qsc/model.hpp"
#include "qsc/spectral.hpp"

namespace qsc {

using PSMat = std::vector<std::vector<PoleSum>>;  // d2 x d2

inline PSMat psmat(const AnchorsPtr& anc, int d2) {
  return PSMat(d2, std::vector<PoleSum>(d2, PoleSum(anc)));
}
inline void psmat_acc(PSMat& dst, const PSMat& src, cplx f) {
  for (size_t p = 0; p < dst.size(); ++p)
    for (size_t q = 0; q < dst[p].size(); ++q) dst[p][q] += src[p][q] * f;
}
inline double psmat_max_abs(const PSMat& M) {
  double r = 0;
  for (auto& row : M)
    for (auto& f : row) r = std::max(r, f.max_abs());
  return r;
}

struct KernelData {
  Model model;
  AnchorsPtr anchors;
  int d2 = 0, N = 0;
  double hb = 0;
  Vec s;
  Mat B;
  std::vector<Vec> u;
  Mat X;                                 // inverse of the kernel system
  std::vector<std::vector<cplx>> w;      // w[i][k] = u_{k,i} / tt_{d2}
  std::vector<PSMat> A;                  // A_i(x0)
  std::vector<std::vector<PSMat>> K;     // K[i][m] = K^{(m)}(x0, s_i)
  int depth() const { return K.empty() ? -1 : int(K[0].size()) - 1; }
};

namespace detail {

// Expansion coefficients at s_i of Y and of the U_{0,k} with the pole at s_i
// removed (regular parts), orders p >= 0.
inline cplx y_coeff(const KernelData& kd, int i, int p) {
  Poly dv = kd.model.V1p;
  for (int a = 0; a < p; ++a) dv = dv.deriv();
  double fact = 1;
  for (int a = 2; a <= p; ++a) fact *= a;
  cplx r = dv.eval(kd.s(i)) / fact;
  const double sgn = (p % 2 == 0) ? 1.0 : -1.0;
  for (int j = 0; j < kd.N; ++j)
    if (j != i) r -= kd.hb * sgn * std::pow(kd.s(i) - kd.s(j), -(p + 1));
  return r;
}

inline cplx u_coeff(const KernelData& kd, int i, int k, int p) {
  const double sgn = (p % 2 == 0) ? 1.0 : -1.0;
  cplx r = 0;
  for (int j = 0; j < kd.N; ++j)
    if (j != i) r += sgn * kd.u[k](j) * std::pow(kd.s(i) - kd.s(j), -(p + 1));
  if (p == 0) r -= kd.model.t2(k);
  if (k == 0) {
    if (p == 0) r += kd.s(i);
    if (p == 1) r += 1;
  }
  return r;
}

// Coefficient of (x - s_i)^n in G(x0, x) = Id/(x0 - x) + sum_j A_j(x0)/(x - s_j).
inline PSMat g_coeff(const KernelData& kd, int i, int n) {
  PSMat G = psmat(kd.anchors, kd.d2);
  for (int p = 0; p < kd.d2; ++p)
    G[p][p] += PoleSum::single_pole(kd.anchors, i, n + 1, cplx(1));
  const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
  for (int j = 0; j < kd.N; ++j)
    if (j != i) psmat_acc(G, kd.A[j], sgn * std::pow(kd.s(i) - kd.s(j), -(n + 1)));
  return G;
}

}  // namespace detail

// The one-row bottom blocks of the kernel system.
inline Mat kernel_block(const KernelData& kd, int k) {
  Mat Bk = Mat::Zero(kd.N, kd.N);
  const Poly V1pp = kd.model.V1p.deriv();
  for (int i = 0; i < kd.N; ++i) {
    cplx diag = -V1pp.eval(kd.s(i)) * kd.u[k](i);
    for (int j = 0; j < kd.N; ++j) {
      if (j == i) continue;
      const cplx w = kd.hb * (kd.u[k](i) + kd.u[k](j)) /
                     ((kd.s(i) - kd.s(j)) * (kd.s(i) - kd.s(j)));
      Bk(i, j) = w;
      diag -= w;
    }
    Bk(i, i) = diag;
  }
  if (k == 0) Bk.diagonal().array() += kd.hb;
  return Bk;
}

inline void kernel_grow(KernelData& kd, int M);

inline KernelData build_kernel(const Model& m, const BetheSolution& sol, int M) {
  KernelData kd;
  kd.model = m;
  kd.d2 = m.d2();
  kd.N = int(sol.s.size());
  kd.hb = m.hbar();
  kd.s = sol.s;
  kd.B = sol.B;
  kd.u = sol.u;
  kd.anchors = make_anchors(std::vector<cplx>(sol.s.data(), sol.s.data() + kd.N));
  const int d2 = kd.d2, N = kd.N;
  const cplx top = m.t2_top();

  Mat Msys = Mat::Zero(N * d2, N * d2);
  for (int p = 0; p + 1 <= d2 - 1; ++p)
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) Msys(p * N + i, p * N + j) = -sol.B(j, i);
      Msys(p * N + i, (p + 1) * N + i) += 1;
    }
  for (int k = 0; k < d2; ++k) {
    const Mat Bk = kernel_block(kd, k);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) Msys((d2 - 1) * N + i, k * N + j) = Bk(i, j);
  }
  kd.X = Msys.partialPivLu().solve(Mat::Identity(N * d2, N * d2));

  kd.w.assign(N, std::vector<cplx>(d2));
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < d2; ++k) kd.w[i][k] = kd.u[k](i) / top;

  // K^{(0)} from the system inverse
  kd.K.assign(N, {});
  for (int i = 0; i < N; ++i) {
    PSMat K0 = psmat(kd.anchors, d2);
    for (int p = 0; p < d2; ++p)
      for (int q = 0; q < d2; ++q) {
        PoleSum f(kd.anchors);
        if (q < d2 - 1) {
          for (int j = 0; j < N; ++j) {
            f.add_pole(j, 1, kd.X(p * N + i, q * N + j));
            f.add_pole(j, 2, kd.X(p * N + i, (d2 - 1) * N + j) * kd.u[q](j));
          }
        } else {
          for (int j = 0; j < N; ++j)
            f.add_pole(j, 2, kd.hb * top * kd.X(p * N + i, (d2 - 1) * N + j));
        }
        f.normalize();
        K0[p][q] = f;
      }
    kd.K[i].push_back(std::move(K0));
  }

  // A_i(x0) = ((T/N) Id + r w_i^T) K(x0, s_i)
  kd.A.assign(N, psmat(kd.anchors, d2));
  for (int i = 0; i < N; ++i)
    for (int q = 0; q < d2; ++q) {
      for (int p = 0; p < d2; ++p) kd.A[i][p][q] = kd.K[i][0][p][q] * cplx(kd.hb);
      for (int k = 0; k < d2; ++k)
        kd.A[i][d2 - 1][q] += kd.K[i][0][k][q] * kd.w[i][k];
    }

  // K': rows p < d2-1 vanish (gauge); last row in closed form.
  for (int i = 0; i < N; ++i) {
    PSMat K1 = psmat(kd.anchors, d2);
    const double c = 1.0 / (kd.hb * kd.hb);
    for (int q = 0; q < d2; ++q) {
      PoleSum f = PoleSum::single_pole(kd.anchors, i, 1, kd.u[q](i) / top);
      for (int k = 0; k < d2; ++k)
        for (int j = 0; j < N; ++j) {
          if (j == i) continue;
          const cplx fac = kd.hb * (kd.u[k](i) + kd.u[k](j)) / (top * (kd.s(i) - kd.s(j)));
          f += kd.K[j][0][k][q] * fac;
        }
      f.normalize();
      K1[d2 - 1][q] = f * cplx(c);
    }
    kd.K[i].push_back(std::move(K1));
  }

  kernel_grow(kd, std::max(M, 2));
  return kd;
}

// Extend the jet tables to K^{(M)} via the expansion ladder: for n >= 1 the
// interior rows of K^{(n+1)} come from
//   n hb K^{(n+1)}_{p,q}/(n+1)! = -G_n - sum_l Y_{(n-l)} K^{(l)}_{p,q}/l! + K^{(n)}_{p+1,q}/n!
// and for n >= 2 the last row from
//   (n-1) hb K^{(n+1)}_{d2-1,q}/(n+1)! = -G_n - sum_l Y_{(n-l)} K^{(l)}_{d2-1,q}/l!
//     + sum_{k<d2-1} w_{k,i} K^{(n+1)}_{k,q}/(n+1)! + (1/tt_{d2}) sum_k sum_l U_{k,(n-l)} K^{(l)}_{k,q}/l!
// (at n = 1 the last row vanishes identically: the second gauge fact).
inline void kernel_grow(KernelData& kd, int M) {
  const int d2 = kd.d2;
  const cplx top = kd.model.t2_top();
  while (kd.depth() < M) {
    const int n = kd.depth();  // building K^{(n+1)}
    std::vector<double> fact(n + 2, 1.0);
    for (int a = 1; a <= n + 1; ++a) fact[a] = fact[a - 1] * a;
    for (int i = 0; i < kd.N; ++i) {
      PSMat Knext = psmat(kd.anchors, d2);
      const PSMat G = detail::g_coeff(kd, i, n);
      for (int p = 0; p < d2 - 1; ++p)
        for (int q = 0; q < d2; ++q) {
          PoleSum r = G[p][q] * cplx(-1);
          for (int l = 0; l <= n; ++l)
            r -= kd.K[i][l][p][q] * (detail::y_coeff(kd, i, n - l) / fact[l]);
          r += kd.K[i][n][p + 1][q] * cplx(1.0 / fact[n]);
          r.normalize();
          Knext[p][q] = r * cplx(fact[n + 1] / (double(n) * kd.hb));
        }
      if (n >= 2) {
        for (int q = 0; q < d2; ++q) {
          PoleSum r = G[d2 - 1][q] * cplx(-1);
          for (int l = 0; l <= n; ++l)
            r -= kd.K[i][l][d2 - 1][q] * (detail::y_coeff(kd, i, n - l) / fact[l]);
          for (int k = 0; k < d2 - 1; ++k)
            r += Knext[k][q] * (kd.w[i][k] / fact[n + 1]);
          for (int k = 0; k < d2; ++k)
            for (int l = 0; l <= n; ++l)
              r += kd.K[i][l][k][q] * (detail::u_coeff(kd, i, k, n - l) / (top * fact[l]));
          r.normalize();
          Knext[d2 - 1][q] = r * cplx(fact[n + 1] / (double(n - 1) * kd.hb));
        }
      }
      kd.K[i].push_back(std::move(Knext));
    }
  }
}

// Structural gauge facts: K' interior rows vanish, K'' last row vanishes,
// the last column of K has only order-2 poles.
inline double verify_gauge(const KernelData& kd) {
  double r = 0;
  for (int i = 0; i < kd.N; ++i) {
    for (int p = 0; p < kd.d2 - 1; ++p)
      for (int q = 0; q < kd.d2; ++q) r = std::max(r, kd.K[i][1][p][q].max_abs());
    for (int q = 0; q < kd.d2; ++q) r = std::max(r, kd.K[i][2][kd.d2 - 1][q].max_abs());
    for (int p = 0; p < kd.d2; ++p) {
      const PoleSum& f = kd.K[i][0][p][kd.d2 - 1];
      if (f.poly().degree() >= 0) r = std::max(r, f.poly().max_abs());
      for (int j = 0; j < kd.N; ++j) {
        r = std::max(r, std::abs(f.pole_coeff(j, 1)));
        for (int a = 3; a <= f.max_order(j); ++a)
          r = std::max(r, std::abs(f.pole_coeff(j, a)));
      }
    }
  }
  return r;
}

// Order-0 and order-1 identities satisfied by G(x0, x) at each anchor,
// returned as the largest relative residual.
inline double verify_G(const KernelData& kd) {
  const int d2 = kd.d2;
  double worst = 0;
  for (int i = 0; i < kd.N; ++i) {
    cplx sum1 = 0, sum2 = 0;
    for (int j = 0; j < kd.N; ++j) {
      if (j == i) continue;
      sum1 += cplx(1) / (kd.s(i) - kd.s(j));
      sum2 += cplx(1) / ((kd.s(i) - kd.s(j)) * (kd.s(i) - kd.s(j)));
    }
    const cplx v1 = kd.model.V1p.eval(kd.s(i));
    const cplx v2 = kd.model.V1p.deriv().eval(kd.s(i));
    std::vector<cplx> Vi(d2), Vi1(d2);
    for (int k = 0; k < d2; ++k) {
      Vi[k] = detail::u_coeff(kd, i, k, 0) / kd.model.t2_top();
      Vi1[k] = detail::u_coeff(kd, i, k, 1) / kd.model.t2_top();
    }

    auto op_apply = [&](const PSMat& K, cplx scalar, const std::vector<cplx>& lastrow,
                        bool with_shift) {
      // (scalar Id + [shift] + r lastrow^T) K
      PSMat R = psmat(kd.anchors, d2);
      for (int p = 0; p < d2; ++p)
        for (int q = 0; q < d2; ++q) {
          R[p][q] += K[p][q] * scalar;
          if (with_shift && p + 1 < d2) R[p][q] += K[p + 1][q];
          if (p == d2 - 1)
            for (int k = 0; k < d2; ++k) R[p][q] += K[k][q] * lastrow[k];
        }
      return R;
    };

    // order 0
    PSMat lhs0 = op_apply(kd.K[i][0], -v1 + kd.hb * sum1, Vi, true);
    for (int q = 0; q < d2; ++q)
      for (int k = 0; k < d2; ++k)
        lhs0[d2 - 1][q] += kd.K[i][1][k][q] * kd.w[i][k];
    PSMat rhs0 = psmat(kd.anchors, d2);
    for (int p = 0; p < d2; ++p)
      rhs0[p][p] += PoleSum::single_pole(kd.anchors, i, 1, cplx(1));
    for (int j = 0; j < kd.N; ++j)
      if (j != i) psmat_acc(rhs0, kd.A[j], cplx(1) / (kd.s(i) - kd.s(j)));

    // order 1
    PSMat lhs1 = op_apply(kd.K[i][1], -v1 + kd.hb * sum1, Vi, true);
    {
      PSMat t = op_apply(kd.K[i][0], -v2 - kd.hb * sum2, Vi1, false);
      psmat_acc(lhs1, t, cplx(1));
      psmat_acc(lhs1, kd.K[i][2], -kd.hb / 2);
      for (int q = 0; q < d2; ++q)
        for (int k = 0; k < d2; ++k)
          lhs1[d2 - 1][q] += kd.K[i][2][k][q] * (kd.w[i][k] / 2.0);
    }
    PSMat rhs1 = psmat(kd.anchors, d2);
    for (int p = 0; p < d2; ++p)
      rhs1[p][p] += PoleSum::single_pole(kd.anchors, i, 2, cplx(1));
    for (int j = 0; j < kd.N; ++j)
      if (j != i)
        psmat_acc(rhs1, kd.A[j], cplx(-1) / ((kd.s(i) - kd.s(j)) * (kd.s(i) - kd.s(j))));

    for (auto [lhs, rhs] : {std::pair<PSMat*, PSMat*>{&lhs0, &rhs0}, {&lhs1, &rhs1}}) {
      double scale = std::max({psmat_max_abs(*lhs), psmat_max_abs(*rhs), 1.0});
      PSMat d = *lhs;
      psmat_acc(d, *rhs, cplx(-1));
      for (auto& row : d)
        for (auto& f : row) {
          f.normalize();
          worst = std::max(worst, f.max_abs() / scale);
        }
    }
  }
  return worst;
}

// Compatibility blocks C_k of the projected order-0 system.  The interior
// rows of that system carry -B^t, so the closure condition reads
// sum_k C_k (B^t)^k = 0.
inline std::vector<Mat> compat_blocks(const Model& m, const BetheSolution& sol) {
  const int N = int(sol.s.size());
  const int d2 = m.d2();
  const double hb = m.hbar();
  const cplx top = m.t2_top();
  std::vector<Mat> C(d2, Mat::Zero(N, N));
  for (int k = 0; k <= d2 - 2; ++k)
    for (int i = 0; i < N; ++i) {
      cplx diag = -m.t2(k);
      if (k == 0) diag += sol.s(i);
      for (int j = 0; j < N; ++j) {
        if (j == i) continue;
        diag += sol.u[k](j) / (sol.s(i) - sol.s(j));
        C[k](i, j) = hb * sol.u[k](i) / (top * (sol.s(i) - sol.s(j)));
      }
      C[k](i, i) = hb * diag / top;
    }
  for (int i = 0; i < N; ++i) {
    cplx d = -m.V1p.eval(sol.s(i)) - m.t2(d2 - 1) / top;
    for (int j = 0; j < N; ++j)
      if (j != i) d += 2 * hb / (sol.s(i) - sol.s(j));
    C[d2 - 1](i, i) = hb * d;
  }
  return C;
}

inline double verify_compat(const Model& m, const BetheSolution& sol) {
  const auto C = compat_blocks(m, sol);
  const int N = int(sol.s.size());
  const Mat Bt = sol.B.transpose();
  Mat acc = Mat::Zero(N, N), Bpow = Mat::Identity(N, N);
  double scale = 0;
  for (size_t k = 0; k < C.size(); ++k) {
    const Mat term = C[k] * Bpow;
    scale = std::max(scale, term.cwiseAbs().maxCoeff());
    acc += term;
    Bpow = Bpow * Bt;
  }
  return acc.cwiseAbs().maxCoeff() / std::max(scale, 1e-300);
}

}  // namespace qsc
