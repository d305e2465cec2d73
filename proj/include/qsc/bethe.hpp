#pragma once

// Bethe root solver.  The stationarity conditions close into the finite
// system (V2'(B(s)) - diag(s)) e = 0 with
//   B_ii = V1'(s_i) - (T/N) sum_{j != i} 1/(s_i - s_j),
//   B_ij = -(T/N) / (s_i - s_j),
// solved by Newton iteration, optionally inside a homotopy that ramps T from
// 0 (where the system decouples to V2'(V1'(x)) = x) up to the target.

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "qsc/errors.hpp"
#include "qsc/model.hpp"

namespace qsc {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat bethe_matrix(const Model& m, const Vec& s, double T) {
  const int N = int(s.size());
  const double h = T / double(m.N);
  Mat B = Mat::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    cplx diag = m.V1p.eval(s(i));
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      const cplx inv = cplx(1) / (s(i) - s(j));
      diag -= h * inv;
      B(i, j) = -h * inv;
    }
    B(i, i) = diag;
  }
  return B;
}

inline Mat poly_of_matrix(const Poly& p, const Mat& B) {
  const int N = int(B.rows());
  Mat R = Mat::Zero(N, N);
  for (int k = p.degree(); k >= 0; --k) {
    R = R * B;
    R.diagonal().array() += p.coeff(k);
  }
  return R;
}

inline Vec bethe_residual(const Model& m, const Vec& s, double T) {
  const Mat B = bethe_matrix(m, s, T);
  const Vec e = Vec::Ones(s.size());
  return poly_of_matrix(m.V2p, B) * e - s.cwiseProduct(e);
}

// Roots of the decoupled equation V2'(V1'(x)) - x = 0, sorted by (Re, Im).
inline std::vector<cplx> decoupled_roots(const Model& m) {
  Poly q;
  for (int k = m.d2(); k >= 0; --k) {
    q = q * m.V1p;
    q += Poly::constant(m.t2(k));
  }
  q -= Poly({cplx(0), cplx(1)});
  const int n = q.degree();
  if (n < 1) {
    if (q.max_abs() == 0.0) throw ConfigError("degenerate decoupled equation");
    throw ConfigError("decoupled equation has no roots");
  }
  Mat C = Mat::Zero(n, n);
  for (int i = 1; i < n; ++i) C(i, i - 1) = 1;
  for (int i = 0; i < n; ++i) C(i, n - 1) = -q.coeff(i) / q.coeff(n);
  Eigen::ComplexEigenSolver<Mat> es(C, false);
  std::vector<cplx> roots(es.eigenvalues().data(), es.eigenvalues().data() + n);
  std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return roots;
}

struct BetheOptions {
  bool homotopy = true;
  std::vector<int> selection;   // homotopy mode: decoupled-root indices, distinct
  std::vector<cplx> guesses;    // direct mode: initial roots
  int steps = 32;
  double tol = 1e-12;
  int max_iter = 60;
};

struct BetheSolution {
  Vec s;
  Mat B;
  std::vector<Vec> u;   // u[k], k = 0..d2
  double residual = 0;
};

namespace detail {

// Newton correction at fixed T; Jacobian by central differences column-wise.
inline std::optional<Vec> newton(const Model& m, Vec s, double T, double tol,
                                 int max_iter) {
  const int N = int(s.size());
  for (int it = 0; it < max_iter; ++it) {
    Vec F = bethe_residual(m, s, T);
    if (F.lpNorm<Eigen::Infinity>() <= tol) return s;
    double scale = 1.0;
    for (int i = 0; i < N; ++i) scale = std::max(scale, std::abs(s(i)));
    const double h = 1e-7 * scale;
    Mat J(N, N);
    for (int j = 0; j < N; ++j) {
      Vec sp = s, sm = s;
      sp(j) += h;
      sm(j) -= h;
      J.col(j) = (bethe_residual(m, sp, T) - bethe_residual(m, sm, T)) / (2 * h);
    }
    Vec ds = J.partialPivLu().solve(F);
    if (!ds.allFinite()) return std::nullopt;
    s -= ds;
  }
  Vec F = bethe_residual(m, s, T);
  if (F.lpNorm<Eigen::Infinity>() <= tol) return s;
  return std::nullopt;
}

}  // namespace detail

// u-table by descending recursion u_{k-1} = B u_k + (T/N) tt_k e, u_{d2} = 0.
inline std::vector<Vec> u_table(const Model& m, const Mat& B) {
  const int N = int(B.rows());
  const Vec e = Vec::Ones(N);
  std::vector<Vec> u(m.d2() + 1, Vec::Zero(N));
  for (int k = m.d2(); k >= 1; --k) u[k - 1] = B * u[k] + m.hbar() * m.t2(k) * e;
  return u;
}

inline BetheSolution solve_bethe(const Model& m, const BetheOptions& opt) {
  Vec s(m.N);
  if (opt.homotopy) {
    const auto roots = decoupled_roots(m);
    if (int(opt.selection.size()) != m.N)
      throw ConfigError("root_selection: need exactly N indices");
    for (size_t a = 0; a < opt.selection.size(); ++a) {
      const int r = opt.selection[a];
      if (r < 0 || r >= int(roots.size()))
        throw ConfigError("root_selection: index out of range");
      for (size_t b = 0; b < a; ++b)
        if (opt.selection[b] == r)
          throw ConfigError("root_selection: indices must be distinct");
      s(int(a)) = roots[r];
    }
    double Tcur = 0.0, step = m.T / double(std::max(opt.steps, 1));
    const double step_min = m.T * 1e-6;
    while (Tcur < m.T) {
      const double Tnext = std::min(Tcur + step, m.T);
      auto next = detail::newton(m, s, Tnext, opt.tol, opt.max_iter);
      if (next) {
        s = *next;
        Tcur = Tnext;
      } else {
        step /= 2;
        if (step < step_min)
          throw SolverError("homotopy stalled: step size underflow");
      }
    }
  } else {
    if (int(opt.guesses.size()) != m.N)
      throw ConfigError("initial_guesses: need exactly N points");
    for (int i = 0; i < m.N; ++i) s(i) = opt.guesses[i];
    auto r = detail::newton(m, s, m.T, opt.tol, opt.max_iter);
    if (!r) throw SolverError("Newton iteration did not converge");
    s = *r;
  }

  BetheSolution sol;
  sol.s = s;
  sol.B = bethe_matrix(m, s, m.T);
  sol.u = u_table(m, sol.B);
  sol.residual = bethe_residual(m, s, m.T).lpNorm<Eigen::Infinity>();
  return sol;
}

}  // namespace qsc
