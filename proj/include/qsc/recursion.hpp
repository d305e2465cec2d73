#pragma once

// Topological recursion on the matrix-valued loop equations.  Each step
// (n, g) produces the vector U_{n,k}^{(g)} (k = 0..d2-1) of pole tensors in
// (x0; xi_1..xi_n) by pairing the kernel jets against a bracket jet v built
// from lower entries:
//   v = U_{n+1}^{(g-1)}(x; x, xi) - (1/hb) dx U_n^{(g-1)}(x; xi)
//       - sum_{(I,h)} W_{1+|I|}^{(g-h)}(x, I) U_{|J|}^{(h)}(x; J)
//       - sum_j (x - xi_j)^{-2} U_{n-1}^{(g)}(x; xi \ xi_j),
// the (I, h) sum excluding (empty, g) and (full, 0), and
//   U_n^{(g)}(x0; xi) = sum_i Res_{x -> s_i} K^T(x0, x) v(x),
//   W_{n+1}^{(g)} = U_{n, d2-1}^{(g)} / tt_{d2}.
//
// verify_loop substitutes a computed entry back into the full loop equation
// at numeric xi points and checks that the remainder is a polynomial in x of
// degree <= d1 - 1.

#include <algorithm>
#include <map>
#include <utility>

#include "qsc/kernel.hpp"
#include "qsc/spectral.hpp"

namespace qsc {

// d/dxi of (F(x) - F(xi))/(x - xi) at numeric xi, for a PoleSum F.
inline PoleSum dq_dxi(const PoleSum& F, cplx xi) {
  PoleSum r(F.anchors());
  const auto& s = F.anchors()->s;
  for (int i = 0; i < int(F.poles().size()); ++i) {
    const cplx w = xi - s[i];
    for (int a = 1; a <= int(F.poles()[i].size()); ++a) {
      const cplx c = F.poles()[i][a - 1];
      if (c == cplx(0)) continue;
      for (int b = 1; b <= a; ++b)
        r.add_pole(i, b, c * double(a + 1 - b) * std::pow(w, -(a + 2 - b)));
    }
  }
  if (F.poly().degree() >= 2) {
    auto t = F.poly().taylor_at(xi);
    std::vector<cplx> shifted(t.begin() + 2, t.end());
    r.poly() += Poly::from_taylor(xi, shifted);
  }
  r.normalize();
  return r;
}

inline Jet jet_permute(Jet j, const std::vector<int>& perm) {
  for (auto& t : j.c) t = t.permute(perm);
  return j;
}

struct LoopCheck {
  double pole_resid = 0;   // largest pole coefficient of the remainder
  double excess_poly = 0;  // largest polynomial coefficient beyond degree d1-1
  double scale = 1;        // largest magnitude among the assembled terms
  double rel() const { return std::max(pole_resid, excess_poly) / scale; }
};

class Engine {
public:
  Engine(const Model& m, const BetheSolution& sol, int kernel_depth = 3)
      : model_(m), sol_(sol), lead_(leading_data(m, sol)),
        kd_(build_kernel(m, sol, kernel_depth)) {}

  const Model& model() const { return model_; }
  const BetheSolution& solution() const { return sol_; }
  const LeadingData& lead() const { return lead_; }
  KernelData& kernel() { return kd_; }

  // U_{n,k}^{(g)} for (n,g) != (0,0); computed and memoized on demand.
  const PoleTensor& U(int n, int g, int k) { return entry(n, g).U.at(k); }

  // W_m^{(g)} as an arity-m pole tensor; (m, g) = (1, 0) is the resolvent.
  PoleTensor correlator(int m, int g) {
    if (m == 1 && g == 0) {
      PoleTensor W(1);
      for (int i = 0; i < kd_.N; ++i) W.add({i, 1}, model_.hbar());
      return W;
    }
    return entry(m - 1, g).W;
  }

  LoopCheck verify_loop(int n, int g, const std::vector<cplx>& xi);

private:
  struct Entry {
    std::vector<PoleTensor> U;
    PoleTensor W;
  };

  const Entry& entry(int n, int g) {
    if (n < 0 || g < 0 || (n == 0 && g == 0))
      throw std::invalid_argument("recursion entry out of range");
    const auto key = std::make_pair(n, g);
    auto it = store_.find(key);
    if (it != store_.end()) return it->second;
    compute(n, g);
    return store_.at(key);
  }

  // Subsets of {0..n-1} with their sorted complement.
  static std::vector<std::pair<std::vector<int>, std::vector<int>>> subsets(int n) {
    std::vector<std::pair<std::vector<int>, std::vector<int>>> r;
    for (int mask = 0; mask < (1 << n); ++mask) {
      std::vector<int> I, J;
      for (int v = 0; v < n; ++v) ((mask >> v) & 1 ? I : J).push_back(v);
      r.emplace_back(std::move(I), std::move(J));
    }
    return r;
  }

  // Lowest slot-0 order of T at anchor i (0 if regular there).
  static int tensor_lo(const PoleTensor& T, int i) {
    int lo = 0;
    for (auto& [k, c] : T.terms())
      if (k[0] == i) lo = std::min(lo, -k[1]);
    return lo;
  }

  // Jet in x at anchor i of the W or U factor addressed by step (ns, gs);
  // (0,0) falls back to the leading data (W1 or U0[l]).
  Jet factor_jet(int ns, int gs, bool w_factor, int l, int i, int hi) {
    if (ns == 0 && gs == 0)
      return polesum_jet(w_factor ? lead_.W1 : lead_.U0[l], i, hi);
    const Entry& e = entry(ns, gs);
    return tensor_jet(w_factor ? e.W : e.U[l], *kd_.anchors, i, hi);
  }
  int factor_lo(int ns, int gs, bool w_factor, int l, int i) {
    if (ns == 0 && gs == 0)
      return -(w_factor ? lead_.W1 : lead_.U0[l]).max_order(i);
    const Entry& e = entry(ns, gs);
    return tensor_lo(w_factor ? e.W : e.U[l], i);
  }

  void compute(int n, int g);

  PoleSum loop_factor(int ns, int gs, bool w_factor, int k,
                      const std::vector<cplx>& pts) {
    if (ns == 0 && gs == 0) return w_factor ? lead_.W1 : lead_.U0[k];
    const Entry& e = entry(ns, gs);
    const PoleTensor& T = w_factor ? e.W : e.U[k];
    return T.eval_tail(pts, kd_.anchors);
  }

  Model model_;
  BetheSolution sol_;
  LeadingData lead_;
  KernelData kd_;
  std::map<std::pair<int, int>, Entry> store_;
};

inline void Engine::compute(int n, int g) {
  const int d2 = kd_.d2;
  const double hb = model_.hbar();
  const auto& anc = *kd_.anchors;

  // bracket jets v[i][l], truncated at order -1
  std::vector<std::vector<Jet>> v(kd_.N, std::vector<Jet>(d2));
  for (int i = 0; i < kd_.N; ++i)
    for (int l = 0; l < d2; ++l) {
      Jet acc = jet_zero(n, -1);
      if (g >= 1) {
        const PoleTensor& T = entry(n + 1, g - 1).U[l];
        acc = jet_add(acc, tensor_diag_jet(T, anc, i, -1));
      }
      if (g >= 1) {
        Jet ju = (n == 0 && g == 1) ? polesum_jet(lead_.U0[l], i, 0)
                                    : tensor_jet(entry(n, g - 1).U[l], anc, i, 0);
        acc = jet_add(acc, jet_scale(jet_dx(ju), cplx(-1.0 / hb)));
      }
      for (auto& [I, J] : subsets(n)) {
        for (int h = 0; h <= g; ++h) {
          if (I.empty() && h == g) continue;
          if (int(I.size()) == n && h == 0) continue;
          const int wn = int(I.size());       // W step (wn, g-h)
          const int un = int(J.size());       // U step (un, h)
          if (!(wn == 0 && g - h == 0) && !store_.count({wn, g - h}))
            entry(wn, g - h);
          const int loW = factor_lo(wn, g - h, true, l, i);
          const int loU = factor_lo(un, h, false, l, i);
          if (loW + loU > -1) continue;
          Jet jw = factor_jet(wn, g - h, true, l, i, -1 - loU);
          Jet ju = factor_jet(un, h, false, l, i, -1 - loW);
          Jet prod = jet_mul(jw, ju, -1);
          // spectators are I then J; permute to canonical order
          std::vector<int> concat = I;
          concat.insert(concat.end(), J.begin(), J.end());
          std::vector<int> perm(n);
          for (int vv = 0; vv < n; ++vv)
            perm[vv] = int(std::find(concat.begin(), concat.end(), vv) - concat.begin());
          acc = jet_add(acc, jet_scale(jet_permute(prod, perm), cplx(-1)));
        }
      }
      if (n >= 1) {
        for (int j = 0; j < n; ++j) {
          const int loU = factor_lo(n - 1, g, false, l, i);
          Jet ja = xi_double_pole_jet(i, -1 - loU);
          Jet ju = factor_jet(n - 1, g, false, l, i, -1);
          Jet prod = jet_mul(ja, ju, -1);
          std::vector<int> concat{j};
          for (int vv = 0; vv < n; ++vv)
            if (vv != j) concat.push_back(vv);
          std::vector<int> perm(n);
          for (int vv = 0; vv < n; ++vv)
            perm[vv] = int(std::find(concat.begin(), concat.end(), vv) - concat.begin());
          acc = jet_add(acc, jet_scale(jet_permute(prod, perm), cplx(-1)));
        }
      }
      v[i][l] = std::move(acc);
    }

  int depth_needed = 0;
  for (int i = 0; i < kd_.N; ++i)
    for (int l = 0; l < d2; ++l)
      depth_needed = std::max(depth_needed, -v[i][l].lo - 1);
  if (kd_.depth() < depth_needed) kernel_grow(kd_, depth_needed);

  Entry e;
  e.U.assign(d2, PoleTensor(n + 1));
  double fact = 1;
  for (int m = 0; m <= depth_needed; ++m) {
    if (m > 0) fact *= m;
    for (int i = 0; i < kd_.N; ++i)
      for (int l = 0; l < d2; ++l) {
        const PoleTensor tau = v[i][l].at(-(m + 1));
        if (tau.empty()) continue;
        for (int k = 0; k < d2; ++k) {
          PoleSum Kf = kd_.K[i][m][l][k];
          Kf.normalize();
          if (Kf.max_abs() == 0) continue;
          e.U[k] += attach_front(Kf, tau) * cplx(1.0 / fact);
        }
      }
  }
  for (auto& t : e.U) t.normalize();
  e.W = e.U[d2 - 1] * (cplx(1) / model_.t2_top());
  e.W.normalize();
  store_[{n, g}] = std::move(e);
}

inline LoopCheck Engine::verify_loop(int n, int g, const std::vector<cplx>& xi) {
  if (int(xi.size()) != n) throw std::invalid_argument("verify_loop: xi size");
  entry(n, g);
  const int d2 = kd_.d2;
  const double hb = model_.hbar();
  LoopCheck out;
  auto pick = [&](const std::vector<int>& idx) {
    std::vector<cplx> p;
    for (int v : idx) p.push_back(xi[v]);
    return p;
  };

  for (int k = 0; k < d2; ++k) {
    PoleSum R(kd_.anchors);
    double scale = 0;
    auto acc = [&](const PoleSum& f) {
      scale = std::max(scale, f.max_abs());
      R += f;
    };

    if (k >= 1) acc(entry(n, g).U[k - 1].eval_tail(xi, kd_.anchors));
    {
      const PoleSum Uk = entry(n, g).U[k].eval_tail(xi, kd_.anchors);
      acc((lead_.Y * Uk) * cplx(-1));
      acc(Uk.deriv() * cplx(hb));
    }
    for (auto& [I, J] : subsets(n))
      for (int h = 0; h <= g; ++h) {
        if (I.empty() && h == g) continue;
        const PoleSum w = loop_factor(int(I.size()), g - h, true, k, pick(I));
        const PoleSum u = loop_factor(int(J.size()), h, false, k, pick(J));
        acc(w * u);
      }
    if (g >= 1) {
      acc(entry(n + 1, g - 1).U[k].eval_diag_tail(xi, kd_.anchors) * cplx(-1));
      const PoleSum Um = (n == 0 && g == 1)
                             ? lead_.U0[k]
                             : entry(n, g - 1).U[k].eval_tail(xi, kd_.anchors);
      acc(Um.deriv() * cplx(1.0 / hb));
    }
    for (int j = 0; j < n; ++j) {
      std::vector<int> rest;
      for (int vv = 0; vv < n; ++vv)
        if (vv != j) rest.push_back(vv);
      const PoleSum F = (n - 1 == 0 && g == 0)
                            ? lead_.U0[k]
                            : entry(n - 1, g).U[k].eval_tail(pick(rest), kd_.anchors);
      acc(dq_dxi(F, xi[j]));
    }
    if (g == 1 && k == 0 && n == 0)
      acc(PoleSum::from_poly(kd_.anchors, Poly::constant(cplx(1.0 / hb))));

    R.normalize();
    out.scale = std::max(out.scale, scale);
    out.pole_resid = std::max(out.pole_resid, R.pole_max_abs());
    for (int a = model_.d1(); a <= R.poly().degree(); ++a)
      out.excess_poly = std::max(out.excess_poly, std::abs(R.poly().coeff(a)));
  }
  return out;
}

}  // namespace qsc
