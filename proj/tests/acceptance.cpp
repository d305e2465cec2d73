// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure.  Each criterion prints its per-case residuals so a failure is
// diagnosable from the report alone.

#include <cmath>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "fixtures.hpp"
#include "qsc/recursion.hpp"
#include "qsc/yangyang.hpp"

using namespace qsc;

namespace {

int failed_criteria = 0;

class Criterion {
public:
  Criterion(int id, const std::string& label) : id_(id), label_(label) {}

  void bound(const std::string& what, double value, double tol) {
    record(what, value < tol, value, tol, "<");
  }
  void exceeds(const std::string& what, double value, double tol) {
    record(what, value > tol, value, tol, ">");
  }
  void flag(const std::string& what, bool ok) {
    std::ostringstream line;
    line << "    " << what << (ok ? "" : "  [FAIL]");
    notes_.push_back(line.str());
    pass_ = pass_ && ok;
  }

  ~Criterion() {
    std::cout << "criterion " << std::setw(2) << id_ << " [" << label_
              << "]: " << (pass_ ? "PASS" : "FAIL") << "\n";
    for (auto& n : notes_) std::cout << n << "\n";
    if (!pass_) ++failed_criteria;
  }

private:
  void record(const std::string& what, bool ok, double v, double tol,
              const char* op) {
    std::ostringstream line;
    line << "    " << what << ": " << std::scientific << std::setprecision(2)
         << v << " " << op << " " << tol << (ok ? "" : "  [FAIL]");
    notes_.push_back(line.str());
    pass_ = pass_ && ok;
  }

  int id_;
  std::string label_;
  bool pass_ = true;
  std::vector<std::string> notes_;
};

struct Case {
  std::string name;
  Model model;
  BetheSolution sol;
};

std::vector<Case> base_cases() {
  return {{"ma N=1", test::ma(), test::solve_ma1()},
          {"ma N=2", test::ma(2), test::solve_ma2()},
          {"mb N=2", test::mb(2), test::solve_mb2()},
          {"mb N=3", test::mb(3), test::solve_mb3()}};
}

double relerr(cplx got, cplx want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// Re-solve after shifting one coefficient of V1', starting Newton from the
// unshifted roots, and rebuild the variational frame there.
ActionFrame frame_shift(const Model& m, const BetheSolution& base, int midx,
                        double dt) {
  std::vector<cplx> c = m.V1p.coeffs();
  c[midx] += dt;
  const Model mp(Poly(c), m.V2p, m.T, m.N);
  BetheOptions opt;
  opt.homotopy = false;
  opt.guesses.assign(base.s.data(), base.s.data() + base.s.size());
  return build_action_frame(mp, solve_bethe(mp, opt));
}

// N = 1 closed form for the genus-1 one-point function: the coefficients of
// (x-s)^{-2} and (x-s)^{-3}.
std::pair<cplx, cplx> closed_w11(const Model& m, cplx s) {
  const cplx a = m.V1p.deriv().eval(s);
  const cplx b = m.V1p.deriv().deriv().eval(s);
  const cplx sh = m.V1p.eval(s);
  const cplx c = m.V2p.deriv().eval(sh);
  const cplx d = m.V2p.deriv().deriv().eval(sh);
  const cplx det = a * c - cplx(1);
  return {(a * d + b * c * c) / (2.0 * det * det), -c / det};
}

void criterion_1() {
  Criterion cr(1, "bethe convergence");
  for (auto& c : base_cases()) cr.bound(c.name, c.sol.residual, 1e-10);
}

void criterion_2() {
  Criterion cr(2, "quantum-curve annihilation");
  for (auto& c : base_cases()) {
    const LeadingData L = leading_data(c.model, c.sol);
    cr.bound(c.name, quantum_curve_residual(c.model, L), 1e-8);
  }
  // hand curve for ma N=1: E = x y^2 - y^3 + x y - y - x^2 + 1
  const Model m = test::ma();
  const LeadingData L = leading_data(m, test::solve_ma1());
  const std::vector<Poly> hand = {Poly({cplx(1), cplx(0), cplx(-1)}),
                                  Poly({cplx(-1), cplx(1)}),
                                  Poly({cplx(0), cplx(1)}), Poly({cplx(-1)})};
  double coeff_diff = 0;
  for (int j = 0; j < 4; ++j) {
    Poly d = L.E[j];
    d -= hand[j];
    coeff_diff = std::max(coeff_diff, d.max_abs());
  }
  cr.bound("ma N=1 hand curve coefficients", coeff_diff, 1e-13);
  cr.bound("ma N=1 exact zero", quantum_curve_residual(m, L), 1e-14);
}

void criterion_3() {
  Criterion cr(3, "companion identity");
  std::mt19937_64 rng(20240817);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (auto& c : base_cases()) {
    const LeadingData L = leading_data(c.model, c.sol);
    double worst = 0;
    for (int t = 0; t < 20; ++t) {
      const cplx x(U(rng), U(rng)), y(U(rng), U(rng));
      const cplx rhs = curve_eval(L, x, y);
      worst = std::max(worst, std::abs(companion_det(c.model, L, x, y) - rhs) /
                                  std::max(1.0, std::abs(rhs)));
    }
    cr.bound(c.name + " (20 samples)", worst, 1e-9);
  }
}

void criterion_4() {
  Criterion cr(4, "compatibility closure");
  for (auto& c : base_cases()) cr.bound(c.name, verify_compat(c.model, c.sol), 1e-9);
  Case c = base_cases()[1];
  for (int i = 0; i < 2; ++i) c.sol.s(i) += 1e-2 * (i ? -0.7 : 1.0);
  c.sol.B = bethe_matrix(c.model, c.sol.s, c.model.T);
  c.sol.u = u_table(c.model, c.sol.B);
  cr.exceeds("ma N=2 perturbed roots (negative control)",
             verify_compat(c.model, c.sol), 1e-6);
}

void criterion_5() {
  Criterion cr(5, "N=1 closed forms");
  {
    const Model m = test::ma();
    Engine eng(m, test::solve_ma1());
    const PoleSum W = eng.correlator(1, 1).to_polesum(eng.lead().anchors);
    double worst = 0;
    for (int j = 0; j < 10; ++j) {
      const cplx x = cplx(1) + cplx(1.5 + 0.3 * j, 0.4);
      const cplx d = x - cplx(1);
      worst = std::max(worst, relerr(W.eval(x), 1.0 / (d * d) - 2.0 / (d * d * d)));
    }
    cr.bound("ma hand W_1^(1) on grid", worst, 1e-8);
    const ActionFrame fr = build_action_frame(m, test::solve_ma1());
    cr.bound("ma hand reduced f1", std::abs(fr.f1_reduced), 1e-10);
  }
  for (auto& [name, m, sel] :
       {std::tuple{std::string("mb N=1"), test::mb(1), 2},
        std::tuple{std::string("mc N=1"), test::mc(),
                   int(decoupled_roots(test::mc()).size()) - 1}}) {
    const BetheSolution sol = test::solve(m, {sel});
    Engine eng(m, sol);
    const cplx s = sol.s(0);
    const auto [c2, c3] = closed_w11(m, s);
    const PoleSum W = eng.correlator(1, 1).to_polesum(eng.lead().anchors);
    double worst = 0;
    for (int j = 0; j < 10; ++j) {
      const cplx x = s + cplx(1.5 + 0.3 * j, 0.4);
      const cplx d = x - s;
      worst = std::max(worst, relerr(W.eval(x), c2 / (d * d) + c3 / (d * d * d)));
    }
    cr.bound(name + " closed-form W_1^(1) on grid", worst, 1e-8);

    const cplx det = m.V1p.deriv().eval(s) * m.V2p.deriv().eval(m.V1p.eval(s)) - cplx(1);
    const ActionFrame fr = build_action_frame(m, sol);
    cr.bound(name + " reduced f1 vs -log(det)/2",
             std::abs(fr.f1_reduced + 0.5 * std::log(det)), 1e-10);
  }
}

void criterion_6() {
  Criterion cr(6, "f0 coupling derivatives");
  const double h = 1e-5;
  for (auto& c : {base_cases()[0], base_cases()[1], base_cases()[3]}) {
    for (int midx = 0; midx <= c.model.d1(); ++midx) {
      cplx diff = frame_shift(c.model, c.sol, midx, h).f0 -
                  frame_shift(c.model, c.sol, midx, -h).f0;
      // f0 carries log terms and is defined modulo 2 pi i hb^2; keep the
      // difference on the continuous branch
      const double quantum = 2 * M_PI * c.model.hbar() * c.model.hbar();
      diff -= cplx(0, quantum * std::round(diff.imag() / quantum));
      const cplx fd = diff / (2 * h);
      cplx want = 0;
      for (int i = 0; i < c.model.N; ++i)
        want += std::pow(c.sol.s(i), midx + 1);
      want *= -c.model.T / (double(c.model.N) * (midx + 1));
      std::ostringstream what;
      what << c.name << " d f0 / d t_" << midx;
      cr.bound(what.str(), relerr(fd, want), 1e-6);
    }
  }
}

void criterion_7() {
  {
    Criterion cr(7, "genus-1 determinant conjecture");
    const double h = 1e-5;
    struct Sub {
      std::string name;
      Model model;
      BetheSolution sol;
      int midx;
    };
    const std::vector<Sub> subs = {{"ma N=1 m=0", test::ma(), test::solve_ma1(), 0},
                                   {"ma N=1 m=1", test::ma(), test::solve_ma1(), 1},
                                   {"ma N=2 m=0", test::ma(2), test::solve_ma2(), 0},
                                   {"ma N=2 m=1", test::ma(2), test::solve_ma2(), 1},
                                   {"mb N=3 m=0", test::mb(3), test::solve_mb3(), 0},
                                   {"mb N=3 m=1", test::mb(3), test::solve_mb3(), 1}};
    for (auto& sub : subs) {
      auto det_at = [&](double dt) {
        return frame_shift(sub.model, sub.sol, sub.midx, dt).H.partialPivLu().determinant();
      };
      const cplx ratio = det_at(h) / det_at(-h);
      const cplx fd = -0.5 *
                      (cplx(std::log(std::abs(ratio))) + cplx(0, std::arg(ratio))) /
                      (2 * h);
      Engine eng(sub.model, sub.sol);
      const auto mu = eng.correlator(1, 1).to_polesum(eng.lead().anchors)
                          .large_x_moments(sub.midx + 1);
      const cplx mom = mu[sub.midx + 1] / double(sub.midx + 1);
      cr.bound(sub.name, std::abs(fd - mom) / std::max(1.0, std::abs(mom)), 1e-4);
    }
  }
  std::cout << "    note: the determinant identity is exact for N=1 but fails by O(1)\n"
               "    for generic N>=2 couplings: the determinant approximation drops\n"
               "    subleading saddle corrections that only vanish at N=1.  Symmetric\n"
               "    models can still satisfy it in symmetry-protected coupling\n"
               "    directions.  See README, \"Genus-1 free energy\".\n";
}

void criterion_8() {
  Criterion cr(8, "two-route pair correlator");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-2.5, 2.5);
  for (auto& c : {base_cases()[0], base_cases()[1], base_cases()[2]}) {
    Engine eng(c.model, c.sol);
    const ActionFrame fr = build_action_frame(c.model, c.sol);
    const PoleTensor a = eng.correlator(2, 0);
    const PoleTensor b = two_point_tensor(c.model, fr);
    const auto& anc = *eng.lead().anchors;
    auto sample = [&]() {
      while (true) {
        const cplx z(U(rng), U(rng));
        bool ok = true;
        for (int i = 0; i < c.sol.s.size(); ++i)
          if (std::abs(z - c.sol.s(i)) < 0.3) ok = false;
        if (ok) return z;
      }
    };
    std::vector<cplx> xs, ys;
    for (int i = 0; i < 5; ++i) xs.push_back(sample()), ys.push_back(sample());
    double worst = 0, scale = 1.0;
    for (auto& x : xs)
      for (auto& y : ys) {
        const cplx va = a.eval({x, y}, anc), vb = b.eval({x, y}, anc);
        worst = std::max(worst, std::abs(va - vb));
        scale = std::max({scale, std::abs(va), std::abs(vb)});
      }
    cr.bound(c.name + " (5x5 grid)", worst / scale, 1e-6);
  }
}

void criterion_9() {
  Criterion cr(9, "correlator symmetry");
  for (auto& c : {base_cases()[1], base_cases()[2]}) {
    Engine eng(c.model, c.sol);
    const PoleTensor W20 = eng.correlator(2, 0);
    const PoleTensor W21 = eng.correlator(2, 1);
    const PoleTensor W30 = eng.correlator(3, 0);
    double worst = 0;
    worst = std::max(worst, max_diff(W20, W20.permute({1, 0})) /
                                std::max(1.0, W20.max_abs()));
    worst = std::max(worst, max_diff(W21, W21.permute({1, 0})) /
                                std::max(1.0, W21.max_abs()));
    for (auto& p : std::vector<std::vector<int>>{
             {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}})
      worst = std::max(worst, max_diff(W30, W30.permute(p)) /
                                  std::max(1.0, W30.max_abs()));
    cr.bound(c.name + " all permutations", worst, 1e-7);
  }
}

void criterion_10() {
  Criterion cr(10, "loop-equation residuals");
  const std::vector<cplx> p1{cplx(2.6, 0.35)};
  const std::vector<cplx> p2{cplx(2.6, 0.35), cplx(-3.2, 0.6)};
  for (auto& c : {base_cases()[0], base_cases()[1], base_cases()[2]}) {
    Engine eng(c.model, c.sol);
    cr.bound(c.name + " (1,0)", eng.verify_loop(1, 0, p1).rel(), 1e-9);
    cr.bound(c.name + " (2,0)", eng.verify_loop(2, 0, p2).rel(), 1e-9);
    cr.bound(c.name + " (0,1)", eng.verify_loop(0, 1, {}).rel(), 1e-9);
    cr.bound(c.name + " (1,1)", eng.verify_loop(1, 1, p1).rel(), 1e-7);
  }
}

void criterion_11() {
  Criterion cr(11, "variational hessian");
  for (auto& c : {base_cases()[0], base_cases()[1], base_cases()[3]}) {
    const StatePoint pt = critical_point(c.sol);
    const Mat Ha = action_hess(c.model, pt);
    const Mat Hf = action_hess_fd(c.model, pt);
    const double sc = std::max(1.0, Ha.cwiseAbs().maxCoeff());
    cr.bound(c.name + " analytic vs FD", (Ha - Hf).cwiseAbs().maxCoeff() / sc, 1e-5);
  }
  Mat hand(4, 4);
  hand << cplx(1), cplx(-1), cplx(0), cplx(0),
      cplx(-1), cplx(2), cplx(0), cplx(0),
      cplx(0), cplx(0), cplx(-1), cplx(-1),
      cplx(0), cplx(0), cplx(-1), cplx(0);
  const Mat Ha = action_hess(test::ma(), critical_point(test::solve_ma1()));
  cr.bound("ma N=1 hand 4x4", (Ha - hand).cwiseAbs().maxCoeff(), 1e-12);
}

void criterion_12() {
  Criterion cr(12, "kernel gauge and structure");
  for (auto& c : {base_cases()[0], base_cases()[1], base_cases()[2]}) {
    const KernelData kd = build_kernel(c.model, c.sol, 3);
    cr.bound(c.name + " gauge", verify_gauge(kd), 1e-8);
    cr.bound(c.name + " Laurent identities", verify_G(kd), 1e-8);
  }
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  criterion_12();
  std::cout << (12 - failed_criteria) << "/12 criteria passed\n";
  return failed_criteria > 0 ? 1 : 0;
}
