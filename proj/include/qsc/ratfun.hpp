#pragma once

// Rational-function toolkit: polynomials, sums of poles over a fixed anchor
// set, multi-variable pole tensors, and truncated Laurent jets.  Everything
// downstream (spectral data, kernels, loop recursion) is built on these.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsc {

using cplx = std::complex<double>;

inline constexpr double kPruneRel = 1e-14;   // relative coefficient pruning
inline constexpr double kAnchorSep = 1e-8;   // minimal anchor separation, relative

inline double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r *= double(n - k + j) / double(j);
  return r;
}

// ---------------------------------------------------------------------------
// Poly: dense polynomial, coefficients lowest-first.

class Poly {
public:
  Poly() = default;
  explicit Poly(std::vector<cplx> coeffs) : c_(std::move(coeffs)) { trim(); }
  static Poly constant(cplx a) { return Poly({a}); }

  int degree() const { return int(c_.size()) - 1; }
  const std::vector<cplx>& coeffs() const { return c_; }
  cplx coeff(int k) const { return (k >= 0 && k < int(c_.size())) ? c_[k] : cplx(0); }

  cplx eval(cplx x) const {
    cplx r = 0;
    for (int k = int(c_.size()) - 1; k >= 0; --k) r = r * x + c_[k];
    return r;
  }

  Poly deriv() const {
    if (c_.size() <= 1) return {};
    std::vector<cplx> d(c_.size() - 1);
    for (size_t k = 1; k < c_.size(); ++k) d[k - 1] = double(k) * c_[k];
    return Poly(std::move(d));
  }

  // Antiderivative with zero constant term.
  Poly antideriv() const {
    if (c_.empty()) return {};
    std::vector<cplx> a(c_.size() + 1, cplx(0));
    for (size_t k = 0; k < c_.size(); ++k) a[k + 1] = c_[k] / double(k + 1);
    return Poly(std::move(a));
  }

  // Taylor coefficients about s (synthetic shift).
  std::vector<cplx> taylor_at(cplx s) const {
    std::vector<cplx> t = c_;
    const int n = int(t.size());
    for (int m = 0; m < n; ++m)
      for (int j = n - 2; j >= m; --j) t[j] += s * t[j + 1];
    return t;
  }

  static Poly from_taylor(cplx s, const std::vector<cplx>& t) {
    std::vector<cplx> u = t;
    const int n = int(u.size());
    for (int m = 0; m < n; ++m)
      for (int j = n - 2; j >= m; --j) u[j] += (-s) * u[j + 1];
    return Poly(std::move(u));
  }

  Poly& operator+=(const Poly& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), cplx(0));
    for (size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
    trim();
    return *this;
  }
  Poly& operator-=(const Poly& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), cplx(0));
    for (size_t k = 0; k < o.c_.size(); ++k) c_[k] -= o.c_[k];
    trim();
    return *this;
  }
  Poly& operator*=(cplx a) {
    for (auto& x : c_) x *= a;
    trim();
    return *this;
  }
  friend Poly operator+(Poly a, const Poly& b) { a += b; return a; }
  friend Poly operator-(Poly a, const Poly& b) { a -= b; return a; }
  friend Poly operator*(Poly a, cplx s) { a *= s; return a; }
  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.c_.empty() || b.c_.empty()) return {};
    std::vector<cplx> r(a.c_.size() + b.c_.size() - 1, cplx(0));
    for (size_t i = 0; i < a.c_.size(); ++i)
      for (size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
    return Poly(std::move(r));
  }

  double max_abs() const {
    double m = 0;
    for (auto& x : c_) m = std::max(m, std::abs(x));
    return m;
  }

  void prune(double tol) {
    for (auto& x : c_)
      if (std::abs(x) < tol) x = 0;
    trim();
  }

private:
  void trim() {
    while (!c_.empty() && c_.back() == cplx(0)) c_.pop_back();
  }
  std::vector<cplx> c_;
};

// ---------------------------------------------------------------------------
// Anchors: the shared pole locations.  Construction rejects clustered anchors;
// every consumer assumes pairwise separation.

struct Anchors {
  std::vector<cplx> s;
  double scale = 1.0;

  explicit Anchors(std::vector<cplx> pts) : s(std::move(pts)) {
    for (auto& p : s) scale = std::max(scale, std::abs(p));
    for (size_t i = 0; i < s.size(); ++i)
      for (size_t j = i + 1; j < s.size(); ++j)
        if (std::abs(s[i] - s[j]) < kAnchorSep * scale)
          throw std::runtime_error("anchor clustering: |s_i - s_j| below resolution");
  }
  int size() const { return int(s.size()); }
};

using AnchorsPtr = std::shared_ptr<const Anchors>;

inline AnchorsPtr make_anchors(std::vector<cplx> pts) {
  return std::make_shared<const Anchors>(std::move(pts));
}

inline bool same_anchors(const AnchorsPtr& a, const AnchorsPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return a->s == b->s;
}

// Laurent data of a function at one anchor: sing[a-1] multiplies u^{-a},
// tay[m] multiplies u^m, u = x - s_i.
struct Laurent {
  std::vector<cplx> sing;
  std::vector<cplx> tay;
  cplx coeff(int order) const {
    if (order < 0) {
      int a = -order;
      return (a <= int(sing.size())) ? sing[a - 1] : cplx(0);
    }
    return (order < int(tay.size())) ? tay[order] : cplx(0);
  }
};

// ---------------------------------------------------------------------------
// PoleSum: polynomial + sum over anchors of finite-order pole parts,
//   f(x) = poly(x) + sum_i sum_a pp[i][a-1] / (x - s_i)^a.

class PoleSum {
public:
  PoleSum() = default;
  explicit PoleSum(AnchorsPtr anc) : anchors_(std::move(anc)) {
    pp_.resize(anchors_->size());
  }
  static PoleSum from_poly(AnchorsPtr anc, Poly p) {
    PoleSum f(std::move(anc));
    f.poly_ = std::move(p);
    return f;
  }
  static PoleSum single_pole(AnchorsPtr anc, int i, int order, cplx coeff) {
    PoleSum f(std::move(anc));
    f.add_pole(i, order, coeff);
    return f;
  }

  const AnchorsPtr& anchors() const { return anchors_; }
  const Poly& poly() const { return poly_; }
  Poly& poly() { return poly_; }
  const std::vector<std::vector<cplx>>& poles() const { return pp_; }

  void add_pole(int i, int order, cplx coeff) {
    if (order < 1) throw std::invalid_argument("pole order must be >= 1");
    auto& v = pp_.at(i);
    if (int(v.size()) < order) v.resize(order, cplx(0));
    v[order - 1] += coeff;
  }
  cplx pole_coeff(int i, int order) const {
    const auto& v = pp_.at(i);
    return (order >= 1 && order <= int(v.size())) ? v[order - 1] : cplx(0);
  }
  int max_order(int i) const { return int(pp_.at(i).size()); }
  int max_order() const {
    int m = 0;
    for (auto& v : pp_) m = std::max(m, int(v.size()));
    return m;
  }

  cplx eval(cplx x) const {
    cplx r = poly_.eval(x);
    for (int i = 0; i < int(pp_.size()); ++i) {
      cplx u = x - anchors_->s[i];
      cplx inv = cplx(1) / u, acc = 1;
      for (int a = 1; a <= int(pp_[i].size()); ++a) {
        acc *= inv;
        r += pp_[i][a - 1] * acc;
      }
    }
    return r;
  }

  PoleSum deriv() const {
    PoleSum d(anchors_);
    d.poly_ = poly_.deriv();
    for (int i = 0; i < int(pp_.size()); ++i)
      for (int a = 1; a <= int(pp_[i].size()); ++a)
        if (pp_[i][a - 1] != cplx(0)) d.add_pole(i, a + 1, -double(a) * pp_[i][a - 1]);
    return d;
  }

  // Laurent expansion at anchor i, Taylor part to order tay_count-1.
  Laurent laurent(int i, int tay_count) const {
    Laurent L;
    L.sing = pp_.at(i);
    L.tay.assign(std::max(tay_count, 0), cplx(0));
    if (tay_count <= 0) return L;
    const cplx si = anchors_->s[i];
    auto t = poly_.taylor_at(si);
    for (int m = 0; m < tay_count && m < int(t.size()); ++m) L.tay[m] = t[m];
    for (int j = 0; j < int(pp_.size()); ++j) {
      if (j == i) continue;
      const cplx d = si - anchors_->s[j];
      for (int b = 1; b <= int(pp_[j].size()); ++b) {
        const cplx cb = pp_[j][b - 1];
        if (cb == cplx(0)) continue;
        // (x-s_j)^{-b} = sum_m (-1)^m binom(b+m-1,m) (s_i-s_j)^{-(b+m)} u^m
        cplx dpow = std::pow(d, -b);
        for (int m = 0; m < tay_count; ++m) {
          double sgn = (m % 2 == 0) ? 1.0 : -1.0;
          L.tay[m] += cb * sgn * binom(b + m - 1, m) * dpow;
          dpow /= d;
        }
      }
    }
    return L;
  }

  PoleSum& operator+=(const PoleSum& o) {
    check(o);
    poly_ += o.poly_;
    for (int i = 0; i < int(pp_.size()); ++i)
      for (int a = 1; a <= int(o.pp_[i].size()); ++a)
        if (o.pp_[i][a - 1] != cplx(0)) add_pole(i, a, o.pp_[i][a - 1]);
    return *this;
  }
  PoleSum& operator-=(const PoleSum& o) {
    check(o);
    poly_ -= o.poly_;
    for (int i = 0; i < int(pp_.size()); ++i)
      for (int a = 1; a <= int(o.pp_[i].size()); ++a)
        if (o.pp_[i][a - 1] != cplx(0)) add_pole(i, a, -o.pp_[i][a - 1]);
    return *this;
  }
  PoleSum& operator*=(cplx f) {
    poly_ *= f;
    for (auto& v : pp_)
      for (auto& x : v) x *= f;
    return *this;
  }
  friend PoleSum operator+(PoleSum a, const PoleSum& b) { a += b; return a; }
  friend PoleSum operator-(PoleSum a, const PoleSum& b) { a -= b; return a; }
  friend PoleSum operator*(PoleSum a, cplx f) { a *= f; return a; }

  friend PoleSum operator*(const PoleSum& f, const PoleSum& g) {
    f.check(g);
    PoleSum r(f.anchors_);
    r.poly_ = f.poly_ * g.poly_;
    // polynomial part of poly x pole cross terms
    for (int j = 0; j < int(g.pp_.size()); ++j)
      for (int b = 1; b <= int(g.pp_[j].size()); ++b)
        r.poly_ += poly_times_pole_polypart(f.poly_, f.anchors_->s[j], b, g.pp_[j][b - 1]);
    for (int j = 0; j < int(f.pp_.size()); ++j)
      for (int b = 1; b <= int(f.pp_[j].size()); ++b)
        r.poly_ += poly_times_pole_polypart(g.poly_, g.anchors_->s[j], b, f.pp_[j][b - 1]);
    // pole parts by Laurent convolution at each anchor
    for (int k = 0; k < f.anchors_->size(); ++k) {
      const int af = f.max_order(k), ag = g.max_order(k);
      const int A = af + ag;
      if (A == 0) continue;
      Laurent Lf = f.laurent(k, ag);
      Laurent Lg = g.laurent(k, af);
      for (int a = 1; a <= A; ++a) {
        cplx c = 0;
        for (int p = -af; p <= -a + ag; ++p) c += Lf.coeff(p) * Lg.coeff(-a - p);
        if (c != cplx(0)) r.add_pole(k, a, c);
      }
    }
    r.normalize();
    return r;
  }

  double max_abs() const {
    double m = poly_.max_abs();
    for (auto& v : pp_)
      for (auto& x : v) m = std::max(m, std::abs(x));
    return m;
  }

  // Magnitude of the pole part alone (pole-freeness checks).
  double pole_max_abs() const {
    double m = 0;
    for (auto& v : pp_)
      for (auto& x : v) m = std::max(m, std::abs(x));
    return m;
  }

  void normalize() {
    const double tol = kPruneRel * max_abs();
    poly_.prune(tol);
    for (auto& v : pp_) {
      for (auto& x : v)
        if (std::abs(x) < tol) x = 0;
      while (!v.empty() && v.back() == cplx(0)) v.pop_back();
    }
  }

  // mu_k = sum over pole terms c_{i,a} binom(k, a-1) s_i^{k-a+1}; requires a
  // vanishing polynomial part (the expansion is at x -> infinity).
  std::vector<cplx> large_x_moments(int k_max) const {
    PoleSum f = *this;
    f.normalize();
    if (f.poly_.degree() >= 0)
      throw std::runtime_error("large_x_moments: nonzero polynomial part");
    std::vector<cplx> mu(k_max + 1, cplx(0));
    for (int i = 0; i < int(f.pp_.size()); ++i) {
      const cplx si = f.anchors_->s[i];
      for (int a = 1; a <= int(f.pp_[i].size()); ++a) {
        const cplx c = f.pp_[i][a - 1];
        if (c == cplx(0)) continue;
        for (int k = 0; k <= k_max; ++k) {
          const int e = k - a + 1;
          if (e < 0 || binom(k, a - 1) == 0.0) continue;
          mu[k] += c * binom(k, a - 1) * ((e == 0) ? cplx(1) : std::pow(si, e));
        }
      }
    }
    return mu;
  }

private:
  void check(const PoleSum& o) const {
    if (!same_anchors(anchors_, o.anchors_))
      throw std::invalid_argument("PoleSum: anchor sets differ");
  }
  // polynomial part of p(x) * coeff/(x-s)^a
  static Poly poly_times_pole_polypart(const Poly& p, cplx s, int a, cplx coeff) {
    if (coeff == cplx(0) || p.degree() < a) return {};
    auto t = p.taylor_at(s);
    std::vector<cplx> sub(t.begin() + a, t.end());
    for (auto& x : sub) x *= coeff;
    return Poly::from_taylor(s, sub);
  }

  AnchorsPtr anchors_;
  Poly poly_;
  std::vector<std::vector<cplx>> pp_;
};

inline double max_diff(const PoleSum& a, const PoleSum& b) {
  PoleSum d = a - b;
  d.normalize();
  return d.max_abs();
}

// ---------------------------------------------------------------------------
// PoleTensor: multi-variable function that is a pure pole sum in each slot,
//   T(x_0,..,x_{r-1}) = sum_terms c * prod_v (x_v - s_{p_v})^{-a_v}.
// Keys flatten to [p_0, a_0, p_1, a_1, ...].

class PoleTensor {
public:
  PoleTensor() = default;
  explicit PoleTensor(int arity) : arity_(arity) {}

  int arity() const { return arity_; }
  const std::map<std::vector<int>, cplx>& terms() const { return t_; }
  bool empty() const { return t_.empty(); }

  void add(const std::vector<int>& key, cplx c) {
    if (int(key.size()) != 2 * arity_)
      throw std::invalid_argument("PoleTensor: key length mismatch");
    for (int v = 0; v < arity_; ++v)
      if (key[2 * v + 1] < 1) throw std::invalid_argument("PoleTensor: order < 1");
    if (c == cplx(0)) return;
    t_[key] += c;
  }

  PoleTensor& operator+=(const PoleTensor& o) {
    if (o.arity_ != arity_ && !o.t_.empty())
      throw std::invalid_argument("PoleTensor: arity mismatch");
    for (auto& [k, c] : o.t_) t_[k] += c;
    return *this;
  }
  PoleTensor& operator-=(const PoleTensor& o) {
    if (o.arity_ != arity_ && !o.t_.empty())
      throw std::invalid_argument("PoleTensor: arity mismatch");
    for (auto& [k, c] : o.t_) t_[k] -= c;
    return *this;
  }
  PoleTensor& operator*=(cplx f) {
    for (auto& [k, c] : t_) c *= f;
    return *this;
  }
  friend PoleTensor operator+(PoleTensor a, const PoleTensor& b) { a += b; return a; }
  friend PoleTensor operator-(PoleTensor a, const PoleTensor& b) { a -= b; return a; }
  friend PoleTensor operator*(PoleTensor a, cplx f) { a *= f; return a; }

  // Tensor product: slots of a followed by slots of b.
  friend PoleTensor tprod(const PoleTensor& a, const PoleTensor& b) {
    PoleTensor r(a.arity_ + b.arity_);
    for (auto& [ka, ca] : a.t_)
      for (auto& [kb, cb] : b.t_) {
        std::vector<int> k = ka;
        k.insert(k.end(), kb.begin(), kb.end());
        r.t_[k] += ca * cb;
      }
    return r;
  }

  // Slot v of the result is slot perm[v] of the input.
  PoleTensor permute(const std::vector<int>& perm) const {
    if (int(perm.size()) != arity_) throw std::invalid_argument("permute: size");
    PoleTensor r(arity_);
    for (auto& [k, c] : t_) {
      std::vector<int> nk(2 * arity_);
      for (int v = 0; v < arity_; ++v) {
        nk[2 * v] = k[2 * perm[v]];
        nk[2 * v + 1] = k[2 * perm[v] + 1];
      }
      r.t_[nk] += c;
    }
    return r;
  }

  double max_abs() const {
    double m = 0;
    for (auto& [k, c] : t_) m = std::max(m, std::abs(c));
    return m;
  }

  void normalize() {
    const double tol = kPruneRel * max_abs();
    for (auto it = t_.begin(); it != t_.end();)
      it = (std::abs(it->second) < tol) ? t_.erase(it) : std::next(it);
  }

  cplx eval(const std::vector<cplx>& x, const Anchors& anc) const {
    if (int(x.size()) != arity_) throw std::invalid_argument("eval: point size");
    cplx r = 0;
    for (auto& [k, c] : t_) {
      cplx term = c;
      for (int v = 0; v < arity_; ++v)
        term *= std::pow(x[v] - anc.s[k[2 * v]], -k[2 * v + 1]);
      r += term;
    }
    return r;
  }

  // Evaluate slots 1..arity-1 at pts, leaving slot 0 free.
  PoleSum eval_tail(const std::vector<cplx>& pts, const AnchorsPtr& anc) const {
    if (int(pts.size()) != arity_ - 1) throw std::invalid_argument("eval_tail: size");
    PoleSum f(anc);
    for (auto& [k, c] : t_) {
      cplx factor = c;
      for (int v = 1; v < arity_; ++v)
        factor *= std::pow(pts[v - 1] - anc->s[k[2 * v]], -k[2 * v + 1]);
      f.add_pole(k[0], k[1], factor);
    }
    f.normalize();
    return f;
  }

  // Slots 0 and 1 merged into one free variable, slots 2.. evaluated at pts.
  PoleSum eval_diag_tail(const std::vector<cplx>& pts, const AnchorsPtr& anc) const {
    if (int(pts.size()) != arity_ - 2) throw std::invalid_argument("eval_diag_tail: size");
    PoleSum f(anc);
    for (auto& [k, c] : t_) {
      cplx factor = c;
      for (int v = 2; v < arity_; ++v)
        factor *= std::pow(pts[v - 2] - anc->s[k[2 * v]], -k[2 * v + 1]);
      PoleSum a = PoleSum::single_pole(anc, k[0], k[1], factor);
      PoleSum b = PoleSum::single_pole(anc, k[2], k[3], cplx(1));
      f += a * b;
    }
    f.normalize();
    return f;
  }

  // Arity-1 tensors convert to a PoleSum in their single variable.
  PoleSum to_polesum(const AnchorsPtr& anc) const {
    if (arity_ != 1) throw std::invalid_argument("to_polesum: arity != 1");
    PoleSum f(anc);
    for (auto& [k, c] : t_) f.add_pole(k[0], k[1], c);
    return f;
  }

private:
  int arity_ = 0;
  std::map<std::vector<int>, cplx> t_;
};

inline double max_diff(const PoleTensor& a, const PoleTensor& b) {
  PoleTensor d = a - b;
  double m = 0;
  for (auto& [k, c] : d.terms()) m = std::max(m, std::abs(c));
  return m;
}

// Prefix the poles of f (in its own variable) as a new leading slot.
// f must have no polynomial part.
inline PoleTensor attach_front(const PoleSum& f, const PoleTensor& tau) {
  if (f.poly().degree() >= 0)
    throw std::runtime_error("attach_front: polynomial part present");
  PoleTensor r(1 + tau.arity());
  for (int i = 0; i < int(f.poles().size()); ++i)
    for (int a = 1; a <= int(f.poles()[i].size()); ++a) {
      const cplx c = f.poles()[i][a - 1];
      if (c == cplx(0)) continue;
      for (auto& [k, tc] : tau.terms()) {
        std::vector<int> nk;
        nk.reserve(2 + k.size());
        nk.push_back(i);
        nk.push_back(a);
        nk.insert(nk.end(), k.begin(), k.end());
        r.add(nk, c * tc);
      }
    }
  return r;
}

// ---------------------------------------------------------------------------
// Jets: truncated Laurent expansions in u = x - s_i whose coefficients are
// PoleTensors in the spectator variables.

struct Jet {
  int lo = 0;     // order of c.front()
  int arity = 0;  // arity of each coefficient
  std::vector<PoleTensor> c;

  PoleTensor at(int order) const {
    const int idx = order - lo;
    if (idx < 0 || idx >= int(c.size())) return PoleTensor(arity);
    return c[idx];
  }
  int hi() const { return lo + int(c.size()) - 1; }
};

inline Jet jet_zero(int arity, int hi) {
  Jet j;
  j.lo = 0;
  j.arity = arity;
  j.c.assign(std::max(hi + 1, 0), PoleTensor(arity));
  return j;
}

inline Jet jet_add(const Jet& a, const Jet& b) {
  if (a.arity != b.arity) throw std::invalid_argument("jet_add: arity");
  Jet r;
  r.arity = a.arity;
  r.lo = std::min(a.lo, b.lo);
  const int hi = std::max(a.hi(), b.hi());
  r.c.assign(hi - r.lo + 1, PoleTensor(r.arity));
  for (int m = r.lo; m <= hi; ++m) {
    r.c[m - r.lo] = a.at(m);
    r.c[m - r.lo] += b.at(m);
  }
  return r;
}

inline Jet jet_scale(Jet a, cplx f) {
  for (auto& t : a.c) t *= f;
  return a;
}

// d/dx on the running variable.
inline Jet jet_dx(const Jet& a) {
  Jet r;
  r.arity = a.arity;
  r.lo = a.lo - 1;
  r.c.assign(a.c.size(), PoleTensor(a.arity));
  for (int m = a.lo; m <= a.hi(); ++m) {
    if (m == 0) continue;
    r.c[m - 1 - r.lo] = a.at(m) * cplx(double(m));
  }
  // order (lo-1) slot may be zero when a.lo == 0; harmless
  return r;
}

// Product truncated at order hi; spectator slots concatenate (a first).
inline Jet jet_mul(const Jet& a, const Jet& b, int hi) {
  Jet r;
  r.arity = a.arity + b.arity;
  r.lo = a.lo + b.lo;
  if (r.lo > hi) {
    r.lo = 0;
    r.c.clear();
    return r;
  }
  r.c.assign(hi - r.lo + 1, PoleTensor(r.arity));
  for (int ma = a.lo; ma <= a.hi(); ++ma)
    for (int mb = b.lo; mb <= b.hi(); ++mb) {
      const int m = ma + mb;
      if (m > hi) continue;
      r.c[m - r.lo] += tprod(a.at(ma), b.at(mb));
    }
  return r;
}

// Jet of a scalar PoleSum at anchor i (coefficients are arity-0 tensors).
inline Jet polesum_jet(const PoleSum& f, int i, int hi) {
  Jet j;
  j.arity = 0;
  const int ord = f.max_order(i);
  j.lo = ord > 0 ? -ord : 0;
  Laurent L = f.laurent(i, hi + 1);
  j.c.assign(hi - j.lo + 1, PoleTensor(0));
  for (int m = j.lo; m <= hi; ++m) {
    const cplx v = L.coeff(m);
    if (v != cplx(0)) j.c[m - j.lo].add({}, v);
  }
  return j;
}

// Jet of a PoleTensor in its slot-0 variable at anchor i; remaining slots
// become the coefficient slots.
inline Jet tensor_jet(const PoleTensor& T, const Anchors& anc, int i, int hi) {
  Jet j;
  j.arity = T.arity() - 1;
  int ord = 0;
  for (auto& [k, c] : T.terms())
    if (k[0] == i) ord = std::max(ord, k[1]);
  j.lo = ord > 0 ? -ord : 0;
  j.c.assign(hi - j.lo + 1, PoleTensor(j.arity));
  for (auto& [k, c] : T.terms()) {
    std::vector<int> rest(k.begin() + 2, k.end());
    if (k[0] == i) {
      const int m = -k[1];
      if (m >= j.lo && m <= hi) j.c[m - j.lo].add(rest, c);
    } else {
      const cplx d = anc.s[i] - anc.s[k[0]];
      const int b = k[1];
      cplx dpow = std::pow(d, -b);
      for (int m = 0; m <= hi; ++m) {
        const double sgn = (m % 2 == 0) ? 1.0 : -1.0;
        j.c[m - j.lo].add(rest, c * sgn * binom(b + m - 1, m) * dpow);
        dpow /= d;
      }
    }
  }
  return j;
}

// Jet of T with slots 0 and 1 both set to the running variable (diagonal),
// at anchor i; slots 2.. become the coefficient slots.
inline Jet tensor_diag_jet(const PoleTensor& T, const Anchors& anc, int i, int hi) {
  Jet j;
  j.arity = std::max(T.arity() - 2, 0);
  int ord = 0;
  for (auto& [k, c] : T.terms()) {
    int o = (k[0] == i ? k[1] : 0) + (k[2] == i ? k[3] : 0);
    ord = std::max(ord, o);
  }
  j.lo = ord > 0 ? -ord : 0;
  j.c.assign(hi - j.lo + 1, PoleTensor(j.arity));

  auto scalar_jet = [&](int p, int a, int top) {
    // expansion of (x - s_p)^{-a} at s_i, orders lo..top
    std::pair<int, std::vector<cplx>> sj;  // lo, coeffs
    if (p == i) {
      sj.first = -a;
      sj.second.assign(1, cplx(1));
    } else {
      sj.first = 0;
      const cplx d = anc.s[i] - anc.s[p];
      cplx dpow = std::pow(d, -a);
      for (int m = 0; m <= top; ++m) {
        const double sgn = (m % 2 == 0) ? 1.0 : -1.0;
        sj.second.push_back(sgn * binom(a + m - 1, m) * dpow);
        dpow /= d;
      }
    }
    return sj;
  };

  for (auto& [k, c] : T.terms()) {
    std::vector<int> rest(k.begin() + 4, k.end());
    const int base1 = (k[0] == i) ? -k[1] : 0;
    const int base2 = (k[2] == i) ? -k[3] : 0;
    auto [lo1, c1] = scalar_jet(k[0], k[1], hi - base2);
    auto [lo2, c2] = scalar_jet(k[2], k[3], hi - base1);
    for (int m1 = 0; m1 < int(c1.size()); ++m1)
      for (int m2 = 0; m2 < int(c2.size()); ++m2) {
        const int m = lo1 + m1 + lo2 + m2;
        if (m > hi || m < j.lo) continue;
        const cplx v = c * c1[m1] * c2[m2];
        if (v != cplx(0)) j.c[m - j.lo].add(rest, v);
      }
  }
  return j;
}

// Jet at anchor i of (x - xi)^{-2}, xi a spectator variable: the order-m
// coefficient is (m+1) (xi - s_i)^{-(m+2)}, an arity-1 tensor.
inline Jet xi_double_pole_jet(int i, int hi) {
  Jet j;
  j.arity = 1;
  j.lo = 0;
  j.c.assign(hi + 1, PoleTensor(1));
  for (int m = 0; m <= hi; ++m) j.c[m].add({i, m + 2}, double(m + 1));
  return j;
}

}  // namespace qsc
