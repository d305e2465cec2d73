// Command-line front end.  Subcommands:
//   solve        solve the Bethe system, write the solution cache
//   curve        leading-order spectral data (E and P coefficients)
//   free-energy  f0 and the two determinant-based f1 variants
//   correlators  W_n^{(g)} as pole data, optionally evaluated at points
//   verify       run the identity checks and report pass/fail per check
//
// Exit codes: 0 ok, 1 configuration error, 2 solver failure,
// 3 verification failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <random>

#include "qsc/json_io.hpp"
#include "qsc/recursion.hpp"
#include "qsc/yangyang.hpp"

using namespace qsc;

namespace {

struct CommonArgs {
  std::string model_path;
  std::string out_path;
  long seed = 0;
  double perturb = 0.0;
  double precision = 0.0;  // 0 means "use the model file's value"
};

json solution_json(const BetheSolution& sol) {
  json u = json::array();
  for (auto& uk : sol.u) u.push_back(vec_json(uk));
  return json{{"roots", vec_json(sol.s)},
              {"B", mat_json(sol.B)},
              {"u", u},
              {"residual", sol.residual}};
}

void emit(const std::string& out_path, const json& doc) {
  if (out_path.empty())
    std::cout << doc.dump(2) << "\n";
  else
    write_output(out_path, doc);
}

double scale_of(const Vec& s) {
  double m = 1.0;
  for (int i = 0; i < s.size(); ++i) m = std::max(m, std::abs(s(i)));
  return m;
}

// Deterministic off-root sample points for the check suite.
std::vector<cplx> sample_points(const Vec& s, std::mt19937_64& rng, int count,
                                double box = 2.5) {
  std::uniform_real_distribution<double> U(-box, box);
  const double sc = scale_of(s);
  std::vector<cplx> pts;
  while (int(pts.size()) < count) {
    cplx z(U(rng) * sc, U(rng) * sc);
    bool ok = true;
    for (int i = 0; i < s.size(); ++i)
      if (std::abs(z - s(i)) < 0.3 * sc) ok = false;
    for (auto& p : pts)
      if (std::abs(z - p) < 0.1 * sc) ok = false;
    if (ok) pts.push_back(z);
  }
  return pts;
}

BetheSolution solve_with_args(const RunConfig& rc, const CommonArgs& args) {
  BetheSolution sol = solve_bethe(rc.model, rc.bethe);
  if (args.perturb != 0.0) {
    // Deterministic root perturbation; B, u, residual are rebuilt so that
    // downstream checks see a consistent but off-shell configuration.
    std::mt19937_64 rng(uint64_t(args.seed) * 6364136223846793005ull + 1442695040888963407ull);
    std::uniform_real_distribution<double> U(0.0, 2.0 * M_PI);
    const double sc = scale_of(sol.s);
    for (int i = 0; i < sol.s.size(); ++i)
      sol.s(i) += args.perturb * sc * std::exp(cplx(0, U(rng)));
    sol.B = bethe_matrix(rc.model, sol.s, rc.model.T);
    sol.u = u_table(rc.model, sol.B);
    sol.residual = bethe_residual(rc.model, sol.s, rc.model.T).lpNorm<Eigen::Infinity>();
  }
  return sol;
}

struct CheckResult {
  std::string name;
  double residual = 0;
  double threshold = 0;
  bool pass = false;
};

std::vector<CheckResult> run_checks(const RunConfig& rc, const BetheSolution& sol,
                                    const std::vector<std::string>& wanted, long seed,
                                    double prec) {
  auto want = [&](const std::string& n) {
    if (wanted.empty()) return true;
    for (auto& w : wanted)
      if (w == n) return true;
    return false;
  };
  std::mt19937_64 rng(uint64_t(seed) + 0x9e3779b97f4a7c15ull);
  std::vector<CheckResult> out;
  auto record = [&](const std::string& name, double residual, double threshold) {
    out.push_back({name, residual, threshold * prec, residual < threshold * prec});
  };

  const Model& m = rc.model;
  std::optional<LeadingData> lead;
  auto L = [&]() -> const LeadingData& {
    if (!lead) lead = leading_data(m, sol);
    return *lead;
  };

  if (want("ode")) record("ode", quantum_curve_residual(m, L()), 1e-8);

  if (want("companion")) {
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    double worst = 0;
    for (int t = 0; t < 20; ++t) {
      const cplx x(U(rng), U(rng)), y(U(rng), U(rng));
      const cplx lhs = companion_det(m, L(), x, y);
      const cplx rhs = curve_eval(L(), x, y);
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
    record("companion", worst, 1e-9);
  }

  if (want("compat")) record("compat", verify_compat(m, sol), 1e-9);

  if (want("hessian")) {
    const StatePoint pt = critical_point(sol);
    const Mat Ha = action_hess(m, pt);
    const Mat Hf = action_hess_fd(m, pt);
    const double sc = std::max(1.0, Ha.cwiseAbs().maxCoeff());
    record("hessian", (Ha - Hf).cwiseAbs().maxCoeff() / sc, 1e-5);
  }

  const bool need_engine = want("loop_g0") || want("loop_g1") || want("w2_two_route") ||
                           want("symmetry");
  std::optional<Engine> eng;
  if (need_engine) eng.emplace(m, sol);

  if (want("loop_g0")) {
    const auto xi = sample_points(sol.s, rng, 1);
    record("loop_g0", eng->verify_loop(1, 0, {xi[0]}).rel(), 1e-9);
  }
  if (want("loop_g1")) {
    const auto xi = sample_points(sol.s, rng, 1);
    const double r0 = eng->verify_loop(0, 1, {}).rel();
    const double r1 = eng->verify_loop(1, 1, {xi[0]}).rel();
    record("loop_g1", std::max(r0, r1), 1e-7);
  }

  if (want("w2_two_route")) {
    const ActionFrame fr = build_action_frame(m, sol);
    const PoleTensor Wh = two_point_tensor(m, fr);
    const PoleTensor Wk = eng->correlator(2, 0);
    const auto pts = sample_points(sol.s, rng, 10);
    double worst = 0, sc = 0;
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b) {
        const std::vector<cplx> x{pts[a], pts[5 + b]};
        const cplx vh = Wh.eval(x, *L().anchors);
        const cplx vk = Wk.eval(x, *L().anchors);
        worst = std::max(worst, std::abs(vh - vk));
        sc = std::max({sc, std::abs(vh), std::abs(vk)});
      }
    record("w2_two_route", worst / std::max(sc, 1e-300), 1e-6);
  }

  if (want("symmetry")) {
    const auto pts = sample_points(sol.s, rng, 3);
    double worst = 0;
    auto perm_test = [&](const PoleTensor& W, const std::vector<cplx>& x) {
      std::vector<int> idx(x.size());
      for (size_t i = 0; i < idx.size(); ++i) idx[i] = int(i);
      const cplx ref = W.eval(x, *L().anchors);
      double sc = std::max(1e-300, std::abs(ref));
      do {
        std::vector<cplx> xp(x.size());
        for (size_t i = 0; i < idx.size(); ++i) xp[i] = x[idx[i]];
        worst = std::max(worst, std::abs(W.eval(xp, *L().anchors) - ref) / sc);
      } while (std::next_permutation(idx.begin(), idx.end()));
    };
    perm_test(eng->correlator(2, 0), {pts[0], pts[1]});
    perm_test(eng->correlator(2, 1), {pts[0], pts[1]});
    perm_test(eng->correlator(3, 0), {pts[0], pts[1], pts[2]});
    record("symmetry", worst, 1e-7);
  }

  return out;
}

int cmd_solve(const CommonArgs& args) {
  const RunConfig rc = load_model_file(args.model_path);
  const BetheSolution sol = solve_with_args(rc, args);
  json doc = solution_json(sol);
  doc["config_hash"] = fnv1a_hex(rc.echo.dump());
  doc["manifest"] = make_manifest(rc, "solve",
                                  json{{"seed", args.seed}, {"perturb", args.perturb}});
  emit(args.out_path, doc);
  return 0;
}

int cmd_curve(const CommonArgs& args) {
  const RunConfig rc = load_model_file(args.model_path);
  const BetheSolution sol = solve_with_args(rc, args);
  const LeadingData L = leading_data(rc.model, sol);
  json E = json::array(), P = json::array();
  for (auto& p : L.E) E.push_back(poly_json(p));
  for (auto& p : L.P00) P.push_back(poly_json(p));
  json doc{{"E", E},
           {"P", P},
           {"decoupled_roots", [&] {
              json a = json::array();
              for (auto& r : decoupled_roots(rc.model)) a.push_back(cplx_json(r));
              return a;
            }()}};
  doc["manifest"] = make_manifest(rc, "curve", json{{"seed", args.seed}});
  emit(args.out_path, doc);
  return 0;
}

int cmd_free_energy(const CommonArgs& args) {
  const RunConfig rc = load_model_file(args.model_path);
  const BetheSolution sol = solve_with_args(rc, args);
  const ActionFrame fr = build_action_frame(rc.model, sol);
  json doc{{"f0", cplx_json(fr.f0)},
           {"f1_full", cplx_json(fr.f1_full)},
           {"f1_reduced", cplx_json(fr.f1_reduced)},
           {"grad_norm", fr.grad_norm}};
  doc["manifest"] = make_manifest(rc, "free-energy", json{{"seed", args.seed}});
  emit(args.out_path, doc);
  return 0;
}

std::vector<cplx> parse_eval_list(const std::string& text) {
  std::vector<cplx> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    try {
      if (colon == std::string::npos)
        vals.emplace_back(std::stod(item), 0.0);
      else
        vals.emplace_back(std::stod(item.substr(0, colon)),
                          std::stod(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw ConfigError("--eval: cannot parse entry '" + item + "'");
    }
  }
  return vals;
}

int cmd_correlators(const CommonArgs& args, int n, int g, const std::string& eval_list) {
  const RunConfig rc = load_model_file(args.model_path);
  if (n < 1) throw ConfigError("--n must be >= 1");
  if (g < 0) throw ConfigError("--g must be >= 0");
  const BetheSolution sol = solve_with_args(rc, args);
  Engine eng(rc.model, sol);
  const PoleTensor W = eng.correlator(n, g);
  const LeadingData L = leading_data(rc.model, sol);
  json doc{{"n", n}, {"g", g}, {"W", tensor_json(W)}, {"roots", vec_json(sol.s)}};
  if (!eval_list.empty()) {
    const auto vals = parse_eval_list(eval_list);
    if (vals.empty() || int(vals.size()) % n != 0)
      throw ConfigError("--eval: entry count must be a positive multiple of n");
    json evals = json::array();
    for (size_t off = 0; off < vals.size(); off += n) {
      std::vector<cplx> x(vals.begin() + off, vals.begin() + off + n);
      json ja = json::array();
      for (auto& z : x) ja.push_back(cplx_json(z));
      evals.push_back({{"args", ja}, {"value", cplx_json(W.eval(x, *L.anchors))}});
    }
    doc["eval"] = evals;
  }
  doc["manifest"] = make_manifest(
      rc, "correlators",
      json{{"n", n}, {"g", g}, {"eval", eval_list}, {"seed", args.seed}});
  emit(args.out_path, doc);
  return 0;
}

int cmd_verify(const CommonArgs& args, const std::string& checks_list) {
  const RunConfig rc = load_model_file(args.model_path);
  std::vector<std::string> wanted;
  {
    std::stringstream ss(checks_list);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) wanted.push_back(item);
    const std::vector<std::string> known{"ode",     "companion",    "compat",
                                         "hessian", "loop_g0",      "loop_g1",
                                         "symmetry", "w2_two_route"};
    for (auto& w : wanted)
      if (std::find(known.begin(), known.end(), w) == known.end())
        throw ConfigError("unknown check: " + w);
  }
  const BetheSolution sol = solve_with_args(rc, args);
  const double prec = args.precision > 0 ? args.precision : rc.precision;
  const auto results = run_checks(rc, sol, wanted, args.seed, prec);
  bool all_pass = true;
  json jr = json::array();
  for (auto& r : results) {
    all_pass = all_pass && r.pass;
    jr.push_back({{"name", r.name},
                  {"residual", r.residual},
                  {"threshold", r.threshold},
                  {"pass", r.pass}});
  }
  json doc{{"checks", jr}, {"all_pass", all_pass}};
  doc["manifest"] = make_manifest(rc, "verify",
                                  json{{"seed", args.seed},
                                       {"perturb", args.perturb},
                                       {"checks", checks_list},
                                       {"precision", prec}});
  emit(args.out_path, doc);
  return all_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum spectral curve toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  int n = 1, g = 0;
  std::string eval_list, checks_list;

  auto add_common = [&](CLI::App* sub, bool out_required) {
    sub->add_option("--model", args.model_path, "model JSON file")->required();
    auto* out = sub->add_option("--out", args.out_path, "output JSON file");
    if (out_required) out->required();
    sub->add_option("--seed", args.seed, "seed for sampled check points");
    sub->add_option("--perturb", args.perturb, "root perturbation magnitude");
    sub->add_option("--precision", args.precision, "threshold scale override");
  };

  auto* solve = app.add_subcommand("solve", "solve the Bethe root system");
  add_common(solve, false);
  auto* verify = app.add_subcommand("verify", "run identity checks");
  add_common(verify, false);
  verify->add_option("--checks", checks_list, "comma-separated subset of checks");
  auto* curve = app.add_subcommand("curve", "leading-order spectral curve data");
  add_common(curve, false);
  auto* fe = app.add_subcommand("free-energy", "free-energy coefficients");
  add_common(fe, false);
  auto* corr = app.add_subcommand("correlators", "connected correlators");
  add_common(corr, false);
  corr->add_option("--n", n, "number of variables");
  corr->add_option("--g", g, "genus");
  corr->add_option("--eval", eval_list,
                   "comma-separated points (re or re:im), n entries per tuple");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 1 : 0;
  }

  try {
    if (solve->parsed()) return cmd_solve(args);
    if (verify->parsed()) return cmd_verify(args, checks_list);
    if (curve->parsed()) return cmd_curve(args);
    if (fe->parsed()) return cmd_free_energy(args);
    if (corr->parsed()) return cmd_correlators(args, n, g, eval_list);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const VerifyError& e) {
    std::cerr << "verification error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
