#pragma once

// JSON ingestion and serialization.  Model files carry the potentials, T, N,
// the Bethe solver block, and a precision factor; unknown keys are rejected
// at both nesting levels.  All emitted complex numbers are [re, im] pairs,
// and every output document embeds the run manifest.

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "qsc/bethe.hpp"
#include "qsc/errors.hpp"
#include "qsc/model.hpp"
#include "qsc/ratfun.hpp"

namespace qsc {

using json = nlohmann::json;

inline cplx parse_cplx(const json& j, const char* what) {
  if (j.is_number()) return cplx(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return cplx(j[0].get<double>(), j[1].get<double>());
  throw ConfigError(std::string(what) + ": expected real or [re,im]");
}

inline json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(cplx_json(v(i)));
  return a;
}

inline json mat_json(const Mat& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(cplx_json(m(i, j)));
    a.push_back(row);
  }
  return a;
}

inline json poly_json(const Poly& p) {
  json a = json::array();
  for (auto& c : p.coeffs()) a.push_back(cplx_json(c));
  return a;
}

inline json polesum_json(const PoleSum& f) {
  json terms = json::array();
  for (int i = 0; i < int(f.poles().size()); ++i)
    for (int a = 1; a <= int(f.poles()[i].size()); ++a)
      if (f.poles()[i][a - 1] != cplx(0))
        terms.push_back({{"pole", i}, {"order", a}, {"coeff", cplx_json(f.poles()[i][a - 1])}});
  return json{{"anchors", [&] {
                 json a = json::array();
                 for (auto& s : f.anchors()->s) a.push_back(cplx_json(s));
                 return a;
               }()},
              {"poly", poly_json(f.poly())},
              {"terms", terms}};
}

inline json tensor_json(const PoleTensor& T) {
  json terms = json::array();
  for (auto& [k, c] : T.terms()) {
    json slots = json::array();
    for (int v = 0; v < T.arity(); ++v)
      slots.push_back({{"pole", k[2 * v]}, {"order", k[2 * v + 1]}});
    terms.push_back({{"slots", slots}, {"coeff", cplx_json(c)}});
  }
  return json{{"arity", T.arity()}, {"terms", terms}};
}

struct RunConfig {
  Model model;
  BetheOptions bethe;
  double precision = 1.0;
  json echo;  // canonical config echo, used for hashing and manifests
};

namespace detail {
inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                           const char* where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (auto* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + it.key() + "'");
  }
}
}  // namespace detail

inline RunConfig load_model_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model: expected a JSON object");
  detail::reject_unknown(j, {"V1_prime", "V2_prime", "T", "N", "bethe", "precision"},
                         "model");
  for (auto* key : {"V1_prime", "V2_prime", "T", "N"})
    if (!j.contains(key)) throw ConfigError(std::string("model: missing key '") + key + "'");

  auto parse_poly = [](const json& a, const char* what) {
    if (!a.is_array() || a.empty())
      throw ConfigError(std::string(what) + ": expected a nonempty array");
    std::vector<cplx> c;
    for (auto& e : a) c.push_back(parse_cplx(e, what));
    if (c.back() == cplx(0))
      throw ConfigError(std::string(what) + ": zero leading coefficient");
    return Poly(std::move(c));
  };

  RunConfig rc;
  Poly v1 = parse_poly(j.at("V1_prime"), "V1_prime");
  Poly v2 = parse_poly(j.at("V2_prime"), "V2_prime");
  if (!j.at("T").is_number()) throw ConfigError("T: expected a positive real");
  if (!j.at("N").is_number_integer()) throw ConfigError("N: expected a positive integer");
  try {
    rc.model = Model(std::move(v1), std::move(v2), j.at("T").get<double>(),
                     j.at("N").get<int>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  rc.bethe.selection.resize(rc.model.N);
  for (int i = 0; i < rc.model.N; ++i) rc.bethe.selection[i] = i;
  if (j.contains("bethe")) {
    const json& b = j.at("bethe");
    if (!b.is_object()) throw ConfigError("bethe: expected a JSON object");
    detail::reject_unknown(
        b, {"mode", "root_selection", "initial_guesses", "steps", "tol", "max_iter"},
        "bethe");
    const std::string mode = b.value("mode", std::string("homotopy"));
    if (mode == "homotopy") {
      rc.bethe.homotopy = true;
      if (b.contains("root_selection")) {
        rc.bethe.selection.clear();
        for (auto& e : b.at("root_selection")) {
          if (!e.is_number_integer()) throw ConfigError("root_selection: expected integers");
          rc.bethe.selection.push_back(e.get<int>());
        }
      }
      if (b.contains("initial_guesses"))
        throw ConfigError("bethe: initial_guesses requires mode 'direct'");
    } else if (mode == "direct") {
      rc.bethe.homotopy = false;
      if (!b.contains("initial_guesses"))
        throw ConfigError("bethe: mode 'direct' requires initial_guesses");
      for (auto& e : b.at("initial_guesses"))
        rc.bethe.guesses.push_back(parse_cplx(e, "initial_guesses"));
      if (b.contains("root_selection"))
        throw ConfigError("bethe: root_selection requires mode 'homotopy'");
    } else {
      throw ConfigError("bethe.mode: expected 'homotopy' or 'direct'");
    }
    rc.bethe.steps = b.value("steps", rc.bethe.steps);
    rc.bethe.tol = b.value("tol", rc.bethe.tol);
    rc.bethe.max_iter = b.value("max_iter", rc.bethe.max_iter);
    if (rc.bethe.tol <= 0) throw ConfigError("bethe.tol: must be positive");
  }
  if (j.contains("precision")) {
    if (!j.at("precision").is_number() || j.at("precision").get<double>() <= 0)
      throw ConfigError("precision: expected a positive real");
    rc.precision = j.at("precision").get<double>();
  }
  rc.echo = j;
  return rc;
}

inline RunConfig load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model file parse error: ") + e.what());
  }
  return load_model_json(j);
}

inline std::string fnv1a_hex(const std::string& data) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

inline json make_manifest(const RunConfig& rc, const std::string& command,
                          const json& params) {
  return json{{"tool", "qsc"},
              {"version", "0.1.0"},
              {"command", command},
              {"model_hash", fnv1a_hex(rc.echo.dump())},
              {"parameters", params},
              {"timing", nullptr}};
}

inline void write_output(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace qsc
