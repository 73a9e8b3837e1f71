#pragma once

// Run configuration: one JSON document, every key checked against the schema
// below so that a misspelt parameter is an error rather than a silent default.
//
// {
//   "params":      {"g", "gamma", "drive", "beta": {"re","im"}, "n_fock"?, "tol"?},
//   "evolve":      {"t_total", "dt", "rho0", "stride"},
//   "sample":      {"t_total", "dt", "n_traj", "seed", "rho0"},
//   "conditional": {"dt", "record" | "record_file", "rho0", "engine": "auto"|"double"|"precise"},
//   "verify":      {"checks", "tolerance"?, "t", "dt", "record"},
//   "sme":         {"t_total", "dt", "phi", "eta", "n_traj", "seed", "stride", "rho0"},
//   "output":      {"path", "format": "csv"|"json"}
// }
//
// rho0 is "steady", "vacuum_g", "vacuum_e", "vacuum_plus", "vacuum_minus", or
// {"atom": "g"|"e"|"plus"|"minus", "coherent": {"re","im"}} / {"atom": ..., "fock": n}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "diffusive.hpp"
#include "dynamics.hpp"
#include "io.hpp"
#include "params.hpp"
#include "precise.hpp"

namespace cqed {

struct InitialState {
  std::string atom = "steady";  // "steady" means rho_ss, otherwise an atomic state
  bool coherent = true;
  Complex amplitude{0.0, 0.0};
  int fock = 0;

  Json to_json() const {
    if (atom == "steady") return "steady";
    Json j{{"atom", atom}};
    if (coherent) j["coherent"] = complex_json(amplitude);
    else j["fock"] = fock;
    return j;
  }

  Vector2 atom_vector() const {
    if (atom == "g") return atom::ground();
    if (atom == "e") return atom::excited();
    if (atom == "plus") return atom::plus();
    return atom::minus();
  }

  Matrix build(const SystemParams& p) const {
    if (atom == "steady") return build_rho_ss(p);
    const Vector field = coherent ? coherent_state(amplitude, p).field : fock_state(fock, p.n_fock());
    return projector(product_state(atom_vector(), field));
  }

  // The sigma_y-block coherent form used by the extended-precision engine, if any.
  std::optional<BlockCoherentState> blocks(const SystemParams& p) const {
    if (atom == "steady") return steady_blocks(p);
    if (!coherent) return std::nullopt;
    if (atom == "plus") return BlockCoherentState{{amplitude, amplitude}, {1.0, 0.0}};
    if (atom == "minus") return BlockCoherentState{{amplitude, amplitude}, {0.0, 1.0}};
    return std::nullopt;
  }
};

struct EvolveSettings {
  double t_total = 1.0, dt = 1e-3;
  int stride = 10;
  InitialState rho0;
};

struct SampleSettings {
  double t_total = 1.0, dt = 5e-4;
  int n_traj = 100;
  std::uint64_t seed = 0;
  InitialState rho0;
};

struct ConditionalSettings {
  double dt = 0.4;
  PhotocountRecord record;
  std::string engine = "auto";
  InitialState rho0;
};

struct VerifySettings {
  std::vector<std::string> checks;  // empty = all
  std::optional<double> tolerance;  // overrides every per-check tolerance
  double t = 0.7, dt = 1.0;
  std::vector<int> record{1, 2, 1};
};

struct SMESettings {
  double t_total = 1.0;
  SMEConfig cfg;
  InitialState rho0;
};

struct RunConfig {
  double g = 10, gamma = 1, drive = 3;
  Complex beta{0.5, 0.0};
  std::optional<int> n_fock;
  double tol = 1e-8;
  EvolveSettings evolve;
  SampleSettings sample;
  ConditionalSettings conditional;
  VerifySettings verify;
  SMESettings sme;
  std::string output_path = "cqed_out";
  std::string format = "csv";

  RunConfig() { conditional.record.dt_total = conditional.dt; }

  // Parameters with the configured n_fock, or the margin rule when unset.
  SystemParams params() const {
    if (n_fock) return SystemParams(g, gamma, drive, beta, *n_fock, tol);
    return SystemParams::with_margin(g, gamma, drive, beta, 0.0, tol);
  }

  Json to_json() const;
};

namespace config_detail {

inline void only_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + ": must be finite");
  return x;
}

inline double positive(const Json& j, const std::string& where) {
  const double x = number(j, where);
  if (!(x > 0)) throw ConfigError(where + ": must be positive");
  return x;
}

inline double non_negative(const Json& j, const std::string& where) {
  const double x = number(j, where);
  if (!(x >= 0)) throw ConfigError(where + ": must be non-negative");
  return x;
}

inline int count(const Json& j, const std::string& where, int lo) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  const auto x = j.get<long long>();
  if (x < lo || x > 100000000) throw ConfigError(where + ": out of range");
  return static_cast<int>(x);
}

inline std::uint64_t seed(const Json& j, const std::string& where) {
  if (!j.is_number_unsigned()) throw ConfigError(where + ": expected a non-negative integer");
  return j.get<std::uint64_t>();
}

inline InitialState initial_state(const Json& j, const std::string& where) {
  InitialState s;
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "steady") return s;
    const std::string prefix = "vacuum_";
    if (name.rfind(prefix, 0) == 0) {
      s.atom = name.substr(prefix.size());
      if (s.atom == "g" || s.atom == "e" || s.atom == "plus" || s.atom == "minus") return s;
    }
    throw ConfigError(where + ": unknown state '" + name + "'");
  }
  only_keys(j, where, {"atom", "coherent", "fock"});
  if (!j.contains("atom") || !j.at("atom").is_string()) throw ConfigError(where + ": needs \"atom\"");
  s.atom = j.at("atom").get<std::string>();
  if (s.atom != "g" && s.atom != "e" && s.atom != "plus" && s.atom != "minus")
    throw ConfigError(where + ": atom must be g, e, plus or minus");
  if (j.contains("coherent") == j.contains("fock")) throw ConfigError(where + ": give exactly one of coherent, fock");
  if (j.contains("fock")) {
    s.coherent = false;
    s.fock = count(j.at("fock"), where + ".fock", 0);
  } else {
    s.amplitude = complex_from_json(j.at("coherent"));
  }
  return s;
}

inline std::vector<int> labels(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of detector labels");
  std::vector<int> out;
  for (const auto& e : j) {
    if (!e.is_number_integer() || (e.get<int>() != 1 && e.get<int>() != 2))
      throw ConfigError(where + ": labels must be 1 or 2");
    out.push_back(e.get<int>());
  }
  return out;
}

}  // namespace config_detail

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"theorem1", "theorem2", "corollary",      "lemma1",
                                              "lemma2",   "eq39",     "eq40", "eigenvalue_ratio"};
  return names;
}

// `base_dir` resolves a relative record_file.
inline RunConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {}) {
  using namespace config_detail;
  RunConfig c;
  only_keys(j, "config", {"params", "evolve", "sample", "conditional", "verify", "sme", "output"});
  if (j.contains("params")) {
    const Json& p = j.at("params");
    only_keys(p, "params", {"g", "gamma", "drive", "beta", "n_fock", "tol"});
    if (p.contains("g")) c.g = non_negative(p.at("g"), "params.g");
    if (p.contains("gamma")) c.gamma = positive(p.at("gamma"), "params.gamma");
    if (p.contains("drive")) c.drive = number(p.at("drive"), "params.drive");
    if (p.contains("beta")) c.beta = complex_from_json(p.at("beta"));
    if (p.contains("n_fock") && !p.at("n_fock").is_null()) c.n_fock = count(p.at("n_fock"), "params.n_fock", 2);
    if (p.contains("tol")) c.tol = non_negative(p.at("tol"), "params.tol");
  }
  if (j.contains("evolve")) {
    const Json& e = j.at("evolve");
    only_keys(e, "evolve", {"t_total", "dt", "stride", "rho0"});
    if (e.contains("t_total")) c.evolve.t_total = non_negative(e.at("t_total"), "evolve.t_total");
    if (e.contains("dt")) c.evolve.dt = positive(e.at("dt"), "evolve.dt");
    if (e.contains("stride")) c.evolve.stride = count(e.at("stride"), "evolve.stride", 1);
    if (e.contains("rho0")) c.evolve.rho0 = initial_state(e.at("rho0"), "evolve.rho0");
  }
  if (j.contains("sample")) {
    const Json& e = j.at("sample");
    only_keys(e, "sample", {"t_total", "dt", "n_traj", "seed", "rho0"});
    if (e.contains("t_total")) c.sample.t_total = non_negative(e.at("t_total"), "sample.t_total");
    if (e.contains("dt")) c.sample.dt = positive(e.at("dt"), "sample.dt");
    if (e.contains("n_traj")) c.sample.n_traj = count(e.at("n_traj"), "sample.n_traj", 1);
    if (e.contains("seed")) c.sample.seed = seed(e.at("seed"), "sample.seed");
    if (e.contains("rho0")) c.sample.rho0 = initial_state(e.at("rho0"), "sample.rho0");
  }
  if (j.contains("conditional")) {
    const Json& e = j.at("conditional");
    only_keys(e, "conditional", {"dt", "record", "record_file", "rho0", "engine"});
    if (e.contains("dt")) c.conditional.dt = non_negative(e.at("dt"), "conditional.dt");
    if (e.contains("record") && e.contains("record_file"))
      throw ConfigError("conditional: give record or record_file, not both");
    if (e.contains("record")) c.conditional.record = record_from_json(e.at("record"), c.conditional.dt);
    if (e.contains("record_file")) {
      if (!e.at("record_file").is_string()) throw ConfigError("conditional.record_file: expected a path");
      std::filesystem::path f = e.at("record_file").get<std::string>();
      if (f.is_relative() && !base_dir.empty()) f = base_dir / f;
      if (!std::filesystem::exists(f)) throw ConfigError("conditional.record_file: " + f.string() + " does not exist");
      c.conditional.record = record_from_json(parse_json(read_text(f), f.string()), c.conditional.dt);
    }
    c.conditional.record.dt_total = c.conditional.dt;
    if (e.contains("rho0")) c.conditional.rho0 = initial_state(e.at("rho0"), "conditional.rho0");
    if (e.contains("engine")) {
      if (!e.at("engine").is_string()) throw ConfigError("conditional.engine: expected a string");
      c.conditional.engine = e.at("engine").get<std::string>();
      if (c.conditional.engine != "auto" && c.conditional.engine != "double" && c.conditional.engine != "precise")
        throw ConfigError("conditional.engine: auto, double or precise");
    }
  }
  if (j.contains("verify")) {
    const Json& e = j.at("verify");
    only_keys(e, "verify", {"checks", "tolerance", "t", "dt", "record"});
    if (e.contains("checks")) {
      if (!e.at("checks").is_array()) throw ConfigError("verify.checks: expected an array of names");
      for (const auto& n : e.at("checks")) {
        if (!n.is_string()) throw ConfigError("verify.checks: names are strings");
        const std::string name = n.get<std::string>();
        const auto& all = known_checks();
        if (std::find(all.begin(), all.end(), name) == all.end())
          throw ConfigError("verify.checks: unknown check '" + name + "'");
        c.verify.checks.push_back(name);
      }
    }
    if (e.contains("tolerance") && !e.at("tolerance").is_null())
      c.verify.tolerance = non_negative(e.at("tolerance"), "verify.tolerance");
    if (e.contains("t")) c.verify.t = positive(e.at("t"), "verify.t");
    if (e.contains("dt")) c.verify.dt = positive(e.at("dt"), "verify.dt");
    if (e.contains("record")) c.verify.record = labels(e.at("record"), "verify.record");
  }
  if (j.contains("sme")) {
    const Json& e = j.at("sme");
    only_keys(e, "sme", {"t_total", "dt", "phi", "eta", "n_traj", "seed", "stride", "rho0"});
    if (e.contains("t_total")) c.sme.t_total = non_negative(e.at("t_total"), "sme.t_total");
    if (e.contains("dt")) c.sme.cfg.dt = positive(e.at("dt"), "sme.dt");
    if (e.contains("phi")) c.sme.cfg.phi = number(e.at("phi"), "sme.phi");
    if (e.contains("eta")) c.sme.cfg.eta = number(e.at("eta"), "sme.eta");
    if (e.contains("n_traj")) c.sme.cfg.n_traj = count(e.at("n_traj"), "sme.n_traj", 1);
    if (e.contains("seed")) c.sme.cfg.seed = seed(e.at("seed"), "sme.seed");
    if (e.contains("stride")) c.sme.cfg.stride = count(e.at("stride"), "sme.stride", 1);
    if (e.contains("rho0")) c.sme.rho0 = initial_state(e.at("rho0"), "sme.rho0");
    if (!(c.sme.cfg.eta > 0 && c.sme.cfg.eta <= 1)) throw ConfigError("sme.eta: must lie in (0, 1]");
  }
  if (j.contains("output")) {
    const Json& e = j.at("output");
    only_keys(e, "output", {"path", "format"});
    if (e.contains("path")) {
      if (!e.at("path").is_string()) throw ConfigError("output.path: expected a string");
      c.output_path = e.at("path").get<std::string>();
    }
    if (e.contains("format")) {
      if (!e.at("format").is_string()) throw ConfigError("output.format: expected a string");
      c.format = e.at("format").get<std::string>();
    }
  }
  if (c.format != "csv" && c.format != "json") throw ConfigError("output.format: csv or json");
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(parse_json(read_text(path), path.string()), path.parent_path());
}

inline Json RunConfig::to_json() const {
  Json j;
  j["params"] = {{"g", g}, {"gamma", gamma}, {"drive", drive}, {"beta", complex_json(beta)},
                 {"n_fock", n_fock ? Json(*n_fock) : Json(nullptr)}, {"tol", tol}};
  j["evolve"] = {{"t_total", evolve.t_total}, {"dt", evolve.dt}, {"stride", evolve.stride},
                 {"rho0", evolve.rho0.to_json()}};
  j["sample"] = {{"t_total", sample.t_total}, {"dt", sample.dt}, {"n_traj", sample.n_traj},
                 {"seed", sample.seed}, {"rho0", sample.rho0.to_json()}};
  j["conditional"] = {{"dt", conditional.dt}, {"record", record_json(conditional.record)},
                      {"rho0", conditional.rho0.to_json()}, {"engine", conditional.engine}};
  Json checks = Json::array();
  for (const auto& n : verify.checks) checks.push_back(n);
  j["verify"] = {{"checks", checks}, {"tolerance", verify.tolerance ? Json(*verify.tolerance) : Json(nullptr)},
                 {"t", verify.t}, {"dt", verify.dt}, {"record", verify.record}};
  j["sme"] = {{"t_total", sme.t_total}, {"dt", sme.cfg.dt},     {"phi", sme.cfg.phi},
              {"eta", sme.cfg.eta},     {"n_traj", sme.cfg.n_traj}, {"seed", sme.cfg.seed},
              {"stride", sme.cfg.stride}, {"rho0", sme.rho0.to_json()}};
  j["output"] = {{"path", output_path}, {"format", format}};
  return j;
}

}  // namespace cqed
