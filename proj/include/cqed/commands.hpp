#pragma once

// The five CLI pipelines. Each writes its data files plus manifest.json into
// the output directory; everything except the manifest timestamp is a pure
// function of the configuration.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "conditional.hpp"
#include "config.hpp"
#include "diffusive.hpp"
#include "dynamics.hpp"
#include "ensemble.hpp"
#include "io.hpp"
#include "jumps.hpp"
#include "verify.hpp"

namespace cqed {

inline constexpr const char* kVersion = "0.3.0";

enum ExitCode { kOk = 0, kCheckFailed = 1, kConfigError = 2, kNumericError = 3 };

struct CommandOutput {
  std::vector<std::string> files;  // relative to the output directory
  Json diagnostics = Json::object();
  int exit_code = kOk;
};

// Population on the top two Fock levels (both atomic states).
inline double edge_population(const Matrix& rho) {
  const Eigen::Index n = rho.rows() / 2;
  double s = 0;
  for (Eigen::Index k = std::max<Eigen::Index>(0, n - 2); k < n; ++k) s += (rho(k, k) + rho(n + k, n + k)).real();
  return s;
}

namespace command_detail {

inline std::string write_table(const std::filesystem::path& dir, const std::string& stem, const Table& t,
                               const std::string& format) {
  const std::string name = stem + (format == "json" ? ".json" : ".csv");
  write_text(dir / name, format == "json" ? table_json(t).dump(2) + "\n" : to_csv(t));
  return name;
}

inline Table observable_table() { return Table{observable_columns(), {}}; }

inline std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

}  // namespace command_detail

inline Json versions_json() {
  return {{"cqed", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

inline void write_manifest(const std::filesystem::path& dir, const std::string& command, const RunConfig& c,
                           const CommandOutput& out, std::optional<std::uint64_t> seed) {
  Json m;
  m["command"] = command;
  m["config"] = c.to_json();
  m["seed"] = seed ? Json(*seed) : Json(nullptr);
  m["versions"] = versions_json();
  m["diagnostics"] = out.diagnostics;
  m["files"] = out.files;
  m["exit_code"] = out.exit_code;
  m["timestamp"] = command_detail::timestamp();
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

inline CommandOutput cmd_evolve(const RunConfig& c, const std::filesystem::path& dir) {
  const SystemParams p = c.params();
  const LindbladGenerator gen(p);
  const Matrix rho0 = c.evolve.rho0.build(p);
  Table t = command_detail::observable_table();
  EvolveOptions opt;
  opt.observe_stride = c.evolve.stride;
  opt.observer = [&](double time, const Matrix& rho) { t.add(observable_row(time, rho)); };
  const EvolveResult res = evolve_unconditional(rho0, c.evolve.t_total, c.evolve.dt, gen, opt);
  CommandOutput out;
  out.files.push_back(command_detail::write_table(dir, "timeseries", t, c.format));
  out.diagnostics = {{"n_fock", p.n_fock()},
                     {"edge_population", edge_population(res.rho)},
                     {"error_estimate", res.error_estimate},
                     {"trace_drift", res.trace_drift},
                     {"hermiticity_drift", res.hermiticity_drift},
                     {"steps", res.steps}};
  return out;
}

inline CommandOutput cmd_sample(const RunConfig& c, const std::filesystem::path& dir) {
  const SystemParams p = c.params();
  const auto& s = c.sample;
  const Matrix rho0 = s.rho0.build(p);
  Json records = Json::array();
  std::vector<Matrix> factors;
  const int batch = 200;
  for (int first = 0; first < s.n_traj; first += batch) {
    const int n = std::min(batch, s.n_traj - first);
    auto trs = sample_ensemble(rho0, s.t_total, s.dt, s.seed, n, p, static_cast<std::uint64_t>(first));
    for (int j = 0; j < n; ++j) {
      records.push_back({{"index", first + j}, {"log_weight", trs[j].log_weight}, {"record", record_json(trs[j].record)}});
      factors.push_back(std::move(trs[j].factor));
    }
  }
  const Matrix mean = weighted_factor_mean(factors);
  Table t = command_detail::observable_table();
  t.add(observable_row(s.t_total, mean));
  CommandOutput out;
  write_text(dir / "records.json", records.dump(2) + "\n");
  out.files.push_back("records.json");
  out.files.push_back(command_detail::write_table(dir, "ensemble_mean", t, c.format));
  out.diagnostics = {{"n_fock", p.n_fock()}, {"edge_population", edge_population(mean)}};
  return out;
}

inline CommandOutput cmd_conditional(const RunConfig& c, const std::filesystem::path& dir) {
  const SystemParams p = c.params();
  const auto& cs = c.conditional;
  const auto blocks = cs.rho0.blocks(p);
  if (cs.engine == "precise" && !blocks)
    throw ConfigError("conditional: the precise engine needs a block-coherent rho0 (steady, or plus/minus with a coherent field)");
  const bool precise = cs.engine == "precise" || (cs.engine == "auto" && blocks);
  Matrix rho;
  double log_weight, l1, l2;
  if (precise) {
    const PreciseConditional pc = precise_conditional(*blocks, cs.record.labels, cs.dt, p);
    rho = pc.joint_rho(p.n_fock());
    log_weight = pc.log_weight;
    l1 = pc.lambda[0], l2 = pc.lambda[1];
  } else {
    const ConditionalResult r = conditional_state(cs.rho0.build(p), cs.record.labels, cs.dt, p);
    rho = r.rho_c;
    log_weight = r.log_weight;
    l1 = observe(rho).p_plus, l2 = 1 - l1;
  }
  double formula = NAN;
  if (p.beta().real() == 0.0 && p.beta().imag() != 0.0 && p.g() != 0.0) formula = eigenvalue_ratio(cs.record.labels, cs.dt, p);
  Table t = command_detail::observable_table();
  for (const char* col : {"lambda2", "lambda_ratio", "formula_ratio", "log_weight", "counts"}) t.columns.push_back(col);
  auto row = observable_row(cs.dt, rho);
  row[7] = l1;
  row.insert(row.end(), {l2, l1 / l2, formula, log_weight, static_cast<double>(cs.record.size())});
  t.add(std::move(row));
  CommandOutput out;
  out.files.push_back(command_detail::write_table(dir, "conditional", t, c.format));
  write_text(dir / "record.json", record_json(cs.record).dump(2) + "\n");
  out.files.push_back("record.json");
  out.diagnostics = {{"n_fock", p.n_fock()}, {"engine", precise ? "precise" : "double"},
                     {"edge_population", edge_population(rho)}};
  return out;
}

inline CommandOutput cmd_sme(const RunConfig& c, const std::filesystem::path& dir) {
  const SystemParams p = c.params();
  const LindbladGenerator gen(p);
  const Matrix rho0 = c.sme.rho0.build(p);
  const SMEEnsemble ens = sme_ensemble(rho0, c.sme.t_total, c.sme.cfg, gen);
  Table mean = command_detail::observable_table();
  for (std::size_t k = 0; k < ens.times.size(); ++k) mean.add(observable_row(ens.times[k], ens.mean[k]));
  // First trajectory's photocurrent, sampled at step starts.
  const SMETrajectory first = sme_trajectory(rho0, c.sme.t_total, c.sme.cfg, gen, 0);
  const double h = first.photocurrent.empty() ? 0.0 : c.sme.t_total / first.photocurrent.size();
  Table current{{"time", "current"}, {}};
  for (std::size_t k = 0; k < first.photocurrent.size(); ++k) current.add({k * h, first.photocurrent[k]});
  Table averages{{"trajectory", "mean_current"}, {}};
  for (std::size_t j = 0; j < ens.mean_photocurrent.size(); ++j)
    averages.add({static_cast<double>(j), ens.mean_photocurrent[j]});
  CommandOutput out;
  out.files.push_back(command_detail::write_table(dir, "ensemble_mean", mean, c.format));
  out.files.push_back(command_detail::write_table(dir, "photocurrent", current, c.format));
  out.files.push_back(command_detail::write_table(dir, "mean_current", averages, c.format));
  out.diagnostics = {{"n_fock", p.n_fock()}, {"edge_population", edge_population(ens.mean.back())}};
  return out;
}

inline CommandOutput cmd_verify(const RunConfig& c, const std::filesystem::path& dir) {
  const auto results = run_checks(c);
  CommandOutput out;
  Json report = Json::array();
  bool numeric = false, failed = false;
  for (const auto& r : results) {
    report.push_back({{"check", r.name},
                      {"residual", std::isfinite(r.residual) ? Json(r.residual) : Json(nullptr)},
                      {"tolerance", r.tolerance},
                      {"passed", r.passed},
                      {"detail", r.detail},
                      {"error", r.error.empty() ? Json(nullptr) : Json(r.error)}});
    numeric |= !r.error.empty();
    failed |= !r.passed;
  }
  if (c.format == "json") {
    write_text(dir / "report.json", report.dump(2) + "\n");
    out.files.push_back("report.json");
  } else {
    std::string csv = "check,residual,tolerance,passed,error,detail\n";
    for (const auto& r : results)
      csv += r.name + "," + format_double(r.residual) + "," + format_double(r.tolerance) + "," +
             (r.passed ? "1" : "0") + "," + r.error + ",\"" + r.detail + "\"\n";
    write_text(dir / "report.csv", csv);
    out.files.push_back("report.csv");
  }
  out.diagnostics = {{"checks", report}};
  out.exit_code = numeric ? kNumericError : failed ? kCheckFailed : kOk;
  return out;
}

// Runs `command` and writes its manifest; returns the process exit code.
inline CommandOutput run_command(const std::string& command, const RunConfig& c) {
  const std::filesystem::path dir = c.output_path;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IOError("cannot create output directory " + dir.string() + ": " + ec.message());
  CommandOutput out;
  std::optional<std::uint64_t> seed;
  if (command == "evolve") out = cmd_evolve(c, dir);
  else if (command == "sample") out = cmd_sample(c, dir), seed = c.sample.seed;
  else if (command == "conditional") out = cmd_conditional(c, dir);
  else if (command == "sme") out = cmd_sme(c, dir), seed = c.sme.cfg.seed;
  else if (command == "verify") out = cmd_verify(c, dir);
  else throw ConfigError("unknown command '" + command + "'");
  write_manifest(dir, command, c, out, seed);
  return out;
}

}  // namespace cqed
