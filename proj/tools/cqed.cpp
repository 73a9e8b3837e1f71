// cqed: command-line driver. Exit codes: 0 success, 1 check failure,
// 2 configuration/IO error, 3 numeric or truncation error.

#include <CLI11.hpp>

#include <iostream>

#include <cqed/commands.hpp>

int main(int argc, char** argv) {
  using namespace cqed;
  CLI::App app{"Driven Jaynes-Cummings photodetection: evolution, sampling, conditional states, homodyne SME"};
  app.require_subcommand(1);

  std::string config_path, output_dir, format;
  std::uint64_t seed = 0;
  for (const char* name : {"verify", "evolve", "sample", "conditional", "sme"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--output", output_dir, "output directory (overrides output.path)");
    sub->add_option("--seed", seed, "RNG seed (overrides sample.seed / sme.seed)");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (sub->count("--output")) cfg.output_path = output_dir;
    if (sub->count("--format")) cfg.format = format;
    if (sub->count("--seed")) cfg.sample.seed = cfg.sme.cfg.seed = seed;
    const CommandOutput out = run_command(command, cfg);
    if (command == "verify") {
      for (const auto& r : out.diagnostics["checks"]) {
        std::cout << (r["passed"].get<bool>() ? "PASS " : "FAIL ") << r["check"].get<std::string>();
        if (!r["residual"].is_null()) std::cout << " residual=" << r["residual"].get<double>();
        std::cout << " tol=" << r["tolerance"].get<double>();
        if (!r["detail"].get<std::string>().empty()) std::cout << " " << r["detail"].get<std::string>();
        std::cout << "\n";
      }
    }
    for (const auto& f : out.files) std::cout << "wrote " << (std::filesystem::path(cfg.output_path) / f).string() << "\n";
    return out.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IOError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
}
