// Command-line front end: run, export, list, check.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "picard/config.hpp"
#include "picard/error.hpp"
#include "picard/parallel.hpp"
#include "picard/problems.hpp"
#include "picard/run.hpp"

namespace {

int report_error(const picard::Error& e) {
  std::cerr << "error[" << picard::to_string(e.code()) << "]: " << e.what() << "\n";
  return picard::exit_code_for(e);
}

std::string output_dir(const std::string& flag, const picard::RunConfig& cfg) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PICARD_OUT_DIR"); env && *env) return env;
  return cfg.output.dir;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Picard iteration for heat- and wave-type initial value problems"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  std::string out_flag;
  bool quiet = false;
  app.add_option("--threads", threads, "worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out_flag, "output directory (overrides PICARD_OUT_DIR and the config)");
  app.add_flag("--quiet", quiet, "suppress the summary on stdout");

  std::string run_path;
  auto* run_cmd = app.add_subcommand("run", "run a configuration");
  run_cmd->add_option("config", run_path, "config file")->required();

  std::string export_id;
  std::string export_path;
  auto* export_cmd = app.add_subcommand("export", "write a builtin problem as a config file");
  export_cmd->add_option("builtin", export_id, "builtin id")->required();
  export_cmd->add_option("path", export_path, "destination file")->required();

  auto* list_cmd = app.add_subcommand("list", "list builtin problems");

  std::string check_path;
  auto* check_cmd = app.add_subcommand("check", "validate a configuration without running it");
  check_cmd->add_option("config", check_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : picard::exit_config;
  }
  picard::set_thread_count(threads);

  try {
    if (*list_cmd) {
      for (const auto& id : picard::builtin_ids()) std::cout << id << "\n";
      return 0;
    }
    if (*export_cmd) {
      picard::export_builtin(export_id, export_path);
      if (!quiet) std::cout << "wrote " << export_path << "\n";
      return 0;
    }
    if (*check_cmd) {
      const auto cfg = picard::load_config(check_path);
      const auto problem = picard::build_problem(cfg.problem, cfg.grid.ghost);
      picard::make_grid(problem.domain, cfg.grid.n_t, cfg.grid.n_x);
      if (problem.exact) {
        const auto rep = picard::verify_exact(problem);
        if (!quiet) {
          std::printf("exact solution residual: pde %.3g, initial %.3g\n", rep.pde_residual, rep.initial_residual);
        }
        if (!rep.ok) {
          std::cerr << "warning: exact solution check failed: " << rep.failure << "\n";
        }
      }
      if (!quiet) std::cout << "ok\n";
      return 0;
    }
    if (*run_cmd) {
      const auto cfg = picard::load_config(run_path);
      const std::string dir = output_dir(out_flag, cfg);
      const auto outcome = picard::run(cfg, dir);
      {
        std::ofstream timing(std::filesystem::path(dir) / "timing.json", std::ios::binary);
        timing << "{\n  \"wall_seconds\": " << outcome.wall_seconds << ",\n  \"threads\": "
               << picard::thread_count() << "\n}\n";
      }
      if (!quiet) {
        const auto& last = outcome.iterations.history.back();
        std::printf("%s: stop=%s p=%d increment=%.3e", cfg.problem.name.c_str(),
                    picard::to_string(outcome.iterations.stop), last.p,
                    static_cast<double>(last.increment(cfg.run.norm)));
        if (last.error_vs_exact) std::printf(" error=%.3e", static_cast<double>(*last.error_vs_exact));
        std::printf(" delta1=%.6g gamma=%.6g (%.2fs)\n", outcome.setup.constants.delta1,
                    outcome.setup.constants.gamma, outcome.wall_seconds);
        for (const auto& w : outcome.report["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
        if (outcome.report.contains("diagnostic")) {
          std::cerr << "diagnostic: " << outcome.report["diagnostic"].get<std::string>() << "\n";
        }
      }
      return outcome.exit_code;
    }
  } catch (const picard::Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return picard::exit_config;
  }
  return 0;
}
