// Command-line driver: single runs and the convergence, rank and AP studies.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "apdlr/apdlr.hpp"

namespace {

enum Exit { ok = 0, other = 1, validation = 2, numerical = 3 };

struct Options {
  std::string config_file;
  std::map<std::string, std::string> values;
};

void add_config_options(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", opt.config_file, "key = value config file; flags override it");
  for (const auto& k : apdlr::config_keys()) cmd->add_option(std::string("--") + k.key, opt.values[k.key], k.help);
}

apdlr::RunConfig resolve(const Options& opt) {
  apdlr::ConfigMap merged;
  if (!opt.config_file.empty()) merged = apdlr::load_config(opt.config_file);
  for (const auto& [k, v] : opt.values)
    if (!v.empty()) merged[k] = v;
  return apdlr::RunConfig::from_map(merged);
}

void print_run(const apdlr::RunConfig& cfg, const apdlr::RunOutcome& o) {
  std::printf("%s: Nx=%d n=%d r=%d eps=%g order=%d dt=%.6g steps=%ld\n", cfg.problem.c_str(), cfg.nx, cfg.nv,
              cfg.rank, cfg.eps.value_or(0.0), cfg.scheme.order, o.dt, o.steps);
  std::printf("  effective rank %d, mass drift %.3e, orthonormality %.3e, %.2f s\n",
              o.record.steps.back().effective_rank, o.record.max_mass_drift(), o.record.max_orthonormality_defect(),
              o.record.wall_seconds);
  if (o.exact_error) std::printf("  error vs exact density %.6e\n", *o.exact_error);
  if (!o.compare.empty())
    std::printf("  diff vs %s %.6e (reference %.2f s)\n", apdlr::to_string(cfg.compare), o.compare.back().diff,
                o.reference_seconds);
  std::printf("  output in %s\n", cfg.output_dir.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymptotic-preserving dynamical low-rank transport solver"};
  app.require_subcommand(1);

  Options run_opt, conv_opt, sweep_opt, diff_opt, full_opt;
  auto* run = app.add_subcommand("run", "single run of a catalog problem");
  auto* conv = app.add_subcommand("converge", "grid refinement study against the exact density");
  auto* sweep = app.add_subcommand("rank-sweep", "low-rank vs full tensor for a list of ranks");
  auto* diff = app.add_subcommand("compare-diffusion", "low-rank run alongside the diffusion limit scheme");
  auto* full = app.add_subcommand("compare-full", "low-rank run alongside the full-tensor scheme");
  add_config_options(run, run_opt);
  add_config_options(conv, conv_opt);
  add_config_options(sweep, sweep_opt);
  add_config_options(diff, diff_opt);
  add_config_options(full, full_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto cfg = resolve(run_opt);
      print_run(cfg, apdlr::run_lowrank(cfg));
    } else if (diff->parsed() || full->parsed()) {
      auto cfg = resolve(diff->parsed() ? diff_opt : full_opt);
      cfg.compare = diff->parsed() ? apdlr::CompareMode::diffusion : apdlr::CompareMode::full_tensor;
      print_run(cfg, apdlr::run_lowrank(cfg));
    } else if (conv->parsed()) {
      const auto cfg = resolve(conv_opt);
      const auto res = apdlr::converge(cfg);
      std::printf("%-10s %6s %12s %12s %14s\n", "eps", "Nx", "h", "dt", "error");
      for (const auto& r : res.rows)
        std::printf("%-10g %6d %12.4e %12.4e %14.6e\n", r.eps, r.nx, r.h, r.dt, r.error);
      for (const auto& [eps, slope] : res.slopes) std::printf("slope eps=%g: %.3f\n", eps, slope);
    } else if (sweep->parsed()) {
      const auto cfg = resolve(sweep_opt);
      const auto res = apdlr::rank_sweep(cfg);
      std::printf("full tensor: %.2f s\n", res.full_seconds);
      std::printf("%6s %14s %9s %10s\n", "rank", "diff", "eff_rank", "seconds");
      for (const auto& r : res.rows) std::printf("%6d %14.6e %9d %10.2f\n", r.rank, r.diff, r.effective_rank, r.seconds);
    }
  } catch (const apdlr::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return validation;
  } catch (const apdlr::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return validation;
  } catch (const apdlr::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return other;
  }
  return ok;
}
