#pragma once

// Single runs, studies and their output files.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "apdlr/config.hpp"
#include "apdlr/diagnostics.hpp"
#include "apdlr/discretization.hpp"
#include "apdlr/error.hpp"
#include "apdlr/integrator.hpp"
#include "apdlr/problems.hpp"
#include "apdlr/reference.hpp"
#include "apdlr/velocity.hpp"

namespace apdlr {

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace detail

struct Setup {
  ProblemSpec problem;
  Discretization disc;
};

inline Setup make_setup(const RunConfig& cfg) {
  ProblemSpec p = make_problem(cfg.problem, cfg.eps, cfg.data_dir);
  VelocitySet vel = load_velocity_set(cfg.nv, cfg.data_dir);
  Discretization d = Discretization::from_problem(p, cfg.nx, cfg.ny, std::move(vel));
  return {std::move(p), std::move(d)};
}

struct CompareSample {
  long step;
  double time;
  double diff;
};

struct RunOutcome {
  RunRecord record;
  State state;
  double dt = 0.0;
  long steps = 0;
  std::optional<double> exact_error;  // vs the exact density at the final time
  std::vector<CompareSample> compare;
  std::optional<Vector> reference_rho;
  double reference_seconds = 0.0;
};

/// Writes one density family as an Ny x Nx table with a metadata header line.
inline void write_density(const std::filesystem::path& path, const StaggeredGrid& g, const Vector& rho, Family fam,
                          long step, double time) {
  auto out = detail::open_out(path);
  out << "# a=" << detail::fmt(g.a()) << " b=" << detail::fmt(g.b()) << " c=" << detail::fmt(g.c())
      << " d=" << detail::fmt(g.d()) << " Nx=" << g.nx() << " Ny=" << g.ny() << " family=" << to_string(fam)
      << " step=" << step << " time=" << detail::fmt(time) << "\n";
  const Index base = fam == Family::center ? g.family_size() : 0;
  for (int l = 0; l < g.ny(); ++l) {
    for (int k = 0; k < g.nx(); ++k) out << (k ? "," : "") << detail::fmt(rho[base + g.index(k, l)]);
    out << "\n";
  }
}

inline void write_densities(const std::filesystem::path& dir, const StaggeredGrid& g, const Vector& rho, long step,
                            double time) {
  char name[64];
  for (Family f : {Family::vertex, Family::center}) {
    std::snprintf(name, sizeof name, "density_%s_%06ld.csv", to_string(f), step);
    write_density(dir / name, g, rho, f, step, time);
  }
}

struct RunOptions {
  bool write_files = true;
  std::function<void(const StepRecord&)> on_step;
};

/// Advances the low-rank scheme to t_end, optionally alongside a reference solver.
inline RunOutcome run_lowrank(const RunConfig& cfg, const RunOptions& opt = {}) {
  const Setup setup = make_setup(cfg);
  const Discretization& d = setup.disc;
  const StaggeredGrid& g = d.grid();
  if (cfg.compare == CompareMode::diffusion) (void)diffusion_operator(d, Vector::Zero(g.macro_size()));

  RunOutcome out;
  out.dt = select_dt(cfg.scheme, d);
  const std::vector<double> schedule = step_schedule(cfg.scheme.t_end, out.dt);
  if (opt.write_files) std::filesystem::create_directories(cfg.output_dir);

  auto make_record = [&](long step, double time, double dt, const State& s) {
    StepRecord r;
    r.step = step;
    r.time = time;
    r.dt = dt;
    r.singular_values = singular_values(s.F.S);
    r.effective_rank = effective_rank(r.singular_values);
    r.mass = family_mass(g, s.rho);
    r.orthonormality = orthonormality_defect(g, d.velocity(), s.F);
    return r;
  };

  const auto wall0 = std::chrono::steady_clock::now();
  State state = initial_state(setup.problem, d, cfg.rank, cfg.augment, cfg.seed);
  out.record.initial_mass = family_mass(g, state.rho);
  out.record.steps.push_back(make_record(0, 0.0, 0.0, state));
  if (opt.on_step) opt.on_step(out.record.steps.back());

  std::optional<FullTensorState> full;
  std::optional<Vector> diff_rho, lag;
  if (cfg.compare == CompareMode::full_tensor) full = full_tensor_initial(setup.problem, d);
  if (cfg.compare == CompareMode::diffusion && cfg.scheme.order == 1) diff_rho = state.rho;
  double ref_seconds = 0.0;

  if (opt.write_files && cfg.snapshot_every > 0) write_densities(cfg.output_dir, g, state.rho, 0, 0.0);

  double t = 0.0;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const long step = long(i) + 1;
    const double dt = schedule[i];
    try {
      state = advance(d, state, cfg.scheme, dt, cfg.seed);
    } catch (const NumericalError& e) {
      throw NumericalError("step " + std::to_string(step) + " (t = " + detail::fmt(t) + "): " + e.what());
    }
    t = (i + 1 == schedule.size()) ? cfg.scheme.t_end : t + dt;
    state.t = t;

    const auto ref0 = std::chrono::steady_clock::now();
    std::optional<double> diff;
    if (full) {
      *full = full_tensor_step(d, *full, dt);
      diff = l2_error_centers(g, state.rho, full->rho);
    } else if (cfg.compare == CompareMode::diffusion) {
      if (cfg.scheme.order == 1) {
        *diff_rho = diffusion_step(d, *diff_rho, t - dt, dt, DiffusionStage::euler);
      } else if (!diff_rho) {
        // the second-order limit holds from the second step on
        diff_rho = state.rho;
        lag = state.rho_half;
      } else {
        Vector half;
        *diff_rho = diffusion_step(d, *diff_rho, t - dt, dt, DiffusionStage::rk2, lag, &half);
        lag = std::move(half);
      }
      diff = l2_error_centers(g, state.rho, *diff_rho);
    }
    ref_seconds += detail::seconds_since(ref0);
    if (diff) out.compare.push_back({step, t, *diff});

    out.record.steps.push_back(make_record(step, t, dt, state));
    if (opt.on_step) opt.on_step(out.record.steps.back());
    if (opt.write_files && cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0 && step != long(schedule.size()))
      write_densities(cfg.output_dir, g, state.rho, step, t);
  }
  out.record.wall_seconds = detail::seconds_since(wall0) - ref_seconds;
  out.reference_seconds = ref_seconds;
  out.steps = long(schedule.size());
  if (full) out.reference_rho = full->rho;
  if (diff_rho) out.reference_rho = *diff_rho;

  if (setup.problem.exact_density) {
    const auto& ex = setup.problem.exact_density;
    const Vector exact = g.sample_macro([&](double x, double y) { return ex(t, x, y); });
    out.exact_error = l2_error_centers(g, state.rho, exact);
  }
  out.state = std::move(state);

  if (opt.write_files) {
    write_densities(cfg.output_dir, g, out.state.rho, out.steps, t);
    {
      auto sv = detail::open_out(cfg.output_dir / "singular_values.csv");
      sv << "step,time,dt,eff_rank,mass_vertex,mass_center";
      for (int j = 1; j <= cfg.rank; ++j) sv << ",s" << j;
      sv << "\n";
      for (const auto& r : out.record.steps) {
        sv << r.step << "," << detail::fmt(r.time) << "," << detail::fmt(r.dt) << "," << r.effective_rank << ","
           << detail::fmt(r.mass.vertex) << "," << detail::fmt(r.mass.center);
        for (Index j = 0; j < r.singular_values.size(); ++j) sv << "," << detail::fmt(r.singular_values[j]);
        sv << "\n";
      }
    }
    if (!out.compare.empty()) {
      auto cmp = detail::open_out(cfg.output_dir / "compare.csv");
      cmp << "step,time,diff\n";
      for (const auto& c : out.compare) cmp << c.step << "," << detail::fmt(c.time) << "," << detail::fmt(c.diff) << "\n";
    }
    {
      auto sum = detail::open_out(cfg.output_dir / "summary.txt");
      sum << cfg.echo();
      sum << "dt = " << detail::fmt(out.dt) << "\n";
      sum << "steps = " << out.steps << "\n";
      sum << "t_final = " << detail::fmt(t) << "\n";
      sum << "effective_rank = " << out.record.steps.back().effective_rank << "\n";
      sum << "mass_drift = " << detail::fmt(out.record.max_mass_drift()) << "\n";
      sum << "orthonormality_defect = " << detail::fmt(out.record.max_orthonormality_defect()) << "\n";
      if (out.exact_error) sum << "error_exact = " << detail::fmt(*out.exact_error) << "\n";
      if (!out.compare.empty()) sum << "diff_reference = " << detail::fmt(out.compare.back().diff) << "\n";
    }
    {
      auto tm = detail::open_out(cfg.output_dir / "timing.txt");
      tm << "lowrank_seconds = " << detail::fmt(out.record.wall_seconds) << "\n";
      if (cfg.compare != CompareMode::none) tm << "reference_seconds = " << detail::fmt(ref_seconds) << "\n";
    }
  }
  return out;
}

/// Full-tensor run to t_end with the same step schedule as the low-rank run.
inline FullTensorState run_full_tensor(const RunConfig& cfg, double* seconds = nullptr) {
  const Setup setup = make_setup(cfg);
  const Discretization& d = setup.disc;
  const auto schedule = step_schedule(cfg.scheme.t_end, select_dt(cfg.scheme, d));
  const auto t0 = std::chrono::steady_clock::now();
  FullTensorState s = full_tensor_initial(setup.problem, d);
  for (double dt : schedule) s = full_tensor_step(d, s, dt);
  s.t = cfg.scheme.t_end;
  if (seconds) *seconds = detail::seconds_since(t0);
  return s;
}

struct ConvergenceRow {
  double eps;
  int nx;
  double h, dt;
  long steps;
  double error;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  std::vector<std::pair<double, double>> slopes;  // (eps, slope)
};

inline ConvergenceResult converge(const RunConfig& base, bool write_files = true) {
  ConvergenceResult res;
  for (double eps : base.study_eps) {
    std::vector<double> errs, hs;
    const ProblemSpec p = make_problem(base.problem, eps, base.data_dir);
    for (int nx : base.study_grids) {
      RunConfig cfg = base;
      cfg.eps = eps;
      cfg.nx = cfg.ny = nx;
      cfg.compare = CompareMode::none;
      const RunOutcome o = run_lowrank(cfg, {false, {}});
      if (!o.exact_error) throw ValidationError("converge needs a problem with an exact density, got " + cfg.problem);
      const double h = (p.b - p.a) / nx;
      res.rows.push_back({eps, nx, h, o.dt, o.steps, *o.exact_error});
      errs.push_back(*o.exact_error);
      hs.push_back(h);
    }
    res.slopes.emplace_back(eps, errs.size() >= 3 ? convergence_slope(errs, hs) : 0.0);
  }
  if (write_files) {
    std::filesystem::create_directories(base.output_dir);
    auto out = detail::open_out(base.output_dir / "converge.csv");
    out << "eps,nx,h,dt,steps,error\n";
    for (const auto& r : res.rows)
      out << detail::fmt(r.eps) << "," << r.nx << "," << detail::fmt(r.h) << "," << detail::fmt(r.dt) << ","
          << r.steps << "," << detail::fmt(r.error) << "\n";
    auto sum = detail::open_out(base.output_dir / "summary.txt");
    sum << base.echo();
    for (const auto& [eps, slope] : res.slopes) sum << "slope[eps=" << detail::fmt(eps) << "] = " << detail::fmt(slope) << "\n";
  }
  return res;
}

struct RankSweepRow {
  int rank;
  double diff;
  int effective_rank;
  double seconds;
};

struct RankSweepResult {
  std::vector<RankSweepRow> rows;
  double full_seconds = 0.0;
};

inline RankSweepResult rank_sweep(const RunConfig& base, bool write_files = true) {
  RankSweepResult res;
  for (int r : base.study_ranks)
    if (r > base.nv) throw ValidationError("study.ranks entry " + std::to_string(r) + " exceeds velocity.n");
  const FullTensorState full = run_full_tensor(base, &res.full_seconds);
  const StaggeredGrid g = make_setup(base).disc.grid();
  for (int r : base.study_ranks) {
    RunConfig cfg = base;
    cfg.rank = r;
    cfg.compare = CompareMode::none;
    const RunOutcome o = run_lowrank(cfg, {false, {}});
    res.rows.push_back({r, l2_error_centers(g, o.state.rho, full.rho), o.record.steps.back().effective_rank,
                        o.record.wall_seconds});
  }
  if (write_files) {
    std::filesystem::create_directories(base.output_dir);
    auto out = detail::open_out(base.output_dir / "rank_sweep.csv");
    out << "rank,diff,eff_rank\n";
    for (const auto& r : res.rows) out << r.rank << "," << detail::fmt(r.diff) << "," << r.effective_rank << "\n";
    auto sum = detail::open_out(base.output_dir / "summary.txt");
    sum << base.echo();
    auto tm = detail::open_out(base.output_dir / "timing.txt");
    tm << "full_tensor_seconds = " << detail::fmt(res.full_seconds) << "\n";
    for (const auto& r : res.rows) tm << "rank_" << r.rank << "_seconds = " << detail::fmt(r.seconds) << "\n";
  }
  return res;
}

}  // namespace apdlr
