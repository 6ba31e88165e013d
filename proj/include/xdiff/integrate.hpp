#pragma once

// Time integration of the reduced and parent systems and the simulation
// driver that produces energy time series and snapshots.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "xdiff/energetics.hpp"
#include "xdiff/errors.hpp"
#include "xdiff/grid.hpp"
#include "xdiff/model.hpp"

namespace xdiff {

enum class Scheme { explicit_euler, imex };

inline const char* to_string(Scheme s) { return s == Scheme::imex ? "imex" : "explicit"; }

struct StepperConfig {
  Scheme scheme = Scheme::explicit_euler;
  double cfl_safety = 0.4;
  double dt_max = 1.0;
  double dt_init = 1.0;
  double tol_negative = 0.0;

  void validate() const {
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0))
      throw std::invalid_argument("StepperConfig: cfl_safety must be in (0, 1]");
    if (!(dt_max > 0.0) || !(dt_init > 0.0) || dt_init > dt_max)
      throw std::invalid_argument("StepperConfig: need 0 < dt_init <= dt_max");
    if (!(tol_negative >= 0.0)) throw std::invalid_argument("StepperConfig: tol_negative must be >= 0");
  }
};

enum class InitialKind { uniform, gaussian_bump, two_gaussians_2d };

inline const char* to_string(InitialKind k) {
  switch (k) {
    case InitialKind::uniform: return "uniform";
    case InitialKind::gaussian_bump: return "gaussian_bump";
    case InitialKind::two_gaussians_2d: return "two_gaussians_2d";
  }
  return "unknown";
}

/// baseline + amplitude * exp(-|x - center|^2 / width)
struct SpeciesProfile {
  double baseline = 0.0;
  double amplitude = 0.0;
  std::array<double, 2> center{0.0, 0.0};
  double width = 1.0;
};

struct InitialCondition {
  InitialKind kind = InitialKind::uniform;
  SpeciesProfile rho_a;
  SpeciesProfile rho_b;

  void validate(const GridSpec& grid) const {
    for (const SpeciesProfile* p : {&rho_a, &rho_b}) {
      if (!(p->baseline >= 0.0) || !(p->amplitude >= 0.0))
        throw std::invalid_argument("InitialCondition: baseline and amplitude must be >= 0");
      if (kind != InitialKind::uniform && !(p->width > 0.0))
        throw std::invalid_argument("InitialCondition: width must be positive");
    }
    if (kind == InitialKind::two_gaussians_2d && grid.dim() != 2)
      throw std::invalid_argument("InitialCondition: two_gaussians_2d needs a 2D grid");
  }

  Field evaluate(const GridSpec& grid, const SpeciesProfile& p) const {
    if (kind == InitialKind::uniform) return Field(grid, p.baseline);
    if (grid.dim() == 1)
      return Field::sample(grid, [&](double x) {
        const double dx = x - p.center[0];
        return p.baseline + p.amplitude * std::exp(-(dx * dx) / p.width);
      });
    return Field::sample(grid, [&](double x, double y) {
      const double dx = x - p.center[0], dy = y - p.center[1];
      return p.baseline + p.amplitude * std::exp(-(dx * dx + dy * dy) / p.width);
    });
  }

  SystemState evaluate(const GridSpec& grid) const {
    validate(grid);
    return {0.0, evaluate(grid, rho_a), evaluate(grid, rho_b)};
  }
};

struct FullModelConfig {
  bool enabled = false;
  double epsilon = 1.0;
};

struct RunConfig {
  GridSpec grid;
  ModelParams params;
  StepperConfig stepper;
  InitialCondition initial;
  double t_end = 1.0;
  double output_every = 1.0;
  std::vector<double> snapshot_times;
  FullModelConfig full_model;

  void validate() const {
    params.validate();
    stepper.validate();
    initial.validate(grid);
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("RunConfig: t_end must be >= 0");
    if (!(output_every > 0.0)) throw std::invalid_argument("RunConfig: output_every must be positive");
    if (t_end > 0.0 && output_every > t_end)
      throw std::invalid_argument("RunConfig: output_every must not exceed t_end");
    for (double t : snapshot_times)
      if (!(t >= 0.0 && t <= t_end)) throw std::invalid_argument("RunConfig: snapshot time outside [0, t_end]");
    if (full_model.enabled) {
      if (!(full_model.epsilon > 0.0)) throw std::invalid_argument("RunConfig: epsilon must be positive");
      if (stepper.scheme != Scheme::explicit_euler)
        throw std::invalid_argument("RunConfig: the full model only supports the explicit scheme");
    }
  }
};

// ---------------------------------------------------------------------------
// Step size

namespace detail {

inline double diffusion_dt(const GridSpec& g, double d0, double lambda, const StepperConfig& cfg) {
  const double h = g.min_spacing();
  const double dt = cfg.cfl_safety * h * h / (2.0 * g.dim() * d0 * lambda);
  return std::min(dt, cfg.dt_max);
}

}  // namespace detail

/// Forward-Euler bound with Lambda = 1 + kappa * max(rho_a, rho_b), an upper
/// bound of the larger eigenvalue 1 + kappa sqrt(rho_a rho_b) of the
/// diffusion matrix. For IMEX only the explicit cross part enters
/// (Lambda = kappa * max), and the step may reach dt_max.
inline double cfl_dt(const SystemState& s, const ModelParams& params, const StepperConfig& cfg) {
  const double rho_max = std::max({s.rho_a.max(), s.rho_b.max(), 0.0});
  const double kappa = params.kappa();
  if (cfg.scheme == Scheme::imex) {
    const double lambda = kappa * rho_max;
    if (!(lambda > 0.0)) return cfg.dt_max;
    return detail::diffusion_dt(s.rho_a.grid(), params.d0, lambda, cfg);
  }
  return detail::diffusion_dt(s.rho_a.grid(), params.d0, 1.0 + kappa * rho_max, cfg);
}

/// Same bound for the parent model, with the drift strength 2 beta g in place
/// of kappa rho (identical to cfl_dt once g = c rho).
inline double cfl_dt(const FullState& s, const ModelParams& params, const StepperConfig& cfg) {
  const double drive = std::max({s.g_a.max(), s.g_b.max(), params.c * s.rho_a.max(), params.c * s.rho_b.max(), 0.0});
  return detail::diffusion_dt(s.rho_a.grid(), params.d0, 1.0 + 2.0 * params.beta * drive, cfg);
}

// ---------------------------------------------------------------------------
// Steppers

namespace detail {

inline void check_density(const Field& f, double t, double tol_negative, const char* name) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f[i]))
      throw SolverError(SolverErrorKind::NonFinite, t, i, std::string(name) + " is not finite");
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] < -tol_negative)
      throw SolverError(SolverErrorKind::NegativeDensity, t, i,
                        std::string(name) + " = " + std::to_string(f[i]));
  }
}

inline Field axpy(const Field& x, double dt, const Field& rate) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + dt * rate[i];
  return Field::unchecked(x.grid(), std::move(out));
}

inline void require_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step: dt must be positive");
}

}  // namespace detail

/// Forward Euler on the reduced system.
inline SystemState step_explicit(const SystemState& s, double dt, const ModelParams& params,
                                 double tol_negative = 0.0) {
  detail::require_dt(dt);
  auto [ra, rb] = rhs_reduced(s, params);
  SystemState out{s.t + dt, detail::axpy(s.rho_a, dt, ra), detail::axpy(s.rho_b, dt, rb)};
  detail::check_density(out.rho_a, s.t, tol_negative, "rho_a");
  detail::check_density(out.rho_b, s.t, tol_negative, "rho_b");
  return out;
}

namespace detail {

// -d0 * kappa * mean(self) * grad(drive): the cross part of the flux alone.
inline FaceFluxes cross_only_flux(const Field& self, const Field& drive, const ModelParams& params) {
  const GridSpec& g = self.grid();
  const double kappa = params.kappa();
  FaceFluxes out(g);
  for (int a = 0; a < g.dim(); ++a) {
    const double h = g.spacing(a);
    auto dst = out.axis(a);
    for_each_face(g, a, [&](std::size_t f, std::size_t l, std::size_t r) {
      dst[f] = -params.d0 * (kappa * (0.5 * (self[l] + self[r])) * ((drive[r] - drive[l]) / h));
    });
  }
  return out;
}

// Thomas algorithm for (I - theta * Lap) x = b on a 1D Neumann grid,
// theta = dt * d0.
inline std::vector<double> solve_helmholtz_1d(std::span<const double> b, double theta, double h) {
  const std::size_t n = b.size();
  const double w = theta / (h * h);
  std::vector<double> sub(n, -w), diag(n, 1.0 + 2.0 * w), sup(n, -w), x(b.begin(), b.end());
  diag[0] = 1.0 + w;
  diag[n - 1] = 1.0 + w;
  std::vector<double> cp(n);
  cp[0] = sup[0] / diag[0];
  x[0] = x[0] / diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double m = diag[i] - sub[i] * cp[i - 1];
    cp[i] = (i + 1 < n) ? sup[i] / m : 0.0;
    x[i] = (x[i] - sub[i] * x[i - 1]) / m;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= cp[i] * x[i + 1];
  return x;
}

// Conjugate gradients for (I - theta * Lap) x = b; operator is SPD because
// the Neumann Laplacian is symmetric negative semidefinite on a uniform grid.
inline Field solve_helmholtz_cg(const Field& b, double theta, double t, double rel_tol = 1e-12,
                                std::size_t max_iter = 0) {
  const std::size_t n = b.size();
  if (max_iter == 0) max_iter = 10 * n + 100;
  auto apply = [&](const Field& u) {
    Field lap = laplacian_neumann(u);
    for (std::size_t i = 0; i < n; ++i) lap[i] = u[i] - theta * lap[i];
    return lap;
  };
  auto dot = [&](const Field& u, const Field& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += u[i] * v[i];
    return s;
  };
  Field x = b;
  Field r = apply(x);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  Field p = r;
  double rr = dot(r, r);
  const double bnorm = std::sqrt(dot(b, b));
  const double target = rel_tol * (bnorm > 0.0 ? bnorm : 1.0);
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (std::sqrt(rr) <= target) return x;
    Field ap = apply(p);
    const double alpha = rr / dot(p, ap);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  if (std::sqrt(rr) <= target) return x;
  throw SolverError(SolverErrorKind::SolverDiverged, t, SolverError::no_cell,
                    "conjugate gradients did not converge");
}

inline Field helmholtz_solve(const Field& b, double theta, double t) {
  if (b.grid().dim() == 1)
    return Field::unchecked(b.grid(), solve_helmholtz_1d(b.values(), theta, b.grid().spacing(0)));
  return solve_helmholtz_cg(b, theta, t);
}

}  // namespace detail

/// Backward Euler on d0*Lap(rho_i), forward Euler on the cross term.
inline SystemState step_imex(const SystemState& s, double dt, const ModelParams& params,
                             double tol_negative = 0.0) {
  detail::require_dt(dt);
  require_same_grid(s.rho_a, s.rho_b, "step_imex");
  const double theta = dt * params.d0;
  auto build_rhs = [&](const Field& self, const Field& drive) {
    const Field cross = negated(divergence(detail::cross_only_flux(self, drive, params)));
    return detail::axpy(self, dt, cross);
  };
  const Field ba = build_rhs(s.rho_a, s.rho_b);
  const Field bb = build_rhs(s.rho_b, s.rho_a);
  SystemState out{s.t + dt, detail::helmholtz_solve(ba, theta, s.t), detail::helmholtz_solve(bb, theta, s.t)};
  detail::check_density(out.rho_a, s.t, tol_negative, "rho_a");
  detail::check_density(out.rho_b, s.t, tol_negative, "rho_b");
  return out;
}

/// Parent model: densities by forward Euler with the current markings, then
/// markings by exact exponential relaxation towards c * rho at the new
/// densities, g <- c rho + (g - c rho) exp(-dt / epsilon).
inline FullState step_full(const FullState& s, double dt, const ModelParams& params, double tol_negative = 0.0) {
  detail::require_dt(dt);
  const FullRhs rhs = rhs_full(s, params);
  FullState out{s.t + dt, detail::axpy(s.rho_a, dt, rhs.rho_a), detail::axpy(s.rho_b, dt, rhs.rho_b), s.g_a, s.g_b,
                s.epsilon};
  detail::check_density(out.rho_a, s.t, tol_negative, "rho_a");
  detail::check_density(out.rho_b, s.t, tol_negative, "rho_b");
  const double decay = std::exp(-dt / s.epsilon);
  for (std::size_t i = 0; i < out.g_a.size(); ++i) {
    const double ta = params.c * out.rho_a[i], tb = params.c * out.rho_b[i];
    out.g_a[i] = ta + (s.g_a[i] - ta) * decay;
    out.g_b[i] = tb + (s.g_b[i] - tb) * decay;
  }
  detail::check_density(out.g_a, s.t, tol_negative, "g_a");
  detail::check_density(out.g_b, s.t, tol_negative, "g_b");
  return out;
}

/// Max-norm of the reduced right-hand side over both species.
inline double rhs_max_norm(const SystemState& s, const ModelParams& params) {
  auto [ra, rb] = rhs_reduced(s, params);
  double m = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) m = std::max({m, std::abs(ra[i]), std::abs(rb[i])});
  return m;
}

// ---------------------------------------------------------------------------
// Driver

struct Snapshot {
  double t = 0.0;
  Field rho_a;
  Field rho_b;
  std::optional<Field> g_a;
  std::optional<Field> g_b;

  SystemState state() const { return {t, rho_a, rho_b}; }
};

struct RunResult {
  std::vector<EnergyReport> series;
  std::vector<Snapshot> snapshots;
  std::size_t steps = 0;
};

namespace detail {

// Sorted, deduplicated stop times: output instants, snapshot instants, 0 and t_end.
inline std::vector<double> stop_times(const RunConfig& cfg, std::vector<double>& report_times,
                                      std::vector<double>& snap_times) {
  report_times.clear();
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.output_every;
    if (t > cfg.t_end * (1.0 + 1e-12)) break;
    report_times.push_back(std::min(t, cfg.t_end));
  }
  if (report_times.back() < cfg.t_end) report_times.push_back(cfg.t_end);
  snap_times = cfg.snapshot_times;
  snap_times.push_back(0.0);
  snap_times.push_back(cfg.t_end);
  std::sort(snap_times.begin(), snap_times.end());
  snap_times.erase(std::unique(snap_times.begin(), snap_times.end()), snap_times.end());
  std::vector<double> all = report_times;
  all.insert(all.end(), snap_times.begin(), snap_times.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

template <class State, class Step, class Dt, class Emit>
std::size_t drive(State& state, const RunConfig& cfg, Step&& step, Dt&& dt_of, Emit&& emit) {
  std::vector<double> report_times, snap_times;
  const std::vector<double> stops = stop_times(cfg, report_times, snap_times);
  auto emit_at = [&](double t) {
    const bool rep = std::binary_search(report_times.begin(), report_times.end(), t);
    const bool snap = std::binary_search(snap_times.begin(), snap_times.end(), t);
    emit(state, rep, snap);
  };
  emit_at(0.0);
  std::size_t steps = 0;
  bool first = true;
  for (std::size_t k = 1; k < stops.size(); ++k) {
    const double stop = stops[k];
    while (state.t < stop) {
      double dt = dt_of(state);
      if (first) dt = std::min(dt, cfg.stepper.dt_init);
      first = false;
      const double remaining = stop - state.t;
      const bool last = dt >= remaining;
      state = step(state, last ? remaining : dt);
      if (last) state.t = stop;
      ++steps;
    }
    emit_at(stop);
  }
  return steps;
}

}  // namespace detail

/// Integrates the reduced system from `initial` to cfg.t_end.
inline RunResult run_simulation(const RunConfig& cfg, SystemState initial) {
  cfg.validate();
  RunResult result;
  const SteadyStatePair ss = steady_state_of(initial);
  if (cfg.full_model.enabled) {
    FullState state = lift_to_full(initial, cfg.params, cfg.full_model.epsilon);
    result.steps = detail::drive(
        state, cfg,
        [&](const FullState& s, double dt) { return step_full(s, dt, cfg.params, cfg.stepper.tol_negative); },
        [&](const FullState& s) { return cfl_dt(s, cfg.params, cfg.stepper); },
        [&](const FullState& s, bool rep, bool snap) {
          if (rep) result.series.push_back(energy_report(reduce_full_to_two(s), cfg.params, ss));
          if (snap) result.snapshots.push_back({s.t, s.rho_a, s.rho_b, s.g_a, s.g_b});
        });
    return result;
  }
  const bool imex = cfg.stepper.scheme == Scheme::imex;
  SystemState state = std::move(initial);
  result.steps = detail::drive(
      state, cfg,
      [&](const SystemState& s, double dt) {
        return imex ? step_imex(s, dt, cfg.params, cfg.stepper.tol_negative)
                    : step_explicit(s, dt, cfg.params, cfg.stepper.tol_negative);
      },
      [&](const SystemState& s) { return cfl_dt(s, cfg.params, cfg.stepper); },
      [&](const SystemState& s, bool rep, bool snap) {
        if (rep) result.series.push_back(energy_report(s, cfg.params, ss));
        if (snap) result.snapshots.push_back({s.t, s.rho_a, s.rho_b, std::nullopt, std::nullopt});
      });
  return result;
}

inline RunResult run_simulation(const RunConfig& cfg) {
  cfg.validate();
  return run_simulation(cfg, cfg.initial.evaluate(cfg.grid));
}

}  // namespace xdiff
