#pragma once

// Linear stability of uniform states and steady-state diagnostics.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "xdiff/energetics.hpp"
#include "xdiff/errors.hpp"
#include "xdiff/integrate.hpp"

namespace xdiff {

struct DispersionPoint {
  double k = 0.0;
  double alpha_plus = 0.0;
  double alpha_minus = 0.0;
};

/// Roots of (d0 k^2 + alpha)^2 - (d0 k^2 kappa)^2 rho_a rho_b = 0, i.e.
/// alpha = d0 k^2 (-1 +- kappa sqrt(rho_a rho_b)).
inline DispersionPoint growth_rates(double k, SteadyStatePair rho_bar, const ModelParams& params) {
  if (!(k >= 0.0) || !(rho_bar.rho_a_inf >= 0.0) || !(rho_bar.rho_b_inf >= 0.0))
    throw std::invalid_argument("growth_rates: k and mean densities must be >= 0");
  const double s = params.kappa() * std::sqrt(rho_bar.rho_a_inf * rho_bar.rho_b_inf);
  const double base = k * k * params.d0;
  return {k, base * (-1.0 + s), base * (-1.0 - s)};
}

/// Critical beta*c below which the uniform state is linearly stable.
inline double stability_threshold(SteadyStatePair rho_bar) {
  if (!(rho_bar.rho_a_inf > 0.0) || !(rho_bar.rho_b_inf > 0.0))
    throw AnalysisError(AnalysisError::Kind::ZeroMean, "stability_threshold: mean densities must be positive");
  return 1.0 / (2.0 * std::sqrt(rho_bar.rho_a_inf * rho_bar.rho_b_inf));
}

/// Wavenumbers of the Neumann cosine modes n*pi/L, n = 1..n_max. In 2D the
/// magnitudes |(n pi/L_x, m pi/L_y)| over 0 <= n, m <= n_max without (0, 0),
/// sorted and merged within 1e-12.
inline std::vector<double> neumann_wavenumbers(const GridSpec& grid, int n_max) {
  if (n_max < 1) throw std::invalid_argument("neumann_wavenumbers: n_max must be >= 1");
  std::vector<double> ks;
  const double pi = std::numbers::pi;
  if (grid.dim() == 1) {
    for (int n = 1; n <= n_max; ++n) ks.push_back(n * pi / grid.length(0));
    return ks;
  }
  for (int n = 0; n <= n_max; ++n)
    for (int m = 0; m <= n_max; ++m) {
      if (n == 0 && m == 0) continue;
      const double kx = n * pi / grid.length(0), ky = m * pi / grid.length(1);
      ks.push_back(std::sqrt(kx * kx + ky * ky));
    }
  std::sort(ks.begin(), ks.end());
  std::vector<double> out;
  for (double k : ks)
    if (out.empty() || k - out.back() > 1e-12) out.push_back(k);
  return out;
}

inline SteadyStatePair steady_state_of(const InitialCondition& ic, const GridSpec& grid) {
  return steady_state_of(ic.evaluate(grid));
}

/// Volume-weighted projection of rho_a - mean(rho_a) on cos(k (x - x_min)).
inline double mode_projection(const Field& rho, double k) {
  const GridSpec& g = rho.grid();
  const double mean = integrate_cells(rho) / g.volume();
  const double x0 = -0.5 * g.length(0);
  double s = 0.0;
  for (std::size_t c = 0; c < rho.size(); ++c) {
    const double x = g.center(0, g.index_along(c, 0));
    s += (rho[c] - mean) * std::cos(k * (x - x0));
  }
  return s * g.cell_volume();
}

struct GrowthWindow {
  double t0 = 0.0;
  double t1 = 0.0;
};

/// Least-squares slope of log|projection| over the snapshots with t in the
/// window. Without a window, uses the earliest contiguous run of snapshots whose
/// projection stays within [1e-12, 1e-2 * baseline].
inline double measure_growth_rate(std::span<const Snapshot> run, double k,
                                  std::optional<GrowthWindow> window = std::nullopt) {
  const bool silent = std::all_of(run.begin(), run.end(),
                                  [&](const Snapshot& s) { return std::abs(mode_projection(s.rho_a, k)) < 1e-13; });
  if (silent && !run.empty())
    throw AnalysisError(AnalysisError::Kind::SignalBelowNoise, "measure_growth_rate: projection below 1e-13");
  std::vector<std::pair<double, double>> pts;
  if (window) {
    for (const Snapshot& s : run)
      if (s.t >= window->t0 && s.t <= window->t1) pts.emplace_back(s.t, mode_projection(s.rho_a, k));
  } else {
    for (const Snapshot& s : run) {
      const double p = mode_projection(s.rho_a, k);
      const double baseline = integrate_cells(s.rho_a) / s.rho_a.grid().volume();
      const double amp = std::abs(p) * 2.0 / s.rho_a.grid().volume();
      if (amp >= 1e-12 && amp <= 1e-2 * baseline) {
        pts.emplace_back(s.t, p);
      } else if (!pts.empty()) {
        break;
      }
    }
  }
  if (pts.size() < 5)
    throw AnalysisError(AnalysisError::Kind::WindowTooShort, "measure_growth_rate: fewer than 5 samples in window");
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (auto [t, p] : pts) {
    if (!(std::abs(p) >= 1e-13))
      throw AnalysisError(AnalysisError::Kind::SignalBelowNoise, "measure_growth_rate: projection below 1e-13");
    const double y = std::log(std::abs(p));
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double n = static_cast<double>(pts.size());
  return (n * sty - st * sy) / (n * stt - st * st);
}

struct FlatnessResult {
  bool flat = false;
  double spread_a = 0.0;
  double spread_b = 0.0;
};

inline FlatnessResult flatness_check(const SystemState& s, double tol) {
  const double sa = s.rho_a.max() - s.rho_a.min();
  const double sb = s.rho_b.max() - s.rho_b.min();
  return {sa <= tol && sb <= tol, sa, sb};
}

}  // namespace xdiff
