#pragma once

// Discrete energies, dissipation rates and relative entropy.
//
// Both dissipations are face quadratures of transform-then-difference
// gradients (log rho or sqrt rho is taken pointwise, then differenced) with
// arithmetic-mean interface weights. They are instantaneous functions of the
// state and match -dH/dt of the semi-discrete flow up to O(h^2).

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "xdiff/errors.hpp"
#include "xdiff/model.hpp"

namespace xdiff {

/// Spatial means of the two densities: the constant state a run converges to.
struct SteadyStatePair {
  double rho_a_inf = 0.0;
  double rho_b_inf = 0.0;
};

inline SteadyStatePair steady_state_of(const SystemState& s) {
  const double vol = s.rho_a.grid().volume();
  return {integrate_cells(s.rho_a) / vol, integrate_cells(s.rho_b) / vol};
}

struct EnergyReport {
  double t = 0.0;
  double mass_a = 0.0;
  double mass_b = 0.0;
  double energy_h = 0.0;
  double energy_mb = 0.0;
  double diss_h = 0.0;
  double diss_mb = 0.0;
  double rel_entropy = 0.0;
  double supercritical_fraction = 0.0;
  double prod_l32 = 0.0;
  double linf_to_ss = 0.0;

  friend bool operator==(const EnergyReport&, const EnergyReport&) = default;
};

namespace detail {

// x log x with 0 log 0 = 0.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

inline double safe_log(double x) { return std::log(std::max(x, 1e-300)); }

// rho log(rho/ref) + ref - rho, written around u = rho/ref - 1 so that it
// keeps full relative accuracy close to equilibrium.
inline double bregman_log(double rho, double ref) {
  if (rho <= 0.0) return ref;
  const double u = rho / ref - 1.0;
  return ref * ((1.0 + u) * std::log1p(u) - u);
}

}  // namespace detail

/// Integral of rho_a log rho_a - rho_a + rho_b log rho_b - rho_b + kappa rho_a rho_b.
inline double energy_h(const SystemState& s, const ModelParams& params) {
  require_same_grid(s.rho_a, s.rho_b, "energy_h");
  const double kappa = params.kappa();
  double sum = 0.0;
  for (std::size_t i = 0; i < s.rho_a.size(); ++i) {
    const double a = s.rho_a[i], b = s.rho_b[i];
    sum += detail::xlogx(a) - a + detail::xlogx(b) - b + kappa * a * b;
  }
  return sum * s.rho_a.grid().cell_volume();
}

/// Maxwell-Boltzmann entropy: energy_h without the coupling term.
inline double energy_mb(const SystemState& s) {
  require_same_grid(s.rho_a, s.rho_b, "energy_mb");
  double sum = 0.0;
  for (std::size_t i = 0; i < s.rho_a.size(); ++i) {
    const double a = s.rho_a[i], b = s.rho_b[i];
    sum += detail::xlogx(a) - a + detail::xlogx(b) - b;
  }
  return sum * s.rho_a.grid().cell_volume();
}

/// d0 * sum over faces of mean(rho_a) |grad(log rho_a + kappa rho_b)|^2 + (a<->b).
inline double dissipation_h(const SystemState& s, const ModelParams& params) {
  require_same_grid(s.rho_a, s.rho_b, "dissipation_h");
  const GridSpec& g = s.rho_a.grid();
  const double kappa = params.kappa();
  std::vector<double> mu_a(g.cell_count()), mu_b(g.cell_count());
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    mu_a[i] = detail::safe_log(s.rho_a[i]) + kappa * s.rho_b[i];
    mu_b[i] = detail::safe_log(s.rho_b[i]) + kappa * s.rho_a[i];
  }
  double sum = 0.0;
  for (int ax = 0; ax < g.dim(); ++ax) {
    const double h = g.spacing(ax);
    for_each_face(g, ax, [&](std::size_t, std::size_t l, std::size_t r) {
      const double ga = (mu_a[r] - mu_a[l]) / h;
      const double gb = (mu_b[r] - mu_b[l]) / h;
      const double ma = 0.5 * (s.rho_a[l] + s.rho_a[r]);
      const double mb = 0.5 * (s.rho_b[l] + s.rho_b[r]);
      sum += ma * ga * ga + mb * gb * gb;
    });
  }
  return params.d0 * sum * g.cell_volume();
}

/// 4 d0 * sum over faces of p |grad(sqrt a + sqrt b)|^2 + (1 - p)(|grad sqrt a|^2 + |grad sqrt b|^2)
/// with p = kappa * mean(sqrt a) * mean(sqrt b). Loses its sign where p > 1.
inline double dissipation_mb(const SystemState& s, const ModelParams& params) {
  require_same_grid(s.rho_a, s.rho_b, "dissipation_mb");
  const GridSpec& g = s.rho_a.grid();
  const double kappa = params.kappa();
  std::vector<double> sa(g.cell_count()), sb(g.cell_count());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    sa[i] = std::sqrt(std::max(s.rho_a[i], 0.0));
    sb[i] = std::sqrt(std::max(s.rho_b[i], 0.0));
  }
  double sum = 0.0;
  for (int ax = 0; ax < g.dim(); ++ax) {
    const double h = g.spacing(ax);
    for_each_face(g, ax, [&](std::size_t, std::size_t l, std::size_t r) {
      const double ga = (sa[r] - sa[l]) / h;
      const double gb = (sb[r] - sb[l]) / h;
      const double p = kappa * (0.5 * (sa[l] + sa[r])) * (0.5 * (sb[l] + sb[r]));
      sum += p * (ga + gb) * (ga + gb) + (1.0 - p) * (ga * ga + gb * gb);
    });
  }
  return 4.0 * params.d0 * sum * g.cell_volume();
}

/// Integral of the Bregman divergence of h around the constant state `ss`.
inline double relative_entropy(const SystemState& s, SteadyStatePair ss, const ModelParams& params) {
  require_same_grid(s.rho_a, s.rho_b, "relative_entropy");
  if (!(ss.rho_a_inf > 0.0) || !(ss.rho_b_inf > 0.0))
    throw AnalysisError(AnalysisError::Kind::NonpositiveSteadyState,
                        "relative_entropy: steady state components must be positive");
  const double kappa = params.kappa();
  double sum = 0.0;
  for (std::size_t i = 0; i < s.rho_a.size(); ++i) {
    const double a = s.rho_a[i], b = s.rho_b[i];
    sum += detail::bregman_log(a, ss.rho_a_inf) + detail::bregman_log(b, ss.rho_b_inf) +
           kappa * (a - ss.rho_a_inf) * (b - ss.rho_b_inf);
  }
  return sum * s.rho_a.grid().cell_volume();
}

struct AprioriMonitors {
  double prod_l32 = 0.0;   // (int (rho_a rho_b)^{3/2})^{2/3}
  double mass_logs = 0.0;  // int |rho_a log rho_a| + |rho_b log rho_b|
};

inline AprioriMonitors apriori_monitors(const SystemState& s) {
  require_same_grid(s.rho_a, s.rho_b, "apriori_monitors");
  double p = 0.0, m = 0.0;
  for (std::size_t i = 0; i < s.rho_a.size(); ++i) {
    const double a = std::max(s.rho_a[i], 0.0), b = std::max(s.rho_b[i], 0.0);
    const double ab = a * b;
    p += ab * std::sqrt(ab);
    m += std::abs(detail::xlogx(a)) + std::abs(detail::xlogx(b));
  }
  const double vol = s.rho_a.grid().cell_volume();
  return {std::cbrt(p * vol * p * vol), m * vol};
}

inline double linf_distance(const SystemState& s, SteadyStatePair ss) {
  double d = 0.0;
  for (std::size_t i = 0; i < s.rho_a.size(); ++i) {
    d = std::max(d, std::abs(s.rho_a[i] - ss.rho_a_inf));
    d = std::max(d, std::abs(s.rho_b[i] - ss.rho_b_inf));
  }
  return d;
}

/// All diagnostics at one instant. `ss` is the reference constant state
/// (normally the means of the initial data).
inline EnergyReport energy_report(const SystemState& s, const ModelParams& params, SteadyStatePair ss) {
  EnergyReport r;
  r.t = s.t;
  r.mass_a = integrate_cells(s.rho_a);
  r.mass_b = integrate_cells(s.rho_b);
  r.energy_h = energy_h(s, params);
  r.energy_mb = energy_mb(s);
  r.diss_h = dissipation_h(s, params);
  r.diss_mb = dissipation_mb(s, params);
  r.rel_entropy = (ss.rho_a_inf > 0.0 && ss.rho_b_inf > 0.0) ? relative_entropy(s, ss, params)
                                                                : std::numeric_limits<double>::quiet_NaN();
  r.supercritical_fraction = supercritical_fraction(s, params);
  r.prod_l32 = apriori_monitors(s).prod_l32;
  r.linf_to_ss = linf_distance(s, ss);
  return r;
}

}  // namespace xdiff
