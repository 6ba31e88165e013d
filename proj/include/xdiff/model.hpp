#pragma once

// Parameters, states and right-hand sides of the two-species cross-diffusion
// system and its four-equation parent model with marking densities.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "xdiff/grid.hpp"

namespace xdiff {

enum class Scaling { physical, scaled };

inline const char* to_string(Scaling s) { return s == Scaling::scaled ? "scaled" : "physical"; }

/// beta: marking-avoidance strength, c: marking production rate, d0: diffusion
/// prefactor. In scaled mode 2*beta*c == 1 and d0 == 1.
struct ModelParams {
  double beta = 0.5;
  double c = 1.0;
  double d0 = 0.25;
  Scaling scaling = Scaling::physical;

  static ModelParams physical(double beta, double c, double d0 = 0.25) {
    ModelParams p{beta, c, d0, Scaling::physical};
    p.validate();
    return p;
  }

  /// Scaled convention; beta is derived from c so that 2*beta*c = 1.
  static ModelParams scaled(double c = 1.0) {
    ModelParams p{0.5 / c, c, 1.0, Scaling::scaled};
    p.validate();
    return p;
  }

  /// Cross-diffusion coupling 2*beta*c.
  double kappa() const noexcept { return scaling == Scaling::scaled ? 1.0 : 2.0 * beta * c; }

  void validate() const {
    if (!(beta > 0.0) || !(c > 0.0) || !(d0 > 0.0) || !std::isfinite(beta) || !std::isfinite(c) ||
        !std::isfinite(d0))
      throw std::invalid_argument("ModelParams: beta, c, d0 must be positive and finite");
    if (scaling == Scaling::scaled) {
      if (std::abs(2.0 * beta * c - 1.0) > 1e-12)
        throw std::invalid_argument("ModelParams: scaled mode requires 2*beta*c = 1");
      if (d0 != 1.0) throw std::invalid_argument("ModelParams: scaled mode requires d0 = 1");
    }
  }
};

struct SystemState {
  double t = 0.0;
  Field rho_a;
  Field rho_b;
};

/// Densities plus marking fields; epsilon is the marking relaxation time
/// (epsilon = 1 is the original parent model).
struct FullState {
  double t = 0.0;
  Field rho_a;
  Field rho_b;
  Field g_a;
  Field g_b;
  double epsilon = 1.0;
};

/// Face flux -d0 * (grad(self) + coupling * mean(self) * grad(drive)).
/// `coupling` is kappa = 2*beta*c for the reduced model and 2*beta for the
/// parent model (where `drive` is the opposing marking field).
inline FaceFluxes coupled_flux(const Field& self, const Field& drive, double coupling, double d0) {
  require_same_grid(self, drive, "cross_flux");
  const GridSpec& g = self.grid();
  FaceFluxes out(g);
  for (int a = 0; a < g.dim(); ++a) {
    const double h = g.spacing(a);
    auto dst = out.axis(a);
    for_each_face(g, a, [&](std::size_t f, std::size_t l, std::size_t r) {
      const double grad_self = (self[r] - self[l]) / h;
      const double grad_drive = (drive[r] - drive[l]) / h;
      const double mean_self = 0.5 * (self[l] + self[r]);
      dst[f] = -d0 * (grad_self + coupling * mean_self * grad_drive);
    });
  }
  return out;
}

inline FaceFluxes cross_flux(const Field& rho_self, const Field& drive, const ModelParams& params) {
  return coupled_flux(rho_self, drive, params.kappa(), params.d0);
}

inline Field negated(Field f) {
  for (double& v : f.values()) v = -v;
  return f;
}

/// Time derivative of (rho_a, rho_b): -div of the cross fluxes.
inline std::pair<Field, Field> rhs_reduced(const SystemState& s, const ModelParams& params) {
  require_same_grid(s.rho_a, s.rho_b, "rhs_reduced");
  return {negated(divergence(cross_flux(s.rho_a, s.rho_b, params))),
          negated(divergence(cross_flux(s.rho_b, s.rho_a, params)))};
}

struct FullRhs {
  Field rho_a, rho_b, g_a, g_b;
};

inline FullRhs rhs_full(const FullState& s, const ModelParams& params) {
  require_same_grid(s.rho_a, s.rho_b, "rhs_full");
  require_same_grid(s.rho_a, s.g_a, "rhs_full");
  require_same_grid(s.rho_a, s.g_b, "rhs_full");
  if (!(s.epsilon > 0.0)) throw std::invalid_argument("rhs_full: epsilon must be positive");
  const double coupling = 2.0 * params.beta;
  FullRhs out{negated(divergence(coupled_flux(s.rho_a, s.g_b, coupling, params.d0))),
              negated(divergence(coupled_flux(s.rho_b, s.g_a, coupling, params.d0))), s.g_a, s.g_b};
  for (std::size_t i = 0; i < s.g_a.size(); ++i) {
    out.g_a[i] = (params.c * s.rho_a[i] - s.g_a[i]) / s.epsilon;
    out.g_b[i] = (params.c * s.rho_b[i] - s.g_b[i]) / s.epsilon;
  }
  return out;
}

inline SystemState reduce_full_to_two(const FullState& s) { return {s.t, s.rho_a, s.rho_b}; }

/// Parent-model state with markings at their quasi-steady value g = c*rho.
inline FullState lift_to_full(const SystemState& s, const ModelParams& params, double epsilon) {
  FullState out{s.t, s.rho_a, s.rho_b, s.rho_a, s.rho_b, epsilon};
  for (double& v : out.g_a.values()) v *= params.c;
  for (double& v : out.g_b.values()) v *= params.c;
  return out;
}

/// Volume fraction where kappa^2 * rho_a * rho_b > 1, i.e. where the
/// diffusion matrix has a negative eigenvalue.
inline double supercritical_fraction(const SystemState& s, const ModelParams& params) {
  require_same_grid(s.rho_a, s.rho_b, "supercritical_fraction");
  const double k2 = params.kappa() * params.kappa();
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.rho_a.size(); ++i)
    if (k2 * s.rho_a[i] * s.rho_b[i] > 1.0) ++n;
  return static_cast<double>(n) / static_cast<double>(s.rho_a.size());
}

}  // namespace xdiff
