#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "test_util.hpp"
#include "xdiff/integrate.hpp"

using namespace xdiff;
using Catch::Approx;

namespace {

std::vector<double> as_vec(const Field& f) { return {f.values().begin(), f.values().end()}; }

StepperConfig unclamped(Scheme scheme = Scheme::explicit_euler) {
  StepperConfig c;
  c.scheme = scheme;
  c.dt_max = 1e9;
  c.dt_init = 1e9;
  return c;
}

RunConfig fig1_config(std::size_t cells, double t_end) {
  RunConfig cfg;
  cfg.grid = GridSpec::line(10.0, cells);
  cfg.params = ModelParams::scaled();
  cfg.initial.kind = InitialKind::gaussian_bump;
  cfg.initial.rho_a = {0.5, 1.0, {1.0, 0.0}, 1.0};
  cfg.initial.rho_b = {0.1, 1.0, {-1.0, 0.0}, 1.0};
  cfg.t_end = t_end;
  cfg.output_every = t_end / 10;
  return cfg;
}

}  // namespace

TEST_CASE("cfl_dt", "[integrate]") {
  SECTION("vacuum, scaled, h = 0.05") {
    StepperConfig c = unclamped();
    const GridSpec g = GridSpec::line(1.0, 20);
    const SystemState vacuum{0.0, Field(g, 0.0), Field(g, 0.0)};
    CHECK(cfl_dt(vacuum, ModelParams::scaled(), c) == Approx(5e-4).epsilon(1e-14));
  }
  SECTION("doubling densities never increases dt") {
    std::mt19937_64 rng(2);
    const GridSpec g = GridSpec::box(3.0, 2.0, 9, 7);
    for (int trial = 0; trial < 50; ++trial) {
      const Field a = test::random_field(g, rng, 0, 3), b = test::random_field(g, rng, 0, 3);
      Field a2 = a, b2 = b;
      for (std::size_t i = 0; i < a.size(); ++i) {
        a2[i] *= 2;
        b2[i] *= 2;
      }
      for (Scheme s : {Scheme::explicit_euler, Scheme::imex}) {
        const ModelParams p = ModelParams::physical(0.4, 1.2);
        CHECK(cfl_dt(SystemState{0.0, a2, b2}, p, unclamped(s)) <= cfl_dt(SystemState{0.0, a, b}, p, unclamped(s)));
      }
    }
  }
  SECTION("physical with d0 = 1/4 allows four times the scaled step") {
    auto [a, b] = test::fig1_initial(100);
    const SystemState s{0.0, a, b};
    const double phys = cfl_dt(s, ModelParams::physical(0.5, 1.0), unclamped());
    const double scal = cfl_dt(s, ModelParams::scaled(), unclamped());
    CHECK(phys == Approx(4.0 * scal).epsilon(1e-14));
  }
  SECTION("clamped to dt_max") {
    StepperConfig c;
    c.dt_max = 1e-6;
    c.dt_init = 1e-6;
    const GridSpec g = GridSpec::line(10.0, 10);
    CHECK(cfl_dt(SystemState{0.0, Field(g, 1.0), Field(g, 1.0)}, ModelParams::scaled(), c) == 1e-6);
  }
  SECTION("IMEX limited only by the cross term") {
    const GridSpec g = GridSpec::line(10.0, 10);
    StepperConfig c = unclamped(Scheme::imex);
    c.dt_max = 3.0;
    CHECK(cfl_dt(SystemState{0.0, Field(g, 0.0), Field(g, 0.0)}, ModelParams::scaled(), c) == 3.0);
    // kappa * max = 2: 0.4 * 1 / (2 * 1 * 2)
    const SystemState s{0.0, Field(g, 2.0), Field(g, 1.0)};
    CHECK(cfl_dt(s, ModelParams::scaled(), c) == Approx(0.1).epsilon(1e-14));
  }
  SECTION("full-model bound matches the reduced one when g = c rho") {
    auto [a, b] = test::fig1_initial(60);
    const ModelParams p = ModelParams::physical(0.25, 2.0);
    const SystemState s{0.0, a, b};
    CHECK(cfl_dt(lift_to_full(s, p, 1.0), p, unclamped()) == Approx(cfl_dt(s, p, unclamped())).epsilon(1e-14));
  }
}

TEST_CASE("step_explicit", "[integrate]") {
  const ModelParams scaled = ModelParams::scaled();

  SECTION("constant state only advances time") {
    const GridSpec g = GridSpec::box(2, 2, 5, 5);
    const SystemState s{1.5, Field(g, 0.3), Field(g, 0.8)};
    const SystemState n = step_explicit(s, 0.01, scaled);
    CHECK(n.t == 1.51);
    CHECK(n.rho_a == s.rho_a);
    CHECK(n.rho_b == s.rho_b);
  }
  SECTION("rho_b = 0 is one heat step (dense matrix and loop oracles, 6 cells)") {
    std::mt19937_64 rng(6);
    const GridSpec g = GridSpec::line(3.0, 6);
    const ModelParams p = ModelParams::physical(0.5, 1.0);
    const double dt = 0.05;
    for (int trial = 0; trial < 20; ++trial) {
      const Field a = test::random_field(g, rng, 0.5, 1.5);
      const SystemState n = step_explicit({0.0, a, Field(g, 0.0)}, dt, p);

      const auto lap = oracle::matvec(oracle::laplacian_matrix(6, g.spacing(0)), as_vec(a));
      const auto loop = oracle::rhs_1d(as_vec(a), std::vector<double>(6, 0.0), g.spacing(0), p.d0, p.kappa());
      for (std::size_t i = 0; i < 6; ++i) {
        CHECK(n.rho_a[i] == a[i] + dt * loop[i]);
        CHECK(n.rho_a[i] == Approx(a[i] + dt * p.d0 * lap[i]).epsilon(1e-14));
        CHECK(n.rho_b[i] == 0.0);
      }
    }
  }
  SECTION("mass is preserved on random states") {
    std::mt19937_64 rng(10);
    const ModelParams p = ModelParams::physical(0.3, 0.9);
    for (int trial = 0; trial < 50; ++trial) {
      const GridSpec g = trial % 2 ? GridSpec::line(10.0, 40) : GridSpec::box(5.0, 5.0, 12, 10);
      const SystemState s{0.0, test::random_field(g, rng, 1, 2), test::random_field(g, rng, 1, 2)};
      const SystemState n = step_explicit(s, 0.5 * cfl_dt(s, p, {}), p);
      CHECK(integrate_cells(n.rho_a) == Approx(integrate_cells(s.rho_a)).epsilon(1e-13));
      CHECK(integrate_cells(n.rho_b) == Approx(integrate_cells(s.rho_b)).epsilon(1e-13));
    }
  }
  SECTION("overshooting step reports NegativeDensity with time and cell") {
    const GridSpec g = GridSpec::line(5.0, 5);
    const SystemState s{7.0, Field(g, std::vector<double>{0, 0, 5, 0, 0}), Field(g, 0.0)};
    try {
      step_explicit(s, 1.0, scaled);
      FAIL("expected SolverError");
    } catch (const SolverError& e) {
      CHECK(e.kind() == SolverErrorKind::NegativeDensity);
      CHECK(e.time() == 7.0);
      CHECK(e.cell() == 2);
    }
    CHECK_NOTHROW(step_explicit(s, 0.25, scaled));
    CHECK_NOTHROW(step_explicit(s, 1.0, scaled, 10.0));
  }
  SECTION("overflow reports NonFinite") {
    const GridSpec g = GridSpec::line(5.0, 5);
    const SystemState s{0.0, Field(g, std::vector<double>{0, 0, 5, 0, 0}), Field(g, 0.0)};
    try {
      step_explicit(s, 1e308, scaled);
      FAIL("expected SolverError");
    } catch (const SolverError& e) {
      CHECK(e.kind() == SolverErrorKind::NonFinite);
      CHECK(e.cell() == 1);
    }
  }
  SECTION("rejects non-positive dt") {
    const GridSpec g = GridSpec::line(5.0, 5);
    CHECK_THROWS_AS(step_explicit({0.0, Field(g, 1.0), Field(g, 1.0)}, 0.0, scaled), std::invalid_argument);
  }
}

TEST_CASE("step_imex", "[integrate]") {
  SECTION("constant state is a fixed point") {
    for (const GridSpec& g : {GridSpec::line(4.0, 8), GridSpec::box(4.0, 3.0, 6, 5)}) {
      const SystemState s{0.0, Field(g, 0.4), Field(g, 0.9)};
      const SystemState n = step_imex(s, 0.3, ModelParams::scaled());
      CHECK(test::max_abs_diff(n.rho_a, s.rho_a) <= 1e-15);
      CHECK(test::max_abs_diff(n.rho_b, s.rho_b) <= 1e-15);
    }
  }
  SECTION("rho_b = 0 gives the backward Euler heat step (dense solve, 6 cells)") {
    std::mt19937_64 rng(12);
    const GridSpec g = GridSpec::line(3.0, 6);
    const ModelParams p = ModelParams::physical(0.5, 1.0);
    for (double dt : {0.01, 0.3, 5.0}) {
      const Field a = test::random_field(g, rng, 0.2, 1.0);
      const SystemState n = step_imex({0.0, a, Field(g, 0.0)}, dt, p);
      const auto ref = oracle::dense_solve(oracle::helmholtz_matrix(6, g.spacing(0), dt * p.d0), as_vec(a));
      for (std::size_t i = 0; i < 6; ++i) CHECK(n.rho_a[i] == Approx(ref[i]).margin(1e-12));
    }
  }
  SECTION("cross term matches the dense-solve oracle") {
    std::mt19937_64 rng(13);
    const GridSpec g = GridSpec::line(3.0, 6);
    const ModelParams p = ModelParams::physical(0.7, 1.0);
    const Field a = test::random_field(g, rng, 0.2, 1.0), b = test::random_field(g, rng, 0.2, 1.0);
    const SystemState n = step_imex({0.0, a, b}, 0.05, p);
    const auto ra = oracle::imex_step_1d(as_vec(a), as_vec(b), g.spacing(0), 0.05, p.d0, p.kappa());
    const auto rb = oracle::imex_step_1d(as_vec(b), as_vec(a), g.spacing(0), 0.05, p.d0, p.kappa());
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(n.rho_a[i] == Approx(ra[i]).margin(1e-12));
      CHECK(n.rho_b[i] == Approx(rb[i]).margin(1e-12));
    }
  }
  SECTION("agrees with step_explicit to second order in dt") {
    auto [a, b] = test::fig1_initial(50);
    const SystemState s{0.0, a, b};
    const ModelParams p = ModelParams::scaled();
    auto gap = [&](double dt) {
      const SystemState i = step_imex(s, dt, p), e = step_explicit(s, dt, p);
      return std::max(test::max_abs_diff(i.rho_a, e.rho_a), test::max_abs_diff(i.rho_b, e.rho_b)) / dt;
    };
    const double g1 = gap(1e-3), g2 = gap(5e-4), g3 = gap(2.5e-4);
    CHECK(g1 / g2 == Approx(2.0).epsilon(0.05));
    CHECK(g2 / g3 == Approx(2.0).epsilon(0.05));
  }
  SECTION("2D conjugate gradients: x-only data reproduces the 1D step, mass preserved") {
    const ModelParams p = ModelParams::scaled();
    const GridSpec g1 = GridSpec::line(10.0, 24);
    const GridSpec g2 = GridSpec::box(10.0, 4.0, 24, 6);
    auto fa = [](double x) { return 0.5 + std::exp(-(x - 1) * (x - 1)); };
    auto fb = [](double x) { return 0.1 + std::exp(-(x + 1) * (x + 1)); };
    const SystemState s1{0.0, Field::sample(g1, fa), Field::sample(g1, fb)};
    const SystemState s2{0.0, Field::sample(g2, [&](double x, double) { return fa(x); }),
                         Field::sample(g2, [&](double x, double) { return fb(x); })};
    const double dt = 0.2;
    const SystemState n1 = step_imex(s1, dt, p), n2 = step_imex(s2, dt, p);
    for (std::size_t i = 0; i < 24; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        CHECK(n2.rho_a[i * 6 + j] == Approx(n1.rho_a[i]).margin(1e-11));
        CHECK(n2.rho_b[i * 6 + j] == Approx(n1.rho_b[i]).margin(1e-11));
      }
    CHECK(integrate_cells(n2.rho_a) == Approx(integrate_cells(s2.rho_a)).epsilon(1e-11));
    CHECK(integrate_cells(n2.rho_b) == Approx(integrate_cells(s2.rho_b)).epsilon(1e-11));
  }
  SECTION("CG iteration cap reports SolverDiverged") {
    const GridSpec g = GridSpec::box(4.0, 4.0, 8, 8);
    std::mt19937_64 rng(3);
    const Field b = test::random_field(g, rng);
    try {
      detail::solve_helmholtz_cg(b, 10.0, 2.0, 1e-12, 1);
      FAIL("expected SolverError");
    } catch (const SolverError& e) {
      CHECK(e.kind() == SolverErrorKind::SolverDiverged);
      CHECK(e.time() == 2.0);
    }
  }
}

TEST_CASE("step_full", "[integrate]") {
  const GridSpec g = GridSpec::line(10.0, 10);
  const ModelParams p = ModelParams::physical(0.4, 1.5);

  SECTION("equilibrated uniform state is a fixed point") {
    const FullState s{0.0, Field(g, 0.6), Field(g, 0.2), Field(g, 1.5 * 0.6), Field(g, 1.5 * 0.2), 0.5};
    const FullState n = step_full(s, 0.1, p);
    CHECK(n.rho_a == s.rho_a);
    CHECK(n.g_a == s.g_a);
    CHECK(n.g_b == s.g_b);
    CHECK(n.t == 0.1);
  }
  SECTION("markings relax exactly towards c rho") {
    const FullState s{0.0, Field(g, 0.6), Field(g, 0.2), Field(g, 0.0), Field(g, 0.0), 0.5};
    const double dt = 0.1;
    const FullState n = step_full(s, dt, p);
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
      CHECK(n.g_a[i] == Approx(1.5 * 0.6 * (1 - std::exp(-dt / 0.5))).epsilon(1e-14));
      CHECK(n.g_b[i] == Approx(1.5 * 0.2 * (1 - std::exp(-dt / 0.5))).epsilon(1e-14));
    }
  }
  SECTION("tiny epsilon snaps markings to c rho") {
    auto [a, b] = test::fig1_initial(10);
    const FullState s{0.0, a, b, Field(g, 0.0), Field(g, 3.0), 1e-6};
    const FullState n = step_full(s, 1e-3, p);
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
      CHECK(n.g_a[i] == Approx(1.5 * n.rho_a[i]).epsilon(1e-3));
      CHECK(n.g_b[i] == Approx(1.5 * n.rho_b[i]).epsilon(1e-3));
    }
  }
  SECTION("density masses conserved") {
    std::mt19937_64 rng(17);
    const FullState s{0.0, test::random_field(g, rng, 1, 2), test::random_field(g, rng, 1, 2),
                      test::random_field(g, rng, 0, 3), test::random_field(g, rng, 0, 3), 0.3};
    const FullState n = step_full(s, 0.5 * cfl_dt(s, p, {}), p);
    CHECK(integrate_cells(n.rho_a) == Approx(integrate_cells(s.rho_a)).epsilon(1e-13));
    CHECK(integrate_cells(n.rho_b) == Approx(integrate_cells(s.rho_b)).epsilon(1e-13));
  }
}

TEST_CASE("run_simulation", "[integrate]") {
  SECTION("t_end = 0 gives one report and the initial snapshot") {
    RunConfig cfg = fig1_config(40, 1.0);
    cfg.t_end = 0.0;
    const RunResult r = run_simulation(cfg);
    REQUIRE(r.series.size() == 1);
    REQUIRE(r.snapshots.size() == 1);
    CHECK(r.series[0].t == 0.0);
    CHECK(r.snapshots[0].t == 0.0);
    CHECK(r.steps == 0);
  }
  SECTION("uniform data stays bitwise constant") {
    RunConfig cfg;
    cfg.grid = GridSpec::line(10.0, 30);
    cfg.params = ModelParams::scaled();
    cfg.initial.rho_a.baseline = 0.7;
    cfg.initial.rho_b.baseline = 0.3;
    cfg.t_end = 2.0;
    cfg.output_every = 0.5;
    const RunResult r = run_simulation(cfg);
    REQUIRE(r.series.size() == 5);
    for (const EnergyReport& rep : r.series) {
      EnergyReport first = r.series.front();
      first.t = rep.t;
      CHECK(rep == first);
    }
    CHECK(r.snapshots.back().rho_a == Field(cfg.grid, 0.7));
    CHECK(r.snapshots.back().rho_b == Field(cfg.grid, 0.3));
  }
  SECTION("report and snapshot instants are hit exactly") {
    RunConfig cfg = fig1_config(40, 2.0);
    cfg.output_every = 0.25;
    cfg.snapshot_times = {0.1, 0.7, 1.3};
    const RunResult r = run_simulation(cfg);
    REQUIRE(r.series.size() == 9);
    for (std::size_t k = 0; k < r.series.size(); ++k) CHECK(r.series[k].t == 0.25 * static_cast<double>(k));
    REQUIRE(r.snapshots.size() == 5);
    const std::vector<double> expected{0.0, 0.1, 0.7, 1.3, 2.0};
    for (std::size_t k = 0; k < expected.size(); ++k) CHECK(r.snapshots[k].t == expected[k]);
  }
  SECTION("identical configs give identical results") {
    const RunConfig cfg = fig1_config(50, 3.0);
    const RunResult a = run_simulation(cfg), b = run_simulation(cfg);
    CHECK(a.series == b.series);
    CHECK(a.snapshots.back().rho_a == b.snapshots.back().rho_a);
    CHECK(a.steps == b.steps);
  }
  SECTION("IMEX and explicit runs approach the same state") {
    RunConfig cfg = fig1_config(50, 5.0);
    const RunResult e = run_simulation(cfg);
    cfg.stepper.scheme = Scheme::imex;
    cfg.stepper.dt_max = 0.01;
    cfg.stepper.dt_init = 0.01;
    const RunResult i = run_simulation(cfg);
    CHECK(i.steps < e.steps);
    CHECK(test::max_abs_diff(i.snapshots.back().rho_a, e.snapshots.back().rho_a) < 5e-3);
    CHECK(i.series.back().mass_a == Approx(e.series.back().mass_a).epsilon(1e-11));
  }
  SECTION("full model with small epsilon tracks the reduced run") {
    RunConfig cfg = fig1_config(40, 1.0);
    const RunResult reduced = run_simulation(cfg);
    cfg.full_model = {true, 1e-3};
    const RunResult full = run_simulation(cfg);
    REQUIRE(full.snapshots.back().g_a.has_value());
    CHECK(test::max_abs_diff(full.snapshots.back().rho_a, reduced.snapshots.back().rho_a) < 1e-2);
  }
  SECTION("solver failure propagates") {
    RunConfig cfg = fig1_config(40, 1.0);
    cfg.stepper.cfl_safety = 1.0;
    cfg.params = ModelParams::physical(5.0, 5.0);  // strongly supercritical
    cfg.initial.rho_a.amplitude = 5.0;
    cfg.initial.rho_b.amplitude = 5.0;
    cfg.t_end = 50.0;
    cfg.output_every = 50.0;
    CHECK_THROWS_AS(run_simulation(cfg), SolverError);
  }
  SECTION("invalid configs are rejected") {
    RunConfig cfg = fig1_config(40, 1.0);
    cfg.snapshot_times = {2.0};
    CHECK_THROWS_AS(run_simulation(cfg), std::invalid_argument);
    cfg = fig1_config(40, 1.0);
    cfg.output_every = 2.0;
    CHECK_THROWS_AS(run_simulation(cfg), std::invalid_argument);
    cfg = fig1_config(40, 1.0);
    cfg.full_model = {true, 0.1};
    cfg.stepper.scheme = Scheme::imex;
    CHECK_THROWS_AS(run_simulation(cfg), std::invalid_argument);
  }
}

TEST_CASE("energy_h is nonincreasing step by step on a subcritical run", "[integrate]") {
  auto [a, b] = test::fig1_initial(100);
  SystemState s{0.0, a, b};
  const ModelParams p = ModelParams::scaled();
  double h = energy_h(s, p);
  const SteadyStatePair ss = steady_state_of(s);
  for (int step = 0; step < 4000; ++step) {
    REQUIRE(supercritical_fraction(s, p) == 0.0);
    s = step_explicit(s, cfl_dt(s, p, {}), p);
    const double next = energy_h(s, p);
    CHECK(next <= h + 1e-10 * std::abs(h));
    h = next;
  }
  const SteadyStatePair after = steady_state_of(s);
  CHECK(after.rho_a_inf == Approx(ss.rho_a_inf).epsilon(1e-11));
  CHECK(after.rho_b_inf == Approx(ss.rho_b_inf).epsilon(1e-11));
}
