#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <random>

#include "conley/critical.hpp"
#include "conley/lyapunov.hpp"

using namespace conley;

namespace {

struct Rig {
  std::shared_ptr<const ScalarField> f;
  PseudoGradientField y;
  GridPtr grid;
  IntegratorConfig cfg;
  double T = 0.5 * std::log(2.0);
  IndexPairData pair;
  ForwardCore core;
};

Rig repeller_rig() {
  Domain d{{-1.0}, {1.0}, {false}};
  auto f = std::make_shared<ScalarField>("x0^2", d);
  Rig rig{f, PseudoGradientField(f, GradientMode::raw),
          std::make_shared<CubicalGrid>(d, std::vector<int>{256}), IntegratorConfig{}};
  CellSet a = CellSet::full(rig.grid);
  CellSet g = compute_trapped_set(rig.y, a, rig.T, rig.cfg);
  CellSet gamma = compute_exit_slice(rig.y, a, g, rig.T, rig.cfg);
  rig.pair = make_index_pair(std::move(g), std::move(gamma), rig.T);
  rig.core = forward_core(rig.pair.V, rig.y, 20.0, rig.cfg);
  return rig;
}

}  // namespace

TEST_CASE("forward core of the repeller pair is the cells touching the rest point") {
  auto rig = repeller_rig();
  REQUIRE(rig.core.cells.count() >= 1);
  REQUIRE(rig.core.cells.count() <= 2);
  rig.core.cells.for_each([&](std::size_t c) {
    REQUIRE(std::abs(rig.grid->center(c)[0]) <= rig.grid->cell_width(0));
  });
}

TEST_CASE("forward core of a forward-invariant set is everything") {
  Domain d{{-1.0}, {1.0}, {false}};
  auto f = std::make_shared<ScalarField>("-x0^2", d);
  PseudoGradientField y(f, GradientMode::raw);
  auto grid = std::make_shared<CubicalGrid>(d, std::vector<int>{256});
  IntegratorConfig cfg;
  CellSet a = CellSet::full(grid);
  CellSet g = compute_trapped_set(y, a, 0.5 * std::log(2.0), cfg);
  const auto core = forward_core(g, y, 20.0, cfg);
  REQUIRE(core.cells == g);
  REQUIRE(core.all_centers_stay);
}

TEST_CASE("forward core of the 2D saddle is the stable column") {
  Domain d{{-1.0, -1.0}, {1.0, 1.0}, {false, false}};
  auto f = std::make_shared<ScalarField>("x0^2 - x1^2", d);
  PseudoGradientField y(f, GradientMode::raw);
  auto grid = std::make_shared<CubicalGrid>(d, std::vector<int>{48, 48});
  IntegratorConfig cfg;
  CellSet a = CellSet::full(grid);
  CellSet g = compute_trapped_set(y, a, 0.5 * std::log(2.0), cfg);
  const auto core = forward_core(g, y, 20.0, cfg);
  // Two columns of cells share the x0 = 0 grid plane.
  REQUIRE(core.cells.count() == 2 * 24);
  core.cells.for_each([&](std::size_t c) {
    REQUIRE(std::abs(grid->center(c)[0]) <= grid->cell_width(0));
  });
}

TEST_CASE("separating function: levels and the middle value") {
  auto rig = repeller_rig();
  SeparatingFunction rho(rig.pair.L, rig.core.cells);
  // Exactly 0 on L, exactly 1 on the core, and 1/2 halfway by symmetry.
  const Vec l_pt = rig.grid->center(rig.pair.L.cells().front());
  REQUIRE(rho(l_pt) == 0.0);
  rig.core.cells.for_each([&](std::size_t c) { REQUIRE(rho(rig.grid->center(c)) == 1.0); });
  REQUIRE(rho(Vec{0.25}) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("separating function refuses a core that meets L") {
  auto rig = repeller_rig();
  CellSet bad_l = rig.pair.L;
  rig.core.cells.for_each([&](std::size_t c) { bad_l.insert(c); });
  REQUIRE_THROWS_AS(SeparatingFunction(bad_l, rig.core.cells), std::invalid_argument);
}

TEST_CASE("lyapunov data: anchoring and the quadrature oracle") {
  auto rig = repeller_rig();
  const auto lyap = compute_lyapunov(rig.pair, rig.y, rig.core, rig.cfg, 20.0);

  // g vanishes exactly on L cells.
  rig.pair.L.for_each([&](std::size_t c) { REQUIRE(lyap.g[c] == 0.0); });
  // Core cells integrate the unit envelope: 1 - e^{-20} up to quadrature.
  rig.core.cells.for_each([&](std::size_t c) { REQUIRE(lyap.g[c] >= 0.99); });
  // Everything else sits strictly between.
  rig.pair.N.for_each([&](std::size_t c) {
    if (rig.pair.L.contains(c) || rig.core.cells.contains(c)) return;
    REQUIRE(lyap.g[c] > 0.0);
    REQUIRE(lyap.g[c] < 1.0);
  });

  // Closed-form oracle at x = 0.25 for the doubling orbit. With the cell
  // region metric, rho(x) = (a - x) / D on [c0, a] with a the inner edge of
  // the exit cells, c0 the outer edge of the core cells and D = a - c0;
  // the orbit x e^{2t} leaves V at 1/2, and rho hits zero at a, so
  //   g = (1/D) * [a (1 - e^{-tau}) - x (e^{tau} - 1)],  tau = ln(a/x)/2.
  const double h = rig.grid->cell_width(0);
  const double a = 0.5 - h;   // inner edge of the exit cells
  const double c0 = h;        // outer edge of the core cells
  const double D = a - c0;
  const double x = 0.25;
  const double tau = 0.5 * std::log(a / x);
  const double oracle = (a * (1 - std::exp(-tau)) - x * (std::exp(tau) - 1)) / D;
  const double g_d25 = lyapunov_value_at(rig.pair, rig.y, rig.core, Vec{x}, rig.cfg, 20.0);
  REQUIRE(g_d25 == Catch::Approx(oracle).margin(2e-3));
  // And the idealized continuum value from the problem data.
  REQUIRE(g_d25 == Catch::Approx(0.085786).margin(0.01));

  // The envelope at 0.25 is the initial rho (the sup is attained at t = 0).
  const std::size_t cell25 = *rig.grid->locate(Vec{0.25 + 1e-9});
  REQUIRE(lyap.envelope[cell25] == Catch::Approx(0.5).margin(0.02));
}

TEST_CASE("g decreases strictly along the quotient flow") {
  auto rig = repeller_rig();
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> ux(-0.47, 0.47), ut(0.001, 1.0);
  long checked = 0;
  while (checked < 500) {
    const Vec x{ux(rng)};
    const double g0 = lyapunov_value_at(rig.pair, rig.y, rig.core, x, rig.cfg, 20.0);
    if (!(g0 > 0.0 && g0 < 1.0)) continue;
    const double t = ut(rng);
    const auto q = quotient_flow(rig.pair, rig.y, QuotientPoint::at(x), t, rig.cfg);
    const double g1 =
        q.collapsed() ? 0.0 : lyapunov_value_at(rig.pair, rig.y, rig.core, *q.point, rig.cfg, 20.0);
    REQUIRE(g1 < g0 + 1e-4);
    ++checked;
  }
}

TEST_CASE("regularization: collar, criterion, and nesting") {
  auto rig = repeller_rig();
  const auto lyap = compute_lyapunov(rig.pair, rig.y, rig.core, rig.cfg, 20.0);

  auto reg = regularize(rig.pair, lyap, rig.core, 0.05);
  REQUIRE(rig.pair.L.is_subset_of(reg.pair.L));
  REQUIRE(reg.pair.L.count() > rig.pair.L.count());
  // The collar is symmetric and sits around |x| ~ 0.3 for this field.
  double inner = 1.0;
  reg.pair.L.for_each(
      [&](std::size_t c) { inner = std::min(inner, std::abs(rig.grid->center(c)[0])); });
  REQUIRE(inner == Catch::Approx(0.30).margin(0.02));
  check_immediate_exit(reg.pair, rig.y, 3 * rig.T, rig.cfg);
  REQUIRE(reg.pair.regular_criterion.verdict == Verdict::pass);

  // Epsilon nesting.
  auto reg_small = regularize(rig.pair, lyap, rig.core, 0.02);
  REQUIRE(reg_small.pair.L.is_subset_of(reg.pair.L));

  // A tiny epsilon keeps only the original exit cells.
  auto reg_tiny = regularize(rig.pair, lyap, rig.core, 1e-9);
  REQUIRE(reg_tiny.pair.L == rig.pair.L);

  REQUIRE_THROWS_AS(regularize(rig.pair, lyap, rig.core, 1.0), std::invalid_argument);
  // Seed an escaping cell into the core: its g is small, so thresholds above
  // it no longer separate L from the core.
  auto leaky = forward_core(rig.pair.V, rig.y, 20.0, rig.cfg,
                            {{*rig.grid->locate(Vec{0.2}), Vec{0.2}}});
  const auto lyap2 = compute_lyapunov(rig.pair, rig.y, leaky, rig.cfg, 20.0);
  REQUIRE_THROWS_AS(regularize(rig.pair, lyap2, leaky, 0.5), std::invalid_argument);
}

TEST_CASE("constant envelope shortcut matches the honest quadrature") {
  Domain d{{0.0, 0.0}, {1.0, 1.0}, {true, true}};
  auto f = std::make_shared<ScalarField>("cos(2*pi*x0) + cos(2*pi*x1)", d);
  PseudoGradientField y(f, GradientMode::normalized);
  auto grid = std::make_shared<CubicalGrid>(d, std::vector<int>{8, 8});
  IntegratorConfig cfg;
  IndexPairData pair = make_index_pair(CellSet::full(grid), CellSet(grid), 0.5);
  const auto core = forward_core(pair.V, y, 20.0, cfg);
  REQUIRE(core.all_centers_stay);
  const auto lyap = compute_lyapunov(pair, y, core, cfg, 20.0);
  REQUIRE(lyap.constant_envelope);
  pair.N.for_each([&](std::size_t c) {
    REQUIRE(lyap.g[c] == Catch::Approx(1.0 - std::exp(-20.0)).margin(1e-9));
  });
  // The point query agrees: the envelope is 1 along every orbit.
  const double gq = lyapunov_value_at(pair, y, core, Vec{0.37, 0.81}, cfg, 20.0);
  REQUIRE(gq == Catch::Approx(1.0 - std::exp(-20.0)).margin(1e-6));
}
