#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <random>

#include "conley/index_pair.hpp"
#include "conley/sampling.hpp"

using namespace conley;

namespace {

struct Rig {
  std::shared_ptr<const ScalarField> f;
  PseudoGradientField y;
  GridPtr grid;
  IntegratorConfig cfg;
  double T = 0.5 * std::log(2.0);
};

Rig rig_1d(const char* expr, int r = 256) {
  Domain d{{-1.0}, {1.0}, {false}};
  auto f = std::make_shared<ScalarField>(expr, d);
  return {f, PseudoGradientField(f, GradientMode::raw),
          std::make_shared<CubicalGrid>(d, std::vector<int>{r}), IntegratorConfig{}};
}

Rig rig_torus(int r = 16) {
  Domain d{{0.0, 0.0}, {1.0, 1.0}, {true, true}};
  auto f = std::make_shared<ScalarField>("cos(2*pi*x0) + cos(2*pi*x1)", d);
  return {f, PseudoGradientField(f, GradientMode::normalized),
          std::make_shared<CubicalGrid>(d, std::vector<int>{r, r}), IntegratorConfig{}, 0.5};
}

double span_lo(const CellSet& s) {
  double lo = 1e300;
  s.for_each([&](std::size_t c) { lo = std::min(lo, s.grid()->center(c)[0]); });
  return lo;
}
double span_hi(const CellSet& s) {
  double hi = -1e300;
  s.for_each([&](std::size_t c) { hi = std::max(hi, s.grid()->center(c)[0]); });
  return hi;
}

IndexPairData repeller_pair(const Rig& rig) {
  CellSet a = CellSet::full(rig.grid);
  CellSet g = compute_trapped_set(rig.y, a, rig.T, rig.cfg);
  CellSet gamma = compute_exit_slice(rig.y, a, g, rig.T, rig.cfg);
  return make_index_pair(std::move(g), std::move(gamma), rig.T);
}

}  // namespace

TEST_CASE("trapped set of the doubling field matches the closed form") {
  auto rig = rig_1d("x0^2");
  CellSet a = CellSet::full(rig.grid);
  CellSet g = compute_trapped_set(rig.y, a, rig.T, rig.cfg);
  const double h = rig.grid->cell_width(0);
  // |x| e^{2T} <= 1 means |x| <= 0.5.
  REQUIRE(span_lo(g) == Catch::Approx(-0.5 + h / 2).margin(2 * h));
  REQUIRE(span_hi(g) == Catch::Approx(0.5 - h / 2).margin(2 * h));
  REQUIRE(g.count() >= 124);
  REQUIRE(g.count() <= 132);

  // The attractor traps the same interval (its backward orbit expands).
  auto att = rig_1d("-x0^2");
  CellSet g2 = compute_trapped_set(att.y, CellSet::full(att.grid), att.T, att.cfg);
  REQUIRE(span_lo(g2) == Catch::Approx(span_lo(g)).margin(2 * h));
  REQUIRE(span_hi(g2) == Catch::Approx(span_hi(g)).margin(2 * h));
}

TEST_CASE("trapped set of a full periodic grid is everything") {
  auto rig = rig_torus();
  CellSet a = CellSet::full(rig.grid);
  REQUIRE(compute_trapped_set(rig.y, a, rig.T, rig.cfg) == a);
  REQUIRE(compute_exit_slice(rig.y, a, a, rig.T, rig.cfg).empty());
}

TEST_CASE("exit slice: two cells at the trap boundary") {
  auto rig = rig_1d("x0^2");
  CellSet a = CellSet::full(rig.grid);
  CellSet g = compute_trapped_set(rig.y, a, rig.T, rig.cfg);
  CellSet gamma = compute_exit_slice(rig.y, a, g, rig.T, rig.cfg);
  REQUIRE(gamma.count() >= 2);
  REQUIRE(gamma.count() <= 4);
  gamma.for_each([&](std::size_t c) {
    REQUIRE(std::abs(std::abs(rig.grid->center(c)[0]) - 0.5) <= 1.5 * rig.grid->cell_width(0));
  });

  auto att = rig_1d("-x0^2");
  CellSet g2 = compute_trapped_set(att.y, CellSet::full(att.grid), att.T, att.cfg);
  CellSet gamma2 = compute_exit_slice(att.y, CellSet::full(att.grid), g2, att.T, att.cfg);
  REQUIRE(gamma2.empty());
}

TEST_CASE("isolation check") {
  auto rig = rig_1d("x0^2");
  CellSet a = CellSet::full(rig.grid);
  CellSet g = compute_trapped_set(rig.y, a, rig.T, rig.cfg);
  REQUIRE(check_isolation(a, g).verdict == Verdict::pass);

  // A constant objective: every orbit rests, the trapped set is all of A and
  // touches its boundary.
  auto flat = rig_1d("1", 32);
  CellSet af = CellSet::full(flat.grid);
  CellSet gf = compute_trapped_set(flat.y, af, 0.5, flat.cfg);
  REQUIRE(gf == af);
  REQUIRE(check_isolation(af, gf).verdict == Verdict::fail);

  // On a torus the full set has empty boundary and isolates trivially.
  auto tor = rig_torus();
  CellSet at = CellSet::full(tor.grid);
  REQUIRE(check_isolation(at, at).verdict == Verdict::pass);
}

TEST_CASE("pair axioms hold for the trapped pair and fail for a corrupted exit set") {
  auto rig = rig_1d("x0^2");
  IndexPairData pair = repeller_pair(rig);
  check_pair_axioms(pair, rig.y, 3 * rig.T, rig.cfg);
  REQUIRE(pair.axiom_i.verdict == Verdict::pass);
  REQUIRE(pair.axiom_ii.verdict == Verdict::pass);

  // Drop the left exit cell: orbits leaving left now exit without touching L.
  CellSet bad_l(rig.grid);
  double right = -1;
  pair.L.for_each([&](std::size_t c) {
    if (rig.grid->center(c)[0] > 0) {
      bad_l.insert(c);
      right = rig.grid->center(c)[0];
    }
  });
  REQUIRE(right > 0);
  IndexPairData corrupted = make_index_pair(pair.N, bad_l, rig.T);
  check_pair_axioms(corrupted, rig.y, 3 * rig.T, rig.cfg);
  REQUIRE(corrupted.axiom_ii.verdict == Verdict::fail);
  REQUIRE_FALSE(corrupted.axiom_ii.witnesses.empty());
  // The recorded witness exits near -0.5.
  REQUIRE(corrupted.axiom_ii.witnesses.front().point[0] < 0);
}

TEST_CASE("pair axioms are vacuous for (N, empty) on a torus") {
  auto rig = rig_torus();
  IndexPairData pair = make_index_pair(CellSet::full(rig.grid), CellSet(rig.grid), rig.T);
  check_pair_axioms(pair, rig.y, 3 * rig.T, rig.cfg);
  REQUIRE(pair.axiom_i.verdict == Verdict::pass);
  REQUIRE(pair.axiom_ii.verdict == Verdict::pass);
}

TEST_CASE("weak regularity") {
  auto rig = rig_1d("x0^2");
  IndexPairData pair = repeller_pair(rig);
  check_weak_regularity(pair, rig.y, 3 * rig.T, rig.cfg);
  REQUIRE(pair.weakly_regular.verdict == Verdict::pass);

  IndexPairData no_exit = make_index_pair(pair.N, CellSet(rig.grid), rig.T);
  check_weak_regularity(no_exit, rig.y, 3 * rig.T, rig.cfg);
  REQUIRE(no_exit.weakly_regular.verdict == Verdict::pass);  // vacuous

  // L containing the rest cell never leaves V.
  CellSet rest(rig.grid);
  rest.insert(*rig.grid->locate(Vec{1e-4}));
  IndexPairData stuck = make_index_pair(pair.N, rest, rig.T);
  check_weak_regularity(stuck, rig.y, 3 * rig.T, rig.cfg);
  REQUIRE(stuck.weakly_regular.verdict == Verdict::fail);
  REQUIRE_FALSE(stuck.weakly_regular.witnesses.empty());
}

TEST_CASE("immediate-exit criterion") {
  auto rig = rig_1d("x0^2");
  IndexPairData pair = repeller_pair(rig);
  check_immediate_exit(pair, rig.y, 3 * rig.T, rig.cfg);
  // The exit slice is one cell thick: orbits clear V within the tolerance, so
  // the sampled sufficient criterion passes for this pair.
  REQUIRE(pair.regular_criterion.verdict == Verdict::pass);

  IndexPairData no_exit = make_index_pair(pair.N, CellSet(rig.grid), rig.T);
  check_immediate_exit(no_exit, rig.y, 3 * rig.T, rig.cfg);
  REQUIRE(no_exit.regular_criterion.verdict == Verdict::pass);  // vacuous

  // Inward flow with an outer exit collar: orbits from L dive into V and
  // stay, so exit is anything but immediate.
  auto att = rig_1d("-x0^2");
  CellSet n2(att.grid), l2(att.grid);
  for (std::size_t c = 0; c < att.grid->cell_count(); ++c) {
    const double x = std::abs(att.grid->center(c)[0]);
    if (x <= 0.5) n2.insert(c);
    if (x <= 0.5 && x >= 0.4) l2.insert(c);
  }
  IndexPairData lingering = make_index_pair(n2, l2, att.T);
  check_immediate_exit(lingering, att.y, 3 * att.T, att.cfg);
  REQUIRE(lingering.regular_criterion.verdict == Verdict::fail);
  REQUIRE_FALSE(lingering.regular_criterion.witnesses.empty());

  // Prop 2.1 direction: an immediate-exit pass must come with weak regularity.
  check_weak_regularity(pair, rig.y, 3 * rig.T, rig.cfg);
  REQUIRE(pair.weakly_regular.verdict == Verdict::pass);
}

TEST_CASE("exit time map") {
  auto rig = rig_1d("x0^2");
  IndexPairData pair = repeller_pair(rig);
  REQUIRE(exit_time(pair, rig.y, Vec{0.25}, rig.cfg).time.value() ==
          Catch::Approx(0.5 * std::log(2.0)).margin(0.005));
  // Points of L report zero by definition.
  const Vec l_point = rig.grid->center(pair.L.cells().front());
  REQUIRE(exit_time(pair, rig.y, l_point, rig.cfg).time.value() == 0.0);
  // The rest point never exits.
  REQUIRE_FALSE(exit_time(pair, rig.y, Vec{0.0}, rig.cfg).time.has_value());
  REQUIRE_THROWS_AS(exit_time(pair, rig.y, Vec{0.9}, rig.cfg), std::invalid_argument);
}

TEST_CASE("exit time cocycle") {
  auto rig = rig_1d("x0^2");
  IndexPairData pair = repeller_pair(rig);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ux(0.05, 0.45), us(0.05, 0.95);
  int checked = 0;
  for (int k = 0; k < 200; ++k) {
    const Vec x{ux(rng)};
    const auto tau = exit_time(pair, rig.y, x, rig.cfg).time;
    if (!tau) continue;
    const double s = us(rng) * *tau;
    const Vec xs = flow_map(rig.y, x, s, rig.cfg);
    const auto tau2 = exit_time(pair, rig.y, xs, rig.cfg).time;
    REQUIRE(tau2.has_value());
    REQUIRE(std::abs(*tau2 - (*tau - s)) <= 0.01);
    ++checked;
  }
  REQUIRE(checked >= 190);
}

TEST_CASE("quotient flow") {
  auto rig = rig_1d("x0^2");
  IndexPairData pair = repeller_pair(rig);
  const auto q1 = quotient_flow(pair, rig.y, QuotientPoint::at(Vec{0.25}), 0.1, rig.cfg);
  REQUIRE_FALSE(q1.collapsed());
  REQUIRE((*q1.point)[0] == Catch::Approx(0.25 * std::exp(0.2)).margin(1e-5));
  const auto q2 = quotient_flow(pair, rig.y, QuotientPoint::at(Vec{0.25}), 1.0, rig.cfg);
  REQUIRE(q2.collapsed());
  const auto q3 = quotient_flow(pair, rig.y, QuotientPoint::base(), 2.0, rig.cfg);
  REQUIRE(q3.collapsed());
}

TEST_CASE("quotient flow absorption composes") {
  auto rig = rig_1d("x0^2");
  IndexPairData pair = repeller_pair(rig);
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> ux(-0.45, 0.45), ut(0.0, 0.6);
  for (int k = 0; k < 60; ++k) {
    const Vec x{ux(rng)};
    const double s = ut(rng), t = ut(rng);
    const auto one = quotient_flow(pair, rig.y, QuotientPoint::at(x), s + t, rig.cfg);
    const auto two =
        quotient_flow(pair, rig.y, quotient_flow(pair, rig.y, QuotientPoint::at(x), s, rig.cfg),
                      t, rig.cfg);
    REQUIRE(one.collapsed() == two.collapsed());
    if (!one.collapsed()) REQUIRE(std::abs((*one.point)[0] - (*two.point)[0]) <= 1e-6);
  }
}

TEST_CASE("trapped-set nesting and composition") {
  auto rig = rig_1d("x0^2", 128);
  CellSet a = CellSet::full(rig.grid);
  const double t1 = 0.25 * std::log(2.0), t2 = 0.5 * std::log(2.0);
  CellSet g1 = compute_trapped_set(rig.y, a, t1, rig.cfg);
  CellSet g2 = compute_trapped_set(rig.y, a, t2, rig.cfg);
  REQUIRE(g2.is_subset_of(g1));

  // Composition: trapping for t1 twice matches trapping for 2*t1 within 2 cells.
  CellSet gg = compute_trapped_set(rig.y, g1, t1, rig.cfg);
  const double h = rig.grid->cell_width(0);
  REQUIRE(std::abs(span_lo(gg) - span_lo(g2)) <= 2 * h);
  REQUIRE(std::abs(span_hi(gg) - span_hi(g2)) <= 2 * h);
}

TEST_CASE("exit slice escape within three windows") {
  auto rig = rig_1d("x0^2");
  CellSet a = CellSet::full(rig.grid);
  CellSet g = compute_trapped_set(rig.y, a, rig.T, rig.cfg);
  CellSet gamma = compute_exit_slice(rig.y, a, g, rig.T, rig.cfg);
  REQUIRE(check_exit_slice_escape(rig.y, g, gamma, 3 * rig.T, rig.cfg).verdict == Verdict::pass);

  CellSet empty(rig.grid);
  REQUIRE(check_exit_slice_escape(rig.y, g, empty, 3 * rig.T, rig.cfg).verdict == Verdict::pass);

  // A corrupted slice containing the rest cell cannot escape.
  CellSet bad = gamma;
  bad.insert(*rig.grid->locate(Vec{1e-4}));
  const auto r = check_exit_slice_escape(rig.y, g, bad, 3 * rig.T, rig.cfg);
  REQUIRE(r.verdict == Verdict::fail);
  REQUIRE_FALSE(r.witnesses.empty());
  REQUIRE(std::abs(r.witnesses.front().point[0]) <= 0.01);
}

TEST_CASE("exit slice is disjoint from the forward-invariant middle") {
  // Gamma sits at the rim; the rest point's cells are deep inside.
  auto rig = rig_1d("x0^2");
  IndexPairData pair = repeller_pair(rig);
  pair.L.for_each([&](std::size_t c) {
    REQUIRE(std::abs(rig.grid->center(c)[0]) > 0.45);
  });
}

TEST_CASE("trapping inside a sub-box") {
  auto rig = rig_1d("x0^2");
  CellSet a(rig.grid);
  for (std::size_t c = 0; c < rig.grid->cell_count(); ++c)
    if (std::abs(rig.grid->center(c)[0]) <= 0.2) a.insert(c);
  CellSet g = compute_trapped_set(rig.y, a, rig.T, rig.cfg);
  // |x| e^{2T} <= 0.2 means |x| <= 0.1.
  const double h = rig.grid->cell_width(0);
  g.for_each([&](std::size_t c) { REQUIRE(std::abs(rig.grid->center(c)[0]) <= 0.1 + h); });
  REQUIRE(g.count() >= 22);
  REQUIRE(check_isolation(a, g).verdict == Verdict::pass);
  CellSet gamma = compute_exit_slice(rig.y, a, g, rig.T, rig.cfg);
  REQUIRE(gamma.count() >= 2);
  gamma.for_each([&](std::size_t c) {
    REQUIRE(std::abs(std::abs(rig.grid->center(c)[0]) - 0.1) <= 1.5 * h);
  });
}
