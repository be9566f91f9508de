#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "conley/index_pair.hpp"

namespace conley {

/// Cells of V that carry a sampled witness of forward invariance: some sample
/// point (center or exact corner) whose orbit stays in V through the horizon.
/// Cells containing known rest points may be seeded in by the caller; the
/// sampled rule alone misses invariant sets that avoid cell corners.
struct ForwardCore {
  CellSet cells;
  double horizon = 0;
  bool all_centers_stay = false;
  std::unordered_map<std::size_t, Vec> witness;

  Vec witness_for(std::size_t cell) const {
    auto it = witness.find(cell);
    if (it == witness.end()) throw std::logic_error("forward core: missing witness");
    return it->second;
  }
};

struct SeedPoint {
  std::size_t cell;
  Vec location;
};

inline ForwardCore forward_core(const CellSet& v, const PseudoGradientField& y, double horizon,
                                const IntegratorConfig& cfg,
                                const std::vector<SeedPoint>& seeds = {}) {
  if (v.empty()) throw std::invalid_argument("forward_core: V is empty");
  ForwardCore core;
  core.cells = CellSet(v.grid());
  core.horizon = horizon;
  const auto& g = *v.grid();
  // A full periodic grid is forward invariant as a whole.
  if (v.is_full()) {
    bool all_periodic = true;
    for (std::size_t i = 0; i < g.dim(); ++i)
      if (!g.domain().periodic[i]) all_periodic = false;
    if (all_periodic) {
      core.cells = v;
      core.all_centers_stay = true;
      v.for_each([&](std::size_t c) { core.witness.emplace(c, g.center(c)); });
      return core;
    }
  }
  IntegratorConfig c2 = cfg;
  c2.t_max = std::max(cfg.t_max, horizon);
  const auto cells = v.cells();
  const CellSet target = cfg.safety_margin ? combinatorial_interior(v) : v;
  struct Hit {
    bool stays = false;
    bool center_stays = false;
    Vec at;
  };
  std::vector<Hit> hits(cells.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    const auto pts = cell_sample_points(g, cells[i]);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (orbit_in_set(y, pts[k], 0, horizon, target, c2)) {
        hits[i].stays = true;
        hits[i].at = pts[k];
        hits[i].center_stays = (k == 0);
        return;  // sample order is fixed, so the witness is deterministic
      }
    }
  });
  bool centers = true;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (hits[i].stays) {
      core.cells.insert(cells[i]);
      core.witness.emplace(cells[i], hits[i].at);
    }
    if (!hits[i].stays || !hits[i].center_stays) centers = false;
  }
  core.all_centers_stay = centers && core.cells.count() == v.count();
  for (const auto& s : seeds) {
    if (!v.contains(s.cell)) continue;
    core.cells.insert(s.cell);
    core.witness[s.cell] = s.location;  // rest point beats a sampled witness
  }
  return core;
}

/// Metric separating function on N/L: 0 exactly on the L cells, 1 exactly on
/// the core cells, d(x,L) / (d(x,L) + d(x,core)) in between with distances
/// measured to the closed cell regions. With L empty the collapsed class is a
/// detached virtual basepoint: d(x, L) is pinned at 1 + diam(domain).
class SeparatingFunction {
 public:
  SeparatingFunction(const CellSet& l, const CellSet& core_cells)
      : l_(l), core_(core_cells), virtual_l_(l.empty()) {
    if (core_cells.empty())
      throw std::invalid_argument("separating function: empty forward core");
    if (!l.empty() && !(l & core_cells).empty())
      throw std::invalid_argument(
          "separating function: L meets the forward core (pair is not weakly regular)");
    far_ = 1.0 + core_cells.grid()->domain().diameter();
  }

  double operator()(const Vec& x) const {
    const double dl = virtual_l_ ? far_ : distance_to_set_region(x, l_);
    if (dl == 0.0) return 0.0;
    const double dc = distance_to_set_region(x, core_);
    return dl / (dl + dc);
  }

 private:
  const CellSet& l_;
  const CellSet& core_;
  bool virtual_l_;
  double far_ = 0;
};

struct LyapunovData {
  double t_cut = 20.0;
  double tail_bound = 0;  // e^{-t_cut}, the truncation certificate
  // Per grid cell; NaN outside N.
  std::vector<double> rho, envelope, g;
  bool constant_envelope = false;
};

namespace detail {

struct OrbitScalars {
  std::vector<double> times;
  std::vector<double> rho;
  bool absorbed = false;
};

/// Samples rho along the quotient orbit from x until absorption ([L], i.e.
/// leaving V) or t_cut, with the absorption time refined by bisection.
inline OrbitScalars rho_along_orbit(const IndexPairData& pair, const PseudoGradientField& y,
                                    const SeparatingFunction& rho, const Vec& x, double t_cut,
                                    const IntegratorConfig& cfg) {
  OrbitScalars out;
  IntegratorConfig c2 = cfg;
  c2.t_max = std::max(cfg.t_max, t_cut);
  Vec last_in = x;
  double t_in = 0;
  bool exited = false;
  walk_orbit(y, x, t_cut, c2, [&](double t, const Vec& p) {
    if (!pair.V.contains_point(p)) {
      exited = true;
      return false;
    }
    out.times.push_back(t);
    out.rho.push_back(rho(p));
    last_in = p;
    t_in = t;
    return true;
  });
  if (exited) {
    double lo = 0.0, hi = cfg.step;
    while (hi - lo > cfg.step / 100.0) {
      const double mid = 0.5 * (lo + hi);
      if (pair.V.contains_point(detail::rk4_step(y, last_in, mid)))
        lo = mid;
      else
        hi = mid;
    }
    const double tau = 0.5 * (lo + hi);
    if (tau > 0) {
      const Vec pe = detail::rk4_step(y, last_in, tau);
      out.times.push_back(t_in + tau);
      out.rho.push_back(rho(pe));
    }
    out.absorbed = true;
  }
  return out;
}

/// g = integral of e^{-t} * (suffix sup of rho) along the orbit, trapezoid in
/// t, zero after absorption. Returns {envelope(0), g}.
inline std::pair<double, double> envelope_and_g(const OrbitScalars& orbit) {
  if (orbit.times.empty()) return {0.0, 0.0};
  const std::size_t m = orbit.times.size();
  std::vector<double> env(m);
  double run = 0;
  for (std::size_t k = m; k-- > 0;) {
    run = std::max(run, orbit.rho[k]);
    env[k] = run;
  }
  double g = 0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const double u0 = std::exp(-orbit.times[k]) * env[k];
    const double u1 = std::exp(-orbit.times[k + 1]) * env[k + 1];
    g += 0.5 * (u0 + u1) * (orbit.times[k + 1] - orbit.times[k]);
  }
  // The trapezoid rule overshoots on the convex decay weight; keep the
  // contract g <= 1.
  return {env.front(), std::min(g, 1.0)};
}

}  // namespace detail

/// Per-cell Lyapunov data for the pair: rho at the cell's evaluation point,
/// the sup-envelope along its quotient orbit, and the decay-weighted integral
/// g. Core cells evaluate at their invariance witness; everything else at the
/// center. L cells are 0 by definition.
inline LyapunovData compute_lyapunov(const IndexPairData& pair, const PseudoGradientField& y,
                                     const ForwardCore& core, const IntegratorConfig& cfg,
                                     double t_cut = 20.0) {
  if (pair.degenerate) throw std::invalid_argument("lyapunov: degenerate pair (L = N)");
  const auto& g = *pair.N.grid();
  LyapunovData out;
  out.t_cut = t_cut;
  out.tail_bound = std::exp(-t_cut);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.rho.assign(g.cell_count(), nan);
  out.envelope.assign(g.cell_count(), nan);
  out.g.assign(g.cell_count(), nan);

  // When every cell of V is core via its own center, rho is identically 1
  // along every orbit and the integral collapses to 1 - e^{-t_cut}.
  if (core.all_centers_stay && pair.L.empty()) {
    out.constant_envelope = true;
    const double gv = 1.0 - std::exp(-t_cut);
    pair.N.for_each([&](std::size_t c) {
      out.rho[c] = 1.0;
      out.envelope[c] = 1.0;
      out.g[c] = gv;
    });
    return out;
  }

  const SeparatingFunction rho(pair.L, core.cells);
  pair.L.for_each([&](std::size_t c) {
    out.rho[c] = 0.0;
    out.envelope[c] = 0.0;
    out.g[c] = 0.0;
  });
  const auto cells = (pair.N - pair.L).cells();
  parallel_for(cells.size(), [&](std::size_t i) {
    const std::size_t c = cells[i];
    const Vec x = core.cells.contains(c) ? core.witness_for(c) : g.center(c);
    const auto orbit = detail::rho_along_orbit(pair, y, rho, x, t_cut, cfg);
    const auto [env0, gval] = detail::envelope_and_g(orbit);
    out.rho[c] = rho(g.center(c));
    out.envelope[c] = env0;
    out.g[c] = gval;
  });
  return out;
}

/// Point query for the same quantities (used by monotonicity checks, which
/// re-run the trajectory quadrature rather than interpolating cell values).
inline double lyapunov_value_at(const IndexPairData& pair, const PseudoGradientField& y,
                                const ForwardCore& core, const Vec& x,
                                const IntegratorConfig& cfg, double t_cut = 20.0) {
  auto c = pair.N.grid()->locate(x);
  if (!c || !pair.N.contains(*c)) throw std::invalid_argument("lyapunov query: point not in N");
  if (pair.L.contains(*c)) return 0.0;
  const SeparatingFunction rho(pair.L, core.cells);
  const auto orbit = detail::rho_along_orbit(pair, y, rho, x, t_cut, cfg);
  return detail::envelope_and_g(orbit).second;
}

struct RegularizedPair {
  IndexPairData pair;
  double epsilon = 0;
  double min_core_g = 0;
  std::size_t added_cells = 0;
};

/// Enlarged exit set L' = { g <= epsilon }. epsilon must separate the L cells
/// (g = 0) from the core cells; the resulting pair is returned with all
/// verdicts unchecked and the caller re-runs the immediate-exit criterion.
inline RegularizedPair regularize(const IndexPairData& pair, const LyapunovData& lyap,
                                  const ForwardCore& core, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("regularize: epsilon must lie in (0, 1)");
  double min_core = 1.0;
  core.cells.for_each([&](std::size_t c) { min_core = std::min(min_core, lyap.g[c]); });
  if (epsilon >= min_core)
    throw std::invalid_argument("regularize: epsilon does not separate L from the core (min core g = " +
                                format_double(min_core) + ")");
  CellSet lp(pair.N.grid());
  pair.N.for_each([&](std::size_t c) {
    if (lyap.g[c] <= epsilon) lp.insert(c);
  });
  RegularizedPair out;
  out.epsilon = epsilon;
  out.min_core_g = min_core;
  out.added_cells = lp.count() - pair.L.count();
  out.pair = make_index_pair(pair.N, std::move(lp), pair.T);
  return out;
}

inline void dump_lyapunov_csv(std::ostream& os, const CellSet& n, const LyapunovData& d) {
  const auto& g = *n.grid();
  for (std::size_t i = 0; i < g.dim(); ++i) os << "i" << i << ",";
  for (std::size_t i = 0; i < g.dim(); ++i) os << "c" << i << ",";
  os << "rho,envelope,g\n";
  n.for_each([&](std::size_t c) {
    const MultiIndex mi = g.multi(c);
    const Vec ctr = g.center(c);
    for (std::size_t i = 0; i < g.dim(); ++i) os << mi[i] << ",";
    for (std::size_t i = 0; i < g.dim(); ++i) os << format_double(ctr[i]) << ",";
    os << format_double(d.rho[c]) << "," << format_double(d.envelope[c]) << ","
       << format_double(d.g[c]) << "\n";
  });
}

}  // namespace conley
