#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "conley/flow.hpp"
#include "conley/grid.hpp"
#include "conley/parallel.hpp"
#include "conley/sampling.hpp"

namespace conley {

enum class Verdict { unchecked, pass, fail, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::unchecked: return "unchecked";
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct Witness {
  Vec point;
  double time = 0;
  double violation = 0;
  std::string detail;
};

struct CheckResult {
  Verdict verdict = Verdict::unchecked;
  long samples = 0;
  long soft_violations = 0;  // within one-cell tolerance, not counted as fail
  std::vector<Witness> witnesses;
  std::string note;

  bool passed() const { return verdict == Verdict::pass; }
};

/// Candidate pair (N, L) with V = closure(N - L) and per-axiom verdicts.
/// T records the window parameter when the pair came from the trapped-set
/// construction, 0 otherwise.
struct IndexPairData {
  CellSet N, L, V;
  double T = 0;
  bool degenerate = false;
  CheckResult isolating, axiom_i, axiom_ii, weakly_regular, regular_criterion;
};

inline IndexPairData make_index_pair(CellSet n, CellSet l, double T = 0) {
  IndexPairData p;
  auto cd = closed_difference(n, l);
  p.N = std::move(n);
  p.L = std::move(l);
  p.V = std::move(cd.cells);
  p.T = T;
  p.degenerate = cd.degenerate;
  return p;
}

// ---------------------------------------------------------------------------
// Trapped-set construction: G = {x in A : orbit over [-T, T] stays in A} and
// its exit slice Gamma = {x in G : forward orbit over [0, T] touches the
// boundary cells of A}. G is sampled conservatively (all samples must stay);
// Gamma expansively (any sample touching counts).
// ---------------------------------------------------------------------------
inline CellSet compute_trapped_set(const PseudoGradientField& y, const CellSet& a, double T,
                                   const IntegratorConfig& cfg) {
  if (a.empty()) throw std::invalid_argument("trapped set: A is empty");
  if (!(T > 0)) throw std::invalid_argument("trapped set: T must be positive");
  // Nothing can leave a full periodic grid.
  if (a.is_full()) {
    bool all_periodic = true;
    for (std::size_t i = 0; i < a.grid()->dim(); ++i)
      if (!a.grid()->domain().periodic[i]) all_periodic = false;
    if (all_periodic) return a;
  }
  const auto cells = a.cells();
  std::vector<char> keep(cells.size(), 0);
  const auto& g = *a.grid();
  const CellSet target = cfg.safety_margin ? combinatorial_interior(a) : a;
  parallel_for(cells.size(), [&](std::size_t i) {
    for (const Vec& p : cell_sample_points(g, cells[i])) {
      if (!orbit_in_set(y, p, -T, T, target, cfg)) return;
    }
    keep[i] = 1;
  });
  CellSet out(a.grid());
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (keep[i]) out.insert(cells[i]);
  return out;
}

inline CellSet compute_exit_slice(const PseudoGradientField& y, const CellSet& a,
                                  const CellSet& trapped, double T, const IntegratorConfig& cfg) {
  if (!trapped.is_subset_of(a)) throw std::invalid_argument("exit slice: G must lie in A");
  const CellSet bd = combinatorial_boundary(a);
  CellSet out(a.grid());
  if (bd.empty()) return out;
  const auto cells = trapped.cells();
  std::vector<char> hit(cells.size(), 0);
  const auto& g = *a.grid();
  parallel_for(cells.size(), [&](std::size_t i) {
    for (const Vec& p : cell_sample_points(g, cells[i])) {
      bool touched = false;
      walk_orbit(y, p, T, cfg, [&](double, const Vec& q) {
        if (bd.contains_point(q)) {
          touched = true;
          return false;
        }
        return true;
      });
      if (touched) {
        hit[i] = 1;
        return;
      }
    }
  });
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (hit[i]) out.insert(cells[i]);
  return out;
}

/// Isolation: the trapped set must avoid the combinatorial boundary of A.
inline CheckResult check_isolation(const CellSet& a, const CellSet& trapped) {
  CheckResult r;
  r.samples = static_cast<long>(trapped.count());
  const CellSet inter = combinatorial_interior(a);
  CellSet outside = trapped - inter;
  if (outside.empty()) {
    r.verdict = Verdict::pass;
  } else {
    r.verdict = Verdict::fail;
    const auto& g = *a.grid();
    outside.for_each([&](std::size_t c) {
      if (r.witnesses.size() < 8)
        r.witnesses.push_back({g.center(c), 0, 1, "trapped cell touches the boundary of A"});
    });
    r.note = std::to_string(outside.count()) + " trapped cells outside int(A)";
  }
  return r;
}

namespace detail {

/// Per-sample orbit record against the pair: cell classification stream.
enum class Region { in_L, in_NminusL, outside_N };

inline Region classify(const IndexPairData& pair, const Vec& p) {
  auto c = pair.N.grid()->locate(p);
  if (!c || !pair.N.contains(*c)) return Region::outside_N;
  if (pair.L.contains(*c)) return Region::in_L;
  return Region::in_NminusL;
}

}  // namespace detail

/// Axiom (i): orbit segments from L that stay in N stay in L. Axiom (ii):
/// orbits leaving N leave through L. Violations within one cell diagonal are
/// tolerated (grid discretization cannot resolve boundary tangencies); a fail
/// verdict requires a witness exceeding it, otherwise the verdict downgrades
/// to inconclusive.
inline void check_pair_axioms(IndexPairData& pair, const PseudoGradientField& y, double horizon,
                              const IntegratorConfig& cfg) {
  const auto& g = *pair.N.grid();
  const double tol = g.cell_diagonal();
  IntegratorConfig c2 = cfg;
  c2.t_max = std::max(cfg.t_max, horizon);

  // Full periodic grid with empty L: no orbit can leave, both axioms vacuous.
  if (pair.N.is_full() && pair.L.empty()) {
    bool all_periodic = true;
    for (std::size_t i = 0; i < g.dim(); ++i)
      if (!g.domain().periodic[i]) all_periodic = false;
    if (all_periodic) {
      pair.axiom_i.verdict = Verdict::pass;
      pair.axiom_i.note = "vacuous: L empty";
      pair.axiom_ii.verdict = Verdict::pass;
      pair.axiom_ii.note = "vacuous: no orbit can exit a full periodic grid";
      return;
    }
  }

  // Axiom (i) sweep over L samples.
  {
    CheckResult r;
    if (pair.L.empty()) {
      r.verdict = Verdict::pass;
      r.note = "vacuous: L empty";
    } else {
      const auto cells = pair.L.cells();
      std::vector<std::vector<Witness>> hard(cells.size());
      std::vector<long> soft(cells.size(), 0), counted(cells.size(), 0);
      parallel_for(cells.size(), [&](std::size_t i) {
        for (const Vec& p : cell_sample_points(g, cells[i])) {
          counted[i]++;
          walk_orbit(y, p, horizon, c2, [&](double t, const Vec& q) {
            const auto reg = detail::classify(pair, q);
            if (reg == detail::Region::outside_N) return false;  // obligation ends
            if (reg == detail::Region::in_NminusL) {
              const double d = distance_to_set_region(q, pair.L);
              if (d > tol) {
                hard[i].push_back({p, t, d, "orbit from L strays into N-L"});
                return false;
              }
              soft[i]++;
            }
            return true;
          });
        }
      });
      for (std::size_t i = 0; i < cells.size(); ++i) {
        r.samples += counted[i];
        r.soft_violations += soft[i];
        for (auto& w : hard[i])
          if (r.witnesses.size() < 8) r.witnesses.push_back(w);
        if (!hard[i].empty() && r.witnesses.size() >= 8) break;
      }
      if (!r.witnesses.empty())
        r.verdict = Verdict::fail;
      else
        r.verdict = Verdict::pass;
    }
    pair.axiom_i = std::move(r);
  }

  // Axiom (ii) sweep over N samples.
  {
    CheckResult r;
    const auto cells = pair.N.cells();
    std::vector<std::vector<Witness>> hard(cells.size());
    std::vector<long> soft(cells.size(), 0), counted(cells.size(), 0);
    parallel_for(cells.size(), [&](std::size_t i) {
      for (const Vec& p : cell_sample_points(g, cells[i])) {
        // Corner samples sit on shared cell walls and may round into the
        // neighboring cell; a sample that starts outside N is not an
        // obligation, it is the boundary ambiguity.
        if (detail::classify(pair, p) == detail::Region::outside_N) continue;
        counted[i]++;
        Vec last_in = p;
        double t_in = 0;
        bool exited = false;
        walk_orbit(y, p, horizon, c2, [&](double t, const Vec& q) {
          if (detail::classify(pair, q) == detail::Region::outside_N) {
            exited = true;
            return false;
          }
          last_in = q;
          t_in = t;
          return true;
        });
        if (!exited) continue;  // no obligation within the horizon
        if (pair.L.empty()) {
          hard[i].push_back({p, t_in, g.domain().diameter(), "orbit exits N but L is empty"});
          continue;
        }
        const double d = distance_to_set_region(last_in, pair.L);
        if (d > tol)
          hard[i].push_back({p, t_in, d, "orbit exits N without passing through L"});
        else if (d > 0)
          soft[i]++;
      }
    });
    for (std::size_t i = 0; i < cells.size(); ++i) {
      r.samples += counted[i];
      r.soft_violations += soft[i];
      for (auto& w : hard[i])
        if (r.witnesses.size() < 8) r.witnesses.push_back(w);
    }
    bool any_hard = false;
    for (auto& h : hard)
      if (!h.empty()) any_hard = true;
    r.verdict = any_hard ? Verdict::fail : Verdict::pass;
    pair.axiom_ii = std::move(r);
  }
}

/// Weak regularity: every sampled point of L leaves V within the horizon.
inline void check_weak_regularity(IndexPairData& pair, const PseudoGradientField& y,
                                  double horizon, const IntegratorConfig& cfg) {
  CheckResult r;
  if (pair.L.empty()) {
    r.verdict = Verdict::pass;
    r.note = "vacuous: L empty";
    pair.weakly_regular = std::move(r);
    return;
  }
  const auto& g = *pair.N.grid();
  IntegratorConfig c2 = cfg;
  c2.t_max = std::max(cfg.t_max, horizon);
  const auto cells = pair.L.cells();
  std::vector<std::vector<Witness>> bad(cells.size());
  std::vector<long> counted(cells.size(), 0);
  parallel_for(cells.size(), [&](std::size_t i) {
    for (const Vec& p : cell_sample_points(g, cells[i])) {
      counted[i]++;
      bool escaped = false;
      walk_orbit(y, p, horizon, c2, [&](double, const Vec& q) {
        if (!pair.V.contains_point(q)) {
          escaped = true;
          return false;
        }
        return true;
      });
      if (!escaped) bad[i].push_back({p, horizon, horizon, "orbit never leaves V"});
    }
  });
  for (std::size_t i = 0; i < cells.size(); ++i) {
    r.samples += counted[i];
    for (auto& w : bad[i])
      if (r.witnesses.size() < 8) r.witnesses.push_back(w);
  }
  bool any = false;
  for (auto& b : bad)
    if (!b.empty()) any = true;
  r.verdict = any ? Verdict::fail : Verdict::pass;
  pair.weakly_regular = std::move(r);
}

/// Sufficient criterion for regularity: orbits from L leave V immediately.
/// "Immediately" at grid scale: within two cell diagonals of travel. An orbit
/// that lingers in V beyond that (or sits there through the horizon, e.g. a
/// rest point in L) is a witness.
inline void check_immediate_exit(IndexPairData& pair, const PseudoGradientField& y,
                                 double horizon, const IntegratorConfig& cfg) {
  CheckResult r;
  if (pair.L.empty()) {
    r.verdict = Verdict::pass;
    r.note = "vacuous: L empty";
    pair.regular_criterion = std::move(r);
    return;
  }
  const auto& g = *pair.N.grid();
  const double travel_tol = 2.0 * g.cell_diagonal();
  IntegratorConfig c2 = cfg;
  c2.t_max = std::max(cfg.t_max, horizon);
  const auto cells = pair.L.cells();
  std::vector<std::vector<Witness>> bad(cells.size());
  std::vector<long> counted(cells.size(), 0);
  parallel_for(cells.size(), [&](std::size_t i) {
    for (const Vec& p : cell_sample_points(g, cells[i])) {
      counted[i]++;
      double arc = 0;
      Vec prev = p;
      bool inside = pair.V.contains_point(p);
      if (!inside) continue;  // already clear of V
      bool escaped = false;
      double t_end = 0;
      walk_orbit(y, p, horizon, c2, [&](double t, const Vec& q) {
        if (t > 0) arc += g.domain().distance(prev, q);
        prev = q;
        t_end = t;
        if (!pair.V.contains_point(q)) {
          escaped = true;
          return false;
        }
        return arc <= travel_tol;
      });
      if (!escaped)
        bad[i].push_back({p, t_end, arc,
                          arc > travel_tol ? "orbit lingers in V past the travel tolerance"
                                           : "orbit stays in V through the horizon"});
    }
  });
  for (std::size_t i = 0; i < cells.size(); ++i) {
    r.samples += counted[i];
    for (auto& w : bad[i])
      if (r.witnesses.size() < 8) r.witnesses.push_back(w);
  }
  bool any = false;
  for (auto& b : bad)
    if (!b.empty()) any = true;
  r.verdict = any ? Verdict::fail : Verdict::pass;
  pair.regular_criterion = std::move(r);
}

// ---------------------------------------------------------------------------
// Exit-time map and quotient semiflow. A point whose cell lies in L is the
// collapsed class; otherwise the orbit runs in V (the closure of N - L, which
// carries the geometric extent of N - L at cell resolution) until it leaves.
// ---------------------------------------------------------------------------
struct ExitTime {
  std::optional<double> time;  // nullopt = never exits within t_max
};

inline ExitTime exit_time(const IndexPairData& pair, const PseudoGradientField& y, const Vec& x,
                          const IntegratorConfig& cfg) {
  auto c = pair.N.grid()->locate(x);
  if (!c || !pair.N.contains(*c)) throw std::invalid_argument("exit_time: point not in N");
  if (pair.L.contains(*c)) return {0.0};
  return {first_exit(y, x, pair.V, cfg)};
}

/// Point of N-L or the collapsed class [L].
struct QuotientPoint {
  std::optional<Vec> point;  // nullopt = [L]
  bool collapsed() const { return !point.has_value(); }
  static QuotientPoint base() { return {}; }
  static QuotientPoint at(Vec p) { return {std::move(p)}; }
};

inline QuotientPoint quotient_flow(const IndexPairData& pair, const PseudoGradientField& y,
                                   const QuotientPoint& q, double t, const IntegratorConfig& cfg) {
  if (t < 0) throw std::invalid_argument("quotient_flow: t must be nonnegative");
  if (q.collapsed()) return QuotientPoint::base();
  auto c = pair.N.grid()->locate(*q.point);
  if (!c || !pair.N.contains(*c) || pair.L.contains(*c)) return QuotientPoint::base();
  bool absorbed = false;
  IntegratorConfig c2 = cfg;
  c2.t_max = std::max(cfg.t_max, t);
  Vec end = walk_orbit(y, *q.point, t, c2, [&](double, const Vec& p) {
    if (!pair.V.contains_point(p)) {
      absorbed = true;
      return false;
    }
    return true;
  });
  if (absorbed) return QuotientPoint::base();
  return QuotientPoint::at(end);
}

/// Every sampled point of the exit slice must leave the trapped set within
/// the escape horizon (three windows for the construction above). A fail
/// witness is a sample whose whole horizon orbit stays a full cell inside G.
inline CheckResult check_exit_slice_escape(const PseudoGradientField& y, const CellSet& trapped,
                                           const CellSet& slice, double horizon,
                                           const IntegratorConfig& cfg) {
  CheckResult r;
  if (!slice.is_subset_of(trapped))
    throw std::invalid_argument("exit slice escape: Gamma must lie in G");
  if (slice.empty()) {
    r.verdict = Verdict::pass;
    r.note = "vacuous: Gamma empty";
    return r;
  }
  const auto& g = *trapped.grid();
  IntegratorConfig c2 = cfg;
  c2.t_max = std::max(cfg.t_max, horizon);
  const auto cells = slice.cells();
  std::vector<std::vector<Witness>> bad(cells.size());
  std::vector<long> counted(cells.size(), 0);
  const CellSet outside = trapped.complement();
  parallel_for(cells.size(), [&](std::size_t i) {
    for (const Vec& p : cell_sample_points(g, cells[i])) {
      counted[i]++;
      bool left = false;
      walk_orbit(y, p, horizon, c2, [&](double, const Vec& q) {
        if (!trapped.contains_point(q)) {
          left = true;
          return false;
        }
        return true;
      });
      if (left) continue;
      // Second pass only for the rare non-escaping sample: measure how far
      // inside G the orbit stays, so sub-cell grazing is not flagged.
      double margin = g.domain().diameter();
      if (!outside.empty()) {
        walk_orbit(y, p, horizon, c2, [&](double, const Vec& q) {
          margin = std::min(margin, distance_to_set_region(q, outside));
          return true;
        });
      }
      if (margin > g.cell_diagonal())
        bad[i].push_back({p, horizon, margin, "orbit stays inside G through the horizon"});
    }
  });
  for (std::size_t i = 0; i < cells.size(); ++i) {
    r.samples += counted[i];
    for (auto& w : bad[i])
      if (r.witnesses.size() < 8) r.witnesses.push_back(w);
  }
  bool any = false;
  for (auto& b : bad)
    if (!b.empty()) any = true;
  r.verdict = any ? Verdict::fail : Verdict::pass;
  return r;
}

}  // namespace conley
