#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "conley/cohomology.hpp"
#include "conley/critical.hpp"
#include "conley/index_pair.hpp"
#include "conley/lyapunov.hpp"

namespace conley {

// ---------------------------------------------------------------------------
// Minimum ascent rate Y.f over a cell set, the quantitative ingredient of the
// deformation estimates. Deterministic reduction order (ascending cells,
// fixed sample order).
// ---------------------------------------------------------------------------
struct MinAscentRate {
  double delta = 0;
  Vec argmin;
  long samples = 0;
  bool near_zero = false;  // a critical cell is inside S and no exclusion removed it
};

inline MinAscentRate min_ascent_rate(const PseudoGradientField& y, const CellSet& s,
                                     const std::vector<CellSet>& exclusions = {}) {
  MinAscentRate out;
  out.delta = std::numeric_limits<double>::infinity();
  const auto& g = *s.grid();
  bool any = false;
  s.for_each([&](std::size_t c) {
    for (const auto& ex : exclusions)
      if (ex.contains(c)) return;
    for (const Vec& p : cell_sample_points(g, c)) {
      const double v = y.ascent_rate(p);
      out.samples++;
      if (v < out.delta) {
        out.delta = v;
        out.argmin = p;
      }
      any = true;
    }
  });
  if (!any) throw std::invalid_argument("min ascent rate: empty remainder");
  out.near_zero = out.delta < 1e-9;
  return out;
}

/// Cells of S whose center objective value lies in [a, b].
inline CellSet level_band(const ScalarField& f, const CellSet& s, double a, double b) {
  CellSet out(s.grid());
  const auto& g = *s.grid();
  s.for_each([&](std::size_t c) {
    const double v = f.value(g.center(c));
    if (v >= a && v <= b) out.insert(c);
  });
  return out;
}

/// Quotient superlevel set: the collapsed class plus the cells of N - L whose
/// center value is at least a. The collapsed class belongs to every
/// superlevel set.
struct QuotientSuperlevel {
  CellSet cells;
  double level = 0;
};

inline QuotientSuperlevel superlevel(const IndexPairData& pair, const ScalarField& f, double a) {
  QuotientSuperlevel out;
  out.level = a;
  out.cells = level_band(f, pair.N - pair.L, a, std::numeric_limits<double>::infinity());
  return out;
}

// ---------------------------------------------------------------------------
// Uniform exit horizon: smallest ladder time T (doubling search) by which
// every sampled point of L has left V. Also checks that the cells adjacent
// to L are absorbed by T, so the collapsed class has a neighborhood of
// points that all map to it.
// ---------------------------------------------------------------------------
struct UniformExitTime {
  bool exists = false;
  double T = 0;
  double max_exit = 0;
  CheckResult neighborhood;
  std::vector<Witness> witnesses;
};

inline UniformExitTime uniform_exit_time(const IndexPairData& pair, const PseudoGradientField& y,
                                         const IntegratorConfig& cfg) {
  UniformExitTime out;
  if (pair.L.empty()) {
    out.exists = true;
    out.T = 0;
    out.neighborhood.verdict = Verdict::pass;
    out.neighborhood.note = "vacuous: L empty";
    return out;
  }
  const auto& g = *pair.N.grid();
  auto sweep_max_exit = [&](const CellSet& cells, std::vector<Witness>& bad) -> double {
    const auto list = cells.cells();
    std::vector<double> worst(list.size(), 0.0);
    std::vector<std::optional<Vec>> stuck(list.size());
    parallel_for(list.size(), [&](std::size_t i) {
      for (const Vec& p : cell_sample_points(g, list[i])) {
        auto t = first_exit(y, p, pair.V, cfg);
        if (!t) {
          stuck[i] = p;
          return;
        }
        worst[i] = std::max(worst[i], *t);
      }
    });
    double m = 0;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (stuck[i]) {
        bad.push_back({*stuck[i], cfg.t_max, cfg.t_max, "orbit never leaves V within t_max"});
      }
      m = std::max(m, worst[i]);
    }
    return m;
  };

  const double worst = sweep_max_exit(pair.L, out.witnesses);
  if (!out.witnesses.empty()) {
    out.exists = false;  // contradicts weak regularity
    out.neighborhood.verdict = Verdict::fail;
    out.neighborhood.note = "a sampled point of L never leaves V";
    return out;
  }
  out.exists = true;
  out.max_exit = worst;

  // For the collapsed class to have an absorbed neighborhood, the cells
  // adjacent to L must leave V in finite time as well; T covers both sweeps.
  CellSet ring = face_halo(pair.L) & pair.N;
  double ring_worst = 0;
  std::vector<Witness> ring_bad;
  if (!ring.empty()) {
    ring_worst = sweep_max_exit(ring, ring_bad);
    out.neighborhood.samples = static_cast<long>(ring.count());
  }
  double ladder = 0.01;
  while (ladder < std::max(worst, ring_worst)) ladder *= 2;
  out.T = ladder;
  if (!ring_bad.empty()) {
    out.neighborhood.verdict = Verdict::fail;
    out.neighborhood.note = "a cell adjacent to L is never absorbed";
    for (auto& w : ring_bad)
      if (out.neighborhood.witnesses.size() < 8) out.neighborhood.witnesses.push_back(w);
  } else {
    out.neighborhood.verdict = Verdict::pass;
    if (ring.empty()) out.neighborhood.note = "no N-cells adjacent to L";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Deformation estimates.
// ---------------------------------------------------------------------------
struct DeformationReport {
  double a = 0, b = 0;   // band endpoints (c -/+ eps for the localized form)
  double delta = 0;      // min Y.f over the band (minus neighborhoods)
  double T = 0;          // push time
  double eps = 0;        // localized form only
  long samples = 0;
  long failures = 0;
  std::vector<Witness> witnesses;
  Verdict verdict = Verdict::unchecked;
};

/// Push across a critical-point-free band: every sampled point of the
/// superlevel set at a reaches the superlevel set at b (or the collapsed
/// class) by T = (b - a) / delta.
inline DeformationReport first_deformation(const IndexPairData& pair,
                                           const PseudoGradientField& y, const ScalarField& f,
                                           const std::vector<CriticalPoint>& crits, double a,
                                           double b, const IntegratorConfig& cfg,
                                           long n_samples = 500, std::uint64_t seed = 0,
                                           double time_scale = 1.0) {
  if (a > b) throw std::invalid_argument("first deformation: requires a <= b");
  DeformationReport rep;
  rep.a = a;
  rep.b = b;
  if (a == b) {
    rep.verdict = Verdict::pass;
    return rep;
  }
  for (const auto& cp : crits)
    if (cp.f_value >= a && cp.f_value <= b && pair.V.contains(cp.cell))
      throw std::invalid_argument("first deformation: critical value inside [a, b]");
  const CellSet band = level_band(f, pair.V, a, b);
  if (!band.empty()) {
    const auto mar = min_ascent_rate(y, band);
    if (mar.delta <= 1e-12)
      throw std::invalid_argument("first deformation: ascent rate vanishes in the band");
    rep.delta = mar.delta;
    rep.T = time_scale * (b - a) / mar.delta;
  } else {
    rep.T = 0;  // no cells between the levels: the push is immediate
  }
  const QuotientSuperlevel from = superlevel(pair, f, a);
  if (from.cells.empty()) {
    rep.verdict = Verdict::pass;
    return rep;
  }
  IntegratorConfig c2 = cfg;
  c2.t_max = std::max(cfg.t_max, rep.T);
  QuasiSampler sampler(from.cells, seed);
  std::vector<char> fail(static_cast<std::size_t>(n_samples), 0);
  std::vector<Vec> pts(static_cast<std::size_t>(n_samples));
  parallel_for(static_cast<std::size_t>(n_samples), [&](std::size_t k) {
    const Vec x = sampler.point(k);
    pts[k] = x;
    const auto q = quotient_flow(pair, y, QuotientPoint::at(x), rep.T, c2);
    if (q.collapsed()) return;  // the collapsed class lies in every superlevel set
    if (f.value(*q.point) >= b - 1e-9 * std::max(1.0, std::abs(b))) return;
    fail[k] = 1;
  });
  rep.samples = n_samples;
  for (std::size_t k = 0; k < fail.size(); ++k) {
    if (!fail[k]) continue;
    rep.failures++;
    if (rep.witnesses.size() < 8)
      rep.witnesses.push_back({pts[k], rep.T, b - f.value(pts[k]), "did not reach the target level"});
  }
  rep.verdict = rep.failures == 0 ? Verdict::pass : Verdict::fail;
  return rep;
}

/// Axis-aligned neighborhood box around a critical point.
struct UBox {
  Vec center;
  double halfwidth = 0;

  bool contains(const Vec& p, const Domain& dom) const {
    const Vec d = dom.displacement(center, p);
    for (std::size_t i = 0; i < d.size(); ++i)
      if (std::abs(d[i]) > halfwidth) return false;
    return true;
  }
};

inline CellSet cells_in_boxes(const CellSet& s, const std::vector<UBox>& boxes) {
  CellSet out(s.grid());
  const auto& g = *s.grid();
  s.for_each([&](std::size_t c) {
    const Vec ctr = g.center(c);
    for (const auto& u : boxes)
      if (u.contains(ctr, g.domain())) {
        out.insert(c);
        return;
      }
  });
  return out;
}

/// Localized push around a critical level c: with eps = T * delta / 2, every
/// sampled point of the superlevel at c - eps either starts inside one of
/// the critical neighborhoods or reaches the superlevel at c + eps (or the
/// collapsed class) by T.
inline DeformationReport second_deformation(const IndexPairData& pair,
                                            const PseudoGradientField& y, const ScalarField& f,
                                            const std::vector<CriticalPoint>& crits, double c,
                                            double eps0, double T, double u_halfwidth,
                                            const IntegratorConfig& cfg, long n_samples = 500,
                                            std::uint64_t seed = 0) {
  if (!(eps0 > 0)) throw std::invalid_argument("second deformation: eps0 must be positive");
  DeformationReport rep;
  rep.T = T;
  const auto& g = *pair.N.grid();
  std::vector<UBox> boxes;
  for (const auto& cp : crits) {
    if (!pair.V.contains(cp.cell)) continue;
    if (cp.f_value < c - eps0 || cp.f_value > c + eps0) continue;
    if (std::abs(cp.f_value - c) > 1e-6 * std::max(1.0, std::abs(c)) + 1e-9)
      throw std::invalid_argument(
          "second deformation: a critical value other than c lies inside [c-eps0, c+eps0]");
    if (u_halfwidth < g.max_cell_width())
      throw std::invalid_argument(
          "second deformation: neighborhood smaller than a cell cannot cover its critical point");
    boxes.push_back({cp.location, u_halfwidth});
  }
  const CellSet band = level_band(f, pair.V, c - eps0, c + eps0);
  const CellSet excluded = cells_in_boxes(band, boxes);
  const CellSet remainder = band - excluded;
  double eps = eps0;
  if (!remainder.empty()) {
    const auto mar = min_ascent_rate(y, remainder);
    if (mar.delta <= 1e-12)
      throw std::invalid_argument(
          "second deformation: ascent rate vanishes outside the neighborhoods (uncovered "
          "critical point?)");
    rep.delta = mar.delta;
    eps = std::min(T * mar.delta / 2.0, eps0);
  }
  rep.eps = eps;
  rep.a = c - eps;
  rep.b = c + eps;
  const QuotientSuperlevel from = superlevel(pair, f, c - eps);
  if (from.cells.empty()) {
    rep.verdict = Verdict::pass;
    return rep;
  }
  IntegratorConfig c2 = cfg;
  c2.t_max = std::max(cfg.t_max, T);
  QuasiSampler sampler(from.cells, seed);
  std::vector<char> fail(static_cast<std::size_t>(n_samples), 0);
  std::vector<Vec> pts(static_cast<std::size_t>(n_samples));
  parallel_for(static_cast<std::size_t>(n_samples), [&](std::size_t k) {
    const Vec x = sampler.point(k);
    pts[k] = x;
    for (const auto& u : boxes)
      if (u.contains(x, g.domain())) return;
    const auto q = quotient_flow(pair, y, QuotientPoint::at(x), T, c2);
    if (q.collapsed()) return;
    if (f.value(*q.point) >= c + eps - 1e-9 * std::max(1.0, std::abs(c) + eps)) return;
    fail[k] = 1;
  });
  rep.samples = n_samples;
  for (std::size_t k = 0; k < fail.size(); ++k) {
    if (!fail[k]) continue;
    rep.failures++;
    if (rep.witnesses.size() < 8)
      rep.witnesses.push_back({pts[k], T, 0, "missed both the neighborhoods and the target level"});
  }
  rep.verdict = rep.failures == 0 ? Verdict::pass : Verdict::fail;
  return rep;
}

// ---------------------------------------------------------------------------
// Covering construction: per critical level, a localized push (T = 1) with
// eps = delta/2 and a band push above it; points of N/L are either absorbed
// by t0 or pass through their critical neighborhood at the level's time.
// ---------------------------------------------------------------------------
struct CoverLevel {
  double value = 0;
  double eps = 0;
  double t_band = 0;  // band push time above this level
};

struct CoverReport {
  std::vector<CoverLevel> levels;  // descending by value
  double t_base = 0;
  double t0 = 0;
  std::vector<double> times;  // aligned with the critical-point list
  long samples = 0;
  long absorbed = 0;
  long captured = 0;
  long failures = 0;
  std::vector<Witness> witnesses;
  Verdict verdict = Verdict::unchecked;
  Verdict n_version = Verdict::unchecked;
};

inline CoverReport covering_times(const IndexPairData& pair, const PseudoGradientField& y,
                                  const ScalarField& f, const std::vector<CriticalPoint>& crits,
                                  double u_halfwidth, const IntegratorConfig& cfg,
                                  long n_samples = 500, std::uint64_t seed = 0,
                                  bool check_n_version = false) {
  CoverReport rep;
  const auto& g = *pair.N.grid();
  const CellSet body = pair.N - pair.L;
  if (body.empty()) throw std::invalid_argument("covering: N - L is empty");

  double min_f = std::numeric_limits<double>::infinity();
  double max_f = -std::numeric_limits<double>::infinity();
  pair.V.for_each([&](std::size_t c) {
    const double v = f.value(g.center(c));
    min_f = std::min(min_f, v);
    max_f = std::max(max_f, v);
  });
  const double pad = 0.05 * std::max(1e-12, max_f - min_f) + 1e-9;

  // Distinct critical values inside V, descending.
  std::vector<double> values;
  for (const auto& cp : crits)
    if (pair.V.contains(cp.cell)) values.push_back(cp.f_value);
  std::sort(values.begin(), values.end(), std::greater<>());
  const double group_tol = 1e-6 * std::max(1.0, max_f - min_f);
  std::vector<double> lev;
  for (double v : values)
    if (lev.empty() || lev.back() - v > group_tol) lev.push_back(v);

  auto band_push_time = [&](double lo, double hi) -> double {
    if (hi <= lo) return 0;
    const CellSet band = level_band(f, pair.V, lo, hi);
    if (band.empty()) return 0;
    const auto mar = min_ascent_rate(y, band);
    if (mar.delta <= 1e-12)
      throw std::invalid_argument("covering: ascent rate vanishes in a supposedly regular band");
    return (hi - lo) / mar.delta;
  };

  const double t44 = 1.0;
  for (std::size_t j = 0; j < lev.size(); ++j) {
    CoverLevel L;
    L.value = lev[j];
    const double gap_up = j == 0 ? std::numeric_limits<double>::infinity() : lev[j - 1] - lev[j];
    const double gap_dn =
        j + 1 < lev.size() ? lev[j] - lev[j + 1] : std::numeric_limits<double>::infinity();
    double eps0 = 0.5 * std::min(gap_up, gap_dn);
    if (!std::isfinite(eps0)) eps0 = std::max(0.25 * (max_f - min_f), 1e-6);
    std::vector<UBox> boxes;
    for (const auto& cp : crits)
      if (pair.V.contains(cp.cell) && std::abs(cp.f_value - L.value) <= group_tol)
        boxes.push_back({cp.location, u_halfwidth});
    const CellSet band = level_band(f, pair.V, L.value - eps0, L.value + eps0);
    const CellSet remainder = band - cells_in_boxes(band, boxes);
    if (remainder.empty()) {
      L.eps = eps0;
    } else {
      const auto mar = min_ascent_rate(y, remainder);
      if (mar.delta <= 1e-12)
        throw std::invalid_argument("covering: a critical point escaped its neighborhood");
      L.eps = std::min(t44 * mar.delta / 2.0, eps0);
    }
    const double ceiling = j == 0 ? max_f + pad : lev[j - 1] - rep.levels[j - 1].eps;
    L.t_band = band_push_time(L.value + L.eps, ceiling);
    rep.levels.push_back(L);
  }
  const double floor_level =
      lev.empty() ? max_f + pad : lev.back() - rep.levels.back().eps;
  rep.t_base = band_push_time(min_f - pad, floor_level);

  // t(level j) = t_base + sum over lower levels of (band push + 1).
  std::vector<double> level_time(rep.levels.size(), 0);
  for (std::size_t j = rep.levels.size(); j-- > 0;) {
    double t = rep.t_base;
    for (std::size_t k = j + 1; k < rep.levels.size(); ++k) t += rep.levels[k].t_band + t44;
    level_time[j] = t;
  }
  rep.t0 = rep.t_base;
  for (const auto& L : rep.levels) rep.t0 += L.t_band + t44;

  std::vector<UBox> boxes;
  std::vector<double> box_time;
  rep.times.assign(crits.size(), 0);
  for (std::size_t i = 0; i < crits.size(); ++i) {
    if (!pair.V.contains(crits[i].cell)) continue;
    std::size_t j = 0;
    for (; j < rep.levels.size(); ++j)
      if (std::abs(crits[i].f_value - rep.levels[j].value) <= group_tol) break;
    rep.times[i] = level_time[j];
    boxes.push_back({crits[i].location, u_halfwidth});
    box_time.push_back(level_time[j]);
  }

  // Verification sweep: one simulation per sample with checkpoints at the
  // capture times, absorption tracked against V.
  std::vector<double> checkpoints = box_time;
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  IntegratorConfig c2 = cfg;
  c2.t_max = std::max(cfg.t_max, rep.t0 + 1.0);
  QuasiSampler sampler(body, seed);
  enum class Outcome : char { absorbed, captured, uncovered };
  std::vector<Outcome> res(static_cast<std::size_t>(n_samples), Outcome::uncovered);
  std::vector<char> res_n(static_cast<std::size_t>(n_samples), 0);
  std::vector<Vec> pts(static_cast<std::size_t>(n_samples));
  parallel_for(static_cast<std::size_t>(n_samples), [&](std::size_t k) {
    const Vec x0 = sampler.point(k);
    pts[k] = x0;
    double t_abs = -1;
    Vec x = x0;
    double t_prev = 0;
    std::vector<Vec> at_checkpoint;
    auto absorb_probe = [&](double base) {
      return [&, base](double dt, const Vec& p) {
        if (!pair.V.contains_point(p)) {
          t_abs = base + dt;
          return false;
        }
        return true;
      };
    };
    for (double tc : checkpoints) {
      if (t_abs < 0) x = walk_orbit(y, x, tc - t_prev, c2, absorb_probe(t_prev));
      at_checkpoint.push_back(x);
      t_prev = tc;
    }
    if (t_abs < 0) walk_orbit(y, x, rep.t0 - t_prev, c2, absorb_probe(t_prev));
    if (t_abs >= 0) {
      res[k] = Outcome::absorbed;
      res_n[k] = 1;
      return;
    }
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      const auto it = std::lower_bound(checkpoints.begin(), checkpoints.end(), box_time[b]);
      const Vec& pos = at_checkpoint[static_cast<std::size_t>(it - checkpoints.begin())];
      if (boxes[b].contains(g.domain().wrap(pos), g.domain())) {
        res[k] = Outcome::captured;
        break;
      }
    }
    res_n[k] = res[k] == Outcome::captured ? 1 : 0;
  });
  rep.samples = n_samples;
  for (std::size_t k = 0; k < res.size(); ++k) {
    switch (res[k]) {
      case Outcome::absorbed:
        rep.absorbed++;
        break;
      case Outcome::captured:
        rep.captured++;
        break;
      case Outcome::uncovered:
        rep.failures++;
        if (rep.witnesses.size() < 8)
          rep.witnesses.push_back(
              {pts[k], rep.t0, 0, "neither absorbed by t0 nor inside a neighborhood at its time"});
        break;
    }
  }
  rep.verdict = rep.failures == 0 ? Verdict::pass : Verdict::fail;
  if (check_n_version) {
    long ok = 0;
    for (char c : res_n) ok += c;
    rep.n_version = ok == n_samples ? Verdict::pass : Verdict::fail;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Palais-Smale diagnostic: the gradient norm over V minus balls around the
// listed critical points must stay away from zero. The argmin is Newton
// refined; converging to an unlisted rest point is the failure mode.
// ---------------------------------------------------------------------------
struct PalaisSmaleReport {
  double min_grad_norm = 0;
  Vec argmin;
  bool vacuous = false;
  Verdict verdict = Verdict::unchecked;
  std::string note;
};

inline PalaisSmaleReport palais_smale_diagnostic(const ScalarField& f, const CellSet& v,
                                                 const std::vector<CriticalPoint>& crits,
                                                 double radius) {
  PalaisSmaleReport rep;
  const auto& g = *v.grid();
  const Domain& dom = f.domain();
  double best = std::numeric_limits<double>::infinity();
  Vec arg;
  bool any = false;
  v.for_each([&](std::size_t c) {
    for (const Vec& p : cell_sample_points(g, c)) {
      bool excluded = false;
      for (const auto& cp : crits)
        if (dom.distance(p, cp.location) <= radius) {
          excluded = true;
          break;
        }
      if (excluded) continue;
      const double gn = f.gradient(p).norm();
      if (gn < best) {
        best = gn;
        arg = p;
      }
      any = true;
    }
  });
  if (!any) {
    rep.vacuous = true;
    rep.verdict = Verdict::pass;
    rep.note = "no samples outside the critical neighborhoods";
    return rep;
  }
  rep.min_grad_norm = best;
  rep.argmin = arg;
  // Newton from the argmin: small gradients are admissible only when they
  // come from a listed rest point's vicinity.
  Vec x = arg;
  detail::Hessian hess(f);
  double a[kMaxDim * kMaxDim], b[kMaxDim], step[kMaxDim];
  const int n = f.dim();
  for (int it = 0; it < 60; ++it) {
    x = dom.wrap(x);
    const Vec grad = f.gradient(x);
    if (grad.norm() <= 1e-10) break;
    hess.eval(x, a);
    for (int i = 0; i < n; ++i) b[i] = -grad[i];
    if (!detail::solve_small(n, a, b, step)) break;
    for (int i = 0; i < n; ++i) x[i] += step[i];
  }
  const bool converged = f.gradient(dom.wrap(x)).norm() <= 1e-8 && dom.contains(x, 1.0);
  if (converged) {
    double dist = std::numeric_limits<double>::infinity();
    for (const auto& cp : crits) dist = std::min(dist, dom.distance(x, cp.location));
    const double tol = std::max(radius, 2.0 * g.max_cell_width());
    if (!crits.empty() && dist <= tol) {
      rep.verdict = Verdict::pass;
    } else if (v.contains_point(dom.wrap(x))) {
      rep.verdict = Verdict::fail;
      rep.note = "gradient argmin refines to an unlisted rest point";
      return rep;
    } else {
      rep.verdict = Verdict::pass;  // rest point outside V does not break the bound
    }
  } else {
    rep.verdict = best > 1e-9 ? Verdict::pass : Verdict::inconclusive;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// The critical-point lower bound: compare the relative cuplength of (N, L)
// against the refined critical count. Only the cuplength link in the chain
// (#crit >= homotopy category >= cohomology category >= CL) is computable
// here; the middle categories are covering minimizations and stay implicit.
// ---------------------------------------------------------------------------
struct BoundReport {
  std::vector<CriticalPoint> crits;
  CriticalSearchLog search_log;
  int cl = 0;
  bool cl_trivial = false;
  int cuplength_abs = 0;
  std::vector<std::size_t> betti_rel, betti_abs;
  bool ring_ok = true;
  std::vector<std::string> ring_messages;
  UniformExitTime exit_horizon;
  CoverReport cover;
  PalaisSmaleReport palais_smale;
  Verdict verdict = Verdict::unchecked;
  std::string chain_note =
      "#critical >= nu_H >= nu_C >= CL; only CL is computed, the categories are covering "
      "minimizations";
};

inline BoundReport verify_bound(const IndexPairData& pair, const PseudoGradientField& y,
                                const ScalarField& f, const IntegratorConfig& cfg,
                                double grad_tol, double u_halfwidth, long n_samples = 500,
                                std::uint64_t seed = 0, const Cohomology* injected = nullptr) {
  BoundReport rep;
  if (pair.degenerate) throw std::invalid_argument("bound: degenerate pair (L = N)");
  rep.crits = find_critical_points(f, pair.V, grad_tol, &rep.search_log);

  std::optional<PairComplex> cx;
  std::optional<Cohomology> own;
  const Cohomology* coh = injected;
  if (!coh) {
    cx.emplace(pair.N, pair.L);
    own.emplace(*cx);
    coh = &*own;
  }
  for (std::size_t k = 0; k <= f.domain().dim(); ++k) {
    rep.betti_rel.push_back(coh->betti_rel(k));
    rep.betti_abs.push_back(coh->betti_abs(k));
  }
  const auto validation = coh->validate();
  rep.ring_ok = validation.ok;
  rep.ring_messages = validation.messages;
  const auto rc = coh->relative_cuplength();
  rep.cl = rc.value;
  rep.cl_trivial = rc.relative_trivial;
  rep.cuplength_abs = coh->cuplength();

  rep.exit_horizon = uniform_exit_time(pair, y, cfg);
  rep.cover = covering_times(pair, y, f, rep.crits, u_halfwidth, cfg, n_samples, seed,
                             pair.regular_criterion.verdict == Verdict::pass);
  rep.palais_smale = palais_smale_diagnostic(f, pair.V, rep.crits, u_halfwidth);

  const bool count_ok = static_cast<int>(rep.crits.size()) >= rep.cl;
  rep.verdict = (count_ok && rep.ring_ok) ? Verdict::pass : Verdict::fail;
  return rep;
}

}  // namespace conley
