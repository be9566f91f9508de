#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "conley/field.hpp"
#include "conley/format.hpp"
#include "conley/grid.hpp"
#include "conley/point.hpp"

namespace conley {

/// Fixed-step classical RK4. Deterministic and reproducible; containment is
/// decided at the integration samples only. The stride thins the containment
/// checks (1 = every internal step); safety_margin makes the cell-sweep
/// callers shrink their containment target by one interior layer.
struct IntegratorConfig {
  double step = 1e-3;
  double t_max = 40.0;
  int containment_stride = 1;
  bool safety_margin = false;

  void validate() const {
    if (!(step > 0)) throw std::invalid_argument("integrator: step must be positive");
    if (!(t_max > 0)) throw std::invalid_argument("integrator: t_max must be positive");
    if (containment_stride < 1)
      throw std::invalid_argument("integrator: containment stride must be >= 1");
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> points;
};

inline void dump_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  if (tr.points.empty()) return;
  os << "t";
  for (std::size_t i = 0; i < tr.points.front().size(); ++i) os << ",x" << i;
  os << "\n";
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    os << format_double(tr.times[k]);
    for (std::size_t i = 0; i < tr.points[k].size(); ++i)
      os << "," << format_double(tr.points[k][i]);
    os << "\n";
  }
}

namespace detail {

inline Vec rk4_step(const PseudoGradientField& y, const Vec& x, double h) {
  const Vec k1 = y(x);
  const Vec k2 = y(x + (0.5 * h) * k1);
  const Vec k3 = y(x + (0.5 * h) * k2);
  const Vec k4 = y(x + h * k3);
  Vec out = x;
  out += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return out;
}

}  // namespace detail

/// Walks the orbit from x over [0, |t|] (sign of t picks the flow direction)
/// calling visit(t_k, x_k) at every sample including both endpoints. visit
/// returns false to stop early. Returns the final state.
template <class Visit>
Vec walk_orbit(const PseudoGradientField& y, Vec x, double t, const IntegratorConfig& cfg,
               Visit&& visit) {
  const double dir = t < 0 ? -1.0 : 1.0;
  const double total = std::abs(t);
  if (!visit(0.0, x)) return x;
  double done = 0.0;
  while (done < total) {
    const double h = std::min(cfg.step, total - done);
    Vec xn = detail::rk4_step(y, x, dir * h);
    done += h;
    x = xn;
    if (!visit(dir * done, x)) return x;
  }
  return x;
}

/// RK4 approximation of the time-t flow map; negative t integrates -Y.
inline Vec flow_map(const PseudoGradientField& y, const Vec& x, double t,
                    const IntegratorConfig& cfg) {
  if (std::abs(t) > cfg.t_max + 1e-12)
    throw std::invalid_argument("flow_map: |t| exceeds t_max");
  return walk_orbit(y, x, t, cfg, [](double, const Vec&) { return true; });
}

inline Trajectory flow_trajectory(const PseudoGradientField& y, const Vec& x, double t,
                                  const IntegratorConfig& cfg) {
  Trajectory tr;
  walk_orbit(y, x, t, cfg, [&](double tk, const Vec& xk) {
    tr.times.push_back(tk);
    tr.points.push_back(xk);
    return true;
  });
  return tr;
}

/// True iff every integration sample of the orbit over [t0, t1] lies in a
/// cell of S. Orbits leaving the domain box count as having exited.
inline bool orbit_in_set(const PseudoGradientField& y, const Vec& x, double t0, double t1,
                         const CellSet& s, const IntegratorConfig& cfg) {
  if (t0 > t1) throw std::invalid_argument("orbit_in_set: t0 > t1");
  bool ok = true;
  long k = 0;
  auto check = [&](double, const Vec& p) {
    // With stride s, every s-th sample is tested (the first always is).
    if ((k++ % cfg.containment_stride) != 0) return true;
    if (!s.contains_point(p)) {
      ok = false;
      return false;
    }
    return true;
  };
  if (t0 <= 0.0 && t1 >= 0.0) {
    if (t0 < 0) walk_orbit(y, x, t0, cfg, check);
    if (ok) walk_orbit(y, x, t1, cfg, check);  // covers the t1 == 0 sample too
  } else {
    // The window does not contain 0: reach its near edge first, then sweep
    // across the window away from 0.
    const double anchor = t0 > 0 ? t0 : t1;
    const double span = t0 > 0 ? t1 - t0 : t0 - t1;
    const Vec xa = flow_map(y, x, anchor, cfg);
    walk_orbit(y, xa, span, cfg, check);
  }
  return ok;
}

/// First exit time of the forward orbit from S, refined by bisection between
/// the bracketing integration steps to step/100; nullopt when the orbit stays
/// in S through t_max.
inline std::optional<double> first_exit(const PseudoGradientField& y, const Vec& x,
                                        const CellSet& s, const IntegratorConfig& cfg) {
  if (!s.contains_point(x)) return 0.0;
  Vec last_in = x;
  double t_in = 0.0;
  bool exited = false;
  double t_out = 0.0;
  walk_orbit(y, x, cfg.t_max, cfg, [&](double t, const Vec& p) {
    if (s.contains_point(p)) {
      last_in = p;
      t_in = t;
      return true;
    }
    exited = true;
    t_out = t;
    return false;
  });
  if (!exited) return std::nullopt;
  // Bisect within the bracketing step, integrating sub-steps from last_in.
  double lo = 0.0, hi = t_out - t_in;
  while (hi - lo > cfg.step / 100.0) {
    const double mid = 0.5 * (lo + hi);
    const Vec pm = detail::rk4_step(y, last_in, mid);
    if (s.contains_point(pm))
      lo = mid;
    else
      hi = mid;
  }
  return t_in + 0.5 * (lo + hi);
}

}  // namespace conley
