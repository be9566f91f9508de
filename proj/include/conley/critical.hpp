#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "conley/field.hpp"
#include "conley/grid.hpp"

namespace conley {

struct CriticalPoint {
  Vec location;
  double f_value = 0;
  double grad_norm = 0;
  std::size_t cell = 0;
};

struct DegenerateCriticalSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CriticalSearchLog {
  long seeds = 0;
  long converged = 0;
  long diverged = 0;
  std::vector<std::string> notes;
};

namespace detail {

/// Symbolic Hessian tapes, built once per search.
class Hessian {
 public:
  explicit Hessian(const ScalarField& f) : n_(f.dim()) {
    taps_.reserve(static_cast<std::size_t>(n_ * n_));
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) taps_.emplace_back(differentiate(f.partial(i), j));
  }

  /// Row-major n x n matrix at p (wrapped by the caller).
  void eval(const Vec& p, double* out) const {
    for (std::size_t k = 0; k < taps_.size(); ++k)
      out[k] = taps_[k].eval(std::span<const double>(p.data(), p.size()));
  }

 private:
  int n_;
  std::vector<EvalTape> taps_;
};

/// Solves A x = b for small n with partial pivoting; false when singular.
inline bool solve_small(int n, double* a, double* b, double* x) {
  int perm[kMaxDim];
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int col = 0; col < n; ++col) {
    int best = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[perm[r] * n + col]) > std::abs(a[perm[best] * n + col])) best = r;
    std::swap(perm[col], perm[best]);
    const double piv = a[perm[col] * n + col];
    if (std::abs(piv) < 1e-300) return false;
    for (int r = col + 1; r < n; ++r) {
      const double m = a[perm[r] * n + col] / piv;
      if (m == 0) continue;
      for (int c = col; c < n; ++c) a[perm[r] * n + c] -= m * a[perm[col] * n + c];
      b[perm[r]] -= m * b[perm[col]];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double s = b[perm[r]];
    for (int c = r + 1; c < n; ++c) s -= a[perm[r] * n + c] * x[c];
    const double piv = a[perm[r] * n + r];
    if (std::abs(piv) < 1e-300) return false;
    x[r] = s / piv;
  }
  return true;
}

inline double det_small(int n, double* a) {
  double det = 1;
  for (int col = 0; col < n; ++col) {
    int best = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[best * n + col])) best = r;
    if (best != col) {
      for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[best * n + c]);
      det = -det;
    }
    const double piv = a[col * n + col];
    if (piv == 0) return 0;
    det *= piv;
    for (int r = col + 1; r < n; ++r) {
      const double m = a[r * n + col] / piv;
      for (int c = col; c < n; ++c) a[r * n + c] -= m * a[col * n + c];
    }
  }
  return det;
}

}  // namespace detail

/// Grid scan for cells whose center gradient norm is a local face-neighbor
/// minimum, then damped Newton on grad f = 0, then wraparound-aware
/// deduplication at two cell widths. Degenerate critical sets (singular
/// Hessian at a refined point, or refined points that are not isolated) are
/// rejected: the deformation machinery assumes finitely many rest points.
inline std::vector<CriticalPoint> find_critical_points(const ScalarField& f, const CellSet& v,
                                                       double grad_tol,
                                                       CriticalSearchLog* log = nullptr) {
  if (v.empty()) throw std::invalid_argument("critical search: V is empty");
  const auto& g = *v.grid();
  const int n = f.dim();
  const Domain& dom = f.domain();

  // Seed cells: local minima of |grad f| among face neighbors within V.
  std::vector<std::size_t> cells = v.cells();
  std::vector<double> norms(g.cell_count(), -1.0);
  for (std::size_t c : cells) norms[c] = f.gradient(g.center(c)).norm();
  std::vector<std::size_t> seeds;
  for (std::size_t c : cells) {
    bool is_min = true;
    for (std::size_t ax = 0; ax < g.dim() && is_min; ++ax)
      for (int dir : {-1, +1}) {
        auto nb = g.neighbor(c, ax, dir);
        if (nb && norms[*nb] >= 0 && norms[*nb] < norms[c]) {
          is_min = false;
          break;
        }
      }
    if (is_min) seeds.push_back(c);
  }

  detail::Hessian hess(f);
  CriticalSearchLog local_log;
  CriticalSearchLog& lg = log ? *log : local_log;
  lg.seeds = static_cast<long>(seeds.size());

  std::vector<CriticalPoint> found;
  for (std::size_t seed : seeds) {
    Vec x = g.center(seed);
    bool ok = false;
    double a[kMaxDim * kMaxDim], b[kMaxDim], step[kMaxDim];
    for (int it = 0; it < 80; ++it) {
      x = dom.wrap(x);
      Vec grad = f.gradient(x);
      const double gn = grad.norm();
      if (gn <= grad_tol) {
        ok = true;
        break;
      }
      hess.eval(x, a);
      for (int i = 0; i < n; ++i) b[i] = -grad[i];
      if (!detail::solve_small(n, a, b, step)) break;
      // Damping: accept the first step length that reduces |grad f|.
      double lambda = 1.0;
      bool improved = false;
      for (int half = 0; half < 16; ++half) {
        Vec xn = x;
        for (int i = 0; i < n; ++i) xn[i] += lambda * step[i];
        xn = dom.wrap(xn);
        bool in_box = dom.contains(xn, g.max_cell_width());
        if (in_box) {
          double gnn;
          try {
            gnn = f.gradient(xn).norm();
          } catch (const EvalDomainError&) {
            gnn = std::numeric_limits<double>::infinity();
          }
          if (gnn < gn) {
            x = xn;
            improved = true;
            break;
          }
        }
        lambda *= 0.5;
      }
      if (!improved) break;
    }
    if (!ok) {
      lg.diverged++;
      lg.notes.push_back("seed at cell " + std::to_string(seed) + " did not converge");
      continue;
    }
    lg.converged++;
    auto cell = g.locate(x);
    if (!cell || !v.contains(*cell)) continue;  // refined out of V
    CriticalPoint cp;
    cp.location = x;
    cp.f_value = f.value(x);
    cp.grad_norm = f.gradient(x).norm();
    cp.cell = *cell;
    found.push_back(cp);
  }

  // Deduplicate: representatives separated by at least two cell widths.
  std::sort(found.begin(), found.end(), [](const CriticalPoint& p, const CriticalPoint& q) {
    for (std::size_t i = 0; i < p.location.size(); ++i) {
      if (p.location[i] < q.location[i]) return true;
      if (p.location[i] > q.location[i]) return false;
    }
    return false;
  });
  const double min_sep = 2.0 * g.max_cell_width();
  std::vector<CriticalPoint> out;
  for (const auto& cp : found) {
    bool dup = false;
    for (auto& kept : out) {
      if (dom.distance(cp.location, kept.location) < min_sep) {
        dup = true;
        if (cp.grad_norm < kept.grad_norm) kept = cp;
        break;
      }
    }
    if (!dup) out.push_back(cp);
  }

  // Degeneracy guard: singular Hessian at a refined point means a critical
  // manifold rather than isolated rest points.
  for (const auto& cp : out) {
    double a[kMaxDim * kMaxDim];
    hess.eval(dom.wrap(cp.location), a);
    double scale = 0;
    for (int i = 0; i < n * n; ++i) scale = std::max(scale, std::abs(a[i]));
    const double det = detail::det_small(n, a);
    if (scale == 0 || std::abs(det) < 1e-8 * std::pow(scale, n))
      throw DegenerateCriticalSet(
          "degenerate critical set near (" + format_double(cp.location[0]) +
          (n > 1 ? std::string(", ") + format_double(cp.location[1]) : std::string()) +
          "): the Hessian is singular; the deformation lemmas assume isolated critical points");
  }
  return out;
}

}  // namespace conley
