#pragma once

#include <boost/dynamic_bitset.hpp>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "conley/domain.hpp"
#include "conley/format.hpp"
#include "conley/point.hpp"

namespace conley {

using MultiIndex = std::array<int, kMaxDim>;

/// Uniform cubical grid over a Domain. Cells are the top-dimensional cubes;
/// lower-dimensional faces only appear in the cohomology layer.
class CubicalGrid {
 public:
  static constexpr std::size_t kDefaultBudget = std::size_t{1} << 24;

  CubicalGrid(Domain domain, std::vector<int> resolution, std::size_t budget = kDefaultBudget)
      : domain_(std::move(domain)), res_(std::move(resolution)) {
    domain_.validate();
    if (res_.size() != domain_.dim())
      throw std::invalid_argument("grid: resolution rank does not match the domain");
    std::size_t count = 1;
    for (std::size_t i = 0; i < res_.size(); ++i) {
      if (res_[i] < 2) throw std::invalid_argument("grid: resolution must be >= 2 on every axis");
      if (count > budget / static_cast<std::size_t>(res_[i]))
        throw std::invalid_argument("grid: cell budget exceeded");
      count *= static_cast<std::size_t>(res_[i]);
      h_.push_back(domain_.length(i) / res_[i]);
    }
    count_ = count;
    strides_.assign(res_.size(), 1);
    for (int i = static_cast<int>(res_.size()) - 2; i >= 0; --i)
      strides_[static_cast<std::size_t>(i)] =
          strides_[static_cast<std::size_t>(i) + 1] * static_cast<std::size_t>(res_[static_cast<std::size_t>(i) + 1]);
  }

  std::size_t dim() const { return res_.size(); }
  const Domain& domain() const { return domain_; }
  const std::vector<int>& resolution() const { return res_; }
  double cell_width(std::size_t axis) const { return h_[axis]; }
  double max_cell_width() const {
    double m = 0;
    for (double w : h_) m = std::max(m, w);
    return m;
  }
  double cell_diagonal() const {
    double s = 0;
    for (double w : h_) s += w * w;
    return std::sqrt(s);
  }
  std::size_t cell_count() const { return count_; }

  std::size_t linear(const MultiIndex& mi) const {
    std::size_t k = 0;
    for (std::size_t i = 0; i < dim(); ++i) k += static_cast<std::size_t>(mi[i]) * strides_[i];
    return k;
  }

  MultiIndex multi(std::size_t cell) const {
    MultiIndex mi{};
    for (std::size_t i = 0; i < dim(); ++i) {
      mi[i] = static_cast<int>(cell / strides_[i]);
      cell %= strides_[i];
    }
    return mi;
  }

  /// Grid plane k on an axis, evaluated as lo + len * (k / r) so that planes
  /// at rational positions (in particular 0 on symmetric domains) come out
  /// exact; invariant sets often lie on them.
  double plane(std::size_t axis, int k) const {
    return domain_.lo[axis] +
           domain_.length(axis) * (static_cast<double>(k) / static_cast<double>(res_[axis]));
  }

  Vec center(std::size_t cell) const {
    const MultiIndex mi = multi(cell);
    Vec c(dim());
    for (std::size_t i = 0; i < dim(); ++i)
      c[i] = domain_.lo[i] +
             domain_.length(i) * ((mi[i] + 0.5) / static_cast<double>(res_[i]));
    return c;
  }

  /// Cell containing p, or nullopt when p left the box on a non-periodic
  /// axis. Points on the closed outer boundary belong to the touching cell.
  std::optional<std::size_t> locate(const Vec& p) const {
    MultiIndex mi{};
    for (std::size_t i = 0; i < dim(); ++i) {
      double u = (p[i] - domain_.lo[i]) / h_[i];
      if (domain_.periodic[i]) {
        double w = std::fmod(u, static_cast<double>(res_[i]));
        if (w < 0) w += res_[i];
        int k = static_cast<int>(w);
        if (k >= res_[i]) k = res_[i] - 1;
        mi[i] = k;
      } else {
        if (u < 0.0 || u > static_cast<double>(res_[i])) return std::nullopt;
        int k = static_cast<int>(u);
        if (k >= res_[i]) k = res_[i] - 1;
        mi[i] = k;
      }
    }
    return linear(mi);
  }

  /// Face neighbor along axis in direction dir (+1/-1); nullopt across a
  /// non-periodic wall.
  std::optional<std::size_t> neighbor(std::size_t cell, std::size_t axis, int dir) const {
    MultiIndex mi = multi(cell);
    int k = mi[axis] + dir;
    if (domain_.periodic[axis]) {
      k = (k + res_[axis]) % res_[axis];
    } else if (k < 0 || k >= res_[axis]) {
      return std::nullopt;
    }
    mi[axis] = k;
    return linear(mi);
  }

 private:
  Domain domain_;
  std::vector<int> res_;
  std::vector<double> h_;
  std::vector<std::size_t> strides_;
  std::size_t count_ = 0;
};

using GridPtr = std::shared_ptr<const CubicalGrid>;

/// Finite closed subset represented by its top-dimensional cells.
/// Immutable by convention once built; set algebra is exact.
class CellSet {
 public:
  CellSet() = default;
  explicit CellSet(GridPtr grid) : grid_(std::move(grid)), bits_(grid_->cell_count()) {}

  static CellSet full(GridPtr grid) {
    CellSet s(std::move(grid));
    s.bits_.set();
    return s;
  }

  const GridPtr& grid() const { return grid_; }
  bool empty() const { return !bits_.any(); }
  std::size_t count() const { return bits_.count(); }
  std::size_t capacity() const { return bits_.size(); }
  bool is_full() const { return bits_.count() == bits_.size(); }

  bool contains(std::size_t cell) const { return bits_.test(cell); }
  bool contains_point(const Vec& p) const {
    auto c = grid_->locate(p);
    return c && bits_.test(*c);
  }
  void insert(std::size_t cell) { bits_.set(cell); }
  void erase(std::size_t cell) { bits_.reset(cell); }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t c = bits_.find_first(); c != boost::dynamic_bitset<>::npos;
         c = bits_.find_next(c))
      f(c);
  }

  std::vector<std::size_t> cells() const {
    std::vector<std::size_t> out;
    out.reserve(count());
    for_each([&](std::size_t c) { out.push_back(c); });
    return out;
  }

  bool is_subset_of(const CellSet& o) const {
    require_same_grid(o);
    return bits_.is_subset_of(o.bits_);
  }

  friend CellSet operator|(CellSet a, const CellSet& b) {
    a.require_same_grid(b);
    a.bits_ |= b.bits_;
    return a;
  }
  friend CellSet operator&(CellSet a, const CellSet& b) {
    a.require_same_grid(b);
    a.bits_ &= b.bits_;
    return a;
  }
  friend CellSet operator-(CellSet a, const CellSet& b) {
    a.require_same_grid(b);
    a.bits_ -= b.bits_;
    return a;
  }
  CellSet complement() const {
    CellSet r = *this;
    r.bits_.flip();
    return r;
  }
  bool operator==(const CellSet& o) const { return grid_ == o.grid_ && bits_ == o.bits_; }

 private:
  GridPtr grid_;
  boost::dynamic_bitset<> bits_;

  void require_same_grid(const CellSet& o) const {
    if (grid_ != o.grid_) throw std::invalid_argument("cell sets live on different grids");
  }
};

/// Cells of S whose 2n face neighbors are all in S. Cells touching a
/// non-periodic wall are never interior.
inline CellSet combinatorial_interior(const CellSet& s) {
  const auto& g = *s.grid();
  CellSet out(s.grid());
  s.for_each([&](std::size_t c) {
    for (std::size_t ax = 0; ax < g.dim(); ++ax) {
      for (int dir : {-1, +1}) {
        auto nb = g.neighbor(c, ax, dir);
        if (!nb || !s.contains(*nb)) return;
      }
    }
    out.insert(c);
  });
  return out;
}

inline CellSet combinatorial_boundary(const CellSet& s) { return s - combinatorial_interior(s); }

/// Cells face-adjacent to any cell of S (S excluded).
inline CellSet face_halo(const CellSet& s) {
  const auto& g = *s.grid();
  CellSet out(s.grid());
  s.for_each([&](std::size_t c) {
    for (std::size_t ax = 0; ax < g.dim(); ++ax)
      for (int dir : {-1, +1})
        if (auto nb = g.neighbor(c, ax, dir); nb && !s.contains(*nb)) out.insert(*nb);
  });
  return out;
}

struct ClosedDifference {
  CellSet cells;
  bool degenerate = false;  // L == N
};

/// Combinatorial closure of N - L: the cells of N\L plus the cells of L
/// face-adjacent to N\L. Requires L to be a subset of N.
inline ClosedDifference closed_difference(const CellSet& n, const CellSet& l) {
  if (!l.is_subset_of(n)) throw std::invalid_argument("closed_difference: L is not a subset of N");
  CellSet core = n - l;
  if (core.empty()) return {CellSet(n.grid()), true};
  CellSet halo = face_halo(core) & l;
  return {core | halo, false};
}

/// Min distance from p to the centers of S, shortest wraparound displacement
/// on periodic axes. Exact cell geometry is deliberately not used here;
/// the error is at most half a cell diagonal.
inline double distance_to_set(const Vec& p, const CellSet& s) {
  if (s.empty()) throw std::invalid_argument("distance_to_set: empty set");
  const auto& g = *s.grid();
  double best = std::numeric_limits<double>::infinity();
  s.for_each([&](std::size_t c) { best = std::min(best, g.domain().distance(p, g.center(c))); });
  return best;
}

/// Min distance from p to the closed cell boxes of S (zero inside a member
/// cell). Used where level-set exactness on member cells matters.
inline double distance_to_set_region(const Vec& p, const CellSet& s) {
  if (s.empty()) throw std::invalid_argument("distance_to_set_region: empty set");
  const auto& g = *s.grid();
  double best = std::numeric_limits<double>::infinity();
  s.for_each([&](std::size_t c) {
    const Vec ctr = g.center(c);
    const Vec d = g.domain().displacement(p, ctr);
    double acc = 0;
    for (std::size_t i = 0; i < g.dim(); ++i) {
      const double over = std::max(0.0, std::abs(d[i]) - 0.5 * g.cell_width(i));
      acc += over * over;
    }
    best = std::min(best, acc);
  });
  return std::sqrt(best);
}

// ---------------------------------------------------------------------------
// CSV dump format: one row per member cell, integer multi-index columns then
// center coordinates, rows in ascending row-major order. Bit-exact: doubles
// are shortest round-trip formatted.
// ---------------------------------------------------------------------------
inline void dump_cells_csv(std::ostream& os, const CellSet& s) {
  const auto& g = *s.grid();
  for (std::size_t i = 0; i < g.dim(); ++i) os << "i" << i << ",";
  for (std::size_t i = 0; i < g.dim(); ++i) os << "c" << i << (i + 1 < g.dim() ? "," : "");
  os << "\n";
  s.for_each([&](std::size_t c) {
    const MultiIndex mi = g.multi(c);
    const Vec ctr = g.center(c);
    for (std::size_t i = 0; i < g.dim(); ++i) os << mi[i] << ",";
    for (std::size_t i = 0; i < g.dim(); ++i)
      os << format_double(ctr[i]) << (i + 1 < g.dim() ? "," : "");
    os << "\n";
  });
}

inline CellSet load_cells_csv(std::istream& is, GridPtr grid) {
  CellSet s(grid);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.size() > 1 && line[0] == 'i') continue;  // header
    }
    std::istringstream row(line);
    MultiIndex mi{};
    std::string tok;
    for (std::size_t i = 0; i < grid->dim(); ++i) {
      if (!std::getline(row, tok, ',')) throw std::invalid_argument("cell CSV: short row");
      mi[i] = std::stoi(tok);
      if (mi[i] < 0 || mi[i] >= grid->resolution()[i])
        throw std::invalid_argument("cell CSV: index out of range");
    }
    s.insert(grid->linear(mi));
  }
  return s;
}

}  // namespace conley
