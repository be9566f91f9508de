#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "conley/grid.hpp"
#include "conley/point.hpp"

namespace conley {

/// Van der Corput radical inverse.
inline double halton(std::uint64_t i, std::uint32_t base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

/// Per-cell sample set: the center plus the 2^n exact cell corners. The exact
/// corners matter: invariant sets frequently sit on grid planes, and the
/// corner samples are the only ones that can witness them. Corners come from
/// CubicalGrid::plane so they land on those planes bit-exactly.
inline std::vector<Vec> cell_sample_points(const CubicalGrid& g, std::size_t cell) {
  const std::size_t n = g.dim();
  const MultiIndex mi = g.multi(cell);
  std::vector<Vec> pts;
  pts.reserve(1 + (std::size_t{1} << n));
  pts.push_back(g.center(cell));
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Vec p(n);
    for (std::size_t i = 0; i < n; ++i)
      p[i] = g.plane(i, mi[i] + static_cast<int>((mask >> i) & 1));
    pts.push_back(p);
  }
  return pts;
}

/// Deterministic quasi-random points spread over a cell set. The k-th point
/// picks a member cell with a base-2 Halton draw and places the point inside
/// it with per-axis Halton draws (bases 3, 5, 7, 11). `seed` shifts the
/// sequence start and is recorded in reports.
class QuasiSampler {
 public:
  QuasiSampler(const CellSet& set, std::uint64_t seed)
      : grid_(set.grid()), cells_(set.cells()), seed_(seed) {
    if (cells_.empty()) throw std::invalid_argument("QuasiSampler: empty cell set");
  }

  std::size_t cell_of(std::uint64_t k) const {
    const std::uint64_t i = index(k);
    auto m = static_cast<std::size_t>(halton(i, 2) * static_cast<double>(cells_.size()));
    if (m >= cells_.size()) m = cells_.size() - 1;
    return cells_[m];
  }

  Vec point(std::uint64_t k) const {
    static constexpr std::uint32_t bases[kMaxDim] = {3, 5, 7, 11};
    const std::uint64_t i = index(k);
    const std::size_t cell = cell_of(k);
    const auto& g = *grid_;
    const Vec c = g.center(cell);
    Vec p(g.dim());
    for (std::size_t ax = 0; ax < g.dim(); ++ax)
      p[ax] = c[ax] + (halton(i, bases[ax]) - 0.5) * g.cell_width(ax);
    return p;
  }

 private:
  GridPtr grid_;
  std::vector<std::size_t> cells_;
  std::uint64_t seed_;

  std::uint64_t index(std::uint64_t k) const { return 1 + k + seed_ * 7919; }
};

}  // namespace conley
