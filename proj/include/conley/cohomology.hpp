#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "conley/gf2.hpp"
#include "conley/grid.hpp"

namespace conley {

// ---------------------------------------------------------------------------
// Elementary cubes are encoded as 16 bits per axis: the vertex-grid
// coordinate (15 bits) and an extent bit. Vertex coordinates on a periodic
// axis live in [0, r); on a bounded axis in [0, r].
// ---------------------------------------------------------------------------
namespace cube {

inline std::uint64_t pack_axis(int coord, int extent) {
  return static_cast<std::uint64_t>(coord) | (static_cast<std::uint64_t>(extent) << 15);
}
inline int coord(std::uint64_t key, std::size_t axis) {
  return static_cast<int>((key >> (16 * axis)) & 0x7fff);
}
inline int extent(std::uint64_t key, std::size_t axis) {
  return static_cast<int>((key >> (16 * axis + 15)) & 1);
}
inline std::uint64_t with_axis(std::uint64_t key, std::size_t axis, int c, int e) {
  key &= ~(std::uint64_t{0xffff} << (16 * axis));
  key |= (pack_axis(c, e) << (16 * axis));
  return key;
}
inline int dimension(std::uint64_t key, std::size_t n) {
  int d = 0;
  for (std::size_t i = 0; i < n; ++i) d += extent(key, i);
  return d;
}

}  // namespace cube

/// Full cubical complex of a top-cell set together with a subcomplex, plus
/// the GF(2) cohomology of the pair and its cup-product structure. With an
/// empty subcomplex the collapsed class acts as a detached basepoint, so the
/// relative groups coincide with the unreduced absolute ones.
class PairComplex {
 public:
  static constexpr std::size_t kCellBudget = 1'000'000;

  PairComplex(const CellSet& n_cells, const CellSet& l_cells) : grid_(n_cells.grid()) {
    n_ = grid_->dim();
    keys_.resize(n_ + 1);
    index_.resize(n_ + 1);
    in_a_.resize(n_ + 1);
    build_closure(n_cells, l_cells);
  }

  std::size_t ambient_dim() const { return n_; }
  std::size_t cells(std::size_t k) const { return k <= n_ ? keys_[k].size() : 0; }
  std::size_t subcomplex_cells(std::size_t k) const {
    if (k > n_) return 0;
    std::size_t c = 0;
    for (char b : in_a_[k]) c += (b != 0);
    return c;
  }

  /// Faces of a cube key (one dimension down), wrapped on periodic axes.
  std::vector<std::uint64_t> faces(std::uint64_t key) const {
    std::vector<std::uint64_t> out;
    for (std::size_t ax = 0; ax < n_; ++ax) {
      if (!cube::extent(key, ax)) continue;
      const int c = cube::coord(key, ax);
      out.push_back(cube::with_axis(key, ax, c, 0));
      out.push_back(cube::with_axis(key, ax, wrap_coord(c + 1, ax), 0));
    }
    return out;
  }

  std::size_t index_of(std::size_t k, std::uint64_t key) const {
    return index_[k].at(key);
  }
  bool in_subcomplex(std::size_t k, std::size_t idx) const { return in_a_[k][idx] != 0; }

  /// Coboundary of an absolute k-cochain.
  BitVec coboundary(std::size_t k, const BitVec& u) const {
    BitVec out(cells(k + 1));
    for (std::size_t s = 0; s < cells(k + 1); ++s) {
      int parity = 0;
      for (std::uint64_t f : faces(keys_[k + 1][s])) parity ^= u.test(index_[k].at(f)) ? 1 : 0;
      if (parity) out.set(s);
    }
    return out;
  }

  BitVec mask_subcomplex(std::size_t k, BitVec v) const {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (in_a_[k][i]) v.reset(i);
    return v;
  }

  /// Cup product of cochains via the front-face/back-face coordinate split:
  /// every direction subset S with |S| = p contributes u(front_S) v(back_S),
  /// where front keeps S and collapses the rest to the left endpoints, and
  /// back collapses S to the right endpoints and keeps the rest.
  BitVec cup(std::size_t p, const BitVec& u, std::size_t q, const BitVec& v) const {
    const std::size_t k = p + q;
    BitVec out(cells(k));
    if (k > n_) return out;
    for (std::size_t s = 0; s < cells(k); ++s) {
      const std::uint64_t key = keys_[k][s];
      std::size_t dirs[kMaxDim];
      std::size_t nd = 0;
      for (std::size_t ax = 0; ax < n_; ++ax)
        if (cube::extent(key, ax)) dirs[nd++] = ax;
      int parity = 0;
      for (std::uint32_t mask = 0; mask < (1u << nd); ++mask) {
        if (std::popcount(mask) != static_cast<int>(p)) continue;
        std::uint64_t front = key, back = key;
        for (std::size_t j = 0; j < nd; ++j) {
          const std::size_t ax = dirs[j];
          const int c = cube::coord(key, ax);
          if (mask & (1u << j)) {
            // Axis stays in the front face; back face sits at its right end.
            back = cube::with_axis(back, ax, wrap_coord(c + 1, ax), 0);
          } else {
            front = cube::with_axis(front, ax, c, 0);
          }
        }
        const bool ub = u.test(index_[p].at(front));
        const bool vb = v.test(index_[q].at(back));
        parity ^= (ub && vb) ? 1 : 0;
      }
      if (parity) out.set(s);
    }
    return out;
  }

  const std::vector<std::uint64_t>& keys(std::size_t k) const { return keys_[k]; }
  const CubicalGrid& grid() const { return *grid_; }

 private:
  GridPtr grid_;
  std::size_t n_ = 0;
  std::vector<std::vector<std::uint64_t>> keys_;
  std::vector<std::unordered_map<std::uint64_t, std::size_t>> index_;
  std::vector<std::vector<char>> in_a_;

  int wrap_coord(int c, std::size_t axis) const {
    if (grid_->domain().periodic[axis] && c >= grid_->resolution()[axis]) return 0;
    return c;
  }

  std::uint64_t top_key(std::size_t cell) const {
    const MultiIndex mi = grid_->multi(cell);
    std::uint64_t key = 0;
    for (std::size_t ax = 0; ax < n_; ++ax)
      key |= cube::pack_axis(mi[ax], 1) << (16 * ax);
    return key;
  }

  void build_closure(const CellSet& n_cells, const CellSet& l_cells) {
    std::vector<std::set<std::uint64_t>> acc(n_ + 1), acc_a(n_ + 1);
    auto close = [&](const CellSet& top, std::vector<std::set<std::uint64_t>>& into) {
      std::vector<std::uint64_t> frontier;
      top.for_each([&](std::size_t c) { frontier.push_back(top_key(c)); });
      while (!frontier.empty()) {
        std::vector<std::uint64_t> next;
        for (std::uint64_t key : frontier) {
          const int d = cube::dimension(key, n_);
          if (!into[static_cast<std::size_t>(d)].insert(key).second) continue;
          if (d > 0)
            for (std::uint64_t f : faces(key)) next.push_back(f);
        }
        frontier = std::move(next);
      }
    };
    close(n_cells, acc);
    close(l_cells, acc_a);
    std::size_t total = 0;
    for (auto& s : acc) total += s.size();
    if (total > kCellBudget) throw std::invalid_argument("pair complex exceeds the cell budget");
    for (std::size_t k = 0; k <= n_; ++k) {
      keys_[k].assign(acc[k].begin(), acc[k].end());  // sorted: std::set iterates ascending
      in_a_[k].assign(keys_[k].size(), 0);
      for (std::size_t i = 0; i < keys_[k].size(); ++i) {
        index_[k].emplace(keys_[k][i], i);
        if (acc_a[k].count(keys_[k][i])) in_a_[k][i] = 1;
      }
    }
  }
};

/// Cohomology of the pair over GF(2): ranks, chosen bases, and bilinear cup
/// tables for both the absolute ring and the relative module. Classes are
/// coordinate masks over the chosen basis of their degree.
class Cohomology {
 public:
  using Mask = std::uint32_t;

  explicit Cohomology(const PairComplex& cx) : cx_(&cx), n_(cx.ambient_dim()) {
    abs_.resize(n_ + 2);
    rel_.resize(n_ + 2);
    for (std::size_t k = 0; k <= n_; ++k) build_degree(k);
    build_tables();
  }

  std::size_t betti_abs(std::size_t k) const { return k <= n_ ? abs_[k].reps.size() : 0; }
  std::size_t betti_rel(std::size_t k) const { return k <= n_ ? rel_[k].reps.size() : 0; }

  long euler_from_betti_rel() const {
    long chi = 0;
    for (std::size_t k = 0; k <= n_; ++k)
      chi += (k % 2 ? -1 : 1) * static_cast<long>(betti_rel(k));
    return chi;
  }
  long euler_from_cells_rel() const {
    long chi = 0;
    for (std::size_t k = 0; k <= n_; ++k)
      chi += (k % 2 ? -1 : 1) *
             static_cast<long>(cx_->cells(k) - cx_->subcomplex_cells(k));
    return chi;
  }

  /// Cup tables. abs_table[p][q][i][j] is the coordinate mask of the product
  /// of absolute basis classes i (degree p) and j (degree q) in degree p+q.
  /// rel_table pairs a relative basis class with an absolute one. Tests may
  /// perturb these tables to exercise the downstream validation.
  std::vector<std::vector<std::vector<std::vector<Mask>>>> abs_table, rel_table;

  Mask cup_abs(std::size_t p, std::size_t q, Mask a, Mask b) const {
    return bilinear(abs_table, p, q, a, b);
  }
  Mask cup_rel(std::size_t p, std::size_t q, Mask rel_a, Mask abs_b) const {
    return bilinear(rel_table, p, q, rel_a, abs_b);
  }

  /// Coordinates of the unit class of H^0 (the all-ones vertex cocycle).
  Mask unit_coords() const {
    BitVec ones(cx_->cells(0));
    ones.set();
    return coords(abs_[0], ones);
  }

  struct Validation {
    bool ok = true;
    std::vector<std::string> messages;
  };

  /// Ring laws on the stored tables: unit action, commutativity,
  /// associativity on all basis triples within degree range. A shuffled or
  /// corrupted table fails here.
  Validation validate() const {
    Validation v;
    auto complain = [&](std::string m) {
      v.ok = false;
      if (v.messages.size() < 16) v.messages.push_back(std::move(m));
    };
    const Mask unit = unit_coords();
    for (std::size_t p = 0; p <= n_; ++p) {
      for (std::size_t i = 0; i < betti_abs(p); ++i) {
        const Mask a = Mask{1} << i;
        if (cup_abs(0, p, unit, a) != a) complain("unit law fails in degree " + std::to_string(p));
        if (cup_abs(p, 0, a, unit) != a) complain("unit law fails in degree " + std::to_string(p));
      }
    }
    for (std::size_t p = 1; p <= n_; ++p)
      for (std::size_t q = 1; p + q <= n_; ++q)
        for (std::size_t i = 0; i < betti_abs(p); ++i)
          for (std::size_t j = 0; j < betti_abs(q); ++j) {
            const Mask ab = cup_abs(p, q, Mask{1} << i, Mask{1} << j);
            const Mask ba = cup_abs(q, p, Mask{1} << j, Mask{1} << i);
            if (ab != ba)
              complain("commutativity fails in degrees " + std::to_string(p) + "," +
                       std::to_string(q));
          }
    for (std::size_t p = 0; p <= n_; ++p)
      for (std::size_t q = 0; p + q <= n_; ++q)
        for (std::size_t r = 0; p + q + r <= n_; ++r)
          for (std::size_t i = 0; i < betti_abs(p); ++i)
            for (std::size_t j = 0; j < betti_abs(q); ++j)
              for (std::size_t k = 0; k < betti_abs(r); ++k) {
                const Mask left =
                    cup_abs(p + q, r, cup_abs(p, q, Mask{1} << i, Mask{1} << j), Mask{1} << k);
                const Mask right =
                    cup_abs(p, q + r, Mask{1} << i, cup_abs(q, r, Mask{1} << j, Mask{1} << k));
                if (left != right)
                  complain("associativity fails at degrees " + std::to_string(p) + "," +
                           std::to_string(q) + "," + std::to_string(r));
              }
    return v;
  }

  /// Longest m with some nonzero m-fold product of positive-degree classes,
  /// plus one (so a contractible space scores 1, the 2-torus 3).
  int cuplength() const {
    std::set<std::pair<std::size_t, Mask>> frontier;
    for (std::size_t p = 1; p <= n_; ++p)
      for (std::size_t i = 0; i < betti_abs(p); ++i) frontier.insert({p, Mask{1} << i});
    int m = frontier.empty() ? 0 : 1;
    while (!frontier.empty()) {
      std::set<std::pair<std::size_t, Mask>> next;
      for (const auto& [p, a] : frontier)
        for (std::size_t q = 1; p + q <= n_; ++q)
          for (std::size_t j = 0; j < betti_abs(q); ++j) {
            const Mask prod = cup_abs(p, q, a, Mask{1} << j);
            if (prod) next.insert({p + q, prod});
          }
      if (next.empty()) break;
      frontier = std::move(next);
      ++m;
    }
    return m + 1;
  }

  struct RelativeCuplength {
    int value = 0;
    bool relative_trivial = false;  // H^*(X, A) = 0: no information
  };

  /// Longest m with some relative class (any degree) times m positive-degree
  /// absolute classes nonzero in the relative module, plus one.
  RelativeCuplength relative_cuplength() const {
    RelativeCuplength out;
    std::set<std::pair<std::size_t, Mask>> frontier;
    for (std::size_t p = 0; p <= n_; ++p)
      for (std::size_t i = 0; i < betti_rel(p); ++i) frontier.insert({p, Mask{1} << i});
    if (frontier.empty()) {
      out.relative_trivial = true;
      out.value = 0;
      return out;
    }
    int m = 0;
    while (true) {
      std::set<std::pair<std::size_t, Mask>> next;
      for (const auto& [p, a] : frontier)
        for (std::size_t q = 1; p + q <= n_; ++q)
          for (std::size_t j = 0; j < betti_abs(q); ++j) {
            const Mask prod = cup_rel(p, q, a, Mask{1} << j);
            if (prod) next.insert({p + q, prod});
          }
      if (next.empty()) break;
      frontier = std::move(next);
      ++m;
    }
    out.value = m + 1;
    return out;
  }

  /// Nonzero products of absolute basis pairs, for the ring report.
  std::vector<std::string> nonzero_basis_products() const {
    std::vector<std::string> out;
    for (std::size_t p = 1; p <= n_; ++p)
      for (std::size_t q = 1; p + q <= n_; ++q)
        for (std::size_t i = 0; i < betti_abs(p); ++i)
          for (std::size_t j = 0; j < betti_abs(q); ++j)
            if (cup_abs(p, q, Mask{1} << i, Mask{1} << j))
              out.push_back("h" + std::to_string(p) + "[" + std::to_string(i) + "] * h" +
                            std::to_string(q) + "[" + std::to_string(j) + "] != 0");
    return out;
  }

 private:
  struct Degree {
    // Echelon of coboundaries plus chosen representatives; tags identify reps.
    Gf2Echelon reducer;
    std::vector<BitVec> reps;
  };

  const PairComplex* cx_;
  std::size_t n_;
  std::vector<Degree> abs_, rel_;

  static Mask coords(const Degree& d, const BitVec& cocycle) {
    std::vector<int> tags;
    BitVec r = d.reducer.reduce(cocycle, &tags);
    if (r.any()) throw std::logic_error("cohomology: vector is not a cocycle in the stored span");
    Mask m = 0;
    for (int t : tags) m ^= Mask{1} << t;
    return m;
  }

  void build_degree(std::size_t k) {
    build_side(k, /*relative=*/false);
    build_side(k, /*relative=*/true);
  }

  void build_side(std::size_t k, bool relative) {
    Degree& d = relative ? rel_[k] : abs_[k];
    const std::size_t nk = cx_->cells(k);
    // Coboundary image spanners from degree k-1.
    if (k > 0) {
      const std::size_t nkm = cx_->cells(k - 1);
      std::vector<BitVec> spanners(nkm, BitVec(nk));
      for (std::size_t s = 0; s < nk; ++s) {
        if (relative && cx_->in_subcomplex(k, s)) continue;
        for (std::uint64_t f : cx_->faces(cx_->keys(k)[s])) {
          const std::size_t t = cx_->index_of(k - 1, f);
          if (relative && cx_->in_subcomplex(k - 1, t)) continue;
          spanners[t].flip(s);
        }
      }
      for (auto& v : spanners) d.reducer.insert(std::move(v));
    }
    // Kernel of the coboundary out of degree k.
    std::vector<BitVec> rows;
    const std::size_t nk1 = cx_->cells(k + 1);
    if (k < n_) {
      rows.reserve(nk1);
      for (std::size_t s = 0; s < nk1; ++s) {
        if (relative && cx_->in_subcomplex(k + 1, s)) continue;
        BitVec row(nk);
        for (std::uint64_t f : cx_->faces(cx_->keys(k + 1)[s])) {
          const std::size_t t = cx_->index_of(k, f);
          if (relative && cx_->in_subcomplex(k, t)) continue;
          row.flip(t);
        }
        rows.push_back(std::move(row));
      }
    }
    std::vector<BitVec> kernel = gf2_kernel(rows, nk);
    if (relative) {
      // Subcomplex columns sit in no row, so they surface as singleton kernel
      // vectors; they are not relative cochains and are dropped.
      std::vector<BitVec> keep;
      for (auto& z : kernel)
        if (cx_->mask_subcomplex(k, z) == z) keep.push_back(std::move(z));
      kernel = std::move(keep);
    }
    for (auto& z : kernel) {
      BitVec r = d.reducer.reduce(z);
      if (r.none()) continue;
      const int tag = static_cast<int>(d.reps.size());
      if (tag >= 31) throw std::invalid_argument("cohomology rank exceeds the coordinate-mask budget");
      d.reps.push_back(r);
      d.reducer.insert(std::move(r), tag);
    }
  }

  void build_tables() {
    abs_table.assign(n_ + 1, {});
    rel_table.assign(n_ + 1, {});
    for (std::size_t p = 0; p <= n_; ++p) {
      abs_table[p].assign(n_ + 1, {});
      rel_table[p].assign(n_ + 1, {});
      for (std::size_t q = 0; p + q <= n_; ++q) {
        auto& at = abs_table[p][q];
        at.assign(abs_[p].reps.size(), std::vector<Mask>(abs_[q].reps.size(), 0));
        for (std::size_t i = 0; i < abs_[p].reps.size(); ++i)
          for (std::size_t j = 0; j < abs_[q].reps.size(); ++j) {
            const BitVec prod = cx_->cup(p, abs_[p].reps[i], q, abs_[q].reps[j]);
            at[i][j] = coords(abs_[p + q], prod);
          }
        auto& rt = rel_table[p][q];
        rt.assign(rel_[p].reps.size(), std::vector<Mask>(abs_[q].reps.size(), 0));
        for (std::size_t i = 0; i < rel_[p].reps.size(); ++i)
          for (std::size_t j = 0; j < abs_[q].reps.size(); ++j) {
            BitVec prod = cx_->cup(p, rel_[p].reps[i], q, abs_[q].reps[j]);
            prod = cx_->mask_subcomplex(p + q, std::move(prod));
            rt[i][j] = coords(rel_[p + q], prod);
          }
      }
    }
  }

  static Mask bilinear(const std::vector<std::vector<std::vector<std::vector<Mask>>>>& table,
                       std::size_t p, std::size_t q, Mask a, Mask b) {
    if (p + q >= table.size() || q >= table[p].size()) return 0;
    Mask out = 0;
    const auto& t = table[p][q];
    for (std::size_t i = 0; a >> i; ++i) {
      if (!((a >> i) & 1)) continue;
      if (i >= t.size()) continue;
      for (std::size_t j = 0; b >> j; ++j) {
        if (!((b >> j) & 1)) continue;
        if (j >= t[i].size()) continue;
        out ^= t[i][j];
      }
    }
    return out;
  }
};

}  // namespace conley
