#pragma once

#include <boost/dynamic_bitset.hpp>
#include <cstddef>
#include <vector>

namespace conley {

using BitVec = boost::dynamic_bitset<>;

/// Row-echelon accumulator over GF(2). Rows keep distinct pivots (lowest set
/// bit); insertion order is deterministic, so the basis it produces is too.
class Gf2Echelon {
 public:
  /// Reduces v against the stored rows; optionally collects the tags of the
  /// rows used.
  BitVec reduce(BitVec v, std::vector<int>* tags_used = nullptr) const {
    for (const Row& r : rows_) {
      if (r.v.size() != v.size()) continue;
      if (v.test(r.pivot)) {
        v ^= r.v;
        if (tags_used && r.tag >= 0) tags_used->push_back(r.tag);
      }
    }
    return v;
  }

  /// Returns true (and stores the reduced row) when v is independent.
  bool insert(BitVec v, int tag = -1) {
    v = reduce(std::move(v));
    std::size_t p = v.find_first();
    if (p == BitVec::npos) return false;
    rows_.push_back({p, std::move(v), tag});
    // Keep rows ordered by pivot so reduce() terminates in one sweep.
    for (std::size_t i = rows_.size(); i-- > 1;) {
      if (rows_[i].pivot < rows_[i - 1].pivot)
        std::swap(rows_[i], rows_[i - 1]);
      else
        break;
    }
    return true;
  }

  std::size_t rank() const { return rows_.size(); }

 private:
  struct Row {
    std::size_t pivot;
    BitVec v;
    int tag;
  };
  std::vector<Row> rows_;
};

inline std::size_t gf2_rank(const std::vector<BitVec>& rows) {
  Gf2Echelon e;
  for (const auto& r : rows) e.insert(r);
  return e.rank();
}

/// Kernel basis of the linear map whose matrix rows are given (columns are
/// the unknowns). Basis vectors are produced in ascending free-column order.
inline std::vector<BitVec> gf2_kernel(const std::vector<BitVec>& rows, std::size_t ncols) {
  // Reduced row echelon form.
  std::vector<BitVec> ech;
  std::vector<std::size_t> pivots;
  for (const auto& row : rows) {
    BitVec v = row;
    for (std::size_t i = 0; i < ech.size(); ++i)
      if (v.test(pivots[i])) v ^= ech[i];
    const std::size_t p = v.find_first();
    if (p == BitVec::npos) continue;
    for (std::size_t i = 0; i < ech.size(); ++i)
      if (ech[i].test(p)) ech[i] ^= v;
    ech.push_back(std::move(v));
    pivots.push_back(p);
  }
  std::vector<bool> is_pivot(ncols, false);
  for (std::size_t p : pivots) is_pivot[p] = true;
  std::vector<BitVec> kernel;
  for (std::size_t f = 0; f < ncols; ++f) {
    if (is_pivot[f]) continue;
    BitVec x(ncols);
    x.set(f);
    for (std::size_t i = 0; i < ech.size(); ++i)
      if (ech[i].test(f)) x.set(pivots[i]);
    kernel.push_back(std::move(x));
  }
  return kernel;
}

}  // namespace conley
