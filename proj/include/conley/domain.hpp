#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "conley/point.hpp"

namespace conley {

/// Axis-aligned box, optionally periodic per axis (flat torus directions).
struct Domain {
  std::vector<double> lo, hi;
  std::vector<bool> periodic;

  std::size_t dim() const { return lo.size(); }
  double length(std::size_t i) const { return hi[i] - lo[i]; }

  void validate() const {
    if (lo.size() != hi.size() || lo.size() != periodic.size())
      throw std::invalid_argument("Domain: mismatched axis counts");
    if (lo.empty() || lo.size() > kMaxDim)
      throw std::invalid_argument("Domain: dimension must be in [1, 4]");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i])) throw std::invalid_argument("Domain: requires lo < hi on every axis");
  }

  /// Canonicalizes periodic coordinates into [lo, hi). Non-periodic axes pass through.
  Vec wrap(const Vec& p) const {
    Vec q = p;
    for (std::size_t i = 0; i < dim(); ++i) {
      if (!periodic[i]) continue;
      const double len = length(i);
      double u = std::fmod(q[i] - lo[i], len);
      if (u < 0) u += len;
      q[i] = lo[i] + u;
    }
    return q;
  }

  /// Shortest displacement from a to b honoring wraparound on periodic axes.
  Vec displacement(const Vec& a, const Vec& b) const {
    Vec d(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      double di = b[i] - a[i];
      if (periodic[i]) {
        const double len = length(i);
        di = std::remainder(di, len);
      }
      d[i] = di;
    }
    return d;
  }

  double distance(const Vec& a, const Vec& b) const { return displacement(a, b).norm(); }

  /// True when p lies in the closed box on all non-periodic axes.
  bool contains(const Vec& p, double slack = 0.0) const {
    for (std::size_t i = 0; i < dim(); ++i) {
      if (periodic[i]) continue;
      if (p[i] < lo[i] - slack || p[i] > hi[i] + slack) return false;
    }
    return true;
  }

  double diameter() const {
    double s = 0;
    for (std::size_t i = 0; i < dim(); ++i) {
      const double l = periodic[i] ? length(i) / 2 : length(i);
      s += l * l;
    }
    return std::sqrt(s);
  }
};

}  // namespace conley
