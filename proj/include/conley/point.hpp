#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>

namespace conley {

/// Maximum spatial dimension supported by the toolkit. Grids above this are
/// rejected at configuration time, so fixed-capacity points are safe.
inline constexpr std::size_t kMaxDim = 4;

/// Small fixed-capacity vector used for points and field values.
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t n, double fill = 0.0) : n_(n) {
    if (n > kMaxDim) throw std::invalid_argument("Vec: dimension exceeds capacity");
    for (std::size_t i = 0; i < n_; ++i) a_[i] = fill;
  }
  Vec(std::initializer_list<double> xs) : n_(xs.size()) {
    if (n_ > kMaxDim) throw std::invalid_argument("Vec: dimension exceeds capacity");
    std::size_t i = 0;
    for (double x : xs) a_[i++] = x;
  }

  std::size_t size() const { return n_; }
  double& operator[](std::size_t i) { return a_[i]; }
  double operator[](std::size_t i) const { return a_[i]; }
  const double* data() const { return a_.data(); }
  double* data() { return a_.data(); }

  Vec& operator+=(const Vec& o) {
    for (std::size_t i = 0; i < n_; ++i) a_[i] += o.a_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (std::size_t i = 0; i < n_; ++i) a_[i] -= o.a_[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (std::size_t i = 0; i < n_; ++i) a_[i] *= s;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double s, Vec a) { return a *= s; }

  double dot(const Vec& o) const {
    double s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += a_[i] * o.a_[i];
    return s;
  }
  double norm() const { return std::sqrt(dot(*this)); }

  bool operator==(const Vec& o) const {
    if (n_ != o.n_) return false;
    for (std::size_t i = 0; i < n_; ++i)
      if (a_[i] != o.a_[i]) return false;
    return true;
  }

 private:
  std::array<double, kMaxDim> a_{};
  std::size_t n_ = 0;
};

}  // namespace conley
