#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "conley/domain.hpp"
#include "conley/expression.hpp"
#include "conley/point.hpp"

namespace conley {

/// Scalar objective on a box or flat torus: the expression f, its symbolic
/// partial derivatives, and evaluation helpers. Immutable after construction;
/// safe to evaluate concurrently.
class ScalarField {
 public:
  ScalarField(std::string expression_text, Domain domain)
      : domain_(std::move(domain)), text_(std::move(expression_text)) {
    domain_.validate();
    n_ = static_cast<int>(domain_.dim());
    f_ = parse_expression(text_, n_);
    f_tape_ = EvalTape(f_);
    partials_.reserve(domain_.dim());
    for (int i = 0; i < n_; ++i) {
      partials_.push_back(differentiate(f_, i));
      partial_tapes_.emplace_back(partials_.back());
    }
  }

  int dim() const { return n_; }
  const Domain& domain() const { return domain_; }
  const ExprPtr& expression() const { return f_; }
  const ExprPtr& partial(int i) const { return partials_[static_cast<std::size_t>(i)]; }
  const std::string& text() const { return text_; }

  double value(const Vec& p) const {
    const Vec q = domain_.wrap(p);
    return f_tape_.eval(std::span<const double>(q.data(), q.size()));
  }

  Vec gradient(const Vec& p) const {
    const Vec q = domain_.wrap(p);
    Vec g(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
      g[i] = partial_tapes_[i].eval(std::span<const double>(q.data(), q.size()));
    return g;
  }

  /// Central finite difference, cross-check only.
  Vec gradient_fd(const Vec& p, double h = 1e-5) const {
    Vec g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      Vec a = p, b = p;
      a[i] -= h;
      b[i] += h;
      g[i] = (value(b) - value(a)) / (2 * h);
    }
    return g;
  }

  /// On periodic axes f must agree across the seam; returns one warning per
  /// axis where |f(lo) - f(hi)| exceeds 1e-9 on sampled sections.
  std::vector<std::string> periodicity_warnings(int sections = 17) const {
    std::vector<std::string> warnings;
    for (std::size_t ax = 0; ax < domain_.dim(); ++ax) {
      if (!domain_.periodic[ax]) continue;
      double worst = 0;
      for (int s = 0; s < sections; ++s) {
        Vec p(domain_.dim());
        for (std::size_t j = 0; j < domain_.dim(); ++j)
          p[j] = domain_.lo[j] + (0.131 + 0.719 * s / sections) * domain_.length(j);
        Vec plo = p, phi = p;
        plo[ax] = domain_.lo[ax];
        phi[ax] = domain_.hi[ax];
        // Evaluate without wrapping so the two seam sides are really compared.
        Vec qlo = plo, qhi = phi;
        const double flo = f_tape_.eval(std::span<const double>(qlo.data(), qlo.size()));
        const double fhi = f_tape_.eval(std::span<const double>(qhi.data(), qhi.size()));
        worst = std::max(worst, std::abs(flo - fhi));
      }
      if (worst > 1e-9)
        warnings.push_back("objective is not periodic on axis " + std::to_string(ax) +
                           " (seam mismatch " + format_double(worst) + ")");
    }
    return warnings;
  }

 private:
  Domain domain_;
  std::string text_;
  int n_ = 0;
  ExprPtr f_;
  std::vector<ExprPtr> partials_;
  EvalTape f_tape_;
  std::vector<EvalTape> partial_tapes_;
};

enum class GradientMode { normalized, raw };

/// Strictly increasing rate function with alpha(0) = 0 that the normalized
/// field realizes exactly: Y.f = alpha(|Df|).
inline double alpha_rate(double s) { return s * s / std::sqrt(1.0 + s * s); }

/// Ascent field Y for the objective. Normalized mode Y = Df / sqrt(1+|Df|^2)
/// keeps |Y| < 1 everywhere; raw mode Y = Df is used when closed-form orbit
/// oracles are wanted.
class PseudoGradientField {
 public:
  PseudoGradientField(std::shared_ptr<const ScalarField> field, GradientMode mode)
      : field_(std::move(field)), mode_(mode) {}

  const ScalarField& field() const { return *field_; }
  GradientMode mode() const { return mode_; }

  Vec operator()(const Vec& p) const {
    Vec g = field_->gradient(p);
    if (mode_ == GradientMode::raw) return g;
    const double s2 = g.dot(g);
    const double inv = 1.0 / std::sqrt(1.0 + s2);
    return inv * g;
  }

  /// Directional derivative Y.f = <Df, Y> at p.
  double ascent_rate(const Vec& p) const {
    Vec g = field_->gradient(p);
    const double s2 = g.dot(g);
    if (mode_ == GradientMode::raw) return s2;
    return s2 / std::sqrt(1.0 + s2);
  }

 private:
  std::shared_ptr<const ScalarField> field_;
  GradientMode mode_;
};

}  // namespace conley
