#pragma once

// Empirical measures over the half-space class A_{w,t} = {r : -w'r <= t}.

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "qqvar/dist.hpp"

namespace qqvar {

template <typename Scalar = double>
struct HalfSpace {
  Vec<Scalar> w;
  Scalar t;

  HalfSpace(Vec<Scalar> w_, Scalar t_) : w(std::move(w_)), t(t_) {
    detail::require_nonzero_finite(w, "HalfSpace");
    if (std::isnan(t)) throw ArgumentError("HalfSpace: threshold is NaN");
  }

  /// Indicator of a single return vector, using the "<=" convention.
  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& r) const {
    return -w.dot(r) <= t;
  }
};

/// Counts of the four cells S11 (in A and B), S10 (A only), S01 (B only), S00 (neither).
struct PartitionCounts {
  long n11 = 0;
  long n10 = 0;
  long n01 = 0;
  long n00 = 0;

  long total() const { return n11 + n10 + n01 + n00; }
  long disagreements() const { return n10 + n01; }
};

/// Sorted projected losses of one sample along one direction; repeated cdf and
/// quantile queries reuse the sort.
template <typename Scalar = double>
class ProjectedLosses {
public:
  template <typename Derived>
  ProjectedLosses(const ReturnSample<Scalar>& sample, const Eigen::MatrixBase<Derived>& w) {
    if (sample.size() < 1) throw ArgumentError("ProjectedLosses: empty sample");
    detail::require_nonzero_finite(w, "ProjectedLosses");
    const Vec<Scalar> l = sample.losses(w);
    sorted_.assign(l.data(), l.data() + l.size());
    std::sort(sorted_.begin(), sorted_.end());
  }

  explicit ProjectedLosses(std::vector<Scalar> losses) : sorted_(std::move(losses)) {
    if (sorted_.empty()) throw ArgumentError("ProjectedLosses: empty sample");
    std::sort(sorted_.begin(), sorted_.end());
  }

  std::size_t size() const { return sorted_.size(); }
  const std::vector<Scalar>& sorted() const { return sorted_; }

  /// F_n(t) = #{L_i <= t} / n.
  Scalar cdf(Scalar t) const {
    if (std::isnan(t)) throw ArgumentError("empirical cdf: threshold is NaN");
    const auto k = std::upper_bound(sorted_.begin(), sorted_.end(), t) - sorted_.begin();
    return static_cast<Scalar>(k) / static_cast<Scalar>(sorted_.size());
  }

  /// inf{t : F_n(t) >= alpha}, the ceil(n alpha)-th order statistic.
  Scalar quantile(Scalar alpha) const { return sorted_[order_index(alpha, sorted_.size())]; }

  /// Zero-based index of the ceil(n alpha)-th order statistic.
  static std::size_t order_index(Scalar alpha, std::size_t n) {
    if (!(alpha > 0 && alpha < 1)) throw ArgumentError("empirical quantile: level must lie in (0, 1)");
    // n * alpha may round across an integer; settle k by the defining inequalities
    // k / n >= alpha > (k - 1) / n.
    const Scalar nn = static_cast<Scalar>(n);
    auto k = static_cast<std::size_t>(std::ceil(alpha * nn));
    if (k > 1 && static_cast<Scalar>(k - 1) / nn >= alpha) --k;
    if (k < n && static_cast<Scalar>(k) / nn < alpha) ++k;
    return std::clamp<std::size_t>(k, 1, n) - 1;
  }

private:
  std::vector<Scalar> sorted_;
};

template <typename Scalar, typename Derived>
Scalar empirical_cdf(const ReturnSample<Scalar>& sample, const Eigen::MatrixBase<Derived>& w, std::type_identity_t<Scalar> t) {
  if (sample.size() < 1) throw ArgumentError("empirical_cdf: empty sample");
  detail::require_nonzero_finite(w, "empirical_cdf");
  if (std::isnan(t)) throw ArgumentError("empirical_cdf: threshold is NaN");
  const Vec<Scalar> l = sample.losses(w);
  return static_cast<Scalar>((l.array() <= t).count()) / static_cast<Scalar>(l.size());
}

/// Left-continuous generalized inverse of the empirical cdf; O(n) selection.
template <typename Scalar, typename Derived>
Scalar empirical_quantile(const ReturnSample<Scalar>& sample, const Eigen::MatrixBase<Derived>& w, std::type_identity_t<Scalar> alpha) {
  if (sample.size() < 1) throw ArgumentError("empirical_quantile: empty sample");
  detail::require_nonzero_finite(w, "empirical_quantile");
  Vec<Scalar> l = sample.losses(w);
  const auto k = ProjectedLosses<Scalar>::order_index(alpha, static_cast<std::size_t>(l.size()));
  std::nth_element(l.data(), l.data() + k, l.data() + l.size());
  return l(static_cast<Eigen::Index>(k));
}

template <typename Scalar>
PartitionCounts partition_counts(const ReturnSample<Scalar>& sample, const HalfSpace<Scalar>& a, const HalfSpace<Scalar>& b) {
  if (sample.size() < 1) throw ArgumentError("partition_counts: empty sample");
  const Vec<Scalar> la = sample.losses(a.w);
  const Vec<Scalar> lb = sample.losses(b.w);
  PartitionCounts c;
  for (Eigen::Index i = 0; i < la.size(); ++i) {
    const bool in_a = la(i) <= a.t;
    const bool in_b = lb(i) <= b.t;
    if (in_a && in_b)
      ++c.n11;
    else if (in_a)
      ++c.n10;
    else if (in_b)
      ++c.n01;
    else
      ++c.n00;
  }
  return c;
}

/// P_n(A delta B).
template <typename Scalar>
Scalar sym_diff_proportion(const ReturnSample<Scalar>& sample, const HalfSpace<Scalar>& a, const HalfSpace<Scalar>& b) {
  const auto c = partition_counts(sample, a, b);
  return static_cast<Scalar>(c.disagreements()) / static_cast<Scalar>(c.total());
}

/// Grid point (w, t) for the sup-discrepancy search.
template <typename Scalar = double>
struct GridPoint {
  Vec<Scalar> w;
  Scalar t;
};

/// max over the grid of |F_n(w, t) - F(w, t)|; a lower bound on the supremum over the class.
/// Losses are sorted once per distinct direction.
template <typename Scalar>
Scalar sup_discrepancy(const ReturnSample<Scalar>& sample, const MvtModel<Scalar>& model, const std::vector<GridPoint<Scalar>>& grid) {
  if (grid.empty()) throw ArgumentError("sup_discrepancy: empty grid");
  Scalar worst = 0;
  const Vec<Scalar>* current = nullptr;
  std::optional<ProjectedLosses<Scalar>> losses;
  std::optional<ProjectedT<Scalar>> law;
  for (const auto& g : grid) {
    if (current == nullptr || current->size() != g.w.size() || *current != g.w) {
      losses.emplace(sample, g.w);
      law.emplace(project_loss(model, g.w));
      current = &g.w;
    }
    worst = std::max(worst, std::abs(losses->cdf(g.t) - t_cdf(*law, g.t)));
  }
  return worst;
}

/// Tensor grid of `directions` weight vectors on a great circle through w0 (angles within
/// +-max_angle) times `thresholds` thresholds spanning q0 +- 3 projected scales of w0.
template <typename Scalar, typename Derived>
std::vector<GridPoint<Scalar>> default_grid(const MvtModel<Scalar>& model, const Eigen::MatrixBase<Derived>& w0, std::type_identity_t<Scalar> alpha,
                                            int directions = 21, int thresholds = 21, std::type_identity_t<Scalar> max_angle = Scalar(0.1)) {
  detail::require_nonzero_finite(w0, "default_grid");
  const Eigen::Index p = w0.size();
  const Vec<Scalar> base = w0;
  const Scalar radius = base.norm();
  const Vec<Scalar> e = base / radius;
  // Any unit vector orthogonal to w0 fixes the circle; use the first coordinate axis
  // with a nonzero orthogonal component.
  Vec<Scalar> u = Vec<Scalar>::Zero(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    Vec<Scalar> cand = Vec<Scalar>::Unit(p, k);
    cand -= cand.dot(e) * e;
    if (cand.norm() > Scalar(1e-6)) {
      u = cand.normalized();
      break;
    }
  }
  const auto law0 = project_loss(model, base);
  const Scalar q0 = t_quantile(law0, alpha);
  std::vector<GridPoint<Scalar>> grid;
  grid.reserve(static_cast<std::size_t>(directions * thresholds));
  for (int i = 0; i < directions; ++i) {
    const Scalar angle = directions == 1 ? 0 : -max_angle + 2 * max_angle * i / (directions - 1);
    Vec<Scalar> w = radius * (std::cos(angle) * e + std::sin(angle) * u);
    for (int j = 0; j < thresholds; ++j) {
      const Scalar off = thresholds == 1 ? 0 : -3 + Scalar(6) * j / (thresholds - 1);
      grid.push_back({w, q0 + off * law0.scale});
    }
  }
  return grid;
}

}  // namespace qqvar
