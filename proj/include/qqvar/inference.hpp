#pragma once

// Bahadur-based asymptotic confidence interval for a projected quantile:
//   qhat +- z_{1 - gamma/2} sqrt(alpha (1 - alpha)) / (sqrt(n) f)

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string_view>

#include "qqvar/errors.hpp"
#include "qqvar/special.hpp"

namespace qqvar {

enum class DensityMethod { analytic, kernel };

inline std::string_view to_string(DensityMethod m) { return m == DensityMethod::analytic ? "analytic" : "kernel"; }

template <typename Scalar = double>
struct QuantileCI {
  Scalar center = 0;
  Scalar half_width = 0;
  Scalar gamma = 0;
  Scalar z = 0;  ///< z_{1 - gamma/2}
  Scalar density_used = 0;
  DensityMethod density_method = DensityMethod::analytic;

  Scalar lower() const { return center - half_width; }
  Scalar upper() const { return center + half_width; }
  bool contains(Scalar x) const { return lower() <= x && x <= upper(); }
};

template <typename Scalar>
Scalar standard_normal_quantile(Scalar p) {
  return special::normal_quantile(p);
}

/// gamma = 1 is accepted as the degenerate level with zero width.
template <typename Scalar>
QuantileCI<Scalar> confidence_interval(Scalar q_hat, std::type_identity_t<Scalar> alpha, std::type_identity_t<Scalar> gamma, long n,
                                       std::type_identity_t<Scalar> density, DensityMethod method = DensityMethod::analytic) {
  if (!(density > 0) || !std::isfinite(density)) throw ArgumentError("confidence_interval: density must be positive");
  if (n < 2) throw ArgumentError("confidence_interval: need at least two observations");
  if (!(alpha > 0 && alpha < 1)) throw ArgumentError("confidence_interval: level must lie in (0, 1)");
  if (!(gamma > 0 && gamma <= 1)) throw ArgumentError("confidence_interval: gamma must lie in (0, 1]");
  QuantileCI<Scalar> ci;
  ci.center = q_hat;
  ci.gamma = gamma;
  ci.z = gamma == 1 ? Scalar(0) : standard_normal_quantile(1 - gamma / 2);
  ci.density_used = density;
  ci.density_method = method;
  ci.half_width = ci.z * std::sqrt(alpha * (1 - alpha)) / (std::sqrt(static_cast<Scalar>(n)) * density);
  return ci;
}

/// Silverman's rule 0.9 min(sd, IQR / 1.34) n^{-1/5} on a sorted sample.
template <typename Scalar>
Scalar silverman_bandwidth(std::span<const Scalar> sorted) {
  const auto n = sorted.size();
  if (n < 2) throw ArgumentError("silverman_bandwidth: need at least two observations");
  Scalar mean = 0;
  for (auto x : sorted) mean += x;
  mean /= static_cast<Scalar>(n);
  Scalar ss = 0;
  for (auto x : sorted) ss += (x - mean) * (x - mean);
  const Scalar sd = std::sqrt(ss / static_cast<Scalar>(n - 1));
  // Linear-interpolation sample quantiles (type 7).
  const auto quantile = [&](Scalar p) {
    const Scalar h = (static_cast<Scalar>(n) - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (h - static_cast<Scalar>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const Scalar iqr = quantile(Scalar(0.75)) - quantile(Scalar(0.25));
  Scalar spread = std::min(sd, iqr / Scalar(1.34));
  if (!(spread > 0)) spread = sd;
  if (!(spread > 0)) throw ArgumentError("silverman_bandwidth: sample has zero spread");
  return Scalar(0.9) * spread * std::pow(static_cast<Scalar>(n), Scalar(-0.2));
}

/// Gaussian-kernel density estimate at x from sorted losses. Bandwidth defaults to Silverman's
/// rule; `bandwidth_scale` multiplies it. Only points within 10 bandwidths contribute.
template <typename Scalar>
Scalar kernel_density_at(std::span<const Scalar> sorted, std::type_identity_t<Scalar> x, std::type_identity_t<Scalar> bandwidth_scale = 1) {
  if (sorted.size() < 10) throw ArgumentError("kernel_density_at: need at least ten observations");
  if (!std::isfinite(x)) throw ArgumentError("kernel_density_at: non-finite argument");
  if (!(bandwidth_scale > 0)) throw ArgumentError("kernel_density_at: bandwidth scale must be positive");
  const Scalar h = bandwidth_scale * silverman_bandwidth(sorted);
  const Scalar reach = 10 * h;
  const auto first = std::lower_bound(sorted.begin(), sorted.end(), x - reach);
  const auto last = std::upper_bound(first, sorted.end(), x + reach);
  Scalar acc = 0;
  for (auto it = first; it != last; ++it) {
    const Scalar u = (x - *it) / h;
    acc += std::exp(-u * u / 2);
  }
  const Scalar norm = static_cast<Scalar>(sorted.size()) * h * std::sqrt(2 * std::numbers::pi_v<Scalar>);
  const Scalar est = acc / norm;
  // The Gaussian kernel is positive everywhere; far from the data the truncated sum can
  // underflow, so fall back to the nearest point's contribution.
  if (est > 0) return est;
  const auto pos = std::lower_bound(sorted.begin(), sorted.end(), x);
  Scalar nearest = std::numeric_limits<Scalar>::infinity();
  if (pos != sorted.end()) nearest = *pos - x;
  if (pos != sorted.begin()) nearest = std::min(nearest, x - *(pos - 1));
  const Scalar u = nearest / h;
  return std::max(std::exp(-u * u / 2) / norm, std::numeric_limits<Scalar>::denorm_min());
}

}  // namespace qqvar
