#pragma once

// Independent reference computations for the tests. Nothing here calls into the
// incomplete-beta / Newton path used by the library.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <functional>
#include <numbers>

#include "qqvar/dist.hpp"
#include "qqvar/empirical.hpp"

namespace oracle {

inline double t_density(double z, double nu) {
  const double c = std::tgamma((nu + 1) / 2) / (std::sqrt(nu * std::numbers::pi) * std::tgamma(nu / 2));
  return c * std::pow(1 + z * z / nu, -(nu + 1) / 2);
}

/// Standard t cdf by adaptive quadrature of the density.
inline double t_cdf(double z, double nu) {
  if (z == 0) return 0.5;
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double a = std::abs(z);
  const double mass = integrator.integrate([nu](double x) { return t_density(x, nu); }, 0.0, a);
  return z > 0 ? 0.5 + mass : 0.5 - mass;
}

/// Bisection on the quadrature cdf.
inline double t_quantile(double p, double nu) {
  double lo = -1e3, hi = 1e3;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (t_cdf(mid, nu) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double normal_cdf(double z) {
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  const auto phi = [](double x) { return std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi); };
  return 0.5 + (z >= 0 ? 1 : -1) * gk.integrate(phi, 0.0, std::abs(z), 15, 1e-15);
}

/// Central difference of f at x with step h.
inline double central_diff(const std::function<double(double)>& f, double x, double h) { return (f(x + h) - f(x - h)) / (2 * h); }

/// Double indicator loop over the rows.
inline double brute_sym_diff(const qqvar::ReturnSample<double>& s, const qqvar::HalfSpace<double>& a, const qqvar::HalfSpace<double>& b) {
  long count = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const Eigen::VectorXd r = s.data.row(i).transpose();
    const bool ia = -a.w.dot(r) <= a.t;
    const bool ib = -b.w.dot(r) <= b.t;
    count += ia != ib;
  }
  return static_cast<double>(count) / static_cast<double>(s.size());
}

/// Kolmogorov-Smirnov distance between a sample (sorted) and a cdf.
inline double ks_distance(const std::vector<double>& sorted, const std::function<double(double)>& cdf) {
  const double n = static_cast<double>(sorted.size());
  double d = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

inline double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const auto k = xs.size() / 2;
  return xs.size() % 2 ? xs[k] : 0.5 * (xs[k - 1] + xs[k]);
}

/// Slope of least-squares line through (x, y).
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

}  // namespace oracle
