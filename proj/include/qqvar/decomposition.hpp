#pragma once

// Q-Q orthogonality decomposition of a projected-quantile error
//
//   qhat_alpha(w_hat) - q_alpha(w0) = D1 + D2 + D3
//
//   D1 = q_alpha(w_hat) - q_alpha(w0)                                (direction)
//   D2 = (alpha - F_n(w_hat, q_alpha(w_hat))) / f_{w_hat}(q_alpha(w_hat))   (empirical, Bahadur term)
//   D3 = residual                                                   (Bahadur remainder)
//
// together with the tangent-space machinery showing that F(w, q0) is stationary in w along
// directions h with h'mu = 0 and h'Sigma w0 = 0.

#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "qqvar/dist.hpp"
#include "qqvar/empirical.hpp"

namespace qqvar {

template <typename Scalar = double>
struct QQDecomposition {
  Scalar d1 = 0;
  Scalar d2 = 0;
  Scalar d3 = 0;
  Scalar total = 0;
  Scalar q0 = 0;            ///< q_alpha(w0)
  Scalar q_alpha_what = 0;  ///< q_alpha(w_hat)
  Scalar q_hat = 0;         ///< empirical quantile along w_hat
  Scalar density_at_quantile = 0;  ///< f_{w_hat}(q_alpha(w_hat))
  Scalar ecdf_at_quantile = 0;     ///< F_n(w_hat, q_alpha(w_hat))
};

template <typename Scalar, typename D0, typename D1>
QQDecomposition<Scalar> compute(const MvtModel<Scalar>& model, const ReturnSample<Scalar>& sample, const Eigen::MatrixBase<D0>& w0,
                                const Eigen::MatrixBase<D1>& w_hat, std::type_identity_t<Scalar> alpha) {
  if (!(alpha > 0 && alpha < 1)) throw ArgumentError("compute: level must lie in (0, 1)");
  if (sample.size() < 1) throw ArgumentError("compute: empty sample");
  if (sample.dim() != model.dim()) throw ArgumentError("compute: sample dimension does not match model");

  const auto law0 = project_loss(model, w0);
  const auto law_hat = project_loss(model, w_hat);

  QQDecomposition<Scalar> out;
  out.q0 = t_quantile(law0, alpha);
  out.q_alpha_what = t_quantile(law_hat, alpha);
  out.density_at_quantile = t_pdf(law_hat, out.q_alpha_what);
  if (!(out.density_at_quantile > 0)) throw NumericalError("compute: projected density vanished at the quantile");

  Vec<Scalar> losses = sample.losses(w_hat);
  const auto n = static_cast<std::size_t>(losses.size());
  const auto below = (losses.array() <= out.q_alpha_what).count();
  out.ecdf_at_quantile = static_cast<Scalar>(below) / static_cast<Scalar>(n);
  const auto k = ProjectedLosses<Scalar>::order_index(alpha, n);
  std::nth_element(losses.data(), losses.data() + k, losses.data() + losses.size());
  out.q_hat = losses(static_cast<Eigen::Index>(k));

  out.total = out.q_hat - out.q0;
  out.d1 = out.q_alpha_what - out.q0;
  out.d2 = (alpha - out.ecdf_at_quantile) / out.density_at_quantile;
  out.d3 = out.total - out.d1 - out.d2;
  return out;
}

/// d/dq F(w0, q) at q0, i.e. the projected density f_{w0}(q0) = t_nu(z0) / s0.
template <typename Scalar, typename Derived>
Scalar threshold_derivative(const MvtModel<Scalar>& model, const Eigen::MatrixBase<Derived>& w0, std::type_identity_t<Scalar> q0) {
  const auto law = project_loss(model, w0);
  const Scalar z0 = law.standardize(q0);
  return special::student_pdf(z0, model.nu()) / law.scale;
}

/// Derivative of eps -> F(w0 + eps h, q0) at eps = 0:
///   t_nu(z0) * (h'mu / s0 - (q0 + w0'mu) h'Sigma w0 / s0^3).
template <typename Scalar, typename D0, typename DH>
Scalar directional_derivative(const MvtModel<Scalar>& model, const Eigen::MatrixBase<D0>& w0, std::type_identity_t<Scalar> q0,
                              const Eigen::MatrixBase<DH>& h) {
  if (h.size() != model.dim()) throw ArgumentError("directional_derivative: direction dimension does not match model");
  const auto law = project_loss(model, w0);
  const Scalar s0 = law.scale;
  const Scalar centred = q0 + w0.dot(model.mu());
  const Scalar z0 = centred / s0;
  const Scalar h_mu = h.dot(model.mu());
  const Scalar h_sigma_w0 = h.dot(model.sigma() * w0);
  return special::student_pdf(z0, model.nu()) * (h_mu / s0 - centred * h_sigma_w0 / (s0 * s0 * s0));
}

/// Orthonormal basis (columns) of {h : h'mu = 0, h'Sigma w0 = 0}.
template <typename Scalar = double>
struct TangentBasis {
  Mat<Scalar> vectors;

  Eigen::Index dimension() const { return vectors.cols(); }
  auto vector(Eigen::Index i) const { return vectors.col(i); }
};

template <typename Scalar, typename Derived>
TangentBasis<Scalar> tangent_basis(const MvtModel<Scalar>& model, const Eigen::MatrixBase<Derived>& w0) {
  detail::require_nonzero_finite(w0, "tangent_basis");
  const Eigen::Index p = model.dim();
  if (w0.size() != p) throw ArgumentError("tangent_basis: weight dimension does not match model");

  // Constraint directions, normalized; exact zeros (mu = 0) are dropped.
  Mat<Scalar> constraints(p, 2);
  Eigen::Index m = 0;
  for (const Vec<Scalar>& c : {Vec<Scalar>(model.mu()), Vec<Scalar>(model.sigma() * w0)}) {
    const Scalar nrm = c.norm();
    if (nrm > 0) constraints.col(m++) = c / nrm;
  }
  if (m == 0) return {Mat<Scalar>::Identity(p, p)};

  Eigen::ColPivHouseholderQR<Mat<Scalar>> qr(constraints.leftCols(m));
  qr.setThreshold(Scalar(1e-12));
  const Eigen::Index rank = qr.rank();
  const Mat<Scalar> q = qr.householderQ();
  return {q.rightCols(p - rank)};
}

template <typename Scalar = double>
struct FirstOrderCheck {
  Scalar lhs = 0;       ///< F(w0 + eps h, q0 + delta) - alpha
  Scalar rhs = 0;       ///< delta * f_{w0}(q0)
  Scalar residual = 0;  ///< lhs - rhs
};

/// True when h is orthogonal to mu and Sigma w0 up to a relative tolerance.
template <typename Scalar, typename D0, typename DH>
bool in_tangent_space(const MvtModel<Scalar>& model, const Eigen::MatrixBase<D0>& w0, const Eigen::MatrixBase<DH>& h,
                      std::type_identity_t<Scalar> tol = Scalar(1e-10)) {
  const Vec<Scalar> sw0 = model.sigma() * w0;
  const Scalar hn = h.norm();
  return std::abs(h.dot(model.mu())) <= tol * hn * model.mu().norm() && std::abs(h.dot(sw0)) <= tol * hn * sw0.norm();
}

/// Checks that along a tangent direction the first-order change of F(w, q) near (w0, q0) is
/// carried by the quantile coordinate alone; the residual is second order in (eps, delta).
template <typename Scalar, typename D0, typename DH>
FirstOrderCheck<Scalar> first_order_check(const MvtModel<Scalar>& model, const Eigen::MatrixBase<D0>& w0, std::type_identity_t<Scalar> alpha,
                                          const Eigen::MatrixBase<DH>& h, std::type_identity_t<Scalar> eps,
                                          std::type_identity_t<Scalar> delta) {
  if (h.size() != model.dim()) throw ArgumentError("first_order_check: direction dimension does not match model");
  if (!in_tangent_space(model, w0, h)) throw ContractViolation("first_order_check: direction is not in the tangent space");
  const Scalar q0 = population_quantile(model, w0, alpha);
  const Vec<Scalar> w = w0 + eps * h;
  FirstOrderCheck<Scalar> out;
  if (eps == 0 && delta == 0) return out;
  out.lhs = population_cdf(model, w, q0 + delta) - alpha;
  out.rhs = delta * threshold_derivative(model, w0, q0);
  out.residual = out.lhs - out.rhs;
  return out;
}

}  // namespace qqvar
