#pragma once

// Population laws: the multivariate Student t_nu(mu, Sigma) return model and the exact
// univariate law of a projected loss L(w) = -w'R.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>

#include "qqvar/errors.hpp"
#include "qqvar/random.hpp"
#include "qqvar/special.hpp"

namespace qqvar {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

template <typename Derived>
void require_nonzero_finite(const Eigen::MatrixBase<Derived>& w, const char* who) {
  if (w.size() == 0 || !w.allFinite()) throw ArgumentError(std::string(who) + ": weight vector must be finite and nonempty");
  if (w.isZero(0)) throw DegenerateProjection(std::string(who) + ": zero weight vector");
}

}  // namespace detail

/// t_nu(mu, Sigma) with the lower Cholesky factor of Sigma stored alongside.
template <typename Scalar = double>
class MvtModel {
public:
  using Vector = Vec<Scalar>;
  using Matrix = Mat<Scalar>;

  MvtModel(Vector mu, Matrix sigma, Scalar nu) : mu_(std::move(mu)), sigma_(std::move(sigma)), nu_(nu) {
    const auto p = mu_.size();
    if (p == 0) throw ModelError("MvtModel: empty location vector");
    if (sigma_.rows() != p || sigma_.cols() != p) throw ModelError("MvtModel: scatter matrix shape does not match location");
    if (!mu_.allFinite() || !sigma_.allFinite()) throw ModelError("MvtModel: non-finite parameters");
    if (!(nu_ > 0) || !std::isfinite(nu_)) throw ModelError("MvtModel: degrees of freedom must be positive and finite");
    const Scalar norm = sigma_.norm();
    if ((sigma_ - sigma_.transpose()).norm() > Scalar(1e-12) * norm) throw ModelError("MvtModel: scatter matrix is not symmetric");
    Eigen::LLT<Matrix> llt(sigma_);
    if (llt.info() != Eigen::Success) throw ModelError("MvtModel: scatter matrix is not positive definite");
    chol_ = llt.matrixL();
    if ((chol_ * chol_.transpose() - sigma_).norm() > Scalar(1e-10) * norm)
      throw ModelError("MvtModel: Cholesky factor does not reconstruct the scatter matrix");
  }

  /// Zero location, unit diagonal and constant off-diagonal correlation rho.
  static MvtModel equicorrelated(Eigen::Index p, Scalar rho, Scalar nu) {
    Matrix sigma = Matrix::Constant(p, p, rho);
    sigma.diagonal().setOnes();
    return MvtModel(Vector::Zero(p), std::move(sigma), nu);
  }

  const Vector& mu() const { return mu_; }
  const Matrix& sigma() const { return sigma_; }
  const Matrix& chol() const { return chol_; }
  Scalar nu() const { return nu_; }
  Eigen::Index dim() const { return mu_.size(); }

  /// nu <= 2: infinite variance, outside the finite-second-moment theory.
  bool boundary() const { return nu_ <= 2; }

  /// Stable identifier of the parameter values (bit-level hash).
  std::uint64_t tag() const {
    std::uint64_t h = derive_seed(static_cast<std::uint64_t>(dim()), {bits_of(static_cast<double>(nu_))});
    for (Eigen::Index i = 0; i < mu_.size(); ++i) h = derive_seed(h, {bits_of(static_cast<double>(mu_(i)))});
    for (Eigen::Index i = 0; i < sigma_.size(); ++i) h = derive_seed(h, {bits_of(static_cast<double>(sigma_.data()[i]))});
    return h;
  }

private:
  Vector mu_;
  Matrix sigma_;
  Matrix chol_;
  Scalar nu_;
};

/// Location-scale Student t law of a projected loss.
template <typename Scalar = double>
struct ProjectedT {
  Scalar loc;
  Scalar scale;
  Scalar nu;

  ProjectedT(Scalar loc_, Scalar scale_, Scalar nu_) : loc(loc_), scale(scale_), nu(nu_) {
    if (!std::isfinite(loc) || !(scale > 0) || !std::isfinite(scale)) throw ArgumentError("ProjectedT: invalid location or scale");
    if (!(nu > 0) || !std::isfinite(nu)) throw ArgumentError("ProjectedT: invalid degrees of freedom");
  }

  Scalar standardize(Scalar x) const { return (x - loc) / scale; }
};

/// n x p matrix of draws plus where it came from.
template <typename Scalar = double>
struct ReturnSample {
  Mat<Scalar> data;
  std::uint64_t seed = 0;
  std::uint64_t model_tag = 0;

  Eigen::Index size() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }

  /// Projected losses -R_i'w, one per row.
  template <typename Derived>
  Vec<Scalar> losses(const Eigen::MatrixBase<Derived>& w) const {
    if (w.size() != dim()) throw ArgumentError("ReturnSample: weight dimension does not match sample");
    return -(data * w);
  }
};

/// Draws n rows R = mu + L Z / sqrt(S / nu) with Z ~ N_p(0, I), S ~ chi^2_nu.
/// Per row, the p normals are drawn before the chi-square variate.
template <typename Scalar>
ReturnSample<Scalar> sample_mvt(const MvtModel<Scalar>& model, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("sample_mvt: sample size must be at least 1");
  const Eigen::Index p = model.dim();
  const auto& L = model.chol();
  const auto& mu = model.mu();
  const double nu = static_cast<double>(model.nu());
  Rng rng(seed);

  ReturnSample<Scalar> out;
  out.seed = seed;
  out.model_tag = model.tag();
  out.data.resize(n, p);
  Vec<Scalar> z(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) z(k) = static_cast<Scalar>(rng.normal());
    const Scalar mix = static_cast<Scalar>(std::sqrt(nu / rng.chi_square(nu)));
    for (Eigen::Index r = 0; r < p; ++r) {
      Scalar acc = 0;
      for (Eigen::Index k = 0; k <= r; ++k) acc += L(r, k) * z(k);
      out.data(i, r) = mu(r) + acc * mix;
    }
  }
  return out;
}

/// Exact law of L(w) = -w'R: t_nu(-w'mu, (w'Sigma w)^{1/2}).
template <typename Scalar, typename Derived>
ProjectedT<Scalar> project_loss(const MvtModel<Scalar>& model, const Eigen::MatrixBase<Derived>& w) {
  detail::require_nonzero_finite(w, "project_loss");
  if (w.size() != model.dim()) throw ArgumentError("project_loss: weight dimension does not match model");
  const Scalar quad = w.dot(model.sigma() * w);
  if (!(quad > 0)) throw DegenerateProjection("project_loss: projected scale is zero");
  return ProjectedT<Scalar>(-w.dot(model.mu()), std::sqrt(quad), model.nu());
}

template <typename Scalar>
Scalar t_pdf(const ProjectedT<Scalar>& dist, std::type_identity_t<Scalar> x) {
  if (!std::isfinite(x)) throw ArgumentError("t_pdf: non-finite argument");
  return special::student_pdf(dist.standardize(x), dist.nu) / dist.scale;
}

/// d/dx of t_pdf.
template <typename Scalar>
Scalar t_pdf_derivative(const ProjectedT<Scalar>& dist, std::type_identity_t<Scalar> x) {
  if (!std::isfinite(x)) throw ArgumentError("t_pdf_derivative: non-finite argument");
  return special::student_pdf_derivative(dist.standardize(x), dist.nu) / (dist.scale * dist.scale);
}

template <typename Scalar>
Scalar t_cdf(const ProjectedT<Scalar>& dist, std::type_identity_t<Scalar> x) {
  if (!std::isfinite(x)) throw ArgumentError("t_cdf: non-finite argument");
  return special::student_cdf(dist.standardize(x), dist.nu);
}

template <typename Scalar>
Scalar t_quantile(const ProjectedT<Scalar>& dist, std::type_identity_t<Scalar> alpha) {
  if (!(alpha > 0 && alpha < 1)) throw ArgumentError("t_quantile: level must lie in (0, 1)");
  return dist.loc + dist.scale * special::student_quantile(alpha, dist.nu);
}

/// q_alpha(w), the alpha-quantile of the projected loss.
template <typename Scalar, typename Derived>
Scalar population_quantile(const MvtModel<Scalar>& model, const Eigen::MatrixBase<Derived>& w, std::type_identity_t<Scalar> alpha) {
  return t_quantile(project_loss(model, w), alpha);
}

/// F(w, q) = P(-w'R <= q).
template <typename Scalar, typename Derived>
Scalar population_cdf(const MvtModel<Scalar>& model, const Eigen::MatrixBase<Derived>& w, std::type_identity_t<Scalar> q) {
  return t_cdf(project_loss(model, w), q);
}

/// Gradient of w -> q_alpha(w): -mu + T^{-1}(alpha) Sigma w / (w'Sigma w)^{1/2}.
template <typename Scalar, typename Derived>
Vec<Scalar> quantile_gradient(const MvtModel<Scalar>& model, const Eigen::MatrixBase<Derived>& w, std::type_identity_t<Scalar> alpha) {
  const auto proj = project_loss(model, w);
  const Scalar tq = special::student_quantile(alpha, model.nu());
  return -model.mu() + (tq / proj.scale) * (model.sigma() * w);
}

}  // namespace qqvar
