#pragma once

// Special functions behind the Student-t and normal laws.

#include <cmath>
#include <limits>
#include <numbers>

#include "qqvar/errors.hpp"

namespace qqvar::special {

namespace detail {

// Continued fraction for I_x(a, b) (modified Lentz). Converges fast for x < (a + 1) / (a + b + 2).
template <typename Scalar>
Scalar ibeta_fraction(Scalar a, Scalar b, Scalar x) {
  const Scalar tiny = std::numeric_limits<Scalar>::min() / std::numeric_limits<Scalar>::epsilon();
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar qab = a + b;
  const Scalar qap = a + 1;
  const Scalar qam = a - 1;
  Scalar c = 1;
  Scalar d = 1 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1 / d;
  Scalar h = d;
  for (int m = 1; m <= 1000; ++m) {
    const Scalar m2 = 2 * m;
    Scalar aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    const Scalar del = d * c;
    h *= del;
    if (std::abs(del - 1) <= eps) return h;
  }
  throw NumericalError("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b). Takes y = 1 - x separately so callers that
/// know the complement exactly avoid cancellation near x = 1.
template <typename Scalar>
Scalar ibeta(Scalar a, Scalar b, Scalar x, Scalar y) {
  if (!(a > 0) || !(b > 0)) throw ArgumentError("ibeta: parameters must be positive");
  if (!(x >= 0) || !(y >= 0)) throw ArgumentError("ibeta: argument outside [0, 1]");
  if (x == 0) return 0;
  if (y == 0) return 1;
  const Scalar log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(y);
  const Scalar front = std::exp(log_front);
  if (x < (a + 1) / (a + b + 2)) return front * detail::ibeta_fraction(a, b, x) / a;
  return 1 - front * detail::ibeta_fraction(b, a, y) / b;
}

template <typename Scalar>
Scalar ibeta(Scalar a, Scalar b, Scalar x) {
  return ibeta(a, b, x, Scalar(1) - x);
}

/// Density of the standard Student t with nu degrees of freedom.
template <typename Scalar>
Scalar student_pdf(Scalar z, Scalar nu) {
  using std::numbers::pi_v;
  const Scalar log_norm = std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) - std::log(nu * pi_v<Scalar>) / 2;
  return std::exp(log_norm - (nu + 1) / 2 * std::log1p(z * z / nu));
}

/// d/dz of student_pdf.
template <typename Scalar>
Scalar student_pdf_derivative(Scalar z, Scalar nu) {
  return -student_pdf(z, nu) * (nu + 1) * z / (nu + z * z);
}

/// Distribution function of the standard Student t. Both tails are computed from the
/// small incomplete-beta value so neither loses relative accuracy.
template <typename Scalar>
Scalar student_cdf(Scalar z, Scalar nu) {
  if (z == 0) return Scalar(0.5);
  const Scalar z2 = z * z;
  // I_{nu/(nu+z^2)}(nu/2, 1/2) is the two-sided tail mass P(|T| > |z|).
  const Scalar tail = ibeta(nu / 2, Scalar(0.5), nu / (nu + z2), z2 / (nu + z2));
  return z > 0 ? 1 - tail / 2 : tail / 2;
}

/// Upper-tail probability P(T > z) of the standard Student t.
template <typename Scalar>
Scalar student_sf(Scalar z, Scalar nu) {
  return student_cdf(-z, nu);
}

/// Inverse of student_cdf by safeguarded Newton iteration with a bisection fallback.
template <typename Scalar>
Scalar student_quantile(Scalar p, Scalar nu) {
  if (!(p > 0 && p < 1)) throw ArgumentError("student_quantile: level must lie in (0, 1)");
  if (p == Scalar(0.5)) return 0;
  if (p < Scalar(0.5)) return -student_quantile(1 - p, nu);

  // Bracket the root on [0, hi].
  Scalar lo = 0;
  Scalar hi = 1;
  while (student_cdf(hi, nu) < p) {
    lo = hi;
    hi *= 2;
    if (!std::isfinite(hi)) throw NumericalError("student_quantile: failed to bracket root");
  }
  Scalar x = (lo + hi) / 2;
  constexpr int max_iter = 200;
  for (int it = 0; it < max_iter; ++it) {
    const Scalar r = student_cdf(x, nu) - p;
    if (r == 0) return x;
    if (r < 0)
      lo = x;
    else
      hi = x;
    const Scalar f = student_pdf(x, nu);
    Scalar next = x - r / f;
    if (!(next > lo && next < hi)) next = (lo + hi) / 2;
    if (std::abs(next - x) <= 2 * std::numeric_limits<Scalar>::epsilon() * std::abs(x)) return next;
    x = next;
    if (hi - lo <= 2 * std::numeric_limits<Scalar>::epsilon() * hi) return x;
  }
  if (std::abs(student_cdf(x, nu) - p) <= Scalar(1e-12)) return x;
  throw NumericalError("student_quantile: no convergence in 200 iterations");
}

template <typename Scalar>
Scalar normal_pdf(Scalar z) {
  using std::numbers::inv_sqrtpi_v;
  using std::numbers::sqrt2_v;
  return inv_sqrtpi_v<Scalar> / sqrt2_v<Scalar> * std::exp(-z * z / 2);
}

template <typename Scalar>
Scalar normal_cdf(Scalar z) {
  return std::erfc(-z / std::numbers::sqrt2_v<Scalar>) / 2;
}

/// Standard normal quantile, Wichura's AS 241 (PPND16), relative accuracy about 1e-16.
template <typename Scalar>
Scalar normal_quantile(Scalar p) {
  if (!(p > 0 && p < 1)) throw ArgumentError("normal_quantile: level must lie in (0, 1)");
  const Scalar q = p - Scalar(0.5);
  if (std::abs(q) <= Scalar(0.425)) {
    const Scalar r = Scalar(0.180625) - q * q;
    return q *
           (((((((Scalar(2509.0809287301226727) * r + Scalar(33430.575583588128105)) * r +
                 Scalar(67265.770927008700853)) * r + Scalar(45921.953931549871457)) * r +
               Scalar(13731.693765509461125)) * r + Scalar(1971.5909503065514427)) * r +
             Scalar(133.14166789178437745)) * r + Scalar(3.387132872796366608)) /
           (((((((Scalar(5226.495278852545925) * r + Scalar(28729.085735721942674)) * r +
                 Scalar(39307.89580009271061)) * r + Scalar(21213.794301586595867)) * r +
               Scalar(5394.1960214247511077)) * r + Scalar(687.1870074920579083)) * r +
             Scalar(42.313330701600911252)) * r + 1);
  }
  Scalar r = q < 0 ? p : 1 - p;
  r = std::sqrt(-std::log(r));
  Scalar val;
  if (r <= 5) {
    r -= Scalar(1.6);
    val = (((((((Scalar(7.7454501427834140764e-4) * r + Scalar(0.0227238449892691845833)) * r +
                Scalar(0.24178072517745061177)) * r + Scalar(1.27045825245236838258)) * r +
              Scalar(3.64784832476320460504)) * r + Scalar(5.7694972214606914055)) * r +
            Scalar(4.6303378461565452959)) * r + Scalar(1.42343711074968357734)) /
          (((((((Scalar(1.05075007164441684324e-9) * r + Scalar(5.475938084995344946e-4)) * r +
                Scalar(0.0151986665636164571966)) * r + Scalar(0.14810397642748007459)) * r +
              Scalar(0.68976733498510000455)) * r + Scalar(1.6763848301838038494)) * r +
            Scalar(2.05319162663775882187)) * r + 1);
  } else {
    r -= 5;
    val = (((((((Scalar(2.01033439929228813265e-7) * r + Scalar(2.71155556874348757815e-5)) * r +
                Scalar(0.0012426609473880784386)) * r + Scalar(0.026532189526576123093)) * r +
              Scalar(0.29656057182850489123)) * r + Scalar(1.7848265399172913358)) * r +
            Scalar(5.4637849111641143699)) * r + Scalar(6.6579046435011037772)) /
          (((((((Scalar(2.04426310338993978564e-15) * r + Scalar(1.4215117583164458887e-7)) * r +
                Scalar(1.8463183175100546818e-5)) * r + Scalar(7.868691311456132591e-4)) * r +
              Scalar(0.0148753612908506148525)) * r + Scalar(0.13692988092273580531)) * r +
            Scalar(0.59983220655588793769)) * r + 1);
  }
  return q < 0 ? -val : val;
}

}  // namespace qqvar::special
