#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qqvar/bounds.hpp"

using namespace qqvar;

namespace {

MvtModel<double> reference_model(double nu) { return MvtModel<double>::equicorrelated(5, 0.5, nu); }
const Eigen::VectorXd kEqual = Eigen::VectorXd::Constant(5, 0.2);

}  // namespace

TEST_SUITE("bounds") {
  TEST_CASE("generic_slab_bound") {
    Eigen::VectorXd w(5);
    w << 0.3, 0.1, 0.2, 0.25, 0.15;
    CHECK(generic_slab_bound<double>(w, w, 1.0, 1.0, 2.0, 3.0) == 0.0);
    const Eigen::VectorXd d = Eigen::VectorXd::Unit(5, 1) * 0.01;
    const double base = generic_slab_bound<double>(w, Eigen::VectorXd(w + d), 1.0, 1.02, 2.0, 3.0);
    CHECK(generic_slab_bound<double>(w, Eigen::VectorXd(w + 2 * d), 1.0, 1.02, 2.0, 3.0) > base);
    CHECK(generic_slab_bound<double>(w, Eigen::VectorXd(w + d), 1.0, 1.05, 2.0, 3.0) > base);
    CHECK(generic_slab_bound<double>(w, Eigen::VectorXd(w + 4 * d), 1.0, 1.08, 2.0, 3.0) == doctest::Approx(2 * base).epsilon(1e-14));
    CHECK_THROWS_AS(generic_slab_bound<double>(w, w, 0.0, 0.0, 2.0, -1.0), ArgumentError);
    CHECK_THROWS_AS(generic_slab_bound<double>(w, w, 0.0, 0.0, -2.0, 1.0), ArgumentError);
  }

  TEST_CASE("t_population_bound") {
    const auto m = reference_model(10);
    const double q0 = population_quantile(m, kEqual, 0.95);
    CHECK(t_population_bound(m, kEqual, kEqual, q0, q0, 2.0) == 0.0);
    Eigen::VectorXd d(5);
    d << 0.01, -0.02, 0.0, 0.005, 0.01;
    const double sig = std::sqrt(d.dot(m.sigma() * d));
    CHECK(t_population_bound(m, kEqual, Eigen::VectorXd(kEqual + d), q0 + 0.03, q0, 2.0) == doctest::Approx(2.0 * (0.03 + sig)).epsilon(1e-14));
    // Degree-one homogeneity in the joint perturbation.
    for (double c : {0.5, 2.0, 7.0}) {
      CHECK(t_population_bound(m, kEqual, Eigen::VectorXd(kEqual + c * d), q0 - c * 0.03, q0, 1.0) ==
            doctest::Approx(c * t_population_bound(m, kEqual, Eigen::VectorXd(kEqual + d), q0 - 0.03, q0, 1.0)).epsilon(1e-13));
    }
    Eigen::VectorXd mu(5);
    mu << 0.1, 0.0, -0.1, 0.2, 0.0;
    const MvtModel<double> located(mu, m.sigma(), 10.0);
    CHECK(t_population_bound(located, kEqual, Eigen::VectorXd(kEqual + d), q0, q0, 1.0) == doctest::Approx(std::abs(d.dot(mu)) + sig));
    CHECK_THROWS_AS(t_population_bound(m, kEqual, kEqual, q0, q0, 0.0), ArgumentError);
  }

  TEST_CASE("exact_sym_diff_parallel") {
    const ProjectedT<double> t5(0, 1, 5);
    CHECK(exact_sym_diff_parallel(t5, 0.7, 0.7) == 0.0);
    CHECK(exact_sym_diff_parallel(t5, t_quantile(t5, 0.95), 0.0) == doctest::Approx(0.45).epsilon(1e-12));

    const auto m = reference_model(5);
    const auto law = project_loss(m, kEqual);
    const auto s = sample_mvt(m, 100000, 4);
    for (double t : {-0.5, 0.8, 1.6}) {
      const double exact = exact_sym_diff_parallel(law, t, 0.2);
      const double emp = sym_diff_proportion(s, HalfSpace<double>(kEqual, t), HalfSpace<double>(kEqual, 0.2));
      CHECK(std::abs(emp - exact) <= 3 * std::sqrt(exact * (1 - exact) / 1e5));
    }
  }

  TEST_CASE("exact_sym_diff agrees with the parallel formula and with simulation") {
    const auto m = reference_model(10);
    const double q0 = population_quantile(m, kEqual, 0.95);
    const HalfSpace<double> a(kEqual, q0);
    CHECK(exact_sym_diff(m, a, HalfSpace<double>(kEqual, q0 + 0.1)) ==
          doctest::Approx(exact_sym_diff_parallel(project_loss(m, kEqual), q0 + 0.1, q0)).epsilon(1e-12));

    Rng rng(8);
    for (int trial = 0; trial < 8; ++trial) {
      Eigen::VectorXd w(5);
      for (int k = 0; k < 5; ++k) w(k) = kEqual(k) + 0.2 * rng.normal();
      const HalfSpace<double> b(w, q0 + 0.3 * rng.normal());
      const double exact = exact_sym_diff(m, a, b);
      const auto mc = mc_sym_diff(m, a, b, 400000, 1000 + static_cast<std::uint64_t>(trial));
      CHECK(std::abs(mc.estimate - exact) <= 4 * mc.mcse + 1e-12);
      CHECK(mc.slab_violations == 0);
    }
  }

  TEST_CASE("exact_sym_diff over arbitrary direction pairs") {
    const auto m = reference_model(4);
    Rng rng(81);
    for (int trial = 0; trial < 12; ++trial) {
      Eigen::VectorXd wa(5), wb(5);
      for (int k = 0; k < 5; ++k) wa(k) = rng.normal(), wb(k) = rng.normal();
      if (trial == 0) wb = -wa + 0.01 * wb;  // nearly opposite
      if (trial == 1) wb = wa + 0.001 * wb;  // nearly parallel
      const HalfSpace<double> a(wa, rng.normal()), b(wb, rng.normal());
      const double exact = exact_sym_diff(m, a, b);
      CHECK(exact == doctest::Approx(exact_sym_diff(m, b, a)).epsilon(1e-9));
      const auto mc = mc_sym_diff(m, a, b, 400000, 2000 + static_cast<std::uint64_t>(trial));
      CHECK(std::abs(mc.estimate - exact) <= 4 * mc.mcse + 1e-9);
    }
  }

  TEST_CASE("mc_sym_diff") {
    const auto m = reference_model(10);
    const HalfSpace<double> a(kEqual, 1.2);
    const auto same = mc_sym_diff(m, a, a, 10000, 3);
    CHECK(same.estimate == 0.0);
    CHECK(same.mcse == 0.0);

    const auto law = project_loss(m, kEqual);
    for (double t : {0.9, 1.0, 1.5}) {
      const auto mc = mc_sym_diff(m, a, HalfSpace<double>(kEqual, t), 200000, 4);
      CHECK(std::abs(mc.estimate - exact_sym_diff_parallel(law, t, 1.2)) <= 3 * mc.mcse);
    }

    // Linear growth along a ray w0 + eps h with t = q0.
    const double q0 = population_quantile(m, kEqual, 0.95);
    Eigen::VectorXd h(5);
    h << 0.6, -0.3, 0.1, -0.5, 0.2;
    h.normalize();
    std::vector<double> le, lp;
    for (double eps : {1e-3, 3e-3, 1e-2, 3e-2, 1e-1}) {
      const auto mc = mc_sym_diff(m, HalfSpace<double>(kEqual, q0), HalfSpace<double>(Eigen::VectorXd(kEqual + eps * h), q0), 2000000, 77);
      CHECK(mc.slab_violations == 0);
      le.push_back(std::log(eps));
      lp.push_back(std::log(mc.estimate));
    }
    CHECK(oracle::ols_slope(le, lp) == doctest::Approx(1.0).epsilon(0.1));
  }

  TEST_CASE("mean_return_norm") {
    const MvtModel<double> iso(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 5.0);
    // E|T_5| = 2 sqrt(5) / ((5 - 1) B(1/2, 5/2)) = 0.949...
    const double expect = 2 * std::sqrt(5.0) * std::tgamma(3.0) / (4 * std::tgamma(0.5) * std::tgamma(2.5));
    CHECK(mean_return_norm(sample_mvt(iso, 400000, 6)) == doctest::Approx(expect).epsilon(0.01));
  }

  TEST_CASE("perturbation_grid") {
    const auto grid = perturbation_grid<double>(kEqual, 1.3, 100, 0.05, 9);
    CHECK(grid.size() == 100);
    CHECK(grid[0].w == kEqual);
    CHECK(grid[0].t == 1.3);
    for (const auto& g : grid) {
      CHECK((g.w - kEqual).norm() <= 0.05 + 1e-15);
      CHECK(std::abs(g.t - 1.3) <= 0.05 + 1e-15);
    }
    CHECK_THROWS_AS(perturbation_grid<double>(kEqual, 1.3, 0, 0.05, 9), ArgumentError);
  }

  TEST_CASE("verify_bound reporting") {
    const auto m = reference_model(10);
    const double q0 = population_quantile(m, kEqual, 0.95);
    const auto grid = perturbation_grid<double>(kEqual, q0, 20, 0.05, 10);
    const double enr = mean_return_norm(sample_mvt(m, 100000, 11));

    const auto tiny = verify_bound(m, kEqual, q0, grid, 1e-6, BoundKind::t_model, 20000, 12, enr);
    CHECK(tiny.front().slack == 0.0);
    CHECK(tiny.front().bound_value == 0.0);
    CHECK(tiny.front().observed == 0.0);
    int violations = 0;
    for (const auto& r : tiny) violations += r.violation;
    CHECK(violations > 10);

    for (BoundKind kind : {BoundKind::t_model, BoundKind::generic}) {
      const auto calib = perturbation_grid<double>(kEqual, q0, 100, 0.05, 13);
      const double c = fit_constant(kind, m, kEqual, q0, calib, enr, 1.5);
      CHECK(c > 0);
      const auto reports = verify_bound(m, kEqual, q0, grid, c, kind, 50000, 14, enr, true);
      for (const auto& r : reports) {
        CHECK(r.observed >= 0);
        CHECK(r.observed <= 1);
        CHECK(r.constant_used == c);
        CHECK(r.slab_violations == 0);
        CHECK(std::abs(r.slack - (r.bound_value - r.observed)) == 0.0);
        CHECK(std::abs(r.observed - r.exact) <= 4 * r.mcse + 1e-12);
      }
    }
  }

  TEST_CASE("first-order bound is tighter than the half-order bound for small perturbations") {
    const auto m = reference_model(10);
    const double q0 = population_quantile(m, kEqual, 0.95);
    const double enr = mean_return_norm(sample_mvt(m, 100000, 15));
    const auto calib = perturbation_grid<double>(kEqual, q0, 100, 0.01, 16);
    const double c_t = fit_constant(BoundKind::t_model, m, kEqual, q0, calib, enr, 1.0);
    const double c_g = fit_constant(BoundKind::generic, m, kEqual, q0, calib, enr, 1.0);
    const auto held_out = perturbation_grid<double>(kEqual, q0, 100, 0.01, 17);
    double err_t = 0, err_g = 0;
    for (std::size_t i = 1; i < held_out.size(); ++i) {
      const double exact = exact_sym_diff(m, HalfSpace<double>(kEqual, q0), HalfSpace<double>(held_out[i].w, held_out[i].t));
      err_t += std::abs(c_t * bound_shape(BoundKind::t_model, m, kEqual, held_out[i], q0, enr) - exact);
      err_g += std::abs(c_g * bound_shape(BoundKind::generic, m, kEqual, held_out[i], q0, enr) - exact);
    }
    CHECK(err_t < err_g);
  }
}
