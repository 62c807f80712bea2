#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qqvar/empirical.hpp"

using namespace qqvar;

namespace {

// One-column sample whose projected losses along w = (1) are exactly `losses`.
ReturnSample<double> losses_sample(const std::vector<double>& losses) {
  ReturnSample<double> s;
  s.data.resize(static_cast<Eigen::Index>(losses.size()), 1);
  for (std::size_t i = 0; i < losses.size(); ++i) s.data(static_cast<Eigen::Index>(i), 0) = -losses[i];
  return s;
}

const Eigen::VectorXd kUnit1 = Eigen::VectorXd::Ones(1);

}  // namespace

TEST_SUITE("empirical") {
  TEST_CASE("empirical_cdf on hand-built losses") {
    const auto s = losses_sample({-1, 0, 1, 2});
    CHECK(empirical_cdf(s, kUnit1, 0.5) == 0.5);
    CHECK(empirical_cdf(s, kUnit1, 2.0) == 1.0);
    CHECK(empirical_cdf(s, kUnit1, 1e9) == 1.0);
    CHECK(empirical_cdf(s, kUnit1, -1.0001) == 0.0);
    // Right continuity: the jump belongs to the left endpoint.
    CHECK(empirical_cdf(s, kUnit1, 0.0) == 0.5);
    CHECK(empirical_cdf(s, kUnit1, std::nextafter(0.0, -1.0)) == 0.25);
    CHECK_THROWS_AS(empirical_cdf(ReturnSample<double>{}, kUnit1, 0.0), ArgumentError);
    CHECK_THROWS_AS(empirical_cdf(s, Eigen::VectorXd::Zero(1), 0.0), ArgumentError);
  }

  TEST_CASE("empirical_cdf is monotone in t") {
    const auto m = MvtModel<double>::equicorrelated(5, 0.5, 5);
    const auto s = sample_mvt(m, 2000, 3);
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(5, 0.2);
    const ProjectedLosses<double> pl(s, w);
    double prev = 0;
    for (double t = -5; t <= 5; t += 0.01) {
      const double f = empirical_cdf(s, w, t);
      CHECK(f >= prev);
      CHECK(f == pl.cdf(t));
      prev = f;
    }
  }

  TEST_CASE("empirical_quantile is the ceil(n alpha) order statistic") {
    const auto s = losses_sample({5, 3, 1, 4, 2});
    CHECK(empirical_quantile(s, kUnit1, 0.5) == 3.0);
    CHECK(empirical_quantile(s, kUnit1, 0.2) == 1.0);
    CHECK(empirical_quantile(s, kUnit1, std::nextafter(0.2, 1.0)) == 2.0);
    CHECK(empirical_quantile(s, kUnit1, 0.8) == 4.0);
    CHECK(empirical_quantile(s, kUnit1, 0.81) == 5.0);
    CHECK(empirical_quantile(s, kUnit1, 0.999) == 5.0);
    CHECK_THROWS_AS(empirical_quantile(s, kUnit1, 0.0), ArgumentError);
    CHECK_THROWS_AS(empirical_quantile(s, kUnit1, 1.0), ArgumentError);

    // Boundary levels k/n where n alpha rounds badly in floating point.
    for (std::size_t n : {3u, 7u, 10u, 100u, 1000u, 10000u}) {
      for (std::size_t k = 1; k < n; k += std::max<std::size_t>(1, n / 17)) {
        const double alpha = static_cast<double>(k) / static_cast<double>(n);
        const auto idx = ProjectedLosses<double>::order_index(alpha, n);
        CHECK(static_cast<double>(idx + 1) / static_cast<double>(n) >= alpha);
        CHECK(static_cast<double>(idx) / static_cast<double>(n) < alpha);
      }
    }
  }

  TEST_CASE("empirical_quantile is the exact generalized inverse") {
    const auto m = MvtModel<double>::equicorrelated(5, 0.5, 3);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto s = sample_mvt(m, 101 + static_cast<long>(seed) * 37, seed);
      Rng rng(seed);
      Eigen::VectorXd w(5);
      for (int k = 0; k < 5; ++k) w(k) = rng.normal();
      for (double alpha : {0.01, 0.3, 0.5, 0.9, 0.95, 0.99}) {
        const double q = empirical_quantile(s, w, alpha);
        CHECK(empirical_cdf(s, w, q) >= alpha);
        CHECK(empirical_cdf(s, w, std::nextafter(q, -INFINITY)) < alpha);
        CHECK(ProjectedLosses<double>(s, w).quantile(alpha) == q);
      }
    }
  }

  TEST_CASE("empirical quantile concentrates around the t5 quantile") {
    const MvtModel<double> m(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 5.0);
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const auto s = sample_mvt(m, 100000, 500 + seed);
      hits += std::abs(empirical_quantile(s, kUnit1, 0.95) - 2.015048) < 0.05;
    }
    CHECK(hits >= 38);
  }

  TEST_CASE("partition counts and symmetric-difference identities") {
    const auto m = MvtModel<double>::equicorrelated(4, 0.3, 6);
    const auto s = sample_mvt(m, 3000, 11);
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd wa(4), wb(4);
      for (int k = 0; k < 4; ++k) wa(k) = rng.normal(), wb(k) = rng.normal();
      const HalfSpace<double> a(wa, rng.normal());
      const HalfSpace<double> b(wb, rng.normal());
      const auto c = partition_counts(s, a, b);
      CHECK(c.total() == s.size());
      CHECK(c.n11 >= 0);
      CHECK(c.n10 >= 0);
      CHECK(c.n01 >= 0);
      CHECK(c.n00 >= 0);
      const double p = sym_diff_proportion(s, a, b);
      CHECK(p == static_cast<double>(c.disagreements()) / static_cast<double>(c.total()));
      CHECK(p == oracle::brute_sym_diff(s, a, b));
    }

    const HalfSpace<double> a(Eigen::VectorXd::Constant(4, 0.25), 0.3);
    CHECK(sym_diff_proportion(s, a, a) == 0.0);
    const auto same = partition_counts(s, a, a);
    CHECK(same.n10 == 0);
    CHECK(same.n01 == 0);

    // Empty A and full B: everything falls in S01.
    const HalfSpace<double> empty(a.w, -1e300);
    const HalfSpace<double> full(a.w, 1e300);
    const auto c = partition_counts(s, empty, full);
    CHECK(c.n11 == 0);
    CHECK(c.n00 == 0);
    CHECK(c.n01 == s.size());
  }

  TEST_CASE("nested parallel half-spaces") {
    const auto m = MvtModel<double>::equicorrelated(5, 0.5, 10);
    const auto s = sample_mvt(m, 5000, 12);
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(5, 0.2);
    for (double t : {-1.0, -0.2, 0.3}) {
      for (double q : {0.4, 1.1, 2.5}) {
        const double p = sym_diff_proportion(s, HalfSpace<double>(w, t), HalfSpace<double>(w, q));
        CHECK(p == doctest::Approx(empirical_cdf(s, w, q) - empirical_cdf(s, w, t)).epsilon(1e-15));
      }
    }
  }

  TEST_CASE("sup_discrepancy") {
    const auto m = MvtModel<double>::equicorrelated(5, 0.5, 10);
    const Eigen::VectorXd w0 = Eigen::VectorXd::Constant(5, 0.2);
    const auto s = sample_mvt(m, 1000, 5);
    const std::vector<GridPoint<double>> one{{w0, 0.7}};
    CHECK(sup_discrepancy(s, m, one) == doctest::Approx(std::abs(empirical_cdf(s, w0, 0.7) - t_cdf(project_loss(m, w0), 0.7))));
    CHECK_THROWS_AS(sup_discrepancy(s, m, std::vector<GridPoint<double>>{}), ArgumentError);

    const auto grid = default_grid(m, w0, 0.95);
    CHECK(grid.size() == 441);

    std::vector<double> small, large;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      small.push_back(sup_discrepancy(sample_mvt(m, 1000, 100 + seed), m, grid));
      large.push_back(sup_discrepancy(sample_mvt(m, 100000, 200 + seed), m, grid));
    }
    CHECK(oracle::median(large) < oracle::median(small));

    // 200-point grid, n = 1e4.
    const auto grid200 = default_grid(m, w0, 0.95, 10, 20);
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) ok += sup_discrepancy(sample_mvt(m, 10000, 300 + seed), m, grid200) < 0.03;
    CHECK(ok >= 38);
  }
}
