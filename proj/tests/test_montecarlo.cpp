#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qqvar/decomposition.hpp"
#include "qqvar/montecarlo.hpp"

using namespace qqvar;

namespace {
const Eigen::VectorXd kEqual = Eigen::VectorXd::Constant(5, 0.2);
}

TEST_SUITE("montecarlo") {
  TEST_CASE("perturb_weights") {
    for (std::uint64_t s = 0; s < 200; ++s) {
      const auto w = perturb_weights(kEqual, 1000, s);
      CHECK(std::abs(w.sum() - 1) <= 1e-12);
    }
    CHECK(perturb_weights(kEqual, 1000, 5) == perturb_weights(kEqual, 1000, 5));
    CHECK(perturb_weights(kEqual, 1000, 5) != perturb_weights(kEqual, 1000, 6));
    CHECK_THROWS_AS(perturb_weights(kEqual, 0, 1), ArgumentError);

    // Median distance scales as n^{-1/2}.
    std::vector<double> small, large;
    for (std::uint64_t s = 0; s < 10000; ++s) {
      small.push_back((perturb_weights(kEqual, 1000, s) - kEqual).norm());
      large.push_back((perturb_weights(kEqual, 100000, s + 1000000) - kEqual).norm());
    }
    CHECK(oracle::median(small) / oracle::median(large) == doctest::Approx(10).epsilon(0.15));

    // Degenerate sum triggers redraws, which are counted.
    const Eigen::VectorXd zero_sum = Eigen::VectorXd::Zero(5);
    const auto traced = perturb_weights_traced(zero_sum, 1, 3);
    CHECK(std::abs(traced.w.sum() - 1) <= 1e-12);
  }

  TEST_CASE("replication seeds are distinct across coordinates") {
    const CellKey c{10, 0.95, 1000};
    CHECK(replication_seed(1, c, 0) != replication_seed(1, c, 1));
    CHECK(replication_seed(1, c, 0) != replication_seed(2, c, 0));
    CHECK(replication_seed(1, c, 0) != replication_seed(1, CellKey{5, 0.95, 1000}, 0));
    CHECK(replication_seed(1, c, 0) != replication_seed(1, CellKey{10, 0.9, 1000}, 0));
    CHECK(replication_seed(1, c, 0) != replication_seed(1, CellKey{10, 0.95, 2000}, 0));
    CHECK(replication_seed(1, c, 7) == replication_seed(1, c, 7));
  }

  TEST_CASE("run_cell summaries") {
    SimConfig cfg;
    const auto s = run_cell(cfg, {10, 0.95, 1000}, 50, 3);
    CHECK(s.m == 50);
    CHECK(s.mcse_d1 >= 0);
    CHECK(s.mcse_d2 >= 0);
    CHECK(s.mcse_d3 >= 0);
    CHECK(s.rel_contribution_d3 >= 0);
    CHECK(s.rel_contribution_d3 <= 1);
    CHECK(s.rel_contribution_d3 == doctest::Approx(s.mean_abs_d3 / (s.mean_abs_d1 + s.mean_abs_d2 + s.mean_abs_d3)));
    CHECK_FALSE(s.boundary_flag);
    CHECK(run_cell(cfg, {2, 0.95, 1000}, 4, 3).boundary_flag);
    CHECK_THROWS_AS(run_cell(cfg, {10, 0.95, 1000}, 1, 3), ArgumentError);

    // Replay of one replication by hand.
    const CellKey key{10, 0.95, 500};
    const auto one = run_cell(cfg, key, 2, 9);
    const auto model = cfg.model(10);
    double d3 = 0;
    for (long j = 0; j < 2; ++j) {
      const auto seed = replication_seed(9, key, j);
      const auto w = perturb_weights(kEqual, 500, derive_seed(seed, {0}));
      d3 += std::abs(compute(model, sample_mvt(model, 500, derive_seed(seed, {1})), kEqual, w, 0.95).d3);
    }
    CHECK(one.mean_abs_d3 == d3 / 2);
  }

  TEST_CASE("run_cell does not depend on the worker count") {
    SimConfig cfg;
    const CellKey key{5, 0.99, 2000};
    const auto a = run_cell(cfg, key, 64, 11, 1);
    for (int threads : {2, 3, 8}) {
      const auto b = run_cell(cfg, key, 64, 11, threads);
      CHECK(a.mean_abs_d1 == b.mean_abs_d1);
      CHECK(a.mean_abs_d2 == b.mean_abs_d2);
      CHECK(a.mean_abs_d3 == b.mean_abs_d3);
      CHECK(a.mcse_d3 == b.mcse_d3);
    }
  }

  TEST_CASE("rate regression") {
    const std::vector<long> n{1000, 10000, 100000, 1000000};
    std::vector<double> y;
    for (long k : n) y.push_back(std::pow(static_cast<double>(k), -0.75));
    const auto fit = fit_loglog(n, y);
    CHECK(std::abs(fit.slope + 0.75) <= 1e-12);
    CHECK(std::abs(fit.r_squared - 1) <= 1e-12);
    CHECK(std::abs(fit.intercept) <= 1e-10);
    CHECK(fit.points.size() == 4);

    std::vector<McCellSummary> cells(3);
    for (int i = 0; i < 3; ++i) {
      cells[i].nu = 10;
      cells[i].alpha = 0.95;
      cells[i].n = n[static_cast<std::size_t>(i)];
      cells[i].mean_abs_d3 = 2 * y[static_cast<std::size_t>(i)];
    }
    const auto rf = rate_regression(cells);
    CHECK(rf.slope == doctest::Approx(-0.75).epsilon(1e-12));
    CHECK(rf.intercept == doctest::Approx(std::log(2.0)).epsilon(1e-10));
    cells.pop_back();
    CHECK_THROWS_AS(rate_regression(cells), ArgumentError);
  }

  TEST_CASE("empirical term decays at the root-n rate") {
    const auto m = MvtModel<double>::equicorrelated(5, 0.5, 10);
    std::vector<long> ns{1000, 10000, 100000};
    std::vector<double> mean_d2;
    for (long n : ns) {
      double acc = 0;
      const int reps = 300;
      for (int r = 0; r < reps; ++r)
        acc += std::abs(compute(m, sample_mvt(m, n, derive_seed(77, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r)})), kEqual, kEqual, 0.95).d2);
      mean_d2.push_back(acc / reps);
    }
    CHECK(fit_loglog(ns, mean_d2).slope == doctest::Approx(-0.5).epsilon(0.1));
  }

  TEST_CASE("reproduce_tables layout") {
    SimConfig cfg;
    cfg.m = 2;
    cfg.n_list = {200, 400};
    cfg.nu_list = {10, 2};
    const auto set = reproduce_tables(cfg);
    CHECK(set.table_n == 400);
    CHECK(set.table_alpha == 0.95);
    // 2 nu x 3 alpha at n = 400, plus 2 nu at n = 200.
    CHECK(set.cells.size() == 8);
    CHECK(set.find(2, 0.99, 400) != nullptr);
    CHECK(set.find(2, 0.99, 400)->boundary_flag);
    CHECK(set.find(10, 0.95, 200) != nullptr);
    CHECK(set.find(10, 0.9, 200) == nullptr);
  }

  TEST_CASE("SimConfig validation") {
    SimConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.m = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.rho = -0.3;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.alpha_list = {1.2};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.nu_list.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.w0 = Eigen::VectorXd::Constant(5, 0.3);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.rate_n = {1000, 10000};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}
