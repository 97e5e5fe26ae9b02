#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fkh/experiments.hpp"
#include "fkh/profiles.hpp"

using fkh::ExperimentReport;
using fkh::ExperimentStatus;
using fkh::InfOptions;
using fkh::QuadratureSpec;
using fkh::TestFunctionProfile;
using fkh::Vector;

namespace {

QuadratureSpec lean_quad() {
    QuadratureSpec quad;
    quad.n_angular = 8;
    quad.n_radial = 24;
    quad.gl_per_panel = 6;
    return quad;
}

double summary_value(const ExperimentReport& rep, const std::string& key) {
    for (const auto& [k, v] : rep.summary) {
        if (k == key) return v;
    }
    FAIL("missing summary key " + key);
    return 0.0;
}

}  // namespace

TEST_CASE("eigenvalue constraints hold on every admissible sample") {
    for (double eps : {0.01, 0.05, 0.2}) {
        ExperimentReport rep = fkh::eigenvalue_constraint_check(3, eps, 500, 42);
        INFO("eps = " << eps);
        CHECK(rep.passed());
        CHECK(summary_value(rep, "violations") == 0.0);
        CHECK(rep.rows.size() == 50);
    }
    ExperimentReport four = fkh::eigenvalue_constraint_check(4, 0.05, 200, 7);
    CHECK(four.passed());
    CHECK_THROWS_AS(fkh::eigenvalue_constraint_check(2, 0.05, 10, 1), std::invalid_argument);
}

TEST_CASE("eigenvalue constraint runs are reproducible") {
    ExperimentReport a = fkh::eigenvalue_constraint_check(3, 0.05, 100, 99);
    ExperimentReport b = fkh::eigenvalue_constraint_check(3, 0.05, 100, 99);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i] == b.rows[i]);
    }
}

TEST_CASE("blow-up slope tracks the order of the operator") {
    TestFunctionProfile cone = fkh::smoothed_cone(1.0);
    std::vector<double> eps_list{0.1, 0.0562, 0.0316, 0.0178, 0.01};
    ExperimentReport rep =
        fkh::blowup_experiment(cone, 3, 0.75, eps_list, lean_quad(), 0.0, 0.06);
    CHECK(rep.passed());
    CHECK(summary_value(rep, "monotone") == 1.0);
    CHECK(summary_value(rep, "slope") == Catch::Approx(-0.75).margin(0.06));
    REQUIRE(rep.rows.size() == eps_list.size());
    CHECK(rep.rows.front()[0] == Catch::Approx(0.1));
}

TEST_CASE("blow-up with a measured threshold logs a satisfied lower bound") {
    TestFunctionProfile cone = fkh::smoothed_cone(1.0);
    std::vector<double> eps_list{0.1, 0.03, 0.01};
    ExperimentReport rep =
        fkh::blowup_experiment(cone, 3, 0.75, eps_list, lean_quad(), 5.14, 0.06);
    CHECK(rep.passed());
    CHECK(summary_value(rep, "min_value_over_bound") > 1.0);
    CHECK(!rep.notes.empty());
}

TEST_CASE("blow-up on affine data is not applicable") {
    TestFunctionProfile aff = fkh::affine_profile((Vector(3) << 1, 0, 0).finished(), 0.0);
    ExperimentReport rep = fkh::blowup_experiment(aff, 3, 0.75, {0.1, 0.05}, lean_quad());
    CHECK(rep.status == ExperimentStatus::kNotApplicable);
    CHECK(!rep.notes.empty());
    CHECK(rep.rows.empty());
}

TEST_CASE("subspace integrals stay within the two-sided band") {
    TestFunctionProfile cone = fkh::smoothed_cone(1.0);
    ExperimentReport rep = fkh::subspace_bounds_check(cone, 3, 0.75, 0.0, 8, 5, lean_quad());
    CHECK(rep.passed());
    CHECK(summary_value(rep, "upper_bound_ok") == 1.0);
    CHECK(summary_value(rep, "nonneg_ok") == 1.0);
    CHECK(summary_value(rep, "min_scaled_value") >= 0.0);
    CHECK(summary_value(rep, "min_scaled_value") <= summary_value(rep, "mu1"));
    REQUIRE(rep.rows.size() == 8);
}

TEST_CASE("subspace lower gate: scaled form fails, unscaled form holds") {
    TestFunctionProfile cone = fkh::smoothed_cone(1.0);
    InfOptions opts;
    opts.n_starts = 4;
    opts.seed = 3;
    opts.nm.max_evals = 150;
    opts.quad = lean_quad();
    double F = fkh::F_ks(cone, Vector::Zero(3), 2, 0.75, opts).value;
    double eta0 = (1.0 - 0.75) * F;
    ExperimentReport rep = fkh::subspace_bounds_check(cone, 3, 0.75, eta0, 8, 5, lean_quad());
    CHECK(rep.status == ExperimentStatus::kFail);
    CHECK(summary_value(rep, "mu0_scaled_ok") == 0.0);
    CHECK(summary_value(rep, "mu0_unscaled_ok") == 1.0);
    CHECK(summary_value(rep, "min_unscaled_value") > summary_value(rep, "mu0"));
}

TEST_CASE("subspace runs are reproducible") {
    TestFunctionProfile cone = fkh::smoothed_cone(1.0);
    ExperimentReport a = fkh::subspace_bounds_check(cone, 3, 0.75, 0.0, 4, 11, lean_quad());
    ExperimentReport b = fkh::subspace_bounds_check(cone, 3, 0.75, 0.0, 4, 11, lean_quad());
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i] == b.rows[i]);
}

TEST_CASE("ellipticity check: the floor is inactive and degeneracy is excluded") {
    TestFunctionProfile cone = fkh::smoothed_cone(1.0);
    InfOptions opts;
    opts.n_starts = 4;
    opts.seed = 3;
    opts.nm.max_evals = 150;
    opts.quad = lean_quad();
    opts.quad.n_angular = 16;
    ExperimentReport rep = fkh::ellipticity_check(cone, Vector::Zero(2), 0.75, opts, 1e-2);
    CHECK(rep.passed());
    CHECK(summary_value(rep, "restricted_agrees") == 1.0);
    CHECK(summary_value(rep, "degenerate_excluded") == 1.0);
    CHECK(summary_value(rep, "eps0") > 0.0);
    CHECK(summary_value(rep, "eps0") < 0.5);
    REQUIRE(rep.rows.size() == 2);
    double base = summary_value(rep, "F_value");
    for (const auto& row : rep.rows) CHECK(row[1] > base);
}
