#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "fkh/profiles.hpp"
#include "fkh/solver.hpp"

using fkh::GridFunction;
using fkh::SolveOptions;
using fkh::SolveResult;
using fkh::TestFunctionProfile;
using fkh::Vector;

namespace {

SolveOptions lean_options() {
    SolveOptions opts;
    opts.quad.n_angular = 8;
    opts.radial_panels = 8;
    opts.gl_per_panel = 4;
    opts.residual_tol = 2e-3;
    opts.max_iters = 80;
    return opts;
}

}  // namespace

TEST_CASE("grids interpolate affine data exactly") {
    TestFunctionProfile aff = fkh::affine_profile((Vector(2) << 0.7, -0.3).finished(), 1.2);
    GridFunction g = fkh::make_grid(aff, 2, 4.0, 9);
    CHECK(g.h() == Catch::Approx(1.0));
    Vector x(2);
    x << 0.37, -2.21;
    CHECK(g.evaluate(x) == Catch::Approx(aff(x)).margin(1e-12));
    x << 4.0, 4.0;  // corner hits the last cell with unit weights
    CHECK(g.evaluate(x) == Catch::Approx(aff(x)).margin(1e-12));
    x << 11.0, 0.0;  // outside the box: fallback profile
    CHECK(g.evaluate(x) == Catch::Approx(aff(x)).margin(1e-12));
    CHECK_THROWS_AS(fkh::make_grid(aff, 2, 4.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(fkh::make_grid(aff, 2, 0.0, 9), std::invalid_argument);
}

TEST_CASE("interpolation error is second order at cell centers") {
    TestFunctionProfile quad = fkh::quadratic_profile();
    GridFunction g = fkh::make_grid(quad, 2, 2.0, 17);
    const double h = g.h();
    Vector x(2);
    x << 0.5 * h, -0.5 * h;  // cell center, the worst case
    double err = std::abs(g.evaluate(x) - quad(x));
    CHECK(err <= 0.5 * 2.0 * h * h + 1e-12);
    CHECK(err > 0.0);
}

TEST_CASE("grid-backed profiles inherit the declared constants") {
    TestFunctionProfile cone = fkh::smoothed_cone(1.0);
    GridFunction g = fkh::make_grid(cone, 2, 3.0, 13);
    TestFunctionProfile p = fkh::grid_backed(g);
    CHECK(p.L == cone.L);
    CHECK(p.SC == cone.SC);
    CHECK_FALSE(p.is_convex);
    Vector x(2);
    x << 0.4, 1.1;
    CHECK(p(x) == Catch::Approx(g.evaluate(x)));
}

TEST_CASE("modulus report recovers the quadratic's curvature exactly") {
    TestFunctionProfile quad = fkh::quadratic_profile();
    GridFunction g = fkh::make_grid(quad, 2, 2.0, 9);
    const double h = g.h();
    fkh::ModulusReport rep = fkh::modulus_report(g);
    CHECK(rep.semiconcavity_estimate == Catch::Approx(2.0).margin(1e-10));
    CHECK(rep.lipschitz_estimate == Catch::Approx(2.0 * 2.0 - h).margin(1e-10));
}

TEST_CASE("affine data is a fixed point of the sweep") {
    TestFunctionProfile aff = fkh::affine_profile((Vector(2) << 0.5, -0.1).finished(), 0.3);
    SolveOptions opts = lean_options();
    opts.residual_tol = 1e-6;
    SolveResult res = fkh::solve_global(aff, 2, 0.75, 2, 3.0, 11, opts);
    CHECK(res.converged);
    CHECK(res.sweeps == 1);
    REQUIRE(res.residual_history.size() == 1);
    CHECK(res.residual_history.front() < 1e-9);
    GridFunction ref = fkh::make_grid(aff, 2, 3.0, 11);
    for (std::size_t f = 0; f < ref.values.size(); ++f) {
        CHECK(res.u.values[f] == Catch::Approx(ref.values[f]).margin(1e-9));
    }
}

TEST_CASE("cone obstacle: the global solve converges and stays regular") {
    TestFunctionProfile cone = fkh::smoothed_cone(1.0);
    SolveOptions opts = lean_options();
    SolveResult res = fkh::solve_global(cone, 2, 0.75, 2, 6.0, 21, opts);
    CHECK(res.converged);
    CHECK(res.sweeps < opts.max_iters);
    REQUIRE(!res.residual_history.empty());
    CHECK(res.residual_history.back() <= opts.residual_tol);
    CHECK(res.residual_history.front() > res.residual_history.back());

    // the source term pushes the solution strictly above the obstacle inside
    GridFunction phi_grid = fkh::make_grid(cone, 2, 6.0, 21);
    std::vector<int> center{10, 10};
    CHECK(res.u.values[res.u.flat(center)] >
          phi_grid.values[phi_grid.flat(center)] + 0.5);

    fkh::ModulusReport rep = fkh::modulus_report(res.u);
    CHECK(rep.lipschitz_estimate <= cone.L * 1.15);
    CHECK(rep.semiconcavity_estimate <= cone.SC * 1.15);

    double fresh = fkh::residual(res.u, cone, 2, 0.75, opts);
    CHECK(fresh < 0.05);
}

TEST_CASE("solves are reproducible sweep for sweep") {
    TestFunctionProfile cone = fkh::smoothed_cone(1.0);
    SolveOptions opts = lean_options();
    opts.max_iters = 4;
    opts.residual_tol = 1e-9;
    opts.cascadic = false;
    SolveResult a = fkh::solve_global(cone, 2, 0.75, 2, 4.0, 13, opts);
    SolveResult b = fkh::solve_global(cone, 2, 0.75, 2, 4.0, 13, opts);
    REQUIRE(a.u.values.size() == b.u.values.size());
    for (std::size_t f = 0; f < a.u.values.size(); ++f) {
        CHECK(a.u.values[f] == b.u.values[f]);
    }
    CHECK(a.residual_history == b.residual_history);
}

TEST_CASE("solver input validation") {
    TestFunctionProfile cone = fkh::smoothed_cone(1.0);
    SolveOptions opts = lean_options();
    CHECK_THROWS_AS(fkh::solve_global(cone, 2, 0.5, 2, 4.0, 11, opts), fkh::SOutOfRange);
    CHECK_THROWS_AS(fkh::solve_global(cone, 3, 0.75, 2, 4.0, 11, opts), std::invalid_argument);
    CHECK_THROWS_AS(fkh::solve_global(cone, 2, 0.75, 3, 4.0, 25, opts), std::invalid_argument);
    CHECK_THROWS_AS(fkh::solve_global(cone, 2, 0.75, 4, 4.0, 11, opts), std::invalid_argument);
    SolveOptions bad = opts;
    bad.omega = 0.0;
    CHECK_THROWS_AS(fkh::solve_global(cone, 2, 0.75, 2, 4.0, 11, bad), std::invalid_argument);
}

TEST_CASE("saved grids round-trip their metadata and shape") {
    TestFunctionProfile cone = fkh::smoothed_cone(1.0);
    GridFunction g = fkh::make_grid(cone, 2, 2.0, 7);
    const std::string prefix = "solver_test_artifact";
    fkh::save_grid(prefix, g, 2, 0.75, 42);

    std::ifstream jf(prefix + ".json");
    REQUIRE(jf.good());
    std::stringstream jbuf;
    jbuf << jf.rdbuf();
    std::string header = jbuf.str();
    CHECK(header.find("\"m\": 7") != std::string::npos);
    CHECK(header.find("\"phi_name\": \"smoothed_cone\"") != std::string::npos);
    CHECK(header.find("\"value_count\": 49") != std::string::npos);

    std::ifstream cf(prefix + ".csv");
    REQUIRE(cf.good());
    int lines = 0;
    std::string line;
    while (std::getline(cf, line)) ++lines;
    CHECK(lines == 1 + 49);

    std::ifstream bf(prefix + ".bin", std::ios::binary | std::ios::ate);
    REQUIRE(bf.good());
    CHECK(static_cast<std::size_t>(bf.tellg()) == 49 * sizeof(double));

    for (const char* ext : {".json", ".csv", ".bin"}) {
        std::remove((prefix + ext).c_str());
    }
}
