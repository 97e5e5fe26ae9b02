#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "fkh/gauss_legendre.hpp"
#include "fkh/sphere.hpp"
#include "fkh/tanh_sinh.hpp"
#include "fkh/threads.hpp"

namespace {

double apply_rule(const std::vector<double>& xs, const std::vector<double>& ws,
                  double (*f)(double)) {
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) acc += ws[i] * f(xs[i]);
    return acc;
}

}  // namespace

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2q-1 exactly") {
    for (int q : {2, 4, 8, 16}) {
        const auto& rule = fkh::gauss_legendre(q);
        REQUIRE(static_cast<int>(rule.nodes.size()) == q);
        for (int deg = 0; deg <= 2 * q - 1; ++deg) {
            double acc = 0.0;
            for (int i = 0; i < q; ++i) acc += rule.weights[i] * std::pow(rule.nodes[i], deg);
            double exact = (deg % 2 == 1) ? 0.0 : 2.0 / (deg + 1);
            CHECK(acc == Catch::Approx(exact).margin(1e-13));
        }
    }
}

TEST_CASE("panel appends integrate over shifted intervals") {
    std::vector<double> xs, ws;
    fkh::append_gl_panel(1.0, 3.0, 8, xs, ws);
    CHECK(apply_rule(xs, ws, [](double x) { return x * x; }) ==
          Catch::Approx(26.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("geometric radial rule handles singular power kernels over wide ranges") {
    std::vector<double> xs, ws;
    fkh::geometric_radial_rule(1e-4, 1e4, 48, 8, xs, ws);
    double got = apply_rule(xs, ws, [](double r) { return std::pow(r, -1.5); });
    double exact = 2.0 * (std::pow(1e-4, -0.5) - std::pow(1e4, -0.5));
    CHECK(got == Catch::Approx(exact).epsilon(1e-10));
    for (std::size_t i = 1; i < xs.size(); ++i) REQUIRE(xs[i] > xs[i - 1]);
}

TEST_CASE("tanh-sinh handles endpoint singularities and known integrals") {
    CHECK(fkh::tanh_sinh([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0) ==
          Catch::Approx(2.0).epsilon(1e-11));
    CHECK(fkh::tanh_sinh([](double x) { return std::sin(x); }, 0.0, std::numbers::pi) ==
          Catch::Approx(2.0).epsilon(1e-12));
    CHECK(fkh::tanh_sinh_to_infinity([](double x) { return std::exp(-x); }, 0.0) ==
          Catch::Approx(1.0).epsilon(1e-11));
    CHECK(fkh::tanh_sinh_to_infinity([](double x) { return std::exp(-x * x); }, 0.0) ==
          Catch::Approx(0.5 * std::sqrt(std::numbers::pi)).epsilon(1e-11));
}

TEST_CASE("unit sphere areas") {
    CHECK(fkh::surface_area(2) == Catch::Approx(2.0 * std::numbers::pi).epsilon(1e-14));
    CHECK(fkh::surface_area(3) == Catch::Approx(4.0 * std::numbers::pi).epsilon(1e-14));
    CHECK(fkh::surface_area(4) ==
          Catch::Approx(2.0 * std::numbers::pi * std::numbers::pi).epsilon(1e-14));
}

TEST_CASE("angular rules carry the full sphere measure on half node sets") {
    for (int n : {2, 3}) {
        fkh::AngularRule rule = fkh::angular_rule(n, 32, 99);
        CHECK_FALSE(rule.stochastic);
        double total = 0.0;
        for (double w : rule.weights) total += w;
        CHECK(total == Catch::Approx(fkh::surface_area(n)).epsilon(1e-12));
        for (const auto& d : rule.directions) CHECK(d.norm() == Catch::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("circle and sphere rules integrate even quadratics exactly") {
    // integral of w1^2 over S^1 is pi; over S^2 it is 4 pi / 3
    fkh::AngularRule c = fkh::circle_rule(16);
    double acc = 0.0;
    for (std::size_t i = 0; i < c.directions.size(); ++i) {
        acc += c.weights[i] * c.directions[i][0] * c.directions[i][0];
    }
    CHECK(acc == Catch::Approx(std::numbers::pi).epsilon(1e-12));

    fkh::AngularRule s3 = fkh::sphere3_rule(12, 24);
    acc = 0.0;
    for (std::size_t i = 0; i < s3.directions.size(); ++i) {
        acc += s3.weights[i] * s3.directions[i][2] * s3.directions[i][2];
    }
    CHECK(acc == Catch::Approx(4.0 * std::numbers::pi / 3.0).epsilon(1e-10));
}

TEST_CASE("graded sphere rule keeps total measure while refining the pole") {
    fkh::AngularRule g = fkh::sphere3_graded_rule(1e-3, 14, 6, 24);
    double total = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < g.directions.size(); ++i) {
        total += g.weights[i];
        acc += g.weights[i] * g.directions[i][2] * g.directions[i][2];
    }
    CHECK(total == Catch::Approx(4.0 * std::numbers::pi).epsilon(1e-9));
    CHECK(acc == Catch::Approx(4.0 * std::numbers::pi / 3.0).epsilon(1e-8));
    // nodes must crowd toward the polar axis t = 1
    double closest = 1.0;
    for (const auto& d : g.directions) closest = std::min(closest, 1.0 - std::abs(d[2]));
    CHECK(closest < 1e-3);
}

TEST_CASE("Monte Carlo sphere rule is seed-deterministic with correct mass") {
    fkh::AngularRule a = fkh::sphere_mc_rule(4, 2000, 7);
    fkh::AngularRule b = fkh::sphere_mc_rule(4, 2000, 7);
    fkh::AngularRule c = fkh::sphere_mc_rule(4, 2000, 8);
    REQUIRE(a.directions.size() == b.directions.size());
    CHECK(a.stochastic);
    for (std::size_t i = 0; i < a.directions.size(); ++i) {
        CHECK((a.directions[i] - b.directions[i]).norm() == 0.0);
    }
    bool differs = false;
    for (std::size_t i = 0; i < a.directions.size() && !differs; ++i) {
        differs = (a.directions[i] - c.directions[i]).norm() > 0.0;
    }
    CHECK(differs);
    double total = 0.0;
    for (double w : a.weights) total += w;
    CHECK(total == Catch::Approx(fkh::surface_area(4)).epsilon(1e-12));
}

TEST_CASE("parallel_for covers every index once for any worker count") {
    for (int workers : {1, 2, 5}) {
        std::vector<std::atomic<int>> hits(257);
        for (auto& h : hits) h = 0;
        fkh::parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; }, workers);
        for (auto& h : hits) REQUIRE(h == 1);
    }
}

TEST_CASE("parallel_for propagates the first worker exception") {
    CHECK_THROWS_AS(fkh::parallel_for(
                        100,
                        [](std::size_t i) {
                            if (i == 41) throw std::runtime_error("boom");
                        },
                        4),
                    std::runtime_error);
}

TEST_CASE("thread resolution prefers explicit requests") {
    CHECK(fkh::resolve_threads(3) == 3);
    CHECK(fkh::resolve_threads(0) >= 1);
}
