#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fkh/constants.hpp"
#include "fkh/degenerate.hpp"
#include "fkh/envelope.hpp"

using fkh::ConstantsReport;

TEST_CASE("closed-form spot values") {
    CHECK(fkh::c1_closed(0.75, 1.0, 1.0) == Catch::Approx(8.0 * std::sqrt(2.0)).epsilon(1e-14));
    CHECK(fkh::c1_closed(0.75, 1.0, 1.0) == Catch::Approx(11.31370849898476).epsilon(1e-14));
    CHECK(fkh::c2_closed(3, 0.75) == Catch::Approx(2.5132741228718346).epsilon(1e-14));
    CHECK(fkh::c2_closed(2, 0.6) == Catch::Approx(1.887181162535959).epsilon(1e-13));
    CHECK(fkh::c3_closed(3, 0.5) == Catch::Approx(1.5707963267948966).epsilon(1e-14));
    CHECK(fkh::c3_closed(3, 0.75) == Catch::Approx(1.4377682816827106).epsilon(1e-13));
    CHECK(fkh::mu1_closed(3, 0.75, 1.0, 1.0) == Catch::Approx(8.8857658763167325).epsilon(1e-13));
    CHECK(fkh::mu1_closed(2, 0.6, 1.0, 1.0) == Catch::Approx(8.7055056329612414).epsilon(1e-13));
}

TEST_CASE("independent quadrature route agrees with every closed form") {
    for (int n : {2, 3, 4}) {
        for (double s : {0.6, 0.75, 0.9}) {
            CHECK(fkh::c1_quadrature(s, 1.0, 1.0) ==
                  Catch::Approx(fkh::c1_closed(s, 1.0, 1.0)).epsilon(1e-8));
            CHECK(fkh::c2_quadrature(n, s) == Catch::Approx(fkh::c2_closed(n, s)).epsilon(1e-8));
            CHECK(fkh::c3_quadrature(n, s) == Catch::Approx(fkh::c3_closed(n, s)).epsilon(1e-8));
            CHECK(fkh::mu1_quadrature(n, s, 1.0, 1.0) ==
                  Catch::Approx(fkh::mu1_closed(n, s, 1.0, 1.0)).epsilon(1e-8));
        }
    }
}

TEST_CASE("planar threshold: mu1 collapses onto (1-s) C1") {
    for (double s : {0.55, 0.6, 0.75, 0.9}) {
        CHECK(fkh::mu1_closed(2, s, 1.0, 1.0) ==
              Catch::Approx((1.0 - s) * fkh::c1_closed(s, 1.0, 1.0)).epsilon(1e-13));
    }
}

TEST_CASE("mu1 scales linearly with the regularity constants") {
    double base = fkh::mu1_closed(3, 0.75, 1.0, 1.0);
    CHECK(fkh::mu1_closed(3, 0.75, 2.0, 2.0) == Catch::Approx(2.0 * base).epsilon(1e-13));
    CHECK(fkh::mu1_closed(3, 0.75, 0.5, 0.5) == Catch::Approx(0.5 * base).epsilon(1e-13));
}

namespace {

void check_chain(const ConstantsReport& r, double C1, double C2, double C3, double mu1,
                 double eps1, double g_eps1, double mu0, double C5, double C, double C4,
                 double eps0) {
    CHECK(r.C1.closed_form == Catch::Approx(C1).epsilon(1e-12));
    CHECK(r.C2.closed_form == Catch::Approx(C2).epsilon(1e-12));
    CHECK(r.C3.closed_form == Catch::Approx(C3).epsilon(1e-12));
    CHECK(r.mu1.closed_form == Catch::Approx(mu1).epsilon(1e-12));
    CHECK(r.eps1.closed_form == Catch::Approx(eps1).epsilon(1e-11));
    CHECK(r.g_eps1.closed_form == Catch::Approx(g_eps1).epsilon(1e-11));
    CHECK(r.mu0.closed_form == Catch::Approx(mu0).epsilon(1e-10));
    CHECK(r.C5.closed_form == Catch::Approx(C5).epsilon(1e-12));
    CHECK(r.C.closed_form == Catch::Approx(C).epsilon(1e-9));
    CHECK(r.C4.closed_form == Catch::Approx(C4).epsilon(1e-9));
    CHECK(r.eps0.closed_form == Catch::Approx(eps0).epsilon(1e-8));
    // dual route stays within quadrature accuracy along the whole chain
    CHECK(r.eps0.quadrature == Catch::Approx(r.eps0.closed_form).epsilon(1e-6));
}

}  // namespace

TEST_CASE("full constant chain, three parameter combinations") {
    check_chain(fkh::ellipticity_threshold(3, 0.75, 1.0, 1.0, 0.1), 11.31370849898476,
                2.5132741228718346, 1.4377682816827106, 8.8857658763167325,
                0.001347659575828641, 0.073420899701166398, 0.0027673918031265927,
                0.99984427950040286, 0.0083196691946848477, 0.0041598345973424238,
                1.7297423760644954e-8);
    check_chain(fkh::ellipticity_threshold(2, 0.6, 1.0, 1.0, 0.05), 21.763764082403103,
                1.887181162535959, 1.887181162535959, 8.7055056329612414,
                2.0132020235102358e-5, 0.0089737439756441365, 0.00011578034363860001,
                0.99999335016548607, 0.0020386684445880676, 0.0010193342222940338,
                1.0900440833329046e-13);
    check_chain(fkh::ellipticity_threshold(3, 0.9, 1.0, 2.0, 0.1), 25.0, 2.243994752564138,
                1.3723455340252824, 7.8539816339744831, 0.0052751071715151519,
                0.14525784504089689, 0.011307271117252323, 0.99928015676352363,
                0.017323039686628939, 0.0086615198433144693, 4.3551532263890071e-6);
}

TEST_CASE("chain identities hold exactly") {
    ConstantsReport r = fkh::ellipticity_threshold(3, 0.75, 1.0, 1.0, 0.1);
    // mu0 + mu1 (C5 - 1) telescopes to mu0 / 2
    double lhs = r.mu0.closed_form + r.mu1.closed_form * (r.C5.closed_form - 1.0);
    CHECK(lhs == Catch::Approx(0.5 * r.mu0.closed_form).epsilon(1e-9));
    CHECK(r.C5.closed_form > 0.0);
    CHECK(r.C5.closed_form < 1.0);
    CHECK(r.C4.closed_form == Catch::Approx(0.5 * r.C.closed_form).epsilon(1e-14));
    // the padded bound sits exactly sqrt(2) above the threshold
    CHECK(r.eps0.closed_form / r.slack_bound ==
          Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("threshold survives the approach to s = 1") {
    CHECK(fkh::ellipticity_threshold(3, 0.9, 1.0, 1.0, 0.1).eps0.closed_form ==
          Catch::Approx(2.7666631433790785e-5).epsilon(1e-9));
    CHECK(fkh::ellipticity_threshold(3, 0.99, 1.0, 1.0, 0.1).eps0.closed_form ==
          Catch::Approx(0.0089225628922270981).epsilon(1e-9));
    double near_one = fkh::ellipticity_threshold(3, 0.999, 1.0, 1.0, 0.1).eps0.closed_form;
    CHECK(near_one == Catch::Approx(0.43379184421295387).epsilon(1e-9));
    CHECK(near_one > 1e-5);
}

TEST_CASE("range guards name the offending constraint") {
    CHECK_THROWS_AS(fkh::c1_closed(0.4, 1.0, 1.0), fkh::SOutOfRange);
    CHECK_THROWS_AS(fkh::c1_closed(1.0, 1.0, 1.0), fkh::SOutOfRange);
    CHECK_THROWS_AS(fkh::c1_closed(0.75, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(fkh::c2_closed(3, 1.2), fkh::SOutOfRange);
    CHECK_THROWS_AS(fkh::mu1_closed(1, 0.75, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(fkh::ellipticity_threshold(3, 0.75, 1.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_WITH(fkh::c1_closed(0.4, 1.0, 1.0),
                      Catch::Matchers::ContainsSubstring("(1/2, 1)"));
}

TEST_CASE("degenerate family scalars at the reference point") {
    CHECK(fkh::h_eps(0.01, 3) == Catch::Approx(49.995).epsilon(1e-14));
    CHECK(fkh::g_eps(0.01, 3) == Catch::Approx(0.19999000074993751).epsilon(1e-14));
}

TEST_CASE("degenerate family domain endpoints") {
    CHECK(fkh::degenerate_eps_max(2) == Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(fkh::degenerate_eps_max(3) == Catch::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(fkh::degenerate_family(0.0, 3), fkh::EpsOutOfRange);
    CHECK_THROWS_AS(fkh::degenerate_family(0.51, 3), fkh::EpsOutOfRange);
    CHECK_NOTHROW(fkh::degenerate_family(0.49, 3));
}

TEST_CASE("family matrices propagate eps into the slope spectrum") {
    for (double eps : {0.01, 0.05, 0.2}) {
        fkh::DegenerateFamily fam = fkh::degenerate_family(eps, 3);
        CHECK(fkh::elementary_symmetric(fam.B_eps.eigenvalues(), 2) ==
              Catch::Approx(1.0).epsilon(1e-12));
        fkh::EnvelopeMatrix m = fkh::dfk(fam.B_eps, 2);
        CHECK(m.M.eigenvalues()[0] == Catch::Approx(eps).epsilon(1e-10));
        // inverse-root spectrum is (g, ..., g, 1/sqrt(eps)) up to ordering
        CHECK(m.sqrt_inv_eigs[0] == Catch::Approx(fam.g).epsilon(1e-10));
        CHECK(m.sqrt_inv_eigs[2] == Catch::Approx(1.0 / std::sqrt(eps)).epsilon(1e-10));
    }
    // g(eps) ~ 2 sqrt(eps) as eps -> 0
    CHECK(fkh::g_eps(1e-6, 3) / (2.0 * std::sqrt(1e-6)) == Catch::Approx(1.0).epsilon(1e-5));
}
