#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "wavectl/characteristics.hpp"

using namespace wavectl;

namespace
{
    CoeffFields fields_of(const std::string& a, const std::string& b, double T)
    {
        return make_fields(Expr::parse(a), Expr::parse(b), T);
    }
}

TEST_CASE("phi vanishes for t <= s")
{
    CoeffFields f = fields_of("1 + t*x", "sin(t - x)", 6.0);
    CHECK(phi(f, 1.0, 1.0).value == 0.0);
    CHECK(phi(f, 0.5, 2.0).value == 0.0);
    CHECK(phi(f, -1.0, 0.0).value == 0.0);
}

TEST_CASE("autonomous coefficients: full round trips integrate a over (0,1)")
{
    // a(x) = 1 + x^2 integrates to 4/3 regardless of t >= 2 and of b
    CoeffFields f = fields_of("1 + x^2", "sin(pi*x)", 8.0);
    for (double t : {2.0, 2.5, 3.0, 4.75, 8.0})
    {
        auto r = phi(f, t, 0.0, 1e-11);
        CHECK(r.value == Catch::Approx(4.0 / 3.0).margin(1e-9));
        CHECK(r.err <= 1e-10);
    }
}

TEST_CASE("constant fields: each unit leg contributes the constant")
{
    // a = 2c, b = 0 makes eta1 = eta2 = c
    const double c = 0.7;
    CoeffFields f = fields_of("1.4", "0", 6.0);
    auto r = phi(f, 4.0, 0.0, 1e-12);
    CHECK(r.value == Catch::Approx(2.0 * c).margin(1e-11));

    // brute-force midpoint oracle over the two legs
    const double leg1 = oracles::midpoint([&](double tau) { return f.eta1(tau, tau - 2.0); },
                                          2.0, 3.0);
    const double leg2 = oracles::midpoint([&](double tau) { return f.eta2(tau, 4.0 - tau); },
                                          3.0, 4.0);
    CHECK(r.value == Catch::Approx(leg1 + leg2).margin(1e-7));
}

TEST_CASE("space-only first-order coupling is invisible after full trips")
{
    CoeffFields f = fields_of("0", "cos(2*pi*x)", 8.0);
    for (double t : {2.0, 3.0, 5.5, 8.0})
        CHECK(std::fabs(phi(f, t, 0.0, 1e-11).value) <= 2e-11);
    // partial trips do see it
    CHECK(std::fabs(phi(f, 0.25, 0.0, 1e-11).value) > 1e-3);
}

TEST_CASE("autonomous phi is t-independent beyond one round trip")
{
    CoeffFields f = fields_of("exp(x) - x^2", "1 + cos(pi*x)", 9.0);
    const double tol = 1e-11;
    const double ref = phi(f, 2.0, 0.0, tol).value;
    for (double t : linspace(2.0, 8.0, 25))
        CHECK(phi(f, t, 0.0, tol).value == Catch::Approx(ref).margin(2.0 * tol + 1e-12));
}

TEST_CASE("phi_sum basics")
{
    CoeffFields f = fields_of("1", "0", 8.0);
    // single-term sum
    CHECK(phi_sum(f, 0, 3.3, 0.0).value == Catch::Approx(phi(f, 3.3, 0.0).value).margin(1e-12));
    // everything vanishes at or before the start time
    CHECK(phi_sum(f, 3, 1.0, 1.5).value == 0.0);
    // a = 1: each full trip contributes 1, f_1(5) = phi(5) + phi(3) = 2
    CHECK(phi_sum(f, 1, 5.0, 0.0).value == Catch::Approx(2.0).margin(1e-10));
}

TEST_CASE("successive-trip identity f_k(2(k+1)-x) - f_{k-1}(2k-x) = phi(2(k+1)-x)")
{
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 3; ++trial)
    {
        char abuf[128], bbuf[128];
        std::snprintf(abuf, sizeof abuf, "%.6f + %.6f*sin(t + x) + %.6f*x^2", u(rng), u(rng),
                      u(rng));
        std::snprintf(bbuf, sizeof bbuf, "%.6f*cos(t)*x + %.6f", u(rng), u(rng));
        CoeffFields f = fields_of(abuf, bbuf, 10.0);
        const double tol = 1e-10;
        for (int k = 1; k <= 3; ++k)
            for (double x : linspace(0.0, 1.0, 17))
            {
                auto lhs_hi = phi_sum(f, k, 2.0 * (k + 1) - x, 0.0, tol);
                auto lhs_lo = phi_sum(f, k - 1, 2.0 * k - x, 0.0, tol);
                auto rhs = phi(f, 2.0 * (k + 1) - x, 0.0, tol);
                CHECK(lhs_hi.value - lhs_lo.value ==
                      Catch::Approx(rhs.value).margin(4.0 * tol));
            }
    }
}

TEST_CASE("gamma_path breakpoints")
{
    // full reflected trip
    auto segs = gamma_path(3.0);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].leg == 1);
    CHECK(segs[0].from.time == 1.0);
    CHECK(segs[0].from.pos == 0.0);
    CHECK(segs[0].to.time == 2.0);
    CHECK(segs[0].to.pos == 1.0);
    CHECK(segs[1].from.pos == 1.0);
    CHECK(segs[1].to.time == 3.0);
    CHECK(segs[1].to.pos == 0.0);

    // clipped trip still reflects at x = 1
    segs = gamma_path(1.5);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].from.time == 0.0);
    CHECK(segs[0].from.pos == 0.5);
    CHECK(segs[0].to.time == 0.5);
    CHECK(segs[0].to.pos == 1.0);
    CHECK(segs[1].to.time == 1.5);
    CHECK(segs[1].to.pos == 0.0);

    // short time: only the descending leg remains
    segs = gamma_path(0.5);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].leg == 2);
    CHECK(segs[0].from.time == 0.0);
    CHECK(segs[0].from.pos == 0.5);
    CHECK(segs[0].to.pos == 0.0);
}

TEST_CASE("quadrature error bounds are honored")
{
    CoeffFields f = fields_of("sin(7*t)*exp(x)", "cos(5*t - 3*x)", 8.0);
    const double exact = phi(f, 5.3, 0.4, 1e-13).value;
    for (double tol : {1e-6, 1e-8, 1e-10})
    {
        auto r = phi(f, 5.3, 0.4, tol);
        CHECK(r.err <= tol);
        CHECK(std::fabs(r.value - exact) <= tol + 1e-12);
    }
}

TEST_CASE("PhiTable reproduces direct evaluation and caches")
{
    CoeffFields f = fields_of("1 + x^2", "t*x", 8.0);
    PhiTable tab(f, 1e-10);
    const double direct = phi(f, 4.2, 0.0, 1e-10).value;
    CHECK(tab.phi(4.2).value == direct);
    const std::size_t before = tab.size();
    CHECK(tab.phi(4.2).value == direct); // hit, no growth
    CHECK(tab.size() == before);

    // f_n reassembled from cached phi values
    auto fn = tab.f_n(2, 6.4);
    double sum = 0.0;
    for (int k = 0; k <= 2; ++k) sum += tab.phi(6.4 - 2.0 * k).value;
    CHECK(fn.value == sum);
}
