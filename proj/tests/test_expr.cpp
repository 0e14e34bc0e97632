#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "wavectl/expr.hpp"

using wavectl::DomainError;
using wavectl::Expr;
using wavectl::ParseError;

TEST_CASE("direct grammar cases")
{
    Expr e = Expr::parse("t - x");
    CHECK(e.eval(2.0, 0.5) == 1.5);

    Expr f = Expr::parse("sin(pi*x)^2");
    CHECK(f.eval(0.0, 0.5) == Catch::Approx(1.0).margin(1e-15));
    CHECK(f.str() == "sin(pi*x)^2");

    CHECK(Expr::parse("sin(pi*x)").eval(0.0, 0.5) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("malformed input reports offsets and expectations")
{
    try
    {
        Expr::parse("t +");
        FAIL("no error raised");
    }
    catch (const ParseError& e)
    {
        CHECK(e.offset == 3);
        CHECK_FALSE(e.expected.empty());
    }

    try
    {
        Expr::parse("2 * foo(x)");
        FAIL("no error raised");
    }
    catch (const ParseError& e)
    {
        CHECK(std::string(e.what()).find("foo") != std::string::npos);
    }

    CHECK_THROWS_AS(Expr::parse("(t + x"), ParseError);
    CHECK_THROWS_AS(Expr::parse("t ~ x"), ParseError);
}

TEST_CASE("domain errors carry the offending subexpression")
{
    Expr e = Expr::parse("1/x");
    CHECK_THROWS_AS(e.eval(0.0, 0.0), DomainError);
    try
    {
        e.eval(0.0, 0.0);
    }
    catch (const DomainError& d)
    {
        CHECK(d.subexpr == "1/x");
    }
    CHECK_THROWS_AS(Expr::parse("log(x)").eval(0.0, -1.0), DomainError);
    CHECK_THROWS_AS(Expr::parse("sqrt(x)").eval(0.0, -1.0), DomainError);
}

TEST_CASE("precedence and associativity")
{
    CHECK(Expr::parse("-2^2").eval(0, 0) == -4.0);
    CHECK(Expr::parse("2^3^2").eval(0, 0) == 64.0); // left associative
    CHECK(Expr::parse("2 - 3 - 4").eval(0, 0) == -5.0);
    CHECK(Expr::parse("2 + 3*4^2").eval(0, 0) == 50.0);
    CHECK(Expr::parse("2^-3").eval(0, 0) == 0.125);
    CHECK(Expr::parse("abs(-t)").eval(3.0, 0.0) == 3.0);
    CHECK(Expr::parse("exp(0) + cos(0)").eval(0, 0) == 2.0);
}

TEST_CASE("dependence scan")
{
    CHECK(Expr::parse("t*x").depends_on_t());
    CHECK(Expr::parse("t*x").depends_on_x());
    CHECK_FALSE(Expr::parse("1 + x^2").depends_on_t());
    CHECK_FALSE(Expr::parse("sin(t)").depends_on_x());
}

namespace
{
    // random expression source for the round-trip property
    std::string random_expr(std::mt19937& rng, int depth)
    {
        std::uniform_int_distribution<int> pick(0, depth <= 0 ? 3 : 9);
        std::uniform_real_distribution<double> num(0.1, 9.9);
        switch (pick(rng))
        {
            case 0: return std::to_string(num(rng));
            case 1: return "t";
            case 2: return "x";
            case 3: return "pi";
            case 4: return "(" + random_expr(rng, depth - 1) + " + " + random_expr(rng, depth - 1) + ")";
            case 5: return "(" + random_expr(rng, depth - 1) + " - " + random_expr(rng, depth - 1) + ")";
            case 6: return "(" + random_expr(rng, depth - 1) + "*" + random_expr(rng, depth - 1) + ")";
            case 7: return "sin(" + random_expr(rng, depth - 1) + ")";
            case 8: return "cos(" + random_expr(rng, depth - 1) + ")";
            default: return "-" + random_expr(rng, depth - 1);
        }
    }
}

TEST_CASE("round-trip: print then reparse is structurally identical")
{
    std::mt19937 rng(12345);
    for (int i = 0; i < 200; ++i)
    {
        Expr e = Expr::parse(random_expr(rng, 4));
        Expr back = Expr::parse(e.str());
        CHECK(e.same_structure(back));
    }
}

TEST_CASE("polynomial eval matches Horner to a few ulps")
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> coeff(-3.0, 3.0);
    std::uniform_real_distribution<double> arg(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial)
    {
        double c[5];
        std::string src;
        for (int i = 0; i < 5; ++i)
        {
            c[i] = coeff(rng);
            char term[64];
            std::snprintf(term, sizeof term, "%s(%.17g)*x^%d", i ? " + " : "", c[i], i);
            src += term;
        }
        Expr e = Expr::parse(src);
        const double x = arg(rng);
        double horner = c[4];
        double scale = 0.0;
        for (int i = 3; i >= 0; --i) horner = horner * x + c[i];
        for (int i = 0; i < 5; ++i) scale += std::fabs(c[i]) * std::pow(std::fabs(x), i);
        const double got = e.eval(0.0, x);
        // ulps measured at the expression's magnitude; cancellation between
        // terms is shared by both evaluation orders
        const double ulp = std::ldexp(1.0, std::ilogb(std::max(scale, 1e-30)) - 52);
        CHECK(std::fabs(got - horner) <= 4.0 * ulp);
    }
}

TEST_CASE("eval is deterministic")
{
    Expr e = Expr::parse("sin(t*x) + exp(x - t)/(1 + x^2)");
    const double v = e.eval(0.3, 0.7);
    for (int i = 0; i < 10; ++i) CHECK(e.eval(0.3, 0.7) == v);
}
