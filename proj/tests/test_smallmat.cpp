#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "wavectl/smallmat.hpp"

using namespace wavectl;

namespace
{
    double mat_dist(const Mat2& a, const Mat2& b) { return (a - b).norm(); }
}

TEST_CASE("classify: canonical cases")
{
    auto c1 = classify(Mat2{0, 1, 0, 0});
    CHECK(c1.kind == SpectralKind::JordanBlock);
    CHECK(c1.mu == 0.0);

    auto c2 = classify(Mat2{0, 1, -1, 0});
    CHECK(c2.kind == SpectralKind::ComplexPair);
    CHECK(c2.re == 0.0);
    CHECK(c2.im == Catch::Approx(1.0));

    auto c3 = classify(Mat2{2, 0, 0, 3});
    CHECK(c3.kind == SpectralKind::DistinctReal);
    CHECK(c3.l1 == Catch::Approx(2.0));
    CHECK(c3.l2 == Catch::Approx(3.0));

    auto c4 = classify(Mat2{1.5, 0, 0, 1.5});
    CHECK(c4.kind == SpectralKind::ScalarMultiple);
    CHECK(c4.mu == Catch::Approx(1.5));
}

TEST_CASE("classify flags a near-degenerate discriminant")
{
    // eigenvalues 1 +- 1e-6: discriminant 4e-12, inside the default band
    Mat2 m{1.0, 1e-12, 1.0, 1.0};
    auto c = classify(m);
    CHECK((c.kind == SpectralKind::JordanBlock || c.kind == SpectralKind::ScalarMultiple));
    CHECK(c.tolerance_sensitive);
    CHECK_FALSE(classify(Mat2{0, 1, 0, 0}).tolerance_sensitive); // exact zero disc
}

TEST_CASE("expm: closed forms vs direct cases")
{
    // nilpotent: e^{rM} = I + rM
    Mat2 n{0, 0, 1, 0};
    CHECK(mat_dist(expm(n, 3.0), Mat2{1, 0, 3, 1}) < 1e-14);

    // scalar: e * I
    CHECK(mat_dist(expm(Mat2::identity(), 1.0), std::exp(1.0) * Mat2::identity()) < 1e-14);

    // quarter-turn rotation generator against the series oracle
    Mat2 rot{0, 1, -1, 0};
    const Mat2 got = expm(rot, M_PI / 2);
    CHECK(mat_dist(got, oracles::expm_series(rot, M_PI / 2)) < 1e-12);
    CHECK(mat_dist(got, Mat2{0, 1, -1, 0}) < 1e-12);

    // identity at r = 0
    CHECK(mat_dist(expm(Mat2{0.3, -2, 5, 1}, 0.0), Mat2::identity()) == 0.0);
}

TEST_CASE("expm: random matrices against the series oracle")
{
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 200; ++i)
    {
        Mat2 m{u(rng), u(rng), u(rng), u(rng)};
        const double r = u(rng);
        CHECK(mat_dist(expm(m, r), oracles::expm_series(m, r)) < 1e-11);
    }
}

TEST_CASE("expm group and determinant identities")
{
    std::mt19937 rng(43);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 100; ++i)
    {
        Mat2 m{u(rng), u(rng), u(rng), u(rng)};
        const double r1 = u(rng), r2 = u(rng);
        CHECK(mat_dist(expm(m, r1 + r2), expm(m, r1) * expm(m, r2)) < 1e-10);
        CHECK(expm(m, r1).det() == Catch::Approx(std::exp(r1 * m.trace())).margin(1e-10));
    }
}

TEST_CASE("kalman_rank")
{
    CHECK(kalman_rank(Mat2{0, 1, 0, 0}, Vec2{0, 1}) == 2);
    CHECK(kalman_rank(Mat2::diag(2, 3), Vec2{1, 0}) == 1);
    CHECK(kalman_rank(Mat2{0, 1, 0, 0}, Vec2{0, 0}) == 0);
}

TEST_CASE("det_B_eB: worked cases")
{
    // rows (0,1) and (2,1) after the defective exponential
    Mat2 m{0, 1, 0, 0}; // M* = [[0,0],[1,0]]
    CHECK(det_B_eB(m, Vec2{0, 1}, 2.0) == Catch::Approx(-2.0).margin(1e-14));

    // both rows equal B* at r = 0
    CHECK(det_B_eB(Mat2{1, 2, -1, 0.5}, Vec2{0.3, -0.7}, 0.0) == 0.0);

    // diagonal case, closed form beta1 beta2 (e^{l1 r} - e^{l2 r}); the sign
    // depends on the eigenvalue ordering, so compare through it explicitly
    const auto cls = classify(Mat2::diag(1, -1).transpose());
    const double closed = 1.0 * 1.0 * (std::exp(cls.l1 * 1.0) - std::exp(cls.l2 * 1.0));
    const double got_diag = det_B_eB(Mat2::diag(1, -1), Vec2{1, 1}, 1.0);
    CHECK(got_diag == Catch::Approx(closed).margin(1e-12));
    CHECK(std::fabs(got_diag) ==
          Catch::Approx(std::exp(1.0) - std::exp(-1.0)).margin(1e-12));
    // cross-check the exponential against the series oracle
    const Vec2 eb = oracles::expm_series(Mat2::diag(1, -1), 1.0) * Vec2{1, 1};
    CHECK(1.0 * eb.y - 1.0 * eb.x == Catch::Approx(got_diag).margin(1e-12));
}

TEST_CASE("phi_nondegenerate")
{
    SpectralClass jordan;
    jordan.kind = SpectralKind::JordanBlock;
    jordan.mu = 0.0;
    CHECK(phi_nondegenerate(jordan, 1.0));
    CHECK_FALSE(phi_nondegenerate(jordan, 0.0));

    SpectralClass rot;
    rot.kind = SpectralKind::ComplexPair;
    rot.re = 0.0;
    rot.im = 1.0;
    CHECK_FALSE(phi_nondegenerate(rot, M_PI)); // on the lattice
    CHECK(phi_nondegenerate(rot, M_PI / 2));

    SpectralClass dr;
    dr.kind = SpectralKind::DistinctReal;
    dr.l1 = 1.0;
    dr.l2 = 2.0;
    CHECK_FALSE(phi_nondegenerate(dr, 0.0));
}

TEST_CASE("det_B_eB dichotomy: randomized agreement with the scalar condition")
{
    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> ur(-3.0, 3.0);
    int checked = 0;
    for (int trial = 0; trial < 2000 && checked < 500; ++trial)
    {
        Mat2 m{u(rng), u(rng), u(rng), u(rng)};
        Vec2 b{u(rng), u(rng)};
        double r = ur(rng);
        const SpectralClass cls = classify(m.transpose());
        // stay away from the decision boundaries so both routes are stable
        if (b.norm() < 0.2) continue;
        const Vec2 mb = m * b;
        const double krel = std::fabs(b.x * mb.y - b.y * mb.x) /
                            std::max(1e-30, b.norm() * mb.norm());
        if (krel > 1e-12 && krel < 1e-3) continue;
        if (phi_margin(cls, r) < 0.05 && phi_margin(cls, r) > 0.0) continue;
        if (cls.tolerance_sensitive) continue;

        const bool det_nonzero = std::fabs(det_B_eB(m, b, r)) > 1e-9;
        const bool cond = (kalman_rank(m, b) == 2) && phi_nondegenerate(cls, r);
        CHECK(det_nonzero == cond);
        ++checked;
    }
    CHECK(checked >= 500);
}

TEST_CASE("sylvester_det: shared and disjoint roots")
{
    // identical polynomials share roots
    CHECK(std::abs(sylvester_det(0, 0, 1.0, 2.0, 1, 1)) < 1e-12);

    // z^2 + pi^2 vs z^2 + 4 pi^2: resultant 9 pi^4 via the root oracle
    const auto got = sylvester_det(0, 0, 1.0, 1.0, 1, 2);
    const double pi2 = M_PI * M_PI;
    CHECK(std::abs(got - std::complex<double>(9 * pi2 * pi2)) < 1e-9);
    const auto by_roots = oracles::resultant_by_roots(0.0, pi2, 0.0, 4.0 * pi2);
    CHECK(std::abs(got - by_roots) < 1e-8);

    // z^2 + z and z^2 - z share the root 0
    CHECK(std::abs(sylvester_det(1, 0, 1.0, -1.0, 0, 0)) < 1e-14);
}

TEST_CASE("sylvester_det vanishes exactly when the quadratics share a root")
{
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_int_distribution<int> un(0, 4);
    for (int trial = 0; trial < 400; ++trial)
    {
        const double a = u(rng), b = u(rng);
        const std::complex<double> mu1(u(rng), u(rng)), mu2(u(rng), u(rng));
        const int n1 = un(rng), n2 = un(rng);
        const std::complex<double> p1 = a * mu1, p2 = a * mu2;
        const std::complex<double> q1 =
            0.25 * b * b * mu1 * mu1 + std::complex<double>(n1 * n1 * M_PI * M_PI);
        const std::complex<double> q2 =
            0.25 * b * b * mu2 * mu2 + std::complex<double>(n2 * n2 * M_PI * M_PI);
        const double scale = std::max({1.0, std::abs(q1), std::abs(q2)});
        const double det = std::abs(sylvester_det(a, b, mu1, mu2, n1, n2));
        const double root_dist = oracles::min_root_distance(p1, q1, p2, q2);
        // skip the band where the two routes could legitimately disagree
        if (det > 1e-9 * scale * scale && root_dist > 1e-6)
            CHECK(true);
        else if (det < 1e-12 * scale * scale)
            CHECK(root_dist < 1e-5);
    }
}
