// Test-only reference implementations, independent of the library's own
// computation paths: series matrix exponentials, a root-based resultant, and
// a brute-force midpoint quadrature.
#ifndef WAVECTL_TESTS_ORACLES_HPP
#define WAVECTL_TESTS_ORACLES_HPP

#include <complex>
#include <random>

#include <Eigen/Dense>

#include "wavectl/smallmat.hpp"

namespace oracles
{
    /// e^{rM} by scaling-and-squaring on the plain Taylor series.
    inline wavectl::Mat2 expm_series(const wavectl::Mat2& m, double r)
    {
        using wavectl::Mat2;
        Mat2 a = m * r;
        int squarings = 0;
        while (a.norm() > 0.5)
        {
            a = a * 0.5;
            ++squarings;
        }
        Mat2 sum = Mat2::identity();
        Mat2 term = Mat2::identity();
        for (int k = 1; k <= 30; ++k)
        {
            term = term * a * (1.0 / k);
            sum = sum + term;
            if (term.norm() < 1e-18) break;
        }
        for (int i = 0; i < squarings; ++i) sum = sum * sum;
        return sum;
    }

    /// 4x4 complex series exponential (for the fundamental-matrix check).
    inline Eigen::Matrix4cd expm_series4(const Eigen::Matrix4cd& m)
    {
        Eigen::Matrix4cd a = m;
        int squarings = 0;
        while (a.cwiseAbs().maxCoeff() > 0.5)
        {
            a *= 0.5;
            ++squarings;
        }
        Eigen::Matrix4cd sum = Eigen::Matrix4cd::Identity();
        Eigen::Matrix4cd term = Eigen::Matrix4cd::Identity();
        for (int k = 1; k <= 40; ++k)
        {
            term = term * a / double(k);
            sum += term;
        }
        for (int i = 0; i < squarings; ++i) sum = sum * sum;
        return sum;
    }

    /// Resultant of the two quadratics z^2 + p_i z + q_i via the explicit
    /// root cross-product prod (r_i - s_j).
    inline std::complex<double> resultant_by_roots(std::complex<double> p1,
                                                   std::complex<double> q1,
                                                   std::complex<double> p2,
                                                   std::complex<double> q2)
    {
        using C = std::complex<double>;
        const C r1 = 0.5 * (-p1 + std::sqrt(p1 * p1 - 4.0 * q1));
        const C r2 = 0.5 * (-p1 - std::sqrt(p1 * p1 - 4.0 * q1));
        const C s1 = 0.5 * (-p2 + std::sqrt(p2 * p2 - 4.0 * q2));
        const C s2 = 0.5 * (-p2 - std::sqrt(p2 * p2 - 4.0 * q2));
        return (r1 - s1) * (r1 - s2) * (r2 - s1) * (r2 - s2);
    }

    /// Smallest pairwise distance between roots of the two quadratics.
    inline double min_root_distance(std::complex<double> p1, std::complex<double> q1,
                                    std::complex<double> p2, std::complex<double> q2)
    {
        using C = std::complex<double>;
        const C r[2] = {0.5 * (-p1 + std::sqrt(p1 * p1 - 4.0 * q1)),
                        0.5 * (-p1 - std::sqrt(p1 * p1 - 4.0 * q1))};
        const C s[2] = {0.5 * (-p2 + std::sqrt(p2 * p2 - 4.0 * q2)),
                        0.5 * (-p2 - std::sqrt(p2 * p2 - 4.0 * q2))};
        double d = 1e300;
        for (const auto& a : r)
            for (const auto& b : s) d = std::min(d, std::abs(a - b));
        return d;
    }

    /// Brute-force midpoint rule; slow but independent of the adaptive code.
    template <class F>
    double midpoint(const F& f, double a, double b, int n = 1000000)
    {
        double s = 0.0;
        const double h = (b - a) / n;
        for (int i = 0; i < n; ++i) s += f(a + (i + 0.5) * h);
        return s * h;
    }
} // namespace oracles

#endif
