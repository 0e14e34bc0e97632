#ifndef WAVECTL_QUADRATURE_HPP
#define WAVECTL_QUADRATURE_HPP

#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "wavectl/common.hpp"

namespace wavectl
{
    struct QuadRule
    {
        std::vector<double> nodes;   // on [-1,1]
        std::vector<double> weights;
    };

    /// n-point Gauss-Legendre rule on [-1,1]. Nodes by Newton iteration on
    /// P_n with the usual Chebyshev-based initial guesses; cached per n.
    inline const QuadRule& gauss_legendre(int n)
    {
        static std::map<int, QuadRule> cache;
        static std::mutex mx;
        std::lock_guard<std::mutex> lock(mx);
        auto it = cache.find(n);
        if (it != cache.end()) return it->second;

        QuadRule rule;
        rule.nodes.resize(n);
        rule.weights.resize(n);
        for (int i = 0; i < n; ++i)
        {
            double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int iter = 0; iter < 100; ++iter)
            {
                double p0 = 1.0, p1 = 0.0;
                for (int j = 0; j < n; ++j)
                {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
                }
                pp = n * (z * p0 - p1) / (z * z - 1.0);
                const double dz = p0 / pp;
                z -= dz;
                if (std::fabs(dz) < 1e-15) break;
            }
            rule.nodes[i] = z;
            rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        }
        return cache.emplace(n, std::move(rule)).first->second;
    }

    struct QuadResult
    {
        double value = 0.0;
        double err = 0.0;

        QuadResult operator+(const QuadResult& o) const { return {value + o.value, err + o.err}; }
        QuadResult& operator+=(const QuadResult& o)
        {
            value += o.value;
            err += o.err;
            return *this;
        }
    };

    namespace detail
    {
        template <class F>
        double gl_panel(const F& f, double a, double b, const QuadRule& rule)
        {
            const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            double s = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i)
                s += rule.weights[i] * f(mid + half * rule.nodes[i]);
            return s * half;
        }

        template <class F>
        QuadResult adapt(const F& f, double a, double b, double tol, int depth)
        {
            const QuadRule& lo = gauss_legendre(7);
            const QuadRule& hi = gauss_legendre(15);
            const double ilo = gl_panel(f, a, b, lo);
            const double ihi = gl_panel(f, a, b, hi);
            const double err = std::fabs(ihi - ilo);
            if (err <= tol || depth >= 32)
            {
                if (depth >= 32 && err > tol)
                    throw ConvergenceError("quadrature did not converge on panel; achieved " +
                                               std::to_string(err),
                                           err);
                return {ihi, err};
            }
            const double m = 0.5 * (a + b);
            return adapt(f, a, m, 0.5 * tol, depth + 1) + adapt(f, m, b, 0.5 * tol, depth + 1);
        }
    } // namespace detail

    /// Adaptive composite Gauss-Legendre integral of f over [a,b] with an
    /// absolute tolerance. err is a (conservative) bound on the result.
    template <class F>
    QuadResult integrate(const F& f, double a, double b, double tol = 1e-10)
    {
        if (a == b) return {0.0, 0.0};
        if (a > b)
        {
            QuadResult r = integrate(f, b, a, tol);
            return {-r.value, r.err};
        }
        return detail::adapt(f, a, b, tol, 0);
    }

    /// Fixed n-point Gauss-Legendre integral over [a,b]; no error estimate.
    template <class F>
    double integrate_gl(const F& f, double a, double b, int n)
    {
        return detail::gl_panel(f, a, b, gauss_legendre(n));
    }
} // namespace wavectl

#endif
