#ifndef WAVECTL_COMMON_HPP
#define WAVECTL_COMMON_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavectl
{
    // Default tolerance bands. The underlying conditions are exact
    // dichotomies; a numeric toolkit has to band them.
    constexpr double kTauEig   = 1e-9;
    constexpr double kTauRank  = 1e-9;
    constexpr double kTauPhi   = 1e-9;
    constexpr double kTauMinor = 1e-9;
    constexpr double kTauSpec  = 1e-6;

    class Error : public std::runtime_error
    {
    public:
        explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    };

    /// Malformed input text. Carries the byte offset and what was expected.
    class ParseError : public Error
    {
    public:
        ParseError(const std::string& msg, std::size_t offset, std::string expected)
            : Error(msg), offset(offset), expected(std::move(expected)) {}
        std::size_t offset;
        std::string expected;
    };

    /// Evaluation outside the mathematical domain (log of a non-positive
    /// number, division by zero, ...). Carries the offending subexpression.
    class DomainError : public Error
    {
    public:
        DomainError(const std::string& msg, std::string subexpr)
            : Error(msg), subexpr(std::move(subexpr)) {}
        std::string subexpr;
    };

    /// An iterative scheme did not reach its tolerance. Carries what it did reach.
    class ConvergenceError : public Error
    {
    public:
        ConvergenceError(const std::string& msg, double achieved)
            : Error(msg), achieved(achieved) {}
        double achieved;
    };

    /// Invalid grid / initial data (CFL violation, mean-zero defect, ...).
    class InputError : public Error
    {
    public:
        InputError(const std::string& msg, double defect = 0.0)
            : Error(msg), defect(defect) {}
        double defect;
    };

    inline std::vector<double> linspace(double a, double b, int n)
    {
        std::vector<double> v(n);
        for (int i = 0; i < n; ++i)
            v[i] = (n == 1) ? a : a + (b - a) * double(i) / double(n - 1);
        return v;
    }

    /// Trapezoid rule over uniformly spaced samples on [a,b].
    inline double trapz(const std::vector<double>& y, double a, double b)
    {
        const int n = int(y.size());
        if (n < 2) return 0.0;
        double s = 0.5 * (y.front() + y.back());
        for (int i = 1; i + 1 < n; ++i) s += y[i];
        return s * (b - a) / double(n - 1);
    }
} // namespace wavectl

#endif
