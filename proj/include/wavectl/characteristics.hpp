#ifndef WAVECTL_CHARACTERISTICS_HPP
#define WAVECTL_CHARACTERISTICS_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <ostream>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "wavectl/common.hpp"
#include "wavectl/expr.hpp"
#include "wavectl/quadrature.hpp"

namespace wavectl
{
    // The coupling-derived coefficient fields and the central line integral
    // phi(t,s) along one reflected characteristic round trip, plus the
    // partial sums f_n(t,s) over successive trips.

    struct CoeffFields
    {
        Expr a, b;
        double T = 0.0;

        double alpha1(double t, double x) const { return 0.5 * (a.eval(t, x) - b.eval(t, x)); }
        double alpha2(double t, double x) const { return 0.5 * (a.eval(t, x) + b.eval(t, x)); }

        // time-reversed fields at horizon T
        double eta1(double t, double x) const { return alpha2(T - t, x); }
        double eta2(double t, double x) const { return alpha1(T - t, x); }

        bool autonomous() const { return !a.depends_on_t() && !b.depends_on_t(); }
    };

    inline CoeffFields make_fields(const Expr& a, const Expr& b, double T) { return {a, b, T}; }

    /// phi(t,s): zero for t <= s, otherwise the two-segment line integral of
    /// (eta1 along slope +1, eta2 along slope -1) along the reflected
    /// characteristic ending at (t, x=0).
    inline QuadResult phi(const CoeffFields& f, double t, double s, double tol = 1e-10)
    {
        if (t <= s) return {0.0, 0.0};
        const double b0 = std::max(s, t - 2.0);
        const double b1 = std::max(s, t - 1.0);

        QuadResult r{0.0, 0.0};
        if (b1 > b0)
        {
            // ascending leg, position tau - (t-2) in [0,1]
            r += integrate([&](double tau) { return f.eta1(tau, tau - (t - 2.0)); },
                           b0, b1, 0.5 * tol);
        }
        if (t > b1)
        {
            // descending leg, position t - tau in [0,1]
            r += integrate([&](double tau) { return f.eta2(tau, t - tau); },
                           b1, t, 0.5 * tol);
        }
        return r;
    }

    /// f_n(t,s) = sum_{k=0..n} phi(t - 2k, s).
    inline QuadResult phi_sum(const CoeffFields& f, int n, double t, double s, double tol = 1e-10)
    {
        QuadResult r{0.0, 0.0};
        for (int k = 0; k <= n; ++k)
            r += phi(f, t - 2.0 * k, s, tol / double(n + 1));
        return r;
    }

    struct PathPoint
    {
        double time = 0.0;
        double pos = 0.0;
    };

    struct PathSegment
    {
        PathPoint from, to;
        int leg = 0; // 1: ascending (eta1), 2: descending (eta2)
    };

    /// The reflected characteristic Gamma_t as time-position breakpoints.
    /// Positions are clamped to the [0,1] endpoints exactly at reflections.
    inline std::vector<PathSegment> gamma_path(double t)
    {
        std::vector<PathSegment> segs;
        const double t0 = std::max(0.0, t - 2.0);
        const double t1 = std::max(0.0, t - 1.0);
        auto clamp01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
        if (t1 > t0)
            segs.push_back({{t0, clamp01(t0 - (t - 2.0))}, {t1, clamp01(t1 - (t - 2.0))}, 1});
        if (t > t1)
            segs.push_back({{t1, clamp01(t - t1)}, {t, 0.0}, 2});
        return segs;
    }

    /// Memoized phi / f_n evaluations. The observability scans evaluate phi at
    /// hundreds of arguments that repeat bit-exactly across rows and strips;
    /// the cache is keyed on the exact (t,s) bits. Concurrent reads are safe;
    /// insertion is guarded. Results are identical to uncached calls.
    class PhiTable
    {
    public:
        PhiTable(const CoeffFields& fields, double tol = 1e-10)
            : fields_(fields), tol_(tol) {}

        QuadResult phi(double t, double s = 0.0) const
        {
            const Key key{t, s};
            {
                std::shared_lock lock(mx_);
                auto it = cache_.find(key);
                if (it != cache_.end()) return it->second;
            }
            QuadResult r = wavectl::phi(fields_, t, s, tol_);
            std::unique_lock lock(mx_);
            cache_.emplace(key, r);
            return r;
        }

        QuadResult f_n(int n, double t, double s = 0.0) const
        {
            QuadResult r{0.0, 0.0};
            for (int k = 0; k <= n; ++k) r += phi(t - 2.0 * k, s);
            return r;
        }

        double tol() const { return tol_; }
        const CoeffFields& fields() const { return fields_; }

        /// Debug dump of every cached entry: t,s,n,value,err (n = 0; the f_n
        /// sums are always reassembled from cached phi values).
        void dump_csv(std::ostream& os) const
        {
            os << "t,s,n,value,err\n";
            std::shared_lock lock(mx_);
            char buf[128];
            for (const auto& [k, v] : cache_)
            {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,0,%.17g,%.17g\n", k.t, k.s,
                              v.value, v.err);
                os << buf;
            }
        }

        std::size_t size() const
        {
            std::shared_lock lock(mx_);
            return cache_.size();
        }

    private:
        struct Key
        {
            double t, s;
            bool operator==(const Key& o) const { return t == o.t && s == o.s; }
        };
        struct KeyHash
        {
            std::size_t operator()(const Key& k) const
            {
                std::uint64_t a, b;
                std::memcpy(&a, &k.t, 8);
                std::memcpy(&b, &k.s, 8);
                std::uint64_t h = a * 0x9e3779b97f4a7c15ull;
                h ^= b + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
                return std::size_t(h);
            }
        };

        CoeffFields fields_;
        double tol_;
        mutable std::unordered_map<Key, QuadResult, KeyHash> cache_;
        mutable std::shared_mutex mx_;
    };
} // namespace wavectl

#endif
