#ifndef WAVECTL_SOLVER_HPP
#define WAVECTL_SOLVER_HPP

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "wavectl/characteristics.hpp"
#include "wavectl/common.hpp"
#include "wavectl/expr.hpp"
#include "wavectl/quadrature.hpp"
#include "wavectl/smallmat.hpp"

namespace wavectl
{
    // Solvers for the first-order reduction: the block-diagonal system by
    // exact characteristics, the complete system by Duhamel/Picard iteration,
    // an independent upwind finite-difference cross-check, reconstruction of
    // the wave solution from the Riemann invariants, and the discrete
    // difference operator between the two boundary input maps.

    struct SystemSpec
    {
        Mat2 M;
        Vec2 B;
        Expr a, b;
        double T = 0.0;

        CoeffFields fields() const { return {a, b, T}; }
        Mat2 Mstar() const { return M.transpose(); }
    };

    /// (p,q) pair sampled on the uniform x-grid over [0,1].
    struct StateH
    {
        std::vector<Vec2> p, q;

        int nx() const { return int(p.size()) - 1; }

        static StateH zero(int nx)
        {
            StateH z;
            z.p.assign(nx + 1, Vec2{});
            z.q.assign(nx + 1, Vec2{});
            return z;
        }

        /// trapezoid integral of (p - q); zero (per component) on H
        Vec2 mean_defect() const
        {
            const int n = nx();
            const double h = 1.0 / n;
            Vec2 d{0.0, 0.0};
            for (int j = 0; j <= n; ++j)
            {
                const double w = (j == 0 || j == n) ? 0.5 * h : h;
                d = d + w * (p[j] - q[j]);
            }
            return d;
        }

        double norm() const
        {
            const int n = nx();
            const double h = 1.0 / n;
            double s = 0.0;
            for (int j = 0; j <= n; ++j)
            {
                const double w = (j == 0 || j == n) ? 0.5 * h : h;
                s += w * (p[j].dot(p[j]) + q[j].dot(q[j]));
            }
            return std::sqrt(s);
        }

        /// Shift by constants so the mean-zero constraint holds exactly.
        void project_mean_zero()
        {
            const Vec2 d = mean_defect();
            for (auto& v : p) v = v - 0.5 * d;
            for (auto& v : q) v = v + 0.5 * d;
        }

        Vec2 interp_p(double x) const { return interp(p, x); }
        Vec2 interp_q(double x) const { return interp(q, x); }

    private:
        Vec2 interp(const std::vector<Vec2>& v, double x) const
        {
            const int n = nx();
            double u = x * n;
            if (u <= 0.0) return v.front();
            if (u >= double(n)) return v.back();
            const int j = int(u);
            const double w = u - j;
            // exact node within rounding: avoid smearing aligned samples
            if (w < 1e-9) return v[j];
            if (w > 1.0 - 1e-9) return v[j + 1];
            return v[j] * (1.0 - w) + v[j + 1] * w;
        }
    };

    /// Square-integrable samples of (p,q) over [t0, t0 + K*dt] x [0,1].
    struct Field
    {
        double t0 = 0.0;
        double dt = 0.0;
        std::vector<StateH> slices;

        int nt() const { return int(slices.size()) - 1; }
        int nx() const { return slices.empty() ? 0 : slices.front().nx(); }
        double time(int k) const { return t0 + k * dt; }

        const StateH& at(int k) const { return slices[k]; }
        StateH& at(int k) { return slices[k]; }
    };

    /// L2(Q) distance between two fields on the same grid.
    inline double field_l2_diff(const Field& A, const Field& B)
    {
        if (A.nt() != B.nt() || A.nx() != B.nx())
            throw InputError("field grids differ");
        const int K = A.nt(), N = A.nx();
        const double hx = 1.0 / N;
        double acc = 0.0;
        for (int k = 0; k <= K; ++k)
        {
            double sx = 0.0;
            for (int j = 0; j <= N; ++j)
            {
                const double w = (j == 0 || j == N) ? 0.5 * hx : hx;
                const Vec2 dp = A.at(k).p[j] - B.at(k).p[j];
                const Vec2 dq = A.at(k).q[j] - B.at(k).q[j];
                sx += w * (dp.dot(dp) + dq.dot(dq));
            }
            const double wt = (k == 0 || k == K) ? 0.5 * A.dt : A.dt;
            acc += wt * sx;
        }
        return std::sqrt(acc);
    }

    struct TraceSample
    {
        double t = 0.0;
        double value = 0.0;
        int strip = 0;      // n with t - s - 2n in [0,2)
        char branch = 'q';  // 'q': first half-strip, 'p': second
    };

    struct Trace
    {
        std::vector<TraceSample> samples;

        double max_abs() const
        {
            double m = 0.0;
            for (const auto& s : samples) m = std::max(m, std::fabs(s.value));
            return m;
        }

        double l2(double dt) const
        {
            double acc = 0.0;
            const int n = int(samples.size());
            for (int i = 0; i < n; ++i)
            {
                const double w = (i == 0 || i == n - 1) ? 0.5 * dt : dt;
                acc += w * samples[i].value * samples[i].value;
            }
            return std::sqrt(acc);
        }
    };

    namespace detail
    {
        inline void require_in_H(StateH& z, const char* who)
        {
            const Vec2 d = z.mean_defect();
            const double defect = d.norm();
            const double scale = std::max(z.norm(), 1e-300);
            if (defect > 1e-8 * scale)
                throw InputError(std::string(who) +
                                     ": initial data violates the mean-zero constraint, defect " +
                                     std::to_string(defect),
                                 defect);
            if (defect > 0.0) z.project_mean_zero();
        }

        inline int steps_for(double span, int nx, const char* who)
        {
            const double k = span * nx;
            const int K = int(std::lround(k));
            if (std::fabs(k - K) > 1e-9 || K < 0)
                throw InputError(std::string(who) + ": time span " + std::to_string(span) +
                                 " is not a multiple of the grid step 1/" + std::to_string(nx));
            return K;
        }

        // One exact characteristics step of the block-diagonal system from
        // t to t+h on the aligned grid; the per-node exponents are the line
        // integrals of eta along the characteristic panels.
        struct DiagStepper
        {
            const CoeffFields& f;
            const ExpmCache& Estar; // cache bound to M*
            int nx;
            double h;

            // panel integrals; 3-point Gauss per panel
            double g1(double t, int j) const
            {
                const double x0 = double(j - 1) / nx;
                return integrate_gl([&](double tau)
                                    { return f.eta1(tau, x0 + (tau - t)); }, t, t + h, 3);
            }
            double g2(double t, int j) const
            {
                const double x0 = double(j + 1) / nx;
                return integrate_gl([&](double tau)
                                    { return f.eta2(tau, x0 - (tau - t)); }, t, t + h, 3);
            }

            void advance(double t, const StateH& cur, StateH& next) const
            {
                for (int j = 1; j <= nx; ++j)
                    next.p[j] = Estar(g1(t, j)) * cur.p[j - 1];
                for (int j = 0; j < nx; ++j)
                    next.q[j] = Estar(g2(t, j)) * cur.q[j + 1];
                next.p[0] = Vec2{} - next.q[0];
                next.q[nx] = Vec2{} - next.p[nx];
            }

            // same step with precomputed exponents
            void advance_cached(const double* e1, const double* e2, const StateH& cur,
                                StateH& next) const
            {
                for (int j = 1; j <= nx; ++j)
                    next.p[j] = Estar(e1[j]) * cur.p[j - 1];
                for (int j = 0; j < nx; ++j)
                    next.q[j] = Estar(e2[j]) * cur.q[j + 1];
                next.p[0] = Vec2{} - next.q[0];
                next.q[nx] = Vec2{} - next.p[nx];
            }
        };
    } // namespace detail

    /// Exact solution of the block-diagonal system on the aligned space-time
    /// grid, starting from Z_s at time s. The matrix exponentials accumulate
    /// the characteristic line integrals step by step; reflections carry the
    /// (p+q)=0 boundary coupling.
    inline Field solve_diag(const SystemSpec& spec, StateH Z_s, double s, int nx)
    {
        detail::require_in_H(Z_s, "solve_diag");
        const CoeffFields f = spec.fields();
        const ExpmCache Estar(spec.Mstar());
        const double h = 1.0 / nx;
        const int K = detail::steps_for(spec.T - s, nx, "solve_diag");

        Field out;
        out.t0 = s;
        out.dt = h;
        out.slices.reserve(K + 1);
        out.slices.push_back(std::move(Z_s));
        detail::DiagStepper step{f, Estar, nx, h};
        for (int k = 0; k < K; ++k)
        {
            StateH next = StateH::zero(nx);
            step.advance(out.time(k), out.slices.back(), next);
            out.slices.push_back(std::move(next));
        }
        return out;
    }

    /// Raw two-parameter diagonal flow U_d(t,s) applied to nodal data. No
    /// mean-zero requirement: the flow is defined on all of L^2 and the
    /// Duhamel machinery feeds it states outside H.
    inline StateH diag_flow(const SystemSpec& spec, StateH Z_s, double s, double t, int nx)
    {
        const CoeffFields f = spec.fields();
        const ExpmCache Estar(spec.Mstar());
        const double h = 1.0 / nx;
        const int K = detail::steps_for(t - s, nx, "diag_flow");
        detail::DiagStepper step{f, Estar, nx, h};
        StateH cur = std::move(Z_s);
        StateH next = StateH::zero(nx);
        for (int k = 0; k < K; ++k)
        {
            step.advance(s + k * h, cur, next);
            std::swap(cur, next);
        }
        return cur;
    }

    /// Boundary observation B* p(t,0) of the diagonal system on the aligned
    /// t-grid, via the strip formulas only (no interior solve). Each sample
    /// carries the strip index and which half of the strip produced it.
    inline Trace trace_diag(const SystemSpec& spec, StateH Z_s, double s, int nx,
                            const PhiTable* table = nullptr)
    {
        detail::require_in_H(Z_s, "trace_diag");
        const CoeffFields f = spec.fields();
        PhiTable local(f);
        const PhiTable& tab = table ? *table : local;
        const ExpmCache E(spec.M); // B* e^{c M*} z = <e^{c M} B, z>
        const double h = 1.0 / nx;
        const int K = detail::steps_for(spec.T - s, nx, "trace_diag");

        Trace tr;
        tr.samples.reserve(K + 1);
        for (int k = 0; k <= K; ++k)
        {
            const double t = s + k * h;
            const double u = t - s;
            int n = int(std::floor(u / 2.0 + 1e-12));
            double r = u - 2.0 * n;
            TraceSample sample;
            sample.t = t;
            sample.strip = n;
            const double fn = tab.f_n(n, t, s).value;
            const Vec2 row = E(fn) * spec.B;
            if (r < 1.0 - 1e-12)
            {
                sample.branch = 'q';
                sample.value = -row.dot(Z_s.interp_q(r));
            }
            else
            {
                sample.branch = 'p';
                sample.value = row.dot(Z_s.interp_p(2.0 * n + 2.0 - u));
            }
            tr.samples.push_back(sample);
        }
        return tr;
    }

    enum class FdSystem
    {
        Diagonal,
        Full
    };

    /// First-order upwind discretization with the reflection boundary
    /// coupling imposed through the freshly updated outgoing values. Used
    /// only as an independent cross-check of the characteristics solvers.
    inline Field fd_oracle(const SystemSpec& spec, StateH Z_0, int nx,
                           FdSystem system = FdSystem::Full, double cfl = 1.0)
    {
        if (cfl > 1.0 + 1e-12)
            throw InputError("fd_oracle: CFL violation, dt/dx = " + std::to_string(cfl), cfl);
        detail::require_in_H(Z_0, "fd_oracle");
        const CoeffFields f = spec.fields();
        const Mat2 Ms = spec.Mstar();
        const double hx = 1.0 / nx;
        const double ht = cfl * hx;
        const int K = detail::steps_for((spec.T) / cfl, nx, "fd_oracle");

        Field out;
        out.t0 = 0.0;
        out.dt = ht;
        out.slices.reserve(K + 1);
        out.slices.push_back(std::move(Z_0));
        const bool coupled = (system == FdSystem::Full);

        for (int k = 0; k < K; ++k)
        {
            const double t = k * ht;
            const StateH& c = out.slices.back();
            StateH n = StateH::zero(nx);
            for (int j = 1; j <= nx; ++j)
            {
                const double x = j * hx;
                Vec2 src = c.p[j] * f.eta1(t, x);
                if (coupled) src = src + c.q[j] * f.eta2(t, x);
                n.p[j] = c.p[j] - cfl * (c.p[j] - c.p[j - 1]) + ht * (Ms * src);
            }
            for (int j = 0; j < nx; ++j)
            {
                const double x = j * hx;
                Vec2 src = c.q[j] * f.eta2(t, x);
                if (coupled) src = src + c.p[j] * f.eta1(t, x);
                n.q[j] = c.q[j] - cfl * (c.q[j] - c.q[j + 1]) + ht * (Ms * src);
            }
            n.p[0] = Vec2{} - n.q[0];
            n.q[nx] = Vec2{} - n.p[nx];
            out.slices.push_back(std::move(n));
        }
        return out;
    }

    /// Fixed-point (Picard) iteration on the Duhamel identity linking the
    /// complete and diagonal evolution families. The time integral is the
    /// trapezoid rule on the grid, accumulated with the evolution property of
    /// the diagonal stepper so one sweep costs O(nt*nx). Stops when two
    /// successive iterates differ by less than picard_tol in sup-over-t of
    /// the discrete H norm.
    inline Field solve_full(const SystemSpec& spec, StateH Z_0, int nx, double picard_tol = 1e-10,
                            int max_iter = 64)
    {
        detail::require_in_H(Z_0, "solve_full");
        const CoeffFields f = spec.fields();
        const ExpmCache Estar(spec.Mstar());
        const Mat2 Ms = spec.Mstar();
        const double h = 1.0 / nx;
        const int K = detail::steps_for(spec.T, nx, "solve_full");
        detail::DiagStepper step{f, Estar, nx, h};

        // panel exponents and the multiplication-operator coefficients are
        // fixed across iterations
        std::vector<double> e1(std::size_t(K) * (nx + 1)), e2(std::size_t(K) * (nx + 1));
        std::vector<double> c1(std::size_t(K + 1) * (nx + 1)), c2(std::size_t(K + 1) * (nx + 1));
        for (int k = 0; k < K; ++k)
        {
            const double t = k * h;
            for (int j = 1; j <= nx; ++j) e1[std::size_t(k) * (nx + 1) + j] = step.g1(t, j);
            for (int j = 0; j < nx; ++j) e2[std::size_t(k) * (nx + 1) + j] = step.g2(t, j);
        }
        for (int k = 0; k <= K; ++k)
        {
            const double t = k * h;
            for (int j = 0; j <= nx; ++j)
            {
                const double x = double(j) / nx;
                c1[std::size_t(k) * (nx + 1) + j] = f.eta1(t, x);
                c2[std::size_t(k) * (nx + 1) + j] = f.eta2(t, x);
            }
        }
        // off-diagonal multiplication operator of the perturbation
        auto apply_P = [&](int k, const StateH& z, StateH& out)
        {
            const std::size_t off = std::size_t(k) * (nx + 1);
            for (int j = 0; j <= nx; ++j)
            {
                out.p[j] = Ms * (z.q[j] * c2[off + j]);
                out.q[j] = Ms * (z.p[j] * c1[off + j]);
            }
        };

        Field prev = solve_diag(spec, Z_0, 0.0, nx); // iterate 0 = diagonal flow
        Field next = prev;

        double delta_prev = -1.0;
        for (int m = 0; m < max_iter; ++m)
        {
            StateH I = StateH::zero(nx);      // running Duhamel integral
            StateH D = prev.slices[0];        // diagonal flow of Z_0
            StateH Y = StateH::zero(nx), tmp = StateH::zero(nx);
            next.slices[0] = prev.slices[0];
            double delta = 0.0;
            for (int k = 0; k < K; ++k)
            {
                apply_P(k, prev.slices[k], Y);
                for (int j = 0; j <= nx; ++j)
                {
                    I.p[j] = I.p[j] + 0.5 * h * Y.p[j];
                    I.q[j] = I.q[j] + 0.5 * h * Y.q[j];
                }
                const double* pe1 = e1.data() + std::size_t(k) * (nx + 1);
                const double* pe2 = e2.data() + std::size_t(k) * (nx + 1);
                step.advance_cached(pe1, pe2, I, tmp);
                std::swap(I, tmp);
                step.advance_cached(pe1, pe2, D, tmp);
                std::swap(D, tmp);
                apply_P(k + 1, prev.slices[k + 1], Y);
                StateH& zn = next.slices[k + 1];
                for (int j = 0; j <= nx; ++j)
                {
                    I.p[j] = I.p[j] + 0.5 * h * Y.p[j];
                    I.q[j] = I.q[j] + 0.5 * h * Y.q[j];
                    zn.p[j] = D.p[j] + I.p[j];
                    zn.q[j] = D.q[j] + I.q[j];
                }
                // sup over t of the H distance to the previous iterate
                double sx = 0.0;
                for (int j = 0; j <= nx; ++j)
                {
                    const double w = (j == 0 || j == nx) ? 0.5 * h : h;
                    const Vec2 dp = zn.p[j] - prev.slices[k + 1].p[j];
                    const Vec2 dq = zn.q[j] - prev.slices[k + 1].q[j];
                    sx += w * (dp.dot(dp) + dq.dot(dq));
                }
                delta = std::max(delta, std::sqrt(sx));
            }
            std::swap(prev, next);
            if (delta < picard_tol) return prev;
            if (m == max_iter - 1)
            {
                const double ratio = delta_prev > 0.0 ? delta / delta_prev : 1.0;
                throw ConvergenceError(
                    "solve_full: Picard iteration did not reach tol, last contraction ratio " +
                        std::to_string(ratio),
                    delta);
            }
            delta_prev = delta;
        }
        return prev;
    }

    /// Wave solution recovered from the Riemann invariants by the cumulative
    /// trapezoid of (q-p)/2 in x. Requires zero x-mean of (q-p) per slice.
    inline std::vector<std::vector<Vec2>> reconstruct_wave(const Field& field, double tol = 1e-6)
    {
        const int K = field.nt(), N = field.nx();
        const double h = 1.0 / N;
        std::vector<std::vector<Vec2>> w(K + 1, std::vector<Vec2>(N + 1));
        for (int k = 0; k <= K; ++k)
        {
            const StateH& z = field.at(k);
            Vec2 mean{0.0, 0.0};
            for (int j = 0; j <= N; ++j)
            {
                const double wt = (j == 0 || j == N) ? 0.5 * h : h;
                mean = mean + wt * (z.q[j] - z.p[j]);
            }
            double scale = 0.0;
            for (int j = 0; j <= N; ++j)
                scale = std::max(scale, (z.q[j] - z.p[j]).norm());
            if (mean.norm() > tol * std::max(1.0, scale))
                throw InputError("reconstruct_wave: (q-p) has nonzero x-mean at slice " +
                                     std::to_string(k) + ", defect " + std::to_string(mean.norm()),
                                 mean.norm());
            w[k][0] = Vec2{};
            for (int j = 1; j <= N; ++j)
            {
                const Vec2 f0 = 0.5 * (z.q[j - 1] - z.p[j - 1]);
                const Vec2 f1 = 0.5 * (z.q[j] - z.p[j]);
                w[k][j] = w[k][j - 1] + 0.5 * h * (f0 + f1);
            }
        }
        return w;
    }

    struct DtMatrixResult
    {
        Eigen::MatrixXd matrix;          // weighted: rows observation times, cols H basis
        Eigen::VectorXd singular_values; // decreasing
    };

    /// Discretization of the compact difference operator between the complete
    /// and diagonal input maps: columns are the operator applied to the
    /// mean-zero-projected nodal basis, both solves by the same upwind scheme
    /// so their first-order parts cancel. Row/column weights make the entries
    /// approximate the L2(0,T) <- H operator.
    inline DtMatrixResult dt_matrix(const SystemSpec& spec, int nx)
    {
        const int K = detail::steps_for(spec.T, nx, "dt_matrix");
        const double h = 1.0 / nx;
        const int cols = 4 * (nx + 1);
        Eigen::MatrixXd A(K + 1, cols);

        for (int c = 0; c < cols; ++c)
        {
            StateH e = StateH::zero(nx);
            const int j = (c / 4);
            const int comp = c % 4;
            Vec2& slot = (comp < 2) ? e.p[j] : e.q[j];
            if (comp % 2 == 0) slot.x = 1.0;
            else slot.y = 1.0;
            e.project_mean_zero();

            Field full = fd_oracle(spec, e, nx, FdSystem::Full);
            Field diag = fd_oracle(spec, e, nx, FdSystem::Diagonal);
            const double wcol = (j == 0 || j == nx) ? std::sqrt(0.5 * h) : std::sqrt(h);
            for (int k = 0; k <= K; ++k)
            {
                const double wrow = std::sqrt((k == 0 || k == K) ? 0.5 * h : h);
                const double d = spec.B.dot(full.at(k).p[0] - diag.at(k).p[0]);
                A(k, c) = wrow * d / wcol;
            }
        }

        Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
        return {std::move(A), svd.singularValues()};
    }
} // namespace wavectl

#endif
