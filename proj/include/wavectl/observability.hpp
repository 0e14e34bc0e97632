#ifndef WAVECTL_OBSERVABILITY_HPP
#define WAVECTL_OBSERVABILITY_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wavectl/characteristics.hpp"
#include "wavectl/common.hpp"
#include "wavectl/smallmat.hpp"
#include "wavectl/solver.hpp"

namespace wavectl
{
    // Weak-observability decisions for the diagonal (hence, modulo a compact
    // remainder, the complete) system: the stacked observation-row matrices,
    // extracted-minor criteria, the horizon-4 determinant test, the general
    // finite k-index scans, explicit non-observable data for short horizons,
    // and a singular-value counterpart of the observability constant.

    /// x -> m x 2 matrix whose rows are B* e^{f(x) M*}, some rows masked to a
    /// subinterval (zero outside it).
    struct StackMatrix
    {
        struct Row
        {
            std::function<double(double)> f_arg; // x -> exponent value
            bool masked = false;
            double lo = 0.0, hi = 1.0;
        };

        Vec2 B;
        ExpmCache E; // bound to M, so row(x) = e^{f M} B
        std::vector<Row> rows;

        StackMatrix(const Mat2& M, const Vec2& B) : B(B), E(M) {}

        int m() const { return int(rows.size()); }

        Vec2 row(int i, double x) const
        {
            const Row& r = rows[i];
            if (r.masked && (x < r.lo || x >= r.hi)) return Vec2{};
            return E(r.f_arg(x)) * B;
        }

        Eigen::MatrixXd eval(double x) const
        {
            Eigen::MatrixXd out(m(), 2);
            for (int i = 0; i < m(); ++i)
            {
                const Vec2 r = row(i, x);
                out(i, 0) = r.x;
                out(i, 1) = r.y;
            }
            return out;
        }
    };

    /// Parity of the horizon: which half-open unit strip floor(T) lands in.
    inline bool horizon_even(double T) { return (int(std::floor(T + 1e-12)) % 2) == 0; }
    inline int horizon_n(double T) { const int ft = int(std::floor(T + 1e-12)); return ft / 2; }

    /// Observation-row stack acting on the p-component of the initial data.
    inline StackMatrix make_stack_P(const SystemSpec& spec, const PhiTable& tab, double T)
    {
        StackMatrix s(spec.M, spec.B);
        const int n = horizon_n(T);
        for (int k = 0; k <= n - 1; ++k)
            s.rows.push_back({[&tab, k](double x)
                              { return tab.f_n(k, 2.0 * k + 2.0 - x).value; }});
        if (!horizon_even(T))
        {
            StackMatrix::Row r;
            r.f_arg = [&tab, n](double x) { return tab.f_n(n, 2.0 * n + 2.0 - x).value; };
            r.masked = true;
            r.lo = 2.0 * n + 2.0 - T;
            r.hi = 1.0;
            s.rows.push_back(std::move(r));
        }
        return s;
    }

    /// Observation-row stack acting on the q-component of the initial data.
    inline StackMatrix make_stack_Q(const SystemSpec& spec, const PhiTable& tab, double T)
    {
        StackMatrix s(spec.M, spec.B);
        const int n = horizon_n(T);
        const int kmax = horizon_even(T) ? n - 1 : n;
        for (int k = 0; k <= kmax; ++k)
            s.rows.push_back({[&tab, k](double x)
                              { return tab.f_n(k, x + 2.0 * k).value; }});
        if (horizon_even(T))
        {
            StackMatrix::Row r;
            r.f_arg = [&tab, n](double x) { return tab.f_n(n, x + 2.0 * n).value; };
            r.masked = true;
            r.lo = 0.0;
            r.hi = T - 2.0 * n;
            s.rows.push_back(std::move(r));
        }
        return s;
    }

    struct MinorReport
    {
        bool ok = false;
        // per grid point: best 2x2 minor (row pair and relative determinant)
        std::vector<std::pair<int, int>> best_pair;
        std::vector<double> best_margin;
        double min_margin = 0.0;
    };

    /// Extracted-minor criterion for the multiplication operator attached to
    /// the stack: at every grid x some 2x2 minor must be nonsingular relative
    /// to its row norms.
    inline MinorReport minor_criterion(const StackMatrix& mat, const std::vector<double>& xs,
                                       double tau = kTauMinor)
    {
        MinorReport rep;
        rep.ok = true;
        rep.min_margin = std::numeric_limits<double>::infinity();
        for (double x : xs)
        {
            double best = 0.0;
            std::pair<int, int> arg{-1, -1};
            for (int i = 0; i < mat.m(); ++i)
            {
                const Vec2 ri = mat.row(i, x);
                for (int j = i + 1; j < mat.m(); ++j)
                {
                    const Vec2 rj = mat.row(j, x);
                    const double den = ri.norm() * rj.norm();
                    if (den == 0.0) continue;
                    const double rel = std::fabs(ri.x * rj.y - ri.y * rj.x) / den;
                    if (rel > best)
                    {
                        best = rel;
                        arg = {i, j};
                    }
                }
            }
            rep.best_pair.push_back(arg);
            rep.best_margin.push_back(best);
            rep.min_margin = std::min(rep.min_margin, best);
            if (best <= tau) rep.ok = false;
        }
        return rep;
    }

    enum class ObsVerdict
    {
        WeaklyObservable,
        NotObservable,
        Inconclusive
    };

    inline const char* to_string(ObsVerdict v)
    {
        switch (v)
        {
            case ObsVerdict::WeaklyObservable: return "weakly-observable";
            case ObsVerdict::NotObservable: return "not-observable";
            case ObsVerdict::Inconclusive: return "inconclusive";
        }
        return "?";
    }

    struct ObsCertificate
    {
        ObsVerdict verdict = ObsVerdict::Inconclusive;
        double T = 0.0;
        std::string parity;
        int grid_points = 0;
        int rank = 0;
        bool tolerance_sensitive = false;
        double min_margin = 0.0;
        double tau_phi = kTauPhi;

        struct Condition
        {
            std::string name;
            double x_lo = 0.0, x_hi = 1.0;
            int k_lo = 0, k_hi = 0;
            std::vector<double> xs;
            std::vector<int> first_k;    // -1 when no index passes
            std::vector<double> margins; // max over the k-range
        };
        std::vector<Condition> conditions;

        struct Failure
        {
            double x = 0.0;
            double arg = 0.0; // the t at which the scalar condition failed
            std::string condition;
        };
        std::optional<Failure> failure;

        std::optional<StateH> witness; // populated for T < 4
    };

    namespace detail
    {
        inline ObsVerdict band_verdict(double min_margin, double tau)
        {
            if (min_margin <= tau) return ObsVerdict::NotObservable;
            if (min_margin <= 10.0 * tau) return ObsVerdict::Inconclusive;
            return ObsVerdict::WeaklyObservable;
        }
    }

    /// Horizon-4 test: the scalar line integral over one round trip must stay
    /// off the degenerate set of M* for every t in [2,4], and the rank
    /// condition must hold.
    inline ObsCertificate check_T4(const SystemSpec& spec, int grid_points = 513,
                                   double tau = kTauPhi, const PhiTable* table = nullptr)
    {
        ObsCertificate cert;
        cert.T = 4.0;
        cert.parity = "T=4";
        cert.grid_points = grid_points;
        cert.tau_phi = tau;

        const CoeffFields f = spec.fields();
        PhiTable local(f);
        const PhiTable& tab = table ? *table : local;
        const SpectralClass cls = classify(spec.Mstar());
        cert.tolerance_sensitive = cls.tolerance_sensitive;
        cert.rank = kalman_rank(spec.M, spec.B);
        if (cert.rank < 2)
        {
            cert.verdict = ObsVerdict::NotObservable;
            cert.failure = ObsCertificate::Failure{0.0, 0.0, "rank[B|MB] < 2"};
            return cert;
        }

        ObsCertificate::Condition cond;
        cond.name = "phi(t) nondegenerate on [2,4]";
        cond.x_lo = 2.0;
        cond.x_hi = 4.0;
        cond.xs = linspace(2.0, 4.0, grid_points);
        double minm = std::numeric_limits<double>::infinity();
        std::optional<ObsCertificate::Failure> fail;
        for (double t : cond.xs)
        {
            const double v = tab.phi(t).value;
            const double m = phi_margin(cls, v);
            cond.first_k.push_back(m > tau ? 0 : -1);
            cond.margins.push_back(m);
            if (m < minm)
            {
                minm = m;
                if (m <= tau && !fail) fail = ObsCertificate::Failure{t, t, cond.name};
            }
        }
        cert.conditions.push_back(std::move(cond));
        cert.min_margin = minm;
        cert.verdict = detail::band_verdict(minm, tau);
        if (cert.verdict == ObsVerdict::NotObservable) cert.failure = fail;
        if (cert.tolerance_sensitive && cert.verdict == ObsVerdict::WeaklyObservable)
            cert.verdict = ObsVerdict::Inconclusive;
        return cert;
    }

    /// Explicit unit-norm initial datum annihilating the diagonal boundary
    /// observation for a short horizon T < 4. Pointwise orthogonal to the
    /// observation directions on the windows the trace actually sees, with a
    /// support restriction once second-trip rows enter, then projected to the
    /// mean-zero space and renormalized.
    inline StateH witness_T_lt_4(const SystemSpec& spec, double T, int nx = 256)
    {
        if (T >= 4.0) throw InputError("witness_T_lt_4: requires T < 4");
        if (spec.B.norm() == 0.0)
            throw Error("witness_T_lt_4: zero control vector has no orthogonal direction");

        SystemSpec s = spec;
        s.T = T;
        const CoeffFields f = s.fields();
        PhiTable tab(f, 1e-12);
        const ExpmCache E(spec.M);
        const int N = nx;
        const double h = 1.0 / N;

        // observation directions e^{f0 M} B and their pointwise orthogonals
        std::vector<Vec2> wp(N + 1), wq(N + 1);
        for (int j = 0; j <= N; ++j)
        {
            const double x = j * h;
            const Vec2 dq = E(tab.f_n(0, x).value) * spec.B;
            const Vec2 dp = E(tab.f_n(0, 2.0 - x).value) * spec.B;
            if (dq.norm() == 0.0 || dp.norm() == 0.0)
                throw Error("witness_T_lt_4: observation direction vanished");
            wq[j] = dq.perp() * (1.0 / dq.norm());
            wp[j] = dp.perp() * (1.0 / dp.norm());
        }
        // keep the two scalar multipliers tied so the free components of p
        // and q coincide; for a cascade pair this also silences the complete
        // system's observation, not just the diagonal one
        for (int j = 0; j <= N; ++j)
        {
            if (std::fabs(wq[j].x) > 1e-12) wq[j] = wq[j] * (1.0 / wq[j].x);
            if (std::fabs(wp[j].x) > 1e-12) wp[j] = wp[j] * (1.0 / wp[j].x);
        }

        const bool q_active = T < 3.0; // beyond that the q rows force q0 = 0
        double sup_lo = 0.0, sup_hi = 1.0;
        if (T >= 2.0 && T < 3.0) sup_lo = T - 2.0;
        if (T >= 3.0) sup_hi = 4.0 - T;

        auto window = [&](double x)
        {
            if (x <= sup_lo || x >= sup_hi) return 0.0;
            const double u = (x - sup_lo) / (sup_hi - sup_lo);
            const double sw = std::sin(M_PI * u);
            return sw * sw;
        };

        // seed multiplier; oscillatory once the support restriction bites so
        // the running integrals the complete system sees stay small
        std::vector<double> g(N + 1);
        const double width = sup_hi - sup_lo;
        for (int j = 0; j <= N; ++j)
        {
            const double x = j * h;
            if (T >= 3.0)
                g[j] = window(x) * std::sin(2.0 * M_PI * 8.0 * (x - sup_lo) / width);
            else if (T >= 2.0)
                g[j] = window(x);
            else
                g[j] = 1.0 + 0.5 * std::cos(M_PI * x);
        }

        // mean-zero constraints are linear in the multiplier; project onto
        // their null space without leaving the pointwise-orthogonal family
        std::vector<Vec2> dir(N + 1);
        for (int j = 0; j <= N; ++j)
            dir[j] = q_active ? (wp[j] - wq[j]) : wp[j];
        auto wdot = [&](const std::vector<double>& u, int comp)
        {
            double acc = 0.0;
            for (int j = 0; j <= N; ++j)
            {
                const double w = (j == 0 || j == N) ? 0.5 * h : h;
                const double d = comp == 0 ? dir[j].x : dir[j].y;
                acc += w * u[j] * d;
            }
            return acc;
        };
        // Gram system for the two constraint directions, restricted to the
        // support window (so the projection cannot widen the support)
        std::vector<double> d0(N + 1), d1(N + 1);
        for (int j = 0; j <= N; ++j)
        {
            const double mask = (T >= 2.0) ? (window(j * h) > 0.0 ? 1.0 : 0.0) : 1.0;
            d0[j] = dir[j].x * mask;
            d1[j] = dir[j].y * mask;
        }
        auto dot_plain = [&](const std::vector<double>& u, const std::vector<double>& v)
        {
            double acc = 0.0;
            for (int j = 0; j <= N; ++j)
            {
                const double w = (j == 0 || j == N) ? 0.5 * h : h;
                acc += w * u[j] * v[j];
            }
            return acc;
        };
        Eigen::Matrix2d G;
        G << dot_plain(d0, d0), dot_plain(d0, d1), dot_plain(d1, d0), dot_plain(d1, d1);
        Eigen::Vector2d rhs(wdot(g, 0), wdot(g, 1));
        Eigen::Vector2d coef = Eigen::Vector2d::Zero();
        Eigen::FullPivLU<Eigen::Matrix2d> lu(G);
        lu.setThreshold(1e-12);
        if (lu.rank() == 2)
            coef = lu.solve(rhs);
        else if (G(0, 0) > 1e-24 || G(1, 1) > 1e-24)
        {
            // rank-one constraint set
            const int i = G(0, 0) >= G(1, 1) ? 0 : 1;
            const auto& di = (i == 0) ? d0 : d1;
            coef(i) = rhs(i) / dot_plain(di, di);
            for (int j = 0; j <= N; ++j) g[j] -= coef(i) * di[j];
            coef.setZero();
        }
        for (int j = 0; j <= N; ++j) g[j] -= coef(0) * d0[j] + coef(1) * d1[j];

        StateH z = StateH::zero(N);
        for (int j = 0; j <= N; ++j)
        {
            z.p[j] = g[j] * wp[j];
            if (q_active) z.q[j] = g[j] * wq[j];
        }
        const double nrm = z.norm();
        if (nrm < 1e-12)
            throw Error("witness_T_lt_4: seed collapsed under the mean-zero projection");
        for (int j = 0; j <= N; ++j)
        {
            z.p[j] = z.p[j] * (1.0 / nrm);
            z.q[j] = z.q[j] * (1.0 / nrm);
        }
        return z;
    }

    /// Necessary-and-sufficient scan for weak observability at horizon T: the
    /// rank test plus, per grid point of the prescribed x-ranges, a finite
    /// search over round-trip indices k for a nondegenerate line-integral
    /// value. Records the first passing k per x and the worst margin.
    inline ObsCertificate check_weak_observability(const SystemSpec& spec, double T,
                                                   int grid_points = 513, double tau = kTauPhi,
                                                   int witness_nx = 256)
    {
        if (T <= 0.0) throw InputError("check_weak_observability: T must be positive");

        if (T < 4.0)
        {
            ObsCertificate cert;
            cert.T = T;
            cert.parity = "T<4";
            cert.grid_points = grid_points;
            cert.rank = kalman_rank(spec.M, spec.B);
            cert.verdict = ObsVerdict::NotObservable;
            cert.min_margin = 0.0;
            cert.failure = ObsCertificate::Failure{
                0.0, 0.0, "short horizon: every datum in the annihilator space is invisible"};
            cert.witness = witness_T_lt_4(spec, T, witness_nx);
            return cert;
        }
        if (std::fabs(T - 4.0) < 1e-12)
        {
            ObsCertificate cert = check_T4(spec, grid_points, tau);
            if (cert.verdict == ObsVerdict::NotObservable && !horizon_even(T))
                cert.parity = "T=4";
            return cert;
        }

        ObsCertificate cert;
        cert.T = T;
        cert.grid_points = grid_points;
        cert.tau_phi = tau;
        const CoeffFields f = spec.fields();
        PhiTable tab(f);
        const SpectralClass cls = classify(spec.Mstar());
        cert.tolerance_sensitive = cls.tolerance_sensitive;
        cert.rank = kalman_rank(spec.M, spec.B);
        if (cert.rank < 2)
        {
            cert.verdict = ObsVerdict::NotObservable;
            cert.failure = ObsCertificate::Failure{0.0, 0.0, "rank[B|MB] < 2"};
            cert.parity = horizon_even(T) ? "2n<=T<2n+1" : "2n+1<=T<2n+2";
            return cert;
        }

        const int n = horizon_n(T);
        struct Scan
        {
            std::string name;
            double lo, hi;
            int klo, khi;
            bool arg_minus; // arg = 2k - x when set, x + 2k otherwise
        };
        std::vector<Scan> scans;
        if (horizon_even(T))
        {
            cert.parity = "2n<=T<2n+1";
            scans.push_back({"phi(2k-x), x in [0,1]", 0.0, 1.0, 2, n, true});
            if (T - 2.0 * n > 0.0)
                scans.push_back({"phi(x+2k), x in [0,T-2n)", 0.0, T - 2.0 * n, 1, n, false});
            scans.push_back({"phi(x+2k), x in [T-2n,1)", T - 2.0 * n, 1.0, 1, n - 1, false});
        }
        else
        {
            cert.parity = "2n+1<=T<2n+2";
            scans.push_back({"phi(2k-x), x in [2n+2-T,1)", 2.0 * n + 2.0 - T, 1.0, 2, n + 1, true});
            if (2.0 * n + 2.0 - T > 0.0)
                scans.push_back({"phi(2k-x), x in [0,2n+2-T)", 0.0, 2.0 * n + 2.0 - T, 2, n, true});
            scans.push_back({"phi(x+2k), x in [0,1]", 0.0, 1.0, 1, n, false});
        }

        double minm = std::numeric_limits<double>::infinity();
        std::optional<ObsCertificate::Failure> fail;
        for (const auto& sc : scans)
        {
            ObsCertificate::Condition cond;
            cond.name = sc.name;
            cond.x_lo = sc.lo;
            cond.x_hi = sc.hi;
            cond.k_lo = sc.klo;
            cond.k_hi = sc.khi;
            cond.xs = linspace(sc.lo, sc.hi, grid_points);
            for (double x : cond.xs)
            {
                int first = -1;
                double best = 0.0;
                double best_arg = 0.0;
                for (int k = sc.klo; k <= sc.khi; ++k)
                {
                    const double arg = sc.arg_minus ? 2.0 * k - x : x + 2.0 * k;
                    const double m = phi_margin(cls, tab.phi(arg).value);
                    if (m > best)
                    {
                        best = m;
                        best_arg = arg;
                    }
                    if (first < 0 && m > tau) first = k;
                }
                cond.first_k.push_back(first);
                cond.margins.push_back(best);
                if (best < minm)
                {
                    minm = best;
                    if (best <= tau && !fail)
                        fail = ObsCertificate::Failure{x, best_arg, sc.name};
                }
            }
            cert.conditions.push_back(std::move(cond));
        }
        cert.min_margin = minm;
        cert.verdict = detail::band_verdict(minm, tau);
        if (cert.verdict == ObsVerdict::NotObservable) cert.failure = fail;
        if (cert.tolerance_sensitive && cert.verdict == ObsVerdict::WeaklyObservable)
            cert.verdict = ObsVerdict::Inconclusive;
        return cert;
    }

    namespace detail
    {
        // Smallest singular value of a block-diagonal quadratic form (4x4
        // blocks, one per grid node) restricted to the null space of a 2-row
        // constraint, by inverse iteration on the bordered system.
        inline double min_sigma_blockdiag(const std::vector<Eigen::Matrix4d>& blocks,
                                          const Eigen::MatrixXd& C)
        {
            const int nb = int(blocks.size());
            const int dim = 4 * nb;
            double scale = 0.0;
            for (const auto& b : blocks) scale = std::max(scale, b.trace());
            const double delta = std::max(scale, 1.0) * 1e-13;

            std::vector<Eigen::Matrix4d> inv(nb);
            for (int i = 0; i < nb; ++i)
                inv[i] = (blocks[i] + delta * Eigen::Matrix4d::Identity()).inverse();

            auto solveD = [&](const Eigen::VectorXd& y)
            {
                Eigen::VectorXd z(dim);
                for (int i = 0; i < nb; ++i)
                    z.segment<4>(4 * i) = inv[i] * y.segment<4>(4 * i);
                return z;
            };

            // Schur complement of the bordered system
            Eigen::MatrixXd DiCt(dim, 2);
            for (int c = 0; c < 2; ++c) DiCt.col(c) = solveD(C.row(c).transpose());
            Eigen::Matrix2d S = C * DiCt;
            Eigen::FullPivLU<Eigen::Matrix2d> slu(S);

            std::mt19937 rng(20240517);
            std::normal_distribution<double> gauss;
            Eigen::VectorXd v(dim);
            for (int i = 0; i < dim; ++i) v(i) = gauss(rng);
            // start inside the constraint space
            Eigen::Matrix2d cct = C * C.transpose();
            v -= C.transpose() * cct.ldlt().solve(C * v);
            v.normalize();

            double lam = 0.0;
            for (int it = 0; it < 200; ++it)
            {
                Eigen::VectorXd u = solveD(v);
                Eigen::Vector2d mult = slu.solve(C * u);
                Eigen::VectorXd z = u - DiCt * mult;
                z.normalize();
                Eigen::VectorXd Dz(dim);
                for (int i = 0; i < nb; ++i)
                    Dz.segment<4>(4 * i) = blocks[i] * z.segment<4>(4 * i);
                const double lam_new = z.dot(Dz);
                const bool done = it > 5 && std::fabs(lam_new - lam) <=
                                                1e-12 * std::max(1.0, std::fabs(lam_new));
                lam = lam_new;
                v = z;
                if (done) break;
            }
            return std::sqrt(std::max(lam, 0.0));
        }
    } // namespace detail

    /// Smallest singular value of the stacked discrete observation map on the
    /// mean-zero space: the numerical counterpart of the observability
    /// constant (which is sigma_min^{-2}).
    inline double svd_observability_constant(const SystemSpec& spec, double T, int nx)
    {
        SystemSpec s = spec;
        s.T = T;
        const CoeffFields f = s.fields();
        PhiTable tab(f);
        StackMatrix P = make_stack_P(s, tab, T);
        StackMatrix Q = make_stack_Q(s, tab, T);

        const int N = nx;
        const double h = 1.0 / N;
        std::vector<Eigen::Matrix4d> blocks(N + 1, Eigen::Matrix4d::Zero());
        Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2, 4 * (N + 1));
        for (int j = 0; j <= N; ++j)
        {
            const double x = j * h;
            Eigen::Matrix2d bp = Eigen::Matrix2d::Zero(), bq = Eigen::Matrix2d::Zero();
            for (int i = 0; i < P.m(); ++i)
            {
                const Vec2 r = P.row(i, x);
                Eigen::Vector2d rv(r.x, r.y);
                bp += rv * rv.transpose();
            }
            for (int i = 0; i < Q.m(); ++i)
            {
                const Vec2 r = Q.row(i, x);
                Eigen::Vector2d rv(r.x, r.y);
                bq += rv * rv.transpose();
            }
            blocks[j].topLeftCorner<2, 2>() = bp;
            blocks[j].bottomRightCorner<2, 2>() = bq;
            const double sw = std::sqrt((j == 0 || j == N) ? 0.5 * h : h);
            C(0, 4 * j + 0) = sw;
            C(1, 4 * j + 1) = sw;
            C(0, 4 * j + 2) = -sw;
            C(1, 4 * j + 3) = -sw;
        }
        return detail::min_sigma_blockdiag(blocks, C);
    }
} // namespace wavectl

#endif
