#ifndef WAVECTL_SMALLMAT_HPP
#define WAVECTL_SMALLMAT_HPP

#include <array>
#include <cmath>
#include <complex>

#include "wavectl/common.hpp"

namespace wavectl
{
    // Exact small dense linear algebra for the 2x2 coupling matrix: spectral
    // classification, closed-form exponentials, the rank test and the
    // det[B* | B* e^{rM*}] classification, plus the 4x4 Sylvester resultant
    // used by the constant-coefficient scan.

    struct Vec2
    {
        double x = 0.0, y = 0.0;

        double norm() const { return std::hypot(x, y); }
        double dot(const Vec2& o) const { return x * o.x + y * o.y; }
        Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
        Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
        Vec2 operator*(double s) const { return {x * s, y * s}; }
        /// Rotation by -pi/2; orthogonal to *this, same length.
        Vec2 perp() const { return {y, -x}; }
    };

    inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

    struct Mat2
    {
        double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

        static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
        static Mat2 diag(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }

        double trace() const { return a11 + a22; }
        double det() const { return a11 * a22 - a12 * a21; }
        double norm() const { return std::sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22); }
        Mat2 transpose() const { return {a11, a21, a12, a22}; }

        Vec2 apply(const Vec2& v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }
        Vec2 operator*(const Vec2& v) const { return apply(v); }

        Mat2 operator*(const Mat2& o) const
        {
            return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                    a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
        }
        Mat2 operator+(const Mat2& o) const { return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22}; }
        Mat2 operator-(const Mat2& o) const { return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22}; }
        Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
    };

    inline Mat2 operator*(double s, const Mat2& m) { return m * s; }

    enum class SpectralKind
    {
        DistinctReal,   // two real eigenvalues l1 != l2
        ComplexPair,    // re +- i*im, im > 0
        JordanBlock,    // one eigenvalue mu, geometric multiplicity 1
        ScalarMultiple  // M = mu*I
    };

    struct SpectralClass
    {
        SpectralKind kind;
        double l1 = 0.0, l2 = 0.0; // DistinctReal
        double re = 0.0, im = 0.0; // ComplexPair (im > 0)
        double mu = 0.0;           // JordanBlock / ScalarMultiple
        // |discriminant| landed inside the tolerance band: the classification
        // (and everything decided from it) is tolerance-sensitive.
        bool tolerance_sensitive = false;
    };

    /// Spectral classification through the discriminant of the characteristic
    /// polynomial, with tolerance tau on the Jordan/scalar split.
    inline SpectralClass classify(const Mat2& m, double tau = kTauEig)
    {
        const double tr = m.trace();
        const double disc = (m.a11 - m.a22) * (m.a11 - m.a22) + 4.0 * m.a12 * m.a21;
        const double scale = std::max(1.0, m.norm() * m.norm());

        SpectralClass c;
        if (disc > tau * scale)
        {
            c.kind = SpectralKind::DistinctReal;
            const double rt = std::sqrt(disc);
            c.l1 = 0.5 * (tr - rt);
            c.l2 = 0.5 * (tr + rt);
        }
        else if (disc < -tau * scale)
        {
            c.kind = SpectralKind::ComplexPair;
            c.re = 0.5 * tr;
            c.im = 0.5 * std::sqrt(-disc);
        }
        else
        {
            c.mu = 0.5 * tr;
            const Mat2 nil = m - Mat2::diag(c.mu, c.mu);
            c.kind = (nil.norm() <= tau * std::max(1.0, m.norm()))
                         ? SpectralKind::ScalarMultiple
                         : SpectralKind::JordanBlock;
            c.tolerance_sensitive = (disc != 0.0);
        }
        return c;
    }

    /// e^{rM} in closed form per spectral class. Identity at r = 0.
    inline Mat2 expm(const Mat2& m, double r, const SpectralClass& c)
    {
        const Mat2 id = Mat2::identity();
        switch (c.kind)
        {
            case SpectralKind::ScalarMultiple:
                return std::exp(c.mu * r) * id;
            case SpectralKind::JordanBlock:
                // (M - mu I) is nilpotent
                return std::exp(c.mu * r) * (id + r * (m - Mat2::diag(c.mu, c.mu)));
            case SpectralKind::DistinctReal:
            {
                const double e1 = std::exp(c.l1 * r), e2 = std::exp(c.l2 * r);
                const double d = c.l1 - c.l2;
                return (e1 / d) * (m - Mat2::diag(c.l2, c.l2)) -
                       (e2 / d) * (m - Mat2::diag(c.l1, c.l1));
            }
            case SpectralKind::ComplexPair:
            {
                // (M - re I)^2 = -im^2 I
                const double ea = std::exp(c.re * r);
                const double cb = std::cos(c.im * r), sb = std::sin(c.im * r);
                return ea * (cb * id + (sb / c.im) * (m - Mat2::diag(c.re, c.re)));
            }
        }
        return id; // unreachable
    }

    inline Mat2 expm(const Mat2& m, double r) { return expm(m, r, classify(m)); }

    /// Classifies once, exponentiates many times. The solvers evaluate
    /// e^{g M*} at every grid node; this keeps that O(1) small.
    class ExpmCache
    {
    public:
        explicit ExpmCache(const Mat2& m, double tau = kTauEig) : m_(m), cls_(classify(m, tau)) {}
        Mat2 operator()(double r) const { return expm(m_, r, cls_); }
        const SpectralClass& spectral() const { return cls_; }
        const Mat2& matrix() const { return m_; }

    private:
        Mat2 m_;
        SpectralClass cls_;
    };

    /// rank[B | MB] in {0,1,2}, with a relative tolerance on the determinant.
    inline int kalman_rank(const Mat2& m, const Vec2& b, double tau = kTauRank)
    {
        const Vec2 mb = m * b;
        if (b.norm() == 0.0) return 0;
        const double d = b.x * mb.y - b.y * mb.x;
        const double scale = b.norm() * std::max(mb.norm(), b.norm());
        return std::fabs(d) > tau * scale ? 2 : 1;
    }

    /// det of the 2x2 matrix with rows B* and B* e^{rM*}; equals
    /// det[B | e^{rM} B].
    inline double det_B_eB(const Mat2& m, const Vec2& b, double r)
    {
        const Vec2 eb = expm(m, r) * b;
        return b.x * eb.y - b.y * eb.x;
    }

    /// The scalar side of the det[B* | B* e^{rM*}] dichotomy: true iff the
    /// value v avoids the degenerate set of the spectral class (0 for real or
    /// defective spectra, the lattice (pi/im)Z for a complex pair).
    inline bool phi_nondegenerate(const SpectralClass& c, double v, double tau = kTauPhi)
    {
        if (c.kind == SpectralKind::ComplexPair)
        {
            const double period = M_PI / c.im;
            const double k = std::round(v / period);
            return std::fabs(v - k * period) > tau;
        }
        return std::fabs(v) > tau;
    }

    /// Signed distance-to-degeneracy used for certificate margins: |v| for
    /// real/defective spectra, distance to the lattice for a complex pair.
    inline double phi_margin(const SpectralClass& c, double v)
    {
        if (c.kind == SpectralKind::ComplexPair)
        {
            const double period = M_PI / c.im;
            const double k = std::round(v / period);
            return std::fabs(v - k * period);
        }
        return std::fabs(v);
    }

    /// Determinant of the 4x4 Sylvester matrix of the two quadratics
    ///   z^2 + a*mu_i*z + (b^2 mu_i^2 / 4 + (n_i pi)^2),   i = 1,2.
    /// Zero exactly when the quadratics share a root.
    inline std::complex<double> sylvester_det(double a, double b,
                                              std::complex<double> mu1,
                                              std::complex<double> mu2,
                                              int n1, int n2)
    {
        using C = std::complex<double>;
        const C p1 = a * mu1, p2 = a * mu2;
        const C q1 = 0.25 * b * b * mu1 * mu1 + C(double(n1) * M_PI * double(n1) * M_PI);
        const C q2 = 0.25 * b * b * mu2 * mu2 + C(double(n2) * M_PI * double(n2) * M_PI);

        C s[4][4] = {{1.0, p1, q1, 0.0},
                     {0.0, 1.0, p1, q1},
                     {1.0, p2, q2, 0.0},
                     {0.0, 1.0, p2, q2}};

        // Gaussian elimination with partial pivoting
        C det = 1.0;
        for (int col = 0; col < 4; ++col)
        {
            int piv = col;
            for (int r = col + 1; r < 4; ++r)
                if (std::abs(s[r][col]) > std::abs(s[piv][col])) piv = r;
            if (std::abs(s[piv][col]) == 0.0) return 0.0;
            if (piv != col)
            {
                for (int c = 0; c < 4; ++c) std::swap(s[piv][c], s[col][c]);
                det = -det;
            }
            det *= s[col][col];
            for (int r = col + 1; r < 4; ++r)
            {
                const C f = s[r][col] / s[col][col];
                for (int c = col; c < 4; ++c) s[r][c] -= f * s[col][c];
            }
        }
        return det;
    }
} // namespace wavectl

#endif
