#pragma once

// Finite Weyl system on C^N: shift operators, Weyl operators with exact
// phases, the representation phases (u, v) compatible with a cat map, the
// Weyl-coefficient decomposition and the quantized dynamics
// Theta_N(W(p)) = W(A p) realized by label transport.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "catmap/error.hpp"
#include "catmap/fft.hpp"
#include "catmap/matrix.hpp"
#include "catmap/torus.hpp"

namespace catmap {

/// Reduced fraction num/den with den > 0.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational make(std::int64_t n, std::int64_t d) {
        if (d == 0) throw InvalidArgument("rational: zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        const std::int64_t g = std::gcd(n, d);
        return {n / g, d / g};
    }

    /// Representative in [0, 1).
    Rational frac() const {
        std::int64_t r = num % den;
        if (r < 0) r += den;
        return make(r, den);
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Rational&, const Rational&) = default;
};

struct WeylLabel {
    std::int64_t n1 = 0;
    std::int64_t n2 = 0;

    friend bool operator==(const WeylLabel&, const WeylLabel&) = default;
    friend WeylLabel operator+(WeylLabel a, WeylLabel b) { return {a.n1 + b.n1, a.n2 + b.n2}; }
    friend WeylLabel operator-(WeylLabel a, WeylLabel b) { return {a.n1 - b.n1, a.n2 - b.n2}; }
    friend WeylLabel operator-(WeylLabel a) { return {-a.n1, -a.n2}; }
    friend WeylLabel operator*(std::int64_t s, WeylLabel a) { return {s * a.n1, s * a.n2}; }
};

inline WeylLabel operator*(const IntMatrix2& m, WeylLabel n) {
    return {m.a * n.n1 + m.b * n.n2, m.c * n.n1 + m.d * n.n2};
}

/// sigma(n, m) = n1 m2 - n2 m1
inline std::int64_t symplectic(WeylLabel n, WeylLabel m) { return n.n1 * m.n2 - n.n2 * m.n1; }

inline std::int64_t mod_floor(std::int64_t a, std::int64_t n) {
    std::int64_t r = a % n;
    return r < 0 ? r + n : r;
}

/// Dimension N and representation phases (u, v) in [0,1), kept as exact
/// rationals so that every Weyl phase is an exact rational multiple of pi.
class WeylSystem {
public:
    explicit WeylSystem(std::int64_t N, Rational u = {}, Rational v = {}) : N_(N), u_(u.frac()), v_(v.frac()) {
        if (N < 2) throw InvalidArgument("weyl system: N must be >= 2");
        den_ = std::lcm(u_.den, v_.den);
        uq_ = u_.num * (den_ / u_.den);
        vq_ = v_.num * (den_ / v_.den);
        period_ = 2 * N_ * den_;
        table_.resize(static_cast<std::size_t>(period_));
        for (std::int64_t t = 0; t < period_; ++t) {
            const double ang = std::numbers::pi * static_cast<double>(t) / static_cast<double>(N_ * den_);
            table_[static_cast<std::size_t>(t)] = std::polar(1.0, ang);
        }
    }

    std::int64_t N() const { return N_; }
    std::size_t dim() const { return static_cast<std::size_t>(N_); }
    const Rational& u() const { return u_; }
    const Rational& v() const { return v_; }
    /// Common denominator of u and v.
    std::int64_t den() const { return den_; }
    std::int64_t u_scaled() const { return uq_; }
    std::int64_t v_scaled() const { return vq_; }

    /// exp(i pi t / (N den)) for any integer t.
    cplx phase(__int128 t) const {
        __int128 r = t % period_;
        if (r < 0) r += period_;
        return table_[static_cast<std::size_t>(r)];
    }

    /// Exponent t (units of pi/(N den)) of the Weyl prefactor
    /// exp(i pi (-n1 n2 + 2 n1 u + 2 n2 v) / N).
    __int128 prefactor_exponent(WeylLabel n) const {
        return -static_cast<__int128>(n.n1) * n.n2 * den_ + 2 * static_cast<__int128>(n.n1) * uq_ +
               2 * static_cast<__int128>(n.n2) * vq_;
    }

    /// Exponent (units of pi/den) of the folding scalar W(N n) = exp(i pi (N n1 n2 + 2 n1 u + 2 n2 v)).
    std::int64_t folding_exponent(WeylLabel n) const {
        const __int128 t = static_cast<__int128>(N_) * n.n1 * n.n2 * den_ + 2 * static_cast<__int128>(n.n1) * uq_ +
                           2 * static_cast<__int128>(n.n2) * vq_;
        return static_cast<std::int64_t>(((t % (2 * den_)) + 2 * den_) % (2 * den_));
    }

    std::size_t index(WeylLabel r) const { return static_cast<std::size_t>(r.n1 * N_ + r.n2); }
    WeylLabel label(std::size_t idx) const {
        return {static_cast<std::int64_t>(idx) / N_, static_cast<std::int64_t>(idx) % N_};
    }

private:
    std::int64_t N_;
    Rational u_, v_;
    std::int64_t den_ = 1, uq_ = 0, vq_ = 0, period_ = 2;
    std::vector<cplx> table_;
};

/// Solves (a c; b d)(u, v) = (u, v) + (N/2)(ac, bd) mod 1 exactly.
/// (A^T - 1) has determinant 2 - (a + d) != 0; when |det| > 1 there are
/// several solutions mod 1 and the lexicographically smallest is returned.
inline std::pair<Rational, Rational> solve_phases(const ToralAutomorphism& A, std::int64_t N) {
    if (N < 2) throw InvalidArgument("solve_phases: N must be >= 2");
    const std::int64_t a = A.a(), b = A.b(), c = A.c(), d = A.d();
    const std::int64_t det = 2 - (a + d);
    const std::int64_t adet = std::llabs(det);
    // (u, v) = adj(M) (R + 2z) / (2 det), M = A^T - 1, R = N (ac, bd).
    const std::int64_t R1 = mod_floor(N * a * c, 2 * adet);
    const std::int64_t R2 = mod_floor(N * b * d, 2 * adet);
    std::pair<Rational, Rational> best{Rational{1, 1}, Rational{1, 1}};
    bool found = false;
    for (std::int64_t z1 = 0; z1 < adet; ++z1) {
        for (std::int64_t z2 = 0; z2 < adet; ++z2) {
            const std::int64_t r1 = R1 + 2 * z1, r2 = R2 + 2 * z2;
            const Rational u = Rational::make((d - 1) * r1 - c * r2, 2 * det).frac();
            const Rational v = Rational::make(-b * r1 + (a - 1) * r2, 2 * det).frac();
            const bool smaller = !found || u.value() < best.first.value() ||
                                 (u == best.first && v.value() < best.second.value());
            if (smaller) {
                best = {u, v};
                found = true;
            }
        }
    }
    return best;
}

inline WeylSystem weyl_system_for(const ToralAutomorphism& A, std::int64_t N) {
    const auto [u, v] = solve_phases(A, N);
    return WeylSystem(N, u, v);
}

/// W(n)|j> = exp(i pi (-n1 n2 + 2 n1 u + 2 n2 v)/N) exp(-2 pi i j n2 / N) |j + n1>
inline ComplexMatrix weyl_matrix(const WeylSystem& sys, WeylLabel n) {
    const std::int64_t N = sys.N();
    ComplexMatrix w(sys.dim(), sys.dim());
    const __int128 pre = sys.prefactor_exponent(n);
    for (std::int64_t j = 0; j < N; ++j) {
        const __int128 t = pre - 2 * static_cast<__int128>(j) * n.n2 * sys.den();
        w(static_cast<std::size_t>(mod_floor(j + n.n1, N)), static_cast<std::size_t>(j)) = sys.phase(t);
    }
    return w;
}

/// W(n) x without forming the matrix.
inline ComplexVector weyl_apply(const WeylSystem& sys, WeylLabel n, std::span<const cplx> x) {
    const std::int64_t N = sys.N();
    detail::require(x.size() == sys.dim(), "weyl_apply: dimension mismatch");
    ComplexVector y(sys.dim());
    const __int128 pre = sys.prefactor_exponent(n);
    for (std::int64_t j = 0; j < N; ++j) {
        const __int128 t = pre - 2 * static_cast<__int128>(j) * n.n2 * sys.den();
        y[static_cast<std::size_t>(mod_floor(j + n.n1, N))] = detail::mul(sys.phase(t), x[static_cast<std::size_t>(j)]);
    }
    return y;
}

/// U|j> = e^{2 pi i u/N}|j+1>, V|j> = e^{2 pi i (v - j)/N}|j>.
inline std::pair<ComplexMatrix, ComplexMatrix> shift_operators(const WeylSystem& sys) {
    const std::int64_t N = sys.N();
    ComplexMatrix U(sys.dim(), sys.dim()), V(sys.dim(), sys.dim());
    // Exponents in units of pi/(N den).
    for (std::int64_t j = 0; j < N; ++j) {
        U(static_cast<std::size_t>((j + 1) % N), static_cast<std::size_t>(j)) = sys.phase(2 * static_cast<__int128>(sys.u_scaled()));
        V(static_cast<std::size_t>(j), static_cast<std::size_t>(j)) =
            sys.phase(2 * (static_cast<__int128>(sys.v_scaled()) - static_cast<__int128>(j) * sys.den()));
    }
    return {std::move(U), std::move(V)};
}

/// Scalar s with W(N n) = s * identity.
inline cplx folding_phase(const WeylSystem& sys, WeylLabel n) {
    return std::polar(1.0, std::numbers::pi * static_cast<double>(sys.folding_exponent(n)) /
                               static_cast<double>(sys.den()));
}

/// Reduction of an arbitrary label to the fundamental domain [0,N)^2:
/// W(n) = exp(i pi exponent / den) W(reduced).
struct ReducedLabel {
    WeylLabel reduced;
    std::int64_t exponent = 0; // mod 2*den
};

inline ReducedLabel reduce_label(const WeylSystem& sys, WeylLabel n) {
    const std::int64_t N = sys.N();
    const WeylLabel r{mod_floor(n.n1, N), mod_floor(n.n2, N)};
    const WeylLabel q{(n.n1 - r.n1) / N, (n.n2 - r.n2) / N};
    // W(r + N q) = exp(-i pi sigma(r, q)) W(N q) W(r)
    const std::int64_t two_den = 2 * sys.den();
    const __int128 sig = static_cast<__int128>(r.n1) * q.n2 - static_cast<__int128>(r.n2) * q.n1;
    __int128 e = -sig * sys.den() + sys.folding_exponent(q);
    e %= two_den;
    if (e < 0) e += two_den;
    return {r, static_cast<std::int64_t>(e)};
}

/// Representation phases are compatible with A iff [W(e_i)]^N = [W(A e_i)]^N, i = 1, 2.
inline bool phases_consistent(const WeylSystem& sys, const ToralAutomorphism& A) {
    const IntMatrix2& m = A.matrix();
    return sys.folding_exponent({1, 0}) == sys.folding_exponent(m * WeylLabel{1, 0}) &&
           sys.folding_exponent({0, 1}) == sys.folding_exponent(m * WeylLabel{0, 1});
}

/// Coefficients c_m, m in [0,N)^2 (index m1*N + m2), of X = sum_m c_m W(m).
struct WeylCoefficients {
    std::int64_t N = 0;
    std::vector<cplx> c;

    cplx operator[](WeylLabel m) const { return c[static_cast<std::size_t>(m.n1 * N + m.n2)]; }
};

/// c_m = tau_N(X W(-m)), computed one shift diagonal at a time with an FFT.
inline WeylCoefficients weyl_decompose(const WeylSystem& sys, const ComplexMatrix& X) {
    const std::int64_t N = sys.N();
    detail::require(X.rows() == sys.dim() && X.cols() == sys.dim(), "weyl_decompose: matrix is not N x N");
    WeylCoefficients out{N, std::vector<cplx>(static_cast<std::size_t>(N * N))};
    ComplexVector diag(sys.dim()), spec(sys.dim());
    const double inv = 1.0 / static_cast<double>(N);
    for (std::int64_t m1 = 0; m1 < N; ++m1) {
        for (std::int64_t j = 0; j < N; ++j)
            diag[static_cast<std::size_t>(j)] = X(static_cast<std::size_t>((j + m1) % N), static_cast<std::size_t>(j));
        fft::backward(diag, spec);
        for (std::int64_t m2 = 0; m2 < N; ++m2) {
            const cplx pre = sys.phase(sys.prefactor_exponent({m1, m2}));
            out.c[static_cast<std::size_t>(m1 * N + m2)] = detail::cmul(pre, spec[static_cast<std::size_t>(m2)]) * inv;
        }
    }
    return out;
}

/// sum_m c_m W(m)
inline ComplexMatrix weyl_reconstruct(const WeylSystem& sys, const WeylCoefficients& coeffs) {
    const std::int64_t N = sys.N();
    detail::require(coeffs.N == N, "weyl_reconstruct: dimension mismatch");
    ComplexMatrix X(sys.dim(), sys.dim());
    ComplexVector g(sys.dim()), h(sys.dim());
    for (std::int64_t m1 = 0; m1 < N; ++m1) {
        for (std::int64_t m2 = 0; m2 < N; ++m2)
            g[static_cast<std::size_t>(m2)] = detail::mul(coeffs.c[static_cast<std::size_t>(m1 * N + m2)],
                                                          sys.phase(sys.prefactor_exponent({m1, m2})));
        fft::forward(g, h);
        for (std::int64_t j = 0; j < N; ++j)
            X(static_cast<std::size_t>((j + m1) % N), static_cast<std::size_t>(j)) = h[static_cast<std::size_t>(j)];
    }
    return X;
}

/// Quantized cat-map automorphism Theta_N(W(p)) = W(A p). Theta_N^k is
/// applied to Weyl coefficients by moving each label along A and folding it
/// back into [0,N)^2 with the exact folding phase; no propagator is built.
class WeylDynamics {
public:
    WeylDynamics(WeylSystem sys, ToralAutomorphism A) : sys_(std::move(sys)), A_(A) {
        if (!phases_consistent(sys_, A_))
            throw InvalidArgument("weyl dynamics: phases (u,v) are inconsistent with the map");
        const std::size_t n2 = sys_.dim() * sys_.dim();
        target_.resize(n2);
        exponent_.resize(n2);
        for (std::size_t idx = 0; idx < n2; ++idx) {
            const auto r = reduce_label(sys_, A_.matrix() * sys_.label(idx));
            target_[idx] = sys_.index(r.reduced);
            exponent_[idx] = r.exponent;
        }
    }

    const WeylSystem& system() const { return sys_; }
    const ToralAutomorphism& map() const { return A_; }

    /// Coefficients of Theta_N^k(X) from those of X, k >= 0.
    WeylCoefficients transport(const WeylCoefficients& in, int k) const {
        if (k < 0) throw InvalidArgument("weyl dynamics: k must be >= 0");
        const std::size_t n2 = in.c.size();
        const std::int64_t two_den = 2 * sys_.den();
        // Follow each source label k steps, accumulating the phase exponent.
        WeylCoefficients out{in.N, std::vector<cplx>(n2)};
        for (std::size_t idx = 0; idx < n2; ++idx) {
            std::size_t cur = idx;
            std::int64_t e = 0;
            for (int s = 0; s < k; ++s) {
                e += exponent_[cur];
                cur = target_[cur];
            }
            e %= two_den;
            const cplx ph = std::polar(1.0, std::numbers::pi * static_cast<double>(e) / static_cast<double>(sys_.den()));
            out.c[cur] += detail::mul(ph, in.c[idx]);
        }
        return out;
    }

    ComplexMatrix evolve(const ComplexMatrix& X, int k) const {
        if (k == 0) return X;
        return weyl_reconstruct(sys_, transport(weyl_decompose(sys_, X), k));
    }

    ComplexMatrix operator()(const ComplexMatrix& X, int k) const { return evolve(X, k); }

private:
    WeylSystem sys_;
    ToralAutomorphism A_;
    std::vector<std::size_t> target_;
    std::vector<std::int64_t> exponent_;
};

inline ComplexMatrix evolve(const WeylSystem& sys, const ToralAutomorphism& A, const ComplexMatrix& X, int k) {
    if (k < 0) throw InvalidArgument("evolve: k must be >= 0");
    return WeylDynamics(sys, A).evolve(X, k);
}

} // namespace catmap
