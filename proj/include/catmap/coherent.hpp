#pragma once

// Binomial coherent states |C_N(x)> = W(floor(N x)) |C_N> on the torus.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "catmap/error.hpp"
#include "catmap/fft.hpp"
#include "catmap/matrix.hpp"
#include "catmap/torus.hpp"
#include "catmap/weyl.hpp"

namespace catmap {

/// C_N(j) = sqrt(binom(N-1, j) / 2^(N-1)), evaluated through log-gamma.
inline ComplexVector reference_vector(std::int64_t N) {
    if (N < 2) throw InvalidArgument("reference_vector: N must be >= 2");
    ComplexVector c(static_cast<std::size_t>(N));
    const double log_norm = (static_cast<double>(N) - 1.0) * std::log(2.0);
    const double lg = std::lgamma(static_cast<double>(N));
    double s = 0.0;
    for (std::int64_t j = 0; j < N; ++j) {
        const double lb = lg - std::lgamma(static_cast<double>(j) + 1.0) - std::lgamma(static_cast<double>(N - j));
        const double amp = std::exp(0.5 * (lb - log_norm));
        c[static_cast<std::size_t>(j)] = amp;
        s += amp * amp;
    }
    // Absorb the log-gamma rounding so that the vector is a unit vector.
    const double inv = 1.0 / std::sqrt(s);
    for (auto& z : c) z *= inv;
    return c;
}

/// Cell index floor(N x) in [0,N)^2; boundary ambiguity resolved downward.
inline WeylLabel cell_of(std::int64_t N, TorusPoint x) {
    auto idx = [N](double t) {
        const double w = wrap_unit(t);
        return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(static_cast<double>(N) * w)), 0, N - 1);
    };
    return {idx(x.x1), idx(x.x2)};
}

/// Phase-space center of the reference vector: position (N-1)/(2N), where
/// the binomial amplitudes peak, and momentum 0 since they are real and
/// symmetric. It is not a fixed point of a cat map, so W(floor(N x))|C>
/// sits at x + c rather than at x, and classical transport of the label
/// x and of the actual center differ by (A^k - 1) c.
inline TorusPoint reference_center(std::int64_t N) {
    return {static_cast<double>(N - 1) / (2.0 * static_cast<double>(N)), 0.0};
}

/// Where classical transport is anchored when comparing with the quantum
/// evolution: at the label x itself, or at the reference center x + c.
enum class Anchor { label, reference_center };

inline TorusPoint anchor_point(Anchor a, std::int64_t N) {
    return a == Anchor::reference_center ? reference_center(N) : TorusPoint{};
}

class CoherentFamily {
public:
    explicit CoherentFamily(WeylSystem sys) : sys_(std::move(sys)), reference_(reference_vector(sys_.N())) {
        const std::int64_t N = sys_.N();
        symbol_.assign(static_cast<std::size_t>(N * N), cplx{});
        ComplexVector d(sys_.dim()), out(sys_.dim());
        // s(m) = <C, W(m) C> = pre(m) sum_j conj(C_{j+m1}) C_j e^{-2 pi i j m2 / N}
        for (std::int64_t m1 = 0; m1 < N; ++m1) {
            for (std::int64_t j = 0; j < N; ++j)
                d[static_cast<std::size_t>(j)] = detail::cmul(reference_[static_cast<std::size_t>((j + m1) % N)],
                                                              reference_[static_cast<std::size_t>(j)]);
            fft::forward(d, out);
            for (std::int64_t m2 = 0; m2 < N; ++m2)
                symbol_[static_cast<std::size_t>(m1 * N + m2)] =
                    detail::mul(sys_.phase(sys_.prefactor_exponent({m1, m2})), out[static_cast<std::size_t>(m2)]);
        }
        const double inv = 1.0 / static_cast<double>(N);
        projector_ = WeylCoefficients{N, std::vector<cplx>(symbol_.size())};
        for (std::size_t i = 0; i < symbol_.size(); ++i) projector_.c[i] = std::conj(symbol_[i]) * inv;
    }

    const WeylSystem& system() const { return sys_; }
    std::int64_t N() const { return sys_.N(); }
    const ComplexVector& reference() const { return reference_; }

    /// <C, W(m) C> for m in [0,N)^2.
    const std::vector<cplx>& symbol() const { return symbol_; }
    /// Weyl coefficients of |C><C|.
    const WeylCoefficients& projector_coefficients() const { return projector_; }

    ComplexVector vector_at(WeylLabel cell) const { return weyl_apply(sys_, cell, reference_); }

private:
    WeylSystem sys_;
    ComplexVector reference_;
    std::vector<cplx> symbol_;
    WeylCoefficients projector_;
};

inline ComplexVector coherent_vector(const CoherentFamily& fam, TorusPoint x) {
    return fam.vector_at(cell_of(fam.N(), x));
}

inline cplx overlap(const CoherentFamily& fam, TorusPoint x, TorusPoint y) {
    return inner(coherent_vector(fam, x), coherent_vector(fam, y));
}

namespace detail {

// 2D transform helper: out(p) = sum_m g(m) exp(-2 pi i sigma(p, m) / N),
// sigma(p, m) = p1 m2 - p2 m1.
inline std::vector<cplx> symplectic_transform(std::int64_t N, const std::vector<cplx>& g) {
    const auto n = static_cast<std::size_t>(N);
    std::vector<cplx> h(n * n), out(n * n);
    // h[a][b] = g(m1 = -b, m2 = a)
    for (std::int64_t m1 = 0; m1 < N; ++m1)
        for (std::int64_t m2 = 0; m2 < N; ++m2)
            h[static_cast<std::size_t>(m2 * N + mod_floor(-m1, N))] = g[static_cast<std::size_t>(m1 * N + m2)];
    fft::forward_2d(static_cast<int>(N), h, out);
    return out;
}

// Inverse-direction helper: out(m) = sum_p f(p) exp(+2 pi i sigma(p, m) / N).
inline std::vector<cplx> symplectic_cotransform(std::int64_t N, const std::vector<cplx>& f) {
    const auto n = static_cast<std::size_t>(N);
    std::vector<cplx> fh(n * n), out(n * n);
    fft::forward_2d(static_cast<int>(N), f, fh);
    // sum_p f e^{2 pi i (p1 m2 - p2 m1)/N} = fh[-m2][m1]
    for (std::int64_t m1 = 0; m1 < N; ++m1)
        for (std::int64_t m2 = 0; m2 < N; ++m2)
            out[static_cast<std::size_t>(m1 * N + m2)] = fh[static_cast<std::size_t>(mod_floor(-m2, N) * N + m1)];
    return out;
}

// <C(r/N), X C(r/N)> for all cells r, from the Weyl coefficients of X.
inline std::vector<cplx> coherent_expectations(const CoherentFamily& fam, const WeylCoefficients& x) {
    std::vector<cplx> g(x.c.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = mul(x.c[i], fam.symbol()[i]);
    return symplectic_transform(fam.N(), g);
}

} // namespace detail

/// max |(1/N) sum_p |C(p/N)><C(p/N)| - 1|. The frame operator is assembled
/// in Weyl-coefficient space: conjugating |C><C| by W(p) multiplies its
/// m-th coefficient by exp(2 pi i sigma(p,m)/N).
inline double verify_overcompleteness(const CoherentFamily& fam) {
    const std::int64_t N = fam.N();
    const std::vector<cplx> ones(static_cast<std::size_t>(N * N), cplx{1.0, 0.0});
    const auto phases = detail::symplectic_cotransform(N, ones);
    WeylCoefficients frame{N, std::vector<cplx>(ones.size())};
    const double inv = 1.0 / static_cast<double>(N);
    for (std::size_t i = 0; i < ones.size(); ++i)
        frame.c[i] = detail::mul(fam.projector_coefficients().c[i], phases[i]) * inv;
    const ComplexMatrix s = weyl_reconstruct(fam.system(), frame);
    return max_abs_diff(s, ComplexMatrix::identity(fam.system().dim()));
}

struct LocalizationResult {
    double max_value = 0.0;
    std::size_t valid_pairs = 0;
    bool empty() const { return valid_pairs == 0; }
};

namespace detail {

inline std::mt19937_64 probe_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), 0x10ca1u};
    return std::mt19937_64(seq);
}

} // namespace detail

/// max of N |<C(x), C(y)>|^2 over `trials` uniform pairs with d(x,y) >= d0.
inline LocalizationResult localization_profile(const CoherentFamily& fam, double d0, std::size_t trials,
                                               std::uint64_t seed) {
    if (!(d0 > 0.0 && d0 < 0.5)) throw InvalidArgument("localization_profile: d0 must lie in (0, 0.5)");
    const std::int64_t N = fam.N();
    // N |<C(x), C(y)>|^2 = N |s(q - p)|^2 with p, q the cells of x, y.
    auto engine = detail::probe_engine(seed, 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    LocalizationResult res;
    for (std::size_t t = 0; t < trials; ++t) {
        const TorusPoint x{unit(engine), unit(engine)};
        const TorusPoint y{unit(engine), unit(engine)};
        if (torus_distance(x, y) < d0) continue;
        const WeylLabel p = cell_of(N, x), q = cell_of(N, y);
        const WeylLabel r{mod_floor(q.n1 - p.n1, N), mod_floor(q.n2 - p.n2, N)};
        const double val = static_cast<double>(N) * std::norm(fam.symbol()[fam.system().index(r)]);
        res.max_value = std::max(res.max_value, val);
        ++res.valid_pairs;
    }
    return res;
}

/// A^k mod N applied to a label, without overflow for large k.
inline WeylLabel power_apply_mod(const ToralAutomorphism& A, int k, WeylLabel p, std::int64_t N) {
    const IntMatrix2& m = A.matrix();
    WeylLabel cur{mod_floor(p.n1, N), mod_floor(p.n2, N)};
    for (int s = 0; s < k; ++s)
        cur = {mod_floor(m.a * cur.n1 + m.b * cur.n2, N), mod_floor(m.c * cur.n1 + m.d * cur.n2, N)};
    return cur;
}

/// max over sampled pairs with d(T^k x, y) >= d0 of
/// N <C(y), Theta_N^k(|C(x)><C(x)|) C(y)>.
/// With Anchor::reference_center the exclusion uses the actual centers,
/// d(T^k(x + c), y + c) >= d0.
/// Theta^k(|C(x)><C(x)|) = W(A^k p) Theta^k(|C><C|) W(A^k p)*, so every pair
/// reads one entry of the coherent-state expectation table of
/// Theta^k(|C><C|) at the cell q - A^k p.
inline LocalizationResult dynamical_localization_probe(const CoherentFamily& fam, const ToralAutomorphism& A, int k,
                                                       double d0, std::size_t trials, std::uint64_t seed,
                                                       Anchor anchor = Anchor::label) {
    if (k < 0) throw InvalidArgument("dynamical_localization_probe: k must be >= 0");
    if (!(d0 > 0.0 && d0 < 0.5)) throw InvalidArgument("dynamical_localization_probe: d0 must lie in (0, 0.5)");
    const std::int64_t N = fam.N();
    const WeylDynamics dyn(fam.system(), A);
    const auto evolved = dyn.transport(fam.projector_coefficients(), k);
    const auto table = detail::coherent_expectations(fam, evolved);
    const TorusPoint c = anchor_point(anchor, N);

    auto engine = detail::probe_engine(seed, 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    LocalizationResult res;
    for (std::size_t t = 0; t < trials; ++t) {
        const TorusPoint x{unit(engine), unit(engine)};
        const TorusPoint y{unit(engine), unit(engine)};
        if (torus_distance(apply(A, wrap(x.x1 + c.x1, x.x2 + c.x2), k), wrap(y.x1 + c.x1, y.x2 + c.x2)) < d0) continue;
        const WeylLabel p = power_apply_mod(A, k, cell_of(N, x), N);
        const WeylLabel q = cell_of(N, y);
        const WeylLabel r{mod_floor(q.n1 - p.n1, N), mod_floor(q.n2 - p.n2, N)};
        const double val = static_cast<double>(N) * table[fam.system().index(r)].real();
        res.max_value = std::max(res.max_value, val);
        ++res.valid_pairs;
    }
    return res;
}

} // namespace catmap
