#pragma once

// Anti-Wick quantization gamma_{N,inf} and dequantization gamma_{inf,N}
// on cell-averaged grid data, plus the Egorov discrepancy between quantum
// and classical evolution.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

#include "catmap/coherent.hpp"
#include "catmap/error.hpp"
#include "catmap/matrix.hpp"
#include "catmap/torus.hpp"
#include "catmap/weyl.hpp"

namespace catmap {

/// Cell averages N^2 * integral over cell p of f, stored at p1*N + p2.
struct GridFunction {
    std::int64_t N = 0;
    std::vector<cplx> values;

    static GridFunction constant(std::int64_t N, cplx value) {
        return {N, std::vector<cplx>(static_cast<std::size_t>(N * N), value)};
    }

    cplx at(std::int64_t p1, std::int64_t p2) const { return values[static_cast<std::size_t>(p1 * N + p2)]; }

    double sup_norm() const {
        double m = 0.0;
        for (const auto& z : values) m = std::max(m, std::abs(z));
        return m;
    }
};

/// Characteristic function of a finite union of disjoint rectangles.
struct IndicatorSpec {
    Atom rects;
};

struct TrigTerm {
    cplx coef{1.0, 0.0};
    std::int64_t m1 = 0;
    std::int64_t m2 = 0;
};

/// Trigonometric polynomial sum_t coef_t exp(2 pi i (m1 x1 + m2 x2)).
struct TrigSpec {
    std::vector<TrigTerm> terms;

    static TrigSpec monomial(std::int64_t m1, std::int64_t m2) { return {{TrigTerm{{1.0, 0.0}, m1, m2}}}; }
    static TrigSpec cosine(std::int64_t m1, std::int64_t m2) {
        return {{TrigTerm{{0.5, 0.0}, m1, m2}, TrigTerm{{0.5, 0.0}, -m1, -m2}}};
    }
};

using FunctionSpec = std::variant<IndicatorSpec, TrigSpec>;

namespace detail {

// N * integral_{p/N}^{(p+1)/N} exp(2 pi i m x) dx
inline cplx trig_cell_average_1d(std::int64_t m, std::int64_t p, std::int64_t N) {
    if (m == 0) return 1.0;
    if (mod_floor(m, N) == 0) return 0.0;
    const double pi = std::numbers::pi;
    const double carrier = 2.0 * pi * static_cast<double>(mod_floor(m * p, N)) / static_cast<double>(N);
    const double half = pi * static_cast<double>(mod_floor(m, 2 * N)) / static_cast<double>(N);
    const double arg = pi * static_cast<double>(m) / static_cast<double>(N);
    return std::polar(std::sin(arg) / arg, carrier + half);
}

inline void check_disjoint(const Atom& rects) {
    for (std::size_t i = 0; i < rects.size(); ++i)
        for (std::size_t j = i + 1; j < rects.size(); ++j)
            if (rects[i].overlap_area(rects[j]) > 0.0) throw InvalidArgument("indicator: overlapping rectangles");
}

} // namespace detail

/// Exact cell averages of an indicator or trigonometric polynomial.
inline GridFunction cell_average(const FunctionSpec& spec, std::int64_t N) {
    if (N < 1) throw InvalidArgument("cell_average: N must be >= 1");
    GridFunction g = GridFunction::constant(N, 0.0);
    const double n = static_cast<double>(N);
    if (const auto* ind = std::get_if<IndicatorSpec>(&spec)) {
        detail::check_disjoint(ind->rects);
        for (const auto& r : ind->rects) {
            if (!(0.0 <= r.x_lo && r.x_lo <= r.x_hi && r.x_hi <= 1.0 && 0.0 <= r.y_lo && r.y_lo <= r.y_hi &&
                  r.y_hi <= 1.0))
                throw InvalidArgument("indicator: rectangle outside the unit square");
            const auto p_lo = static_cast<std::int64_t>(std::floor(r.x_lo * n));
            const auto p_hi = std::min<std::int64_t>(N - 1, static_cast<std::int64_t>(std::ceil(r.x_hi * n)) - 1);
            const auto q_lo = static_cast<std::int64_t>(std::floor(r.y_lo * n));
            const auto q_hi = std::min<std::int64_t>(N - 1, static_cast<std::int64_t>(std::ceil(r.y_hi * n)) - 1);
            for (std::int64_t p = p_lo; p <= p_hi; ++p) {
                const double wx = std::min(r.x_hi, (p + 1) / n) - std::max(r.x_lo, p / n);
                if (wx <= 0.0) continue;
                for (std::int64_t q = q_lo; q <= q_hi; ++q) {
                    const double wy = std::min(r.y_hi, (q + 1) / n) - std::max(r.y_lo, q / n);
                    if (wy <= 0.0) continue;
                    g.values[static_cast<std::size_t>(p * N + q)] += wx * wy * n * n;
                }
            }
        }
        return g;
    }
    const auto& trig = std::get<TrigSpec>(spec);
    for (const auto& t : trig.terms) {
        std::vector<cplx> ax(static_cast<std::size_t>(N)), ay(static_cast<std::size_t>(N));
        for (std::int64_t p = 0; p < N; ++p) {
            ax[static_cast<std::size_t>(p)] = detail::trig_cell_average_1d(t.m1, p, N);
            ay[static_cast<std::size_t>(p)] = detail::trig_cell_average_1d(t.m2, p, N);
        }
        for (std::int64_t p = 0; p < N; ++p)
            for (std::int64_t q = 0; q < N; ++q)
                g.values[static_cast<std::size_t>(p * N + q)] +=
                    t.coef * detail::mul(ax[static_cast<std::size_t>(p)], ay[static_cast<std::size_t>(q)]);
    }
    return g;
}

inline constexpr int kSubgridPoints = 16;

/// Cell averages of the classically evolved observable. With anchor c = 0
/// this is f o A^{-k}; a nonzero c evolves around the point c instead,
/// x -> f(A^{-k}(x + c) - c).
/// Trigonometric specs are transported exactly (frequency m -> (A^{-k})^T m);
/// indicators are re-averaged with a 16x16 midpoint rule per cell and the
/// result is flagged approximate.
struct EvolvedGrid {
    GridFunction grid;
    bool approximate = false;
};

inline FunctionSpec evolve_spec(const FunctionSpec& spec, const ToralAutomorphism& A, int k, TorusPoint anchor = {}) {
    const auto* trig = std::get_if<TrigSpec>(&spec);
    if (!trig) throw InvalidArgument("evolve_spec: indicator specs are not closed under the classical map");
    const IntMatrix2 b = A.power(-k);
    TrigSpec out;
    for (const auto& t : trig->terms) {
        const std::int64_t n1 = b.a * t.m1 + b.c * t.m2, n2 = b.b * t.m1 + b.d * t.m2;
        // m . (B c - c) = (B^T m - m) . c, reduced mod 1 before scaling by 2 pi
        const double turns = std::fmod(static_cast<double>(n1 - t.m1) * anchor.x1, 1.0) +
                             std::fmod(static_cast<double>(n2 - t.m2) * anchor.x2, 1.0);
        out.terms.push_back({t.coef * std::polar(1.0, 2.0 * std::numbers::pi * turns), n1, n2});
    }
    return out;
}

inline EvolvedGrid classical_evolution(const FunctionSpec& spec, const ToralAutomorphism& A, int k, std::int64_t N,
                                       TorusPoint anchor = {}) {
    if (k == 0) return {cell_average(spec, N), false};
    if (std::holds_alternative<TrigSpec>(spec)) return {cell_average(evolve_spec(spec, A, k, anchor), N), false};
    const auto& rects = std::get<IndicatorSpec>(spec).rects;
    GridFunction g = GridFunction::constant(N, 0.0);
    const double n = static_cast<double>(N);
    const double h = 1.0 / (n * kSubgridPoints);
    for (std::int64_t p = 0; p < N; ++p)
        for (std::int64_t q = 0; q < N; ++q) {
            int hits = 0;
            for (int a = 0; a < kSubgridPoints; ++a)
                for (int b = 0; b < kSubgridPoints; ++b) {
                    const TorusPoint y{p / n + (a + 0.5) * h + anchor.x1, q / n + (b + 0.5) * h + anchor.x2};
                    const TorusPoint z = apply(A, wrap(y.x1, y.x2), -k);
                    if (atom_contains(rects, wrap(z.x1 - anchor.x1, z.x2 - anchor.x2))) ++hits;
                }
            g.values[static_cast<std::size_t>(p * N + q)] = static_cast<double>(hits) / (kSubgridPoints * kSubgridPoints);
        }
    return {std::move(g), true};
}

/// Weyl coefficients of gamma(f) = (1/N) sum_p f_p |C(p/N)><C(p/N)|.
inline WeylCoefficients quantize_coefficients(const CoherentFamily& fam, const GridFunction& f) {
    if (f.N != fam.N()) throw InvalidArgument("quantize: grid order differs from N");
    const auto phases = detail::symplectic_cotransform(f.N, f.values);
    WeylCoefficients out{f.N, std::vector<cplx>(f.values.size())};
    const double inv = 1.0 / static_cast<double>(f.N);
    for (std::size_t i = 0; i < out.c.size(); ++i) out.c[i] = detail::mul(fam.projector_coefficients().c[i], phases[i]) * inv;
    return out;
}

inline ComplexMatrix quantize(const CoherentFamily& fam, const GridFunction& f) {
    return weyl_reconstruct(fam.system(), quantize_coefficients(fam, f));
}

inline GridFunction dequantize_coefficients(const CoherentFamily& fam, const WeylCoefficients& x) {
    return {fam.N(), detail::coherent_expectations(fam, x)};
}

/// Cell values <C(p/N), X C(p/N)>.
inline GridFunction dequantize(const CoherentFamily& fam, const ComplexMatrix& X) {
    return dequantize_coefficients(fam, weyl_decompose(fam.system(), X));
}

/// Cells whose centre lies at least `margin` from the boundary of the
/// indicator, i.e. the indicator is constant on the box of half-width margin.
inline std::vector<bool> interior_mask(const IndicatorSpec& spec, std::int64_t N, double margin) {
    constexpr int probes = 9;
    std::vector<bool> mask(static_cast<std::size_t>(N * N));
    const double n = static_cast<double>(N);
    for (std::int64_t p = 0; p < N; ++p)
        for (std::int64_t q = 0; q < N; ++q) {
            const TorusPoint c{(p + 0.5) / n, (q + 0.5) / n};
            const bool inside = atom_contains(spec.rects, c);
            bool constant = true;
            for (int a = 0; a < probes && constant; ++a)
                for (int b = 0; b < probes && constant; ++b) {
                    const double dx = margin * (2.0 * a / (probes - 1) - 1.0);
                    const double dy = margin * (2.0 * b / (probes - 1) - 1.0);
                    constant = atom_contains(spec.rects, wrap(c.x1 + dx, c.x2 + dy)) == inside;
                }
            mask[static_cast<std::size_t>(p * N + q)] = constant;
        }
    return mask;
}

/// Grid max of |dequantize(quantize(f)) - f|, optionally restricted to a mask.
inline double roundtrip_residual(const CoherentFamily& fam, const GridFunction& f,
                                 const std::optional<std::vector<bool>>& mask = std::nullopt) {
    const GridFunction back = dequantize_coefficients(fam, quantize_coefficients(fam, f));
    double r = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        r = std::max(r, std::abs(back.values[i] - f.values[i]));
    }
    return r;
}

/// tau_N(gamma(f)* gamma(g)), evaluated as sum_m conj(c_m(f)) c_m(g).
inline cplx quantum_pairing(const CoherentFamily& fam, const GridFunction& f, const GridFunction& g) {
    const auto cf = quantize_coefficients(fam, f);
    const auto cg = quantize_coefficients(fam, g);
    cplx s = 0.0;
    for (std::size_t i = 0; i < cf.c.size(); ++i) s += detail::cmul(cf.c[i], cg.c[i]);
    return s;
}

/// (1/N^2) sum_p conj(f_p) g_p
inline cplx grid_pairing(const GridFunction& f, const GridFunction& g) {
    if (f.N != g.N) throw InvalidArgument("grid_pairing: grid orders differ");
    cplx s = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) s += detail::cmul(f.values[i], g.values[i]);
    return s / static_cast<double>(f.N * f.N);
}

inline double pairing_residual(const CoherentFamily& fam, const GridFunction& f, const GridFunction& g) {
    return std::abs(quantum_pairing(fam, f, g) - grid_pairing(f, g));
}

struct EgorovResult {
    double discrepancy = 0.0;
    bool approximate = false;
};

/// ||Theta_N^k(gamma(f)) - gamma(f o A^{-k})||_2, computed on Weyl
/// coefficients (the normalized Hilbert-Schmidt norm is their l2 norm).
/// Anchor::reference_center evolves f around the phase-space center of the
/// reference vector instead of the origin; see reference_center().
inline EgorovResult egorov_discrepancy(const CoherentFamily& fam, const ToralAutomorphism& A,
                                       const FunctionSpec& spec, int k, Anchor anchor = Anchor::label) {
    if (k < 0) throw InvalidArgument("egorov_discrepancy: k must be >= 0");
    const std::int64_t N = fam.N();
    const WeylDynamics dyn(fam.system(), A);
    const auto quantum = dyn.transport(quantize_coefficients(fam, cell_average(spec, N)), k);
    const auto classical = classical_evolution(spec, A, k, N, anchor_point(anchor, N));
    const auto target = quantize_coefficients(fam, classical.grid);
    double s = 0.0;
    for (std::size_t i = 0; i < quantum.c.size(); ++i) s += std::norm(quantum.c[i] - target.c[i]);
    return {std::sqrt(s), classical.approximate};
}

} // namespace catmap
