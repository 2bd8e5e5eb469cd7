#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "catmap/error.hpp"
#include "catmap/matrix.hpp"

namespace catmap {

/// Eigenvalues in ascending order; columns of `vectors` are the matching
/// orthonormal eigenvectors.
struct HermitianEigenSystem {
    std::vector<double> values;
    ComplexMatrix vectors;
};

inline constexpr double kHermitianTolerance = 1e-9;
inline constexpr double kPsdClip = 1e-9;
inline constexpr int kJacobiMaxSweeps = 100;
inline constexpr double kJacobiRelativeThreshold = 1e-12;

namespace detail {

inline double offdiag_norm(const std::vector<cplx>& a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) s += std::norm(a[i * n + j]);
    return std::sqrt(s);
}

// Cyclic complex Jacobi. `a` is overwritten with the (nearly) diagonal form;
// if `v` is non-null it accumulates the product of rotations.
inline void jacobi_sweeps(std::vector<cplx>& a, std::size_t n, std::vector<cplx>* v) {
    double frob = 0.0;
    for (const auto& z : a) frob += std::norm(z);
    frob = std::sqrt(frob);
    const double target = kJacobiRelativeThreshold * frob;
    if (frob == 0.0) return;

    for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
        if (offdiag_norm(a, n) <= target) return;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx apq = a[p * n + q];
                const double r = std::abs(apq);
                if (r == 0.0) continue;
                const double alpha = a[p * n + p].real();
                const double beta = a[q * n + q].real();
                // Element already negligible against both diagonal entries.
                if (r < 1e-300 || (std::abs(alpha) + r == std::abs(alpha) &&
                                   std::abs(beta) + r == std::abs(beta))) {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                const double theta = 0.5 * std::atan2(2.0 * r, beta - alpha);
                const double c = std::cos(theta);
                const double s = std::sin(theta);
                const cplx e = std::conj(apq) / r;
                const cplx se = s * e;
                const cplx ce = c * e;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const cplx akp = a[k * n + p];
                    const cplx akq = a[k * n + q];
                    const cplx nkp = c * akp - mul(se, akq);
                    const cplx nkq = s * akp + mul(ce, akq);
                    a[k * n + p] = nkp;
                    a[k * n + q] = nkq;
                    a[p * n + k] = std::conj(nkp);
                    a[q * n + k] = std::conj(nkq);
                }
                a[p * n + p] = c * c * alpha - 2.0 * c * s * r + s * s * beta;
                a[q * n + q] = s * s * alpha + 2.0 * c * s * r + c * c * beta;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if (v) {
                    auto& vv = *v;
                    for (std::size_t k = 0; k < n; ++k) {
                        const cplx vkp = vv[k * n + p];
                        const cplx vkq = vv[k * n + q];
                        vv[k * n + p] = c * vkp - mul(se, vkq);
                        vv[k * n + q] = s * vkp + mul(ce, vkq);
                    }
                }
            }
        }
    }
    if (offdiag_norm(a, n) <= target) return;
    throw ConvergenceError("hermitian eigensolver: no convergence within iteration cap");
}

inline void check_hermitian(const ComplexMatrix& x, const char* who) {
    if (!x.square()) throw InvalidArgument(std::string(who) + ": matrix not square");
    if (hermiticity_defect(x) > kHermitianTolerance)
        throw InvalidArgument(std::string(who) + ": matrix not Hermitian within tolerance");
}

} // namespace detail

inline HermitianEigenSystem hermitian_eigendecompose(const ComplexMatrix& x) {
    detail::check_hermitian(x, "hermitian_eigendecompose");
    const std::size_t n = x.rows();
    const ComplexMatrix h = hermitian_part(x);
    std::vector<cplx> a(h.data().begin(), h.data().end());
    std::vector<cplx> v(n * n, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    detail::jacobi_sweeps(a, n, &v);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a[i * n + i].real() < a[j * n + j].real(); });

    HermitianEigenSystem out{std::vector<double>(n), ComplexMatrix(n, n)};
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t src = order[c];
        out.values[c] = a[src * n + src].real();
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = v[k * n + src];
    }
    return out;
}

/// Ascending eigenvalues only; skips the eigenvector accumulation.
inline std::vector<double> hermitian_eigenvalues(const ComplexMatrix& x) {
    detail::check_hermitian(x, "hermitian_eigenvalues");
    const std::size_t n = x.rows();
    const ComplexMatrix h = hermitian_part(x);
    std::vector<cplx> a(h.data().begin(), h.data().end());
    detail::jacobi_sweeps(a, n, nullptr);
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = a[i * n + i].real();
    std::sort(vals.begin(), vals.end());
    return vals;
}

/// V f(Lambda) V* for a real function f applied to the spectrum.
template <class F>
ComplexMatrix hermitian_function(const HermitianEigenSystem& es, F&& f) {
    const std::size_t n = es.values.size();
    std::vector<double> fv(n);
    for (std::size_t i = 0; i < n; ++i) fv[i] = f(es.values[i]);
    ComplexMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            cplx s = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                if (fv[k] == 0.0) continue;
                s += fv[k] * detail::mul(es.vectors(i, k), std::conj(es.vectors(j, k)));
            }
            out(i, j) = s;
            out(j, i) = std::conj(s);
        }
        out(i, i) = out(i, i).real();
    }
    return out;
}

/// Positive square root of a positive-semidefinite Hermitian matrix.
/// Eigenvalues in [-1e-9, 0) are clipped to zero; anything more negative
/// means the argument was not PSD.
inline ComplexMatrix operator_sqrt(const ComplexMatrix& x) {
    const auto es = hermitian_eigendecompose(x);
    if (!es.values.empty() && es.values.front() < -kPsdClip)
        throw InvalidArgument("operator_sqrt: argument has eigenvalue " + std::to_string(es.values.front()) +
                              " below -1e-9");
    // eigenvalues at roundoff level are zero; their square roots would not be
    const double scale = es.values.empty() ? 0.0 : std::max(std::abs(es.values.front()), std::abs(es.values.back()));
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * scale;
    return hermitian_function(es, [floor](double l) { return l > floor ? std::sqrt(l) : 0.0; });
}

/// -sum l log l over a spectrum clipped to [0,1], with 0 log 0 = 0 (nats).
inline double spectrum_entropy(std::span<const double> eigenvalues) {
    double s = 0.0;
    for (double l : eigenvalues) {
        const double c = std::clamp(l, 0.0, 1.0);
        if (c > 0.0) s -= c * std::log(c);
    }
    return s;
}

inline constexpr double kDensityTolerance = 1e-8;

/// Von Neumann entropy in nats.
inline double von_neumann_entropy(const ComplexMatrix& rho) {
    detail::check_hermitian(rho, "von_neumann_entropy");
    const double tr = trace(rho).real();
    if (std::abs(tr - 1.0) > kDensityTolerance)
        throw InvalidArgument("von_neumann_entropy: trace " + std::to_string(tr) + " differs from 1");
    const auto vals = hermitian_eigenvalues(rho);
    if (vals.front() < -kDensityTolerance)
        throw InvalidArgument("von_neumann_entropy: negative eigenvalue " + std::to_string(vals.front()));
    return spectrum_entropy(vals);
}

} // namespace catmap
