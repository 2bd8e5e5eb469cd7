#pragma once

#include <complex>
#include <random>

#include "catmap/matrix.hpp"

namespace testing_support {

using catmap::ComplexMatrix;
using catmap::cplx;

inline ComplexMatrix random_matrix(std::size_t n, std::mt19937_64& eng) {
    std::normal_distribution<double> g;
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = {g(eng), g(eng)};
    return m;
}

inline ComplexMatrix random_hermitian(std::size_t n, std::mt19937_64& eng) {
    return catmap::hermitian_part(random_matrix(n, eng));
}

// G G* / tr(G G*)
inline ComplexMatrix random_density(std::size_t n, std::mt19937_64& eng) {
    const auto g = random_matrix(n, eng);
    auto r = g * g.adjoint();
    const double t = catmap::trace(r).real();
    r *= cplx{1.0 / t, 0.0};
    return r;
}

// Gram-Schmidt on a Gaussian matrix.
inline ComplexMatrix random_unitary(std::size_t n, std::mt19937_64& eng) {
    auto m = random_matrix(n, eng);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            cplx dot{};
            for (std::size_t i = 0; i < n; ++i) dot += std::conj(m(i, k)) * m(i, j);
            for (std::size_t i = 0; i < n; ++i) m(i, j) -= dot * m(i, k);
        }
        double nn = 0.0;
        for (std::size_t i = 0; i < n; ++i) nn += std::norm(m(i, j));
        nn = std::sqrt(nn);
        for (std::size_t i = 0; i < n; ++i) m(i, j) /= nn;
    }
    return m;
}

} // namespace testing_support
