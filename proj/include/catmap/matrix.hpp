#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "catmap/error.hpp"

namespace catmap {

using cplx = std::complex<double>;
using ComplexVector = std::vector<cplx>;

namespace detail {

// Plain complex product without the NaN/Inf recovery path of operator*.
inline cplx mul(cplx a, cplx b) {
    return {a.real() * b.real() - a.imag() * b.imag(),
            a.real() * b.imag() + a.imag() * b.real()};
}

// conj(a) * b
inline cplx cmul(cplx a, cplx b) {
    return {a.real() * b.real() + a.imag() * b.imag(),
            a.real() * b.imag() - a.imag() * b.real()};
}

} // namespace detail

/// Dense row-major complex matrix.
class ComplexMatrix {
public:
    ComplexMatrix() = default;

    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, cplx{0.0, 0.0}) {
        detail::require(rows > 0 && cols > 0, "ComplexMatrix: dimensions must be positive");
    }

    ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        detail::require(rows > 0 && cols > 0, "ComplexMatrix: dimensions must be positive");
        detail::require(data_.size() == rows * cols, "ComplexMatrix: entry count != rows*cols");
        for (const auto& z : data_)
            detail::require(std::isfinite(z.real()) && std::isfinite(z.imag()),
                            "ComplexMatrix: non-finite entry");
    }

    static ComplexMatrix identity(std::size_t n) {
        ComplexMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static ComplexMatrix diagonal(std::span<const double> d) {
        ComplexMatrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    static ComplexMatrix outer(std::span<const cplx> a, std::span<const cplx> b) {
        ComplexMatrix m(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = detail::mul(a[i], std::conj(b[j]));
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<cplx> data() { return data_; }
    std::span<const cplx> data() const { return data_; }
    std::span<cplx> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const cplx> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](cplx z) {
            return std::isfinite(z.real()) && std::isfinite(z.imag());
        });
    }

    ComplexMatrix adjoint() const {
        ComplexMatrix r(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
        return r;
    }

    ComplexMatrix& operator+=(const ComplexMatrix& o) {
        same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    ComplexMatrix& operator-=(const ComplexMatrix& o) {
        same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    ComplexMatrix& operator*=(cplx s) {
        for (auto& z : data_) z *= s;
        return *this;
    }

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
    friend ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }
    friend ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }

    friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
        detail::require(a.cols_ == b.rows_, "matrix product: inner dimensions differ");
        ComplexMatrix c(a.rows_, b.cols_);
        const std::size_t n = b.cols_;
        for (std::size_t i = 0; i < a.rows_; ++i) {
            cplx* ci = c.data_.data() + i * n;
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const cplx aik = a(i, k);
                if (aik.real() == 0.0 && aik.imag() == 0.0) continue;
                const cplx* bk = b.data_.data() + k * n;
                const double ar = aik.real(), ai = aik.imag();
                for (std::size_t j = 0; j < n; ++j) {
                    const double br = bk[j].real(), bi = bk[j].imag();
                    ci[j] = {ci[j].real() + ar * br - ai * bi, ci[j].imag() + ar * bi + ai * br};
                }
            }
        }
        return c;
    }

    friend ComplexVector operator*(const ComplexMatrix& a, std::span<const cplx> x) {
        detail::require(a.cols_ == x.size(), "matrix-vector product: dimension mismatch");
        ComplexVector y(a.rows_);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            cplx s = 0.0;
            for (std::size_t j = 0; j < a.cols_; ++j) s += detail::mul(a(i, j), x[j]);
            y[i] = s;
        }
        return y;
    }

private:
    void same_shape(const ComplexMatrix& o) const {
        detail::require(rows_ == o.rows_ && cols_ == o.cols_, "matrix shapes differ");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

inline ComplexVector operator*(const ComplexMatrix& a, const ComplexVector& x) {
    return a * std::span<const cplx>(x);
}

/// max_ij |X_ij|
inline double max_abs(const ComplexMatrix& x) {
    double m = 0.0;
    for (const auto& z : x.data()) m = std::max(m, std::abs(z));
    return m;
}

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shapes differ");
    double m = 0.0;
    auto da = a.data();
    auto db = b.data();
    for (std::size_t k = 0; k < da.size(); ++k) m = std::max(m, std::abs(da[k] - db[k]));
    return m;
}

inline double hermiticity_defect(const ComplexMatrix& x) {
    detail::require(x.square(), "hermiticity_defect: matrix not square");
    double m = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = i; j < x.cols(); ++j) m = std::max(m, std::abs(x(i, j) - std::conj(x(j, i))));
    return m;
}

/// (X + X*) / 2
inline ComplexMatrix hermitian_part(const ComplexMatrix& x) {
    detail::require(x.square(), "hermitian_part: matrix not square");
    ComplexMatrix h(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) h(i, j) = 0.5 * (x(i, j) + std::conj(x(j, i)));
    return h;
}

inline cplx trace(const ComplexMatrix& x) {
    detail::require(x.square(), "trace: matrix not square");
    cplx s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) s += x(i, i);
    return s;
}

/// tau_N(X) = tr(X) / N
inline cplx normalized_trace(const ComplexMatrix& x) {
    detail::require(x.square(), "normalized_trace: matrix not square");
    return trace(x) / static_cast<double>(x.rows());
}

/// sqrt(tau_N(X* X)), the normalized Hilbert-Schmidt norm.
inline double hs_norm(const ComplexMatrix& x) {
    detail::require(x.square(), "hs_norm: matrix not square");
    double s = 0.0;
    for (const auto& z : x.data()) s += std::norm(z);
    return std::sqrt(s / static_cast<double>(x.rows()));
}

/// tau_N(A* B) without forming the product.
inline cplx tau_pairing(const ComplexMatrix& a, const ComplexMatrix& b) {
    detail::require(a.square() && a.rows() == b.rows() && a.cols() == b.cols(),
                    "tau_pairing: shapes differ");
    double re = 0.0, im = 0.0;
    auto da = a.data();
    auto db = b.data();
    for (std::size_t k = 0; k < da.size(); ++k) {
        const cplx z = detail::cmul(da[k], db[k]);
        re += z.real();
        im += z.imag();
    }
    return cplx{re, im} / static_cast<double>(a.rows());
}

inline double norm2(std::span<const cplx> v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return std::sqrt(s);
}

/// <a, b> with the first argument conjugated.
inline cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
    detail::require(a.size() == b.size(), "inner: length mismatch");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += detail::cmul(a[i], b[i]);
    return s;
}

} // namespace catmap
