#pragma once

// Partitions of unity, ordered time refinements, multi-time density
// matrices and ALF entropy curves, with the quantum-vs-classical comparison.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "catmap/coherent.hpp"
#include "catmap/error.hpp"
#include "catmap/hermitian.hpp"
#include "catmap/matrix.hpp"
#include "catmap/quantization.hpp"
#include "catmap/torus.hpp"
#include "catmap/weyl.hpp"

namespace catmap {

inline constexpr double kPartitionTolerance = 1e-8;

/// Anything that maps (X, k) to Theta^k(X).
template <class D>
concept Dynamics = requires(const D& d, const ComplexMatrix& x, int k) {
    { d(x, k) } -> std::convertible_to<ComplexMatrix>;
};

/// Theta(X) = U* X U for a fixed unitary U.
class ConjugationDynamics {
public:
    explicit ConjugationDynamics(ComplexMatrix u) : u_(std::move(u)), u_adj_(u_.adjoint()) {
        detail::require(u_.square(), "conjugation dynamics: matrix not square");
        if (max_abs_diff(u_adj_ * u_, ComplexMatrix::identity(u_.rows())) > 1e-10)
            throw InvalidArgument("conjugation dynamics: matrix is not unitary");
    }

    ComplexMatrix operator()(const ComplexMatrix& x, int k) const {
        if (k < 0) throw InvalidArgument("conjugation dynamics: k must be >= 0");
        ComplexMatrix r = x;
        for (int s = 0; s < k; ++s) r = u_adj_ * r * u_;
        return r;
    }

private:
    ComplexMatrix u_, u_adj_;
};

/// {y_1..y_D} with sum_j y_j* y_j = 1.
class PartitionOfUnity {
public:
    explicit PartitionOfUnity(std::vector<ComplexMatrix> elements) : elements_(std::move(elements)) {
        if (elements_.empty()) throw InvalidArgument("partition of unity: needs at least one element");
        const std::size_t n = elements_.front().rows();
        for (const auto& y : elements_)
            if (y.rows() != n || y.cols() != n) throw InvalidArgument("partition of unity: element shapes differ");
        if (identity_defect() > kPartitionTolerance)
            throw InvariantViolation("partition of unity: sum y* y differs from identity by " +
                                     std::to_string(identity_defect()));
    }

    static PartitionOfUnity trivial(std::size_t n) { return PartitionOfUnity({ComplexMatrix::identity(n)}); }

    std::size_t size() const { return elements_.size(); }
    std::size_t dim() const { return elements_.front().rows(); }
    const std::vector<ComplexMatrix>& elements() const { return elements_; }
    const ComplexMatrix& operator[](std::size_t i) const { return elements_[i]; }

    /// max |sum y* y - 1|
    double identity_defect() const {
        ComplexMatrix s(dim(), dim());
        for (const auto& y : elements_) s += y.adjoint() * y;
        return max_abs_diff(s, ComplexMatrix::identity(dim()));
    }

    /// max |sum y y* - 1|; zero for a bistochastic partition.
    double bistochastic_defect() const {
        ComplexMatrix s(dim(), dim());
        for (const auto& y : elements_) s += y * y.adjoint();
        return max_abs_diff(s, ComplexMatrix::identity(dim()));
    }

private:
    std::vector<ComplexMatrix> elements_;
};

/// y_i = gamma(chi_{E_i}) for the D-1 atoms, completed by
/// y_D = sqrt(1 - sum y_i^2).
inline PartitionOfUnity quantize_partition(const CoherentFamily& fam, const TorusPartition& P) {
    std::vector<ComplexMatrix> ys;
    ys.reserve(P.size() + 1);
    const std::size_t n = fam.system().dim();
    ComplexMatrix rest = ComplexMatrix::identity(n);
    for (const auto& atom : P.atoms()) {
        ComplexMatrix y = hermitian_part(quantize(fam, cell_average(IndicatorSpec{atom}, fam.N())));
        rest -= y * y;
        ys.push_back(std::move(y));
    }
    ys.push_back(operator_sqrt(hermitian_part(rest)));
    return PartitionOfUnity(std::move(ys));
}

/// rho -> sum_j y_j rho y_j*
inline ComplexMatrix reduce_state(const PartitionOfUnity& pu, const ComplexMatrix& rho) {
    if (rho.rows() != pu.dim() || rho.cols() != pu.dim()) throw InvalidArgument("reduce_state: dimension mismatch");
    ComplexMatrix out(pu.dim(), pu.dim());
    for (const auto& y : pu.elements()) out += y * rho * y.adjoint();
    return out;
}

/// {y_1 z_1, ..., y_1 z_B; y_2 z_1, ...}
inline PartitionOfUnity refine(const PartitionOfUnity& Y, const PartitionOfUnity& Z) {
    if (Y.dim() != Z.dim()) throw InvalidArgument("refine: dimension mismatch");
    std::vector<ComplexMatrix> out;
    out.reserve(Y.size() * Z.size());
    for (const auto& y : Y.elements())
        for (const auto& z : Z.elements()) out.push_back(y * z);
    return PartitionOfUnity(std::move(out));
}

inline constexpr double kMemoryGuardLog2 = 24.0;

namespace detail {

inline void check_memory_guard(std::size_t D, int n) {
    if (n < 1) throw InvalidArgument("time refinement: n must be >= 1");
    if (static_cast<double>(n) * std::log2(static_cast<double>(D)) > kMemoryGuardLog2)
        throw MemoryGuardError("time refinement: D^n exceeds 2^24");
}

// Extends the products of length n by one time step:
// P_(j, i) = Theta^n(y_j) P_i, newest time as the most significant digit.
inline std::vector<ComplexMatrix> extend_products(const std::vector<ComplexMatrix>& evolved,
                                                  const std::vector<ComplexMatrix>& products) {
    std::vector<ComplexMatrix> out;
    out.reserve(evolved.size() * products.size());
    for (const auto& e : evolved)
        for (const auto& p : products) out.push_back(e * p);
    return out;
}

} // namespace detail

/// Elements of Theta^{n-1}(Y) o ... o Theta(Y) o Y.
template <Dynamics Dyn>
std::vector<ComplexMatrix> time_refinement_products(const Dyn& dyn, const PartitionOfUnity& pu, int n) {
    detail::check_memory_guard(pu.size(), n);
    std::vector<ComplexMatrix> products = pu.elements();
    for (int m = 1; m < n; ++m) {
        std::vector<ComplexMatrix> evolved;
        for (const auto& y : pu.elements()) evolved.push_back(dyn(y, m));
        products = detail::extend_products(evolved, products);
    }
    return products;
}

/// rho_{i,j} = tau_N(P_j* P_i) over words in Omega_D^n, with its spectrum.
/// When D^n exceeds N^2 the state is held in dual form: rho = G* G with
/// G = [vec(P_i)] / sqrt(N), and `rho` stores K = G G* (N^2 x N^2), which
/// has the same nonzero spectrum and therefore the same entropy.
struct MultiTimeState {
    int n = 0;
    std::size_t D = 0;
    ComplexMatrix rho;
    std::vector<double> spectrum;
    bool dual = false;

    double entropy() const { return spectrum_entropy(spectrum); }
    double trace_defect() const { return std::abs(trace(rho).real() - 1.0); }
    double min_eigenvalue() const { return spectrum.front(); }
};

inline constexpr double kStateTolerance = 1e-8;

namespace detail {

inline void check_state(const MultiTimeState& st) {
    if (st.trace_defect() > kStateTolerance)
        throw InvariantViolation("multi_time_state: trace differs from 1 by " + std::to_string(st.trace_defect()));
    if (st.min_eigenvalue() < -kStateTolerance)
        throw InvariantViolation("multi_time_state: negative eigenvalue " + std::to_string(st.min_eigenvalue()));
}

// K = (1/N) sum_i vec(P_i) vec(P_i)*, column-major vec.
inline ComplexMatrix dual_gram(std::span<const ComplexMatrix> products) {
    const std::size_t N = products.front().rows(), M = N * N;
    ComplexMatrix K(M, M);
    ComplexVector v(M);
    for (const auto& p : products) {
        for (std::size_t c = 0; c < N; ++c)
            for (std::size_t r = 0; r < N; ++r) v[c * N + r] = p(r, c);
        for (std::size_t a = 0; a < M; ++a) {
            if (v[a] == cplx{}) continue;
            for (std::size_t b = 0; b < M; ++b) K(a, b) += mul(v[a], std::conj(v[b]));
        }
    }
    K *= cplx{1.0 / static_cast<double>(N), 0.0};
    return K;
}

// One more time step in dual form: K -> sum_j L_j K L_j*, L_j = left product by E_j.
inline ComplexMatrix extend_dual(const std::vector<ComplexMatrix>& evolved, const ComplexMatrix& K) {
    const std::size_t N = evolved.front().rows(), M = N * N;
    ComplexMatrix out(M, M), left(M, M);
    for (const auto& E : evolved) {
        for (std::size_t c = 0; c < N; ++c)
            for (std::size_t r = 0; r < N; ++r)
                for (std::size_t s = 0; s < N; ++s) {
                    const cplx e = E(r, s);
                    if (e == cplx{}) continue;
                    for (std::size_t b = 0; b < M; ++b) left(c * N + r, b) += mul(e, K(c * N + s, b));
                }
        for (std::size_t a = 0; a < M; ++a)
            for (std::size_t c = 0; c < N; ++c)
                for (std::size_t r = 0; r < N; ++r) {
                    cplx acc{};
                    for (std::size_t s = 0; s < N; ++s) acc += mul(left(a, c * N + s), std::conj(E(r, s)));
                    out(a, c * N + r) += acc;
                }
        left = ComplexMatrix(M, M);
    }
    return out;
}

} // namespace detail

/// Multi-time state from the dual operator K (see MultiTimeState).
inline MultiTimeState multi_time_state_dual(ComplexMatrix K, int n, std::size_t D) {
    MultiTimeState st{n, D, hermitian_part(K), {}, true};
    st.spectrum = hermitian_eigenvalues(st.rho);
    detail::check_state(st);
    return st;
}

inline MultiTimeState multi_time_state(std::span<const ComplexMatrix> products, int n, std::size_t D) {
    const std::size_t W = products.size();
    if (W == 0) throw InvalidArgument("multi_time_state: no products");
    ComplexMatrix rho(W, W);
    for (std::size_t i = 0; i < W; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const cplx v = tau_pairing(products[j], products[i]);
            rho(i, j) = v;
            rho(j, i) = std::conj(v);
        }
    for (std::size_t i = 0; i < W; ++i) rho(i, i) = rho(i, i).real();
    MultiTimeState st{n, D, std::move(rho), {}, false};
    st.spectrum = hermitian_eigenvalues(st.rho);
    detail::check_state(st);
    return st;
}

/// Trace over the newest time factor (most significant word digit).
inline ComplexMatrix partial_trace_newest(const ComplexMatrix& rho, std::size_t D) {
    const std::size_t W = rho.rows();
    if (D == 0 || W % D != 0) throw InvalidArgument("partial_trace_newest: dimension not divisible by D");
    const std::size_t w = W / D;
    ComplexMatrix out(w, w);
    for (std::size_t a = 0; a < D; ++a)
        for (std::size_t i = 0; i < w; ++i)
            for (std::size_t j = 0; j < w; ++j) out(i, j) += rho(a * w + i, a * w + j);
    return out;
}

struct AlfRow {
    int n = 0;
    double entropy = 0.0;
    double increment = 0.0;
    double trace_defect = 0.0;
    double min_eigenvalue = 0.0;
    double compatibility_defect = 0.0; // vs the (n-1)-step state; 0 for n = 1
    bool dual = false;                  // state held in N^2-dimensional dual form
};

/// H_n = S(rho^{[0,n-1]}) and increments H_n - H_{n-1} (H_0 = 0), n = 1..n_max.
/// Words are kept as explicit operator products while D^n <= N^2; past that
/// the state is propagated in dual form, where the compatibility defect is
/// the identity defect of the newly evolved p.u. (the partial trace over the
/// newest factor reduces to it).
template <Dynamics Dyn>
std::vector<AlfRow> alf_entropy_curve(const Dyn& dyn, const PartitionOfUnity& pu, int n_max) {
    detail::check_memory_guard(pu.size(), n_max);
    const double square = static_cast<double>(pu.dim()) * static_cast<double>(pu.dim());
    std::vector<AlfRow> rows;
    std::vector<ComplexMatrix> products = pu.elements();
    ComplexMatrix prev_rho, K;
    bool dual = false;
    double prev_h = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        std::vector<ComplexMatrix> evolved;
        if (n > 1)
            for (const auto& y : pu.elements()) evolved.push_back(dyn(y, n - 1));
        const bool go_dual = std::pow(static_cast<double>(pu.size()), n) > square;
        AlfRow row;
        row.n = n;
        MultiTimeState st;
        if (!go_dual) {
            if (n > 1) products = detail::extend_products(evolved, products);
            st = multi_time_state(products, n, pu.size());
            if (n > 1) row.compatibility_defect = max_abs_diff(partial_trace_newest(st.rho, pu.size()), prev_rho);
            prev_rho = st.rho;
        } else {
            if (!dual) {
                K = n > 1 ? detail::dual_gram(products) : detail::dual_gram(pu.elements());
                products.clear();
                dual = true;
            }
            if (n > 1) {
                K = detail::extend_dual(evolved, K);
                row.compatibility_defect = PartitionOfUnity(evolved).identity_defect();
            }
            st = multi_time_state_dual(K, n, pu.size());
        }
        row.entropy = st.entropy();
        row.increment = row.entropy - prev_h;
        row.trace_defect = st.trace_defect();
        row.min_eigenvalue = st.min_eigenvalue();
        row.dual = st.dual;
        rows.push_back(row);
        prev_h = row.entropy;
    }
    return rows;
}

/// log N / (2 log lambda_+)
inline double breaking_time(std::int64_t N, const ToralAutomorphism& A) {
    return std::log(static_cast<double>(N)) / (2.0 * std::log(A.lambda_plus()));
}

struct ComparisonRow {
    int k = 0;
    double quantum = 0.0;        // H_k
    double quantum_increment = 0.0;
    double classical = 0.0;      // S_k, averaged over seeds
    double classical_increment = 0.0;
    double diff_per_step = 0.0;  // |H_k - S_k| / k
};

struct Comparison {
    std::int64_t N = 0;
    double k_star = 0.0;
    std::vector<ComparisonRow> rows;
};

/// Quantum ALF entropies of the quantized partition against the classical
/// Shannon entropies of the refined partition (P must cover the torus).
inline Comparison compare_quantum_classical(const CoherentFamily& fam, const ToralAutomorphism& A,
                                            const TorusPartition& P, int n_max, std::uint64_t samples,
                                            std::span<const std::uint64_t> seeds, int workers = 1) {
    if (seeds.empty()) throw InvalidArgument("compare_quantum_classical: need at least one seed");
    if (!P.is_full()) throw InvalidArgument("compare_quantum_classical: partition must cover the torus");
    const WeylDynamics dyn(fam.system(), A);
    const auto pu = quantize_partition(fam, P);
    const auto quantum = alf_entropy_curve(dyn, pu, n_max);

    std::vector<double> classical(static_cast<std::size_t>(n_max), 0.0);
    for (const auto seed : seeds) {
        const auto curve = ks_curve_from(itinerary_statistics(A, P, n_max, samples, seed, workers));
        for (int k = 0; k < n_max; ++k) classical[static_cast<std::size_t>(k)] += curve[static_cast<std::size_t>(k)].entropy;
    }
    for (auto& s : classical) s /= static_cast<double>(seeds.size());

    Comparison out{fam.N(), breaking_time(fam.N(), A), {}};
    double prev_s = 0.0;
    for (int k = 1; k <= n_max; ++k) {
        const auto idx = static_cast<std::size_t>(k - 1);
        ComparisonRow r;
        r.k = k;
        r.quantum = quantum[idx].entropy;
        r.quantum_increment = quantum[idx].increment;
        r.classical = classical[idx];
        r.classical_increment = classical[idx] - prev_s;
        r.diff_per_step = std::abs(r.quantum - r.classical) / k;
        prev_s = classical[idx];
        out.rows.push_back(r);
    }
    return out;
}

} // namespace catmap
