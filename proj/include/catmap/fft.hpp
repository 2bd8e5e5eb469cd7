#pragma once

// Thin RAII layer over FFTW plans. Plans are cached per (shape, sign) and
// created under a lock; execution uses the new-array interface, which is
// safe to call concurrently.

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "catmap/error.hpp"

namespace catmap::fft {

namespace detail {

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int rank, int n, int sign) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_tuple(rank, n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second.get();
        const std::size_t len = rank == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
        std::vector<std::complex<double>> in(len), out(len);
        auto* pin = reinterpret_cast<fftw_complex*>(in.data());
        auto* pout = reinterpret_cast<fftw_complex*>(out.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan p = rank == 1 ? fftw_plan_dft_1d(n, pin, pout, sign, flags)
                                : fftw_plan_dft_2d(n, n, pin, pout, sign, flags);
        if (!p) throw Error("fftw: plan creation failed");
        return plans_.emplace(key, PlanHandle(p)).first->second.get();
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, PlanHandle> plans_;
};

inline void execute(int rank, int n, int sign, std::span<const std::complex<double>> in,
                    std::span<std::complex<double>> out) {
    fftw_plan p = PlanCache::instance().get(rank, n, sign);
    // FFTW does not modify the input of an out-of-place complex transform.
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

} // namespace detail

/// out[k] = sum_j in[j] exp(-2 pi i j k / n)
inline void forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
    detail::execute(1, static_cast<int>(in.size()), FFTW_FORWARD, in, out);
}

/// out[k] = sum_j in[j] exp(+2 pi i j k / n), unnormalized.
inline void backward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
    detail::execute(1, static_cast<int>(in.size()), FFTW_BACKWARD, in, out);
}

/// Row-major n x n forward transform:
/// out[k1][k2] = sum in[p1][p2] exp(-2 pi i (p1 k1 + p2 k2) / n)
inline void forward_2d(int n, std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
    detail::execute(2, n, FFTW_FORWARD, in, out);
}

} // namespace catmap::fft
