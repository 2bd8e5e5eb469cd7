#pragma once

// Independent sweep cells on a bounded worker pool. Results land in
// per-cell slots, so assembly order never depends on scheduling.

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "catmap/error.hpp"

namespace catmap::lab {

template <class R>
struct CellOutcome {
    R value{};
    bool ok = false;
    std::string error; // "<kind>: <message>" when !ok
};

namespace detail {

inline std::string describe_failure(std::exception_ptr ep) {
    try {
        std::rethrow_exception(ep);
    } catch (const MemoryGuardError& e) {
        return std::string("memory_guard: ") + e.what();
    } catch (const InvariantViolation& e) {
        return std::string("invariant: ") + e.what();
    } catch (const ConvergenceError& e) {
        return std::string("convergence: ") + e.what();
    } catch (const InvalidArgument& e) {
        return std::string("invalid_argument: ") + e.what();
    } catch (const std::exception& e) {
        return std::string("error: ") + e.what();
    } catch (...) {
        return "error: unknown exception";
    }
}

} // namespace detail

/// Runs fn(i) for i in [0, count) on up to `workers` threads. An exception
/// fails only its own cell.
template <class R>
std::vector<CellOutcome<R>> run_cells(std::size_t count, int workers, const std::function<R(std::size_t)>& fn) {
    std::vector<CellOutcome<R>> out(count);
    auto run_one = [&](std::size_t i) {
        try {
            out[i].value = fn(i);
            out[i].ok = true;
        } catch (...) {
            out[i].error = detail::describe_failure(std::current_exception());
        }
    };
    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) run_one(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_threads; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) run_one(i);
            });
    }
    return out;
}

} // namespace catmap::lab
