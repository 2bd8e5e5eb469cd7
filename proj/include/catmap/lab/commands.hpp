#pragma once

// Subcommand bodies: each turns a validated config into result tables.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "catmap/alf.hpp"
#include "catmap/coherent.hpp"
#include "catmap/lab/config.hpp"
#include "catmap/lab/runner.hpp"
#include "catmap/lab/table.hpp"
#include "catmap/quantization.hpp"
#include "catmap/torus.hpp"
#include "catmap/weyl.hpp"

namespace catmap::lab {

enum ExitCode : int { kExitOk = 0, kExitInvariant = 1, kExitConfig = 2 };

struct CommandResult {
    std::vector<Table> tables;
    int exit_code = kExitOk;
    std::vector<std::string> failures;
};

// ---------------------------------------------------------------- verify

struct CheckRow {
    std::string check;
    double residual = 0.0;
    double tolerance = 0.0;
    std::string detail;
    bool pass() const { return std::isfinite(residual) && residual <= tolerance; }
};

namespace detail {

inline constexpr double kAlgebraTolerance = 1e-12;
inline constexpr double kFoldingTolerance = 1e-10;
inline constexpr double kOvercompleteTolerance = 1e-10;
inline constexpr double kAutomorphismTolerance = 1e-10;
inline constexpr std::int64_t kExhaustiveLimit = 16;
inline constexpr int kSampledPairs = 64;

// Label pairs: exhaustive for small N, a fixed pseudo-random subset otherwise.
inline std::vector<std::pair<WeylLabel, WeylLabel>> label_pairs(std::int64_t N, std::uint64_t seed) {
    std::vector<std::pair<WeylLabel, WeylLabel>> out;
    if (N <= kExhaustiveLimit) {
        for (std::int64_t a = 0; a < N * N; ++a)
            for (std::int64_t b = 0; b < N * N; ++b) out.push_back({{a / N, a % N}, {b / N, b % N}});
        return out;
    }
    std::mt19937_64 eng(seed);
    std::uniform_int_distribution<std::int64_t> d(0, N - 1);
    for (int i = 0; i < kSampledPairs; ++i) out.push_back({{d(eng), d(eng)}, {d(eng), d(eng)}});
    return out;
}


inline std::pair<double, double> algebra_residuals(const WeylSystem& sys, std::uint64_t seed) {
    const std::int64_t N = sys.N();
    const double pi = std::numbers::pi;
    double comp = 0.0, comm = 0.0;
    for (const auto& [n, m] : label_pairs(N, seed)) {
        const double sig = static_cast<double>(symplectic(n, m));
        const cplx c_comp = std::polar(1.0, pi * sig / static_cast<double>(N));
        const cplx c_comm = std::polar(1.0, 2.0 * pi * sig / static_cast<double>(N));
        for (std::size_t j = 0; j < sys.dim(); ++j) {
            ComplexVector e(sys.dim());
            e[j] = 1.0;
            const auto wm = weyl_apply(sys, m, e);
            const auto wnm = weyl_apply(sys, n, wm);
            const auto wsum = weyl_apply(sys, n + m, e);
            const auto wmn = weyl_apply(sys, m, weyl_apply(sys, n, e));
            for (std::size_t i = 0; i < sys.dim(); ++i) {
                comp = std::max(comp, std::abs(wnm[i] - c_comp * wsum[i]));
                comm = std::max(comm, std::abs(wnm[i] - c_comm * wmn[i]));
            }
        }
    }
    return {comp, comm};
}

// [W(e_i)]^N against the folding scalar, and W(N n) from the label formula.
inline double folding_residual(const WeylSystem& sys) {
    const std::int64_t N = sys.N();
    double r = 0.0;
    for (const WeylLabel e : {WeylLabel{1, 0}, WeylLabel{0, 1}, WeylLabel{1, 1}}) {
        const cplx s = folding_phase(sys, e);
        for (std::size_t j = 0; j < sys.dim(); ++j) {
            ComplexVector v(sys.dim());
            v[j] = 1.0;
            ComplexVector w = v;
            for (std::int64_t t = 0; t < N; ++t) w = weyl_apply(sys, e, w);
            const auto direct = weyl_apply(sys, {N * e.n1, N * e.n2}, v);
            for (std::size_t i = 0; i < sys.dim(); ++i) {
                r = std::max(r, std::abs(w[i] - s * v[i]));
                r = std::max(r, std::abs(direct[i] - s * v[i]));
            }
        }
    }
    return r;
}

// |[W(e_i)]^N - [W(A e_i)]^N| as scalars.
inline double phase_consistency_residual(const WeylSystem& sys, const ToralAutomorphism& A) {
    double r = 0.0;
    for (const WeylLabel e : {WeylLabel{1, 0}, WeylLabel{0, 1}})
        r = std::max(r, std::abs(folding_phase(sys, e) - folding_phase(sys, A.matrix() * e)));
    return r;
}

inline ComplexMatrix random_matrix(std::size_t n, std::mt19937_64& eng) {
    std::normal_distribution<double> g;
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = {g(eng), g(eng)};
    return m;
}

/// Largest violation of trace, norm, product and adjoint preservation.
template <Dynamics Dyn>
double automorphism_residual(const Dyn& dyn, std::size_t n, int k_max, int matrices, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    double r = 0.0;
    for (int t = 0; t < matrices; ++t) {
        const auto x = random_matrix(n, eng);
        const auto y = random_matrix(n, eng);
        const double scale = std::max({1.0, max_abs(x) * max_abs(y) * static_cast<double>(n)});
        for (int k = 1; k <= k_max; ++k) {
            const auto tx = dyn(x, k);
            const auto ty = dyn(y, k);
            r = std::max(r, std::abs(normalized_trace(tx) - normalized_trace(x)));
            r = std::max(r, std::abs(hs_norm(tx) - hs_norm(x)));
            r = std::max(r, max_abs_diff(dyn(x * y, k), tx * ty) / scale);
            r = std::max(r, max_abs_diff(dyn(x.adjoint(), k), tx.adjoint()));
        }
    }
    return r;
}

inline std::vector<CheckRow> verify_cell(const ExperimentConfig& cfg, std::int64_t N) {
    const auto A = cfg.automorphism();
    const auto sys = cfg.weyl_system(N);
    const std::uint64_t seed = cfg.seeds.front();
    std::vector<CheckRow> rows;
    const auto [comp, comm] = algebra_residuals(sys, seed);
    rows.push_back({"weyl_composition", comp, kAlgebraTolerance, ""});
    rows.push_back({"weyl_commutation", comm, kAlgebraTolerance, ""});
    rows.push_back({"folding", folding_residual(sys), kFoldingTolerance, ""});
    rows.push_back({"folding_compatibility", phase_consistency_residual(sys, A), kFoldingTolerance,
                    "u=" + std::to_string(sys.u().num) + "/" + std::to_string(sys.u().den) +
                        " v=" + std::to_string(sys.v().num) + "/" + std::to_string(sys.v().den)});

    const CoherentFamily fam(sys);
    rows.push_back({"coherent_norm", std::abs(norm2(fam.reference()) - 1.0), kAlgebraTolerance, ""});
    rows.push_back({"overcompleteness", verify_overcompleteness(fam), kOvercompleteTolerance, ""});

    try {
        const auto pu = quantize_partition(fam, cfg.partition());
        rows.push_back({"partition_of_unity", pu.identity_defect(), kPartitionTolerance,
                        "D=" + std::to_string(pu.size())});
    } catch (const std::exception& e) {
        rows.push_back({"partition_of_unity", std::numeric_limits<double>::quiet_NaN(), kPartitionTolerance, e.what()});
    }

    try {
        const WeylDynamics dyn(sys, A);
        const int k_max = N <= 64 ? 3 : 1;
        rows.push_back({"automorphism", automorphism_residual(dyn, sys.dim(), k_max, 2, seed), kAutomorphismTolerance,
                        "k<=" + std::to_string(k_max)});
        const auto e0 = egorov_discrepancy(fam, A, TrigSpec::monomial(1, 0), 0);
        rows.push_back({"egorov_k0", e0.discrepancy, kAlgebraTolerance, ""});
    } catch (const InvalidArgument& e) {
        rows.push_back({"automorphism", std::numeric_limits<double>::quiet_NaN(), kAutomorphismTolerance, e.what()});
    }
    return rows;
}

inline Value opt(double x, bool ok) { return ok ? Value{x} : Value{}; }

inline std::string anchor_name(Anchor a) { return a == Anchor::label ? "label" : "reference_center"; }

} // namespace detail

inline CommandResult cmd_verify(const ExperimentConfig& cfg, int workers) {
    Table t{"verify", {"N", "check", "residual", "tolerance", "pass", "detail"}, {}};
    const auto cells = run_cells<std::vector<CheckRow>>(
        cfg.N.size(), workers, [&](std::size_t i) { return detail::verify_cell(cfg, cfg.N[i]); });
    CommandResult res;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::int64_t N = cfg.N[i];
        if (!cells[i].ok) {
            t.add({N, std::string("cell"), Value{}, Value{}, false, cells[i].error});
            res.failures.push_back("N=" + std::to_string(N) + " cell: " + cells[i].error);
            continue;
        }
        for (const auto& r : cells[i].value) {
            t.add({N, r.check, std::isfinite(r.residual) ? Value{r.residual} : Value{}, r.tolerance, r.pass(), r.detail});
            if (!r.pass())
                res.failures.push_back("N=" + std::to_string(N) + " " + r.check + ": residual " +
                                       format_double(r.residual) + " > " + format_double(r.tolerance) +
                                       (r.detail.empty() ? "" : " (" + r.detail + ")"));
        }
    }
    res.tables.push_back(std::move(t));
    res.exit_code = res.failures.empty() ? kExitOk : kExitInvariant;
    return res;
}

// ---------------------------------------------------------------- classical-ks

inline CommandResult cmd_classical_ks(const ExperimentConfig& cfg, int workers) {
    const auto A = cfg.automorphism();
    const auto P = cfg.partition();
    Table t{"classical_ks", {"seed", "n", "S_n", "dS_n", "stderr", "distinct_words", "undersampled", "status"}, {}};
    const auto cells = run_cells<std::vector<ItineraryDistribution>>(cfg.seeds.size(), workers, [&](std::size_t i) {
        return itinerary_statistics(A, P, cfg.n_max, cfg.samples, cfg.seeds[i]);
    });
    CommandResult res;
    std::vector<ItineraryDistribution> pooled;
    bool pooled_ok = true;
    auto emit = [&](const Value& seed, const std::vector<ItineraryDistribution>& d) {
        for (const auto& r : ks_curve_from(d))
            t.add({seed, std::int64_t{r.n}, r.entropy, r.increment, r.std_error,
                   static_cast<std::int64_t>(r.distinct_words), r.undersampled, std::string("ok")});
    };
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Value seed = std::to_string(cfg.seeds[i]);
        if (!cells[i].ok) {
            t.add({seed, Value{}, Value{}, Value{}, Value{}, Value{}, Value{}, cells[i].error});
            res.failures.push_back("seed " + std::to_string(cfg.seeds[i]) + ": " + cells[i].error);
            pooled_ok = false;
            continue;
        }
        emit(seed, cells[i].value);
        if (pooled.empty()) {
            pooled = cells[i].value;
        } else {
            for (std::size_t n = 0; n < pooled.size(); ++n) pooled[n].merge(cells[i].value[n]);
        }
    }
    if (pooled_ok && !pooled.empty()) emit(std::string("pooled"), pooled);
    res.tables.push_back(std::move(t));
    res.exit_code = res.failures.empty() ? kExitOk : kExitInvariant;
    return res;
}

// ---------------------------------------------------------------- alf

inline CommandResult cmd_alf(const ExperimentConfig& cfg, int workers) {
    const auto A = cfg.automorphism();
    const auto P = cfg.partition();
    Table t{"alf",
            {"N", "k", "H_k", "dH_k", "S_k", "dS_k", "diff_per_step", "k_star", "status"},
            {}};
    const auto cells = run_cells<Comparison>(cfg.N.size(), workers, [&](std::size_t i) {
        const CoherentFamily fam(cfg.weyl_system(cfg.N[i]));
        return compare_quantum_classical(fam, A, P, cfg.n_max, cfg.samples, cfg.seeds);
    });
    t.meta["map"] = cfg.map;
    t.meta["partition"] = cfg.partition_name;
    t.meta["seeds"] = cfg.seeds;
    t.meta["samples"] = cfg.samples;
    t.meta["phases"] = nlohmann::json::array();
    for (const std::int64_t N : cfg.N) {
        const auto sys = cfg.weyl_system(N);
        t.meta["phases"].push_back({{"N", N},
                                    {"u", std::to_string(sys.u().num) + "/" + std::to_string(sys.u().den)},
                                    {"v", std::to_string(sys.v().num) + "/" + std::to_string(sys.v().den)}});
    }
    CommandResult res;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::int64_t N = cfg.N[i];
        if (!cells[i].ok) {
            t.add({N, Value{}, Value{}, Value{}, Value{}, Value{}, Value{}, breaking_time(N, A), cells[i].error});
            res.failures.push_back("N=" + std::to_string(N) + ": " + cells[i].error);
            continue;
        }
        for (const auto& r : cells[i].value.rows)
            t.add({N, std::int64_t{r.k}, r.quantum, r.quantum_increment, r.classical, r.classical_increment,
                   r.diff_per_step, cells[i].value.k_star, std::string("ok")});
    }
    res.tables.push_back(std::move(t));
    res.exit_code = res.failures.empty() ? kExitOk : kExitInvariant;
    return res;
}

// ---------------------------------------------------------------- egorov

namespace detail {

struct KRow {
    int k = 0;
    double value = 0.0;
    std::size_t count = 0;
    bool flag = false;
    std::string status = "ok";
};

} // namespace detail

inline CommandResult cmd_egorov(const ExperimentConfig& cfg, int workers) {
    const auto A = cfg.automorphism();
    const std::size_t nf = cfg.functions.size();
    Table t{"egorov", {"N", "function", "anchor", "k", "discrepancy", "approximate", "status"}, {}};
    const std::string anchor = detail::anchor_name(cfg.anchor);
    const auto cells = run_cells<std::vector<detail::KRow>>(cfg.N.size() * nf, workers, [&](std::size_t c) {
        const CoherentFamily fam(cfg.weyl_system(cfg.N[c / nf]));
        std::vector<detail::KRow> rows;
        for (const int k : cfg.k) {
            detail::KRow r;
            r.k = k;
            try {
                const auto e = egorov_discrepancy(fam, A, cfg.functions[c % nf], k, cfg.anchor);
                r.value = e.discrepancy;
                r.flag = e.approximate;
            } catch (...) {
                r.status = detail::describe_failure(std::current_exception());
            }
            rows.push_back(r);
        }
        return rows;
    });
    CommandResult res;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const std::int64_t N = cfg.N[c / nf];
        const std::string& fname = cfg.function_names[c % nf];
        if (!cells[c].ok) {
            t.add({N, fname, anchor, Value{}, Value{}, Value{}, cells[c].error});
            res.failures.push_back("N=" + std::to_string(N) + " " + fname + ": " + cells[c].error);
            continue;
        }
        for (const auto& r : cells[c].value) {
            const bool ok = r.status == "ok";
            t.add({N, fname, anchor, std::int64_t{r.k}, detail::opt(r.value, ok), ok ? Value{r.flag} : Value{}, r.status});
            if (!ok) res.failures.push_back("N=" + std::to_string(N) + " k=" + std::to_string(r.k) + ": " + r.status);
        }
    }
    res.tables.push_back(std::move(t));
    res.exit_code = res.failures.empty() ? kExitOk : kExitInvariant;
    return res;
}

// ---------------------------------------------------------------- localization

inline CommandResult cmd_localization(const ExperimentConfig& cfg, int workers) {
    const auto A = cfg.automorphism();
    const std::uint64_t seed = cfg.seeds.front();
    Table t{"localization",
            {"N", "k", "d0", "seed", "anchor", "probe_max", "valid_pairs", "empty_sample", "status"},
            {}};
    const std::string anchor = detail::anchor_name(cfg.anchor);
    const auto cells = run_cells<std::vector<detail::KRow>>(cfg.N.size(), workers, [&](std::size_t i) {
        const CoherentFamily fam(cfg.weyl_system(cfg.N[i]));
        std::vector<detail::KRow> rows;
        for (const int k : cfg.k) {
            detail::KRow r;
            r.k = k;
            try {
                const auto p = dynamical_localization_probe(fam, A, k, cfg.d0, cfg.trials, seed, cfg.anchor);
                r.value = p.max_value;
                r.count = p.valid_pairs;
                r.flag = p.empty();
            } catch (...) {
                r.status = detail::describe_failure(std::current_exception());
            }
            rows.push_back(r);
        }
        return rows;
    });
    CommandResult res;
    const auto seed_v = static_cast<std::int64_t>(seed);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::int64_t N = cfg.N[i];
        if (!cells[i].ok) {
            t.add({N, Value{}, cfg.d0, seed_v, anchor, Value{}, Value{}, Value{}, cells[i].error});
            res.failures.push_back("N=" + std::to_string(N) + ": " + cells[i].error);
            continue;
        }
        for (const auto& r : cells[i].value) {
            const bool ok = r.status == "ok";
            t.add({N, std::int64_t{r.k}, cfg.d0, seed_v, anchor, detail::opt(r.value, ok && !r.flag),
                   ok ? Value{static_cast<std::int64_t>(r.count)} : Value{}, ok ? Value{r.flag} : Value{}, r.status});
            if (!ok) res.failures.push_back("N=" + std::to_string(N) + " k=" + std::to_string(r.k) + ": " + r.status);
        }
    }
    res.tables.push_back(std::move(t));
    res.exit_code = res.failures.empty() ? kExitOk : kExitInvariant;
    return res;
}

// ---------------------------------------------------------------- sweep

inline CommandResult cmd_sweep(const ExperimentConfig& cfg, int workers) {
    CommandResult all;
    for (auto* fn : {&cmd_classical_ks, &cmd_alf, &cmd_egorov, &cmd_localization}) {
        auto r = fn(cfg, workers);
        for (auto& tab : r.tables) all.tables.push_back(std::move(tab));
        for (auto& f : r.failures) all.failures.push_back(std::move(f));
        all.exit_code = std::max(all.exit_code, r.exit_code);
    }
    return all;
}

using CommandFn = CommandResult (*)(const ExperimentConfig&, int);

inline CommandFn find_command(const std::string& name) {
    if (name == "verify") return &cmd_verify;
    if (name == "classical-ks") return &cmd_classical_ks;
    if (name == "alf") return &cmd_alf;
    if (name == "egorov") return &cmd_egorov;
    if (name == "localization") return &cmd_localization;
    if (name == "sweep") return &cmd_sweep;
    return nullptr;
}

} // namespace catmap::lab
