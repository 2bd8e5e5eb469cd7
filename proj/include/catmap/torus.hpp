#pragma once

// Classical side: hyperbolic toral automorphisms, the torus metric,
// rectangle partitions and Monte-Carlo itinerary statistics.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "catmap/error.hpp"

namespace catmap {

/// Exact 2x2 integer matrix.
struct IntMatrix2 {
    std::int64_t a = 1, b = 0, c = 0, d = 1;

    friend bool operator==(const IntMatrix2&, const IntMatrix2&) = default;

    friend IntMatrix2 operator*(const IntMatrix2& l, const IntMatrix2& r) {
        auto mul = [](std::int64_t x, std::int64_t y, std::int64_t z, std::int64_t w) {
            const __int128 v = static_cast<__int128>(x) * y + static_cast<__int128>(z) * w;
            if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
                throw InvalidArgument("integer matrix power overflows 64 bits");
            return static_cast<std::int64_t>(v);
        };
        return {mul(l.a, r.a, l.b, r.c), mul(l.a, r.b, l.b, r.d), mul(l.c, r.a, l.d, r.c),
                mul(l.c, r.b, l.d, r.d)};
    }

    std::int64_t det() const { return a * d - b * c; }
    IntMatrix2 transpose() const { return {a, c, b, d}; }
};

/// Hyperbolic automorphism of the 2-torus, x -> A x mod 1.
class ToralAutomorphism {
public:
    ToralAutomorphism(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) : m_{a, b, c, d} {
        if (m_.det() != 1) throw InvalidArgument("toral automorphism: determinant must be 1");
        if (std::llabs(a + d) <= 2) throw InvalidArgument("toral automorphism: |trace| must exceed 2");
        const double t = 0.5 * static_cast<double>(a + d);
        // Larger-modulus eigenvalue has the sign of t; stretch factor is its modulus.
        lambda_plus_ = std::abs(t) + std::sqrt(t * t - 1.0);
        lambda_minus_ = 1.0 / lambda_plus_;
    }

    static ToralAutomorphism arnold_cat() { return {1, 1, 1, 2}; }

    const IntMatrix2& matrix() const { return m_; }
    std::int64_t a() const { return m_.a; }
    std::int64_t b() const { return m_.b; }
    std::int64_t c() const { return m_.c; }
    std::int64_t d() const { return m_.d; }
    std::int64_t trace() const { return m_.a + m_.d; }
    double semitrace() const { return 0.5 * static_cast<double>(trace()); }
    double lambda_plus() const { return lambda_plus_; }
    double lambda_minus() const { return lambda_minus_; }
    double lyapunov_exponent() const { return std::log(lambda_plus_); }

    IntMatrix2 inverse() const { return {m_.d, -m_.b, -m_.c, m_.a}; }

    /// A^k for any integer k, exact.
    IntMatrix2 power(int k) const {
        IntMatrix2 base = k >= 0 ? m_ : inverse();
        unsigned e = static_cast<unsigned>(k >= 0 ? k : -k);
        IntMatrix2 acc{};
        while (e) {
            if (e & 1u) acc = acc * base;
            e >>= 1u;
            if (e) base = base * base;
        }
        return acc;
    }

    friend bool operator==(const ToralAutomorphism& l, const ToralAutomorphism& r) { return l.m_ == r.m_; }

private:
    IntMatrix2 m_;
    double lambda_plus_ = 0.0;
    double lambda_minus_ = 0.0;
};

struct TorusPoint {
    double x1 = 0.0;
    double x2 = 0.0;
};

inline double wrap_unit(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r = 0.0;
    return r;
}

inline TorusPoint wrap(double x1, double x2) { return {wrap_unit(x1), wrap_unit(x2)}; }

/// A^k x mod 1, from the exact k-th integer power applied to the original point.
inline TorusPoint apply(const ToralAutomorphism& A, TorusPoint x, int k) {
    if (k == 0) return x;
    const IntMatrix2 m = A.power(k);
    constexpr std::int64_t lim = std::int64_t{1} << 53;
    if (std::llabs(m.a) > lim || std::llabs(m.b) > lim || std::llabs(m.c) > lim || std::llabs(m.d) > lim)
        throw InvalidArgument("apply: matrix power too large for double-precision trajectory");
    auto part = [](std::int64_t coeff, double x) {
        // coeff * x mod 1 split to keep the product's integer part out of the sum.
        const double p = static_cast<double>(coeff) * x;
        return p - std::floor(p);
    };
    return wrap(part(m.a, x.x1) + part(m.b, x.x2), part(m.c, x.x1) + part(m.d, x.x2));
}

/// Length of the shortest segment joining x and y on the torus.
inline double torus_distance(TorusPoint x, TorusPoint y) {
    double best = std::numeric_limits<double>::infinity();
    for (int n1 = -1; n1 <= 1; ++n1)
        for (int n2 = -1; n2 <= 1; ++n2)
            best = std::min(best, std::hypot(x.x1 - y.x1 + n1, x.x2 - y.x2 + n2));
    return best;
}

/// Finite-time estimate of the Lyapunov exponent (nats per step) from two
/// trajectories started delta0 apart. The initial displacement is aligned
/// with the expanding direction by a burn-in of n tangent-map steps.
inline double estimate_lyapunov(const ToralAutomorphism& A, double delta0, int n) {
    if (n < 1) throw InvalidArgument("estimate_lyapunov: n must be >= 1");
    if (!(delta0 > 0.0)) throw InvalidArgument("estimate_lyapunov: delta0 must be positive");
    if (delta0 * std::pow(A.lambda_plus(), n) > 0.1)
        throw InvalidArgument("estimate_lyapunov: delta0 too large for n steps (separation saturates)");

    const IntMatrix2 m = A.power(n);
    double e1 = static_cast<double>(m.a) + 0.5 * static_cast<double>(m.b);
    double e2 = static_cast<double>(m.c) + 0.5 * static_cast<double>(m.d);
    const double len = std::hypot(e1, e2);
    e1 /= len;
    e2 /= len;

    const TorusPoint x0{0.7071067811865476, 0.5773502691896258};
    const TorusPoint y0 = wrap(x0.x1 + delta0 * e1, x0.x2 + delta0 * e2);
    const double d0 = torus_distance(x0, y0);
    const double dn = torus_distance(apply(A, x0, n), apply(A, y0, n));
    if (dn > 0.1) throw InvalidArgument("estimate_lyapunov: separation saturated");
    return std::log(dn / d0) / n;
}

/// Half-open axis-aligned rectangle [x_lo,x_hi) x [y_lo,y_hi) inside the unit square.
struct Rect {
    double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;

    bool contains(TorusPoint p) const { return x_lo <= p.x1 && p.x1 < x_hi && y_lo <= p.x2 && p.x2 < y_hi; }
    double area() const { return (x_hi - x_lo) * (y_hi - y_lo); }
    double overlap_area(const Rect& o) const {
        const double w = std::min(x_hi, o.x_hi) - std::max(x_lo, o.x_lo);
        const double h = std::min(y_hi, o.y_hi) - std::max(y_lo, o.y_lo);
        return (w > 0.0 && h > 0.0) ? w * h : 0.0;
    }
    double distance_to(TorusPoint p) const {
        const double dx = std::max({x_lo - p.x1, 0.0, p.x1 - x_hi});
        const double dy = std::max({y_lo - p.x2, 0.0, p.x2 - y_hi});
        return std::hypot(dx, dy);
    }
};

/// Finite union of disjoint rectangles.
using Atom = std::vector<Rect>;

inline double atom_area(const Atom& atom) {
    double s = 0.0;
    for (const auto& r : atom) s += r.area();
    return s;
}

inline bool atom_contains(const Atom& atom, TorusPoint p) {
    for (const auto& r : atom)
        if (r.contains(p)) return true;
    return false;
}

/// Disjoint atoms labelled 1..D (stored 0-based).
class TorusPartition {
public:
    explicit TorusPartition(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
        if (atoms_.empty()) throw InvalidArgument("partition: needs at least one atom");
        std::vector<const Rect*> all;
        for (const auto& atom : atoms_) {
            if (atom.empty()) throw InvalidArgument("partition: empty atom");
            for (const auto& r : atom) {
                if (!(0.0 <= r.x_lo && r.x_lo < r.x_hi && r.x_hi <= 1.0 && 0.0 <= r.y_lo && r.y_lo < r.y_hi &&
                      r.y_hi <= 1.0))
                    throw InvalidArgument("partition: rectangle outside the unit square or degenerate");
                all.push_back(&r);
            }
        }
        for (std::size_t i = 0; i < all.size(); ++i)
            for (std::size_t j = i + 1; j < all.size(); ++j)
                if (all[i]->overlap_area(*all[j]) > 0.0) throw InvalidArgument("partition: overlapping rectangles");
    }

    static TorusPartition whole() { return TorusPartition({{Rect{}}}); }
    static TorusPartition vertical_halves() {
        return TorusPartition({{Rect{0.0, 0.5, 0.0, 1.0}}, {Rect{0.5, 1.0, 0.0, 1.0}}});
    }
    static TorusPartition quadrants() {
        return TorusPartition({{Rect{0.0, 0.5, 0.0, 0.5}},
                               {Rect{0.5, 1.0, 0.0, 0.5}},
                               {Rect{0.0, 0.5, 0.5, 1.0}},
                               {Rect{0.5, 1.0, 0.5, 1.0}}});
    }

    std::size_t size() const { return atoms_.size(); }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const Atom& atom(std::size_t i) const { return atoms_.at(i); }

    double covered_area() const {
        double s = 0.0;
        for (const auto& a : atoms_) s += atom_area(a);
        return s;
    }
    bool is_full() const { return std::abs(covered_area() - 1.0) <= 1e-12; }

    std::optional<std::size_t> locate(TorusPoint p) const {
        for (std::size_t i = 0; i < atoms_.size(); ++i)
            if (atom_contains(atoms_[i], p)) return i;
        return std::nullopt;
    }

    /// Index of the atom nearest to p; lowest index wins ties.
    std::size_t nearest(TorusPoint p) const {
        std::size_t best = 0;
        double dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < atoms_.size(); ++i)
            for (const auto& r : atoms_[i]) {
                const double d = r.distance_to(p);
                if (d < dist) {
                    dist = d;
                    best = i;
                }
            }
        return best;
    }

private:
    std::vector<Atom> atoms_;
};

struct Itinerary {
    std::vector<int> word; // labels 1..D, word[j] = atom of T^j x
    int unassigned = 0;    // points that fell on no atom and were snapped
};

inline Itinerary itinerary(const ToralAutomorphism& A, const TorusPartition& P, TorusPoint x, int n) {
    if (n < 1) throw InvalidArgument("itinerary: n must be >= 1");
    if (!P.is_full()) throw InvalidArgument("itinerary: partition does not cover the torus");
    Itinerary it;
    it.word.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const TorusPoint y = apply(A, x, j);
        const auto idx = P.locate(y);
        if (idx) {
            it.word.push_back(static_cast<int>(*idx) + 1);
        } else {
            it.word.push_back(static_cast<int>(P.nearest(y)) + 1);
            ++it.unassigned;
        }
    }
    return it;
}

/// Empirical distribution of length-n itineraries. Words are encoded with
/// i_j as the base-D digit of weight D^j (newest time most significant).
struct ItineraryDistribution {
    int n = 0;
    int D = 0;
    std::map<std::uint64_t, std::uint64_t> counts;
    std::uint64_t sample_count = 0;
    std::uint64_t unassigned = 0;

    std::map<std::uint64_t, double> weights() const {
        std::map<std::uint64_t, double> w;
        for (const auto& [k, c] : counts) w[k] = static_cast<double>(c) / static_cast<double>(sample_count);
        return w;
    }

    double weight(std::span<const int> word) const {
        const auto it = counts.find(encode(word));
        return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(sample_count);
    }

    std::uint64_t encode(std::span<const int> word) const {
        std::uint64_t code = 0, place = 1;
        for (int label : word) {
            code += static_cast<std::uint64_t>(label - 1) * place;
            place *= static_cast<std::uint64_t>(D);
        }
        return code;
    }

    std::vector<int> decode(std::uint64_t code) const {
        std::vector<int> w(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            w[static_cast<std::size_t>(j)] = static_cast<int>(code % static_cast<std::uint64_t>(D)) + 1;
            code /= static_cast<std::uint64_t>(D);
        }
        return w;
    }

    void merge(const ItineraryDistribution& o) {
        if (o.n != n || o.D != D) throw InvalidArgument("merge: incompatible distributions");
        for (const auto& [k, c] : o.counts) counts[k] += c;
        sample_count += o.sample_count;
        unassigned += o.unassigned;
    }
};

inline constexpr int kSampleShards = 8;

namespace detail {

inline std::mt19937_64 shard_engine(std::uint64_t seed, int shard) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(shard), 0x5eedu};
    return std::mt19937_64(seq);
}

// One shard: counts of prefixes of length 1..n_max.
inline std::vector<ItineraryDistribution> sample_shard(const ToralAutomorphism& A, const TorusPartition& P,
                                                       int n_max, std::uint64_t samples, std::uint64_t seed,
                                                       int shard) {
    const int D = static_cast<int>(P.size());
    std::vector<ItineraryDistribution> out(static_cast<std::size_t>(n_max));
    for (int n = 1; n <= n_max; ++n) out[static_cast<std::size_t>(n - 1)] = {n, D, {}, samples, 0};
    std::vector<IntMatrix2> powers(static_cast<std::size_t>(n_max));
    for (int j = 0; j < n_max; ++j) powers[static_cast<std::size_t>(j)] = A.power(j);

    auto engine = shard_engine(seed, shard);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::uint64_t s = 0; s < samples; ++s) {
        const TorusPoint x{unit(engine), unit(engine)};
        std::uint64_t code = 0, place = 1;
        for (int j = 0; j < n_max; ++j) {
            const TorusPoint y = apply(A, x, j);
            std::size_t idx;
            if (auto hit = P.locate(y)) {
                idx = *hit;
            } else {
                idx = P.nearest(y);
                ++out[static_cast<std::size_t>(j)].unassigned;
            }
            code += idx * place;
            place *= static_cast<std::uint64_t>(D);
            ++out[static_cast<std::size_t>(j)].counts[code];
        }
    }
    return out;
}

} // namespace detail

/// Monte-Carlo itinerary statistics for every word length 1..n_max from one
/// sample of `samples` uniform points. Deterministic in `seed`; the sample
/// budget is split over a fixed number of substreams, so the result does
/// not depend on `workers`.
inline std::vector<ItineraryDistribution> itinerary_statistics(const ToralAutomorphism& A, const TorusPartition& P,
                                                               int n_max, std::uint64_t samples,
                                                               std::uint64_t seed, int workers = 1) {
    if (n_max < 1) throw InvalidArgument("itinerary_statistics: n must be >= 1");
    if (samples < 1) throw InvalidArgument("itinerary_statistics: need at least one sample");
    if (!P.is_full()) throw InvalidArgument("itinerary_statistics: partition does not cover the torus");
    const double words = std::pow(static_cast<double>(P.size()), n_max);
    if (words > 1.8e19) throw InvalidArgument("itinerary_statistics: word space exceeds 64-bit codes");

    std::vector<std::vector<ItineraryDistribution>> parts(kSampleShards);
    auto run = [&](int shard) {
        const std::uint64_t share = samples / kSampleShards + (static_cast<std::uint64_t>(shard) < samples % kSampleShards);
        parts[static_cast<std::size_t>(shard)] = detail::sample_shard(A, P, n_max, share, seed, shard);
    };
    workers = std::clamp(workers, 1, kSampleShards);
    if (workers == 1) {
        for (int s = 0; s < kSampleShards; ++s) run(s);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int s = w; s < kSampleShards; s += workers) run(s);
            });
        for (auto& t : pool) t.join();
    }
    std::vector<ItineraryDistribution> merged = parts[0];
    for (int s = 1; s < kSampleShards; ++s)
        for (int n = 0; n < n_max; ++n) merged[static_cast<std::size_t>(n)].merge(parts[static_cast<std::size_t>(s)][static_cast<std::size_t>(n)]);
    return merged;
}

inline ItineraryDistribution refined_volumes(const ToralAutomorphism& A, const TorusPartition& P, int n,
                                             std::uint64_t samples, std::uint64_t seed, int workers = 1) {
    return itinerary_statistics(A, P, n, samples, seed, workers).back();
}

inline double shannon_entropy(const ItineraryDistribution& dist) {
    double s = 0.0;
    const double total = static_cast<double>(dist.sample_count);
    for (const auto& [k, c] : dist.counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        s -= p * std::log(p);
    }
    return s;
}

/// Asymptotic standard error of the plug-in entropy estimator.
inline double shannon_entropy_stderr(const ItineraryDistribution& dist) {
    const double total = static_cast<double>(dist.sample_count);
    double m1 = 0.0, m2 = 0.0;
    for (const auto& [k, c] : dist.counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        const double l = std::log(p);
        m1 -= p * l;
        m2 += p * l * l;
    }
    return std::sqrt(std::max(0.0, m2 - m1 * m1) / total);
}

struct KsRow {
    int n = 0;
    double entropy = 0.0;
    double increment = 0.0;
    double std_error = 0.0;
    std::size_t distinct_words = 0;
    bool undersampled = false;
};

inline std::vector<KsRow> ks_curve_from(const std::vector<ItineraryDistribution>& dists) {
    std::vector<KsRow> rows;
    double prev = 0.0;
    for (const auto& d : dists) {
        KsRow r;
        r.n = d.n;
        r.entropy = shannon_entropy(d);
        r.increment = r.entropy - prev;
        r.std_error = shannon_entropy_stderr(d);
        r.distinct_words = d.counts.size();
        r.undersampled = static_cast<double>(r.distinct_words) > static_cast<double>(d.sample_count) / 10.0;
        prev = r.entropy;
        rows.push_back(r);
    }
    return rows;
}

/// Shannon entropies S_n of the refined partitions and their increments
/// S_n - S_{n-1} (S_0 = 0) for n = 1..n_max.
inline std::vector<KsRow> ks_entropy_curve(const ToralAutomorphism& A, const TorusPartition& P, int n_max,
                                           std::uint64_t samples, std::uint64_t seed, int workers = 1) {
    const double budget = std::log(static_cast<double>(samples)) - 2.0;
    if (n_max * std::log(static_cast<double>(P.size())) > budget + 1e-12)
        throw InvalidArgument("ks_entropy_curve: n_max * log D exceeds log(samples) - 2");
    return ks_curve_from(itinerary_statistics(A, P, n_max, samples, seed, workers));
}

} // namespace catmap
