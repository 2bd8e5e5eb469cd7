#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "catmap/hermitian.hpp"
#include "catmap/quantization.hpp"
#include "support.hpp"

using namespace catmap;
using Catch::Approx;

namespace {

const ToralAutomorphism kCat = ToralAutomorphism::arnold_cat();

CoherentFamily family(std::int64_t N) { return CoherentFamily(weyl_system_for(kCat, N)); }

const IndicatorSpec kLeftHalf{{Rect{0.0, 0.5, 0.0, 1.0}}};

ComplexMatrix quantize_direct(const CoherentFamily& fam, const GridFunction& f) {
    const std::int64_t N = fam.N();
    ComplexMatrix s(fam.system().dim(), fam.system().dim());
    for (std::int64_t p1 = 0; p1 < N; ++p1)
        for (std::int64_t p2 = 0; p2 < N; ++p2) {
            const auto c = fam.vector_at({p1, p2});
            auto proj = ComplexMatrix::outer(c, c);
            proj *= f.at(p1, p2) / static_cast<double>(N);
            s += proj;
        }
    return s;
}

} // namespace

TEST_CASE("cell averages of indicators", "[quantization]") {
    const auto half = cell_average(kLeftHalf, 2);
    CHECK(half.at(0, 0).real() == Approx(1.0));
    CHECK(half.at(0, 1).real() == Approx(1.0));
    CHECK(half.at(1, 0).real() == Approx(0.0).margin(1e-15));
    CHECK(half.at(1, 1).real() == Approx(0.0).margin(1e-15));

    const auto quarter = cell_average(IndicatorSpec{{Rect{0.0, 0.25, 0.0, 1.0}}}, 2);
    CHECK(quarter.at(0, 0).real() == Approx(0.5));
    CHECK(quarter.at(0, 1).real() == Approx(0.5));
    CHECK(quarter.at(1, 0).real() == Approx(0.0).margin(1e-15));

    const auto whole = cell_average(IndicatorSpec{{Rect{}}}, 7);
    for (const auto& z : whole.values) CHECK(z.real() == Approx(1.0).epsilon(1e-14));

    // an off-grid rectangle: cell values are area fractions, total area is exact
    const IndicatorSpec odd{{Rect{0.13, 0.71, 0.2, 0.45}, Rect{0.8, 0.9, 0.6, 0.95}}};
    const auto g = cell_average(odd, 10);
    double area = 0.0;
    for (const auto& z : g.values) {
        CHECK(z.real() >= -1e-14);
        CHECK(z.real() <= 1.0 + 1e-14);
        area += z.real() / 100.0;
    }
    CHECK(area == Approx(0.58 * 0.25 + 0.1 * 0.35).epsilon(1e-12));
    CHECK_THROWS_AS(cell_average(IndicatorSpec{{Rect{0.0, 0.5, 0.0, 1.0}, Rect{0.4, 0.6, 0.0, 1.0}}}, 4),
                    InvalidArgument);
}

TEST_CASE("cell averages of trigonometric monomials", "[quantization]") {
    const auto one = cell_average(TrigSpec::monomial(0, 0), 5);
    for (const auto& z : one.values) CHECK(std::abs(z - 1.0) <= 1e-15);

    // compare with a fine midpoint rule inside each cell
    const std::int64_t N = 6;
    const auto g = cell_average(TrigSpec::monomial(2, -3), N);
    for (std::int64_t p = 0; p < N; ++p)
        for (std::int64_t q = 0; q < N; ++q) {
            cplx s = 0.0;
            constexpr int M = 200;
            for (int a = 0; a < M; ++a)
                for (int b = 0; b < M; ++b) {
                    const double x1 = (p + (a + 0.5) / M) / N, x2 = (q + (b + 0.5) / M) / N;
                    s += std::polar(1.0, 2.0 * std::numbers::pi * (2.0 * x1 - 3.0 * x2));
                }
            s /= double(M) * M;
            REQUIRE(std::abs(g.at(p, q) - s) <= 1e-4);
        }
    // a frequency that is a multiple of N averages to zero
    for (const auto& z : cell_average(TrigSpec::monomial(6, 0), 6).values) CHECK(std::abs(z) <= 1e-14);
}

TEST_CASE("quantize agrees with the direct rank-one sum", "[quantization]") {
    std::mt19937_64 eng(41);
    std::normal_distribution<double> g;
    for (std::int64_t N : {2, 3, 6, 8}) {
        const auto fam = family(N);
        GridFunction f = GridFunction::constant(N, 0.0);
        for (auto& z : f.values) z = {g(eng), g(eng)};
        INFO("N = " << N);
        CHECK(max_abs_diff(quantize(fam, f), quantize_direct(fam, f)) <= 1e-12);
    }
    CHECK_THROWS_AS(quantize(family(4), GridFunction::constant(5, 1.0)), InvalidArgument);
}

TEST_CASE("quantize is unital and positive", "[quantization]") {
    for (std::int64_t N : {4, 13, 64}) {
        const auto fam = family(N);
        const auto I = ComplexMatrix::identity(fam.system().dim());
        CHECK(max_abs_diff(quantize(fam, GridFunction::constant(N, 1.0)), I) <= 1e-10);
        CHECK(max_abs(quantize(fam, GridFunction::constant(N, 0.0))) == 0.0);
        const auto y = quantize(fam, cell_average(kLeftHalf, N));
        const auto ev = hermitian_eigenvalues(hermitian_part(y));
        CHECK(ev.front() >= -1e-10);
        CHECK(ev.back() <= 1.0 + 1e-10);
    }
    std::mt19937_64 eng(42);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    const auto fam = family(20);
    for (int t = 0; t < 10; ++t) {
        GridFunction f = GridFunction::constant(20, 0.0);
        for (auto& z : f.values) z = u(eng);
        CHECK(hermitian_eigenvalues(hermitian_part(quantize(fam, f))).front() >= -1e-10);
    }
}

TEST_CASE("dequantize", "[quantization]") {
    const std::int64_t N = 12;
    const auto fam = family(N);
    for (const auto& z : dequantize(fam, ComplexMatrix::identity(12)).values) CHECK(std::abs(z - 1.0) <= 1e-12);

    const auto c = fam.vector_at({5, 7});
    CHECK(std::abs(dequantize(fam, ComplexMatrix::outer(c, c)).at(5, 7) - 1.0) <= 1e-12);

    std::mt19937_64 eng(43);
    const auto X = testing_support::random_matrix(12, eng);
    const auto d = dequantize(fam, X);
    cplx s = 0.0;
    for (const auto& z : d.values) s += z;
    CHECK(std::abs(s / double(N * N) - normalized_trace(X)) <= 1e-10);
    for (std::int64_t p1 = 0; p1 < N; p1 += 5)
        for (std::int64_t p2 = 0; p2 < N; p2 += 3) {
            const auto v = fam.vector_at({p1, p2});
            CHECK(std::abs(d.at(p1, p2) - inner(v, X * v)) <= 1e-12);
        }
    // positive in, non-negative out
    const auto rho = testing_support::random_density(12, eng);
    for (const auto& z : dequantize(fam, rho).values) CHECK(z.real() >= -1e-12);
}

TEST_CASE("round trip residuals", "[quantization]") {
    for (std::int64_t N : {8, 33}) CHECK(roundtrip_residual(family(N), GridFunction::constant(N, 2.5)) <= 1e-10);

    double prev = 1e300;
    for (std::int64_t N : {32, 64, 128, 256}) {
        const double r = roundtrip_residual(family(N), cell_average(TrigSpec::cosine(1, 0), N));
        INFO("N = " << N << " residual " << r);
        CHECK(r < prev);
        prev = r;
    }

    prev = 1e300;
    for (std::int64_t N : {32, 64, 128, 256}) {
        const auto mask = interior_mask(kLeftHalf, N, 0.1);
        const double r = roundtrip_residual(family(N), cell_average(kLeftHalf, N), mask);
        INFO("N = " << N << " interior residual " << r);
        CHECK(r < prev);
        prev = r;
    }
}

TEST_CASE("round trip contracts the sup norm", "[quantization][property]") {
    std::mt19937_64 eng(44);
    std::normal_distribution<double> g;
    for (std::int64_t N : {5, 16, 40}) {
        const auto fam = family(N);
        GridFunction f = GridFunction::constant(N, 0.0);
        for (auto& z : f.values) z = {g(eng), g(eng)};
        const auto back = dequantize(fam, quantize(fam, f));
        CHECK(back.sup_norm() <= f.sup_norm() + 1e-10);
    }
}

TEST_CASE("pairing", "[quantization]") {
    for (std::int64_t N : {4, 32}) {
        const auto one = GridFunction::constant(N, 1.0);
        CHECK(pairing_residual(family(N), one, one) <= 1e-10);
    }

    auto cos_gap = [](std::int64_t N) {
        const auto f = cell_average(TrigSpec::cosine(1, 0), N);
        return std::abs(quantum_pairing(family(N), f, f) - 0.5);
    };
    CHECK(cos_gap(256) < cos_gap(128));
    CHECK(cos_gap(128) < cos_gap(64));
    CHECK(cos_gap(64) < cos_gap(32));

    auto cross = [](std::int64_t N) {
        const auto f = cell_average(TrigSpec::monomial(1, 0), N);
        const auto g = cell_average(TrigSpec::monomial(0, 1), N);
        return std::abs(quantum_pairing(family(N), f, g));
    };
    CHECK(cross(256) <= cross(32) + 1e-12);
    CHECK(cross(256) <= 1e-2);

    // positivity, zero only for the zero function
    std::mt19937_64 eng(45);
    std::normal_distribution<double> g;
    const auto fam = family(16);
    GridFunction f = GridFunction::constant(16, 0.0);
    for (auto& z : f.values) z = {g(eng), g(eng)};
    CHECK(quantum_pairing(fam, f, f).real() > 0.0);
    const auto zero = GridFunction::constant(16, 0.0);
    CHECK(std::abs(quantum_pairing(fam, zero, zero)) <= 1e-12);
}

TEST_CASE("classical transport of trig specs is exact", "[quantization]") {
    const auto s = std::get<TrigSpec>(evolve_spec(TrigSpec::monomial(1, 0), kCat, 1));
    REQUIRE(s.terms.size() == 1);
    // f(A^{-1} x) with A^{-1} = (2 -1; -1 1)
    CHECK(s.terms[0].m1 == 2);
    CHECK(s.terms[0].m2 == -1);
    CHECK(std::abs(s.terms[0].coef - 1.0) <= 1e-15);

    // pointwise check of f(A^{-k} x)
    const FunctionSpec f = TrigSpec::cosine(1, 2);
    const auto e = std::get<TrigSpec>(evolve_spec(f, kCat, 3));
    std::mt19937_64 eng(46);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const TorusPoint x{u(eng), u(eng)};
        const TorusPoint y = apply(kCat, x, -3);
        const double want = std::cos(2.0 * std::numbers::pi * (y.x1 + 2.0 * y.x2));
        cplx got = 0.0;
        for (const auto& term : e.terms)
            got += term.coef * std::polar(1.0, 2.0 * std::numbers::pi * (term.m1 * x.x1 + term.m2 * x.x2));
        CHECK(std::abs(got - want) <= 1e-9);
    }
    CHECK_THROWS_AS(evolve_spec(kLeftHalf, kCat, 1), InvalidArgument);
}

TEST_CASE("Egorov discrepancy at k = 0 vanishes", "[quantization]") {
    for (std::int64_t N : {16, 64}) {
        const auto fam = family(N);
        CHECK(egorov_discrepancy(fam, kCat, TrigSpec::monomial(1, 0), 0).discrepancy <= 1e-12);
        const auto ind = egorov_discrepancy(fam, kCat, kLeftHalf, 0);
        CHECK(ind.discrepancy <= 1e-12);
        CHECK_FALSE(ind.approximate);
    }
    CHECK(egorov_discrepancy(family(16), kCat, kLeftHalf, 1).approximate);
    CHECK_THROWS_AS(egorov_discrepancy(family(16), kCat, kLeftHalf, -1), InvalidArgument);
}

TEST_CASE("Egorov discrepancy at k = 2 decreases with N", "[quantization]") {
    const FunctionSpec f = TrigSpec::monomial(1, 0);
    for (const Anchor anchor : {Anchor::label, Anchor::reference_center}) {
        double prev = 1e300;
        for (std::int64_t N : {64, 128, 256, 512}) {
            const double d = egorov_discrepancy(family(N), kCat, f, 2, anchor).discrepancy;
            INFO("N = " << N << " discrepancy " << d);
            CHECK(d < prev);
            prev = d;
        }
    }
}

// Against the label anchor, the k = 1 discrepancy is dominated by the O(1)
// shift (A - 1)c of the reference centre, so the k-curve is not monotone.
TEST_CASE("Egorov discrepancy is non-decreasing in k at N = 128 (label anchor)", "[quantization][!shouldfail]") {
    const auto fam = family(128);
    double prev = 0.0;
    for (int k = 0; k <= 6; ++k) {
        const double d = egorov_discrepancy(fam, kCat, TrigSpec::monomial(1, 0), k).discrepancy;
        INFO("k = " << k << " discrepancy " << d);
        CHECK(d >= prev - 1e-10);
        prev = d;
    }
}

TEST_CASE("Egorov discrepancy is non-decreasing in k at N = 128 (centre anchor)", "[quantization]") {
    const auto fam = family(128);
    double prev = 0.0;
    std::vector<double> d;
    for (int k = 0; k <= 6; ++k) {
        d.push_back(egorov_discrepancy(fam, kCat, TrigSpec::monomial(1, 0), k, Anchor::reference_center).discrepancy);
        INFO("k = " << k << " discrepancy " << d.back());
        CHECK(d.back() >= prev - 1e-10); // flat to roundoff once saturated
        prev = d.back();
    }
    // past the breaking time (about 2.5 here) the discrepancy is of the order of ||f||_2 = 1
    CHECK(d[5] >= 0.5);
    CHECK(d[1] <= 0.2);
}
