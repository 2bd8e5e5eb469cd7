#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "catmap/hermitian.hpp"
#include "catmap/weyl.hpp"
#include "support.hpp"

using namespace catmap;
using Catch::Approx;
using testing_support::random_matrix;

namespace {

const ToralAutomorphism kCat = ToralAutomorphism::arnold_cat();

ComplexMatrix matrix_power(const ComplexMatrix& m, std::int64_t e) {
    ComplexMatrix acc = ComplexMatrix::identity(m.rows());
    for (std::int64_t i = 0; i < e; ++i) acc = acc * m;
    return acc;
}

// e^{-i pi n1 n2 / N} U^{n1} V^{n2}, labels in the fundamental domain.
ComplexMatrix weyl_oracle(const WeylSystem& sys, WeylLabel n) {
    const auto [U, V] = shift_operators(sys);
    ComplexMatrix w = matrix_power(U, n.n1) * matrix_power(V, n.n2);
    w *= std::polar(1.0, -std::numbers::pi * static_cast<double>(n.n1 * n.n2) / static_cast<double>(sys.N()));
    return w;
}

// W^N by applying W column by column N times; W is monomial so this is exact in structure.
ComplexMatrix weyl_power_n(const WeylSystem& sys, WeylLabel n) {
    const std::size_t N = sys.dim();
    ComplexMatrix out(N, N);
    for (std::size_t col = 0; col < N; ++col) {
        ComplexVector e(N);
        e[col] = 1.0;
        for (std::size_t s = 0; s < N; ++s) e = weyl_apply(sys, n, e);
        for (std::size_t r = 0; r < N; ++r) out(r, col) = e[r];
    }
    return out;
}

// The congruence (a c; b d)(u, v) - (u, v) - (N/2)(ac, bd) must be integral.
bool solves_congruence(const ToralAutomorphism& A, std::int64_t N, Rational u, Rational v) {
    const std::int64_t a = A.a(), b = A.b(), c = A.c(), d = A.d();
    const std::int64_t L = std::lcm(std::lcm(u.den, v.den), std::int64_t{2});
    const std::int64_t U = u.num * (L / u.den), V = v.num * (L / v.den);
    const std::int64_t r1 = a * U + c * V - U - (L / 2) * N * a * c;
    const std::int64_t r2 = b * U + d * V - V - (L / 2) * N * b * d;
    return r1 % L == 0 && r2 % L == 0;
}

} // namespace

TEST_CASE("solve_phases for the Arnold cat", "[weyl]") {
    for (std::int64_t N : {2, 4, 16, 100}) {
        const auto [u, v] = solve_phases(kCat, N);
        CHECK(u == Rational{0, 1});
        CHECK(v == Rational{0, 1});
    }
    for (std::int64_t N : {3, 5, 17, 101}) {
        const auto [u, v] = solve_phases(kCat, N);
        CHECK(u == Rational{1, 2});
        CHECK(v == Rational{1, 2});
    }
    CHECK_THROWS_AS(solve_phases(kCat, 1), InvalidArgument);
}

TEST_CASE("solve_phases solves the congruence for several maps", "[weyl][property]") {
    const std::vector<ToralAutomorphism> maps{kCat, {2, 1, 3, 2}, {3, 2, 4, 3}, {1, 2, 1, 3}, {-1, 1, 1, -2}};
    for (const auto& A : maps)
        for (std::int64_t N = 2; N <= 40; ++N) {
            const auto [u, v] = solve_phases(A, N);
            INFO("A = (" << A.a() << " " << A.b() << "; " << A.c() << " " << A.d() << ") N = " << N);
            CHECK(u.value() >= 0.0);
            CHECK(u.value() < 1.0);
            CHECK(v.value() >= 0.0);
            CHECK(v.value() < 1.0);
            CHECK(solves_congruence(A, N, u, v));
            CHECK(phases_consistent(WeylSystem(N, u, v), A));
        }
}

TEST_CASE("shift operators", "[weyl]") {
    const auto [U2, V2] = shift_operators(WeylSystem(2));
    CHECK(max_abs_diff(U2, ComplexMatrix(2, 2, {0.0, 1.0, 1.0, 0.0})) <= 1e-15);

    for (std::int64_t N : {2, 3, 7, 12}) {
        const WeylSystem sys(N, Rational::make(1, 3), Rational::make(2, 5));
        const auto [U, V] = shift_operators(sys);
        const auto I = ComplexMatrix::identity(sys.dim());
        CHECK(max_abs_diff(U.adjoint() * U, I) <= 1e-12);
        CHECK(max_abs_diff(V.adjoint() * V, I) <= 1e-12);
        for (std::int64_t j = 0; j < N; ++j) {
            const cplx want = std::polar(1.0, 2.0 * std::numbers::pi * (0.4 - static_cast<double>(j)) / N);
            CHECK(std::abs(V(static_cast<std::size_t>(j), static_cast<std::size_t>(j)) - want) <= 1e-12);
        }
        auto uv = U * V;
        auto vu = V * U;
        vu *= std::polar(1.0, 2.0 * std::numbers::pi / N);
        CHECK(max_abs_diff(uv, vu) <= 1e-12);
        // U^N = e^{2 pi i u}, V^N = e^{2 pi i v}
        auto un = I, vn = I;
        un *= std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
        vn *= std::polar(1.0, 2.0 * std::numbers::pi * 0.4);
        CHECK(max_abs_diff(matrix_power(U, N), un) <= 1e-10);
        CHECK(max_abs_diff(matrix_power(V, N), vn) <= 1e-10);
    }
}

TEST_CASE("weyl_matrix examples", "[weyl]") {
    const WeylSystem sys(6, Rational::make(1, 2), Rational::make(1, 3));
    CHECK(max_abs_diff(weyl_matrix(sys, {0, 0}), ComplexMatrix::identity(6)) <= 1e-15);
    CHECK(max_abs_diff(weyl_matrix(sys, {1, 0}), shift_operators(sys).first) <= 1e-14);
    const WeylLabel n{2, 5};
    CHECK(max_abs_diff(weyl_matrix(sys, -n), weyl_matrix(sys, n).adjoint()) <= 1e-12);
    const auto w = weyl_matrix(sys, n);
    CHECK(max_abs_diff(w * w.adjoint(), ComplexMatrix::identity(6)) <= 1e-12);
}

TEST_CASE("weyl_matrix matches the shift-operator oracle", "[weyl]") {
    for (std::int64_t N = 2; N <= 12; ++N) {
        const WeylSystem sys = weyl_system_for(kCat, N);
        const WeylSystem skew(N, Rational::make(1, 7), Rational::make(3, 4));
        for (std::int64_t a = 0; a < N; ++a)
            for (std::int64_t b = 0; b < N; ++b) {
                REQUIRE(max_abs_diff(weyl_matrix(sys, {a, b}), weyl_oracle(sys, {a, b})) <= 1e-12);
                REQUIRE(max_abs_diff(weyl_matrix(skew, {a, b}), weyl_oracle(skew, {a, b})) <= 1e-12);
            }
    }
}

TEST_CASE("Weyl composition and commutation are exact for N up to 12", "[weyl]") {
    for (std::int64_t N = 2; N <= 12; ++N) {
        const WeylSystem sys = weyl_system_for(kCat, N);
        std::vector<ComplexMatrix> w;
        for (std::int64_t a = 0; a < N; ++a)
            for (std::int64_t b = 0; b < N; ++b) w.push_back(weyl_matrix(sys, {a, b}));
        double comp = 0.0, comm = 0.0;
        for (std::int64_t i = 0; i < N * N; ++i)
            for (std::int64_t j = 0; j < N * N; ++j) {
                const WeylLabel n = sys.label(static_cast<std::size_t>(i)), m = sys.label(static_cast<std::size_t>(j));
                const auto& wn = w[static_cast<std::size_t>(i)];
                const auto& wm = w[static_cast<std::size_t>(j)];
                const auto lhs = wn * wm;
                auto rhs = weyl_matrix(sys, n + m);
                rhs *= std::polar(1.0, std::numbers::pi * static_cast<double>(symplectic(n, m)) / N);
                comp = std::max(comp, max_abs_diff(lhs, rhs));
                auto swapped = wm * wn;
                swapped *= std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(symplectic(n, m)) / N);
                comm = std::max(comm, max_abs_diff(lhs, swapped));
            }
        INFO("N = " << N);
        CHECK(comp <= 1e-12);
        CHECK(comm <= 1e-12);
    }
}

TEST_CASE("symplectic form", "[weyl]") {
    CHECK(symplectic({3, -4}, {3, -4}) == 0);
    CHECK(symplectic({1, 0}, {0, 1}) == 1);
    CHECK(symplectic({0, 1}, {1, 0}) == -1);
    std::mt19937_64 eng(21);
    std::uniform_int_distribution<std::int64_t> d(-1000, 1000);
    for (int t = 0; t < 100; ++t) {
        const WeylLabel n{d(eng), d(eng)}, m{d(eng), d(eng)};
        CHECK(symplectic(n, m) == -symplectic(m, n));
        CHECK(symplectic(kCat.matrix() * n, kCat.matrix() * m) == symplectic(n, m));
    }
}

TEST_CASE("folding phase", "[weyl]") {
    CHECK(std::abs(folding_phase(WeylSystem(8), {0, 0}) - 1.0) <= 1e-15);
    CHECK(std::abs(folding_phase(WeylSystem(8), {1, 0}) - 1.0) <= 1e-15);
    for (std::int64_t N = 2; N <= 8; ++N)
        for (const auto& sys : {weyl_system_for(kCat, N), WeylSystem(N, Rational::make(1, 3), Rational::make(5, 6))})
            for (std::int64_t a = -2; a <= 2; ++a)
                for (std::int64_t b = -2; b <= 2; ++b) {
                    auto want = ComplexMatrix::identity(sys.dim());
                    want *= folding_phase(sys, {a, b});
                    REQUIRE(max_abs_diff(weyl_matrix(sys, N * WeylLabel{a, b}), want) <= 1e-12);
                }
}

TEST_CASE("label reduction reproduces arbitrary Weyl labels", "[weyl]") {
    const WeylSystem sys(7, Rational::make(1, 2), Rational::make(1, 2));
    std::mt19937_64 eng(22);
    std::uniform_int_distribution<std::int64_t> d(-60, 60);
    for (int t = 0; t < 200; ++t) {
        const WeylLabel n{d(eng), d(eng)};
        const auto r = reduce_label(sys, n);
        auto rhs = weyl_matrix(sys, r.reduced);
        rhs *= std::polar(1.0, std::numbers::pi * static_cast<double>(r.exponent) / static_cast<double>(sys.den()));
        REQUIRE(max_abs_diff(weyl_matrix(sys, n), rhs) <= 1e-12);
    }
}

TEST_CASE("phase consistency: folded powers agree under the map", "[weyl]") {
    for (const auto& A : {kCat, ToralAutomorphism(2, 1, 3, 2)})
        for (std::int64_t N = 4; N <= 64; ++N) {
            const auto sys = weyl_system_for(A, N);
            for (const WeylLabel e : {WeylLabel{1, 0}, WeylLabel{0, 1}}) {
                const auto lhs = weyl_power_n(sys, e);
                const auto rhs = weyl_power_n(sys, A.matrix() * e);
                INFO("N = " << N);
                REQUIRE(max_abs_diff(lhs, rhs) <= 1e-10);
            }
        }
    // the wrong phases are detected for odd N
    CHECK_FALSE(phases_consistent(WeylSystem(5), kCat));
}

TEST_CASE("Weyl decomposition", "[weyl]") {
    const WeylSystem sys = weyl_system_for(kCat, 9);
    const auto id = weyl_decompose(sys, ComplexMatrix::identity(9));
    CHECK(std::abs(id[{0, 0}] - 1.0) <= 1e-12);
    for (std::size_t i = 1; i < id.c.size(); ++i) CHECK(std::abs(id.c[i]) <= 1e-12);

    for (std::int64_t a = 0; a < 9; ++a)
        for (std::int64_t b = 0; b < 9; ++b) {
            const auto c = weyl_decompose(sys, weyl_matrix(sys, {a, b}));
            for (std::size_t i = 0; i < c.c.size(); ++i) {
                const double want = sys.index({a, b}) == i ? 1.0 : 0.0;
                REQUIRE(std::abs(c.c[i] - want) <= 1e-12);
            }
        }
    CHECK_THROWS_AS(weyl_decompose(sys, ComplexMatrix::identity(4)), InvalidArgument);
}

TEST_CASE("Weyl coefficients: direct trace oracle, reconstruction, Parseval", "[weyl][property]") {
    std::mt19937_64 eng(23);
    for (std::int64_t N : {2, 5, 8, 13, 32, 100}) {
        const WeylSystem sys = weyl_system_for(kCat, N);
        const auto X = random_matrix(sys.dim(), eng);
        const auto c = weyl_decompose(sys, X);
        if (N <= 13)
            for (std::size_t i = 0; i < c.c.size(); ++i) {
                const cplx direct = normalized_trace(X * weyl_matrix(sys, -sys.label(i)));
                REQUIRE(std::abs(c.c[i] - direct) <= 1e-12);
            }
        INFO("N = " << N);
        CHECK(max_abs_diff(weyl_reconstruct(sys, c), X) <= 1e-10);
        double parseval = 0.0;
        for (const auto& z : c.c) parseval += std::norm(z);
        CHECK(parseval == Approx(normalized_trace(X.adjoint() * X).real()).epsilon(1e-10));
    }
}

TEST_CASE("evolve: identity and single Weyl operators", "[weyl]") {
    for (std::int64_t N : {4, 7, 16}) {
        const auto sys = weyl_system_for(kCat, N);
        const auto I = ComplexMatrix::identity(sys.dim());
        CHECK(max_abs_diff(evolve(sys, kCat, I, 3), I) <= 1e-12);
        CHECK(max_abs_diff(evolve(sys, kCat, weyl_matrix(sys, {1, 0}), 1), weyl_matrix(sys, {1, 1})) <= 1e-12);
        for (int k = 1; k <= 6; ++k) {
            const WeylLabel n{2, 3};
            const WeylLabel target = kCat.power(k) * n;
            INFO("N = " << N << " k = " << k);
            CHECK(max_abs_diff(evolve(sys, kCat, weyl_matrix(sys, n), k), weyl_matrix(sys, target)) <= 1e-10);
        }
    }
    const ToralAutomorphism b(2, 1, 3, 2);
    const auto sys = weyl_system_for(b, 10);
    CHECK(max_abs_diff(evolve(sys, b, weyl_matrix(sys, {0, 1}), 1), weyl_matrix(sys, {1, 2})) <= 1e-12);
}

TEST_CASE("evolve is a trace- and norm-preserving *-automorphism", "[weyl][property]") {
    std::mt19937_64 eng(24);
    for (std::int64_t N : {5, 16, 33}) {
        const WeylDynamics dyn(weyl_system_for(kCat, N), kCat);
        for (int t = 0; t < 5; ++t) {
            const auto X = random_matrix(dyn.system().dim(), eng);
            const auto Y = random_matrix(dyn.system().dim(), eng);
            for (int k = 1; k <= 10; ++k) {
                const auto tx = dyn.evolve(X, k);
                const double scale = max_abs(X) * max_abs(Y) * static_cast<double>(N);
                INFO("N = " << N << " k = " << k);
                CHECK(std::abs(normalized_trace(tx) - normalized_trace(X)) <= 1e-10);
                CHECK(hs_norm(tx) == Approx(hs_norm(X)).epsilon(1e-10));
                CHECK(max_abs_diff(dyn.evolve(X * Y, k), tx * dyn.evolve(Y, k)) <= 1e-10 * scale);
                CHECK(max_abs_diff(dyn.evolve(X.adjoint(), k), tx.adjoint()) <= 1e-10 * max_abs(X));
            }
            // group law
            CHECK(max_abs_diff(dyn.evolve(dyn.evolve(X, 3), 4), dyn.evolve(X, 7)) <= 1e-10 * max_abs(X));
        }
    }
}

TEST_CASE("evolve rejects inconsistent phases and negative k", "[weyl]") {
    CHECK_THROWS_AS(evolve(WeylSystem(5), kCat, ComplexMatrix::identity(5), 1), InvalidArgument);
    CHECK_THROWS_AS(WeylDynamics(WeylSystem(6, Rational::make(1, 3), Rational{}), kCat), InvalidArgument);
    const auto sys = weyl_system_for(kCat, 6);
    CHECK_THROWS_AS(evolve(sys, kCat, ComplexMatrix::identity(6), -1), InvalidArgument);
    CHECK(max_abs_diff(evolve(sys, kCat, weyl_matrix(sys, {1, 2}), 0), weyl_matrix(sys, {1, 2})) == 0.0);
}
