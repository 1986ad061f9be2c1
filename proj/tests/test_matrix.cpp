#include <doctest.h>

#include <random>

#include "impobs/errors.hpp"
#include "impobs/matrix.hpp"
#include "oracles.hpp"

using namespace impobs;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(r, c);
    for (double& x : m.data()) x = u(rng);
    return m;
}

Matrix random_symmetric(std::mt19937_64& rng, std::size_t n) {
    Matrix m = random_matrix(rng, n, n);
    return 0.5 * (m + m.transpose());
}

}  // namespace

TEST_CASE("spectral_norm examples") {
    CHECK(spectral_norm(Matrix::identity(3)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(spectral_norm(Matrix{{0, 0}, {3, 0}}) == doctest::Approx(3.0).epsilon(1e-14));
    const double expected = oracle::spectral_norm2x2(1, 2, 3, 4);
    CHECK(expected == doctest::Approx(5.4649857).epsilon(1e-7));
    CHECK(std::abs(spectral_norm(Matrix{{1, 2}, {3, 4}}) - expected) <= 1e-10 * expected);
}

TEST_CASE("spectral_norm rejects empty and non-finite input") {
    CHECK_THROWS_AS(spectral_norm(Matrix()), Error);
    CHECK_THROWS_AS(spectral_norm(Matrix{{1, NAN}}), Error);
}

TEST_CASE("sym_eig_max examples") {
    CHECK(sym_eig_max(Matrix{{-1, 0}, {0, -2}}) == doctest::Approx(-1.0));
    CHECK(sym_eig_max(Matrix(4, 4)) == 0.0);
    CHECK(sym_eig_max(Matrix{{2, 1}, {1, 2}}) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK_THROWS_AS(sym_eig_max(Matrix(2, 3)), Error);
}

TEST_CASE("sym_eigenvalues match the 2x2 closed form") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int k = 0; k < 200; ++k) {
        const double a = u(rng), b = u(rng), d = u(rng);
        const auto want = oracle::sym2_eigs(a, b, d);
        const Vector got = sym_eigenvalues(Matrix{{a, b}, {b, d}});
        CHECK(got[0] == doctest::Approx(want[0]).epsilon(1e-12).scale(5));
        CHECK(got[1] == doctest::Approx(want[1]).epsilon(1e-12).scale(5));
    }
}

TEST_CASE("asymmetric input is symmetrized with a warning") {
    double seen = 0.0;
    set_asymmetry_handler([&](double rel) { seen = rel; });
    CHECK(sym_eig_max(Matrix{{0, 2}, {0, 0}}) == doctest::Approx(1.0));
    CHECK(seen > 1e-12);
    seen = 0.0;
    (void)sym_eig_max(Matrix{{1, 0.5}, {0.5, 1}});
    CHECK(seen == 0.0);
    set_asymmetry_handler({});
}

TEST_CASE("is_neg_definite examples") {
    CHECK(is_neg_definite(Matrix{{-1, 0}, {0, -1}}, 0.0));
    CHECK_FALSE(is_neg_definite(Matrix(2, 2), 0.0));
    // Eigenvalues -3 and 1.
    CHECK(oracle::sym2_eigs(-1, 2, -1)[1] == doctest::Approx(1.0));
    CHECK_FALSE(is_neg_definite(Matrix{{-1, 2}, {2, -1}}, 0.0));
    CHECK_THROWS_AS(is_neg_definite(Matrix(1, 2), 0.0), Error);
}

TEST_CASE("schur_nd_check examples") {
    CHECK(schur_nd_check(Matrix{{-1}}, Matrix{{0}}, Matrix{{-1}}, 0.0));
    CHECK_FALSE(schur_nd_check(Matrix{{1}}, Matrix{{0}}, Matrix{{-1}}, 0.0));
    // -1 - 1 * (-1/2) * 1 = -0.5.
    CHECK(schur_nd_check(Matrix{{-1}}, Matrix{{1}}, Matrix{{-2}}, 0.0));
    try {
        (void)schur_nd_check(Matrix{{-1}}, Matrix{{0}}, Matrix{{1}}, 0.0);
        FAIL("expected a precondition error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CertificatePrecondition);
    }
    CHECK_THROWS_AS(schur_nd_check(Matrix{{-1}}, Matrix{{0, 0}}, Matrix{{-1}}, 0.0), Error);
}

TEST_CASE("property: spectral norm is transpose invariant") {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 100; ++k) {
        std::uniform_int_distribution<int> dim(1, 8);
        const Matrix m = random_matrix(rng, dim(rng), dim(rng));
        const double a = spectral_norm(m), b = spectral_norm(m.transpose());
        CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, a));
    }
}

TEST_CASE("property: eigenvalue shift invariance") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> shift(-10.0, 10.0);
    for (int k = 0; k < 100; ++k) {
        const std::size_t n = 1 + k % 7;
        const Matrix s = random_symmetric(rng, n);
        const double c = shift(rng);
        CHECK(std::abs(sym_eig_max(s + c * Matrix::identity(n)) - (sym_eig_max(s) + c)) <= 1e-10);
    }
}

TEST_CASE("property: schur check agrees with the assembled block matrix") {
    std::mt19937_64 rng(3);
    int agree = 0, total = 0;
    for (int k = 0; k < 400; ++k) {
        const std::size_t p = 1 + k % 3, q = 1 + (k / 3) % 3;
        Matrix a22 = random_symmetric(rng, q);
        a22 = a22 - (sym_eig_max(a22) + 0.1 + 0.5 * (k % 5)) * Matrix::identity(q);
        const Matrix a12 = 0.5 * random_matrix(rng, p, q);
        const Matrix a11 = random_symmetric(rng, p) - 0.8 * Matrix::identity(p);
        const Matrix full = assemble_blocks(a11, a12, a12.transpose(), a22);
        const double top = sym_eig_max(full);
        if (std::abs(top) < 1e-9) continue;  // guard band
        ++total;
        agree += schur_nd_check(a11, a12, a22, 0.0) == (top <= 0.0);
    }
    CHECK(total > 300);
    CHECK(agree == total);
}

TEST_CASE("property: spectral norm bounds random unit directions") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < 5; ++k) {
        const Matrix m = random_matrix(rng, 3 + k, 4);
        const double s = spectral_norm(m);
        double best = 0.0;
        for (int j = 0; j < 10000; ++j) {
            Vector v(m.cols());
            for (double& x : v) x = g(rng);
            const double nv = norm2(v);
            for (double& x : v) x /= nv;
            best = std::max(best, norm2(m * v));
        }
        CHECK(best <= s + 1e-9);
        CHECK(best > 0.9 * s);
    }
}

TEST_CASE("LU factorization and inverse") {
    const Matrix a{{4, 3}, {6, 3}};
    const LuFactorization lu(a);
    CHECK_FALSE(lu.singular());
    CHECK(lu.determinant() == doctest::Approx(-6.0));
    const Matrix inv = inverse(a);
    CHECK(max_abs_diff(a * inv, Matrix::identity(2)) < 1e-14);
    const Vector x = lu.solve(Vector{10, 12});
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(2.0));
    CHECK(LuFactorization(Matrix{{1, 2}, {2, 4}}).singular());
}

TEST_CASE("matrix literals round trip") {
    CHECK(parse_matrix("[1 2; 3 4]") == Matrix{{1, 2}, {3, 4}});
    CHECK(parse_matrix("[[1, 2], [3, 4]]") == Matrix{{1, 2}, {3, 4}});
    CHECK(parse_matrix("0.8") == Matrix{{0.8}});
    CHECK(parse_matrix("[]").empty());
    CHECK_THROWS_AS(parse_matrix("[1 2; 3]"), Error);
    CHECK_THROWS_AS(parse_matrix("[1 x]"), Error);
    const Matrix m{{0.1, -2.5e-17}, {1.0 / 3.0, 7}};
    CHECK(parse_matrix(format_matrix(m)) == m);
    CHECK(format_matrix(Matrix{{0.8}}) == "[0.8]");
}
