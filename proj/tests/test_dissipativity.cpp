#include <doctest.h>

#include <random>

#include "impobs/dissipativity.hpp"
#include "impobs/errors.hpp"
#include "impobs/integrator.hpp"
#include "oracles.hpp"

using namespace impobs;

namespace {

QsrCertificate zero_cert(std::size_t k, QsrSubject subject) {
    return QsrCertificate::make(Matrix(k, k), Matrix(k, k), Matrix(k, k), subject);
}

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix m(r, c);
    for (double& x : m.data()) x = u(rng);
    return m;
}

}  // namespace

TEST_CASE("qsr_ssd_check examples") {
    const Matrix z1(1, 1);
    CHECK(qsr_ssd_check(Matrix{{-1}}, z1, z1, z1, z1, 2.0));
    CHECK_FALSE(qsr_ssd_check(Matrix{{-1}}, z1, z1, z1, z1, 3.0));

    // [[A + A^T + I + I, I], [I, -I]] = [[-2, 0, 1, 0], [0, -4, 0, 1], [1, 0, -1, 0], [0, 1, 0, -1]]
    // decouples into 2x2 blocks [[-2, 1], [1, -1]] and [[-4, 1], [1, -1]].
    const Matrix a{{-2, 0}, {0, -3}};
    const Matrix i2 = Matrix::identity(2);
    const double top = std::max(oracle::sym2_eigs(-2, 1, -1)[1], oracle::sym2_eigs(-4, 1, -1)[1]);
    CHECK(top < 0.0);
    CHECK(qsr_ssd_check(a, i2, -1.0 * i2, Matrix(2, 2), i2, 1.0) == (top <= 1e-9));
    CHECK_THROWS_AS(qsr_ssd_check(a, Matrix(3, 2), -1.0 * i2, Matrix(2, 2), i2, 1.0), Error);
}

TEST_CASE("certify_kappa_n examples") {
    CHECK(certify_kappa_n(Matrix{{-1}}, zero_cert(1, QsrSubject::static_map_n)) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(certify_kappa_n(Matrix{{-3, 0}, {0, -1}}, zero_cert(2, QsrSubject::static_map_n)) ==
          doctest::Approx(2.0).epsilon(1e-8));
    try {
        (void)certify_kappa_n(Matrix{{1}}, zero_cert(1, QsrSubject::static_map_n));
        FAIL("expected infeasible");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CertificateInfeasible);
    }
    // Wrong subject and indefinite Q_n are rejected.
    CHECK_THROWS_AS(certify_kappa_n(Matrix{{-1}}, zero_cert(1, QsrSubject::static_map_o)), Error);
    const auto bad = QsrCertificate::make(Matrix{{1}}, Matrix{{0}}, Matrix{{0}}, QsrSubject::static_map_n);
    CHECK_THROWS_AS(certify_kappa_n(Matrix{{-1}}, bad), Error);
}

TEST_CASE("certify_kappa_n with a sector certificate") {
    // psi_n with |psi| <= 0.5 |eps|: Q = -1, S = 0, R = 0.25. The check
    // [[2a + k + 0.25, 1], [1, -1]] <= 0 gives k = -2a - 1.25 for a = -3.
    const auto cert = QsrCertificate::make(Matrix{{-1}}, Matrix{{0}}, Matrix{{0.25}}, QsrSubject::static_map_n);
    CHECK(certify_kappa_n(Matrix{{-3}}, cert) == doctest::Approx(4.75).epsilon(1e-8));
}

TEST_CASE("compute_varpi_o examples") {
    auto cert = [](const Matrix& q, const Matrix& s, const Matrix& r) {
        return QsrCertificate::make(q, s, r, QsrSubject::static_map_o);
    };
    const VarpiResult v1 = compute_varpi_o(Matrix{{0}}, cert(Matrix{{-1}}, Matrix{{0}}, Matrix{{0}}));
    CHECK(v1.varpi_o == doctest::Approx(1.0 + 1e-6).epsilon(1e-14));
    CHECK(v1.positive);

    const Matrix i1 = Matrix::identity(1);
    const VarpiResult v2 = compute_varpi_o(Matrix{{-5}}, cert(-1.0 * i1, -1.0 * i1, Matrix{{0}}));
    CHECK(v2.varpi_o == doctest::Approx(-10.0 + 1e-6).epsilon(1e-14));
    CHECK_FALSE(v2.positive);

    const Matrix i2 = Matrix::identity(2);
    const VarpiResult v3 = compute_varpi_o(Matrix{{0, 1}, {-1, 0}}, cert(-1.0 * i2, Matrix(2, 2), Matrix(2, 2)));
    CHECK(v3.varpi_o == doctest::Approx(1.0 + 1e-6).epsilon(1e-14));

    try {
        (void)compute_varpi_o(Matrix{{0}}, cert(Matrix{{0}}, Matrix{{0}}, Matrix{{0}}));
        FAIL("expected precondition error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CertificatePrecondition);
        CHECK(std::string(e.what()).find("Lemma 2 precondition") != std::string::npos);
    }
}

TEST_CASE("falsify_qsr examples") {
    const SampleBox box{{-1.0}, {1.0}, {-1.0}, {1.0}};
    const ResidualMap zero = [](std::span<const double>, std::span<const double>) { return Vector{0.0}; };
    CHECK_FALSE(falsify_qsr(zero, 0, Matrix{{0}}, Matrix{{0}}, Matrix{{0}}, box, 1000, 1).has_value());

    const ResidualMap ident = [](std::span<const double>, std::span<const double> e) { return Vector{e[0]}; };
    const auto cex = falsify_qsr(ident, 0, Matrix{{-1}}, Matrix{{0}}, Matrix{{0}}, box, 1000, 1);
    REQUIRE(cex.has_value());
    CHECK(cex->omega == doctest::Approx(-cex->eps[0] * cex->eps[0]));

    // sat lies in the sector [0, 1]: (psi - 0 eps)(1 eps - psi) >= 0, i.e.
    // Q = -1, S = 1/2, R = 0.
    const ResidualMap sat = [](std::span<const double>, std::span<const double> e) {
        return Vector{std::clamp(e[0], -1.0, 1.0)};
    };
    const SampleBox wide{{-1.0}, {1.0}, {-5.0}, {5.0}};
    CHECK_FALSE(falsify_qsr(sat, 0, Matrix{{-1}}, Matrix{{0.5}}, Matrix{{0}}, wide, 10000, 2).has_value());
    // Grid oracle for the same sector bound.
    for (int i = 0; i <= 10000; ++i) {
        const double e = -5.0 + 10.0 * i / 10000.0;
        const double p = std::clamp(e, -1.0, 1.0);
        CHECK(-p * p + p * e >= -1e-12);
    }

    const ResidualMap bad = [](std::span<const double>, std::span<const double>) { return Vector{NAN}; };
    CHECK_THROWS_AS(falsify_qsr(bad, 0, Matrix{{-1}}, Matrix{{0}}, Matrix{{0}}, box, 10, 1), Error);
    CHECK_THROWS_AS(falsify_qsr(zero, 0, Matrix{{0}}, Matrix{{0}}, Matrix{{0}}, box, 0, 1), Error);
}

TEST_CASE("property: kappa_n maximality bracket") {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 40; ++k) {
        const std::size_t n = 1 + k % 4;
        Matrix a = random_matrix(rng, n, n);
        a = a - (sym_eig_max(0.5 * (a + a.transpose())) + 0.2) * Matrix::identity(n);
        const auto cert = zero_cert(n, QsrSubject::static_map_n);
        const double kn = certify_kappa_n(a, cert);
        const Matrix zero(n, n);
        CHECK(qsr_ssd_check(a, zero, zero, zero, zero, kn));
        CHECK_FALSE(qsr_ssd_check(a, zero, zero, zero, zero, kn + 1e-6));
    }
}

TEST_CASE("property: varpi_o satisfies the shifted ssd check") {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 40; ++k) {
        const std::size_t m = 1 + k % 3;
        const Matrix a = random_matrix(rng, m, m);
        Matrix q = random_matrix(rng, m, m);
        q = 0.5 * (q + q.transpose());
        q = q - (sym_eig_max(q) + 0.5) * Matrix::identity(m);
        const Matrix s = random_matrix(rng, m, m, 0.5);
        Matrix r = random_matrix(rng, m, m);
        r = 0.5 * (r + r.transpose());
        r = r - std::min(0.0, sym_eigenvalues(r).front()) * Matrix::identity(m);
        const auto cert = QsrCertificate::make(q, s, r, QsrSubject::static_map_o);
        const double w = compute_varpi_o(a, cert).varpi_o;
        const Matrix i = Matrix::identity(m);
        CHECK(qsr_ssd_check(a, i, -1.0 * r, -1.0 * s.transpose(), -1.0 * q, -w));
        CHECK_FALSE(qsr_ssd_check(a, i, -1.0 * r, -1.0 * s.transpose(), -1.0 * q, -w + 2e-6 + 1e-6));
    }
}

TEST_CASE("property: ssd check is monotone in kappa") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ku(-2.0, 4.0);
    for (int k = 0; k < 200; ++k) {
        const std::size_t n = 1 + k % 3;
        const Matrix a = random_matrix(rng, n, n, 2.0);
        const Matrix b = random_matrix(rng, n, n, 0.5);
        const Matrix zero(n, n);
        const Matrix r = -1.0 * Matrix::identity(n);
        const double k1 = ku(rng), k2 = k1 + 0.5;
        if (!qsr_ssd_check(a, b, zero, zero, r, k1)) CHECK_FALSE(qsr_ssd_check(a, b, zero, zero, r, k2));
    }
}

TEST_CASE("property: storage rate along simulated linear trajectories") {
    // x' = A x + B u with A = diag(-2, -3), B = I is (Q,S,R)-ssd(1) for
    // Q = -I, S = 0, R = I (see the 4x4 example above).
    const Matrix a{{-2, 0}, {0, -3}};
    const double kappa = 1.0;
    REQUIRE(qsr_ssd_check(a, Matrix::identity(2), -1.0 * Matrix::identity(2), Matrix(2, 2), Matrix::identity(2), kappa));
    auto u = [](double t) { return Vector{std::sin(3.0 * t), std::cos(1.7 * t) * 0.8}; };
    const VectorField f = [&](double t, std::span<const double> x, std::span<double> dx) {
        const Vector ut = u(t);
        dx[0] = -2.0 * x[0] + ut[0];
        dx[1] = -3.0 * x[1] + ut[1];
    };
    const DenseTrajectory tr = integrate_flow(f, 0.0, 5.0, Vector{1.0, -2.0});
    const double h = 1e-5;
    for (int k = 1; k < 500; ++k) {
        const double t = 0.01 * k;
        const Vector xm = tr(t - h), xp = tr(t + h), x = tr(t);
        const double ds = (xp[0] * xp[0] + xp[1] * xp[1] - xm[0] * xm[0] - xm[1] * xm[1]) / (2.0 * h);
        const Vector ut = u(t);
        const double omega = -(x[0] * x[0] + x[1] * x[1]) + ut[0] * ut[0] + ut[1] * ut[1];
        CHECK(ds <= -kappa * (x[0] * x[0] + x[1] * x[1]) + omega + 1e-6);
    }
}

TEST_CASE("certificate construction") {
    set_asymmetry_handler([](double) {});
    const auto c = QsrCertificate::make(Matrix{{-1, 0.2}, {0, -1}}, Matrix(2, 2), Matrix(2, 2), QsrSubject::static_map_o);
    CHECK(c.q(0, 1) == doctest::Approx(0.1));
    CHECK(c.q(1, 0) == doctest::Approx(0.1));
    CHECK_FALSE(c.is_zero_map());
    CHECK(zero_cert(2, QsrSubject::static_map_n).is_zero_map());
    CHECK_THROWS_AS(QsrCertificate::make(Matrix(2, 2), Matrix(3, 2), Matrix(2, 2), QsrSubject::static_map_o), Error);
    CHECK(supply_rate(Matrix{{-1}}, Matrix{{0.5}}, Matrix{{2}}, Vector{1.0}, Vector{2.0}) == doctest::Approx(-1 + 2 + 8));
    CHECK(parse_status(to_string(CertStatus::falsified)) == CertStatus::falsified);
    CHECK(parse_subject(to_string(QsrSubject::linear_subsystem_n)) == QsrSubject::linear_subsystem_n);
    CHECK_THROWS_AS(parse_status("maybe"), Error);
    set_asymmetry_handler({});
}
