#include <doctest.h>

#include <cmath>

#include "impobs/errors.hpp"
#include "impobs/example.hpp"
#include "impobs/integrator.hpp"
#include "oracles.hpp"

using namespace impobs;

TEST_CASE("scalar decay matches exp(-1)") {
    const VectorField f = [](double, std::span<const double> x, std::span<double> dx) { dx[0] = -x[0]; };
    IntegratorOptions opt;
    opt.rel_tol = 1e-12;
    opt.abs_tol = 1e-15;
    const DenseTrajectory tr = integrate_flow(f, 0.0, 1.0, Vector{1.0}, opt);
    CHECK(std::abs(tr.final_state()[0] - std::exp(-1.0)) <= 1e-10 * std::exp(-1.0));
    CHECK(tr.t1() == 1.0);
    // Dense output between steps.
    for (int k = 0; k <= 100; ++k) {
        const double t = 0.01 * k;
        CHECK(std::abs(tr(t)[0] - std::exp(-t)) <= 1e-9);
    }
    CHECK_THROWS_AS(tr(1.5), Error);
}

TEST_CASE("linear system matches the matrix exponential") {
    const oracle::Mat a{{0.0, 1.0, 0.0}, {-2.0, -0.3, 1.0}, {0.5, 0.0, -1.0}};
    const VectorField f = [&](double, std::span<const double> x, std::span<double> dx) {
        for (std::size_t i = 0; i < 3; ++i) {
            dx[i] = 0.0;
            for (std::size_t j = 0; j < 3; ++j) dx[i] += a[i][j] * x[j];
        }
    };
    const Vector x0{1.0, -0.5, 2.0};
    IntegratorOptions opt;
    opt.rel_tol = 1e-11;
    opt.abs_tol = 1e-14;
    const DenseTrajectory tr = integrate_flow(f, 0.0, 3.0, x0, opt);
    for (double t : {0.37, 1.0, 2.2, 3.0}) {
        const oracle::Mat e = oracle::expm(a, t);
        const Vector got = tr(t);
        for (std::size_t i = 0; i < 3; ++i) {
            double want = 0.0;
            for (std::size_t j = 0; j < 3; ++j) want += e[i][j] * x0[j];
            CHECK(std::abs(got[i] - want) <= 1e-8);
        }
    }
}

TEST_CASE("benchmark flow matches fine RK4") {
    const ExampleParams p;
    const VectorField f = [&](double, std::span<const double> x, std::span<double> dx) {
        dx[0] = example_mu(p, x[0], x[1]);
        dx[1] = p.b * x[0] + p.c * x[1];
    };
    const Vector x0{-1.0, -1.0};
    const DenseTrajectory tr = integrate_flow(f, 0.0, 0.5, x0, {1e-12, 1e-15});
    const oracle::Vec ref = oracle::rk4(
        [](double, const oracle::Vec& x, oracle::Vec& dx) { oracle::benchmark_field(x, dx); }, 0.0, 0.5, {-1.0, -1.0},
        1e-5);
    CHECK(std::abs(tr.final_state()[0] - ref[0]) <= 1e-7);
    CHECK(std::abs(tr.final_state()[1] - ref[1]) <= 1e-7);
}

TEST_CASE("finite-time blow-up raises IntegrationError") {
    // x' = x^2 from x(0) = 1 escapes at t = 1.
    const VectorField f = [](double, std::span<const double> x, std::span<double> dx) { dx[0] = x[0] * x[0]; };
    try {
        (void)integrate_flow(f, 0.0, 2.0, Vector{1.0});
        FAIL("expected IntegrationError");
    } catch (const IntegrationError& e) {
        CHECK(e.last_good_time() < 1.0);
        CHECK(e.last_good_time() > 0.9);
    }
}

TEST_CASE("integrator argument checks") {
    const VectorField f = [](double, std::span<const double>, std::span<double> dx) { dx[0] = 0.0; };
    CHECK_THROWS_AS(integrate_flow(f, 1.0, 1.0, Vector{0.0}), Error);
    CHECK_THROWS_AS(integrate_flow(f, 0.0, 1.0, Vector{NAN}), IntegrationError);
    IntegratorOptions bad;
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(integrate_flow(f, 0.0, 1.0, Vector{0.0}, bad), Error);
}

TEST_CASE("max_step bounds every accepted step") {
    const VectorField f = [](double, std::span<const double> x, std::span<double> dx) { dx[0] = -x[0]; };
    IntegratorOptions opt;
    opt.max_step = 0.01;
    const DenseTrajectory tr = integrate_flow(f, 0.0, 1.0, Vector{1.0}, opt);
    CHECK(tr.steps() >= 100);
}
