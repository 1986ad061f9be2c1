// Independent reference computations used by the tests. Nothing here calls
// into the library's numerics.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, small

// Eigenvalues of the symmetric 2x2 [[a, b], [b, d]], ascending.
inline std::array<double, 2> sym2_eigs(double a, double b, double d) {
    const double m = 0.5 * (a + d);
    const double r = std::hypot(0.5 * (a - d), b);
    return {m - r, m + r};
}

// Largest singular value of a 2x2 via the closed-form eigenvalues of M^T M.
inline double spectral_norm2x2(double a, double b, double c, double d) {
    const double p = a * a + c * c, q = a * b + c * d, s = b * b + d * d;
    return std::sqrt(sym2_eigs(p, q, s)[1]);
}

inline Mat mat_mul(const Mat& a, const Mat& b) {
    const std::size_t n = a.size(), k = b.size(), m = b[0].size();
    Mat c(n, Vec(m, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < k; ++l)
            for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
    return c;
}

// exp(A t) by scaling and squaring with a degree-24 Taylor core.
inline Mat expm(const Mat& a, double t) {
    const std::size_t n = a.size();
    double norm = 0.0;
    for (const auto& r : a)
        for (double v : r) norm = std::max(norm, std::abs(v * t));
    int squarings = 0;
    while (norm * n > 0.125) {
        norm *= 0.5;
        ++squarings;
    }
    const double scale = t / std::pow(2.0, squarings);
    Mat as(n, Vec(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) as[i][j] = a[i][j] * scale;
    Mat result(n, Vec(n, 0.0)), term(n, Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) result[i][i] = term[i][i] = 1.0;
    for (int k = 1; k <= 24; ++k) {
        term = mat_mul(term, as);
        for (auto& r : term)
            for (double& v : r) v /= k;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) result[i][j] += term[i][j];
    }
    for (int s = 0; s < squarings; ++s) result = mat_mul(result, result);
    return result;
}

using Field = std::function<void(double, const Vec&, Vec&)>;

// Classical fixed-step Runge-Kutta 4; calls `visit(t, x)` after each step.
inline Vec rk4(const Field& f, double t0, double t1, Vec x, double dt,
               const std::function<void(double, const Vec&)>& visit = {}) {
    const std::size_t n = x.size();
    Vec k1(n), k2(n), k3(n), k4(n), tmp(n);
    const auto steps = static_cast<long>(std::llround((t1 - t0) / dt));
    const double h = (t1 - t0) / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) {
        const double t = t0 + h * static_cast<double>(s);
        f(t, x, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        f(t + 0.5 * h, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        f(t + 0.5 * h, tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
        f(t + h, tmp, k4);
        for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (visit) visit(t0 + h * static_cast<double>(s + 1), x);
    }
    return x;
}

// Benchmark vector field with a = 2, b = 3, c = -1, written out by hand.
inline void benchmark_field(const Vec& x, Vec& dx) {
    const double x2 = x[1];
    dx[0] = x[0] * x2 * (x2 * x2 - 4.0) / (1.0 + x2 * x2 * x2 * x2);
    dx[1] = 3.0 * x[0] - x[1];
}

// sup |s (s^2 - 4)| / (1 + s^4) on a uniform grid over [0, 20].
inline double benchmark_gain_grid(std::size_t nodes = 2'000'000) {
    double best = 0.0;
    for (std::size_t i = 0; i <= nodes; ++i) {
        const double s = 20.0 * static_cast<double>(i) / static_cast<double>(nodes);
        best = std::max(best, std::abs(s * (s * s - 4.0)) / (1.0 + s * s * s * s));
    }
    return best;
}

// Largest eigenvalue of a symmetric matrix by bisection on positive
// definiteness of mu I - S, tested with a plain Cholesky factorization.
inline double sym_eig_max_bisect(const Mat& s, double tol = 1e-13) {
    const std::size_t n = s.size();
    auto pos_def = [&](double mu) {
        Mat l(n, Vec(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double v = (i == j ? mu : 0.0) - s[i][j];
                for (std::size_t k = 0; k < j; ++k) v -= l[i][k] * l[j][k];
                if (i == j) {
                    if (!(v > 0.0)) return false;
                    l[i][i] = std::sqrt(v);
                } else {
                    l[i][j] = v / l[j][j];
                }
            }
        }
        return true;
    };
    double bound = 0.0;  // Gershgorin radius
    for (const auto& r : s) {
        double row = 0.0;
        for (double v : r) row += std::abs(v);
        bound = std::max(bound, row);
    }
    double lo = -bound - 1.0, hi = bound + 1.0;
    while (hi - lo > tol * std::max(1.0, std::abs(hi))) {
        const double mid = 0.5 * (lo + hi);
        (pos_def(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace oracle
