#include "impobs/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "impobs/errors.hpp"

namespace impobs {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
// Continuous extension (Hairer, Norsett & Wanner).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
// Step ratio h_new/h is kept within [kFacMin, kFacMax].
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 10.0;

bool finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void DenseTrajectory::eval(double t, std::span<double> out) const {
    if (out.size() != dim_) throw Error(ErrorKind::Dimension, "DenseTrajectory::eval: output size mismatch");
    const double slack = 1e-12 * std::max(1.0, std::abs(t1_));
    if (t < t0_ - slack || t > t1_ + slack || starts_.empty()) {
        if (starts_.empty() && std::abs(t - t0_) <= slack) {
            std::copy(final_.begin(), final_.end(), out.begin());
            return;
        }
        throw Error(ErrorKind::Dimension, "DenseTrajectory::eval: time outside [t0, t1]");
    }
    if (t >= t1_) {
        std::copy(final_.begin(), final_.end(), out.begin());
        return;
    }
    auto it = std::upper_bound(starts_.begin(), starts_.end(), t);
    const std::size_t k = it == starts_.begin() ? 0 : static_cast<std::size_t>(it - starts_.begin()) - 1;
    const double theta = std::clamp((t - starts_[k]) / widths_[k], 0.0, 1.0);
    const double theta1 = 1.0 - theta;
    const double* c = coeffs_.data() + 5 * dim_ * k;
    for (std::size_t i = 0; i < dim_; ++i) {
        out[i] = c[i] + theta * (c[dim_ + i] +
                                 theta1 * (c[2 * dim_ + i] + theta * (c[3 * dim_ + i] + theta1 * c[4 * dim_ + i])));
    }
}

Vector DenseTrajectory::operator()(double t) const {
    Vector out(dim_);
    eval(t, out);
    return out;
}

DenseTrajectory integrate_flow(const VectorField& field, double t0, double t1, std::span<const double> x0,
                               const IntegratorOptions& opt) {
    if (!(t1 > t0)) throw Error(ErrorKind::Dimension, "integrate_flow: need t1 > t0");
    if (!(opt.rel_tol > 0.0) || !(opt.abs_tol >= 0.0)) {
        throw Error(ErrorKind::Dimension, "integrate_flow: tolerances must be positive");
    }
    if (!finite(x0)) throw IntegrationError("integrate_flow: non-finite initial state", t0);

    const std::size_t n = x0.size();
    DenseTrajectory traj(t0, n);
    const double h_max = opt.max_step > 0.0 ? opt.max_step : (t1 - t0);

    Vector y(x0.begin(), x0.end()), y1(n), ytmp(n), yerr(n);
    Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    auto f = [&](double t, const Vector& x, Vector& dx) {
        field(t, x, dx);
        ++traj.stats_.evaluations;
    };

    auto sk = [&](double a, double b) {
        return opt.abs_tol + opt.rel_tol * std::max(std::abs(a), std::abs(b));
    };

    double t = t0;
    f(t, y, k1);
    if (!finite(k1)) throw IntegrationError("integrate_flow: non-finite derivative at t0", t0);

    double h = opt.initial_step;
    if (h <= 0.0) {
        double dnf = 0.0, dny = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = sk(y[i], y[i]);
            dnf += (k1[i] / s) * (k1[i] / s);
            dny += (y[i] / s) * (y[i] / s);
        }
        h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
        h = std::min(h, h_max);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * k1[i];
        f(t + h, ytmp, k2);
        double der2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = (k2[i] - k1[i]) / sk(y[i], y[i]);
            der2 += d * d;
        }
        der2 = std::sqrt(der2) / h;
        const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
        h = std::min({100.0 * h, h1, h_max});
    }
    h = std::min(h, t1 - t);

    double fac_old = 1e-4;
    bool last_rejected = false;
    std::size_t steps = 0;
    while (t < t1) {
        if (++steps > opt.max_steps) throw IntegrationError("integrate_flow: step budget exhausted", t);
        const double h_floor = 1e-14 * std::max(1.0, std::abs(t));
        if (h < h_floor) {
            std::ostringstream os;
            os << "integrate_flow: step size underflow at t = " << t;
            throw IntegrationError(os.str(), t);
        }
        bool last = false;
        if (t + h >= t1 || t + 1.01 * h >= t1) {
            h = t1 - t;
            last = true;
        }

        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        f(t + c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const double t_new = last ? t1 : t + h;
        f(t_new, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        f(t_new, y1, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            yerr[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double s = sk(y[i], y1[i]);
            err += (yerr[i] / s) * (yerr[i] / s);
        }
        err = std::sqrt(err / static_cast<double>(std::max<std::size_t>(n, 1)));
        if (!std::isfinite(err) || !finite(y1) || !finite(k7)) {
            // Treat as a rejection with a strong cut.
            ++traj.stats_.rejected;
            h *= 0.1;
            last_rejected = true;
            continue;
        }

        const double fac11 = std::pow(err, kExpo);
        double fac = fac11 / std::pow(fac_old, kBeta);
        fac = std::clamp(fac / kSafety, 1.0 / kFacMax, 1.0 / kFacMin);
        double h_new = h / fac;

        if (err <= 1.0) {
            fac_old = std::max(err, 1e-4);
            ++traj.stats_.accepted;
            traj.starts_.push_back(t);
            traj.widths_.push_back(h);
            const std::size_t base = traj.coeffs_.size();
            traj.coeffs_.resize(base + 5 * n);
            double* c = traj.coeffs_.data() + base;
            for (std::size_t i = 0; i < n; ++i) {
                const double ydiff = y1[i] - y[i];
                const double bspl = h * k1[i] - ydiff;
                c[i] = y[i];
                c[n + i] = ydiff;
                c[2 * n + i] = bspl;
                c[3 * n + i] = ydiff - h * k7[i] - bspl;
                c[4 * n + i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
            }
            std::swap(y, y1);
            std::swap(k1, k7);
            t = t_new;
            if (last_rejected) h_new = std::min(h_new, h);
            last_rejected = false;
            h = std::min(h_new, h_max);
        } else {
            ++traj.stats_.rejected;
            h = h / std::min(1.0 / kFacMin, fac11 / kSafety);
            last_rejected = true;
        }
    }

    traj.t1_ = t1;
    traj.final_ = y;
    return traj;
}

}  // namespace impobs
