#include "impobs/timing.hpp"

#include <cmath>
#include <sstream>

#include "impobs/errors.hpp"

namespace impobs {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(8);
    os << v;
    return os.str();
}

void require_gamma(double gamma, const char* where) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw Error(ErrorKind::Design, std::string(where) + ": gamma must lie in (0, 1), got " + fmt(gamma));
    }
}

}  // namespace

double jump_contraction(const Matrix& l_gain) {
    if (!l_gain.is_diagonal() || l_gain.empty()) {
        throw Error(ErrorKind::Design, "jump_contraction: correction gain L must be a nonempty diagonal matrix");
    }
    if (!l_gain.all_finite()) throw Error(ErrorKind::NonFinite, "jump_contraction: non-finite gain");
    double worst = 0.0;
    for (std::size_t i = 0; i < l_gain.rows(); ++i) {
        const double c = std::abs(1.0 - l_gain(i, i));
        if (c >= 1.0) {
            throw Error(ErrorKind::Design, "jump_contraction: L(" + std::to_string(i) + "," + std::to_string(i) +
                                               ") = " + fmt(l_gain(i, i)) + " gives no contraction (|1 - l| >= 1)");
        }
        worst = std::max(worst, c);
    }
    if (worst == 0.0) {
        throw Error(ErrorKind::Design, "jump_contraction: 1 - gamma = 0 (L = I); beta = 1/(1-gamma)^2 is undefined");
    }
    return 1.0 - worst;
}

double t_max_noiseless(double gamma, double varpi_o) {
    require_gamma(gamma, "t_max_noiseless");
    if (varpi_o <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log((1.0 - gamma) * (1.0 - gamma)) / varpi_o;
}

double kappa_o_rate(double gamma, double t_interval, double varpi_o) {
    require_gamma(gamma, "kappa_o_rate");
    if (!(t_interval > 0.0)) throw Error(ErrorKind::Design, "kappa_o_rate: interval must be positive");
    return -(std::log((1.0 - gamma) * (1.0 - gamma)) / t_interval + varpi_o);
}

bool check_theorem1(const ObserverDesign& d) {
    if (!(d.kappa > 0.0)) return false;
    const double bound = d.lambda_no + d.beta * d.lambda_on + d.kappa;
    if (!std::isfinite(bound)) return false;
    const double tie = 1e-12 * std::max(1.0, std::abs(bound));
    return d.kappa_o > bound - tie && d.kappa_n > bound;
}

TimingWindow t_window(double gamma, double varpi_o, double kappa, double lambda_no, double lambda_on, double beta,
                      double alpha) {
    require_gamma(gamma, "t_window");
    if (!(alpha > gamma)) {
        throw Error(ErrorKind::Design, "t_window: ISS gain alpha = " + fmt(alpha) + " must exceed gamma = " + fmt(gamma));
    }
    if (!(kappa > 0.0)) throw Error(ErrorKind::Design, "t_window: kappa must be positive");
    const double denom = varpi_o + kappa + lambda_no + beta * lambda_on;
    if (!(denom > 0.0)) {
        throw Error(ErrorKind::Design, "t_window: T_max denominator varpi_o + kappa + lambda_no + beta*lambda_on = " +
                                           fmt(denom) + " is not positive");
    }
    TimingWindow w;
    w.t_max = -std::log((1.0 - gamma) * (1.0 - gamma)) / denom;
    w.t_min = -std::log((alpha - gamma) / alpha) / kappa;
    if (!w.feasible()) throw InfeasibleWindowError(w.t_min, w.t_max);
    return w;
}

double iss_ball_radius(double alpha, double w_inf) {
    if (!(alpha > 0.0) || !(w_inf >= 0.0)) {
        throw Error(ErrorKind::Design, "iss_ball_radius: need alpha > 0 and w_inf >= 0");
    }
    return std::sqrt(alpha * w_inf);
}

ObserverDesign design_pipeline(const PartitionedPlant& pp, const DesignInputs& in) {
    ObserverDesign d;
    d.l_gain = in.l_gain;
    d.alpha = in.alpha;
    bool ok = true;
    auto fail = [&](std::string stage, std::string msg, double slack = ObserverDesign::nan) {
        d.diagnostics.push_back({std::move(stage), std::move(msg), slack});
        ok = false;
    };

    if (in.l_gain.rows() != pp.m()) {
        fail("jump gain", "L must be " + std::to_string(pp.m()) + "x" + std::to_string(pp.m()));
    } else {
        try {
            d.gamma = jump_contraction(in.l_gain);
            d.beta = 1.0 / ((1.0 - d.gamma) * (1.0 - d.gamma));
        } catch (const Error& e) {
            fail("jump gain", e.what());
        }
    }

    try {
        const VarpiResult v = compute_varpi_o(pp.a_oo(), in.cert_o);
        d.varpi_o = v.varpi_o;
        d.assumption2 = v.positive;
        if (!v.positive) {
            d.diagnostics.push_back({"Assumption 2", "varpi_o = " + fmt(v.varpi_o) +
                                                         " <= 0: the measured-error flow is not expanding",
                                     v.varpi_o});
        }
    } catch (const Error& e) {
        fail("Lemma 2", e.what());
    }

    try {
        d.kappa_n = certify_kappa_n(pp.a_nn(), in.cert_n);
    } catch (const Error& e) {
        fail("Lemma 1", e.what());
    }

    d.lambda_on = spectral_norm(pp.a_on());
    d.lambda_no = spectral_norm(pp.a_no());

    if (std::isfinite(d.gamma) && std::isfinite(d.varpi_o)) d.t_max_noiseless = t_max_noiseless(d.gamma, d.varpi_o);

    const double coupling = d.lambda_no + d.beta * d.lambda_on;
    if (in.kappa) {
        d.kappa = *in.kappa;
        if (!(d.kappa > 0.0)) fail("Theorem 1", "kappa must be positive, got " + fmt(d.kappa), d.kappa);
    } else if (std::isfinite(d.kappa_n) && std::isfinite(coupling)) {
        const double slack = d.kappa_n - coupling;
        if (slack > 0.0) {
            d.kappa = 0.5 * slack;
            d.kappa_defaulted = true;
        } else {
            fail("Theorem 1", "kappa_n - lambda_no - beta*lambda_on = " + fmt(slack) + " <= 0: no kappa > 0 exists",
                 slack);
        }
    }

    if (std::isfinite(d.gamma) && std::isfinite(d.varpi_o) && d.kappa > 0.0) {
        try {
            const TimingWindow w = t_window(d.gamma, d.varpi_o, d.kappa, d.lambda_no, d.lambda_on, d.beta, d.alpha);
            d.t_min = w.t_min;
            d.t_max = w.t_max;
        } catch (const InfeasibleWindowError& e) {
            d.t_min = e.t_min();
            d.t_max = e.t_max();
            fail("Theorem 2", e.what(), e.t_max() - e.t_min());
        } catch (const Error& e) {
            fail("Theorem 2", e.what());
        }
    }

    if (std::isfinite(d.t_max) && d.t_max > 0.0) {
        d.kappa_o = kappa_o_rate(d.gamma, d.t_max, d.varpi_o);
        d.theorem1 = check_theorem1(d);
        if (std::isfinite(d.kappa_n)) {
            const double n_slack = d.kappa_n - (coupling + d.kappa);
            if (!(n_slack > 0.0)) {
                fail("Theorem 1", "kappa_n = " + fmt(d.kappa_n) + " does not exceed lambda_no + beta*lambda_on + kappa = " +
                                      fmt(coupling + d.kappa),
                     n_slack);
            }
        }
        if (!d.theorem1 && ok) fail("Theorem 1", "kappa_o at T_max does not exceed the coupling bound");
    }

    d.feasible = ok && d.theorem1 && d.t_min < d.t_max;
    return d;
}

}  // namespace impobs
