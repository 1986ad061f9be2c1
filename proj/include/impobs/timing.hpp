#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "impobs/dissipativity.hpp"
#include "impobs/matrix.hpp"
#include "impobs/plant.hpp"

namespace impobs {

// One failed (or informational) stage of the design pipeline. `slack` is the
// signed margin of the inequality that was checked (negative means violated),
// NaN when not applicable.
struct DesignDiagnostic {
    std::string stage;
    std::string message;
    double slack = std::numeric_limits<double>::quiet_NaN();
};

struct ObserverDesign {
    static constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    Matrix l_gain;
    double gamma = nan;
    double beta = nan;
    double varpi_o = nan;
    bool assumption2 = false;  // varpi_o > 0
    double kappa_n = nan;
    double kappa_o = nan;      // evaluated at t_max
    double kappa = nan;
    bool kappa_defaulted = false;
    double lambda_on = nan;
    double lambda_no = nan;
    double t_max_noiseless = nan;
    double t_max = nan;
    double t_min = nan;
    double alpha = nan;
    bool theorem1 = false;
    bool feasible = false;
    std::vector<DesignDiagnostic> diagnostics;
};

// gamma = 1 - max_i |1 - l_ii| for a diagonal gain with every |1 - l_ii| in (0, 1).
double jump_contraction(const Matrix& l_gain);

// -ln((1-gamma)^2)/varpi_o; +infinity when varpi_o <= 0 (flow does not expand).
double t_max_noiseless(double gamma, double varpi_o);

// -(ln((1-gamma)^2)/t + varpi_o).
double kappa_o_rate(double gamma, double t_interval, double varpi_o);

// Both kappa_o and kappa_n exceed lambda_no + beta*lambda_on + kappa, kappa > 0.
// kappa_o evaluated at the supremum t_max sits on the bound by construction,
// so a relative tie of 1e-12 counts as satisfied.
bool check_theorem1(const ObserverDesign& design);

struct TimingWindow {
    double t_min = 0.0;
    double t_max = 0.0;
    bool feasible() const noexcept { return t_min < t_max; }
};

// T_max = -ln((1-gamma)^2)/(varpi_o + kappa + lambda_no + beta*lambda_on),
// T_min = -ln((alpha-gamma)/alpha)/kappa. Both are strict bounds on the
// admissible sampling intervals. Throws InfeasibleWindowError if T_min >= T_max.
TimingWindow t_window(double gamma, double varpi_o, double kappa, double lambda_no, double lambda_on, double beta,
                      double alpha);

// sqrt(alpha * w_inf).
double iss_ball_radius(double alpha, double w_inf);

struct DesignInputs {
    QsrCertificate cert_o;
    QsrCertificate cert_n;
    Matrix l_gain;
    double alpha = 0.0;
    std::optional<double> kappa;  // defaults to half the Theorem-1 slack
};

// gamma -> beta -> varpi_o -> kappa_n -> window -> Theorem 1 with kappa_o at T_max.
// Never throws on design failures; records them in diagnostics with the
// stage label and leaves feasible = false.
ObserverDesign design_pipeline(const PartitionedPlant& pp, const DesignInputs& inputs);

}  // namespace impobs
