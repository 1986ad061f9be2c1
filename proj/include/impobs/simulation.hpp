#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "impobs/matrix.hpp"
#include "impobs/plant.hpp"
#include "impobs/timing.hpp"

namespace impobs {

// Sampling instants t_1 < t_2 < ... . Randomized schedules keep drawing
// until the horizon is exceeded, so the last instant lies beyond it.
struct Schedule {
    std::vector<double> times;
    double t_min = 0.0;
    double t_max = 0.0;
    std::uint64_t seed = 0;
};

Schedule make_schedule(double t_min, double t_max, double horizon, std::uint64_t seed);
// Validates strict monotonicity and positivity.
Schedule explicit_schedule(std::vector<double> times);

enum class NoiseDistribution { uniform_truncated, zero };
const char* to_string(NoiseDistribution d);
NoiseDistribution parse_noise_distribution(const std::string& s);

struct NoiseStream {
    std::vector<Vector> values;
    double bound = 0.0;
    std::uint64_t seed = 0;
    NoiseDistribution distribution = NoiseDistribution::zero;
};

// Components i.i.d. uniform on [-bound, bound]; bound == 0 gives the zero stream.
NoiseStream make_noise(double bound, std::size_t count, std::size_t dim, std::uint64_t seed);

// (I - L) eps_o + L w_k.
Vector jump_map(std::span<const double> eps_o, const Matrix& l_gain, std::span<const double> w_k);

struct SimOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double grid_per_unit = 1000.0;
};

struct JumpEvent {
    std::size_t k = 0;          // 1-based sampling index
    double t = 0.0;
    std::size_t grid_row = 0;   // row holding the pre-jump values
    Vector eps_pre;             // full error, left limit
    Vector eps_post;            // full error, right limit
    Vector w;
    double s_o_pre = 0.0;
    double s_o_post = 0.0;
};

// Dense record of one impulsive run. Grid rows are left-continuous: the row at
// t_k carries pre-jump values, the right limits live in `events`.
struct SimTrace {
    std::size_t n = 0;
    std::size_t m = 0;
    double horizon = 0.0;
    SimOptions options;
    std::vector<double> t;
    std::vector<double> x;     // plant state in original coordinates, n per row
    std::vector<double> z;     // plant state in z coordinates
    std::vector<double> zhat;  // observer state in z coordinates
    std::vector<double> eps;   // zhat - z
    std::vector<double> s_o;   // |eps_o|^2
    std::vector<double> s_n;   // |eps_n|^2
    std::vector<int> event_index;  // per row, -1 when the row is not a sampling instant
    std::vector<JumpEvent> events;

    std::size_t rows() const noexcept { return t.size(); }
    std::span<const double> eps_row(std::size_t i) const { return {eps.data() + i * n, n}; }
    std::span<const double> x_row(std::size_t i) const { return {x.data() + i * n, n}; }
    std::span<const double> zhat_row(std::size_t i) const { return {zhat.data() + i * n, n}; }
    std::span<const double> z_row(std::size_t i) const { return {z.data() + i * n, n}; }
};

// Flow between sampling instants and jumps of the observer's measured block
// at each t_k <= horizon. Integration restarts at every jump.
SimTrace simulate(const PartitionedPlant& pp, const ObserverDesign& design, const Schedule& schedule,
                  const NoiseStream& noise, std::span<const double> z0, std::span<const double> zhat0, double horizon,
                  const SimOptions& options = {});

enum class SigmaVariant { eq15, factor2 };
const char* to_string(SigmaVariant v);
SigmaVariant parse_sigma_variant(const std::string& s);

struct SigmaTrace {
    static constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    SigmaVariant variant = SigmaVariant::factor2;
    double coupling = 0.0;            // c * beta * lambda_on, c = 2 for factor2
    std::vector<double> sigma;        // per grid row, NaN before t_1
    std::vector<double> sigma_post;   // per event, after the additive jump
    double max_violation = -std::numeric_limits<double>::infinity();  // max of S_o - sigma_o for t >= t_1
    bool holds(double tol = 1e-9) const noexcept { return max_violation <= tol; }
};

// sigma_o' = -kappa_o sigma_o + c beta lambda_on |eps_o| |eps_n| from
// sigma_o(t_1) = S_o(eps_o(t_1)), with sigma_o+ = sigma_o + gamma |w_k| at
// every sampling instant. Integrated a posteriori on the stored trace.
SigmaTrace sigma_o_majorant(const SimTrace& trace, const ObserverDesign& design, SigmaVariant variant);

struct IssReport {
    static constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    double w_inf = 0.0;
    double radius = nan;
    bool entered = false;
    double first_entry_time = nan;
    bool stayed_inside = false;
    double last_exit_time = nan;   // last time outside the ball, NaN if never outside
    double sup_excess = nan;       // max over the run of |eps| - radius
    double final_norm = nan;
    double fitted_rate = nan;      // -slope of ln|eps(t_k)|^2 (noiseless only)
    double rate_target = nan;      // 0.9 * kappa
    bool rate_ok = false;
    std::size_t rate_points = 0;
    double rel_tol = 0.0;
    double abs_tol = 0.0;

    bool iss_ok() const noexcept { return entered && stayed_inside; }
};

// ISS-ball entry and positive invariance (grid rows plus post-jump points)
// and, for w_inf == 0, the least-squares decay rate of |eps|^2 at the
// sampling instants against kappa.
IssReport verify_iss(const SimTrace& trace, const ObserverDesign& design, double w_inf);

struct CsvMeta {
    std::vector<std::pair<std::string, std::string>> entries;
};

void write_trace_csv(std::ostream& os, const SimTrace& trace, const SigmaTrace* sigma, const CsvMeta& meta);
void write_events_csv(std::ostream& os, const SimTrace& trace, const SigmaTrace* sigma, const CsvMeta& meta);

}  // namespace impobs
