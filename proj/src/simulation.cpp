#include "impobs/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "impobs/errors.hpp"
#include "impobs/integrator.hpp"

namespace impobs {

namespace {

void put_number(std::ostream& os, double v) {
    if (std::isnan(v)) return;  // empty cell
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, ptr - buf);
}

void put_meta(std::ostream& os, const CsvMeta& meta) {
    for (const auto& [k, v] : meta.entries) os << "# " << k << '=' << v << '\n';
}

double squared_norm(std::span<const double> v) {
    const double r = norm2(v);
    return r * r;
}

}  // namespace

Schedule make_schedule(double t_min, double t_max, double horizon, std::uint64_t seed) {
    if (!(t_min >= 0.0) || !(t_max > t_min) || !std::isfinite(t_max)) {
        throw Error(ErrorKind::InfeasibleWindow, "make_schedule: need 0 <= t_min < t_max");
    }
    if (!(horizon > t_min)) throw Error(ErrorKind::Dimension, "make_schedule: horizon must exceed t_min");
    Schedule s;
    s.t_min = t_min;
    s.t_max = t_max;
    s.seed = seed;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double t = 0.0;
    while (t <= horizon) {
        double gap = 0.0;
        // Open interval (t_min, t_max): redraw the measure-zero endpoints.
        do {
            gap = t_min + (t_max - t_min) * unit(rng);
        } while (!(gap > t_min && gap < t_max));
        t += gap;
        s.times.push_back(t);
    }
    return s;
}

Schedule explicit_schedule(std::vector<double> times) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0) || !std::isfinite(times[i]) || (i > 0 && !(times[i] > times[i - 1]))) {
            throw Error(ErrorKind::Config, "schedule: sampling instants must be positive and strictly increasing");
        }
    }
    Schedule s;
    s.times = std::move(times);
    if (s.times.size() > 1) {
        s.t_min = s.times[1] - s.times[0];
        s.t_max = s.t_min;
        for (std::size_t i = 1; i < s.times.size(); ++i) {
            s.t_min = std::min(s.t_min, s.times[i] - s.times[i - 1]);
            s.t_max = std::max(s.t_max, s.times[i] - s.times[i - 1]);
        }
    }
    return s;
}

const char* to_string(NoiseDistribution d) {
    return d == NoiseDistribution::zero ? "zero" : "uniform_truncated";
}

NoiseDistribution parse_noise_distribution(const std::string& s) {
    if (s == "zero") return NoiseDistribution::zero;
    if (s == "uniform_truncated") return NoiseDistribution::uniform_truncated;
    throw Error(ErrorKind::Config, "unknown noise distribution '" + s + "'");
}

NoiseStream make_noise(double bound, std::size_t count, std::size_t dim, std::uint64_t seed) {
    if (!(bound >= 0.0) || !std::isfinite(bound)) throw Error(ErrorKind::Dimension, "make_noise: bound must be >= 0");
    NoiseStream ns;
    ns.bound = bound;
    ns.seed = seed;
    ns.distribution = bound > 0.0 ? NoiseDistribution::uniform_truncated : NoiseDistribution::zero;
    ns.values.assign(count, Vector(dim, 0.0));
    if (bound == 0.0) return ns;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto& w : ns.values)
        for (double& c : w) c = std::clamp(-bound + 2.0 * bound * unit(rng), -bound, bound);
    return ns;
}

Vector jump_map(std::span<const double> eps_o, const Matrix& l_gain, std::span<const double> w_k) {
    const std::size_t m = eps_o.size();
    if (l_gain.rows() != m || l_gain.cols() != m || w_k.size() != m) {
        throw Error(ErrorKind::Dimension, "jump_map: eps_o, L and w_k must have matching dimension");
    }
    Vector out(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double ij = (i == j ? 1.0 : 0.0) - l_gain(i, j);
            s += ij * eps_o[j] + l_gain(i, j) * w_k[j];
        }
        out[i] = s;
    }
    return out;
}

SimTrace simulate(const PartitionedPlant& pp, const ObserverDesign& design, const Schedule& schedule,
                  const NoiseStream& noise, std::span<const double> z0, std::span<const double> zhat0, double horizon,
                  const SimOptions& options) {
    const std::size_t n = pp.n();
    const std::size_t m = pp.m();
    if (z0.size() != n || zhat0.size() != n) throw Error(ErrorKind::Dimension, "simulate: initial states must have dimension n");
    if (!(horizon > 0.0)) throw Error(ErrorKind::Dimension, "simulate: horizon must be positive");
    if (!(options.grid_per_unit > 0.0)) throw Error(ErrorKind::Dimension, "simulate: grid resolution must be positive");

    std::vector<double> event_times;
    for (double t : schedule.times) {
        if (t > horizon) break;
        if (!(t > 0.0) || (!event_times.empty() && !(t > event_times.back()))) {
            throw Error(ErrorKind::Dimension, "simulate: schedule must be positive and strictly increasing");
        }
        event_times.push_back(t);
    }
    if (!event_times.empty()) {
        if (design.l_gain.rows() != m || design.l_gain.cols() != m) {
            throw Error(ErrorKind::Dimension, "simulate: correction gain must be " + std::to_string(m) + "x" +
                                                  std::to_string(m));
        }
        if (noise.values.size() < event_times.size()) {
            throw Error(ErrorKind::Dimension, "simulate: noise stream shorter than the schedule");
        }
    }

    // Uniform grid merged with the sampling instants.
    std::vector<double> grid;
    const auto n_uniform = static_cast<std::size_t>(std::floor(horizon * options.grid_per_unit + 1e-9));
    for (std::size_t i = 0; i <= n_uniform; ++i) grid.push_back(static_cast<double>(i) / options.grid_per_unit);
    if (grid.back() < horizon - 1e-12 * std::max(1.0, horizon)) grid.push_back(horizon);
    std::vector<int> grid_event(grid.size(), -1);
    {
        std::vector<double> merged;
        std::vector<int> merged_event;
        std::size_t ei = 0;
        for (double g : grid) {
            while (ei < event_times.size() && event_times[ei] < g - 1e-12 * std::max(1.0, g)) {
                merged.push_back(event_times[ei]);
                merged_event.push_back(static_cast<int>(ei));
                ++ei;
            }
            if (ei < event_times.size() && std::abs(event_times[ei] - g) <= 1e-12 * std::max(1.0, g)) {
                merged.push_back(event_times[ei]);
                merged_event.push_back(static_cast<int>(ei));
                ++ei;
            } else {
                merged.push_back(g);
                merged_event.push_back(-1);
            }
        }
        grid = std::move(merged);
        grid_event = std::move(merged_event);
    }

    SimTrace tr;
    tr.n = n;
    tr.m = m;
    tr.horizon = horizon;
    tr.options = options;
    tr.t = grid;
    tr.event_index = grid_event;
    const std::size_t rows = grid.size();
    tr.x.resize(rows * n);
    tr.z.resize(rows * n);
    tr.zhat.resize(rows * n);
    tr.eps.resize(rows * n);
    tr.s_o.resize(rows);
    tr.s_n.resize(rows);

    // Joint state [z; eps]; eps evolves with A_bar eps + psi_bar(z + eps) - psi_bar(z).
    Vector scratch_a(n), scratch_b(n), shifted(n);
    VectorField field = [&](double, std::span<const double> y, std::span<double> dy) {
        const auto z = y.subspan(0, n);
        const auto e = y.subspan(n, n);
        pp.psi_bar(z, scratch_a);
        for (std::size_t i = 0; i < n; ++i) shifted[i] = z[i] + e[i];
        pp.psi_bar(shifted, scratch_b);
        const Matrix& a = pp.a_bar();
        for (std::size_t i = 0; i < n; ++i) {
            double az = 0.0, ae = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                az += a(i, j) * z[j];
                ae += a(i, j) * e[j];
            }
            dy[i] = az + scratch_a[i];
            dy[n + i] = ae + (scratch_b[i] - scratch_a[i]);
        }
    };

    IntegratorOptions iopt;
    iopt.rel_tol = options.rel_tol;
    iopt.abs_tol = options.abs_tol;
    if (pp.plant().lipschitz_bound > 0.0) iopt.max_step = 1.0 / (spectral_norm(pp.a_bar()) + pp.plant().lipschitz_bound);

    Vector state(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        state[i] = z0[i];
        state[n + i] = zhat0[i] - z0[i];
    }

    auto store_row = [&](std::size_t r, std::span<const double> y) {
        const auto z = y.subspan(0, n);
        const auto e = y.subspan(n, n);
        const Vector x = pp.to_x(z);
        for (std::size_t i = 0; i < n; ++i) {
            tr.z[r * n + i] = z[i];
            tr.eps[r * n + i] = e[i];
            tr.zhat[r * n + i] = z[i] + e[i];
            tr.x[r * n + i] = x[i];
        }
        tr.s_o[r] = squared_norm(e.subspan(0, m));
        tr.s_n[r] = squared_norm(e.subspan(m));
    };

    store_row(0, state);
    std::size_t row = 1;
    double t_start = 0.0;
    Vector buf(2 * n);
    while (row < rows) {
        // Next segment ends at the next sampling instant or at the horizon.
        std::size_t end_row = row;
        while (end_row + 1 < rows && grid_event[end_row] < 0) ++end_row;
        const double t_end = grid[end_row];
        DenseTrajectory traj;
        try {
            traj = integrate_flow(field, t_start, t_end, state, iopt);
        } catch (const IntegrationError& e) {
            std::ostringstream os;
            os << "simulate: integration failed on [" << t_start << ", " << t_end << "]: " << e.what();
            throw IntegrationError(os.str(), e.last_good_time());
        }
        for (std::size_t r = row; r < end_row; ++r) {
            traj.eval(grid[r], buf);
            store_row(r, buf);
        }
        state = traj.final_state();
        store_row(end_row, state);

        if (grid_event[end_row] >= 0) {
            const auto ei = static_cast<std::size_t>(grid_event[end_row]);
            JumpEvent ev;
            ev.k = ei + 1;
            ev.t = t_end;
            ev.grid_row = end_row;
            ev.eps_pre.assign(state.begin() + static_cast<std::ptrdiff_t>(n), state.end());
            ev.w = noise.values[ei];
            if (ev.w.size() != m) throw Error(ErrorKind::Dimension, "simulate: noise sample dimension must be m");
            const Vector eps_o_post =
                jump_map(std::span<const double>(ev.eps_pre.data(), m), design.l_gain, ev.w);
            for (std::size_t i = 0; i < m; ++i) state[n + i] = eps_o_post[i];
            ev.eps_post.assign(state.begin() + static_cast<std::ptrdiff_t>(n), state.end());
            ev.s_o_pre = tr.s_o[end_row];
            ev.s_o_post = squared_norm(eps_o_post);
            tr.events.push_back(std::move(ev));
        }
        t_start = t_end;
        row = end_row + 1;
    }
    return tr;
}

const char* to_string(SigmaVariant v) { return v == SigmaVariant::eq15 ? "eq15" : "factor2"; }

SigmaVariant parse_sigma_variant(const std::string& s) {
    if (s == "eq15") return SigmaVariant::eq15;
    if (s == "factor2") return SigmaVariant::factor2;
    throw Error(ErrorKind::Config, "unknown sigma variant '" + s + "' (expected eq15 or factor2)");
}

SigmaTrace sigma_o_majorant(const SimTrace& trace, const ObserverDesign& design, SigmaVariant variant) {
    SigmaTrace st;
    st.variant = variant;
    const std::size_t rows = trace.rows();
    if (rows == 0 || trace.s_o.size() != rows || trace.s_n.size() != rows) {
        throw Error(ErrorKind::Dimension, "sigma_o_majorant: trace has no dense error data");
    }
    st.sigma.assign(rows, SigmaTrace::nan);
    if (trace.events.empty()) return st;
    if (!std::isfinite(design.kappa_o) || !std::isfinite(design.beta) || !std::isfinite(design.lambda_on) ||
        !std::isfinite(design.gamma)) {
        throw Error(ErrorKind::Design, "sigma_o_majorant: design lacks kappa_o, beta, lambda_on or gamma");
    }
    st.coupling = (variant == SigmaVariant::factor2 ? 2.0 : 1.0) * design.beta * design.lambda_on;
    const double kappa_o = design.kappa_o;
    const double coupling = st.coupling;

    auto product = [](double s_o, double s_n) { return std::sqrt(s_o) * std::sqrt(s_n); };

    IntegratorOptions iopt;
    iopt.rel_tol = 1e-11;
    iopt.abs_tol = 1e-15;

    const auto& ev = trace.events;
    double sigma = trace.s_o[ev.front().grid_row];
    for (std::size_t e = 0; e < ev.size(); ++e) {
        const std::size_t r0 = ev[e].grid_row;
        st.sigma[r0] = sigma;
        const double wn = norm2(ev[e].w);
        sigma += design.gamma * wn;
        st.sigma_post.push_back(sigma);
        st.max_violation = std::max(st.max_violation, trace.s_o[r0] - st.sigma[r0]);
        st.max_violation = std::max(st.max_violation, ev[e].s_o_post - sigma);

        const std::size_t r_end = e + 1 < ev.size() ? ev[e + 1].grid_row : rows - 1;
        const std::span<const double> post(ev[e].eps_post);
        double t_a = trace.t[r0];
        double p_a = product(squared_norm(post.subspan(0, trace.m)), squared_norm(post.subspan(trace.m)));
        for (std::size_t r = r0 + 1; r <= r_end; ++r) {
            const double t_b = trace.t[r];
            const double p_b = product(trace.s_o[r], trace.s_n[r]);
            const double width = t_b - t_a;
            if (width > 0.0) {
                VectorField f = [&](double t, std::span<const double> y, std::span<double> dy) {
                    const double p = p_a + (p_b - p_a) * (t - t_a) / width;
                    dy[0] = -kappa_o * y[0] + coupling * p;
                };
                const double y0[1] = {sigma};
                sigma = integrate_flow(f, t_a, t_b, y0, iopt).final_state()[0];
            }
            if (r != r_end || e + 1 == ev.size()) {
                st.sigma[r] = sigma;
                st.max_violation = std::max(st.max_violation, trace.s_o[r] - sigma);
            }
            t_a = t_b;
            p_a = p_b;
        }
    }
    return st;
}

IssReport verify_iss(const SimTrace& trace, const ObserverDesign& design, double w_inf) {
    IssReport rep;
    rep.w_inf = w_inf;
    rep.rel_tol = trace.options.rel_tol;
    rep.abs_tol = trace.options.abs_tol;
    if (trace.rows() == 0) return rep;
    rep.final_norm = norm2(trace.eps_row(trace.rows() - 1));
    if (!trace.events.empty() && trace.events.back().grid_row == trace.rows() - 1) {
        rep.final_norm = norm2(trace.events.back().eps_post);
    }

    if (w_inf > 0.0 && std::isfinite(design.alpha) && design.alpha > 0.0) {
        rep.radius = iss_ball_radius(design.alpha, w_inf);
        rep.sup_excess = -std::numeric_limits<double>::infinity();
        bool inside_since_entry = true;
        auto visit = [&](double t, double norm) {
            rep.sup_excess = std::max(rep.sup_excess, norm - rep.radius);
            const bool inside = norm <= rep.radius;
            if (!inside) rep.last_exit_time = t;
            if (!rep.entered) {
                if (inside) {
                    rep.entered = true;
                    rep.first_entry_time = t;
                }
            } else if (!inside) {
                inside_since_entry = false;
            }
        };
        for (std::size_t r = 0; r < trace.rows(); ++r) {
            visit(trace.t[r], norm2(trace.eps_row(r)));
            if (trace.event_index[r] >= 0) {
                visit(trace.t[r], norm2(trace.events[static_cast<std::size_t>(trace.event_index[r])].eps_post));
            }
        }
        rep.stayed_inside = rep.entered && inside_since_entry;
    }

    if (w_inf == 0.0) {
        // ln S(t_k) = c - rate * t_k by least squares, ignoring round-off floor values.
        double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
        std::size_t k = 0;
        for (const auto& e : trace.events) {
            const double s = squared_norm(e.eps_pre);
            if (!(s > 1e-28)) continue;
            const double y = std::log(s);
            st += e.t;
            sy += y;
            stt += e.t * e.t;
            sty += e.t * y;
            ++k;
        }
        rep.rate_points = k;
        if (k >= 3) {
            const double denom = static_cast<double>(k) * stt - st * st;
            if (denom > 0.0) rep.fitted_rate = -(static_cast<double>(k) * sty - st * sy) / denom;
        }
        if (std::isfinite(design.kappa)) rep.rate_target = 0.9 * design.kappa;
        rep.rate_ok = std::isfinite(rep.fitted_rate) && std::isfinite(rep.rate_target) &&
                      rep.fitted_rate >= rep.rate_target;
    }
    return rep;
}

void write_trace_csv(std::ostream& os, const SimTrace& tr, const SigmaTrace* sigma, const CsvMeta& meta) {
    put_meta(os, meta);
    os << 't';
    for (std::size_t i = 1; i <= tr.n; ++i) os << ",x_" << i;
    for (std::size_t i = 1; i <= tr.n; ++i) os << ",zhat_" << i;
    for (std::size_t i = 1; i <= tr.n; ++i) os << ",eps_" << i;
    os << ",S_o,S_n,S,sigma_o,is_event";
    for (std::size_t i = 1; i <= tr.m; ++i) os << ",w_" << i;
    os << '\n';
    for (std::size_t r = 0; r < tr.rows(); ++r) {
        put_number(os, tr.t[r]);
        for (double v : tr.x_row(r)) os << ',', put_number(os, v);
        for (double v : tr.zhat_row(r)) os << ',', put_number(os, v);
        for (double v : tr.eps_row(r)) os << ',', put_number(os, v);
        const double sig = sigma ? sigma->sigma[r] : SigmaTrace::nan;
        const double storage = std::isnan(sig) ? tr.s_o[r] + tr.s_n[r] : sig + tr.s_n[r];
        os << ',';
        put_number(os, tr.s_o[r]);
        os << ',';
        put_number(os, tr.s_n[r]);
        os << ',';
        put_number(os, storage);
        os << ',';
        put_number(os, sig);
        const int ev = tr.event_index[r];
        os << ',' << (ev >= 0 ? 1 : 0);
        for (std::size_t i = 0; i < tr.m; ++i) {
            os << ',';
            if (ev >= 0) put_number(os, tr.events[static_cast<std::size_t>(ev)].w[i]);
        }
        os << '\n';
    }
}

void write_events_csv(std::ostream& os, const SimTrace& tr, const SigmaTrace* sigma, const CsvMeta& meta) {
    put_meta(os, meta);
    os << "k,t";
    for (std::size_t i = 1; i <= tr.n; ++i) os << ",eps_pre_" << i;
    for (std::size_t i = 1; i <= tr.n; ++i) os << ",eps_post_" << i;
    for (std::size_t i = 1; i <= tr.m; ++i) os << ",w_" << i;
    os << ",S_o_pre,S_o_post,sigma_o_pre,sigma_o_post\n";
    for (std::size_t e = 0; e < tr.events.size(); ++e) {
        const auto& ev = tr.events[e];
        os << ev.k << ',';
        put_number(os, ev.t);
        for (double v : ev.eps_pre) os << ',', put_number(os, v);
        for (double v : ev.eps_post) os << ',', put_number(os, v);
        for (double v : ev.w) os << ',', put_number(os, v);
        os << ',';
        put_number(os, ev.s_o_pre);
        os << ',';
        put_number(os, ev.s_o_post);
        os << ',';
        if (sigma) put_number(os, sigma->sigma[ev.grid_row]);
        os << ',';
        if (sigma && e < sigma->sigma_post.size()) put_number(os, sigma->sigma_post[e]);
        os << '\n';
    }
}

}  // namespace impobs
