#include "impobs/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "impobs/errors.hpp"
#include "impobs/example.hpp"

namespace impobs {

namespace {

namespace fs = std::filesystem;

std::string num(double v, int precision = 8) {
    if (std::isnan(v)) return "n/a";
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void row(std::ostream& os, const std::string& label, const std::string& value) {
    os << "  " << std::left << std::setw(34) << label << value << '\n';
}

fs::path prepare_dir(const std::string& dir) {
    fs::path p(dir.empty() ? "." : dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec || !fs::is_directory(p)) throw ConfigError("cannot create output directory '" + p.string() + "'", 0, "output.dir");
    return p;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + p.string() + "'");
    return out;
}

SampleBox default_box(const RunConfig& cfg, std::size_t n) {
    auto pick = [n](const Vector& v, double fill) { return v.empty() ? Vector(n, fill) : v; };
    return {pick(cfg.falsify.z_lo, -3.0), pick(cfg.falsify.z_hi, 3.0), pick(cfg.falsify.eps_lo, -3.0),
            pick(cfg.falsify.eps_hi, 3.0)};
}

struct Prepared {
    PartitionedPlant pp;
    DesignInputs inputs;
};

Prepared prepare(const RunConfig& cfg) {
    validate_config(cfg);
    PartitionedPlant pp = partition(build_plant(cfg));
    DesignInputs in = design_inputs(cfg, pp.m(), pp.n());
    return {std::move(pp), std::move(in)};
}

Schedule schedule_for(const RunConfig& cfg, const ObserverDesign& d, std::uint64_t seed) {
    switch (cfg.schedule.mode) {
    case ScheduleMode::none:
        return Schedule{{}, 0.0, 0.0, seed};
    case ScheduleMode::times:
        return explicit_schedule(cfg.schedule.times);
    case ScheduleMode::window:
        return make_schedule(cfg.schedule.t_min, cfg.schedule.t_max, cfg.sim.horizon, seed);
    case ScheduleMode::design:
        if (!(std::isfinite(d.t_min) && std::isfinite(d.t_max) && d.t_min < d.t_max)) {
            throw Error(ErrorKind::InfeasibleWindow,
                        "schedule.mode = design but the design has no admissible sampling window");
        }
        return make_schedule(d.t_min, d.t_max, cfg.sim.horizon, seed);
    }
    return {};
}

CsvMeta meta_for(const RunConfig& cfg, const ObserverDesign& d, std::uint64_t sseed, std::uint64_t nseed,
                 SigmaVariant variant) {
    CsvMeta m;
    m.entries = {
        {"config", cfg.name},
        {"schedule_seed", std::to_string(sseed)},
        {"noise_seed", std::to_string(nseed)},
        {"noise_bound", shortest(cfg.noise.bound)},
        {"L", format_matrix(d.l_gain)},
        {"horizon", shortest(cfg.sim.horizon)},
        {"rel_tol", shortest(cfg.sim.options.rel_tol)},
        {"abs_tol", shortest(cfg.sim.options.abs_tol)},
        {"grid_per_unit", shortest(cfg.sim.options.grid_per_unit)},
        {"sigma_variant", to_string(variant)},
    };
    if (cfg.schedule.mode == ScheduleMode::window) {
        m.entries.emplace_back("window", "(" + shortest(cfg.schedule.t_min) + ", " + shortest(cfg.schedule.t_max) + ")");
    }
    return m;
}

RunSummary run_one(const RunConfig& cfg, const PartitionedPlant& pp, const ObserverDesign& d, std::size_t index,
                   SigmaVariant variant, const fs::path* trace_dir, std::vector<std::string>* files) {
    RunSummary s;
    s.index = index;
    s.schedule_seed = cfg.schedule.seed + index;
    s.noise_seed = cfg.noise.seed + index;
    try {
        const Schedule sched = schedule_for(cfg, d, s.schedule_seed);
        const double bound = cfg.noise.distribution == NoiseDistribution::zero ? 0.0 : cfg.noise.bound;
        const NoiseStream noise = make_noise(bound, sched.times.size(), pp.m(), s.noise_seed);
        const Vector z0 = pp.to_z(cfg.sim.x0);
        const Vector zhat0 = pp.to_z(cfg.sim.zhat0.empty() ? Vector(pp.n(), 0.0) : cfg.sim.zhat0);
        const SimTrace tr = simulate(pp, d, sched, noise, z0, zhat0, cfg.sim.horizon, cfg.sim.options);
        s.jumps = tr.events.size();

        std::optional<SigmaTrace> sigma;
        if (!tr.events.empty() && std::isfinite(d.kappa_o) && std::isfinite(d.lambda_on)) {
            sigma = sigma_o_majorant(tr, d, variant);
            s.sigma_violation = sigma->max_violation;
        }
        s.iss = verify_iss(tr, d, bound);

        const std::size_t last = tr.rows() - 1;
        const Vector x = pp.to_x(tr.z_row(last));
        const Vector xhat = pp.to_x(tr.zhat_row(last));
        double d2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - xhat[i]) * (x[i] - xhat[i]);
        s.final_distance = std::sqrt(d2);

        auto fail = [&s](const std::string& why) {
            if (s.passed) s.failure = why;
            s.passed = false;
        };
        if (cfg.checks.iss && !s.iss.iss_ok()) fail(s.iss.entered ? "left the ISS ball" : "never entered the ISS ball");
        if (cfg.checks.rate && !s.iss.rate_ok) fail("decay rate below 0.9 kappa");
        if (cfg.checks.majorant && !(sigma && sigma->holds())) fail("majorant violated");
        if (cfg.checks.divergence && !(s.final_distance > cfg.checks.divergence_distance)) {
            fail("plant and observer did not separate");
        }
        if (cfg.checks.final_error > 0.0 && !(s.iss.final_norm < cfg.checks.final_error)) fail("final error too large");

        if (trace_dir) {
            const CsvMeta meta = meta_for(cfg, d, s.schedule_seed, s.noise_seed, variant);
            const fs::path trace = *trace_dir / (cfg.output_prefix + ".csv");
            const fs::path events = *trace_dir / (cfg.output_prefix + "_events.csv");
            auto out = open_out(trace);
            write_trace_csv(out, tr, sigma ? &*sigma : nullptr, meta);
            auto eout = open_out(events);
            write_events_csv(eout, tr, sigma ? &*sigma : nullptr, meta);
            if (files) {
                files->push_back(trace.string());
                files->push_back(events.string());
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        s.passed = false;
        s.failure = e.what();
    }
    return s;
}

ObserverDesign design_for_sim(const RunConfig& cfg, const PartitionedPlant& pp) {
    if (cfg.cert_o.present) return design_pipeline(pp, design_inputs(cfg, pp.m(), pp.n()));
    ObserverDesign d;
    d.l_gain = cfg.l_gain;
    d.alpha = cfg.alpha;
    return d;
}

}  // namespace

BatchResult run_batch(const RunConfig& cfg, std::size_t seeds, SigmaVariant variant, const std::string& trace_dir,
                      std::vector<std::string>* files) {
    if (seeds == 0) throw ConfigError("need at least one seed", 0, "--seeds");
    validate_config(cfg);
    if (cfg.sim.x0.empty()) throw ConfigError("missing initial plant state", 0, "sim.x0");
    const PartitionedPlant pp = partition(build_plant(cfg));
    BatchResult br;
    br.design = design_for_sim(cfg, pp);
    if (cfg.schedule.mode != ScheduleMode::none) {
        if (br.design.l_gain.rows() != pp.m() || br.design.l_gain.cols() != pp.m()) {
            throw ConfigError("correction gain must be " + std::to_string(pp.m()) + "x" + std::to_string(pp.m()), 0,
                              "design.L");
        }
    }
    br.runs.resize(seeds);

    std::optional<fs::path> dir;
    if (!trace_dir.empty()) dir = prepare_dir(trace_dir);

    // Seed 0 (with its trace files) runs first on the calling thread; the
    // rest are independent and keyed by index.
    br.runs[0] = run_one(cfg, pp, br.design, 0, variant, dir ? &*dir : nullptr, files);
    if (seeds > 1) {
        std::atomic<std::size_t> next{1};
        std::exception_ptr error;
        std::mutex error_mutex;
        const std::size_t workers = std::min<std::size_t>(seeds - 1, std::max(1u, std::thread::hardware_concurrency()));
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < seeds; i = next++) {
                    try {
                        br.runs[i] = run_one(cfg, pp, br.design, i, variant, nullptr, nullptr);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }
    for (const auto& r : br.runs) br.passed += r.passed ? 1 : 0;
    const double need = seeds == 1 ? 1.0 : cfg.checks.min_pass_fraction;
    br.ok = static_cast<double>(br.passed) >= need * static_cast<double>(seeds) - 1e-9;
    return br;
}

CommandResult cmd_certify(const RunConfig& cfg, const CommandOptions&) {
    const Prepared p = prepare(cfg);
    CommandResult res;
    std::ostringstream os;
    bool ok = true;
    os << "certify: " << cfg.name << '\n';
    row(os, "plant", p.pp.plant().description);
    row(os, "n, m", std::to_string(p.pp.n()) + ", " + std::to_string(p.pp.m()));

    os << "unmeasured block (kappa_n)\n";
    try {
        const double kn = certify_kappa_n(p.pp.a_nn(), p.inputs.cert_n);
        row(os, "kappa_n", num(kn, 10));
        row(os, "certificate", p.inputs.cert_n.is_zero_map() ? "zero map (psi_n residual vanishes)" : "QSR");
    } catch (const Error& e) {
        row(os, "kappa_n", "FAILED");
        row(os, "reason", e.what());
        ok = false;
    }

    os << "measured block (varpi_o)\n";
    try {
        const VarpiResult v = compute_varpi_o(p.pp.a_oo(), p.inputs.cert_o);
        row(os, "varpi_o", num(v.varpi_o, 10));
        row(os, "lambda_max(M_o)", num(v.eig_max, 10));
        row(os, "margin", num(kVarpiMargin));
        row(os, "expanding flow (varpi_o > 0)", v.positive ? "yes" : "no");
    } catch (const Error& e) {
        row(os, "varpi_o", "FAILED");
        row(os, "reason", e.what());
        ok = false;
    }

    if (cfg.falsify.samples > 0) {
        os << "sampling falsification (" << cfg.falsify.samples << " samples, seed " << cfg.falsify.seed << ")\n";
        const SampleBox box = default_box(cfg, p.pp.n());
        const auto& co = p.inputs.cert_o;
        const auto cex_o = falsify_qsr(residual_block(p.pp, true), 0, co.q, co.s, co.r, box, cfg.falsify.samples,
                                       cfg.falsify.seed);
        if (cex_o) {
            std::ostringstream w;
            w << "falsified at sample " << cex_o->sample_index << ", z = " << format_matrix(Matrix::row(cex_o->z))
              << ", eps = " << format_matrix(Matrix::row(cex_o->eps)) << ", supply rate " << num(cex_o->omega);
            row(os, "cert.o", w.str());
            ok = false;
        } else {
            row(os, "cert.o", std::string("no counterexample (status ") + to_string(co.status) + ")");
        }
        const auto& cn = p.inputs.cert_n;
        const auto psi_n = residual_block(p.pp, false);
        if (cn.is_zero_map()) {
            // A zero certificate claims the residual itself vanishes.
            std::mt19937_64 rng(cfg.falsify.seed + 1);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            Vector z(p.pp.n()), eps(p.pp.n());
            std::optional<std::size_t> bad;
            for (std::size_t k = 0; k < cfg.falsify.samples && !bad; ++k) {
                for (std::size_t i = 0; i < z.size(); ++i) z[i] = box.z_lo[i] + (box.z_hi[i] - box.z_lo[i]) * unit(rng);
                for (std::size_t i = 0; i < eps.size(); ++i)
                    eps[i] = box.eps_lo[i] + (box.eps_hi[i] - box.eps_lo[i]) * unit(rng);
                for (double v : psi_n(z, eps))
                    if (std::abs(v) > 1e-12) bad = k;
            }
            if (bad) {
                row(os, "cert.n", "falsified: residual is nonzero at sample " + std::to_string(*bad));
                ok = false;
            } else {
                row(os, "cert.n", "residual vanishes on all samples");
            }
        } else {
            const auto cex_n = falsify_qsr(psi_n, p.pp.m(), cn.q, cn.s, cn.r, box, cfg.falsify.samples,
                                           cfg.falsify.seed + 1);
            if (cex_n) {
                row(os, "cert.n", "falsified at sample " + std::to_string(cex_n->sample_index) + ", supply rate " +
                                      num(cex_n->omega));
                ok = false;
            } else {
                row(os, "cert.n", std::string("no counterexample (status ") + to_string(cn.status) + ")");
            }
        }
    }
    os << "verdict: " << (ok ? "PASS" : "FAIL") << '\n';
    res.text = os.str();
    res.exit_code = ok ? kExitOk : kExitCheckFailed;
    return res;
}

CommandResult cmd_design(const RunConfig& cfg, const CommandOptions& opt) {
    const Prepared p = prepare(cfg);
    const ObserverDesign d = design_pipeline(p.pp, p.inputs);
    CommandResult res;
    std::ostringstream os;
    os << "design: " << cfg.name << '\n';
    row(os, "L", format_matrix(d.l_gain));
    row(os, "gamma", num(d.gamma, 10));
    row(os, "beta", num(d.beta, 10));
    row(os, "varpi_o", num(d.varpi_o, 10) + (d.assumption2 ? "" : "  (not expanding)"));
    row(os, "kappa_n", num(d.kappa_n, 10));
    row(os, "kappa_o (at T_max)", num(d.kappa_o, 10));
    row(os, "kappa", num(d.kappa, 10) + (d.kappa_defaulted ? "  (default: half the slack)" : ""));
    row(os, "lambda_on", num(d.lambda_on, 10));
    row(os, "lambda_no", num(d.lambda_no, 10));
    row(os, "T_max noiseless", num(d.t_max_noiseless, 10));
    row(os, "T_min", num(d.t_min, 10));
    row(os, "T_max", num(d.t_max, 10));
    row(os, "alpha", num(d.alpha, 10));
    if (cfg.noise.bound > 0.0 && d.alpha > 0.0) {
        row(os, "ISS ball radius (noise " + num(cfg.noise.bound) + ")", num(iss_ball_radius(d.alpha, cfg.noise.bound), 10));
    }
    row(os, "coupling condition", d.theorem1 ? "holds" : "fails");
    row(os, "feasible", d.feasible ? "yes" : "no");
    for (const auto& g : d.diagnostics) {
        os << "  [" << g.stage << "] " << g.message;
        if (!std::isnan(g.slack)) os << " (slack " << num(g.slack) << ")";
        os << '\n';
    }

    const auto& ref = cfg.reference;
    if (ref.t_min || ref.t_max || ref.kappa || ref.denominator) {
        os << "reference comparison\n";
        if (ref.t_min) row(os, "reference T_min", num(*ref.t_min));
        if (ref.t_max) row(os, "reference T_max", num(*ref.t_max));
        if (std::isfinite(d.gamma) && d.alpha > d.gamma) {
            const double ln_a = -std::log((d.alpha - d.gamma) / d.alpha);
            const double ln_g = -std::log((1.0 - d.gamma) * (1.0 - d.gamma));
            if (ref.t_min) row(os, "kappa implied by reference T_min", num(ln_a / *ref.t_min, 10));
            if (ref.t_max) row(os, "denominator implied by ref T_max", num(ln_g / *ref.t_max, 10));
            if (ref.kappa) row(os, "T_min from reference kappa", num(ln_a / *ref.kappa, 10));
            if (ref.denominator) row(os, "T_max from reference denominator", num(ln_g / *ref.denominator, 10));
        }
        if (std::isfinite(d.varpi_o) && std::isfinite(d.lambda_no) && std::isfinite(d.beta)) {
            const double k = std::isfinite(d.kappa) ? d.kappa : 0.0;
            row(os, "this design's denominator", num(d.varpi_o + k + d.lambda_no + d.beta * d.lambda_on, 10));
        }
    }

    if (opt.write_files) {
        const fs::path dir = prepare_dir(opt.out_dir.value_or(cfg.output_dir));
        const fs::path out = dir / (cfg.output_prefix + "_design.cfg");
        auto f = open_out(out);
        f << "# design for " << cfg.name << '\n' << serialize_design(d);
        res.files.push_back(out.string());
    }
    res.text = os.str();
    res.exit_code = d.feasible ? kExitOk : kExitCheckFailed;
    return res;
}

CommandResult cmd_simulate(const RunConfig& cfg, const CommandOptions& opt) {
    const std::size_t seeds = opt.seeds.value_or(1);
    const SigmaVariant variant = opt.sigma_variant.value_or(cfg.sim.sigma_variant);
    const std::string dir = opt.out_dir.value_or(cfg.output_dir);
    CommandResult res;
    const BatchResult br = run_batch(cfg, seeds, variant, opt.write_files ? dir : std::string(), &res.files);

    std::ostringstream os;
    os << "simulate: " << cfg.name << ", " << seeds << " seed(s), horizon " << num(cfg.sim.horizon)
       << ", sigma variant " << to_string(variant) << '\n';
    row(os, "tolerances (rel, abs)", num(cfg.sim.options.rel_tol) + ", " + num(cfg.sim.options.abs_tol));
    const auto& r0 = br.runs[0];
    row(os, "seed 0 (schedule, noise)", std::to_string(r0.schedule_seed) + ", " + std::to_string(r0.noise_seed));
    row(os, "jumps", std::to_string(r0.jumps));
    row(os, "final |eps|", num(r0.iss.final_norm));
    row(os, "final |x - xhat|", num(r0.final_distance));
    if (!std::isnan(r0.iss.radius)) {
        row(os, "ISS ball radius", num(r0.iss.radius));
        row(os, "entered / first entry", std::string(r0.iss.entered ? "yes" : "no") + " / " + num(r0.iss.first_entry_time));
        row(os, "stayed inside", r0.iss.stayed_inside ? "yes" : "no");
        row(os, "sup(|eps| - radius)", num(r0.iss.sup_excess));
    }
    if (!std::isnan(r0.iss.fitted_rate) || cfg.checks.rate) {
        row(os, "fitted rate / target", num(r0.iss.fitted_rate) + " / " + num(r0.iss.rate_target));
    }
    if (!std::isnan(r0.sigma_violation)) row(os, "max(S_o - sigma_o)", num(r0.sigma_violation));
    if (!r0.passed) row(os, "seed 0 failure", r0.failure);
    os << "passed " << br.passed << " of " << seeds << " seed(s)\n";

    if (seeds > 1 && opt.write_files) {
        const fs::path out = prepare_dir(dir) / (cfg.output_prefix + "_summary.csv");
        auto f = open_out(out);
        f << "# config=" << cfg.name << "\n# sigma_variant=" << to_string(variant) << '\n';
        f << "index,schedule_seed,noise_seed,jumps,entered,first_entry_time,stayed_inside,sup_excess,final_norm,"
             "fitted_rate,sigma_violation,final_distance,passed,failure\n";
        f << std::setprecision(17);
        for (const auto& r : br.runs) {
            f << r.index << ',' << r.schedule_seed << ',' << r.noise_seed << ',' << r.jumps << ','
              << (r.iss.entered ? 1 : 0) << ',' << r.iss.first_entry_time << ',' << (r.iss.stayed_inside ? 1 : 0)
              << ',' << r.iss.sup_excess << ',' << r.iss.final_norm << ',' << r.iss.fitted_rate << ','
              << r.sigma_violation << ',' << r.final_distance << ',' << (r.passed ? 1 : 0) << ',' << r.failure << '\n';
        }
        res.files.push_back(out.string());
    }
    for (const auto& f : res.files) os << "wrote " << f << '\n';
    os << "verdict: " << (br.ok ? "PASS" : "FAIL") << '\n';
    res.text = os.str();
    res.exit_code = br.ok ? kExitOk : kExitCheckFailed;
    return res;
}

CommandResult cmd_reproduce(const std::string& figure, const CommandOptions& opt) {
    if (figure == "fig3") {
        CommandResult res;
        const ExampleParams p;
        const auto grid = phase_portrait_grid(p, PhaseBox{}, 41);
        std::ostringstream os;
        os << "reproduce fig3: phase portrait of the benchmark (a=2, b=3, c=-1)\n";
        for (const auto& e : equilibria(p)) os << "  equilibrium (" << num(e[0]) << ", " << num(e[1]) << ")\n";
        if (opt.write_files) {
            const fs::path out = prepare_dir(opt.out_dir.value_or("out")) / "fig3_phase.csv";
            auto f = open_out(out);
            write_phase_csv(f, grid);
            res.files.push_back(out.string());
            os << "wrote " << out.string() << '\n';
        }
        res.text = os.str();
        return res;
    }
    std::string name;
    if (figure == "fig4") name = "example_open_loop";
    else if (figure == "fig5") name = "example_noisy";
    else if (figure == "fig6") name = "example_noiseless";
    else throw ConfigError("unknown figure id '" + figure + "' (expected fig3, fig4, fig5 or fig6)");
    RunConfig cfg = parse_config(corpus_config_text(name));
    CommandOptions o = opt;
    o.seeds = 1;
    CommandResult res = cmd_simulate(cfg, o);
    res.text = "reproduce " + figure + " (" + name + ")\n" + res.text;
    return res;
}

}  // namespace impobs
