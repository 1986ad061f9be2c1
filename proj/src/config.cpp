#include "impobs/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "impobs/errors.hpp"
#include "impobs/expression.hpp"

namespace impobs {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

struct Entry {
    int line;
    std::string key;
    std::string value;
};

double to_double(const Entry& e) {
    const char* begin = e.value.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || trim(end).size() != 0) throw ConfigError("expected a number, got '" + e.value + "'", e.line, e.key);
    if (!std::isfinite(v)) throw ConfigError("value must be finite", e.line, e.key);
    return v;
}

double to_positive(const Entry& e) {
    const double v = to_double(e);
    if (!(v > 0.0)) throw ConfigError("value must be positive", e.line, e.key);
    return v;
}

double to_nonneg(const Entry& e) {
    const double v = to_double(e);
    if (!(v >= 0.0)) throw ConfigError("value must be >= 0", e.line, e.key);
    return v;
}

std::uint64_t to_u64(const Entry& e) {
    std::uint64_t v = 0;
    const auto* first = e.value.data();
    const auto* last = first + e.value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ConfigError("expected a non-negative integer, got '" + e.value + "'", e.line, e.key);
    }
    return v;
}

bool to_bool(const Entry& e) {
    if (e.value == "true" || e.value == "on" || e.value == "yes" || e.value == "1") return true;
    if (e.value == "false" || e.value == "off" || e.value == "no" || e.value == "0") return false;
    throw ConfigError("expected true or false, got '" + e.value + "'", e.line, e.key);
}

Matrix to_matrix(const Entry& e) {
    try {
        return parse_matrix(e.value);
    } catch (const Error& err) {
        throw ConfigError(err.what(), e.line, e.key);
    }
}

// A row, a column or a scalar, flattened.
Vector to_vector(const Entry& e) {
    const Matrix m = to_matrix(e);
    if (m.rows() > 1 && m.cols() > 1) throw ConfigError("expected a vector, got a matrix", e.line, e.key);
    return Vector(m.data().begin(), m.data().end());
}

std::string fmt17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

using Handler = std::function<void(RunConfig&, const Entry&)>;

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> table = [] {
        std::map<std::string, Handler> h;
        h["name"] = [](RunConfig& c, const Entry& e) { c.name = e.value; };

        h["plant.builtin"] = [](RunConfig& c, const Entry& e) {
            if (e.value != "example") throw ConfigError("unknown built-in plant '" + e.value + "'", e.line, e.key);
            c.plant.builtin_example = true;
        };
        h["example.a"] = [](RunConfig& c, const Entry& e) { c.plant.example.a = to_double(e); };
        h["example.b"] = [](RunConfig& c, const Entry& e) { c.plant.example.b = to_double(e); };
        h["example.c"] = [](RunConfig& c, const Entry& e) { c.plant.example.c = to_double(e); };
        h["plant.A"] = [](RunConfig& c, const Entry& e) { c.plant.a = to_matrix(e); };
        h["plant.C"] = [](RunConfig& c, const Entry& e) { c.plant.c = to_matrix(e); };
        h["plant.lipschitz"] = [](RunConfig& c, const Entry& e) { c.plant.lipschitz = to_nonneg(e); };

        auto cert = [&h](const std::string& which, CertSpec RunConfig::*field) {
            h["cert." + which + ".Q"] = [field](RunConfig& c, const Entry& e) {
                (c.*field).q = to_matrix(e);
                (c.*field).present = true;
            };
            h["cert." + which + ".S"] = [field](RunConfig& c, const Entry& e) {
                (c.*field).s = to_matrix(e);
                (c.*field).present = true;
            };
            h["cert." + which + ".R"] = [field](RunConfig& c, const Entry& e) {
                (c.*field).r = to_matrix(e);
                (c.*field).present = true;
            };
            h["cert." + which + ".status"] = [field](RunConfig& c, const Entry& e) {
                try {
                    (c.*field).status = parse_status(e.value);
                } catch (const Error& err) {
                    throw ConfigError(err.what(), e.line, e.key);
                }
            };
        };
        cert("o", &RunConfig::cert_o);
        cert("n", &RunConfig::cert_n);

        h["falsify.samples"] = [](RunConfig& c, const Entry& e) { c.falsify.samples = to_u64(e); };
        h["falsify.seed"] = [](RunConfig& c, const Entry& e) { c.falsify.seed = to_u64(e); };
        h["falsify.z_lo"] = [](RunConfig& c, const Entry& e) { c.falsify.z_lo = to_vector(e); };
        h["falsify.z_hi"] = [](RunConfig& c, const Entry& e) { c.falsify.z_hi = to_vector(e); };
        h["falsify.eps_lo"] = [](RunConfig& c, const Entry& e) { c.falsify.eps_lo = to_vector(e); };
        h["falsify.eps_hi"] = [](RunConfig& c, const Entry& e) { c.falsify.eps_hi = to_vector(e); };

        h["design.L"] = [](RunConfig& c, const Entry& e) { c.l_gain = to_matrix(e); };
        h["design.alpha"] = [](RunConfig& c, const Entry& e) { c.alpha = to_positive(e); };
        h["design.kappa"] = [](RunConfig& c, const Entry& e) { c.kappa = to_positive(e); };

        h["reference.t_min"] = [](RunConfig& c, const Entry& e) { c.reference.t_min = to_double(e); };
        h["reference.t_max"] = [](RunConfig& c, const Entry& e) { c.reference.t_max = to_double(e); };
        h["reference.kappa"] = [](RunConfig& c, const Entry& e) { c.reference.kappa = to_double(e); };
        h["reference.denominator"] = [](RunConfig& c, const Entry& e) { c.reference.denominator = to_double(e); };

        h["schedule.mode"] = [](RunConfig& c, const Entry& e) {
            if (e.value == "design") c.schedule.mode = ScheduleMode::design;
            else if (e.value == "window") c.schedule.mode = ScheduleMode::window;
            else if (e.value == "times") c.schedule.mode = ScheduleMode::times;
            else if (e.value == "none") c.schedule.mode = ScheduleMode::none;
            else throw ConfigError("expected design, window, times or none", e.line, e.key);
        };
        h["schedule.t_min"] = [](RunConfig& c, const Entry& e) { c.schedule.t_min = to_nonneg(e); };
        h["schedule.t_max"] = [](RunConfig& c, const Entry& e) { c.schedule.t_max = to_positive(e); };
        h["schedule.times"] = [](RunConfig& c, const Entry& e) { c.schedule.times = to_vector(e); };
        h["schedule.seed"] = [](RunConfig& c, const Entry& e) { c.schedule.seed = to_u64(e); };

        h["noise.bound"] = [](RunConfig& c, const Entry& e) { c.noise.bound = to_nonneg(e); };
        h["noise.seed"] = [](RunConfig& c, const Entry& e) { c.noise.seed = to_u64(e); };
        h["noise.distribution"] = [](RunConfig& c, const Entry& e) {
            try {
                c.noise.distribution = parse_noise_distribution(e.value);
            } catch (const Error& err) {
                throw ConfigError(err.what(), e.line, e.key);
            }
        };

        h["sim.x0"] = [](RunConfig& c, const Entry& e) { c.sim.x0 = to_vector(e); };
        h["sim.zhat0"] = [](RunConfig& c, const Entry& e) { c.sim.zhat0 = to_vector(e); };
        h["sim.horizon"] = [](RunConfig& c, const Entry& e) { c.sim.horizon = to_positive(e); };
        h["sim.rel_tol"] = [](RunConfig& c, const Entry& e) { c.sim.options.rel_tol = to_positive(e); };
        h["sim.abs_tol"] = [](RunConfig& c, const Entry& e) { c.sim.options.abs_tol = to_nonneg(e); };
        h["sim.grid_per_unit"] = [](RunConfig& c, const Entry& e) { c.sim.options.grid_per_unit = to_positive(e); };
        h["sim.sigma_variant"] = [](RunConfig& c, const Entry& e) {
            try {
                c.sim.sigma_variant = parse_sigma_variant(e.value);
            } catch (const Error& err) {
                throw ConfigError(err.what(), e.line, e.key);
            }
        };

        h["output.dir"] = [](RunConfig& c, const Entry& e) { c.output_dir = e.value; };
        h["output.prefix"] = [](RunConfig& c, const Entry& e) { c.output_prefix = e.value; };

        h["checks.iss"] = [](RunConfig& c, const Entry& e) { c.checks.iss = to_bool(e); };
        h["checks.rate"] = [](RunConfig& c, const Entry& e) { c.checks.rate = to_bool(e); };
        h["checks.majorant"] = [](RunConfig& c, const Entry& e) { c.checks.majorant = to_bool(e); };
        h["checks.divergence"] = [](RunConfig& c, const Entry& e) { c.checks.divergence = to_bool(e); };
        h["checks.min_pass_fraction"] = [](RunConfig& c, const Entry& e) {
            const double v = to_double(e);
            if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("value must lie in [0, 1]", e.line, e.key);
            c.checks.min_pass_fraction = v;
        };
        h["checks.divergence_distance"] = [](RunConfig& c, const Entry& e) {
            c.checks.divergence_distance = to_nonneg(e);
        };
        h["checks.final_error"] = [](RunConfig& c, const Entry& e) { c.checks.final_error = to_nonneg(e); };
        return h;
    }();
    return table;
}

std::vector<Entry> split_entries(const std::string& text) {
    std::vector<Entry> out;
    std::set<std::string> seen;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
        Entry e{line, trim(body.substr(0, eq)), trim(body.substr(eq + 1))};
        if (e.key.empty()) throw ConfigError("empty key", line);
        if (!seen.insert(e.key).second) throw ConfigError("duplicate key", line, e.key);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::map<std::size_t, std::string> psi;
    for (const Entry& e : split_entries(text)) {
        if (starts_with(e.key, "plant.psi.")) {
            const std::string idx = e.key.substr(10);
            std::size_t i = 0;
            const auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), i);
            if (ec != std::errc() || ptr != idx.data() + idx.size() || i == 0) {
                throw ConfigError("expected plant.psi.<1-based index>", e.line, e.key);
            }
            if (e.value.empty()) throw ConfigError("empty expression", e.line, e.key);
            psi[i] = e.value;
            continue;
        }
        if (starts_with(e.key, "plant.param.")) {
            const std::string name = e.key.substr(12);
            if (name.empty()) throw ConfigError("missing parameter name", e.line, e.key);
            cfg.plant.params[name] = to_double(e);
            continue;
        }
        const auto it = handlers().find(e.key);
        if (it == handlers().end()) throw ConfigError("unknown key", e.line, e.key);
        it->second(cfg, e);
    }
    if (!psi.empty()) {
        const std::size_t n = psi.rbegin()->first;
        cfg.plant.psi.assign(n, "0");
        for (auto& [i, src] : psi) cfg.plant.psi[i - 1] = src;
    }
    if (cfg.output_prefix.empty()) cfg.output_prefix = cfg.name;
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

Plant build_plant(const RunConfig& cfg) {
    if (cfg.plant.builtin_example) {
        if (!cfg.plant.a.empty() || !cfg.plant.c.empty() || !cfg.plant.psi.empty()) {
            throw ConfigError("plant.builtin excludes plant.A, plant.C and plant.psi.*", 0, "plant.builtin");
        }
        try {
            return example_plant(cfg.plant.example);
        } catch (const Error& e) {
            throw ConfigError(e.what(), 0, "example.c");
        }
    }
    if (cfg.plant.a.empty()) throw ConfigError("missing plant matrix", 0, "plant.A");
    if (cfg.plant.c.empty()) throw ConfigError("missing output matrix", 0, "plant.C");
    const std::size_t n = cfg.plant.a.rows();
    if (cfg.plant.psi.size() > n) {
        throw ConfigError("psi index exceeds the state dimension " + std::to_string(n), 0,
                          "plant.psi." + std::to_string(cfg.plant.psi.size()));
    }
    std::vector<Expression> exprs;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string src = i < cfg.plant.psi.size() ? cfg.plant.psi[i] : "0";
        try {
            exprs.push_back(Expression::parse(src, cfg.plant.params, n));
        } catch (const Error& e) {
            throw ConfigError(e.what(), 0, "plant.psi." + std::to_string(i + 1));
        }
    }
    Plant p;
    p.a = cfg.plant.a;
    p.c = cfg.plant.c;
    p.lipschitz_bound = cfg.plant.lipschitz;
    p.psi = [exprs = std::move(exprs)](std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < exprs.size(); ++i) out[i] = exprs[i].eval(x);
    };
    std::string desc = "x' = A x + psi(x), psi = [";
    for (std::size_t i = 0; i < n; ++i) desc += (i ? "; " : "") + (i < cfg.plant.psi.size() ? cfg.plant.psi[i] : "0");
    p.description = desc + "]";
    try {
        p.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what(), 0, "plant.A");
    }
    return p;
}

DesignInputs design_inputs(const RunConfig& cfg, std::size_t m, std::size_t n) {
    if (!cfg.cert_o.present) throw ConfigError("missing certificate for the measured block", 0, "cert.o.Q");
    DesignInputs in;
    auto make = [](const CertSpec& c, QsrSubject subject, const std::string& key) {
        try {
            return QsrCertificate::make(c.q, c.s, c.r, subject, c.status);
        } catch (const Error& e) {
            throw ConfigError(e.what(), 0, key);
        }
    };
    in.cert_o = make(cfg.cert_o, QsrSubject::static_map_o, "cert.o.Q");
    if (cfg.cert_n.present) {
        in.cert_n = make(cfg.cert_n, QsrSubject::static_map_n, "cert.n.Q");
    } else {
        const std::size_t k = n - m;
        in.cert_n = QsrCertificate::make(Matrix(k, k), Matrix(k, k), Matrix(k, k), QsrSubject::static_map_n,
                                         CertStatus::assumed);
    }
    if (cfg.l_gain.empty()) throw ConfigError("missing correction gain", 0, "design.L");
    if (cfg.l_gain.rows() != m || cfg.l_gain.cols() != m) {
        throw ConfigError("correction gain must be " + std::to_string(m) + "x" + std::to_string(m), 0, "design.L");
    }
    if (!(cfg.alpha > 0.0)) throw ConfigError("missing ISS gain", 0, "design.alpha");
    in.l_gain = cfg.l_gain;
    in.alpha = cfg.alpha;
    in.kappa = cfg.kappa;
    return in;
}

void validate_config(const RunConfig& cfg) {
    const Plant p = build_plant(cfg);
    const std::size_t n = p.n();
    const std::size_t m = p.m();
    if (cfg.cert_o.present) (void)design_inputs(cfg, m, n);
    auto dims = [&](const Vector& v, std::size_t want, const char* key) {
        if (!v.empty() && v.size() != want) {
            throw ConfigError("expected " + std::to_string(want) + " entries, got " + std::to_string(v.size()), 0, key);
        }
    };
    dims(cfg.sim.x0, n, "sim.x0");
    dims(cfg.sim.zhat0, n, "sim.zhat0");
    dims(cfg.falsify.z_lo, n, "falsify.z_lo");
    dims(cfg.falsify.z_hi, n, "falsify.z_hi");
    dims(cfg.falsify.eps_lo, n, "falsify.eps_lo");
    dims(cfg.falsify.eps_hi, n, "falsify.eps_hi");
    if (cfg.schedule.mode == ScheduleMode::window && !(cfg.schedule.t_min < cfg.schedule.t_max)) {
        throw ConfigError("sampling window is empty (need t_min < t_max)", 0, "schedule.t_max");
    }
    if (cfg.schedule.mode == ScheduleMode::times && cfg.schedule.times.empty()) {
        throw ConfigError("explicit schedule needs sampling instants", 0, "schedule.times");
    }
}

std::string serialize_design(const ObserverDesign& d) {
    std::ostringstream os;
    os << "result.L = " << format_matrix(d.l_gain) << '\n';
    const std::pair<const char*, double> scalars[] = {
        {"gamma", d.gamma},        {"beta", d.beta},           {"varpi_o", d.varpi_o},
        {"kappa_n", d.kappa_n},    {"kappa_o", d.kappa_o},     {"kappa", d.kappa},
        {"lambda_on", d.lambda_on}, {"lambda_no", d.lambda_no}, {"t_max_noiseless", d.t_max_noiseless},
        {"t_min", d.t_min},        {"t_max", d.t_max},         {"alpha", d.alpha},
    };
    for (const auto& [k, v] : scalars) os << "result." << k << " = " << fmt17(v) << '\n';
    os << "result.assumption2 = " << (d.assumption2 ? "true" : "false") << '\n';
    os << "result.kappa_defaulted = " << (d.kappa_defaulted ? "true" : "false") << '\n';
    os << "result.theorem1 = " << (d.theorem1 ? "true" : "false") << '\n';
    os << "result.feasible = " << (d.feasible ? "true" : "false") << '\n';
    for (std::size_t i = 0; i < d.diagnostics.size(); ++i) {
        const auto& g = d.diagnostics[i];
        std::string msg = g.message;
        for (char& ch : msg)
            if (ch == '\n' || ch == '#') ch = ' ';
        os << "result.diagnostic." << (i + 1) << " = " << g.stage << " | " << fmt17(g.slack) << " | " << msg << '\n';
    }
    return os.str();
}

ObserverDesign parse_design(const std::string& text) {
    ObserverDesign d;
    std::map<std::size_t, DesignDiagnostic> diags;
    const std::map<std::string, double ObserverDesign::*> scalars = {
        {"gamma", &ObserverDesign::gamma},         {"beta", &ObserverDesign::beta},
        {"varpi_o", &ObserverDesign::varpi_o},     {"kappa_n", &ObserverDesign::kappa_n},
        {"kappa_o", &ObserverDesign::kappa_o},     {"kappa", &ObserverDesign::kappa},
        {"lambda_on", &ObserverDesign::lambda_on}, {"lambda_no", &ObserverDesign::lambda_no},
        {"t_max_noiseless", &ObserverDesign::t_max_noiseless},
        {"t_min", &ObserverDesign::t_min},         {"t_max", &ObserverDesign::t_max},
        {"alpha", &ObserverDesign::alpha},
    };
    const std::map<std::string, bool ObserverDesign::*> flags = {
        {"assumption2", &ObserverDesign::assumption2},
        {"kappa_defaulted", &ObserverDesign::kappa_defaulted},
        {"theorem1", &ObserverDesign::theorem1},
        {"feasible", &ObserverDesign::feasible},
    };
    auto number = [](const Entry& e) {
        if (e.value == "nan") return ObserverDesign::nan;
        if (e.value == "inf") return std::numeric_limits<double>::infinity();
        if (e.value == "-inf") return -std::numeric_limits<double>::infinity();
        return to_double(e);
    };
    for (const Entry& e : split_entries(text)) {
        if (!starts_with(e.key, "result.")) throw ConfigError("unknown key", e.line, e.key);
        const std::string k = e.key.substr(7);
        if (k == "L") {
            d.l_gain = to_matrix(e);
        } else if (auto s = scalars.find(k); s != scalars.end()) {
            d.*(s->second) = number(e);
        } else if (auto f = flags.find(k); f != flags.end()) {
            d.*(f->second) = to_bool(e);
        } else if (starts_with(k, "diagnostic.")) {
            const auto p1 = e.value.find(" | ");
            const auto p2 = p1 == std::string::npos ? p1 : e.value.find(" | ", p1 + 3);
            if (p2 == std::string::npos) throw ConfigError("expected 'stage | slack | message'", e.line, e.key);
            Entry slack{e.line, e.key, e.value.substr(p1 + 3, p2 - p1 - 3)};
            const std::size_t idx = std::stoul(k.substr(11));
            diags[idx] = {e.value.substr(0, p1), e.value.substr(p2 + 3), number(slack)};
        } else {
            throw ConfigError("unknown key", e.line, e.key);
        }
    }
    for (auto& [i, g] : diags) d.diagnostics.push_back(std::move(g));
    return d;
}

}  // namespace impobs
