#include "impobs/impobs.h"

#include <cmath>
#include <string>
#include <vector>

#include "impobs/commands.hpp"
#include "impobs/config.hpp"
#include "impobs/errors.hpp"
#include "impobs/example.hpp"
#include "impobs/timing.hpp"

struct impobs_config {
    impobs::RunConfig cfg;
    impobs::CommandOptions opt;
};

struct impobs_design {
    impobs::ObserverDesign design;
    std::string text;
    std::vector<std::string> diagnostics;
};

struct impobs_report {
    impobs_status status = IMPOBS_OK;
    std::string text;
    std::vector<std::string> files;
};

namespace {

thread_local std::string g_last_error;

impobs_status fail(impobs_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

impobs_status map_error(const impobs::Error& e) {
    using impobs::ErrorKind;
    switch (e.kind()) {
    case ErrorKind::Config:
        return fail(IMPOBS_CONFIG_ERROR, e.what());
    case ErrorKind::Io:
        return fail(IMPOBS_IO_ERROR, e.what());
    case ErrorKind::Dimension:
        return fail(IMPOBS_INVALID_ARGUMENT, e.what());
    default:
        return fail(IMPOBS_NUMERIC_ERROR, e.what());
    }
}

// Runs f, translating exceptions into status codes.
template <class F>
impobs_status guarded(F&& f) {
    try {
        return f();
    } catch (const impobs::Error& e) {
        return map_error(e);
    } catch (const std::bad_alloc&) {
        return fail(IMPOBS_NUMERIC_ERROR, "out of memory");
    } catch (const std::exception& e) {
        return fail(IMPOBS_NUMERIC_ERROR, e.what());
    }
}

impobs_status to_report(const impobs::CommandResult& r, impobs_report** out) {
    auto* rep = new impobs_report;
    rep->status = r.exit_code == impobs::kExitOk ? IMPOBS_OK : IMPOBS_CHECK_FAILED;
    rep->text = r.text;
    rep->files = r.files;
    *out = rep;
    return rep->status;
}

}  // namespace

extern "C" {

IMPOBS_API const char* impobs_last_error(void) { return g_last_error.c_str(); }

IMPOBS_API const char* impobs_version(void) { return "0.3.0"; }

IMPOBS_API impobs_status impobs_config_load(const char* path, impobs_config** out) {
    if (!path || !out) return fail(IMPOBS_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = new impobs_config{impobs::load_config(path), {}};
        return IMPOBS_OK;
    });
}

IMPOBS_API impobs_status impobs_config_from_string(const char* text, impobs_config** out) {
    if (!text || !out) return fail(IMPOBS_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = new impobs_config{impobs::parse_config(text), {}};
        return IMPOBS_OK;
    });
}

IMPOBS_API impobs_status impobs_config_from_corpus(const char* name, impobs_config** out) {
    if (!name || !out) return fail(IMPOBS_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = new impobs_config{impobs::parse_config(impobs::corpus_config_text(name)), {}};
        return IMPOBS_OK;
    });
}

IMPOBS_API impobs_status impobs_config_set_sigma_variant(impobs_config* cfg, impobs_sigma_variant variant) {
    if (!cfg) return fail(IMPOBS_INVALID_ARGUMENT, "null config");
    if (variant == IMPOBS_SIGMA_FACTOR2) cfg->opt.sigma_variant = impobs::SigmaVariant::factor2;
    else if (variant == IMPOBS_SIGMA_EQ15) cfg->opt.sigma_variant = impobs::SigmaVariant::eq15;
    else return fail(IMPOBS_INVALID_ARGUMENT, "unknown sigma variant");
    return IMPOBS_OK;
}

IMPOBS_API impobs_status impobs_config_set_output_dir(impobs_config* cfg, const char* dir) {
    if (!cfg || !dir) return fail(IMPOBS_INVALID_ARGUMENT, "null argument");
    cfg->opt.out_dir = std::string(dir);
    return IMPOBS_OK;
}

IMPOBS_API impobs_status impobs_config_set_write_files(impobs_config* cfg, int enabled) {
    if (!cfg) return fail(IMPOBS_INVALID_ARGUMENT, "null config");
    cfg->opt.write_files = enabled != 0;
    return IMPOBS_OK;
}

IMPOBS_API void impobs_config_free(impobs_config* cfg) { delete cfg; }

IMPOBS_API impobs_status impobs_design_run(const impobs_config* cfg, impobs_design** out) {
    if (!cfg || !out) return fail(IMPOBS_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        impobs::validate_config(cfg->cfg);
        const auto pp = impobs::partition(impobs::build_plant(cfg->cfg));
        auto* d = new impobs_design;
        d->design = impobs::design_pipeline(pp, impobs::design_inputs(cfg->cfg, pp.m(), pp.n()));
        d->text = impobs::serialize_design(d->design);
        for (const auto& g : d->design.diagnostics) d->diagnostics.push_back(g.stage + ": " + g.message);
        *out = d;
        return IMPOBS_OK;
    });
}

IMPOBS_API int impobs_design_feasible(const impobs_design* d) { return d && d->design.feasible ? 1 : 0; }

IMPOBS_API impobs_status impobs_design_get(const impobs_design* d, const char* name, double* value) {
    if (!d || !name || !value) return fail(IMPOBS_INVALID_ARGUMENT, "null argument");
    const auto& x = d->design;
    const std::string n(name);
    if (n == "gamma") *value = x.gamma;
    else if (n == "beta") *value = x.beta;
    else if (n == "varpi_o") *value = x.varpi_o;
    else if (n == "kappa_n") *value = x.kappa_n;
    else if (n == "kappa_o") *value = x.kappa_o;
    else if (n == "kappa") *value = x.kappa;
    else if (n == "lambda_on") *value = x.lambda_on;
    else if (n == "lambda_no") *value = x.lambda_no;
    else if (n == "t_max_noiseless") *value = x.t_max_noiseless;
    else if (n == "t_min") *value = x.t_min;
    else if (n == "t_max") *value = x.t_max;
    else if (n == "alpha") *value = x.alpha;
    else return fail(IMPOBS_INVALID_ARGUMENT, "unknown design quantity '" + n + "'");
    return IMPOBS_OK;
}

IMPOBS_API size_t impobs_design_diagnostic_count(const impobs_design* d) { return d ? d->diagnostics.size() : 0; }

IMPOBS_API const char* impobs_design_diagnostic(const impobs_design* d, size_t index) {
    if (!d || index >= d->diagnostics.size()) return nullptr;
    return d->diagnostics[index].c_str();
}

IMPOBS_API const char* impobs_design_text(const impobs_design* d) { return d ? d->text.c_str() : nullptr; }

IMPOBS_API void impobs_design_free(impobs_design* d) { delete d; }

IMPOBS_API impobs_status impobs_certify(const impobs_config* cfg, impobs_report** out) {
    if (!cfg || !out) return fail(IMPOBS_INVALID_ARGUMENT, "null argument");
    return guarded([&] { return to_report(impobs::cmd_certify(cfg->cfg, cfg->opt), out); });
}

IMPOBS_API impobs_status impobs_design_report(const impobs_config* cfg, impobs_report** out) {
    if (!cfg || !out) return fail(IMPOBS_INVALID_ARGUMENT, "null argument");
    return guarded([&] { return to_report(impobs::cmd_design(cfg->cfg, cfg->opt), out); });
}

IMPOBS_API impobs_status impobs_simulate(const impobs_config* cfg, size_t seeds, impobs_report** out) {
    if (!cfg || !out) return fail(IMPOBS_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        impobs::CommandOptions opt = cfg->opt;
        opt.seeds = seeds == 0 ? 1 : seeds;
        return to_report(impobs::cmd_simulate(cfg->cfg, opt), out);
    });
}

IMPOBS_API impobs_status impobs_reproduce(const char* figure, const char* out_dir, impobs_report** out) {
    if (!figure || !out) return fail(IMPOBS_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        impobs::CommandOptions opt;
        opt.out_dir = std::string(out_dir ? out_dir : "out");
        return to_report(impobs::cmd_reproduce(figure, opt), out);
    });
}

IMPOBS_API impobs_status impobs_report_status(const impobs_report* r) {
    return r ? r->status : IMPOBS_INVALID_ARGUMENT;
}

IMPOBS_API const char* impobs_report_text(const impobs_report* r) { return r ? r->text.c_str() : nullptr; }

IMPOBS_API size_t impobs_report_file_count(const impobs_report* r) { return r ? r->files.size() : 0; }

IMPOBS_API const char* impobs_report_file(const impobs_report* r, size_t index) {
    if (!r || index >= r->files.size()) return nullptr;
    return r->files[index].c_str();
}

IMPOBS_API void impobs_report_free(impobs_report* r) { delete r; }

IMPOBS_API impobs_status impobs_t_window(double gamma, double varpi_o, double kappa, double lambda_no,
                                         double lambda_on, double beta, double alpha, double* t_min,
                                         double* t_max) {
    if (!t_min || !t_max) return fail(IMPOBS_INVALID_ARGUMENT, "null argument");
    try {
        const auto w = impobs::t_window(gamma, varpi_o, kappa, lambda_no, lambda_on, beta, alpha);
        *t_min = w.t_min;
        *t_max = w.t_max;
        return IMPOBS_OK;
    } catch (const impobs::InfeasibleWindowError& e) {
        *t_min = e.t_min();
        *t_max = e.t_max();
        return fail(IMPOBS_CHECK_FAILED, e.what());
    } catch (const impobs::Error& e) {
        return fail(IMPOBS_INVALID_ARGUMENT, e.what());
    }
}

IMPOBS_API impobs_status impobs_iss_ball_radius(double alpha, double w_inf, double* radius) {
    if (!radius) return fail(IMPOBS_INVALID_ARGUMENT, "null argument");
    try {
        *radius = impobs::iss_ball_radius(alpha, w_inf);
        return IMPOBS_OK;
    } catch (const impobs::Error& e) {
        return fail(IMPOBS_INVALID_ARGUMENT, e.what());
    }
}

}  // extern "C"
