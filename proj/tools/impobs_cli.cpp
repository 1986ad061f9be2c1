// Command-line front end. Talks to the library only through the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "impobs/impobs.h"

namespace {

int exit_code(impobs_status s) {
    switch (s) {
    case IMPOBS_OK:
        return 0;
    case IMPOBS_CHECK_FAILED:
    case IMPOBS_NUMERIC_ERROR:
        return 1;
    default:
        return 2;
    }
}

int report_error(impobs_status s) {
    std::fprintf(stderr, "error: %s\n", impobs_last_error());
    return exit_code(s);
}

int finish(impobs_status s, impobs_report* rep) {
    if (!rep) return report_error(s);
    std::fputs(impobs_report_text(rep), stdout);
    const int code = exit_code(impobs_report_status(rep));
    impobs_report_free(rep);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Impulsive observer design and verification"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(impobs_version()));

    std::string config_path;
    std::string out_dir;
    std::string sigma_variant;
    std::size_t seeds = 1;
    std::string figure;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Run configuration file")->required();
        sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    };
    auto* certify = app.add_subcommand("certify", "Check the dissipativity certificates");
    add_common(certify);
    auto* design = app.add_subcommand("design", "Compute the sampling window and design constants");
    add_common(design);
    auto* simulate = app.add_subcommand("simulate", "Simulate the impulsive observer and verify the claims");
    add_common(simulate);
    simulate->add_option("--seeds", seeds, "Number of seeds in the batch")->check(CLI::PositiveNumber);
    simulate->add_option("--sigma-variant", sigma_variant, "Coupling factor of the majorant flow")
        ->check(CLI::IsMember({"eq15", "factor2"}));
    auto* reproduce = app.add_subcommand("reproduce", "Emit the data of a benchmark figure (fig3..fig6)");
    reproduce->add_option("figure", figure, "Figure id")->required();
    reproduce->add_option("--out", out_dir, "Output directory (default: out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    impobs_report* rep = nullptr;
    if (*reproduce) {
        const impobs_status s = impobs_reproduce(figure.c_str(), out_dir.empty() ? nullptr : out_dir.c_str(), &rep);
        return finish(s, rep);
    }

    impobs_config* cfg = nullptr;
    impobs_status s = impobs_config_load(config_path.c_str(), &cfg);
    if (s != IMPOBS_OK) return report_error(s);
    if (!out_dir.empty()) impobs_config_set_output_dir(cfg, out_dir.c_str());
    if (!sigma_variant.empty()) {
        impobs_config_set_sigma_variant(cfg, sigma_variant == "eq15" ? IMPOBS_SIGMA_EQ15 : IMPOBS_SIGMA_FACTOR2);
    }

    if (*certify) s = impobs_certify(cfg, &rep);
    else if (*design) s = impobs_design_report(cfg, &rep);
    else s = impobs_simulate(cfg, seeds, &rep);
    impobs_config_free(cfg);
    return finish(s, rep);
}
