#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "impobs/impobs.h"

namespace fs = std::filesystem;

TEST_CASE("version and error string") {
    CHECK(std::string(impobs_version()) == "0.3.0");
    CHECK(impobs_last_error() != nullptr);
}

TEST_CASE("config handles") {
    impobs_config* cfg = nullptr;
    CHECK(impobs_config_from_corpus("synthetic_coupled", &cfg) == IMPOBS_OK);
    REQUIRE(cfg != nullptr);
    CHECK(impobs_config_set_sigma_variant(cfg, IMPOBS_SIGMA_EQ15) == IMPOBS_OK);
    CHECK(impobs_config_set_sigma_variant(cfg, static_cast<impobs_sigma_variant>(7)) == IMPOBS_INVALID_ARGUMENT);
    CHECK(impobs_config_set_write_files(cfg, 0) == IMPOBS_OK);
    CHECK(impobs_config_set_output_dir(cfg, nullptr) == IMPOBS_INVALID_ARGUMENT);
    impobs_config_free(cfg);
    impobs_config_free(nullptr);

    impobs_config* bad = nullptr;
    CHECK(impobs_config_from_corpus("nope", &bad) == IMPOBS_CONFIG_ERROR);
    CHECK(bad == nullptr);
    CHECK(std::string(impobs_last_error()).find("nope") != std::string::npos);
    CHECK(impobs_config_from_string("name = x\nwhat = 1\n", &bad) == IMPOBS_CONFIG_ERROR);
    CHECK(std::string(impobs_last_error()).find("what") != std::string::npos);
    CHECK(impobs_config_load("/nonexistent/x.cfg", &bad) == IMPOBS_CONFIG_ERROR);
    CHECK(impobs_config_from_string(nullptr, &bad) == IMPOBS_INVALID_ARGUMENT);
    CHECK(impobs_config_from_string("name = x\n", nullptr) == IMPOBS_INVALID_ARGUMENT);
}

TEST_CASE("design through the C API") {
    impobs_config* cfg = nullptr;
    REQUIRE(impobs_config_from_corpus("example_noisy", &cfg) == IMPOBS_OK);
    impobs_design* d = nullptr;
    REQUIRE(impobs_design_run(cfg, &d) == IMPOBS_OK);
    CHECK(impobs_design_feasible(d) == 0);
    double v = 0.0;
    CHECK(impobs_design_get(d, "kappa_n", &v) == IMPOBS_OK);
    CHECK(v == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(impobs_design_get(d, "lambda_no", &v) == IMPOBS_OK);
    CHECK(v == doctest::Approx(3.0));
    CHECK(impobs_design_get(d, "t_min", &v) == IMPOBS_OK);
    CHECK(v == doctest::Approx(0.63004).epsilon(1e-4));
    CHECK(impobs_design_get(d, "no_such_value", &v) == IMPOBS_INVALID_ARGUMENT);
    REQUIRE(impobs_design_diagnostic_count(d) >= 1);
    bool saw_window = false;
    for (size_t i = 0; i < impobs_design_diagnostic_count(d); ++i)
        saw_window |= std::string(impobs_design_diagnostic(d, i)).find("Theorem 2") != std::string::npos;
    CHECK(saw_window);
    CHECK(impobs_design_diagnostic(d, 999) == nullptr);
    CHECK(std::string(impobs_design_text(d)).find("result.feasible = false") != std::string::npos);
    impobs_design_free(d);
    impobs_config_free(cfg);

    REQUIRE(impobs_config_from_corpus("synthetic_coupled", &cfg) == IMPOBS_OK);
    REQUIRE(impobs_design_run(cfg, &d) == IMPOBS_OK);
    CHECK(impobs_design_feasible(d) == 1);
    impobs_design_free(d);
    impobs_config_free(cfg);
}

TEST_CASE("commands through the C API") {
    impobs_config* cfg = nullptr;
    REQUIRE(impobs_config_from_corpus("synthetic_coupled", &cfg) == IMPOBS_OK);
    impobs_config_set_write_files(cfg, 0);
    impobs_report* r = nullptr;
    CHECK(impobs_certify(cfg, &r) == IMPOBS_OK);
    CHECK(impobs_report_status(r) == IMPOBS_OK);
    CHECK(std::strlen(impobs_report_text(r)) > 0);
    impobs_report_free(r);

    CHECK(impobs_simulate(cfg, 2, &r) == IMPOBS_OK);
    CHECK(impobs_report_status(r) == IMPOBS_OK);
    CHECK(impobs_report_file_count(r) == 0);
    impobs_report_free(r);
    impobs_config_free(cfg);

    REQUIRE(impobs_config_from_corpus("example_noisy", &cfg) == IMPOBS_OK);
    impobs_config_set_write_files(cfg, 0);
    CHECK(impobs_design_report(cfg, &r) == IMPOBS_CHECK_FAILED);
    CHECK(impobs_report_status(r) == IMPOBS_CHECK_FAILED);
    impobs_report_free(r);
    impobs_config_free(cfg);

    const fs::path dir = fs::temp_directory_path() / "impobs_capi_fig3";
    fs::remove_all(dir);
    CHECK(impobs_reproduce("fig3", dir.c_str(), &r) == IMPOBS_OK);
    REQUIRE(impobs_report_file_count(r) == 1);
    CHECK(fs::exists(impobs_report_file(r, 0)));
    impobs_report_free(r);
    CHECK(impobs_reproduce("fig9", dir.c_str(), &r) == IMPOBS_CONFIG_ERROR);
    CHECK(impobs_certify(nullptr, &r) == IMPOBS_INVALID_ARGUMENT);
}

TEST_CASE("scalar helpers") {
    double tmin = 0.0, tmax = 0.0;
    CHECK(impobs_t_window(0.8, 2.95315 - 0.49228, 0.49228, 0.0, 0.0, 25.0, 3.0, &tmin, &tmax) == IMPOBS_OK);
    CHECK(tmin == doctest::Approx(0.63).epsilon(1e-2));
    CHECK(tmax == doctest::Approx(1.09).epsilon(1e-3));
    CHECK(impobs_t_window(0.8, 4.929181, 0.49228, 3.0, 0.0, 25.0, 3.0, &tmin, &tmax) == IMPOBS_CHECK_FAILED);
    CHECK(tmin > tmax);
    CHECK(impobs_t_window(1.5, 1.0, 1.0, 0.0, 0.0, 25.0, 3.0, &tmin, &tmax) == IMPOBS_INVALID_ARGUMENT);
    double radius = 0.0;
    CHECK(impobs_iss_ball_radius(3.0, 0.1, &radius) == IMPOBS_OK);
    CHECK(radius == doctest::Approx(std::sqrt(0.3)));
    CHECK(impobs_iss_ball_radius(3.0, 0.1, nullptr) == IMPOBS_INVALID_ARGUMENT);
}
