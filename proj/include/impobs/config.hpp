#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "impobs/dissipativity.hpp"
#include "impobs/example.hpp"
#include "impobs/matrix.hpp"
#include "impobs/plant.hpp"
#include "impobs/simulation.hpp"
#include "impobs/timing.hpp"

namespace impobs {

// Flat "key = value" text, one entry per line, '#' starts a comment.
// Matrices use "[1 2; 3 4]" literals. See configs/*.cfg for the key set.

struct PlantSpec {
    bool builtin_example = false;
    ExampleParams example;
    Matrix a;
    Matrix c;
    std::vector<std::string> psi;  // one expression per state, "0" when absent
    std::map<std::string, double> params;
    double lipschitz = 0.0;
};

struct CertSpec {
    bool present = false;
    Matrix q, s, r;
    CertStatus status = CertStatus::assumed;
};

struct FalsifySpec {
    std::size_t samples = 0;  // 0 disables sampling falsification
    std::uint64_t seed = 1;
    Vector z_lo, z_hi, eps_lo, eps_hi;
};

enum class ScheduleMode { design, window, times, none };

struct ScheduleSpec {
    ScheduleMode mode = ScheduleMode::design;
    double t_min = 0.0;
    double t_max = 0.0;
    std::vector<double> times;
    std::uint64_t seed = 1;
};

struct NoiseSpec {
    double bound = 0.0;
    std::uint64_t seed = 1;
    NoiseDistribution distribution = NoiseDistribution::uniform_truncated;  // zero forces noiseless runs
};

struct SimSpec {
    Vector x0;
    Vector zhat0;
    double horizon = 20.0;
    SimOptions options;
    SigmaVariant sigma_variant = SigmaVariant::factor2;
};

struct ChecksSpec {
    bool iss = false;
    bool rate = false;
    bool majorant = false;
    bool divergence = false;
    double min_pass_fraction = 1.0;      // batch runs: share of seeds that must pass
    double divergence_distance = 1.0;    // final |x - xhat| for the open-loop check
    double final_error = 0.0;            // > 0: require |eps(horizon)| below this
};

// Values quoted by the literature for a scenario, echoed by `design` for comparison.
struct ReferenceSpec {
    std::optional<double> t_min, t_max, kappa, denominator;
};

struct RunConfig {
    std::string name = "run";
    PlantSpec plant;
    CertSpec cert_o;
    CertSpec cert_n;
    FalsifySpec falsify;
    Matrix l_gain;
    double alpha = 0.0;
    std::optional<double> kappa;
    ReferenceSpec reference;
    ScheduleSpec schedule;
    NoiseSpec noise;
    SimSpec sim;
    std::string output_dir = ".";
    std::string output_prefix;
    ChecksSpec checks;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Cross-field checks (dimensions, window, initial states). Throws ConfigError.
void validate_config(const RunConfig& cfg);

Plant build_plant(const RunConfig& cfg);
DesignInputs design_inputs(const RunConfig& cfg, std::size_t m, std::size_t n);

// `result.*` keys in the config syntax; parse_design reads them back.
std::string serialize_design(const ObserverDesign& d);
ObserverDesign parse_design(const std::string& text);

}  // namespace impobs
