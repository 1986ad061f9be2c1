#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "impobs/matrix.hpp"
#include "impobs/plant.hpp"

namespace impobs {

// Benchmark system
//   x1' = mu(x1, x2),  x2' = b x1 + c x2,
//   mu(x1, x2) = x1 x2 (x2 + a)(x2 - a) / (1 + x2^4),
// measured through y = x1. Detectable for c < 0.
struct ExampleParams {
    double a = 2.0;
    double b = 3.0;
    double c = -1.0;

    void validate() const;  // c < 0, all finite
};

double example_mu(const ExampleParams& p, double x1, double x2);

// sup_s |s (s^2 - a^2)| / (1 + s^4), so |mu(x1, x2)| <= |x1| * bound.
// Dense 1-D grid refined by golden-section search around the best node.
double mu_x2_gain_bound(double a);

// Split A = [[0, 0], [b, c]], psi = [mu, 0], C = [1, 0]. The declared
// Lipschitz bound is mu_x2_gain_bound(a).
Plant example_plant(const ExampleParams& p);

// x1 = -(c/b) x2 with x2 in {-a, 0, a}, ordered by x2.
std::array<Vector, 3> equilibria(const ExampleParams& p);

struct PhaseBox {
    double x1_lo = -3.0, x1_hi = 3.0;
    double x2_lo = -3.0, x2_hi = 3.0;
};

struct PhaseSample {
    double x1, x2, dx1, dx2;
};

// Vector field sampled on a resolution x resolution grid (box corners included).
std::vector<PhaseSample> phase_portrait_grid(const ExampleParams& p, const PhaseBox& box, std::size_t resolution);
void write_phase_csv(std::ostream& os, const std::vector<PhaseSample>& grid);

// Text of a bundled scenario config: example_open_loop, example_noisy,
// example_noiseless or synthetic_coupled. Throws ConfigError for other names.
const char* corpus_config_text(const std::string& name);
std::vector<std::string> corpus_config_names();

}  // namespace impobs
