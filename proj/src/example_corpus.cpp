#include "impobs/example.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "impobs/corpus_configs.hpp"
#include "impobs/errors.hpp"

namespace impobs {

void ExampleParams::validate() const {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
        throw Error(ErrorKind::NonFinite, "example: parameters must be finite");
    }
    if (!(c < 0.0)) throw Error(ErrorKind::Config, "example: c must be negative for detectability");
}

double example_mu(const ExampleParams& p, double x1, double x2) {
    const double x2sq = x2 * x2;
    return x1 * x2 * (x2 + p.a) * (x2 - p.a) / (1.0 + x2sq * x2sq);
}

double mu_x2_gain_bound(double a) {
    auto g = [a](double s) { return std::abs(s * (s * s - a * a)) / (1.0 + s * s * s * s); };
    // g(s) <= (|s|^3 + a^2 |s|)/(1 + s^4) decays like 1/|s| with g even, so a
    // bounded search interval suffices.
    const double hi = 4.0 + 2.0 * std::abs(a) + a * a;
    const int nodes = 200000;
    double best_s = 0.0, best = 0.0;
    for (int i = 0; i <= nodes; ++i) {
        const double s = hi * i / nodes;
        const double v = g(s);
        if (v > best) {
            best = v;
            best_s = s;
        }
    }
    const double h = hi / nodes;
    double lo = std::max(0.0, best_s - h), up = best_s + h;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200 && up - lo > 1e-15; ++it) {
        const double m1 = up - phi * (up - lo);
        const double m2 = lo + phi * (up - lo);
        if (g(m1) < g(m2)) lo = m1; else up = m2;
    }
    return std::max(best, g(0.5 * (lo + up)));
}

Plant example_plant(const ExampleParams& p) {
    p.validate();
    Plant plant;
    plant.a = Matrix{{0.0, 0.0}, {p.b, p.c}};
    plant.c = Matrix{{1.0, 0.0}};
    plant.psi = [p](std::span<const double> x, std::span<double> out) {
        out[0] = example_mu(p, x[0], x[1]);
        out[1] = 0.0;
    };
    plant.lipschitz_bound = mu_x2_gain_bound(p.a);
    std::ostringstream desc;
    desc << "benchmark x1' = mu(x1, x2), x2' = b x1 + c x2 (a=" << p.a << ", b=" << p.b << ", c=" << p.c << ")";
    plant.description = desc.str();
    return plant;
}

std::array<Vector, 3> equilibria(const ExampleParams& p) {
    if (p.b == 0.0) throw Error(ErrorKind::Dimension, "equilibria: b must be nonzero");
    const double a = std::abs(p.a);
    std::array<Vector, 3> out;
    const double x2s[3] = {-a, 0.0, a};
    for (int i = 0; i < 3; ++i) out[i] = Vector{-(p.c / p.b) * x2s[i] + 0.0, x2s[i]};
    return out;
}

std::vector<PhaseSample> phase_portrait_grid(const ExampleParams& p, const PhaseBox& box, std::size_t resolution) {
    if (resolution < 2) throw Error(ErrorKind::Dimension, "phase_portrait_grid: need at least 2 points per axis");
    if (!(box.x1_hi > box.x1_lo) || !(box.x2_hi > box.x2_lo) || !std::isfinite(box.x1_lo + box.x1_hi + box.x2_lo + box.x2_hi)) {
        throw Error(ErrorKind::Dimension, "phase_portrait_grid: box must be bounded and nonempty");
    }
    std::vector<PhaseSample> out;
    out.reserve(resolution * resolution);
    const double d = static_cast<double>(resolution - 1);
    for (std::size_t i = 0; i < resolution; ++i) {
        const double x1 = box.x1_lo + (box.x1_hi - box.x1_lo) * static_cast<double>(i) / d;
        for (std::size_t j = 0; j < resolution; ++j) {
            const double x2 = box.x2_lo + (box.x2_hi - box.x2_lo) * static_cast<double>(j) / d;
            out.push_back({x1, x2, example_mu(p, x1, x2), p.b * x1 + p.c * x2});
        }
    }
    return out;
}

void write_phase_csv(std::ostream& os, const std::vector<PhaseSample>& grid) {
    const auto old = os.precision(17);
    os << "x_1,x_2,dx_1,dx_2\n";
    for (const auto& s : grid) os << s.x1 << ',' << s.x2 << ',' << s.dx1 << ',' << s.dx2 << '\n';
    os.precision(old);
}

const char* corpus_config_text(const std::string& name) {
    if (name == "example_open_loop") return corpus_text::example_open_loop;
    if (name == "example_noisy") return corpus_text::example_noisy;
    if (name == "example_noiseless") return corpus_text::example_noiseless;
    if (name == "synthetic_coupled") return corpus_text::synthetic_coupled;
    throw ConfigError("unknown corpus scenario '" + name + "'");
}

std::vector<std::string> corpus_config_names() {
    return {"example_open_loop", "example_noisy", "example_noiseless", "synthetic_coupled"};
}

}  // namespace impobs
