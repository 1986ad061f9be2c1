#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "impobs/matrix.hpp"
#include "impobs/plant.hpp"

namespace impobs {

enum class QsrSubject { linear_subsystem_n, linear_subsystem_o, static_map_o, static_map_n };
enum class CertStatus { verified, falsified, assumed };

const char* to_string(QsrSubject s);
const char* to_string(CertStatus s);
QsrSubject parse_subject(const std::string& s);
CertStatus parse_status(const std::string& s);

// Supply-rate weights (Q, S, R) with an optional dissipation rate kappa.
// Q and R are symmetrized on construction.
struct QsrCertificate {
    Matrix q;
    Matrix s;
    Matrix r;
    double kappa = 0.0;
    QsrSubject subject = QsrSubject::static_map_o;
    CertStatus status = CertStatus::assumed;

    static QsrCertificate make(const Matrix& q, const Matrix& s, const Matrix& r, QsrSubject subject,
                               CertStatus status = CertStatus::assumed, double kappa = 0.0);

    // Q = S = R = 0: the map is identically zero.
    bool is_zero_map() const;
};

// [y; u]^T [[Q, S], [S^T, R]] [y; u].
double supply_rate(const Matrix& q, const Matrix& s, const Matrix& r, std::span<const double> y,
                   std::span<const double> u);

// Sigma(A, B, I) with storage x^T x is (Q,S,R)-ssd(kappa) iff
// [[A + A^T + kappa I - Q, B - S], [B^T - S^T, -R]] is negative semidefinite
// (largest eigenvalue <= 1e-9).
bool qsr_ssd_check(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& s, const Matrix& r,
                   double kappa);

// Largest kappa_n >= 0 such that Sigma(A_n, I, I) is (-R_n, -S_n^T, -Q_n)-ssd(kappa_n),
// by bisection to 1e-8. A zero-map certificate drops the nonlinearity channel
// (B = 0). Throws CertificateInfeasible if even kappa_n = 0 fails.
double certify_kappa_n(const Matrix& a_nn, const QsrCertificate& cert_psi_n);

struct VarpiResult {
    double varpi_o = 0.0;   // eig_max + margin
    double eig_max = 0.0;   // largest eigenvalue of M_o
    bool positive = false;  // varpi_o > 0
    Matrix m_o;
};

inline constexpr double kVarpiMargin = 1e-6;

// varpi_o = lambda_max(A_o + A_o^T + R_o - (I + S_o^T) Q_o^{-1} (I + S_o)) + 1e-6.
// Requires Q_o negative definite (margin 1e-10).
VarpiResult compute_varpi_o(const Matrix& a_oo, const QsrCertificate& cert_psi_o);

struct SampleBox {
    Vector z_lo, z_hi;
    Vector eps_lo, eps_hi;
};

struct Counterexample {
    std::size_t sample_index = 0;
    Vector z;
    Vector eps;
    Vector psi;
    double omega = 0.0;
};

// (z, eps) -> the residual block psi~_i(eps) evaluated at z.
using ResidualMap = std::function<Vector(std::span<const double> z, std::span<const double> eps)>;

// Residual block of the partitioned plant: rows [0, m) for the measured
// block, [m, n) for the unmeasured one.
ResidualMap residual_block(const PartitionedPlant& pp, bool measured);

// Draws `samples` points (z, eps) uniformly from the box and returns the first
// one whose supply rate omega(psi~_i, eps_i) is below -1e-12. eps_i is the
// slice [block_offset, block_offset + q.rows()) of eps. A none result does not
// verify the certificate.
std::optional<Counterexample> falsify_qsr(const ResidualMap& psi_component, std::size_t block_offset,
                                          const Matrix& q, const Matrix& s, const Matrix& r, const SampleBox& box,
                                          std::size_t samples, std::uint64_t seed);

}  // namespace impobs
