#include "impobs/dissipativity.hpp"

#include <cmath>
#include <random>

#include "impobs/errors.hpp"

namespace impobs {

const char* to_string(QsrSubject s) {
    switch (s) {
        case QsrSubject::linear_subsystem_n: return "linear_subsystem_n";
        case QsrSubject::linear_subsystem_o: return "linear_subsystem_o";
        case QsrSubject::static_map_o: return "static_map_o";
        case QsrSubject::static_map_n: return "static_map_n";
    }
    return "?";
}

const char* to_string(CertStatus s) {
    switch (s) {
        case CertStatus::verified: return "verified";
        case CertStatus::falsified: return "falsified";
        case CertStatus::assumed: return "assumed";
    }
    return "?";
}

QsrSubject parse_subject(const std::string& s) {
    for (auto v : {QsrSubject::linear_subsystem_n, QsrSubject::linear_subsystem_o, QsrSubject::static_map_o,
                   QsrSubject::static_map_n})
        if (s == to_string(v)) return v;
    throw Error(ErrorKind::Config, "unknown certificate subject '" + s + "'");
}

CertStatus parse_status(const std::string& s) {
    for (auto v : {CertStatus::verified, CertStatus::falsified, CertStatus::assumed})
        if (s == to_string(v)) return v;
    throw Error(ErrorKind::Config, "unknown certificate status '" + s + "'");
}

QsrCertificate QsrCertificate::make(const Matrix& q, const Matrix& s, const Matrix& r, QsrSubject subject,
                                    CertStatus status, double kappa) {
    if (!q.is_square() || !r.is_square() || s.rows() != q.rows() || s.cols() != r.rows()) {
        throw Error(ErrorKind::Dimension, "QSR certificate: need Q (p x p), S (p x k), R (k x k)");
    }
    if (!s.all_finite()) throw Error(ErrorKind::NonFinite, "QSR certificate: non-finite S");
    QsrCertificate c;
    c.q = symmetrize(q);
    c.s = s;
    c.r = symmetrize(r);
    c.kappa = kappa;
    c.subject = subject;
    c.status = status;
    return c;
}

bool QsrCertificate::is_zero_map() const { return q.max_abs() == 0.0 && s.max_abs() == 0.0 && r.max_abs() == 0.0; }

double supply_rate(const Matrix& q, const Matrix& s, const Matrix& r, std::span<const double> y,
                   std::span<const double> u) {
    if (y.size() != q.rows() || u.size() != r.rows() || s.rows() != y.size() || s.cols() != u.size()) {
        throw Error(ErrorKind::Dimension, "supply_rate: dimension mismatch");
    }
    const Vector qy = q * y;
    const Vector su = s * u;
    const Vector ru = r * u;
    double w = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) w += y[i] * (qy[i] + 2.0 * su[i]);
    for (std::size_t j = 0; j < u.size(); ++j) w += u[j] * ru[j];
    return w;
}

bool qsr_ssd_check(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& s, const Matrix& r,
                   double kappa) {
    const std::size_t n = a.rows();
    if (!a.is_square() || b.rows() != n || q.rows() != n || !q.is_square() || s.rows() != n ||
        s.cols() != b.cols() || !r.is_square() || r.rows() != b.cols()) {
        throw Error(ErrorKind::Dimension, "qsr_ssd_check: non-conformant A, B, Q, S, R");
    }
    const Matrix top_left = a + a.transpose() + kappa * Matrix::identity(n) - q;
    const Matrix top_right = b - s;
    const Matrix block = assemble_blocks(top_left, top_right, top_right.transpose(), -r);
    return sym_eig_max(block) <= 1e-9;
}

double certify_kappa_n(const Matrix& a_nn, const QsrCertificate& cert) {
    if (cert.subject != QsrSubject::static_map_n) {
        throw Error(ErrorKind::CertificatePrecondition, "certify_kappa_n: certificate must describe static_map_n");
    }
    const std::size_t k = a_nn.rows();
    if (!a_nn.is_square() || cert.q.rows() != k || cert.r.rows() != k) {
        throw Error(ErrorKind::Dimension, "certify_kappa_n: certificate blocks must be " + std::to_string(k) + "x" +
                                              std::to_string(k));
    }
    if (sym_eig_max(cert.q) > 1e-12) {
        throw Error(ErrorKind::CertificatePrecondition, "certify_kappa_n: Q_n must be negative semidefinite");
    }
    const Matrix b = cert.is_zero_map() ? Matrix::zeros(k, k) : Matrix::identity(k);
    const Matrix q = -cert.r;
    const Matrix s = -cert.s.transpose();
    const Matrix r = -cert.q;
    auto passes = [&](double kappa) { return qsr_ssd_check(a_nn, b, q, s, r, kappa); };

    if (!passes(0.0)) {
        throw Error(ErrorKind::CertificateInfeasible,
                    "Lemma 1: Sigma(A_n, I, I) is not (-R_n, -S_n^T, -Q_n)-ssd(kappa) for any kappa >= 0");
    }
    double lo = 0.0;
    double hi = 2.0 * spectral_norm(a_nn) + q.max_abs() + s.max_abs() + r.max_abs() + 1.0;
    for (int i = 0; i < 64 && passes(hi); ++i) {
        lo = hi;
        hi *= 2.0;
    }
    if (passes(hi)) throw Error(ErrorKind::CertificateInfeasible, "certify_kappa_n: dissipation rate unbounded");
    while (hi - lo > 1e-8) {
        const double mid = 0.5 * (lo + hi);
        (passes(mid) ? lo : hi) = mid;
    }
    return lo;
}

VarpiResult compute_varpi_o(const Matrix& a_oo, const QsrCertificate& cert) {
    if (cert.subject != QsrSubject::static_map_o) {
        throw Error(ErrorKind::CertificatePrecondition, "compute_varpi_o: certificate must describe static_map_o");
    }
    const std::size_t m = a_oo.rows();
    if (!a_oo.is_square() || cert.q.rows() != m || cert.r.rows() != m || cert.s.cols() != m) {
        throw Error(ErrorKind::Dimension, "compute_varpi_o: certificate blocks must be " + std::to_string(m) + "x" +
                                              std::to_string(m));
    }
    if (!is_neg_definite(cert.q, 1e-10)) {
        throw Error(ErrorKind::CertificatePrecondition, "Lemma 2 precondition: Q_o is not negative definite");
    }
    const Matrix i_plus_s = Matrix::identity(m) + cert.s;
    const Matrix schur_term = i_plus_s.transpose() * LuFactorization(cert.q).solve(i_plus_s);
    VarpiResult res;
    res.m_o = symmetrize(a_oo + a_oo.transpose() + cert.r - schur_term);
    res.eig_max = sym_eig_max(res.m_o);
    res.varpi_o = res.eig_max + kVarpiMargin;
    res.positive = res.varpi_o > 0.0;
    return res;
}

ResidualMap residual_block(const PartitionedPlant& pp, bool measured) {
    const std::size_t offset = measured ? 0 : pp.m();
    const std::size_t len = measured ? pp.m() : pp.n() - pp.m();
    return [&pp, offset, len](std::span<const double> z, std::span<const double> eps) {
        const Vector full = residual_nonlinearity(pp, z, eps);
        return Vector(full.begin() + static_cast<std::ptrdiff_t>(offset),
                      full.begin() + static_cast<std::ptrdiff_t>(offset + len));
    };
}

std::optional<Counterexample> falsify_qsr(const ResidualMap& psi_component, std::size_t block_offset,
                                          const Matrix& q, const Matrix& s, const Matrix& r, const SampleBox& box,
                                          std::size_t samples, std::uint64_t seed) {
    if (samples < 1) throw Error(ErrorKind::Dimension, "falsify_qsr: need at least one sample");
    if (box.z_lo.size() != box.z_hi.size() || box.eps_lo.size() != box.eps_hi.size()) {
        throw Error(ErrorKind::Dimension, "falsify_qsr: box bounds have different lengths");
    }
    const std::size_t block_len = r.rows();
    if (block_offset + block_len > box.eps_lo.size()) {
        throw Error(ErrorKind::Dimension, "falsify_qsr: eps block exceeds box dimension");
    }
    for (std::size_t i = 0; i < box.z_lo.size(); ++i)
        if (!(box.z_lo[i] <= box.z_hi[i]) || !std::isfinite(box.z_hi[i] - box.z_lo[i]))
            throw Error(ErrorKind::Dimension, "falsify_qsr: box must be bounded");
    for (std::size_t i = 0; i < box.eps_lo.size(); ++i)
        if (!(box.eps_lo[i] <= box.eps_hi[i]) || !std::isfinite(box.eps_hi[i] - box.eps_lo[i]))
            throw Error(ErrorKind::Dimension, "falsify_qsr: box must be bounded");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector z(box.z_lo.size());
    Vector eps(box.eps_lo.size());
    for (std::size_t k = 0; k < samples; ++k) {
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = box.z_lo[i] + (box.z_hi[i] - box.z_lo[i]) * unit(rng);
        for (std::size_t i = 0; i < eps.size(); ++i)
            eps[i] = box.eps_lo[i] + (box.eps_hi[i] - box.eps_lo[i]) * unit(rng);
        Vector psi = psi_component(z, eps);
        for (double v : psi)
            if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "falsify_qsr: evaluator returned a non-finite value");
        const std::span<const double> eps_i(eps.data() + block_offset, block_len);
        const double omega = supply_rate(q, s, r, psi, eps_i);
        if (omega < -1e-12) return Counterexample{k, z, eps, std::move(psi), omega};
    }
    return std::nullopt;
}

}  // namespace impobs
