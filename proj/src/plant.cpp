#include "impobs/plant.hpp"

#include <algorithm>
#include <cmath>

#include "impobs/errors.hpp"

namespace impobs {

void Plant::validate() const {
    if (!a.is_square() || a.empty()) throw Error(ErrorKind::Dimension, "plant: A must be a nonempty square matrix");
    if (c.cols() != a.rows() || c.empty()) {
        throw Error(ErrorKind::Dimension, "plant: C must have " + std::to_string(a.rows()) + " columns");
    }
    if (!a.all_finite() || !c.all_finite()) throw Error(ErrorKind::NonFinite, "plant: non-finite entry in A or C");
    if (c.rows() >= a.rows()) {
        throw Error(ErrorKind::Rank, "plant: need m < n measured outputs, got m = " + std::to_string(c.rows()));
    }
    if (!psi) throw Error(ErrorKind::Dimension, "plant: missing nonlinearity evaluator");
    if (!(lipschitz_bound >= 0.0) || !std::isfinite(lipschitz_bound)) {
        throw Error(ErrorKind::Dimension, "plant: Lipschitz bound must be finite and >= 0");
    }
    // rank(C) == m via the singular values of C.
    const Vector ev = sym_eigenvalues(c * c.transpose());
    const double tol = 1e-10 * spectral_norm(c);
    if (ev.front() <= tol * tol) throw Error(ErrorKind::Rank, "plant: C does not have full row rank");
}

Matrix complete_transformation(const Matrix& c) {
    if (c.empty() || c.rows() >= c.cols()) {
        throw Error(ErrorKind::Rank, "complete_transformation: C must be m x n with m < n");
    }
    if (!c.all_finite()) throw Error(ErrorKind::NonFinite, "complete_transformation: non-finite entry");
    const std::size_t m = c.rows();
    const std::size_t n = c.cols();

    std::vector<Vector> basis;
    auto orthogonalize = [&](Vector v) {
        // Two passes of modified Gram-Schmidt.
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) {
                double d = 0.0;
                for (std::size_t k = 0; k < n; ++k) d += q[k] * v[k];
                for (std::size_t k = 0; k < n; ++k) v[k] -= d * q[k];
            }
        return v;
    };

    const double scale = c.max_abs();
    for (std::size_t i = 0; i < m; ++i) {
        Vector r(c.row_span(i).begin(), c.row_span(i).end());
        for (double& x : r) x /= scale;
        const double before = norm2(r);
        r = orthogonalize(std::move(r));
        const double nr = norm2(r);
        if (nr <= 1e-10 * std::max(before, 1.0)) throw Error(ErrorKind::Rank, "complete_transformation: C is rank deficient");
        for (double& x : r) x /= nr;
        basis.push_back(std::move(r));
    }

    Matrix mm(n - m, n);
    std::size_t filled = 0;
    for (std::size_t j = 0; j < n && filled < n - m; ++j) {
        Vector e(n, 0.0);
        e[j] = 1.0;
        e = orthogonalize(std::move(e));
        const double ne = norm2(e);
        if (ne < 1e-8) continue;
        for (double& x : e) x /= ne;
        for (double& x : e)
            if (std::abs(x) < 1e-15) x = 0.0;
        const auto first = std::find_if(e.begin(), e.end(), [](double x) { return std::abs(x) > 1e-12; });
        if (first != e.end() && *first < 0.0)
            for (double& x : e) x = -x;
        for (std::size_t k = 0; k < n; ++k) mm(filled, k) = e[k];
        basis.push_back(std::move(e));
        ++filled;
    }
    if (filled != n - m) throw Error(ErrorKind::Rank, "complete_transformation: could not complete basis");
    return mm;
}

PartitionedPlant partition(const Plant& plant) {
    plant.validate();
    PartitionedPlant pp;
    pp.plant_ = plant;
    pp.n_ = plant.n();
    pp.m_ = plant.m();
    const std::size_t n = pp.n_;
    const std::size_t m = pp.m_;

    pp.m_mat_ = complete_transformation(plant.c);
    pp.t_ = Matrix(n, n);
    pp.t_.set_block(0, 0, plant.c);
    pp.t_.set_block(m, 0, pp.m_mat_);

    Matrix scaled = pp.t_;
    for (std::size_t i = 0; i < n; ++i) {
        double rmax = 0.0;
        for (std::size_t j = 0; j < n; ++j) rmax = std::max(rmax, std::abs(scaled(i, j)));
        for (std::size_t j = 0; j < n; ++j) scaled(i, j) /= rmax;
    }
    const LuFactorization lu(scaled);
    if (lu.singular() || std::abs(lu.determinant()) <= 1e-10) {
        throw Error(ErrorKind::Conditioning, "partition: transformation T = [C; M] is near singular");
    }
    pp.t_inv_ = inverse(pp.t_);
    pp.t_is_identity_ = pp.t_ == Matrix::identity(n);
    pp.a_bar_ = pp.t_is_identity_ ? plant.a : pp.t_ * plant.a * pp.t_inv_;
    pp.a_oo_ = pp.a_bar_.block(0, 0, m, m);
    pp.a_on_ = pp.a_bar_.block(0, m, m, n - m);
    pp.a_no_ = pp.a_bar_.block(m, 0, n - m, m);
    pp.a_nn_ = pp.a_bar_.block(m, m, n - m, n - m);
    return pp;
}

void PartitionedPlant::psi_bar(std::span<const double> z, std::span<double> out) const {
    if (z.size() != n_ || out.size() != n_) throw Error(ErrorKind::Dimension, "psi_bar: dimension mismatch");
    if (t_is_identity_) {
        plant_.psi(z, out);
        return;
    }
    const Vector x = t_inv_ * z;
    Vector px(n_);
    plant_.psi(x, px);
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j) s += t_(i, j) * px[j];
        out[i] = s;
    }
}

Vector PartitionedPlant::psi_bar(std::span<const double> z) const {
    Vector out(n_);
    psi_bar(z, out);
    return out;
}

void PartitionedPlant::flow(std::span<const double> z, std::span<double> dz) const {
    psi_bar(z, dz);
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j) s += a_bar_(i, j) * z[j];
        dz[i] += s;
    }
}

Matrix PartitionedPlant::reassemble() const { return assemble_blocks(a_oo_, a_on_, a_no_, a_nn_); }

Vector residual_nonlinearity(const PartitionedPlant& pp, std::span<const double> z, std::span<const double> eps) {
    if (z.size() != pp.n() || eps.size() != pp.n()) {
        throw Error(ErrorKind::Dimension, "residual_nonlinearity: z and eps must have dimension " +
                                              std::to_string(pp.n()));
    }
    if (std::all_of(eps.begin(), eps.end(), [](double e) { return e == 0.0; })) return Vector(pp.n(), 0.0);
    Vector shifted(z.begin(), z.end());
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += eps[i];
    Vector a = pp.psi_bar(shifted);
    const Vector b = pp.psi_bar(z);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

}  // namespace impobs
