#pragma once

#include <functional>
#include <span>
#include <string>

#include "impobs/matrix.hpp"

namespace impobs {

// Pure evaluator x -> psi(x); writes psi(x) into `out` (same length as x).
using Nonlinearity = std::function<void(std::span<const double> x, std::span<double> out)>;

// x' = A x + psi(x), measured through y = C x at sampling instants.
struct Plant {
    Matrix a;
    Matrix c;
    Nonlinearity psi;
    double lipschitz_bound = 0.0;  // declared, not derived
    std::string description;

    std::size_t n() const noexcept { return a.rows(); }
    std::size_t m() const noexcept { return c.rows(); }

    // Throws on shape problems, rank(C) < m, m >= n or a negative bound.
    void validate() const;
};

// Orthonormal completion M of the row space of c, so that T = [C; M] is
// invertible. Rows are ordered by the standard basis vectors they came from
// and signed so their first nonzero entry is positive.
Matrix complete_transformation(const Matrix& c);

// Plant in z = T x coordinates, split into measured (o) and unmeasured (n)
// blocks. Immutable after construction.
class PartitionedPlant {
public:
    std::size_t n() const noexcept { return n_; }
    std::size_t m() const noexcept { return m_; }

    const Matrix& t_mat() const noexcept { return t_; }
    const Matrix& t_inv() const noexcept { return t_inv_; }
    const Matrix& m_mat() const noexcept { return m_mat_; }
    const Matrix& a_bar() const noexcept { return a_bar_; }
    const Matrix& a_oo() const noexcept { return a_oo_; }
    const Matrix& a_on() const noexcept { return a_on_; }
    const Matrix& a_no() const noexcept { return a_no_; }
    const Matrix& a_nn() const noexcept { return a_nn_; }
    const Plant& plant() const noexcept { return plant_; }

    // psi_bar(z) = T psi(T^{-1} z).
    void psi_bar(std::span<const double> z, std::span<double> out) const;
    Vector psi_bar(std::span<const double> z) const;

    // z' = A_bar z + psi_bar(z).
    void flow(std::span<const double> z, std::span<double> dz) const;

    Vector to_z(std::span<const double> x) const { return t_ * x; }
    Vector to_x(std::span<const double> z) const { return t_inv_ * z; }

    // Reassembled [[A_o, A_on], [A_no, A_n]].
    Matrix reassemble() const;

private:
    friend PartitionedPlant partition(const Plant& plant);

    Plant plant_;
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    bool t_is_identity_ = false;
    Matrix t_, t_inv_, m_mat_, a_bar_, a_oo_, a_on_, a_no_, a_nn_;
};

PartitionedPlant partition(const Plant& plant);

// psi_bar(z + eps) - psi_bar(z); exactly zero for eps == 0.
Vector residual_nonlinearity(const PartitionedPlant& pp, std::span<const double> z, std::span<const double> eps);

}  // namespace impobs
