#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace impobs {

using Vector = std::vector<double>;

// Dense row-major real matrix. Sizes here are small (n <= ~20).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
    static Matrix diagonal(std::span<const double> d);
    static Matrix column(std::span<const double> v);
    static Matrix row(std::span<const double> v);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }
    bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> row_span(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    Matrix transpose() const;
    Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
    void set_block(std::size_t r0, std::size_t c0, const Matrix& b);

    bool all_finite() const noexcept;
    bool is_diagonal() const noexcept;
    double max_abs() const noexcept;

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(double s);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator-(Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, Matrix a);
Vector operator*(const Matrix& a, std::span<const double> v);

std::ostream& operator<<(std::ostream& os, const Matrix& m);

// Assembles [[a11, a12], [a21, a22]].
Matrix assemble_blocks(const Matrix& a11, const Matrix& a12, const Matrix& a21, const Matrix& a22);

double norm2(std::span<const double> v);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Callback invoked when an input to a symmetric routine is noticeably
// asymmetric (relative asymmetry above 1e-12). Default writes to stderr once
// per process; tests may replace it.
using AsymmetryHandler = std::function<void(double relative_asymmetry)>;
void set_asymmetry_handler(AsymmetryHandler handler);

// (s + s^T)/2 with the asymmetry warning above.
Matrix symmetrize(const Matrix& s);

// All eigenvalues of the symmetrized input, ascending (cyclic Jacobi).
Vector sym_eigenvalues(const Matrix& s);
double sym_eig_max(const Matrix& s);

// Largest singular value, sqrt(lambda_max(m^T m)).
double spectral_norm(const Matrix& m);

// sym_eig_max(s) < -margin.
bool is_neg_definite(const Matrix& s, double margin);

// Negative semidefiniteness of [[a11, a12], [a12^T, a22]] through the Schur
// complement a11 - a12 a22^{-1} a12^T. Requires a22 negative definite.
bool schur_nd_check(const Matrix& a11, const Matrix& a12, const Matrix& a22, double margin);

// LU with partial pivoting.
class LuFactorization {
public:
    explicit LuFactorization(const Matrix& a);
    bool singular() const noexcept { return singular_; }
    double determinant() const;
    Vector solve(std::span<const double> b) const;
    Matrix solve(const Matrix& b) const;
    Matrix inverse() const;

private:
    Matrix lu_;
    std::vector<std::size_t> perm_;
    int sign_ = 1;
    bool singular_ = false;
};

Matrix inverse(const Matrix& a);

// Parses "[1 2; 3 4]", "[[1,2],[3,4]]" or a bare scalar "0.8".
Matrix parse_matrix(const std::string& text);
std::string format_matrix(const Matrix& m);

}  // namespace impobs
