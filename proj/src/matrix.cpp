#include "impobs/matrix.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>

#include "impobs/errors.hpp"

namespace impobs {

namespace {

std::mutex g_handler_mutex;
AsymmetryHandler g_handler;
std::atomic<bool> g_warned{false};

void report_asymmetry(double rel) {
    AsymmetryHandler handler;
    {
        std::lock_guard lock(g_handler_mutex);
        handler = g_handler;
    }
    if (handler) {
        handler(rel);
        return;
    }
    if (!g_warned.exchange(true)) {
        std::cerr << "impobs: warning: symmetrizing matrix with relative asymmetry " << rel << '\n';
    }
}

void require_nonempty_finite(const Matrix& m, const char* what) {
    if (m.empty()) throw Error(ErrorKind::Dimension, std::string(what) + ": empty matrix");
    if (!m.all_finite()) throw Error(ErrorKind::NonFinite, std::string(what) + ": non-finite entry");
}

void require_square(const Matrix& m, const char* what) {
    if (!m.is_square() || m.empty()) {
        throw Error(ErrorKind::Dimension, std::string(what) + ": expected a nonempty square matrix, got " +
                                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
        throw Error(ErrorKind::Dimension, "Matrix: entry count does not match shape");
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw Error(ErrorKind::Dimension, "Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Matrix Matrix::column(std::span<const double> v) { return Matrix(v.size(), 1, Vector(v.begin(), v.end())); }

Matrix Matrix::row(std::span<const double> v) { return Matrix(1, v.size(), Vector(v.begin(), v.end())); }

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) throw Error(ErrorKind::Dimension, "Matrix::block out of range");
    Matrix b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
    if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_) {
        throw Error(ErrorKind::Dimension, "Matrix::set_block out of range");
    }
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

bool Matrix::is_diagonal() const noexcept {
    if (!is_square()) return false;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            if (i != j && (*this)(i, j) != 0.0) return false;
    return true;
}

double Matrix::max_abs() const noexcept {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
}

Matrix& Matrix::operator+=(const Matrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw Error(ErrorKind::Dimension, "Matrix +: shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw Error(ErrorKind::Dimension, "Matrix -: shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator-(Matrix a) { return a *= -1.0; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw Error(ErrorKind::Dimension, "Matrix *: inner dimensions " + std::to_string(a.cols()) + " and " +
                                              std::to_string(b.rows()) + " differ");
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Vector operator*(const Matrix& a, std::span<const double> v) {
    if (a.cols() != v.size()) throw Error(ErrorKind::Dimension, "Matrix * vector: dimension mismatch");
    Vector out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

std::ostream& operator<<(std::ostream& os, const Matrix& m) { return os << format_matrix(m); }

Matrix assemble_blocks(const Matrix& a11, const Matrix& a12, const Matrix& a21, const Matrix& a22) {
    if (a11.rows() != a12.rows() || a21.rows() != a22.rows() || a11.cols() != a21.cols() ||
        a12.cols() != a22.cols()) {
        throw Error(ErrorKind::Dimension, "assemble_blocks: non-conformant blocks");
    }
    Matrix m(a11.rows() + a21.rows(), a11.cols() + a12.cols());
    m.set_block(0, 0, a11);
    m.set_block(0, a11.cols(), a12);
    m.set_block(a11.rows(), 0, a21);
    m.set_block(a11.rows(), a11.cols(), a22);
    return m;
}

double norm2(std::span<const double> v) {
    // Scaled to avoid overflow for large entries.
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return 0.0;
    double s = 0.0;
    for (double x : v) {
        const double y = x / scale;
        s += y * y;
    }
    return scale * std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorKind::Dimension, "max_abs_diff: shape");
    double m = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
    return m;
}

void set_asymmetry_handler(AsymmetryHandler handler) {
    std::lock_guard lock(g_handler_mutex);
    g_handler = std::move(handler);
}

Matrix symmetrize(const Matrix& s) {
    require_square(s, "symmetrize");
    if (!s.all_finite()) throw Error(ErrorKind::NonFinite, "symmetrize: non-finite entry");
    Matrix out(s.rows(), s.cols());
    double asym = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t j = 0; j < s.cols(); ++j) {
            out(i, j) = 0.5 * (s(i, j) + s(j, i));
            asym = std::max(asym, std::abs(s(i, j) - s(j, i)));
        }
    const double scale = s.max_abs();
    if (scale > 0.0 && asym > 1e-12 * scale) report_asymmetry(asym / scale);
    return out;
}

Vector sym_eigenvalues(const Matrix& s) {
    Matrix a = symmetrize(s);
    const std::size_t n = a.rows();
    if (n == 1) return {a(0, 0)};

    // Cyclic Jacobi with Rutishauser's rotation formulas.
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        double diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diag += a(i, i) * a(i, i);
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        }
        if (off == 0.0 || off <= 1e-34 * diag) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                const double tau = sn / (1.0 + c);

                a(p, p) -= t * apq;
                a(q, q) += t * apq;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    const double arp = a(r, p);
                    const double arq = a(r, q);
                    a(r, p) = a(p, r) = arp - sn * (arq + tau * arp);
                    a(r, q) = a(q, r) = arq + sn * (arp - tau * arq);
                }
            }
        }
    }

    Vector ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

double sym_eig_max(const Matrix& s) {
    require_square(s, "sym_eig_max");
    return sym_eigenvalues(s).back();
}

double spectral_norm(const Matrix& m) {
    require_nonempty_finite(m, "spectral_norm");
    const Matrix gram = m.rows() < m.cols() ? m * m.transpose() : m.transpose() * m;
    return std::sqrt(std::max(0.0, sym_eig_max(gram)));
}

bool is_neg_definite(const Matrix& s, double margin) {
    if (margin < 0.0) throw Error(ErrorKind::Dimension, "is_neg_definite: margin must be >= 0");
    require_square(s, "is_neg_definite");
    return sym_eig_max(s) < -margin;
}

bool schur_nd_check(const Matrix& a11, const Matrix& a12, const Matrix& a22, double margin) {
    require_square(a11, "schur_nd_check(a11)");
    require_square(a22, "schur_nd_check(a22)");
    if (a12.rows() != a11.rows() || a12.cols() != a22.rows()) {
        throw Error(ErrorKind::Dimension, "schur_nd_check: a12 must be " + std::to_string(a11.rows()) + "x" +
                                              std::to_string(a22.rows()));
    }
    const Matrix a22s = symmetrize(a22);
    if (!is_neg_definite(a22s, 0.0)) {
        throw Error(ErrorKind::CertificatePrecondition, "schur_nd_check: a22 is not negative definite");
    }
    const Matrix schur = symmetrize(a11) - a12 * LuFactorization(a22s).solve(a12.transpose());
    return sym_eig_max(schur) <= -margin;
}

LuFactorization::LuFactorization(const Matrix& a) : lu_(a), perm_(a.rows()) {
    require_square(a, "LuFactorization");
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    const double scale = std::max(a.max_abs(), 1e-300);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu_(i, k)) > std::abs(lu_(piv, k))) piv = i;
        if (std::abs(lu_(piv, k)) <= 1e-300 * scale || lu_(piv, k) == 0.0) {
            singular_ = true;
            continue;
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
            std::swap(perm_[k], perm_[piv]);
            sign_ = -sign_;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            lu_(i, k) /= lu_(k, k);
            const double f = lu_(i, k);
            for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
        }
    }
}

double LuFactorization::determinant() const {
    if (singular_) return 0.0;
    double d = sign_;
    for (std::size_t i = 0; i < lu_.rows(); ++i) d *= lu_(i, i);
    return d;
}

Vector LuFactorization::solve(std::span<const double> b) const {
    if (singular_) throw Error(ErrorKind::Conditioning, "LU solve: singular matrix");
    const std::size_t n = lu_.rows();
    if (b.size() != n) throw Error(ErrorKind::Dimension, "LU solve: rhs dimension mismatch");
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
        x[i] /= lu_(i, i);
    }
    return x;
}

Matrix LuFactorization::solve(const Matrix& b) const {
    Matrix x(b.rows(), b.cols());
    Vector col(b.rows());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
        const Vector sol = solve(col);
        for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = sol[i];
    }
    return x;
}

Matrix LuFactorization::inverse() const { return solve(Matrix::identity(lu_.rows())); }

Matrix inverse(const Matrix& a) { return LuFactorization(a).inverse(); }

namespace {

class MatrixParser {
public:
    explicit MatrixParser(const std::string& text) : s_(text) {}

    Matrix parse() {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] != '[') {
            const double v = number();
            expect_end();
            return Matrix(1, 1, Vector{v});
        }
        expect('[');
        skip_ws();
        std::vector<Vector> rows;
        if (peek() == ']') {
            ++pos_;
            expect_end();
            return Matrix();
        }
        if (peek() == '[') {
            // Nested form [[..],[..]].
            while (true) {
                expect('[');
                rows.push_back(number_list(']'));
                expect(']');
                skip_ws();
                if (peek() == ',') {
                    ++pos_;
                    skip_ws();
                    continue;
                }
                break;
            }
            expect(']');
        } else {
            // Flat form [a b; c d].
            while (true) {
                rows.push_back(number_list(';'));
                skip_ws();
                if (peek() == ';') {
                    ++pos_;
                    continue;
                }
                break;
            }
            expect(']');
        }
        expect_end();
        const std::size_t cols = rows.front().size();
        Vector data;
        for (const auto& r : rows) {
            if (r.size() != cols) throw Error(ErrorKind::Config, "matrix literal has rows of different length");
            data.insert(data.end(), r.begin(), r.end());
        }
        return Matrix(rows.size(), cols, std::move(data));
    }

private:
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    void expect(char c) {
        skip_ws();
        if (peek() != c) {
            throw Error(ErrorKind::Config, std::string("matrix literal: expected '") + c + "' at offset " +
                                               std::to_string(pos_) + " in \"" + s_ + "\"");
        }
        ++pos_;
    }

    void expect_end() {
        skip_ws();
        if (pos_ != s_.size()) throw Error(ErrorKind::Config, "matrix literal: trailing characters in \"" + s_ + "\"");
    }

    double number() {
        skip_ws();
        const char* begin = s_.data() + pos_;
        const char* end = s_.data() + s_.size();
        if (begin != end && *begin == '+') ++begin;
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc()) {
            throw Error(ErrorKind::Config, "matrix literal: expected a number at offset " + std::to_string(pos_) +
                                               " in \"" + s_ + "\"");
        }
        pos_ = static_cast<std::size_t>(ptr - s_.data());
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "matrix literal: non-finite entry");
        return v;
    }

    Vector number_list(char terminator) {
        Vector r;
        while (true) {
            skip_ws();
            const char c = peek();
            if (c == terminator || c == ']' || c == '\0') break;
            if (c == ',') {
                ++pos_;
                continue;
            }
            r.push_back(number());
        }
        if (r.empty()) throw Error(ErrorKind::Config, "matrix literal: empty row in \"" + s_ + "\"");
        return r;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

}  // namespace

Matrix parse_matrix(const std::string& text) { return MatrixParser(text).parse(); }

std::string format_matrix(const Matrix& m) {
    // Shortest text that reads back to the same doubles.
    std::ostringstream os;
    os << '[';
    char buf[32];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (i) os << "; ";
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) os << ' ';
            const auto res = std::to_chars(buf, buf + sizeof buf, m(i, j));
            os.write(buf, res.ptr - buf);
        }
    }
    os << ']';
    return os.str();
}

}  // namespace impobs
