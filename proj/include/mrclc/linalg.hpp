#pragma once

// Small dense real matrix/vector utilities: Lyapunov-equation solve,
// symmetric minimum eigenvalue, Hurwitz test.  Everything here targets
// matrices of single-digit dimension, so the methods are chosen for
// verifiability (checkable residuals, no general eigensolver) rather
// than asymptotic speed.

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrclc {

using Vector = std::vector<double>;

struct DimensionMismatch : std::invalid_argument {
    explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

struct NotHurwitz : std::runtime_error {
    explicit NotHurwitz(const std::string& what) : std::runtime_error(what) {}
};

struct NotSymmetric : std::invalid_argument {
    explicit NotSymmetric(const std::string& what) : std::invalid_argument(what) {}
};

struct NonFiniteOutput : std::runtime_error {
    explicit NonFiniteOutput(const std::string& what) : std::runtime_error(what) {}
};

// Row-major dense matrix.
class Matrix {
  public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0) throw DimensionMismatch("Matrix: zero dimension");
    }

    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        if (rows_ == 0) throw DimensionMismatch("Matrix: empty initializer");
        cols_ = rows.begin()->size();
        if (cols_ == 0) throw DimensionMismatch("Matrix: empty row");
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw DimensionMismatch("Matrix: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    friend Matrix operator+(const Matrix& a, const Matrix& b) {
        a.require_same_shape(b, "operator+");
        Matrix r = a;
        for (std::size_t k = 0; k < r.data_.size(); ++k) r.data_[k] += b.data_[k];
        return r;
    }

    friend Matrix operator-(const Matrix& a, const Matrix& b) {
        a.require_same_shape(b, "operator-");
        Matrix r = a;
        for (std::size_t k = 0; k < r.data_.size(); ++k) r.data_[k] -= b.data_[k];
        return r;
    }

    friend Matrix operator*(double s, const Matrix& a) {
        Matrix r = a;
        for (double& v : r.data_) v *= s;
        return r;
    }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw DimensionMismatch("operator*: inner dimensions differ");
        Matrix r(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                for (std::size_t j = 0; j < b.cols_; ++j) r(i, j) += aik * b(k, j);
            }
        return r;
    }

    friend Vector operator*(const Matrix& a, const Vector& x) {
        if (a.cols_ != x.size()) throw DimensionMismatch("operator*: matrix-vector shape");
        Vector y(a.rows_, 0.0);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t j = 0; j < a.cols_; ++j) y[i] += a(i, j) * x[j];
        return y;
    }

  private:
    void require_same_shape(const Matrix& o, const char* op) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw DimensionMismatch(std::string(op) + ": shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionMismatch("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

inline Matrix outer(const Vector& a, const Vector& b) {
    Matrix m(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
    return m;
}

// In-place Gaussian elimination with partial pivoting on the augmented
// system [a | b]; returns false when a pivot falls below an absolute
// tiny threshold (singular or numerically singular system).
inline bool solve_linear_system(Matrix a, Vector b, Vector& x) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw DimensionMismatch("solve_linear_system: shapes");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) < 1e-300) return false;
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return true;
}

// Smallest eigenvalue of a symmetric matrix via cyclic Jacobi rotations,
// iterated until the off-diagonal norm is far below the documented
// absolute tolerance 1e-9 * max(1, ||S||_F).
inline double min_eig_sym(const Matrix& s) {
    const std::size_t n = s.rows();
    if (n == 0 || s.cols() != n) throw DimensionMismatch("min_eig_sym: not square");
    const double scale = std::max(1.0, s.frobenius_norm());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(s(i, j) - s(j, i)) > 1e-9 * scale)
                throw NotSymmetric("min_eig_sym: asymmetry exceeds 1e-9 relative tolerance");

    Matrix a = s;
    // Work on the symmetrized copy so the rotations see exact symmetry.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = v;
            a(j, i) = v;
        }

    const double tol = 1e-12 * scale;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
        if (std::sqrt(off) <= tol) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) <= tol / (10.0 * double(n))) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
            }
    }
    double mn = a(0, 0);
    for (std::size_t i = 1; i < n; ++i) mn = std::min(mn, a(i, i));
    return mn;
}

// Solves A'P + PA = -Q for symmetric positive-definite Q and strictly
// Hurwitz A by rewriting the equation as an n^2 x n^2 linear system
// (vectorization identity) and eliminating with partial pivoting.
// n <= 10 in every scenario, so O(n^6) is irrelevant; the payoff is a
// directly checkable residual.
inline Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
    const std::size_t n = a.rows();
    if (a.cols() != n || q.rows() != n || q.cols() != n)
        throw DimensionMismatch("solve_lyapunov: shapes");

    Matrix sys(n * n, n * n);
    Vector rhs(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t eq = i * n + j;
            // (A'P)_{ij} contributes A_{ki} to unknown p_{kj};
            // (PA)_{ij} contributes A_{lj} to unknown p_{il}.
            for (std::size_t k = 0; k < n; ++k) sys(eq, k * n + j) += a(k, i);
            for (std::size_t l = 0; l < n; ++l) sys(eq, i * n + l) += a(l, j);
            rhs[eq] = -q(i, j);
        }

    Vector p_vec;
    if (!solve_linear_system(sys, rhs, p_vec))
        throw NotHurwitz("solve_lyapunov: vectorized system is singular");

    Matrix p(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) p(i, j) = p_vec[i * n + j];
    // Suppress roundoff asymmetry explicitly.
    Matrix pt = p.transpose();
    p = 0.5 * (p + pt);

    if (!p.all_finite()) throw NonFiniteOutput("solve_lyapunov: non-finite P");
    if (min_eig_sym(p) <= 0.0)
        throw NotHurwitz("solve_lyapunov: P is not positive definite");
    return p;
}

// Lyapunov criterion: A is strictly Hurwitz iff A'P + PA = -I admits a
// positive-definite solution.  Avoids a nonsymmetric eigensolver.
inline bool is_hurwitz(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("is_hurwitz: not square");
    try {
        solve_lyapunov(a, Matrix::identity(a.rows()));
        return true;
    } catch (const NotHurwitz&) {
        return false;
    }
}

}  // namespace mrclc
