#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace switchstab {

using Vector = std::vector<double>;

/// Dense real matrix, row-major storage. Sized for control-style problems
/// (a few dozen rows at most); no attempt at cache blocking or sparsity.
class Matrix {
public:
    Matrix() = default;

    Matrix(int rows, int cols)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {
        if (rows < 0 || cols < 0) {
            throw std::invalid_argument("Matrix: negative dimension");
        }
    }

    Matrix(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = static_cast<int>(init.size());
        cols_ = rows_ > 0 ? static_cast<int>(init.begin()->size()) : 0;
        data_.reserve(static_cast<std::size_t>(rows_) * cols_);
        for (const auto& row : init) {
            if (static_cast<int>(row.size()) != cols_) {
                throw std::invalid_argument("Matrix: ragged initializer");
            }
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(const Vector& entries) {
        Matrix m(static_cast<int>(entries.size()), static_cast<int>(entries.size()));
        for (std::size_t i = 0; i < entries.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = entries[i];
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    const std::vector<double>& data() const { return data_; }

    bool is_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    Matrix& operator+=(const Matrix& other) {
        require_same_shape(other);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

    Matrix& operator-=(const Matrix& other) {
        require_same_shape(other);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
        return *this;
    }

    Matrix& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) {
            throw std::invalid_argument("Matrix multiply: inner dimensions disagree");
        }
        Matrix out(a.rows_, b.cols_);
        for (int i = 0; i < a.rows_; ++i) {
            for (int k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (int j = 0; j < b.cols_; ++j) {
                    out(i, j) += aik * b(k, j);
                }
            }
        }
        return out;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

    Matrix transpose() const {
        Matrix out(cols_, rows_);
        for (int i = 0; i < rows_; ++i) {
            for (int j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
        }
        return out;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Maximum absolute column sum.
    double one_norm() const {
        double best = 0.0;
        for (int j = 0; j < cols_; ++j) {
            double s = 0.0;
            for (int i = 0; i < rows_; ++i) s += std::abs((*this)(i, j));
            best = std::max(best, s);
        }
        return best;
    }

    /// Copy of the sub-block with rows [r0, r0+nr) and columns [c0, c0+nc).
    Matrix block(int r0, int c0, int nr, int nc) const {
        Matrix out(nr, nc);
        for (int i = 0; i < nr; ++i) {
            for (int j = 0; j < nc; ++j) out(i, j) = (*this)(r0 + i, c0 + j);
        }
        return out;
    }

    void set_block(int r0, int c0, const Matrix& sub) {
        for (int i = 0; i < sub.rows_; ++i) {
            for (int j = 0; j < sub.cols_; ++j) (*this)(r0 + i, c0 + j) = sub(i, j);
        }
    }

private:
    void require_same_shape(const Matrix& other) const {
        if (rows_ != other.rows_ || cols_ != other.cols_) {
            throw std::invalid_argument("Matrix: shape mismatch");
        }
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

inline Vector mat_vec(const Matrix& a, const Vector& x) {
    if (a.cols() != static_cast<int>(x.size())) {
        throw std::invalid_argument("mat_vec: dimension mismatch");
    }
    Vector y(static_cast<std::size_t>(a.rows()), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

/// Column-stacking vectorization: vec(M)[c*rows + r] = M(r, c).
inline Vector vec(const Matrix& m) {
    Vector v(static_cast<std::size_t>(m.rows()) * m.cols());
    for (int c = 0; c < m.cols(); ++c) {
        for (int r = 0; r < m.rows(); ++r) v[static_cast<std::size_t>(c) * m.rows() + r] = m(r, c);
    }
    return v;
}

inline Matrix unvec(const Vector& v, int rows, int cols) {
    if (static_cast<int>(v.size()) != rows * cols) {
        throw std::invalid_argument("unvec: size mismatch");
    }
    Matrix m(rows, cols);
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) m(r, c) = v[static_cast<std::size_t>(c) * rows + r];
    }
    return m;
}

/// Relative tolerance against a scale value, with the absolute floor used
/// throughout the library.
inline double scaled_tol(double rel, double scale, double floor_abs = 1e-14) {
    return std::max(rel * scale, floor_abs);
}

/// Raised when a linear solve meets a pivot at working precision. Carries a
/// cheap condition indicator (ratio of extreme pivot magnitudes).
class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& msg, double condition_estimate)
        : std::runtime_error(msg), condition_estimate_(condition_estimate) {}

    double condition_estimate() const { return condition_estimate_; }

private:
    double condition_estimate_;
};

/// LU factorization with partial pivoting, kept around so one factorization
/// can serve several right-hand sides (vector or matrix shaped).
class LuFactorization {
public:
    explicit LuFactorization(Matrix a) : lu_(std::move(a)) {
        if (!lu_.square()) throw std::invalid_argument("LU: matrix not square");
        if (!lu_.is_finite()) throw std::invalid_argument("LU: non-finite entries");
        const int n = lu_.rows();
        perm_.resize(n);
        for (int i = 0; i < n; ++i) perm_[i] = i;
        const double entry_scale = lu_.max_abs();
        double min_pivot = std::numeric_limits<double>::infinity();
        double max_pivot = 0.0;
        for (int k = 0; k < n; ++k) {
            int p = k;
            for (int i = k + 1; i < n; ++i) {
                if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
            }
            if (p != k) {
                for (int j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
                std::swap(perm_[k], perm_[p]);
            }
            const double pivot = lu_(k, k);
            max_pivot = std::max(max_pivot, std::abs(pivot));
            min_pivot = std::min(min_pivot, std::abs(pivot));
            if (std::abs(pivot) <= scaled_tol(1e-14 * n, entry_scale)) {
                singular_ = true;
                condition_estimate_ = min_pivot > 0.0 ? max_pivot / min_pivot
                                                      : std::numeric_limits<double>::infinity();
                return;
            }
            for (int i = k + 1; i < n; ++i) {
                lu_(i, k) /= pivot;
                const double lik = lu_(i, k);
                if (lik == 0.0) continue;
                for (int j = k + 1; j < n; ++j) lu_(i, j) -= lik * lu_(k, j);
            }
        }
        condition_estimate_ = min_pivot > 0.0 ? max_pivot / min_pivot
                                              : std::numeric_limits<double>::infinity();
    }

    bool singular() const { return singular_; }
    double condition_estimate() const { return condition_estimate_; }

    Vector solve(const Vector& b) const {
        require_solvable(b.size());
        const int n = lu_.rows();
        Vector x(n);
        for (int i = 0; i < n; ++i) x[i] = b[perm_[i]];
        for (int i = 1; i < n; ++i) {
            for (int j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
        }
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
            x[i] /= lu_(i, i);
        }
        return x;
    }

    Matrix solve(const Matrix& b) const {
        require_solvable(static_cast<std::size_t>(b.rows()));
        Matrix x(b.rows(), b.cols());
        Vector col(static_cast<std::size_t>(b.rows()));
        for (int j = 0; j < b.cols(); ++j) {
            for (int i = 0; i < b.rows(); ++i) col[i] = b(i, j);
            Vector sol = solve(col);
            for (int i = 0; i < b.rows(); ++i) x(i, j) = sol[i];
        }
        return x;
    }

private:
    void require_solvable(std::size_t rhs_rows) const {
        if (singular_) {
            throw SingularMatrixError("linear solve: matrix singular to working precision",
                                      condition_estimate_);
        }
        if (static_cast<int>(rhs_rows) != lu_.rows()) {
            throw std::invalid_argument("linear solve: right-hand side size mismatch");
        }
    }

    Matrix lu_;
    std::vector<int> perm_;
    bool singular_ = false;
    double condition_estimate_ = 0.0;
};

/// Solve L x = b by pivoted LU. Throws SingularMatrixError (with a condition
/// indicator) when L is singular to working precision.
inline Vector solve_linear(const Matrix& l, const Vector& b) {
    return LuFactorization(l).solve(b);
}

/// Kronecker product. Satisfies vec(A X B^T) = (B (x) A) vec(X) with the
/// column-stacking vec above.
inline Matrix kron(const Matrix& a, const Matrix& b) {
    if (!a.is_finite() || !b.is_finite()) throw std::invalid_argument("kron: non-finite entries");
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            const double aij = a(i, j);
            if (aij == 0.0) continue;
            for (int k = 0; k < b.rows(); ++k) {
                for (int l = 0; l < b.cols(); ++l) {
                    out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
                }
            }
        }
    }
    return out;
}

/// Matrix exponential e^{At} by scaling-and-squaring with the degree-13
/// diagonal Pade approximant. The scaling power is picked from the 1-norm of
/// At so the approximant operates below its accuracy radius; the result is
/// then squared back up.
inline Matrix expm(const Matrix& a, double t) {
    if (!a.square()) throw std::invalid_argument("expm: matrix not square");
    if (!a.is_finite() || !std::isfinite(t)) throw std::invalid_argument("expm: non-finite input");
    const int n = a.rows();
    if (n == 0) return Matrix(0, 0);

    Matrix at = a * t;
    // Accuracy radius of the degree-13 approximant in double precision.
    constexpr double kTheta13 = 5.371920351148152;
    int squarings = 0;
    const double norm = at.one_norm();
    if (norm > kTheta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
        at *= std::ldexp(1.0, -squarings);
    }

    static const double b[14] = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};

    const Matrix ident = Matrix::identity(n);
    const Matrix a2 = at * at;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a2 * a4;

    const Matrix u = at * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
                           b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) +
                     b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;

    Matrix result = LuFactorization(v - u).solve(u + v);
    for (int i = 0; i < squarings; ++i) result = result * result;
    return result;
}

/// Real symmetric matrix. Construction checks the asymmetry against the
/// Frobenius norm, then stores the symmetrized average.
class SymmetricMatrix {
public:
    explicit SymmetricMatrix(const Matrix& m, double asymmetry_rel_tol = 1e-10) {
        if (!m.square()) throw std::invalid_argument("SymmetricMatrix: matrix not square");
        if (!m.is_finite()) throw std::invalid_argument("SymmetricMatrix: non-finite entries");
        double asym = 0.0;
        for (int i = 0; i < m.rows(); ++i) {
            for (int j = i + 1; j < m.cols(); ++j) asym = std::max(asym, std::abs(m(i, j) - m(j, i)));
        }
        if (asym > scaled_tol(asymmetry_rel_tol, m.frobenius_norm())) {
            throw std::invalid_argument("SymmetricMatrix: asymmetry " + std::to_string(asym) +
                                        " exceeds tolerance");
        }
        mat_ = 0.5 * (m + m.transpose());
    }

    static SymmetricMatrix identity(int n) { return SymmetricMatrix(Matrix::identity(n)); }

    int order() const { return mat_.rows(); }
    double operator()(int r, int c) const { return mat_(r, c); }
    const Matrix& mat() const { return mat_; }

private:
    Matrix mat_;
};

/// All eigenvalues of (M + M^T)/2 in ascending order, by cyclic Jacobi
/// rotations. Robust and simple; plenty fast for the small orders used here.
inline std::vector<double> sym_eigenvalues(const Matrix& m) {
    if (!m.square()) throw std::invalid_argument("sym_eigenvalues: matrix not square");
    if (!m.is_finite()) throw std::invalid_argument("sym_eigenvalues: non-finite entries");
    const int n = m.rows();
    Matrix a = 0.5 * (m + m.transpose());
    const double scale = a.frobenius_norm();
    if (n == 1) return {a(0, 0)};

    const double stop = scaled_tol(1e-15, scale, 0.0);
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        }
        if (std::sqrt(2.0 * off) <= stop) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eigs(n);
    for (int i = 0; i < n; ++i) eigs[i] = a(i, i);
    std::sort(eigs.begin(), eigs.end());
    return eigs;
}

inline double min_eig_sym(const Matrix& m) { return sym_eigenvalues(m).front(); }
inline double min_eig_sym(const SymmetricMatrix& m) { return sym_eigenvalues(m.mat()).front(); }
inline double max_eig_sym(const Matrix& m) { return sym_eigenvalues(m).back(); }
inline double max_eig_sym(const SymmetricMatrix& m) { return sym_eigenvalues(m.mat()).back(); }

/// Finite-horizon cost Gramian W(T) with x^T W(T) x = integral over [0,T] of
/// ||e^{A tau} x||^2.
///
/// Computed by one block exponential: stack C = [[-A^T, I], [0, A]],
/// exponentiate over T, and read W off the product of the bottom-right and
/// top-right blocks. Exact up to expm accuracy, no quadrature.
inline SymmetricMatrix cost_gramian(const Matrix& a, double duration) {
    if (!a.square()) throw std::invalid_argument("cost_gramian: matrix not square");
    if (!(duration >= 0.0)) throw std::invalid_argument("cost_gramian: negative duration");
    const int n = a.rows();
    Matrix block(2 * n, 2 * n);
    block.set_block(0, 0, -1.0 * a.transpose());
    block.set_block(0, n, Matrix::identity(n));
    block.set_block(n, n, a);
    const Matrix e = expm(block, duration);
    const Matrix top_right = e.block(0, n, n, n);
    const Matrix bottom_right = e.block(n, n, n, n);
    return SymmetricMatrix(bottom_right.transpose() * top_right);
}

}  // namespace switchstab
