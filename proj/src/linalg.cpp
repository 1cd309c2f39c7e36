#include "hbflow/linalg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

namespace hbflow {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                     std::vector<int> col_idx, std::vector<double> values)
    : rows_(rows)
    , cols_(cols)
    , row_ptr_(std::move(row_ptr))
    , col_idx_(std::move(col_idx))
    , values_(std::move(values))
{
    if (row_ptr_.size() != rows_ + 1)
        throw DimensionMismatch("CsrMatrix row_ptr", rows_ + 1, row_ptr_.size());
    if (col_idx_.size() != values_.size())
        throw DimensionMismatch("CsrMatrix values", col_idx_.size(), values_.size());
    if (row_ptr_.back() != values_.size())
        throw InvalidArgument("CsrMatrix: row_ptr does not end at nnz");
}

double CsrMatrix::at(std::size_t i, std::size_t j) const
{
    const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    const auto it = std::lower_bound(first, last, static_cast<int>(j));
    if (it == last || *it != static_cast<int>(j))
        return 0.0;
    return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

Vector CsrMatrix::diagonal() const
{
    Vector d(std::min(rows_, cols_), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = at(i, i);
    return d;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
    if (x.size() != cols_)
        throw DimensionMismatch("CsrMatrix::multiply x", cols_, x.size());
    if (y.size() != rows_)
        throw DimensionMismatch("CsrMatrix::multiply y", rows_, y.size());
    for (std::size_t i = 0; i < rows_; ++i) {
        double sum = 0.0;
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            sum += values_[k] * x[static_cast<std::size_t>(col_idx_[k])];
        y[i] = sum;
    }
}

void CsrMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const
{
    if (x.size() != rows_)
        throw DimensionMismatch("CsrMatrix::multiply_transpose x", rows_, x.size());
    if (y.size() != cols_)
        throw DimensionMismatch("CsrMatrix::multiply_transpose y", cols_, y.size());
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            y[static_cast<std::size_t>(col_idx_[k])] += values_[k] * x[i];
}

Vector CsrMatrix::operator*(std::span<const double> x) const
{
    Vector y(rows_);
    multiply(x, y);
    return y;
}

double CsrMatrix::asymmetry() const
{
    double worst = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            const auto j = static_cast<std::size_t>(col_idx_[k]);
            worst = std::max(worst, std::abs(values_[k] - at(j, i)));
        }
    return worst;
}

CsrMatrix identity_matrix(std::size_t n)
{
    std::vector<std::size_t> row_ptr(n + 1);
    std::vector<int> cols(n);
    for (std::size_t i = 0; i < n; ++i) {
        row_ptr[i + 1] = i + 1;
        cols[i] = static_cast<int>(i);
    }
    return CsrMatrix(n, n, std::move(row_ptr), std::move(cols), Vector(n, 1.0));
}

void write_matrix_market(std::ostream& os, const CsrMatrix& a)
{
    const auto prec = os.precision(17);
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
    const auto rp = a.row_ptr();
    const auto ci = a.col_idx();
    const auto v = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = rp[i]; k < rp[i + 1]; ++k)
            os << i + 1 << ' ' << ci[k] + 1 << ' ' << v[k] << '\n';
    os.precision(prec);
}

Vector matvec(const CsrMatrix& a, std::span<const double> x)
{
    return a * x;
}

double dot(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
        throw DimensionMismatch("dot", x.size(), y.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        sum += x[i] * y[i];
    return sum;
}

double norm2(std::span<const double> x)
{
    return std::sqrt(dot(x, x));
}

void axpy(double alpha, std::span<const double> x, std::span<double> y)
{
    if (x.size() != y.size())
        throw DimensionMismatch("axpy", y.size(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] += alpha * x[i];
}

SpdSolution solve_spd(const CsrMatrix& a, std::span<const double> b,
                      const LinearSolverConfig& config, std::span<const double> initial_guess)
{
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = a.rows();
    if (a.cols() != n)
        throw DimensionMismatch("solve_spd: matrix is not square", n, a.cols());
    if (b.size() != n)
        throw DimensionMismatch("solve_spd rhs", n, b.size());
    if (!initial_guess.empty() && initial_guess.size() != n)
        throw DimensionMismatch("solve_spd initial guess", n, initial_guess.size());

    SpdSolution out;
    out.x.assign(n, 0.0);
    const double bnorm = norm2(b);
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    if (bnorm == 0.0) {
        out.report.converged = true;
        out.report.wall_time_s = elapsed();
        return out;
    }
    if (!initial_guess.empty())
        std::copy(initial_guess.begin(), initial_guess.end(), out.x.begin());

    const std::size_t max_iter = config.max_iter ? config.max_iter : 10 * std::max<std::size_t>(n, 1);
    Vector inv_diag = a.diagonal();
    for (double& d : inv_diag) {
        if (!(d > 0.0))
            throw SolverFailure("solve_spd: non-positive diagonal entry", out.report);
        d = 1.0 / d;
    }

    Vector& x = out.x;
    Vector r(b.begin(), b.end());
    Vector ap(n);
    Vector z(n);
    Vector p(n);
    const double target = config.tol * bnorm;
    auto true_residual = [&] {
        a.multiply(x, ap);
        for (std::size_t i = 0; i < n; ++i)
            r[i] = b[i] - ap[i];
        return norm2(r);
    };

    std::size_t it = 0;
    double rnorm = initial_guess.empty() ? bnorm : true_residual();
    // The CG recurrence residual drifts from b - A x; restart from the true
    // residual whenever the recurrence claims convergence but the check disagrees.
    while (rnorm > target && it < max_iter) {
        for (std::size_t i = 0; i < n; ++i)
            z[i] = inv_diag[i] * r[i];
        p = z;
        double rz = dot(r, z);
        bool breakdown = false;
        while (rnorm > target && it < max_iter) {
            a.multiply(p, ap);
            const double pap = dot(p, ap);
            if (!(pap > 0.0)) {
                breakdown = true;
                break;
            }
            const double alpha = rz / pap;
            axpy(alpha, p, x);
            axpy(-alpha, ap, r);
            ++it;
            rnorm = norm2(r);
            for (std::size_t i = 0; i < n; ++i)
                z[i] = inv_diag[i] * r[i];
            const double rz_next = dot(r, z);
            const double beta = rz_next / rz;
            rz = rz_next;
            for (std::size_t i = 0; i < n; ++i)
                p[i] = z[i] + beta * p[i];
        }
        rnorm = true_residual();
        if (breakdown)
            break;
    }

    out.report.iterations = it;
    out.report.relative_residual = rnorm / bnorm;
    out.report.converged = out.report.relative_residual <= config.tol;
    out.report.wall_time_s = elapsed();
    if (!out.report.converged)
        throw SolverFailure("solve_spd: no convergence after " + std::to_string(it) +
                                " iterations (relative residual " +
                                std::to_string(out.report.relative_residual) + ")",
                            out.report);
    return out;
}

} // namespace hbflow
