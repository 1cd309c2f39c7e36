#pragma once

#include "hbflow/errors.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace hbflow {

using Vector = std::vector<double>;

/// Compressed sparse row matrix. Column indices are sorted within each row.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
              std::vector<int> col_idx, std::vector<double> values);

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::size_t nnz() const { return values_.size(); }

    [[nodiscard]] std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    [[nodiscard]] std::span<const int> col_idx() const { return col_idx_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] std::span<double> values() { return values_; }

    /// Entry (i, j), zero if not stored.
    [[nodiscard]] double at(std::size_t i, std::size_t j) const;
    [[nodiscard]] Vector diagonal() const;

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;
    /// y = A^T x
    void multiply_transpose(std::span<const double> x, std::span<double> y) const;

    [[nodiscard]] Vector operator*(std::span<const double> x) const;

    /// max |A_ij - A_ji| over stored entries.
    [[nodiscard]] double asymmetry() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

/// Symmetric matrices share the CSR storage; symmetry is a contract of the producer.
using SparseMatrix = CsrMatrix;

CsrMatrix identity_matrix(std::size_t n);

/// MatrixMarket coordinate/real/general dump, one-based indices.
void write_matrix_market(std::ostream& os, const CsrMatrix& a);

Vector matvec(const CsrMatrix& a, std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
/// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

struct LinearSolverConfig {
    double tol = 1e-10;
    /// 0 selects 10 * n.
    std::size_t max_iter = 0;
};

struct SpdSolveReport {
    std::size_t iterations = 0;
    /// ||A x - b|| / ||b||, recomputed with an explicit matvec after the solve.
    double relative_residual = 0.0;
    double wall_time_s = 0.0;
    bool converged = false;
};

class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, SpdSolveReport report)
        : std::runtime_error(what), report_(report)
    {
    }
    [[nodiscard]] const SpdSolveReport& report() const { return report_; }

private:
    SpdSolveReport report_;
};

struct SpdSolution {
    Vector x;
    SpdSolveReport report;
};

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite A.
/// Throws SolverFailure when the tolerance is not met within max_iter.
SpdSolution solve_spd(const CsrMatrix& a, std::span<const double> b,
                      const LinearSolverConfig& config = {},
                      std::span<const double> initial_guess = {});

} // namespace hbflow
