#pragma once

#include "hbflow/linalg.hpp"
#include "hbflow/mesh.hpp"

#include <functional>
#include <span>
#include <vector>

namespace hbflow {

/// Which vertices carry rows/columns in an assembled object.
enum class DofSet {
    interior, ///< Dirichlet-eliminated: one row per interior vertex (the solver's space)
    all,      ///< every vertex, boundary included
};

/// Per-triangle nonnegative coefficient of a weighted bilinear form.
using TriangleWeights = std::vector<double>;

/// Weights of xi^(p-2) at or below this magnitude are set to zero.
inline constexpr double kPlaplacianZeroThreshold = 1e-14;

/**
 * Stacked per-triangle derivative operator [d1; d2] of size 2m x n.
 *
 * Row k holds the x1-derivative on triangle k, row k+m the x2-derivative.
 * Columns are interior vertices; boundary values are fixed at zero.
 */
class DiscreteGradient {
public:
    explicit DiscreteGradient(const Mesh& mesh);

    [[nodiscard]] const CsrMatrix& matrix() const { return matrix_; }
    [[nodiscard]] std::size_t num_triangles() const { return matrix_.rows() / 2; }
    [[nodiscard]] std::size_t num_dofs() const { return matrix_.cols(); }

    /// Returns the 2m vector of gradient components of u.
    [[nodiscard]] Vector apply(std::span<const double> u) const;
    /// Gradient of triangle k from the stacked vector produced by apply().
    [[nodiscard]] Point component(std::span<const double> stacked, std::size_t k) const
    {
        return {stacked[k], stacked[k + num_triangles()]};
    }

private:
    CsrMatrix matrix_;
};

/// Throws InvalidMesh if the mesh has no interior vertex.
DiscreteGradient build_discrete_gradient(const Mesh& mesh);

/// |grad u| per triangle.
Vector gradient_magnitudes(const DiscreteGradient& grad, std::span<const double> u);

/**
 * Reusable assembler for sum_k w_k meas(tau_k) (grad phi_i, grad phi_j).
 *
 * The sparsity pattern and the unweighted local matrices are computed once;
 * each assemble() call is one pass over the triangles in index order.
 */
class StiffnessAssembler {
public:
    explicit StiffnessAssembler(const Mesh& mesh, DofSet dofs = DofSet::interior);

    [[nodiscard]] std::size_t size() const { return n_; }
    [[nodiscard]] SparseMatrix assemble(std::span<const double> weights) const;

private:
    std::size_t n_ = 0;
    std::size_t num_triangles_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<int> col_idx_;
    // Per triangle, 9 (local i, local j) slots: CSR position or -1 when eliminated.
    std::vector<std::array<std::ptrdiff_t, 9>> scatter_;
    std::vector<std::array<double, 9>> local_;
};

/// Throws InvalidArgument on negative or non-finite weights.
SparseMatrix assemble_weighted_stiffness(const Mesh& mesh, std::span<const double> weights,
                                         DofSet dofs = DofSet::interior);

/// Unit-weight stiffness matrix (discrete -Laplacian).
SparseMatrix assemble_stiffness(const Mesh& mesh, DofSet dofs = DofSet::interior);

/// (epsilon + xi_k)^(p-2): the shear-thinning preconditioner coefficient.
TriangleWeights weights_preconditioner(std::span<const double> xi, double p, double epsilon);

/// xi_k^(p-2), or 0 where xi_k <= zero_threshold.
TriangleWeights weights_plaplacian(std::span<const double> xi, double p,
                                   double zero_threshold = kPlaplacianZeroThreshold);

/// g gamma / max(g, gamma xi_k): the Huber coefficient.
TriangleWeights weights_huber(std::span<const double> xi, double g, double gamma);

/// Vertex-quadrature load: entry j = sum over tau containing P_j of meas(tau)/3 f(P_j).
Vector assemble_load_vector(const Mesh& mesh, double f, DofSet dofs = DofSet::interior);
Vector assemble_load_vector(const Mesh& mesh, const std::function<double(const Point&)>& f,
                            DofSet dofs = DofSet::interior);

} // namespace hbflow
