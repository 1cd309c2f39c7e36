#include "hbflow/assembly.hpp"

#include "hbflow/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hbflow {

namespace {

int column_of(const Mesh& mesh, DofSet dofs, std::size_t vertex)
{
    return dofs == DofSet::all ? static_cast<int>(vertex) : mesh.dof_of_vertex(vertex);
}

std::size_t dof_count(const Mesh& mesh, DofSet dofs)
{
    return dofs == DofSet::all ? mesh.num_vertices() : mesh.num_dofs();
}

void check_length(const char* where, std::size_t expected, std::size_t got)
{
    if (expected != got)
        throw DimensionMismatch(where, expected, got);
}

} // namespace

DiscreteGradient::DiscreteGradient(const Mesh& mesh)
{
    const std::size_t m = mesh.num_triangles();
    const std::size_t n = mesh.num_dofs();
    if (n == 0)
        throw InvalidMesh("build_discrete_gradient: mesh has no interior vertex");

    std::vector<std::size_t> row_ptr(2 * m + 1, 0);
    std::vector<int> cols;
    std::vector<double> vals;
    cols.reserve(6 * m);
    vals.reserve(6 * m);

    const auto tris = mesh.triangles();
    const auto grads = mesh.basis_gradients();
    for (int component = 0; component < 2; ++component) {
        for (std::size_t k = 0; k < m; ++k) {
            std::array<std::pair<int, double>, 3> entries{};
            int count = 0;
            for (int i = 0; i < 3; ++i) {
                const int dof = mesh.dof_of_vertex(static_cast<std::size_t>(tris[k][i]));
                if (dof >= 0)
                    entries[count++] = {dof, grads[k][i][component]};
            }
            std::sort(entries.begin(), entries.begin() + count);
            for (int e = 0; e < count; ++e) {
                cols.push_back(entries[e].first);
                vals.push_back(entries[e].second);
            }
            row_ptr[component * m + k + 1] = cols.size();
        }
    }
    matrix_ = CsrMatrix(2 * m, n, std::move(row_ptr), std::move(cols), std::move(vals));
}

Vector DiscreteGradient::apply(std::span<const double> u) const
{
    check_length("DiscreteGradient::apply", num_dofs(), u.size());
    return matrix_ * u;
}

DiscreteGradient build_discrete_gradient(const Mesh& mesh)
{
    return DiscreteGradient(mesh);
}

Vector gradient_magnitudes(const DiscreteGradient& grad, std::span<const double> u)
{
    const Vector g = grad.apply(u);
    const std::size_t m = grad.num_triangles();
    Vector xi(m);
    for (std::size_t k = 0; k < m; ++k)
        xi[k] = std::hypot(g[k], g[k + m]);
    return xi;
}

StiffnessAssembler::StiffnessAssembler(const Mesh& mesh, DofSet dofs)
    : n_(dof_count(mesh, dofs))
    , num_triangles_(mesh.num_triangles())
{
    const auto tris = mesh.triangles();
    const auto grads = mesh.basis_gradients();
    const auto areas = mesh.areas();

    std::vector<std::vector<int>> adjacency(n_);
    for (const auto& t : tris) {
        std::array<int, 3> c{};
        for (int i = 0; i < 3; ++i)
            c[i] = column_of(mesh, dofs, static_cast<std::size_t>(t[i]));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (c[i] >= 0 && c[j] >= 0)
                    adjacency[static_cast<std::size_t>(c[i])].push_back(c[j]);
    }
    row_ptr_.assign(n_ + 1, 0);
    for (std::size_t i = 0; i < n_; ++i) {
        auto& row = adjacency[i];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        row_ptr_[i + 1] = row_ptr_[i] + row.size();
        col_idx_.insert(col_idx_.end(), row.begin(), row.end());
    }

    scatter_.resize(num_triangles_);
    local_.resize(num_triangles_);
    for (std::size_t k = 0; k < num_triangles_; ++k) {
        std::array<int, 3> c{};
        for (int i = 0; i < 3; ++i)
            c[i] = column_of(mesh, dofs, static_cast<std::size_t>(tris[k][i]));
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const auto& gi = grads[k][i];
                const auto& gj = grads[k][j];
                local_[k][3 * i + j] = areas[k] * (gi[0] * gj[0] + gi[1] * gj[1]);
                std::ptrdiff_t pos = -1;
                if (c[i] >= 0 && c[j] >= 0) {
                    const auto row = static_cast<std::size_t>(c[i]);
                    const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row]);
                    const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row + 1]);
                    pos = std::lower_bound(first, last, c[j]) - col_idx_.begin();
                }
                scatter_[k][3 * i + j] = pos;
            }
        }
    }
}

SparseMatrix StiffnessAssembler::assemble(std::span<const double> weights) const
{
    check_length("assemble_weighted_stiffness weights", num_triangles_, weights.size());
    std::vector<double> values(col_idx_.size(), 0.0);
    for (std::size_t k = 0; k < num_triangles_; ++k) {
        const double w = weights[k];
        if (!(w >= 0.0) || !std::isfinite(w))
            throw InvalidArgument("assemble_weighted_stiffness: weight " + std::to_string(k) +
                                  " is negative or non-finite");
        for (int s = 0; s < 9; ++s)
            if (scatter_[k][s] >= 0)
                values[static_cast<std::size_t>(scatter_[k][s])] += w * local_[k][s];
    }
    return SparseMatrix(n_, n_, row_ptr_, col_idx_, std::move(values));
}

SparseMatrix assemble_weighted_stiffness(const Mesh& mesh, std::span<const double> weights,
                                         DofSet dofs)
{
    return StiffnessAssembler(mesh, dofs).assemble(weights);
}

SparseMatrix assemble_stiffness(const Mesh& mesh, DofSet dofs)
{
    const TriangleWeights ones(mesh.num_triangles(), 1.0);
    return assemble_weighted_stiffness(mesh, ones, dofs);
}

TriangleWeights weights_preconditioner(std::span<const double> xi, double p, double epsilon)
{
    if (!(epsilon > 0.0))
        throw InvalidArgument("weights_preconditioner: epsilon must be positive");
    if (!(p > 1.0))
        throw InvalidArgument("weights_preconditioner: p must exceed 1");
    TriangleWeights w(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k)
        w[k] = std::pow(epsilon + xi[k], p - 2.0);
    return w;
}

TriangleWeights weights_plaplacian(std::span<const double> xi, double p, double zero_threshold)
{
    TriangleWeights w(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k)
        w[k] = xi[k] > zero_threshold ? std::pow(xi[k], p - 2.0) : 0.0;
    return w;
}

TriangleWeights weights_huber(std::span<const double> xi, double g, double gamma)
{
    if (!(g > 0.0) || !(gamma > 0.0))
        throw InvalidArgument("weights_huber: g and gamma must be positive");
    TriangleWeights w(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k)
        w[k] = g * gamma / std::max(g, gamma * xi[k]);
    return w;
}

Vector assemble_load_vector(const Mesh& mesh, const std::function<double(const Point&)>& f,
                            DofSet dofs)
{
    Vector load(dof_count(mesh, dofs), 0.0);
    const auto tris = mesh.triangles();
    const auto areas = mesh.areas();
    const auto verts = mesh.vertices();
    for (std::size_t k = 0; k < tris.size(); ++k) {
        for (int v : tris[k]) {
            const int c = column_of(mesh, dofs, static_cast<std::size_t>(v));
            if (c >= 0)
                load[static_cast<std::size_t>(c)] += areas[k] / 3.0 * f(verts[v]);
        }
    }
    return load;
}

Vector assemble_load_vector(const Mesh& mesh, double f, DofSet dofs)
{
    return assemble_load_vector(mesh, [f](const Point&) { return f; }, dofs);
}

} // namespace hbflow
