#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hbflow {

using Point = std::array<double, 2>;
using Triangle = std::array<int, 3>;

/// Constant gradients of the three local P1 basis functions on one triangle.
using LocalGradients = std::array<Point, 3>;

/**
 * Planar P1 triangulation with the geometric data needed for assembly.
 *
 * Boundary vertices are flagged in place, never reordered. Interior vertices
 * carry a dense degree-of-freedom index (0..num_dofs-1); boundary vertices map
 * to -1, which realizes the homogeneous Dirichlet condition.
 *
 * A Mesh is immutable after construction.
 */
class Mesh {
public:
    /// Builds a mesh from raw connectivity. Triangles with clockwise
    /// orientation are rejected, as are degenerate ones.
    Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
         std::vector<bool> boundary_vertex);

    [[nodiscard]] std::size_t num_vertices() const { return vertices_.size(); }
    [[nodiscard]] std::size_t num_triangles() const { return triangles_.size(); }
    [[nodiscard]] std::size_t num_dofs() const { return dof_to_vertex_.size(); }

    [[nodiscard]] std::span<const Point> vertices() const { return vertices_; }
    [[nodiscard]] std::span<const Triangle> triangles() const { return triangles_; }
    [[nodiscard]] const std::vector<bool>& boundary_vertex() const { return boundary_; }
    [[nodiscard]] std::span<const double> areas() const { return areas_; }
    [[nodiscard]] std::span<const LocalGradients> basis_gradients() const { return gradients_; }

    /// Interior-vertex index of a vertex, or -1 on the boundary.
    [[nodiscard]] int dof_of_vertex(std::size_t v) const { return vertex_to_dof_[v]; }
    [[nodiscard]] std::size_t vertex_of_dof(std::size_t d) const { return dof_to_vertex_[d]; }

    /// Maximum inscribed-circle radius over all triangles.
    [[nodiscard]] double h() const { return h_; }
    [[nodiscard]] double total_area() const;

    /// Index of a triangle whose closure contains `x`, or -1.
    [[nodiscard]] int locate(const Point& x, double tol = 1e-12) const;

private:
    std::vector<Point> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<bool> boundary_;
    std::vector<double> areas_;
    std::vector<LocalGradients> gradients_;
    std::vector<int> vertex_to_dof_;
    std::vector<std::size_t> dof_to_vertex_;
    double h_ = 0.0;
};

/// Uniform mesh of (0,1)^2: n x n cells, each cut along its (+1,+1) diagonal.
Mesh build_unit_square_mesh(int n);

/// Hexagonal fan of the unit disk, refined `level` times by edge bisection,
/// with new boundary vertices projected onto the unit circle.
Mesh build_unit_disk_mesh(int level);

/// Largest inscribed-circle radius, area / semiperimeter, over triangles.
double mesh_parameter(const Mesh& mesh);

/// Inscribed radius of a single triangle.
double inscribed_radius(const Point& a, const Point& b, const Point& c);

// Plain-text fixture format:
//   line 1: "<num_vertices> <num_triangles>"
//   then one "x y boundary_flag" per vertex, one "i j k" per triangle (zero-based).
void write_node_element(std::ostream& os, const Mesh& mesh);
Mesh read_node_element(std::istream& is);

struct ScalarField {
    std::string name;
    std::span<const double> values;
};

/// VTK legacy ASCII (v3.0) unstructured grid with optional point/cell scalars.
void write_vtk(std::ostream& os, const Mesh& mesh,
               std::span<const ScalarField> point_data = {},
               std::span<const ScalarField> cell_data = {});

} // namespace hbflow
