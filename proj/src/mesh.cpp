#include "hbflow/mesh.hpp"

#include "hbflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <utility>

namespace hbflow {

namespace {

double signed_double_area(const Point& a, const Point& b, const Point& c)
{
    return (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
}

double distance(const Point& a, const Point& b)
{
    return std::hypot(b[0] - a[0], b[1] - a[1]);
}

} // namespace

double inscribed_radius(const Point& a, const Point& b, const Point& c)
{
    const double area = 0.5 * std::abs(signed_double_area(a, b, c));
    const double s = 0.5 * (distance(a, b) + distance(b, c) + distance(c, a));
    return area / s;
}

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
           std::vector<bool> boundary_vertex)
    : vertices_(std::move(vertices))
    , triangles_(std::move(triangles))
    , boundary_(std::move(boundary_vertex))
{
    if (boundary_.size() != vertices_.size())
        throw DimensionMismatch("Mesh boundary flags", vertices_.size(), boundary_.size());

    const auto nv = static_cast<int>(vertices_.size());
    areas_.reserve(triangles_.size());
    gradients_.reserve(triangles_.size());
    for (std::size_t k = 0; k < triangles_.size(); ++k) {
        const auto& t = triangles_[k];
        for (int v : t)
            if (v < 0 || v >= nv)
                throw InvalidMesh("triangle " + std::to_string(k) + " references vertex " +
                                  std::to_string(v) + " out of range");
        const Point& a = vertices_[t[0]];
        const Point& b = vertices_[t[1]];
        const Point& c = vertices_[t[2]];
        const double det = signed_double_area(a, b, c);
        if (!(det > 0.0))
            throw InvalidMesh("triangle " + std::to_string(k) +
                              " is degenerate or clockwise");
        areas_.push_back(0.5 * det);

        // grad phi_i = rot90(opposite edge) / (2 |tau|)
        LocalGradients g{};
        for (int i = 0; i < 3; ++i) {
            const Point& p = vertices_[t[(i + 1) % 3]];
            const Point& q = vertices_[t[(i + 2) % 3]];
            g[i] = {(p[1] - q[1]) / det, (q[0] - p[0]) / det};
        }
        gradients_.push_back(g);
        h_ = std::max(h_, inscribed_radius(a, b, c));
    }

    vertex_to_dof_.assign(vertices_.size(), -1);
    for (std::size_t v = 0; v < vertices_.size(); ++v) {
        if (!boundary_[v]) {
            vertex_to_dof_[v] = static_cast<int>(dof_to_vertex_.size());
            dof_to_vertex_.push_back(v);
        }
    }
}

double Mesh::total_area() const
{
    double sum = 0.0;
    for (double a : areas_)
        sum += a;
    return sum;
}

int Mesh::locate(const Point& x, double tol) const
{
    for (std::size_t k = 0; k < triangles_.size(); ++k) {
        const auto& t = triangles_[k];
        const double scale = 2.0 * areas_[k];
        bool inside = true;
        for (int i = 0; i < 3 && inside; ++i) {
            const double s = signed_double_area(vertices_[t[i]], vertices_[t[(i + 1) % 3]], x);
            inside = s >= -tol * scale;
        }
        if (inside)
            return static_cast<int>(k);
    }
    return -1;
}

Mesh build_unit_square_mesh(int n)
{
    if (n < 1)
        throw InvalidArgument("build_unit_square_mesh: n must be >= 1, got " + std::to_string(n));

    const int side = n + 1;
    std::vector<Point> vertices;
    std::vector<bool> boundary;
    vertices.reserve(static_cast<std::size_t>(side) * side);
    boundary.reserve(vertices.capacity());
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
            boundary.push_back(i == 0 || j == 0 || i == n || j == n);
        }
    }

    std::vector<Triangle> triangles;
    triangles.reserve(2 * static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = j * side + i;
            const int v10 = v00 + 1;
            const int v01 = v00 + side;
            const int v11 = v01 + 1;
            triangles.push_back({v00, v10, v11});
            triangles.push_back({v00, v11, v01});
        }
    }
    return Mesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

Mesh build_unit_disk_mesh(int level)
{
    if (level < 0)
        throw InvalidArgument("build_unit_disk_mesh: level must be >= 0, got " +
                              std::to_string(level));

    std::vector<Point> vertices{{0.0, 0.0}};
    std::vector<bool> boundary{false};
    std::vector<Triangle> triangles;
    for (int i = 0; i < 6; ++i) {
        const double theta = i * std::numbers::pi / 3.0;
        vertices.push_back({std::cos(theta), std::sin(theta)});
        boundary.push_back(true);
        triangles.push_back({0, 1 + i, 1 + (i + 1) % 6});
    }

    for (int r = 0; r < level; ++r) {
        // Edges on exactly one triangle lie on the polygon boundary.
        std::map<std::pair<int, int>, int> edge_count;
        for (const auto& t : triangles)
            for (int i = 0; i < 3; ++i) {
                auto e = std::minmax(t[i], t[(i + 1) % 3]);
                ++edge_count[{e.first, e.second}];
            }

        std::map<std::pair<int, int>, int> midpoint;
        auto midpoint_of = [&](int a, int b) {
            auto e = std::minmax(a, b);
            const std::pair<int, int> key{e.first, e.second};
            if (auto it = midpoint.find(key); it != midpoint.end())
                return it->second;
            const Point& pa = vertices[a];
            const Point& pb = vertices[b];
            Point m{0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])};
            const bool on_boundary = edge_count.at(key) == 1;
            if (on_boundary) {
                const double norm = std::hypot(m[0], m[1]);
                m = {m[0] / norm, m[1] / norm};
            }
            const int id = static_cast<int>(vertices.size());
            vertices.push_back(m);
            boundary.push_back(on_boundary);
            midpoint.emplace(key, id);
            return id;
        };

        std::vector<Triangle> refined;
        refined.reserve(4 * triangles.size());
        for (const auto& t : triangles) {
            const int m01 = midpoint_of(t[0], t[1]);
            const int m12 = midpoint_of(t[1], t[2]);
            const int m20 = midpoint_of(t[2], t[0]);
            refined.push_back({t[0], m01, m20});
            refined.push_back({m01, t[1], m12});
            refined.push_back({m20, m12, t[2]});
            refined.push_back({m01, m12, m20});
        }
        triangles = std::move(refined);
    }
    return Mesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

double mesh_parameter(const Mesh& mesh)
{
    double h = 0.0;
    const auto verts = mesh.vertices();
    for (const auto& t : mesh.triangles())
        h = std::max(h, inscribed_radius(verts[t[0]], verts[t[1]], verts[t[2]]));
    return h;
}

void write_node_element(std::ostream& os, const Mesh& mesh)
{
    const auto prec = os.precision(17);
    os << mesh.num_vertices() << ' ' << mesh.num_triangles() << '\n';
    const auto verts = mesh.vertices();
    for (std::size_t v = 0; v < verts.size(); ++v)
        os << verts[v][0] << ' ' << verts[v][1] << ' ' << (mesh.boundary_vertex()[v] ? 1 : 0)
           << '\n';
    for (const auto& t : mesh.triangles())
        os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    os.precision(prec);
}

Mesh read_node_element(std::istream& is)
{
    std::size_t nv = 0;
    std::size_t nt = 0;
    if (!(is >> nv >> nt))
        throw IoError("node/element stream: missing header");
    std::vector<Point> vertices(nv);
    std::vector<bool> boundary(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        int flag = 0;
        if (!(is >> vertices[v][0] >> vertices[v][1] >> flag))
            throw IoError("node/element stream: truncated vertex " + std::to_string(v));
        boundary[v] = flag != 0;
    }
    std::vector<Triangle> triangles(nt);
    for (std::size_t k = 0; k < nt; ++k)
        if (!(is >> triangles[k][0] >> triangles[k][1] >> triangles[k][2]))
            throw IoError("node/element stream: truncated triangle " + std::to_string(k));
    return Mesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

void write_vtk(std::ostream& os, const Mesh& mesh, std::span<const ScalarField> point_data,
               std::span<const ScalarField> cell_data)
{
    const auto prec = os.precision(17);
    os << "# vtk DataFile Version 3.0\n"
       << "hbflow P1 solution\n"
       << "ASCII\n"
       << "DATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.num_vertices() << " double\n";
    for (const auto& p : mesh.vertices())
        os << p[0] << ' ' << p[1] << " 0\n";
    os << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
    for (const auto& t : mesh.triangles())
        os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    os << "CELL_TYPES " << mesh.num_triangles() << '\n';
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k)
        os << "5\n";

    auto write_block = [&os](const char* kind, std::size_t count,
                             std::span<const ScalarField> fields) {
        if (fields.empty())
            return;
        os << kind << ' ' << count << '\n';
        for (const auto& f : fields) {
            if (f.values.size() != count)
                throw DimensionMismatch("write_vtk field '" + f.name + "'", count,
                                        f.values.size());
            os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
            for (double x : f.values)
                os << x << '\n';
        }
    };
    write_block("POINT_DATA", mesh.num_vertices(), point_data);
    write_block("CELL_DATA", mesh.num_triangles(), cell_data);
    os.precision(prec);
}

} // namespace hbflow
