// Two-dimensional polytopal meshes.
//
// A mesh is built from a vertex list and counterclockwise vertex loops.
// Faces, adjacency, outward normals and all geometric quantities are derived
// here and never read from input. Each cell carries a simplicial subdivision
// (the cell itself for triangles, a fan from the centroid otherwise) that is
// used both for quadrature and for the shape-regularity estimate.
#pragma once

#include "hho/common.hpp"
#include "hho/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace hho {

struct Face {
    std::array<std::size_t, 2> vertices{};
    /// Adjacent cells; `cells[1] == npos` on the boundary.
    std::array<std::size_t, 2> cells{npos, npos};
    /// Unit normal pointing out of `cells[0]`.
    Point normal = Point::Zero();
    /// Unit tangent from `vertices[0]` to `vertices[1]`.
    Point tangent = Point::Zero();
    Point midpoint = Point::Zero();
    double length = 0.0;
    double diameter = 0.0;

    bool is_boundary() const { return cells[1] == npos; }
};

struct Triangle {
    std::array<Point, 3> vertices;
    double area = 0.0;
    double diameter = 0.0;
    double inradius = 0.0;
};

struct Cell {
    /// Counterclockwise vertex loop.
    std::vector<std::size_t> vertices;
    /// `faces[i]` joins `vertices[i]` and `vertices[i + 1]`.
    std::vector<std::size_t> faces;
    /// +1 when the stored face normal points out of this cell, -1 otherwise.
    std::vector<int> orientations;
    std::vector<Triangle> subdivision;
    Point centroid = Point::Zero();
    double area = 0.0;
    double diameter = 0.0;

    std::size_t n_faces() const { return faces.size(); }
};

struct MeshQualityReport {
    double h = 0.0;
    double regularity = 0.0; // estimated rho
    std::size_t max_faces_per_cell = 0;
    std::size_t max_simplices_per_cell = 0;
    std::size_t n_cells = 0;
    std::size_t n_faces = 0;
    std::size_t n_boundary_faces = 0;
};

class Mesh {
public:
    Mesh() = default;

    /// Builds and validates a mesh from vertices and cell loops. Clockwise
    /// loops are reoriented.
    static Mesh from_polygons(std::vector<Point> vertices,
                              std::vector<std::vector<std::size_t>> loops);

    int dimension() const { return 2; }
    std::size_t n_vertices() const { return vertices_.size(); }
    std::size_t n_cells() const { return cells_.size(); }
    std::size_t n_faces() const { return faces_.size(); }

    const Point& vertex(std::size_t i) const { return vertices_[i]; }
    const Cell& cell(std::size_t i) const { return cells_[i]; }
    const Face& face(std::size_t i) const { return faces_[i]; }
    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<Cell>& cells() const { return cells_; }
    const std::vector<Face>& faces() const { return faces_; }

    /// Outward unit normal of the `local`-th face of cell `c`.
    Point outward_normal(std::size_t c, std::size_t local) const
    {
        const auto& T = cells_[c];
        return static_cast<double>(T.orientations[local]) * faces_[T.faces[local]].normal;
    }

    /// Largest cell diameter.
    double h() const
    {
        double h = 0.0;
        for (const auto& T : cells_)
            h = std::max(h, T.diameter);
        return h;
    }

    double total_area() const
    {
        double a = 0.0;
        for (const auto& T : cells_)
            a += T.area;
        return a;
    }

    double boundary_length() const
    {
        double l = 0.0;
        for (const auto& F : faces_)
            if (F.is_boundary())
                l += F.length;
        return l;
    }

    QuadratureRule cell_quadrature(std::size_t c, int degree) const
    {
        QuadratureRule rule;
        rule.degree = degree;
        for (const auto& S : cells_[c].subdivision)
            append_triangle_quadrature(S.vertices[0], S.vertices[1], S.vertices[2], degree, rule);
        return rule;
    }

    QuadratureRule face_quadrature(std::size_t f, int degree) const
    {
        const auto& F = faces_[f];
        return segment_quadrature(vertices_[F.vertices[0]], vertices_[F.vertices[1]], degree);
    }

    MeshQualityReport quality_report() const;

    /// Writes the mesh in the plain text format read by `load_mesh`.
    void write(std::ostream& os) const;

private:
    std::vector<Point> vertices_;
    std::vector<Cell> cells_;
    std::vector<Face> faces_;
};

namespace detail {

inline double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

inline double signed_area(const std::vector<Point>& pts)
{
    double a = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        a += cross(pts[i], pts[(i + 1) % pts.size()]);
    return 0.5 * a;
}

inline Triangle make_triangle(const Point& a, const Point& b, const Point& c)
{
    Triangle S{{a, b, c}};
    S.area = 0.5 * cross(b - a, c - a);
    const double l0 = (b - a).norm(), l1 = (c - b).norm(), l2 = (a - c).norm();
    S.diameter = std::max({l0, l1, l2});
    S.inradius = 2.0 * std::abs(S.area) / (l0 + l1 + l2);
    return S;
}

} // namespace detail

inline Mesh Mesh::from_polygons(std::vector<Point> vertices,
                                std::vector<std::vector<std::size_t>> loops)
{
    Mesh mesh;
    mesh.vertices_ = std::move(vertices);
    if (loops.empty())
        throw InputError("mesh has no cells");

    std::map<std::pair<std::size_t, std::size_t>, std::size_t> face_of_edge;
    mesh.cells_.resize(loops.size());

    for (std::size_t c = 0; c < loops.size(); ++c) {
        auto& loop = loops[c];
        if (loop.size() < 3)
            throw InputError("cell " + std::to_string(c) + " has fewer than 3 vertices");
        for (auto v : loop)
            if (v >= mesh.vertices_.size())
                throw InputError("cell " + std::to_string(c) + " references vertex " +
                                 std::to_string(v) + " out of range");
        for (std::size_t i = 0; i < loop.size(); ++i)
            for (std::size_t j = i + 1; j < loop.size(); ++j)
                if (loop[i] == loop[j])
                    throw InputError("cell " + std::to_string(c) + " repeats vertex " +
                                     std::to_string(loop[i]));

        std::vector<Point> pts;
        pts.reserve(loop.size());
        for (auto v : loop)
            pts.push_back(mesh.vertices_[v]);
        double area = detail::signed_area(pts);
        if (area < 0.0) {
            std::reverse(loop.begin(), loop.end());
            std::reverse(pts.begin(), pts.end());
            area = -area;
        }

        double scale = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                scale = std::max(scale, (pts[i] - pts[j]).norm());
        if (!(area > 1e-14 * scale * scale))
            throw GeometryError("cell " + std::to_string(c) + " is degenerate (zero area)");

        Cell& T = mesh.cells_[c];
        T.vertices = loop;
        T.area = area;
        T.diameter = scale;

        // Area-weighted centroid.
        Point centroid = Point::Zero();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto& a = pts[i];
            const auto& b = pts[(i + 1) % pts.size()];
            centroid += detail::cross(a, b) * (a + b);
        }
        T.centroid = centroid / (6.0 * area);

        if (pts.size() == 3) {
            T.subdivision.push_back(detail::make_triangle(pts[0], pts[1], pts[2]));
        }
        else {
            for (std::size_t i = 0; i < pts.size(); ++i) {
                auto S = detail::make_triangle(T.centroid, pts[i], pts[(i + 1) % pts.size()]);
                if (!(S.area > 1e-12 * scale * scale))
                    throw GeometryError("cell " + std::to_string(c) +
                                        " is inverted or not star-shaped with respect to its centroid");
                T.subdivision.push_back(S);
            }
        }

        for (std::size_t i = 0; i < loop.size(); ++i) {
            const std::size_t a = loop[i];
            const std::size_t b = loop[(i + 1) % loop.size()];
            const auto key = std::minmax(a, b);
            auto it = face_of_edge.find({key.first, key.second});
            if (it == face_of_edge.end()) {
                Face F;
                F.vertices = {a, b};
                F.cells = {c, npos};
                face_of_edge[{key.first, key.second}] = mesh.faces_.size();
                T.faces.push_back(mesh.faces_.size());
                T.orientations.push_back(1);
                mesh.faces_.push_back(F);
            }
            else {
                Face& F = mesh.faces_[it->second];
                if (F.cells[1] != npos)
                    throw InputError("non-manifold face between vertices " + std::to_string(a) +
                                     " and " + std::to_string(b) + " (shared by more than 2 cells)");
                if (F.cells[0] == c)
                    throw InputError("cell " + std::to_string(c) + " uses an edge twice");
                if (F.vertices[0] != b)
                    throw GeometryError("cells " + std::to_string(F.cells[0]) + " and " +
                                        std::to_string(c) + " overlap (shared edge traversed in the same direction)");
                F.cells[1] = c;
                T.faces.push_back(it->second);
                T.orientations.push_back(-1);
            }
        }
    }

    for (auto& F : mesh.faces_) {
        const Point& a = mesh.vertices_[F.vertices[0]];
        const Point& b = mesh.vertices_[F.vertices[1]];
        F.length = (b - a).norm();
        F.diameter = F.length;
        F.tangent = (b - a) / F.length;
        F.normal = Point(F.tangent.y(), -F.tangent.x());
        F.midpoint = 0.5 * (a + b);
    }

    for (std::size_t c = 0; c < mesh.cells_.size(); ++c) {
        const auto& T = mesh.cells_[c];
        for (std::size_t i = 0; i < T.n_faces(); ++i) {
            const auto& F = mesh.faces_[T.faces[i]];
            if (mesh.outward_normal(c, i).dot(F.midpoint - T.centroid) <= 0.0)
                throw GeometryError("cell " + std::to_string(c) + " has an inward-pointing face normal");
        }
    }
    return mesh;
}

inline MeshQualityReport Mesh::quality_report() const
{
    MeshQualityReport r;
    r.n_cells = cells_.size();
    r.n_faces = faces_.size();
    r.regularity = 1.0;
    for (const auto& F : faces_)
        if (F.is_boundary())
            ++r.n_boundary_faces;
    for (const auto& T : cells_) {
        r.h = std::max(r.h, T.diameter);
        r.max_faces_per_cell = std::max(r.max_faces_per_cell, T.n_faces());
        r.max_simplices_per_cell = std::max(r.max_simplices_per_cell, T.subdivision.size());
        for (const auto& S : T.subdivision) {
            r.regularity = std::min(r.regularity, S.inradius / S.diameter);
            r.regularity = std::min(r.regularity, S.diameter / T.diameter);
        }
    }
    return r;
}

inline void Mesh::write(std::ostream& os) const
{
    std::ostringstream out;
    out.precision(17);
    out << "DIM 2\n";
    out << "VERTICES " << vertices_.size() << '\n';
    for (const auto& v : vertices_)
        out << v.x() << ' ' << v.y() << '\n';
    out << "CELLS " << cells_.size() << '\n';
    for (const auto& T : cells_) {
        out << T.vertices.size();
        for (auto v : T.vertices)
            out << ' ' << v;
        out << '\n';
    }
    os << out.str();
}

/// Parses the text mesh format:
///
///     DIM 2
///     VERTICES n
///     x y            (n lines)
///     CELLS m
///     count v1 ... vcount   (m lines, 0-based)
///
/// Blank lines and lines starting with '#' are ignored.
inline Mesh load_mesh(std::istream& is)
{
    std::vector<std::string> lines;
    for (std::string line; std::getline(is, line);) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        lines.push_back(line.substr(first));
    }
    std::size_t pos = 0;
    auto next = [&](const char* what) -> std::istringstream {
        if (pos >= lines.size())
            throw InputError(std::string("unexpected end of mesh file while reading ") + what);
        return std::istringstream(lines[pos++]);
    };
    auto header = [&](const std::string& keyword) {
        auto ss = next(keyword.c_str());
        std::string word;
        long long value = -1;
        ss >> word >> value;
        if (word != keyword || ss.fail() || value < 0)
            throw InputError("expected '" + keyword + " <n>' at line " + std::to_string(pos));
        return static_cast<std::size_t>(value);
    };

    if (header("DIM") != 2)
        throw InputError("only DIM 2 meshes are supported");
    const std::size_t nv = header("VERTICES");
    std::vector<Point> vertices(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        auto ss = next("vertex");
        double x, y;
        if (!(ss >> x >> y) || !std::isfinite(x) || !std::isfinite(y))
            throw InputError("malformed vertex line " + std::to_string(pos));
        vertices[i] = Point(x, y);
    }
    const std::size_t nc = header("CELLS");
    std::vector<std::vector<std::size_t>> loops(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        auto ss = next("cell");
        long long count;
        if (!(ss >> count) || count < 3)
            throw InputError("malformed cell line " + std::to_string(pos));
        for (long long i = 0; i < count; ++i) {
            long long v;
            if (!(ss >> v) || v < 0)
                throw InputError("malformed cell line " + std::to_string(pos));
            loops[c].push_back(static_cast<std::size_t>(v));
        }
    }
    return Mesh::from_polygons(std::move(vertices), std::move(loops));
}

inline Mesh load_mesh_string(const std::string& text)
{
    std::istringstream is(text);
    return load_mesh(is);
}

} // namespace hho
