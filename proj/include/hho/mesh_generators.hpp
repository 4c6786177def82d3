// Structured mesh families on the unit square.
#pragma once

#include "hho/mesh.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace hho {

enum class MeshFamily { triangular, cartesian, hexagonal };

inline constexpr int max_mesh_level = 8;

inline std::string to_string(MeshFamily f)
{
    switch (f) {
    case MeshFamily::triangular: return "triangular";
    case MeshFamily::cartesian: return "cartesian";
    case MeshFamily::hexagonal: return "hexagonal";
    }
    return "unknown";
}

inline MeshFamily parse_mesh_family(const std::string& name)
{
    if (name == "triangular" || name == "tri")
        return MeshFamily::triangular;
    if (name == "cartesian" || name == "cart" || name == "quad")
        return MeshFamily::cartesian;
    if (name == "hexagonal" || name == "hex")
        return MeshFamily::hexagonal;
    throw InputError("unknown mesh family '" + name + "'");
}

struct MeshFamilySpec {
    MeshFamily family = MeshFamily::triangular;
    int level = 0;
};

namespace detail {

inline Mesh grid_mesh(int n, bool split)
{
    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
    const auto id = [n](int i, int j) { return static_cast<std::size_t>(j * (n + 1) + i); };

    std::vector<std::vector<std::size_t>> cells;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            if (split) {
                cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
                cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
            }
            else {
                cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
            }
        }
    return Mesh::from_polygons(std::move(vertices), std::move(cells));
}

// Hexagons are built on an integer lattice: x = X * R / 2 and y = Y * dy / 2,
// so that every vertex, including those created by clipping against the
// square, has exact integer lattice coordinates.
inline Mesh hexagonal_mesh(int columns)
{
    const double R = 2.0 / (3.0 * columns);
    const long rows = std::max<long>(1, std::lround(1.0 / (std::sqrt(3.0) * R)));
    const double dy = 1.0 / static_cast<double>(rows);
    const long xmax = 3L * columns;
    const long ymax = 2L * rows;

    using LatticePoint = std::array<double, 2>;
    const auto clip = [](const std::vector<LatticePoint>& poly, int axis, double bound, bool keep_below) {
        std::vector<LatticePoint> out;
        const auto inside = [&](const LatticePoint& p) {
            return keep_below ? p[axis] <= bound : p[axis] >= bound;
        };
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const auto& a = poly[i];
            const auto& b = poly[(i + 1) % poly.size()];
            if (inside(a))
                out.push_back(a);
            if (inside(a) != inside(b)) {
                const double t = (bound - a[axis]) / (b[axis] - a[axis]);
                LatticePoint q{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
                q[0] = std::round(q[0]);
                q[1] = std::round(q[1]);
                out.push_back(q);
            }
        }
        // Drop consecutive duplicates created by vertices on the clip line.
        std::vector<LatticePoint> clean;
        for (const auto& p : out)
            if (clean.empty() || clean.back() != p)
                clean.push_back(p);
        while (clean.size() > 1 && clean.front() == clean.back())
            clean.pop_back();
        return clean;
    };

    std::map<std::pair<long, long>, std::size_t> vertex_id;
    std::vector<Point> vertices;
    std::vector<std::vector<std::size_t>> cells;

    // Flat-top hexagon offsets in lattice units, counterclockwise.
    const long hx[6] = {2, 1, -1, -2, -1, 1};
    const long hy[6] = {0, 1, 1, 0, -1, -1};

    for (long i = 0; i <= columns; ++i) {
        const long parity = i % 2;
        for (long j = -1; j <= rows; ++j) {
            const long cx = 3 * i;
            const long cy = 2 * j + parity;
            std::vector<LatticePoint> poly;
            for (int v = 0; v < 6; ++v)
                poly.push_back({static_cast<double>(cx + hx[v]), static_cast<double>(cy + hy[v])});
            poly = clip(poly, 0, 0.0, false);
            if (poly.size() >= 3) poly = clip(poly, 0, static_cast<double>(xmax), true);
            if (poly.size() >= 3) poly = clip(poly, 1, 0.0, false);
            if (poly.size() >= 3) poly = clip(poly, 1, static_cast<double>(ymax), true);
            if (poly.size() < 3)
                continue;
            double area2 = 0.0;
            for (std::size_t a = 0; a < poly.size(); ++a) {
                const auto& p = poly[a];
                const auto& q = poly[(a + 1) % poly.size()];
                area2 += p[0] * q[1] - p[1] * q[0];
            }
            if (area2 <= 0.5)
                continue;
            std::vector<std::size_t> loop;
            for (const auto& p : poly) {
                const std::pair<long, long> key{std::lround(p[0]), std::lround(p[1])};
                auto it = vertex_id.find(key);
                if (it == vertex_id.end()) {
                    it = vertex_id.emplace(key, vertices.size()).first;
                    const double x = key.first == xmax ? 1.0 : key.first * R / 2.0;
                    const double y = key.second == ymax ? 1.0 : key.second * dy / 2.0;
                    vertices.emplace_back(x, y);
                }
                loop.push_back(it->second);
            }
            cells.push_back(std::move(loop));
        }
    }
    return Mesh::from_polygons(std::move(vertices), std::move(cells));
}

} // namespace detail

/// Generates a member of a refined mesh family on (0,1)^2. Level l uses
/// 2^l subdivisions per side (grid families) or 2^l + 1 hexagon columns.
inline Mesh generate_mesh_family(const MeshFamilySpec& spec)
{
    if (spec.level < 0 || spec.level > max_mesh_level)
        throw InputError("mesh level " + std::to_string(spec.level) + " outside [0, " +
                         std::to_string(max_mesh_level) + "]");
    const int n = 1 << spec.level;
    switch (spec.family) {
    case MeshFamily::triangular: return detail::grid_mesh(n, true);
    case MeshFamily::cartesian: return detail::grid_mesh(n, false);
    case MeshFamily::hexagonal: return detail::hexagonal_mesh(n + 1);
    }
    throw InputError("unknown mesh family");
}

inline Mesh generate_mesh_family(MeshFamily family, int level)
{
    return generate_mesh_family(MeshFamilySpec{family, level});
}

} // namespace hho
