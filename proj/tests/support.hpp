// Shared helpers for the test suites.
#pragma once

#include "hho/mesh.hpp"
#include "hho/mesh_generators.hpp"
#include "hho/quadrature.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace hho::test {

struct CellRef {
    std::shared_ptr<const Mesh> mesh;
    std::size_t cell;
    std::string label;
};

/// One representative of every distinct cell shape produced by the three
/// generators (shapes are compared through their edge vectors up to scaling).
inline std::vector<CellRef> generated_cell_shapes(int level = 2)
{
    std::vector<CellRef> out;
    for (auto family : {MeshFamily::triangular, MeshFamily::cartesian, MeshFamily::hexagonal}) {
        auto mesh = std::make_shared<const Mesh>(generate_mesh_family(family, level));
        std::vector<std::vector<Point>> seen;
        for (std::size_t c = 0; c < mesh->n_cells(); ++c) {
            const auto& T = mesh->cell(c);
            std::vector<Point> edges;
            for (std::size_t i = 0; i < T.vertices.size(); ++i)
                edges.push_back((mesh->vertex(T.vertices[(i + 1) % T.vertices.size()]) -
                                 mesh->vertex(T.vertices[i])) / T.diameter);
            bool found = false;
            for (const auto& s : seen) {
                if (s.size() != edges.size())
                    continue;
                for (std::size_t shift = 0; shift < s.size() && !found; ++shift) {
                    bool same = true;
                    for (std::size_t i = 0; i < s.size() && same; ++i)
                        same = (s[(i + shift) % s.size()] - edges[i]).norm() < 1e-9;
                    found = same;
                }
                if (found)
                    break;
            }
            if (!found) {
                seen.push_back(edges);
                out.push_back({mesh, c, to_string(family) + " cell " + std::to_string(c)});
            }
        }
    }
    return out;
}

/// Brute-force integral over a cell with a high-degree rule.
template <typename F>
double integrate_cell(const Mesh& mesh, std::size_t c, F&& f, int degree = 30)
{
    double s = 0.0;
    for (const auto& qp : mesh.cell_quadrature(c, degree))
        s += qp.weight * f(qp.point);
    return s;
}

template <typename F>
double integrate_face(const Mesh& mesh, std::size_t face, F&& f, int degree = 30)
{
    double s = 0.0;
    for (const auto& qp : mesh.face_quadrature(face, degree))
        s += qp.weight * f(qp.point);
    return s;
}

} // namespace hho::test
