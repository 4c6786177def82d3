#include "hho/mesh.hpp"
#include "hho/mesh_generators.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace hho;

namespace {

const char* const two_by_two = R"(DIM 2
VERTICES 9
0 0
0.5 0
1 0
0 0.5
0.5 0.5
1 0.5
0 1
0.5 1
1 1
CELLS 4
4 0 1 4 3
4 1 2 5 4
4 3 4 7 6
4 4 5 8 7
)";

void expect_valid(const Mesh& mesh)
{
    double area = 0.0;
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        const auto& T = mesh.cell(c);
        EXPECT_GT(T.area, 0.0);
        area += T.area;
        Point closure = Point::Zero();
        for (std::size_t i = 0; i < T.n_faces(); ++i)
            closure += mesh.face(T.faces[i]).length * mesh.outward_normal(c, i);
        EXPECT_LT(closure.norm(), 1e-12 * T.diameter);
        double sub = 0.0;
        for (const auto& S : T.subdivision)
            sub += S.area;
        EXPECT_NEAR(sub, T.area, 1e-12 * T.area);
    }
    EXPECT_NEAR(area, 1.0, 1e-12);
    EXPECT_NEAR(mesh.boundary_length(), 4.0, 1e-12);

    const auto q = mesh.quality_report();
    EXPECT_GT(q.regularity, 0.0);
    EXPECT_LE(q.regularity, 1.0);
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        const auto& T = mesh.cell(c);
        for (auto f : T.faces) {
            const auto& F = mesh.face(f);
            EXPECT_LE(q.regularity * q.regularity * T.diameter, F.diameter);
            EXPECT_LE(F.diameter, T.diameter * (1 + 1e-14));
        }
    }
    for (const auto& F : mesh.faces()) {
        ASSERT_NE(F.cells[0], npos);
        if (!F.is_boundary()) {
            const auto& T0 = mesh.cell(F.cells[0]);
            const auto& T1 = mesh.cell(F.cells[1]);
            Point n0 = Point::Zero(), n1 = Point::Zero();
            for (std::size_t i = 0; i < T0.n_faces(); ++i)
                if (&mesh.face(T0.faces[i]) == &F)
                    n0 = mesh.outward_normal(F.cells[0], i);
            for (std::size_t i = 0; i < T1.n_faces(); ++i)
                if (&mesh.face(T1.faces[i]) == &F)
                    n1 = mesh.outward_normal(F.cells[1], i);
            EXPECT_EQ((n0 + n1).norm(), 0.0);
        }
    }
}

} // namespace

TEST(Mesh, CartesianCounts)
{
    const auto mesh = generate_mesh_family(MeshFamily::cartesian, 1);
    EXPECT_EQ(mesh.n_cells(), 4u);
    EXPECT_EQ(mesh.n_faces(), 12u);
    EXPECT_EQ(mesh.n_vertices(), 9u);
    EXPECT_EQ(mesh.quality_report().n_boundary_faces, 8u);
}

TEST(Mesh, TriangularCounts)
{
    const auto mesh = generate_mesh_family(MeshFamily::triangular, 1);
    EXPECT_EQ(mesh.n_cells(), 8u);
    EXPECT_EQ(mesh.n_faces(), 16u);
    EXPECT_EQ(mesh.quality_report().max_faces_per_cell, 3u);
}

TEST(Mesh, AllFamiliesValidAcrossLevels)
{
    for (auto family : {MeshFamily::triangular, MeshFamily::cartesian, MeshFamily::hexagonal}) {
        double previous_h = 1e300;
        double rho_min = 1.0, rho_max = 0.0;
        std::size_t nd_max = 0, ns_max = 0;
        for (int level = 0; level <= 6; ++level) {
            SCOPED_TRACE(to_string(family) + " level " + std::to_string(level));
            const auto mesh = generate_mesh_family(family, level);
            expect_valid(mesh);
            const auto q = mesh.quality_report();
            EXPECT_LT(q.h, previous_h);
            if (level > 1 && previous_h < 1e300) {
                EXPECT_GT(q.h, previous_h / 2.0 / 1.5);
                EXPECT_LT(q.h, previous_h / 2.0 * 1.5);
            }
            previous_h = q.h;
            rho_min = std::min(rho_min, q.regularity);
            rho_max = std::max(rho_max, q.regularity);
            nd_max = std::max(nd_max, q.max_faces_per_cell);
            ns_max = std::max(ns_max, q.max_simplices_per_cell);
        }
        EXPECT_GT(rho_min, 0.05) << to_string(family);
        EXPECT_LE(nd_max, 7u);
        EXPECT_LE(ns_max, 7u);
    }
}

TEST(Mesh, HexagonalLevelTwo)
{
    const auto mesh = generate_mesh_family(MeshFamily::hexagonal, 2);
    const auto q = mesh.quality_report();
    EXPECT_GT(q.regularity, 0.0);
    EXPECT_EQ(q.max_faces_per_cell, 6u);
    std::size_t hexagons = 0;
    for (const auto& T : mesh.cells())
        hexagons += T.n_faces() == 6;
    EXPECT_GT(hexagons, mesh.n_cells() / 3);
    expect_valid(mesh);
}

TEST(Mesh, CartesianRegularityConstantAcrossLevels)
{
    const double rho1 = generate_mesh_family(MeshFamily::cartesian, 1).quality_report().regularity;
    for (int level = 2; level <= 5; ++level)
        EXPECT_NEAR(generate_mesh_family(MeshFamily::cartesian, level).quality_report().regularity, rho1, 5e-3);
}

TEST(Mesh, LevelOutOfRange)
{
    EXPECT_THROW(generate_mesh_family(MeshFamily::cartesian, -1), InputError);
    EXPECT_THROW(generate_mesh_family(MeshFamily::cartesian, max_mesh_level + 1), InputError);
}

TEST(Mesh, UnitSquareGeometry)
{
    const auto mesh = Mesh::from_polygons({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2, 3}});
    const auto& T = mesh.cell(0);
    EXPECT_NEAR(T.diameter, std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(T.area, 1.0, 1e-15);
    EXPECT_NEAR((T.centroid - Point(0.5, 0.5)).norm(), 0.0, 1e-15);
    EXPECT_EQ(T.subdivision.size(), 4u);
}

TEST(Mesh, RightTriangleGeometry)
{
    const auto mesh = Mesh::from_polygons({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
    EXPECT_NEAR(mesh.cell(0).area, 0.5, 1e-15);
    EXPECT_NEAR(mesh.cell(0).diameter, std::sqrt(2.0), 1e-15);
    EXPECT_EQ(mesh.cell(0).subdivision.size(), 1u);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& F = mesh.face(mesh.cell(0).faces[i]);
        EXPECT_GT(mesh.outward_normal(0, i).dot(F.midpoint - mesh.cell(0).centroid), 0.0);
    }
}

TEST(Mesh, LoadMatchesGenerator)
{
    const auto loaded = load_mesh_string(two_by_two);
    const auto generated = generate_mesh_family(MeshFamily::cartesian, 1);
    ASSERT_EQ(loaded.n_cells(), generated.n_cells());
    ASSERT_EQ(loaded.n_faces(), generated.n_faces());
    ASSERT_EQ(loaded.n_vertices(), generated.n_vertices());
    for (std::size_t i = 0; i < loaded.n_vertices(); ++i)
        EXPECT_EQ(loaded.vertex(i), generated.vertex(i));
    for (std::size_t c = 0; c < loaded.n_cells(); ++c) {
        EXPECT_EQ(loaded.cell(c).vertices, generated.cell(c).vertices);
        EXPECT_EQ(loaded.cell(c).faces, generated.cell(c).faces);
    }
}

TEST(Mesh, WriteLoadRoundTrip)
{
    for (auto family : {MeshFamily::triangular, MeshFamily::cartesian, MeshFamily::hexagonal}) {
        const auto mesh = generate_mesh_family(family, 2);
        std::ostringstream os;
        mesh.write(os);
        const auto back = load_mesh_string(os.str());
        ASSERT_EQ(back.n_cells(), mesh.n_cells());
        ASSERT_EQ(back.n_faces(), mesh.n_faces());
        for (std::size_t i = 0; i < mesh.n_vertices(); ++i)
            EXPECT_EQ(back.vertex(i), mesh.vertex(i));
    }
}

TEST(Mesh, NonManifoldFaceRejected)
{
    const char* text = R"(DIM 2
VERTICES 5
0 0
1 0
0.5 1
0.5 -1
2 0.5
CELLS 3
3 0 1 2
3 1 0 3
3 0 1 4
)";
    try {
        load_mesh_string(text);
        FAIL() << "expected an error";
    }
    catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("non-manifold"), std::string::npos);
    }
}

TEST(Mesh, ClockwiseLoopReoriented)
{
    const auto mesh = load_mesh_string("DIM 2\nVERTICES 3\n0 0\n1 0\n0 1\nCELLS 1\n3 0 2 1\n");
    EXPECT_NEAR(mesh.cell(0).area, 0.5, 1e-15);
    EXPECT_EQ(mesh.cell(0).vertices, (std::vector<std::size_t>{1, 2, 0}));
}

TEST(Mesh, DegenerateCellRejected)
{
    EXPECT_THROW(Mesh::from_polygons({{0, 0}, {1, 0}, {2, 0}}, {{0, 1, 2}}), GeometryError);
}

TEST(Mesh, NonStarShapedRejected)
{
    // A thin "C" shape whose centroid lies outside the cell.
    const std::vector<Point> v{{0, 0}, {3, 0}, {3, 0.2}, {0.2, 0.2}, {0.2, 2.8}, {3, 2.8}, {3, 3}, {0, 3}};
    EXPECT_THROW(Mesh::from_polygons(v, {{0, 1, 2, 3, 4, 5, 6, 7}}), GeometryError);
}

TEST(Mesh, ParseErrors)
{
    EXPECT_THROW(load_mesh_string(""), InputError);
    EXPECT_THROW(load_mesh_string("DIM 3\n"), InputError);
    EXPECT_THROW(load_mesh_string("DIM 2\nVERTICES 2\n0 0\n"), InputError);
    EXPECT_THROW(load_mesh_string("DIM 2\nVERTICES 3\n0 0\n1 0\n0 1\nCELLS 1\n3 0 1 7\n"), InputError);
    EXPECT_THROW(load_mesh_string("DIM 2\nVERTICES 3\n0 0\n1 x\n0 1\nCELLS 1\n3 0 1 2\n"), InputError);
}

TEST(Mesh, CommentsAndBlankLinesIgnored)
{
    const auto mesh = load_mesh_string("# header\nDIM 2\n\nVERTICES 3\n0 0\n1 0\n# mid\n0 1\nCELLS 1\n3 0 1 2\n");
    EXPECT_EQ(mesh.n_cells(), 1u);
}
