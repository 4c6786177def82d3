#include "hho/probes.hpp"

#include <gtest/gtest.h>

using namespace hho;

namespace {

ProbeReport synthetic(ProbeKind kind, const std::vector<double>& max, double h0 = 0.5)
{
    ProbeReport r;
    r.kind = kind;
    double h = h0;
    for (std::size_t i = 0; i < max.size(); ++i, h /= 2)
        r.levels.push_back({static_cast<int>(i + 1), h, 3, max[i] / 2, max[i], 0.75 * max[i]});
    return r;
}

const ProbeReport& find(const std::vector<ProbeReport>& reports, const std::string& id)
{
    for (const auto& r : reports)
        if (r.id == id)
            return r;
    throw std::runtime_error("missing probe " + id);
}

ProbeOptions options(MeshFamily family, int k, double p, int levels)
{
    ProbeOptions o;
    o.family = family;
    o.k = k;
    o.p = p;
    o.levels = levels;
    return o;
}

} // namespace

TEST(ProbeReport, BandRule)
{
    auto r = synthetic(ProbeKind::band, {1.0, 1.5, 2.0});
    r.evaluate();
    EXPECT_TRUE(r.passed);
    r = synthetic(ProbeKind::band, {1.0, 1.5, 2.01});
    r.evaluate();
    EXPECT_FALSE(r.passed);
    r = synthetic(ProbeKind::band, {0.0, 0.0});
    r.evaluate();
    EXPECT_TRUE(r.passed);
    r = synthetic(ProbeKind::band, {0.0, 1e-300});
    r.evaluate();
    EXPECT_FALSE(r.passed);
}

TEST(ProbeReport, SlopeRule)
{
    // max = h^2 on the last three levels; the first level is off the line.
    auto r = synthetic(ProbeKind::slope, {7.0, 1.0 / 16, 1.0 / 64, 1.0 / 256});
    r.expected_slope = 2.0;
    r.slope_tolerance = 1e-12;
    r.evaluate();
    EXPECT_TRUE(r.passed);
    EXPECT_NEAR(r.slope, 2.0, 1e-12);
    r.expected_slope = 2.5;
    r.slope_tolerance = 0.3;
    r.evaluate();
    EXPECT_FALSE(r.passed);
}

TEST(ProbeReport, DegenerateData)
{
    auto r = synthetic(ProbeKind::band, {1.0});
    r.evaluate();
    EXPECT_FALSE(r.passed);
    EXPECT_FALSE(r.note.empty());
    r = synthetic(ProbeKind::band, {1.0, nan_value});
    r.evaluate();
    EXPECT_FALSE(r.passed);
    EXPECT_NE(r.note.find("level 2"), std::string::npos);
    EXPECT_FALSE(all_passed({}));
}

TEST(Probes, SobolevExponent)
{
    EXPECT_DOUBLE_EQ(sobolev_exponent(1.5), 6.0);
    EXPECT_DOUBLE_EQ(sobolev_exponent(1.2), 3.0);
    EXPECT_TRUE(std::isinf(sobolev_exponent(2.0)));
    EXPECT_TRUE(std::isinf(sobolev_exponent(3.0)));
}

TEST(Probes, ProjectorReproducesPolynomials)
{
    // pi^k f = f for f in P^k, so every stability ratio is exactly 1.
    std::mt19937_64 rng(11);
    const Mesh mesh = generate_mesh_family(MeshFamily::hexagonal, 2);
    for (int k : {0, 1, 2, 3})
        for (std::size_t c = 0; c < mesh.n_cells(); c += 5) {
            const detail::CellPolynomials P(mesh, c, k, 2 * k + 6);
            const auto f = random_polynomial(rng, k, mesh.cell(c).centroid, mesh.cell(c).diameter);
            const Vector coef = P.project(f.function());
            for (double p : {1.5, 2.0, 4.0}) {
                const double pf = detail::cell_seminorm(P.quad, P.polynomial(coef), 0, p);
                const double ff = detail::cell_seminorm(P.quad, f.derivative, 0, p);
                EXPECT_NEAR(pf / ff, 1.0, 1e-12);
                EXPECT_LT(detail::cell_seminorm(P.quad, P.error(f, coef), 0, p), 1e-12 * ff);
            }
        }
}

TEST(Probes, OptionsValidation)
{
    auto o = options(MeshFamily::triangular, 1, 1.0, 3);
    EXPECT_THROW(o.validate(), InputError);
    o.p = 2.0;
    o.levels = 1;
    EXPECT_THROW(o.validate(), InputError);
    o.levels = 3;
    o.first_level = max_mesh_level;
    EXPECT_THROW(o.validate(), InputError);
    o.first_level = 1;
    o.samples = 0;
    EXPECT_THROW(o.validate(), InputError);
    EXPECT_THROW(run_probe_suite("nonsense", options(MeshFamily::triangular, 1, 2.0, 3)), InputError);
}

TEST(Probes, ProjectorRatesForExponential)
{
    const auto reports = verify_projector_lemmas(options(MeshFamily::triangular, 2, 3.0, 5));
    const auto& cell = find(reports, "approx_cell_rate_s3_m0");
    EXPECT_NEAR(cell.slope, 3.0, 0.3);
    EXPECT_TRUE(cell.passed);
    const auto& trace = find(reports, "approx_trace_rate_s1_m0");
    EXPECT_NEAR(trace.slope, 1.0, 0.3);
    EXPECT_TRUE(trace.passed);
    for (const auto& r : reports) {
        EXPECT_TRUE(r.passed) << r.id << " " << r.note;
        EXPECT_EQ(r.seed, 20170623u);
        EXPECT_EQ(r.levels.size(), 5u);
        EXPECT_EQ(r.family, "triangular");
    }
}

TEST(Probes, LowestOrderLebesgueRatiosAreOne)
{
    // Constants saturate the direct and reverse Lebesgue embeddings.
    const auto reports = verify_functional_inequalities(options(MeshFamily::cartesian, 0, 2.0, 3));
    int seen = 0;
    for (const auto& r : reports)
        if (r.id.rfind("lebesgue", 0) == 0) {
            ++seen;
            for (const auto& l : r.levels) {
                EXPECT_NEAR(l.min, 1.0, 1e-12) << r.id;
                EXPECT_NEAR(l.max, 1.0, 1e-12) << r.id;
            }
        }
    EXPECT_GE(seen, 6);
    for (const auto& id : {"lebesgue_q4_m2", "lebesgue_reverse_q2_m4", "lebesgue_qinf_m1"})
        EXPECT_NO_THROW(find(reports, id));
    EXPECT_TRUE(all_passed(reports));
}

TEST(Probes, SeededRunsAreReproducible)
{
    auto o = options(MeshFamily::hexagonal, 1, 1.5, 2);
    const auto a = verify_projector_lemmas(o);
    const auto b = verify_projector_lemmas(o);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a[i].levels.size(), b[i].levels.size());
        for (std::size_t j = 0; j < a[i].levels.size(); ++j) {
            EXPECT_EQ(a[i].levels[j].max, b[i].levels[j].max) << a[i].id;
            EXPECT_EQ(a[i].levels[j].mean, b[i].levels[j].mean) << a[i].id;
        }
    }
    o.seed = 7;
    const auto c = verify_projector_lemmas(o);
    EXPECT_EQ(c.front().seed, 7u);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        differs = differs || a[i].levels.back().mean != c[i].levels.back().mean;
    EXPECT_TRUE(differs);
}
