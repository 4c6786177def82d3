#include "hho/manufactured.hpp"
#include "hho/mesh_generators.hpp"
#include "hho/solver.hpp"

#include <gtest/gtest.h>

using namespace hho;

namespace {

std::shared_ptr<const HhoSpace> make_space(MeshFamily family, int level, int k, int l)
{
    return std::make_shared<const HhoSpace>(std::make_shared<const Mesh>(generate_mesh_family(family, level)),
                                            HhoDegrees{k, l});
}

/// Manufactured Dirichlet problem for u = exp(x + pi y) and the p-Laplacian.
ProblemBuilder exp_builder(std::shared_ptr<const HhoSpace> space)
{
    return [space](double p) {
        const auto u = exp_solution();
        return make_problem(space, make_plaplace(p), [p](const Point& x) { return exp_plaplace_source(x, p); },
                            BoundaryCondition::dirichlet(u.function()));
    };
}

double relative_difference(const Vector& a, const Vector& b) { return (a - b).norm() / b.norm(); }

} // namespace

TEST(Newton, LinearProblemOneIteration)
{
    const auto S = make_space(MeshFamily::hexagonal, 2, 1, 1);
    const auto P = exp_builder(S)(2.0);
    for (bool condense : {true, false}) {
        SolveOptions o;
        o.condense = condense;
        const auto r = newton_solve(P, o);
        EXPECT_EQ(r.report.stages.size(), 1u);
        EXPECT_EQ(r.report.stages[0].iterations, 1);
        EXPECT_TRUE(r.report.converged());
        EXPECT_LE(r.report.final_residual(), r.report.stages[0].tolerance);
    }
}

TEST(Newton, PFourTriangularEightByEight)
{
    const auto S = make_space(MeshFamily::triangular, 3, 1, 1);
    const auto build = exp_builder(S);
    const auto r = solve(build, 4.0);
    ASSERT_TRUE(r.report.converged());
    const auto& last = r.report.stages.back();
    EXPECT_EQ(last.p, 4.0);
    const double load = assemble_system(build(4.0), r.solution).load.norm();
    EXPECT_LE(last.final_residual(), 1e-10 * load);
}

TEST(Newton, ContinuationReachesSmallP)
{
    const auto S = make_space(MeshFamily::cartesian, 3, 1, 1);
    const auto r = continuation_solve(exp_builder(S), {2.0, 1.8, 1.6, 1.5});
    ASSERT_EQ(r.report.stages.size(), 4u);
    EXPECT_TRUE(r.report.converged());
    for (const auto& st : r.report.stages) {
        EXPECT_TRUE(st.converged);
        EXPECT_GT(st.regularization, st.p < 2.0 ? 0.0 : -1.0);
    }
}

TEST(Newton, ContinuationMatchesDirectSolve)
{
    const auto S = make_space(MeshFamily::cartesian, 2, 1, 1);
    const auto build = exp_builder(S);
    const auto cont = continuation_solve(build, {2.0, 3.0});
    // A direct solve at p = 3 cannot start at zero, where the Jacobian degenerates.
    const auto P3 = build(3.0);
    // Polynomial starts are no better: their face differences vanish.
    const DiscreteSolution start{S->interpolate([](const Point& x) { return std::exp(x.x()) + std::sin(3 * x.y()); }),
                                 0.0};
    const auto direct = newton_solve(P3, start);
    EXPECT_EQ(direct.report.stages.size(), 1u);
    EXPECT_LE(relative_difference(cont.solution.coefficients, direct.solution.coefficients), 1e-9);
}

TEST(Newton, SingleStageScheduleEqualsNewtonSolve)
{
    const auto S = make_space(MeshFamily::hexagonal, 1, 2, 2);
    const auto build = exp_builder(S);
    const auto a = continuation_solve(build, {2.0});
    const auto b = newton_solve(build(2.0));
    EXPECT_EQ(a.solution.coefficients, b.solution.coefficients);
    EXPECT_EQ(a.report.total_iterations(), b.report.total_iterations());
}

TEST(Newton, InvalidSchedules)
{
    const auto S = make_space(MeshFamily::cartesian, 1, 0, 0);
    const auto build = exp_builder(S);
    EXPECT_THROW(continuation_solve(build, {}), InputError);
    SolveOptions o;
    o.continuation = {2.0, 3.0};
    EXPECT_THROW(solve(build, 4.0, o), InputError);
    o.continuation = {2.0, 0.5};
    EXPECT_THROW(solve(build, 0.5, o), InputError);
    SolveOptions bad;
    bad.backtrack = 1.0;
    EXPECT_THROW(newton_solve(build(2.0), bad), InputError);
}

TEST(Newton, ResidualHistoryMonotone)
{
    const auto S = make_space(MeshFamily::hexagonal, 2, 1, 1);
    const auto r = solve(exp_builder(S), 4.0);
    for (const auto& st : r.report.stages)
        for (std::size_t i = 1; i < st.residual_history.size(); ++i)
            EXPECT_LE(st.residual_history[i], st.residual_history[i - 1]);
}

TEST(Newton, BoundaryDataPreserved)
{
    const auto S = make_space(MeshFamily::triangular, 2, 1, 1);
    const auto P = exp_builder(S)(3.0);
    SolveOptions o;
    int calls = 0;
    o.on_iteration = [&](const DiscreteSolution& u, int) {
        ++calls;
        for (std::size_t f = 0; f < S->n_faces(); ++f) {
            if (P.dofs.fixed_face[f]) {
                EXPECT_EQ(Vector(S->face_block(u.coefficients, f)), Vector(S->face_block(P.boundary_values, f)));
            }
        }
    };
    const DiscreteSolution start{S->interpolate([](const Point& x) { return std::cos(x.x() - x.y()); }), 0.0};
    newton_solve(P, start, o);
    EXPECT_GT(calls, 0);
}

TEST(Newton, NeumannMeanStaysZero)
{
    const auto S = make_space(MeshFamily::hexagonal, 2, 1, 1);
    const auto u = coscos_solution();
    for (double p : {2.0, 4.0}) {
        SolveOptions o;
        o.on_iteration = [&](const DiscreteSolution& it, int) {
            double mean = 0.0;
            for (std::size_t c = 0; c < S->n_cells(); ++c)
                mean += S->cell_integrals(c).dot(S->cell_block(it.coefficients, c));
            EXPECT_LE(std::abs(mean), 1e-10);
        };
        const auto law_source = [&](double q) {
            return make_problem(S, make_plaplace(q), manufactured_source(u, make_plaplace(q)),
                                BoundaryCondition::neumann());
        };
        const auto r = solve(law_source, p, o);
        EXPECT_TRUE(r.report.converged());
    }
}

TEST(Newton, Deterministic)
{
    const auto S = make_space(MeshFamily::hexagonal, 2, 1, 1);
    SolveOptions o;
    o.threads = 1;
    const auto a = solve(exp_builder(S), 3.0, o);
    const auto b = solve(exp_builder(S), 3.0, o);
    EXPECT_EQ(a.solution.coefficients, b.solution.coefficients);
    ASSERT_EQ(a.report.stages.size(), b.report.stages.size());
    for (std::size_t i = 0; i < a.report.stages.size(); ++i) {
        EXPECT_EQ(a.report.stages[i].iterations, b.report.stages[i].iterations);
        EXPECT_EQ(a.report.stages[i].residual_history, b.report.stages[i].residual_history);
    }
}

TEST(Newton, CondensedTrajectoryMatchesFull)
{
    const auto S = make_space(MeshFamily::triangular, 3, 1, 1);
    SolveOptions o;
    o.record_increments = true;
    o.condense = true;
    std::vector<Vector> iterates_a, iterates_b;
    o.on_iteration = [&](const DiscreteSolution& u, int) { iterates_a.push_back(u.coefficients); };
    const auto a = solve(exp_builder(S), 4.0, o);
    o.condense = false;
    o.on_iteration = [&](const DiscreteSolution& u, int) { iterates_b.push_back(u.coefficients); };
    const auto b = solve(exp_builder(S), 4.0, o);
    ASSERT_EQ(a.report.stages.size(), b.report.stages.size());
    ASSERT_EQ(iterates_a.size(), iterates_b.size());
    std::size_t k = 0;
    for (std::size_t s = 0; s < a.report.stages.size(); ++s) {
        const auto& ia = a.report.stages[s].increments;
        const auto& ib = b.report.stages[s].increments;
        ASSERT_EQ(ia.size(), ib.size());
        for (std::size_t i = 0; i < ia.size(); ++i, ++k) {
            // Differences are measured against the iterate: the last increments
            // sit at roundoff level, where their own norm is no reference scale.
            EXPECT_LE(relative_difference(iterates_a[k], iterates_b[k]), 1e-9) << "stage " << s << " iteration " << i;
            EXPECT_LE((ia[i] - ib[i]).norm(), 1e-9 * iterates_b[k].norm()) << "stage " << s << " iteration " << i;
        }
    }
}

TEST(Newton, DegenerateStartIsSingular)
{
    const auto S = make_space(MeshFamily::cartesian, 2, 1, 1);
    const auto P = make_problem(S, make_plaplace(3.0), [](const Point&) { return 1.0; }, BoundaryCondition::homogeneous());
    for (bool condense : {true, false}) {
        SolveOptions o;
        o.condense = condense;
        try {
            newton_solve(P, o);
            FAIL() << "expected an error";
        }
        catch (const SolverError& e) {
            EXPECT_EQ(e.kind(), SolverError::Kind::singular);
        }
    }
}

TEST(Newton, IterationLimitReported)
{
    const auto S = make_space(MeshFamily::cartesian, 2, 1, 1);
    SolveOptions o;
    o.max_iterations = 1;
    try {
        solve(exp_builder(S), 4.0, o);
        FAIL() << "expected an error";
    }
    catch (const NewtonError& e) {
        EXPECT_EQ(e.kind(), SolverError::Kind::max_iterations);
        EXPECT_NE(std::string(e.what()).find("stage 1"), std::string::npos);
        EXPECT_EQ(e.report().stages.size(), 2u);
    }
}

TEST(Newton, GlacierLawConverges)
{
    const auto S = make_space(MeshFamily::cartesian, 2, 1, 1);
    const auto law = make_glacier(0.5, 1.0);
    const auto u = sinsin_solution();
    const auto P = make_problem(S, law, manufactured_source(u, law), BoundaryCondition::homogeneous());
    const auto r = newton_solve(P);
    EXPECT_TRUE(r.report.converged());
}
