// Convergence tables, slope regression and manufactured-solution studies.
#pragma once

#include "hho/mesh_generators.hpp"
#include "hho/norms.hpp"
#include "hho/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace hho {

inline constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

/// Least-squares slope of log(error) against log(h).
inline double regression_slope(const std::vector<double>& h, const std::vector<double>& error)
{
    if (h.size() != error.size())
        throw InputError("regression needs as many errors as mesh sizes");
    if (h.size() < 2)
        return nan_value;
    const double n = static_cast<double>(h.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(h[i] > 0.0) || !(error[i] > 0.0))
            return nan_value;
        sx += std::log(h[i]);
        sy += std::log(error[i]);
    }
    const double mx = sx / n, my = sy / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double dx = std::log(h[i]) - mx;
        sxy += dx * (std::log(error[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

struct ConvergenceRow {
    int level = 0;
    double h = 0.0;
    std::size_t ndof = 0;
    double error = 0.0;       ///< ||G_h(u_h - I_h u)||_{L^p}
    double order = nan_value; ///< against the previous row; NaN on the first
    double exact_gradient_error = nan_value;
    int newton_iterations = 0;
    double residual = 0.0;
    double wall_time = 0.0;
};

struct ConvergenceTable {
    std::string family;
    int k = 0;
    int l = 0;
    double p = 2.0;
    std::string bc;
    std::string solution;
    std::vector<ConvergenceRow> rows;
    bool failed = false;
    std::string failure;

    /// Appends a row and fills its per-step order. Mesh sizes must decrease.
    void add(ConvergenceRow row)
    {
        if (!(row.h > 0.0))
            throw InputError("mesh size must be positive");
        if (!rows.empty()) {
            const auto& prev = rows.back();
            if (!(row.h < prev.h))
                throw InputError("mesh sizes must strictly decrease down a convergence table");
            row.order = (prev.error > 0.0 && row.error > 0.0) ? std::log(prev.error / row.error) / std::log(prev.h / row.h)
                                                               : nan_value;
        }
        else {
            row.order = nan_value;
        }
        rows.push_back(row);
    }

    /// Regression slope over the last `last` rows (all rows if fewer).
    double slope(std::size_t last = 3) const
    {
        std::vector<double> h, e;
        const std::size_t first = rows.size() > last ? rows.size() - last : 0;
        for (std::size_t i = first; i < rows.size(); ++i) {
            h.push_back(rows[i].h);
            e.push_back(rows[i].error);
        }
        return regression_slope(h, e);
    }

    bool complete(std::size_t expected_rows) const { return !failed && rows.size() == expected_rows; }
};

/// Builds the flux law for a given exponent.
using LawFactory = std::function<FluxLawPtr(double p)>;

struct StudyOptions {
    MeshFamily family = MeshFamily::triangular;
    int k = 0;
    /// Cell degree; -1 means l = k.
    int l = -1;
    double p = 2.0;
    int first_level = 1;
    int levels = 5;
    BoundaryKind bc = BoundaryKind::dirichlet;
    /// Name in the manufactured-solution registry.
    std::string solution = "exp";
    /// Defaults to the p-Laplacian.
    LawFactory law;
    SolveOptions solver;

    HhoDegrees degrees() const { return {k, l < 0 ? k : l}; }
};

/// Source term of the manufactured problem. The p-Laplacian with the
/// exponential solution uses the closed form.
inline ScalarFunction manufactured_problem_source(const SmoothFunction& u, const FluxLawPtr& law, bool plaplace)
{
    if (plaplace && u.name == "exp") {
        const double p = law->exponent();
        return [p](const Point& x) { return exp_plaplace_source(x, p); };
    }
    return manufactured_source(u, law);
}

/// max |a(grad u).n| / max(1, |a(grad u)|) over boundary face quadrature points.
inline double boundary_normal_flux(const HhoSpace& S, const SmoothFunction& u, const FluxLaw& a)
{
    const Mesh& mesh = S.mesh();
    double worst = 0.0;
    for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
        const Face& F = mesh.face(f);
        if (!F.is_boundary())
            continue;
        for (const auto& qp : mesh.face_quadrature(f, 2 * S.degrees().k + 4)) {
            const Point flux = a.flux(qp.point, u(qp.point), u.gradient(qp.point));
            worst = std::max(worst, std::abs(flux.dot(F.normal)) / std::max(1.0, flux.norm()));
        }
    }
    return worst;
}

/// Problem builder for one level of a manufactured-solution study.
inline ProblemBuilder manufactured_builder(std::shared_ptr<const HhoSpace> space, const SmoothFunction& u,
                                           BoundaryKind bc, LawFactory law)
{
    const bool plaplace = !law;
    if (!law)
        law = [](double p) { return make_plaplace(p); };
    return [space, u, bc, law, plaplace](double p) {
        const FluxLawPtr a = law(p);
        BoundaryCondition cond;
        cond.kind = bc;
        if (bc == BoundaryKind::dirichlet)
            cond.g = u.function();
        ScalarFunction f = manufactured_problem_source(u, a, plaplace);
        if (bc == BoundaryKind::neumann) {
            // The exact solution must satisfy a(grad u).n = 0; then its source
            // has zero mean and only the quadrature error of the discrete
            // integral is removed.
            if (boundary_normal_flux(*space, u, *a) > 1e-12)
                throw InputError("manufactured solution '" + u.name +
                                 "' has nonzero normal flux; homogeneous Neumann studies need e.g. 'coscos'");
            const double mean = source_integrals(*space, f).first / space->mesh().total_area();
            f = [f, mean](const Point& x) { return f(x) - mean; };
        }
        return make_problem(space, a, f, cond);
    };
}

/// Solves the manufactured problem on `levels` refinements of a mesh family
/// and records ||G_h(u_h - I_h u)||_{L^p} per level. A solver failure stops
/// the study and is flagged on the (partial) table.
inline ConvergenceTable convergence_study(const StudyOptions& opts)
{
    validate(opts.degrees());
    if (opts.levels < 1)
        throw InputError("a convergence study needs at least one level");
    opts.solver.validate();
    const SmoothFunction u = manufactured_solution(opts.solution);

    ConvergenceTable table;
    table.family = to_string(opts.family);
    table.k = opts.degrees().k;
    table.l = opts.degrees().l;
    table.p = opts.p;
    table.bc = to_string(opts.bc);
    table.solution = u.name;

    for (int i = 0; i < opts.levels; ++i) {
        const int level = opts.first_level + i;
        const auto start = std::chrono::steady_clock::now();
        auto mesh = std::make_shared<const Mesh>(generate_mesh_family(opts.family, level));
        auto space = std::make_shared<const HhoSpace>(mesh, opts.degrees(), -1, opts.solver.threads);
        const ProblemBuilder build = manufactured_builder(space, u, opts.bc, opts.law);
        SolveResult res;
        try {
            res = solve(build, opts.p, opts.solver);
        }
        catch (const SolverError& e) {
            table.failed = true;
            table.failure = "level " + std::to_string(level) + ": " + e.what();
            return table;
        }
        ConvergenceRow row;
        row.level = level;
        row.h = mesh->h();
        const DofMap& dofs = build_dof_map(*space, opts.bc);
        row.ndof = dofs.n_cell_unknowns + dofs.n_face_unknowns;
        row.error = gradient_error(*space, res.solution, u.function(), opts.p);
        row.exact_gradient_error = gradient_error_exact(*space, res.solution, u, opts.p);
        row.newton_iterations = res.report.total_iterations();
        row.residual = res.report.final_residual();
        row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        table.add(row);
    }
    return table;
}

} // namespace hho
