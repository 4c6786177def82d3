// Newton solver with backtracking line search and continuation in p.
#pragma once

#include "hho/assembly.hpp"

#include <Eigen/SparseLU>

#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace hho {

struct SolveOptions {
    double atol = 1e-12;
    double rtol = 1e-10;
    int max_iterations = 100;
    double backtrack = 0.5;
    int max_halvings = 30;
    /// Exponents solved in turn; empty means a single solve at the problem's p.
    std::vector<double> continuation;
    bool condense = true;
    /// For p < 2 the Jacobian uses a law regularized by this factor times the
    /// gradient scale of the stage's initial guess.
    double regularization = 1e-8;
    /// For p > 2 the Jacobian's face-term derivative (p-1)|d|^{p-2} is floored
    /// at this fraction of (p-1)(h_F g)^{p-2}, g the same gradient scale
    /// (0 disables the floor; so does a start with zero gradient).
    double face_floor = 1e-10;
    /// For p < 2 the residual is only Hoelder continuous and rounding in u
    /// puts a floor under it. A stage also converges once the residual is no
    /// larger than the change caused by perturbing every unknown by
    /// +-noise_ulps ulp of max|u| (0 disables this test).
    double noise_ulps = 1000.0;
    /// Keep every Newton increment in the report.
    bool record_increments = false;
    /// Called after every accepted Newton update with the iterate and the stage iteration count.
    std::function<void(const DiscreteSolution&, int)> on_iteration;
    unsigned threads = default_thread_count();

    void validate() const
    {
        if (!(atol > 0.0) || !(rtol > 0.0))
            throw InputError("solver tolerances must be positive");
        if (max_iterations < 1)
            throw InputError("max_iter must be at least 1");
        if (!(backtrack > 0.0 && backtrack < 1.0))
            throw InputError("backtracking factor must lie in (0, 1)");
        if (max_halvings < 0)
            throw InputError("max_halvings must be >= 0");
        if (!(regularization >= 0.0))
            throw InputError("regularization must be >= 0");
        if (!(face_floor >= 0.0))
            throw InputError("face_floor must be >= 0");
        if (!(noise_ulps >= 0.0))
            throw InputError("noise_ulps must be >= 0");
        for (double p : continuation)
            if (!(p > 1.0) || !std::isfinite(p))
                throw InputError("continuation exponents must be > 1");
    }
};

struct StageReport {
    double p = 0.0;
    int iterations = 0;
    int line_search_activations = 0;
    double tolerance = 0.0;
    double regularization = 0.0; ///< epsilon for p < 2, face floor for p > 2
    std::vector<double> residual_history; ///< norm before each iteration and at the end
    std::vector<Vector> increments;       ///< unknown-layout Newton steps, if recorded
    double noise_floor = 0.0;             ///< last round-off floor estimate (p < 2)
    bool converged = false;
    bool noise_limited = false; ///< converged on the round-off floor, not the tolerance

    double initial_residual() const { return residual_history.empty() ? 0.0 : residual_history.front(); }
    double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
};

struct SolveReport {
    std::vector<StageReport> stages;
    double wall_time = 0.0; ///< seconds

    int total_iterations() const
    {
        int n = 0;
        for (const auto& s : stages)
            n += s.iterations;
        return n;
    }
    bool converged() const { return !stages.empty() && stages.back().converged; }
    double final_residual() const { return stages.empty() ? 0.0 : stages.back().final_residual(); }
};

struct SolveResult {
    DiscreteSolution solution;
    SolveReport report;
};

/// Newton failure carrying the iterations done so far.
class NewtonError : public SolverError {
public:
    NewtonError(Kind kind, const std::string& what, SolveReport report)
        : SolverError(kind, what), report_(std::move(report))
    {}
    const SolveReport& report() const { return report_; }

private:
    SolveReport report_;
};

/// Solves J x = b with a sparse LU factorization.
inline Vector sparse_direct_solve(const SparseMatrix& A, const Vector& b)
{
    Eigen::SparseLU<SparseMatrix> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success)
        throw SolverError(SolverError::Kind::singular, "sparse factorization failed: " + lu.lastErrorMessage());
    Vector x = lu.solve(b);
    if (lu.info() != Eigen::Success || !x.allFinite())
        throw SolverError(SolverError::Kind::singular, "sparse solve failed (singular Jacobian)");
    return x;
}

/// Newton increment -J^{-1} r in the unknown layout.
inline Vector newton_increment(const DiscreteProblem& P, const AssembledSystem& sys, bool condense,
                               unsigned threads = default_thread_count())
{
    if (!condense)
        return sparse_direct_solve(sys.jacobian, Vector(-sys.residual));
    const auto cs = static_condense(P, sys, threads);
    const Vector skeletal = cs.matrix.rows() > 0 ? sparse_direct_solve(cs.matrix, cs.rhs) : Vector();
    return recover_increment(cs, skeletal);
}

/// Largest |G_T u| over all cell quadrature points.
inline double max_gradient(const HhoSpace& S, const DiscreteSolution& u)
{
    double m = 0.0;
    for (std::size_t c = 0; c < S.n_cells(); ++c) {
        const auto G = gradient_at_points(S.element(c), S.operators(c), S.gather(u.coefficients, c));
        if (G.rows() > 0)
            m = std::max(m, G.rowwise().norm().maxCoeff());
    }
    return m;
}

/// Reference size for the relative tolerance: the norm of the load vector, or
/// for a vanishing source the residual of the boundary lifting (zero
/// unknowns). It does not depend on the starting point, so warm starts do not
/// loosen the tolerance.
inline double residual_scale(const DiscreteProblem& P, const AssemblyOptions& residual_options)
{
    const auto lift = assemble_system(P, P.initial_guess(), residual_options);
    return lift.load.norm() > 0.0 ? lift.load.norm() : lift.residual.norm();
}

/// Norm of R(u + delta) - R(u) for a fixed +-ulps ulp max|u| sign pattern
/// on the unknowns: the residual change attributable to rounding in u.
inline double residual_noise(const DiscreteProblem& P, const DiscreteSolution& u, const Vector& residual, double ulps,
                             const AssemblyOptions& residual_options)
{
    const double delta = ulps * std::numeric_limits<double>::epsilon() * std::max(u.coefficients.cwiseAbs().maxCoeff(), 1e-300);
    DiscreteSolution v = u;
    for (std::size_t i = 0; i < P.dofs.unknown_to_full.size(); ++i) {
        const bool plus = ((i * 2654435761u) >> 7) & 1u;
        v.coefficients(static_cast<Eigen::Index>(P.dofs.unknown_to_full[i])) += plus ? delta : -delta;
    }
    return (assemble_system(P, v, residual_options).residual - residual).norm();
}

namespace detail {

inline std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline StageReport newton_stage(const DiscreteProblem& P, DiscreteSolution& u, const SolveOptions& opts,
                                const SolveReport& so_far)
{
    StageReport st;
    st.p = P.p();
    AssemblyOptions aopts;
    aopts.threads = opts.threads;
    aopts.global_matrix = !opts.condense;
    if (P.p() < 2.0 && opts.regularization > 0.0) {
        st.regularization = opts.regularization * std::max(1.0, max_gradient(P.hho(), u));
        aopts.jacobian_law = P.law->regularized(st.regularization);
        aopts.epsilon = st.regularization;
    }
    // A start with zero gradient has no scale to floor against; its
    // Jacobian is reported singular.
    const double g0 = P.p() > 2.0 && opts.face_floor > 0.0 ? max_gradient(P.hho(), u) : 0.0;
    if (g0 > 0.0) {
        st.regularization = std::pow(opts.face_floor, 1.0 / (P.p() - 2.0)) * std::max(1.0, g0);
        aopts.face_floor = st.regularization;
    }
    AssemblyOptions ropts = AssemblyOptions::residual_only();
    ropts.threads = opts.threads;

    const auto fail = [&](SolverError::Kind kind, const std::string& msg) {
        SolveReport r = so_far;
        r.stages.push_back(st);
        return NewtonError(kind, "Newton (p=" + sci(P.p()) + "): " + msg, r);
    };

    AssembledSystem sys;
    try {
        sys = assemble_system(P, u, aopts);
    }
    catch (const SolverError& e) {
        throw fail(e.kind(), e.what());
    }
    double norm = sys.residual.norm();
    st.tolerance = opts.atol + opts.rtol * residual_scale(P, ropts);
    st.residual_history.push_back(norm);
    const bool hoelder = P.p() < 2.0 && opts.noise_ulps > 0.0;
    while (norm > st.tolerance) {
        if (hoelder) {
            st.noise_floor = residual_noise(P, u, sys.residual, opts.noise_ulps, ropts);
            if (norm <= st.noise_floor) {
                st.noise_limited = true;
                break;
            }
        }
        if (st.iterations >= opts.max_iterations)
            throw fail(SolverError::Kind::max_iterations,
                       "no convergence in " + std::to_string(opts.max_iterations) + " iterations (residual " +
                           sci(norm) + ", tolerance " + sci(st.tolerance) + ")");
        Vector delta;
        try {
            delta = newton_increment(P, sys, opts.condense, opts.threads);
        }
        catch (const SolverError& e) {
            throw fail(e.kind(), e.what());
        }
        if (opts.record_increments)
            st.increments.push_back(delta);

        const auto trial_residual = [&](double t, DiscreteSolution& trial) {
            trial = u;
            add_increment(P.dofs, trial, delta, t);
            try {
                return assemble_system(P, trial, ropts).residual.norm();
            }
            catch (const SolverError& e) {
                if (e.kind() != SolverError::Kind::non_finite)
                    throw;
            }
            return std::numeric_limits<double>::infinity();
        };
        const auto sufficient = [&](double t, double r) { return r <= (1.0 - 1e-4 * t) * norm || r <= st.tolerance; };

        double t = 1.0;
        int halvings = 0;
        DiscreteSolution trial;
        double trial_norm = trial_residual(t, trial);
        while (!sufficient(t, trial_norm) && halvings < opts.max_halvings) {
            t *= opts.backtrack;
            ++halvings;
            trial_norm = trial_residual(t, trial);
        }
        const bool accepted = sufficient(t, trial_norm);
        if (accepted) {
            // On a weak decrease keep shrinking the step while that still helps.
            while (trial_norm > 0.5 * norm && trial_norm > st.tolerance && halvings < opts.max_halvings) {
                DiscreteSolution shorter;
                const double shorter_norm = trial_residual(t * opts.backtrack, shorter);
                if (!(shorter_norm < trial_norm))
                    break;
                t *= opts.backtrack;
                ++halvings;
                trial_norm = shorter_norm;
                trial = std::move(shorter);
            }
            u = std::move(trial);
            if (halvings > 0)
                ++st.line_search_activations;
        }
        ++st.iterations;
        if (accepted && opts.on_iteration)
            opts.on_iteration(u, st.iterations);
        if (!accepted)
            throw fail(SolverError::Kind::line_search,
                       "line search stagnated after " + std::to_string(opts.max_halvings) + " halvings (residual " +
                           sci(norm) + ")");
        try {
            sys = assemble_system(P, u, aopts);
        }
        catch (const SolverError& e) {
            throw fail(e.kind(), e.what());
        }
        norm = sys.residual.norm();
        st.residual_history.push_back(norm);
    }
    st.converged = true;
    return st;
}

/// Copies the unknowns of `from` and the boundary data of P.
inline DiscreteSolution warm_start(const DiscreteProblem& P, const DiscreteSolution& from)
{
    if (static_cast<std::size_t>(from.coefficients.size()) != P.hho().n_full())
        throw InputError("initial guess does not match the HHO space");
    DiscreteSolution u = P.initial_guess();
    add_increment(P.dofs, u, unknown_vector(P.dofs, from));
    return u;
}

} // namespace detail

/// Newton's method on a single problem, starting from u0 (its boundary blocks
/// are replaced by the problem's data).
inline SolveResult newton_solve(const DiscreteProblem& P, const DiscreteSolution& u0, const SolveOptions& opts = {})
{
    opts.validate();
    const auto start = std::chrono::steady_clock::now();
    SolveResult res;
    res.solution = detail::warm_start(P, u0);
    res.report.stages.push_back(detail::newton_stage(P, res.solution, opts, res.report));
    res.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

inline SolveResult newton_solve(const DiscreteProblem& P, const SolveOptions& opts = {})
{
    return newton_solve(P, P.initial_guess(), opts);
}

/// Builds the problem for a given exponent.
using ProblemBuilder = std::function<DiscreteProblem(double p)>;

/// Solves the problems for schedule[0], schedule[1], ... in turn, each
/// warm-started from the previous solution. Each stage uses the source the
/// builder returns for its exponent.
inline SolveResult continuation_solve(const ProblemBuilder& build, const std::vector<double>& schedule,
                                      const SolveOptions& opts = {},
                                      const std::optional<DiscreteSolution>& u0 = std::nullopt)
{
    if (schedule.empty())
        throw InputError("continuation schedule is empty");
    SolveOptions o = opts;
    o.continuation = schedule;
    o.validate();
    const auto start = std::chrono::steady_clock::now();
    SolveResult res;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const DiscreteProblem P = build(schedule[i]);
        if (i == 0)
            res.solution = u0 ? detail::warm_start(P, *u0) : P.initial_guess();
        else
            res.solution = detail::warm_start(P, res.solution);
        try {
            res.report.stages.push_back(detail::newton_stage(P, res.solution, o, res.report));
        }
        catch (const NewtonError& e) {
            SolveReport r = e.report();
            r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            throw NewtonError(e.kind(), "continuation stage " + std::to_string(i) + ": " + e.what(), r);
        }
    }
    res.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

/// Default schedule for a target exponent: [2, p] for p > 2; for p < 2 the
/// exponent decreases from 2 in steps of 0.1 and ends at p.
inline std::vector<double> default_schedule(double p)
{
    if (p == 2.0)
        return {2.0};
    if (p > 2.0)
        return {2.0, p};
    std::vector<double> s;
    for (int i = 0; 2.0 - 0.1 * i > p + 1e-9; ++i)
        s.push_back(2.0 - 0.1 * i);
    s.push_back(p);
    return s;
}

/// Solve at the target exponent, through opts.continuation when given (it
/// must end at the target), else through the default schedule.
inline SolveResult solve(const ProblemBuilder& build, double target_p, const SolveOptions& opts = {})
{
    std::vector<double> schedule = opts.continuation.empty() ? default_schedule(target_p) : opts.continuation;
    if (schedule.back() != target_p)
        throw InputError("continuation schedule must end at the target p = " + std::to_string(target_p));
    return continuation_solve(build, schedule, opts);
}

} // namespace hho
