// Global HHO space, boundary conditions, residual/Jacobian assembly and static
// condensation.
//
// Global coefficient vectors use the "full" layout: every cell block (in cell
// order) followed by every face block (in face order). Unknown vectors drop
// the Dirichlet face blocks and, for Neumann problems, append one multiplier
// enforcing a zero mean.
#pragma once

#include "hho/flux.hpp"
#include "hho/local_ops.hpp"
#include "hho/parallel.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace hho {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Mesh plus cached element data and operators for one (k, l) pair.
class HhoSpace {
public:
    HhoSpace(std::shared_ptr<const Mesh> mesh, HhoDegrees degrees, int nonlinear_degree = -1,
             unsigned threads = default_thread_count())
        : mesh_(std::move(mesh)), degrees_(degrees)
    {
        validate(degrees);
        const std::size_t nc = mesh_->n_cells();
        elements_.resize(nc);
        ops_.resize(nc);
        cell_integrals_.resize(nc);
        parallel_for(
            nc,
            [&](std::size_t c) {
                elements_[c] = std::make_unique<LocalElement>(*mesh_, c, degrees_, nonlinear_degree);
                ops_[c] = build_local_operators(*elements_[c]);
                const auto& E = *elements_[c];
                Vector ci = Vector::Zero(static_cast<Eigen::Index>(E.n_cell_dofs()));
                const auto& quad = E.cell_quadrature();
                for (std::size_t q = 0; q < quad.size(); ++q)
                    ci += quad.points[q].weight *
                          E.cell_values().row(static_cast<Eigen::Index>(q)).head(ci.size()).transpose();
                cell_integrals_[c] = std::move(ci);
            },
            threads);

        face_owner_.assign(mesh_->n_faces(), {npos, npos});
        local_to_full_.resize(nc);
        for (std::size_t c = 0; c < nc; ++c) {
            const auto& T = mesh_->cell(c);
            auto& map = local_to_full_[c];
            for (std::size_t j = 0; j < n_cell_dofs(); ++j)
                map.push_back(cell_offset(c) + j);
            for (std::size_t i = 0; i < T.n_faces(); ++i) {
                const std::size_t f = T.faces[i];
                if (face_owner_[f].first == npos)
                    face_owner_[f] = {c, i};
                for (std::size_t j = 0; j < n_face_dofs(); ++j)
                    map.push_back(face_offset(f) + j);
            }
        }
    }

    HhoSpace(Mesh mesh, HhoDegrees degrees, int nonlinear_degree = -1)
        : HhoSpace(std::make_shared<const Mesh>(std::move(mesh)), degrees, nonlinear_degree)
    {}

    const Mesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const Mesh>& shared_mesh() const { return mesh_; }
    const HhoDegrees& degrees() const { return degrees_; }
    std::size_t n_cells() const { return mesh_->n_cells(); }
    std::size_t n_faces() const { return mesh_->n_faces(); }

    const LocalElement& element(std::size_t c) const { return *elements_[c]; }
    const LocalOperators& operators(std::size_t c) const { return ops_[c]; }
    /// Integral of each cell basis function of degree l.
    const Vector& cell_integrals(std::size_t c) const { return cell_integrals_[c]; }

    std::size_t n_cell_dofs() const { return dim_cell_space(degrees_.l); }
    std::size_t n_face_dofs() const { return dim_face_space(degrees_.k); }
    std::size_t n_full() const { return n_cells() * n_cell_dofs() + n_faces() * n_face_dofs(); }
    std::size_t cell_offset(std::size_t c) const { return c * n_cell_dofs(); }
    std::size_t face_offset(std::size_t f) const { return n_cells() * n_cell_dofs() + f * n_face_dofs(); }

    /// Full-layout index of every local DOF of cell c.
    const std::vector<std::size_t>& local_to_full(std::size_t c) const { return local_to_full_[c]; }
    /// First adjacent cell of face f and the face's local index in it.
    std::pair<std::size_t, std::size_t> face_owner(std::size_t f) const { return face_owner_[f]; }

    Vector gather(const Vector& full, std::size_t c) const
    {
        const auto& map = local_to_full_[c];
        Vector out(static_cast<Eigen::Index>(map.size()));
        for (std::size_t i = 0; i < map.size(); ++i)
            out(static_cast<Eigen::Index>(i)) = full(static_cast<Eigen::Index>(map[i]));
        return out;
    }

    auto cell_block(const Vector& full, std::size_t c) const
    {
        return full.segment(static_cast<Eigen::Index>(cell_offset(c)), static_cast<Eigen::Index>(n_cell_dofs()));
    }
    auto face_block(const Vector& full, std::size_t f) const
    {
        return full.segment(static_cast<Eigen::Index>(face_offset(f)), static_cast<Eigen::Index>(n_face_dofs()));
    }
    auto cell_block(Vector& full, std::size_t c) const
    {
        return full.segment(static_cast<Eigen::Index>(cell_offset(c)), static_cast<Eigen::Index>(n_cell_dofs()));
    }
    auto face_block(Vector& full, std::size_t f) const
    {
        return full.segment(static_cast<Eigen::Index>(face_offset(f)), static_cast<Eigen::Index>(n_face_dofs()));
    }

    Vector face_projection(std::size_t f, const ScalarFunction& v) const
    {
        const auto [c, i] = face_owner_[f];
        return project_face(*elements_[c], i, v);
    }

    /// Global interpolate I_h v in the full layout.
    Vector interpolate(const ScalarFunction& v) const
    {
        Vector out(static_cast<Eigen::Index>(n_full()));
        for (std::size_t c = 0; c < n_cells(); ++c)
            out.segment(static_cast<Eigen::Index>(cell_offset(c)), static_cast<Eigen::Index>(n_cell_dofs())) =
                project_cell(*elements_[c], v);
        for (std::size_t f = 0; f < n_faces(); ++f)
            out.segment(static_cast<Eigen::Index>(face_offset(f)), static_cast<Eigen::Index>(n_face_dofs())) =
                face_projection(f, v);
        return out;
    }

private:
    std::shared_ptr<const Mesh> mesh_;
    HhoDegrees degrees_;
    std::vector<std::unique_ptr<LocalElement>> elements_;
    std::vector<LocalOperators> ops_;
    std::vector<Vector> cell_integrals_;
    std::vector<std::pair<std::size_t, std::size_t>> face_owner_;
    std::vector<std::vector<std::size_t>> local_to_full_;
};

enum class BoundaryKind { dirichlet_homogeneous, dirichlet, neumann };

inline std::string to_string(BoundaryKind kind)
{
    switch (kind) {
    case BoundaryKind::dirichlet_homogeneous: return "dirichlet_hom";
    case BoundaryKind::dirichlet: return "dirichlet";
    case BoundaryKind::neumann: return "neumann";
    }
    return "?";
}

inline BoundaryKind parse_boundary_kind(const std::string& s)
{
    if (s == "dirichlet_hom" || s == "dirichlet_homogeneous")
        return BoundaryKind::dirichlet_homogeneous;
    if (s == "dirichlet")
        return BoundaryKind::dirichlet;
    if (s == "neumann" || s == "neumann_zero_mean")
        return BoundaryKind::neumann;
    throw InputError("unknown boundary condition '" + s + "' (expected dirichlet_hom, dirichlet or neumann)");
}

struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::dirichlet_homogeneous;
    ScalarFunction g; ///< boundary data, used by `dirichlet` only

    static BoundaryCondition homogeneous() { return {}; }
    static BoundaryCondition dirichlet(ScalarFunction g) { return {BoundaryKind::dirichlet, std::move(g)}; }
    static BoundaryCondition neumann() { return {BoundaryKind::neumann, {}}; }

    bool fixes_boundary() const { return kind != BoundaryKind::neumann; }
};

/// Relative tolerance on |int f| / int |f| accepted for Neumann problems.
inline constexpr double neumann_compatibility_tolerance = 1e-10;

struct DofMap {
    BoundaryKind kind = BoundaryKind::dirichlet_homogeneous;
    std::size_t n_full = 0;
    std::size_t n_cell_unknowns = 0;
    std::size_t n_face_unknowns = 0;
    std::size_t multiplier = npos; ///< unknown index of the zero-mean multiplier
    std::size_t n_unknowns = 0;
    std::vector<bool> fixed_face;              ///< per mesh face
    std::vector<std::size_t> full_to_unknown;  ///< npos for fixed coefficients
    std::vector<std::size_t> unknown_to_full;  ///< excludes the multiplier

    bool has_multiplier() const { return multiplier != npos; }
    /// Unknowns left after static condensation.
    std::size_t n_skeletal() const { return n_face_unknowns + (has_multiplier() ? 1 : 0); }
};

inline DofMap build_dof_map(const HhoSpace& space, BoundaryKind kind)
{
    DofMap d;
    d.kind = kind;
    d.n_full = space.n_full();
    d.full_to_unknown.assign(d.n_full, npos);
    std::size_t next = 0;
    for (std::size_t c = 0; c < space.n_cells(); ++c)
        for (std::size_t j = 0; j < space.n_cell_dofs(); ++j) {
            d.full_to_unknown[space.cell_offset(c) + j] = next++;
            d.unknown_to_full.push_back(space.cell_offset(c) + j);
        }
    d.n_cell_unknowns = next;
    d.fixed_face.assign(space.n_faces(), false);
    for (std::size_t f = 0; f < space.n_faces(); ++f) {
        if (kind != BoundaryKind::neumann && space.mesh().face(f).is_boundary()) {
            d.fixed_face[f] = true;
            continue;
        }
        for (std::size_t j = 0; j < space.n_face_dofs(); ++j) {
            d.full_to_unknown[space.face_offset(f) + j] = next++;
            d.unknown_to_full.push_back(space.face_offset(f) + j);
        }
    }
    d.n_face_unknowns = next - d.n_cell_unknowns;
    if (kind == BoundaryKind::neumann)
        d.multiplier = next++;
    d.n_unknowns = next;
    return d;
}

struct DiscreteSolution {
    Vector coefficients; ///< full layout, Dirichlet blocks included
    double multiplier = 0.0;
};

/// Unknown-layout view of a solution.
inline Vector unknown_vector(const DofMap& d, const DiscreteSolution& u)
{
    Vector out(static_cast<Eigen::Index>(d.n_unknowns));
    for (std::size_t i = 0; i < d.unknown_to_full.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = u.coefficients(static_cast<Eigen::Index>(d.unknown_to_full[i]));
    if (d.has_multiplier())
        out(static_cast<Eigen::Index>(d.multiplier)) = u.multiplier;
    return out;
}

/// u += t * delta for an unknown-layout increment; fixed blocks are untouched.
inline void add_increment(const DofMap& d, DiscreteSolution& u, const Vector& delta, double t = 1.0)
{
    for (std::size_t i = 0; i < d.unknown_to_full.size(); ++i)
        u.coefficients(static_cast<Eigen::Index>(d.unknown_to_full[i])) += t * delta(static_cast<Eigen::Index>(i));
    if (d.has_multiplier())
        u.multiplier += t * delta(static_cast<Eigen::Index>(d.multiplier));
}

struct DiscreteProblem {
    std::shared_ptr<const HhoSpace> space;
    FluxLawPtr law;
    ScalarFunction source;
    BoundaryCondition bc;
    DofMap dofs;
    Vector load;            ///< full layout: int_T f psi on cell blocks, 0 on faces
    Vector boundary_values; ///< full layout: pi_F^k g on fixed faces, 0 elsewhere

    double p() const { return law->exponent(); }
    const HhoSpace& hho() const { return *space; }

    /// Zero unknowns with the boundary data applied.
    DiscreteSolution initial_guess() const { return {boundary_values, 0.0}; }
};

/// Integral of f over the domain and of |f|, with each element's nonlinear rule.
inline std::pair<double, double> source_integrals(const HhoSpace& space, const ScalarFunction& f)
{
    double s = 0.0, a = 0.0;
    for (std::size_t c = 0; c < space.n_cells(); ++c)
        for (const auto& qp : space.element(c).cell_quadrature().points) {
            const double v = f(qp.point);
            s += qp.weight * v;
            a += qp.weight * std::abs(v);
        }
    return {s, a};
}

inline DiscreteProblem make_problem(std::shared_ptr<const HhoSpace> space, FluxLawPtr law, ScalarFunction source,
                                    BoundaryCondition bc)
{
    if (!space || !law)
        throw InputError("make_problem needs a space and a flux law");
    if (!source)
        source = [](const Point&) { return 0.0; };
    if (bc.kind == BoundaryKind::dirichlet && !bc.g)
        throw InputError("Dirichlet boundary condition without boundary data");
    if (bc.kind == BoundaryKind::neumann) {
        const auto [integral, abs_integral] = source_integrals(*space, source);
        if (std::abs(integral) > neumann_compatibility_tolerance * abs_integral)
            throw InputError("Neumann problem requires a source with zero mean (integral " + std::to_string(integral) +
                             ", integral of |f| " + std::to_string(abs_integral) + ")");
    }

    DiscreteProblem P;
    P.space = std::move(space);
    P.law = std::move(law);
    P.source = std::move(source);
    P.bc = std::move(bc);
    const auto& S = *P.space;
    P.dofs = build_dof_map(S, P.bc.kind);

    P.load = Vector::Zero(static_cast<Eigen::Index>(S.n_full()));
    for (std::size_t c = 0; c < S.n_cells(); ++c) {
        const auto& E = S.element(c);
        const auto nl = static_cast<Eigen::Index>(E.n_cell_dofs());
        const auto& quad = E.cell_quadrature();
        Vector b = Vector::Zero(nl);
        for (std::size_t q = 0; q < quad.size(); ++q)
            b += quad.points[q].weight * P.source(quad.points[q].point) *
                 E.cell_values().row(static_cast<Eigen::Index>(q)).head(nl).transpose();
        S.cell_block(P.load, c) = b;
    }

    P.boundary_values = Vector::Zero(static_cast<Eigen::Index>(S.n_full()));
    if (P.bc.kind == BoundaryKind::dirichlet)
        for (std::size_t f = 0; f < S.n_faces(); ++f)
            if (P.dofs.fixed_face[f])
                S.face_block(P.boundary_values, f) = S.face_projection(f, P.bc.g);
    return P;
}

/// Element residual (and Jacobian) in the local layout, load included.
struct LocalSystem {
    Vector residual;
    Matrix jacobian;
};

struct AssemblyOptions {
    bool jacobian = true;
    /// Build the global sparse Jacobian (not needed on the condensed path).
    bool global_matrix = true;
    /// Law differentiated for the Jacobian; defaults to the problem law.
    FluxLawPtr jacobian_law;
    /// Regularization of the stabilization derivative, relative to h_F.
    double epsilon = 0.0;
    /// For p > 2 the face-term derivative uses max(|d|, face_floor h_F) in
    /// place of |d|, which keeps it positive at vanishing face differences.
    double face_floor = 0.0;
    unsigned threads = default_thread_count();

    static AssemblyOptions residual_only()
    {
        AssemblyOptions o;
        o.jacobian = false;
        return o;
    }
    static AssemblyOptions with_threads(unsigned n)
    {
        AssemblyOptions o;
        o.threads = n;
        return o;
    }
};

struct AssembledSystem {
    Vector residual;       ///< unknown layout
    Vector load;           ///< unknown layout, int f v_T
    SparseMatrix jacobian; ///< unknown layout; empty unless requested
    std::vector<LocalSystem> local;
    bool has_jacobian = false;

    double residual_norm() const { return residual.norm(); }
};

namespace detail {

inline void require_finite(double v, std::size_t c, const char* what)
{
    if (!std::isfinite(v))
        throw SolverError(SolverError::Kind::non_finite,
                          std::string("non-finite ") + what + " on cell " + std::to_string(c));
}

} // namespace detail

inline LocalSystem local_system(const DiscreteProblem& P, std::size_t c, const Vector& u, bool want_jacobian,
                                const FluxLaw& jlaw, double epsilon, double face_floor = 0.0)
{
    const auto& S = P.hho();
    const auto& E = S.element(c);
    const auto& ops = S.operators(c);
    const FluxLaw& law = *P.law;
    const double p = law.exponent();
    const auto nk = static_cast<Eigen::Index>(E.n_gradient_dofs());
    const auto nl = static_cast<Eigen::Index>(E.n_cell_dofs());
    const auto& quad = E.cell_quadrature();
    const Matrix& V = E.cell_values();

    const Vector g = ops.gradient * u;
    const Vector uT = u.head(nl);

    Vector rg = Vector::Zero(2 * nk);
    Matrix Kg, Ks;
    if (want_jacobian) {
        Kg = Matrix::Zero(2 * nk, 2 * nk);
        if (law.depends_on_s())
            Ks = Matrix::Zero(2 * nk, nl);
    }
    for (std::size_t q = 0; q < quad.size(); ++q) {
        const auto qi = static_cast<Eigen::Index>(q);
        const Point& x = quad.points[q].point;
        const double w = quad.points[q].weight;
        const auto phi = V.row(qi).head(nk).transpose();
        const Point xi(phi.dot(g.head(nk)), phi.dot(g.tail(nk)));
        const double s = V.row(qi).head(nl).dot(uT);
        const Point a = law.flux(x, s, xi);
        detail::require_finite(a.squaredNorm(), c, "flux");
        rg.head(nk) += (w * a(0)) * phi;
        rg.tail(nk) += (w * a(1)) * phi;
        if (!want_jacobian)
            continue;
        const Matrix2 A = jlaw.jacobian(x, s, xi);
        const Matrix pp = w * phi * phi.transpose();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                Kg.block(i * nk, j * nk, nk, nk) += A(i, j) * pp;
        if (law.depends_on_s()) {
            Point da;
            if (jlaw.has_ds()) {
                da = jlaw.ds(x, s, xi);
            }
            else {
                const double h = 1e-7 * std::max(1.0, std::abs(s));
                da = (jlaw.flux(x, s + h, xi) - jlaw.flux(x, s, xi)) / h;
            }
            const auto psi = V.row(qi).head(nl);
            Ks.topRows(nk) += (w * da(0)) * phi * psi;
            Ks.bottomRows(nk) += (w * da(1)) * phi * psi;
        }
    }

    LocalSystem out;
    out.residual = ops.gradient.transpose() * rg;
    out.residual.head(nl) -= S.cell_block(P.load, c);
    if (want_jacobian) {
        out.jacobian = ops.gradient.transpose() * Kg * ops.gradient;
        if (law.depends_on_s())
            out.jacobian.leftCols(nl) += ops.gradient.transpose() * Ks;
    }

    for (std::size_t i = 0; i < E.n_faces(); ++i) {
        const Matrix& D = ops.face_differences[i];
        const Matrix& X = E.face_values(i);
        const auto& fq = E.face_quadrature(i);
        const double hF = E.face(i).diameter;
        const double scale = std::pow(hF, 1.0 - p);
        const double epsF = epsilon * hF;
        const double floorF = face_floor * hF;
        const Vector d = X * (D * u);
        Vector r(d.size()), wd(d.size());
        for (Eigen::Index q = 0; q < d.size(); ++q) {
            const double w = fq.points[static_cast<std::size_t>(q)].weight;
            r(q) = w * signed_power(d(q), p);
            if (!want_jacobian)
                continue;
            const double dq = d(q);
            double deriv;
            if (p == 2.0) {
                deriv = 1.0;
            }
            else if (p > 2.0 && floorF > 0.0) {
                deriv = (p - 1.0) * std::pow(std::max(std::abs(dq), floorF), p - 2.0);
            }
            else if (epsF > 0.0) {
                const double rho2 = dq * dq + epsF * epsF;
                deriv = std::pow(rho2, 0.5 * (p - 4.0)) * ((p - 1.0) * dq * dq + epsF * epsF);
            }
            else if (dq == 0.0) {
                if (p < 2.0)
                    throw SolverError(SolverError::Kind::singular,
                                      "stabilization derivative singular at a vanishing face difference on cell " +
                                          std::to_string(c) + " (p < 2 needs regularization)");
                deriv = 0.0;
            }
            else {
                deriv = (p - 1.0) * std::pow(std::abs(dq), p - 2.0);
            }
            wd(q) = w * deriv;
        }
        const Matrix XD = X * D;
        out.residual += scale * (XD.transpose() * r);
        if (want_jacobian)
            out.jacobian += scale * (XD.transpose() * wd.asDiagonal() * XD);
    }
    for (Eigen::Index i = 0; i < out.residual.size(); ++i)
        detail::require_finite(out.residual(i), c, "residual");
    return out;
}

/// Residual of the discrete problem at u and, optionally, its Jacobian.
inline AssembledSystem assemble_system(const DiscreteProblem& P, const DiscreteSolution& u,
                                       const AssemblyOptions& opts = {})
{
    const auto& S = P.hho();
    const auto& d = P.dofs;
    const std::size_t nc = S.n_cells();
    if (static_cast<std::size_t>(u.coefficients.size()) != S.n_full())
        throw InputError("solution vector size does not match the HHO space");
    const FluxLaw& jlaw = opts.jacobian_law ? *opts.jacobian_law : *P.law;

    AssembledSystem sys;
    sys.local.resize(nc);
    sys.has_jacobian = opts.jacobian;
    parallel_for(
        nc,
        [&](std::size_t c) {
            sys.local[c] = local_system(P, c, S.gather(u.coefficients, c), opts.jacobian, jlaw, opts.epsilon,
                                       opts.face_floor);
            if (d.has_multiplier())
                sys.local[c].residual.head(S.cell_integrals(c).size()) += u.multiplier * S.cell_integrals(c);
        },
        opts.threads);

    sys.residual = Vector::Zero(static_cast<Eigen::Index>(d.n_unknowns));
    sys.load = Vector::Zero(static_cast<Eigen::Index>(d.n_unknowns));
    for (std::size_t i = 0; i < d.unknown_to_full.size(); ++i)
        sys.load(static_cast<Eigen::Index>(i)) = P.load(static_cast<Eigen::Index>(d.unknown_to_full[i]));

    std::vector<Triplet> triplets;
    const bool matrix = opts.jacobian && opts.global_matrix;
    for (std::size_t c = 0; c < nc; ++c) {
        const auto& map = S.local_to_full(c);
        const auto& L = sys.local[c];
        std::vector<std::size_t> unk(map.size());
        for (std::size_t i = 0; i < map.size(); ++i)
            unk[i] = d.full_to_unknown[map[i]];
        for (std::size_t i = 0; i < map.size(); ++i)
            if (unk[i] != npos)
                sys.residual(static_cast<Eigen::Index>(unk[i])) += L.residual(static_cast<Eigen::Index>(i));
        if (d.has_multiplier()) {
            const Vector& ci = S.cell_integrals(c);
            const auto lam = static_cast<Eigen::Index>(d.multiplier);
            sys.residual(lam) += ci.dot(S.cell_block(u.coefficients, c));
            if (matrix)
                for (Eigen::Index j = 0; j < ci.size(); ++j) {
                    const auto row = static_cast<Eigen::Index>(unk[static_cast<std::size_t>(j)]);
                    triplets.emplace_back(row, lam, ci(j));
                    triplets.emplace_back(lam, row, ci(j));
                }
        }
        if (!matrix)
            continue;
        for (std::size_t i = 0; i < map.size(); ++i) {
            if (unk[i] == npos)
                continue;
            for (std::size_t j = 0; j < map.size(); ++j)
                if (unk[j] != npos)
                    triplets.emplace_back(static_cast<Eigen::Index>(unk[i]), static_cast<Eigen::Index>(unk[j]),
                                          L.jacobian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
    }
    if (matrix) {
        sys.jacobian.resize(static_cast<Eigen::Index>(d.n_unknowns), static_cast<Eigen::Index>(d.n_unknowns));
        sys.jacobian.setFromTriplets(triplets.begin(), triplets.end());
    }
    return sys;
}

/// Skeletal system after eliminating every cell block, plus what is needed to
/// recover the cell increments.
struct CondensedSystem {
    struct CellRecovery {
        Eigen::PartialPivLU<Matrix> cell_block;
        Matrix coupling;                   ///< K_{T,S}: cell rows, skeletal columns
        Vector residual;                   ///< cell block of the local residual
        std::vector<std::size_t> skeletal; ///< skeletal index per coupling column
    };

    SparseMatrix matrix; ///< n_skeletal square
    Vector rhs;          ///< the skeletal Newton increment solves matrix * ds = rhs
    std::size_t n_cell_unknowns = 0;
    std::vector<CellRecovery> recovery;
};

/// Reciprocal condition estimate below which a cell block counts as singular.
inline constexpr double singular_cell_rcond = 1e-14;

inline CondensedSystem static_condense(const DiscreteProblem& P, const AssembledSystem& sys,
                                       unsigned threads = default_thread_count())
{
    if (!sys.has_jacobian)
        throw InputError("static condensation needs an assembled Jacobian");
    const auto& S = P.hho();
    const auto& d = P.dofs;
    const std::size_t nc = S.n_cells();
    const auto nl = static_cast<Eigen::Index>(S.n_cell_dofs());
    const std::size_t ns = d.n_skeletal();

    CondensedSystem out;
    out.n_cell_unknowns = d.n_cell_unknowns;
    out.recovery.resize(nc);
    std::vector<Matrix> schur(nc);
    std::vector<Vector> shift(nc);
    parallel_for(
        nc,
        [&](std::size_t c) {
            const auto& L = sys.local[c];
            const auto& map = S.local_to_full(c);
            auto& R = out.recovery[c];
            std::vector<Eigen::Index> local_cols;
            for (std::size_t i = static_cast<std::size_t>(nl); i < map.size(); ++i) {
                const std::size_t unk = d.full_to_unknown[map[i]];
                if (unk == npos)
                    continue;
                local_cols.push_back(static_cast<Eigen::Index>(i));
                R.skeletal.push_back(unk - d.n_cell_unknowns);
            }
            const auto nf = static_cast<Eigen::Index>(local_cols.size());
            const Eigen::Index m = nf + (d.has_multiplier() ? 1 : 0);
            Matrix Kcs(nl, m), Ksc(m, nl), Kss = Matrix::Zero(m, m);
            for (Eigen::Index a = 0; a < nf; ++a) {
                Kcs.col(a) = L.jacobian.block(0, local_cols[static_cast<std::size_t>(a)], nl, 1);
                Ksc.row(a) = L.jacobian.block(local_cols[static_cast<std::size_t>(a)], 0, 1, nl);
                for (Eigen::Index b = 0; b < nf; ++b)
                    Kss(a, b) = L.jacobian(local_cols[static_cast<std::size_t>(a)], local_cols[static_cast<std::size_t>(b)]);
            }
            if (d.has_multiplier()) {
                Kcs.col(nf) = S.cell_integrals(c);
                Ksc.row(nf) = S.cell_integrals(c).transpose();
                R.skeletal.push_back(ns - 1);
            }
            R.cell_block.compute(L.jacobian.topLeftCorner(nl, nl));
            const double rc = R.cell_block.rcond();
            if (!(rc > singular_cell_rcond))
                throw SolverError(SolverError::Kind::singular,
                                  "singular cell block on cell " + std::to_string(c) + " (rcond " + std::to_string(rc) + ")");
            R.coupling = std::move(Kcs);
            R.residual = L.residual.head(nl);
            const Matrix inv_coupling = R.cell_block.solve(R.coupling);
            schur[c] = Kss - Ksc * inv_coupling;
            shift[c] = Ksc * R.cell_block.solve(R.residual);
        },
        threads);

    out.rhs = -sys.residual.tail(static_cast<Eigen::Index>(ns));
    std::vector<Triplet> triplets;
    for (std::size_t c = 0; c < nc; ++c) {
        const auto& idx = out.recovery[c].skeletal;
        for (std::size_t a = 0; a < idx.size(); ++a) {
            out.rhs(static_cast<Eigen::Index>(idx[a])) += shift[c](static_cast<Eigen::Index>(a));
            for (std::size_t b = 0; b < idx.size(); ++b)
                triplets.emplace_back(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]),
                                      schur[c](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
        }
    }
    out.matrix.resize(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(ns));
    out.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

/// Full unknown-layout increment from a skeletal increment.
inline Vector recover_increment(const CondensedSystem& cs, const Vector& skeletal)
{
    const auto ncu = static_cast<Eigen::Index>(cs.n_cell_unknowns);
    Vector out(ncu + skeletal.size());
    out.tail(skeletal.size()) = skeletal;
    Eigen::Index offset = 0;
    for (const auto& R : cs.recovery) {
        Vector local(static_cast<Eigen::Index>(R.skeletal.size()));
        for (std::size_t a = 0; a < R.skeletal.size(); ++a)
            local(static_cast<Eigen::Index>(a)) = skeletal(static_cast<Eigen::Index>(R.skeletal[a]));
        const Vector dc = R.cell_block.solve(Vector(-R.residual - R.coupling * local));
        out.segment(offset, dc.size()) = dc;
        offset += dc.size();
    }
    return out;
}

} // namespace hho
