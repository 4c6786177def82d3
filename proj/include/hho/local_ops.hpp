// Element-level HHO machinery.
//
// The local space on a cell T is P^l(T) x prod_F P^k(F), l in {k-1, k, k+1}.
// A local DOF vector is laid out as [cell block | face 0 | face 1 | ...] with
// faces in the order of `Cell::faces`. All reconstruction operators below map
// such a vector to coefficients in scaled monomial bases of the cell:
//
//   gradient          G_T : -> P^k(T)^2     ([x-component; y-component])
//   potential         p_T : -> P^{k+1}(T)
//   second potential  P_T : -> P^{k+1}(T)
//   face differences  D_F : -> P^k(F),  D_F v = pi_F^k (v_F - P_T v)
#pragma once

#include "hho/basis.hpp"
#include "hho/mesh.hpp"
#include "hho/projection.hpp"

#include <cmath>
#include <vector>

namespace hho {

inline constexpr int max_hho_degree = 6;

struct HhoDegrees {
    int k = 0; ///< face degree
    int l = 0; ///< cell degree

    static HhoDegrees equal_order(int k) { return {k, k}; }
};

inline void validate(const HhoDegrees& d)
{
    if (d.k < 0 || d.k > max_hho_degree)
        throw InputError("face degree k=" + std::to_string(d.k) + " outside [0, " +
                         std::to_string(max_hho_degree) + "]");
    if (d.l < d.k - 1 || d.l > d.k + 1)
        throw InputError("cell degree l=" + std::to_string(d.l) + " must lie in {k-1, k, k+1}");
    if (d.l < 0)
        throw InputError("the variant l = k-1 requires k >= 1");
}

/// Default quadrature degree for non-polynomial integrands.
inline int nonlinear_quadrature_degree(const HhoDegrees& d) { return 2 * d.k + 10; }

/// |t|^{p-2} t, extended by 0 at t = 0.
inline double signed_power(double t, double p)
{
    const double a = std::abs(t);
    return a == 0.0 ? 0.0 : std::pow(a, p - 2.0) * t;
}

struct LocalOperators {
    Matrix gradient;
    Matrix potential;
    Matrix second_potential;
    std::vector<Matrix> face_differences;
};

/// Bases, quadrature caches and DOF layout for one cell.
class LocalElement {
public:
    LocalElement(const Mesh& mesh, std::size_t cell, HhoDegrees degrees, int nonlinear_degree = -1)
        : mesh_(&mesh), cell_(cell), degrees_(degrees)
    {
        validate(degrees);
        const auto& T = mesh.cell(cell);
        const int poly_degree = 2 * degrees.k + 2;
        basis_ = cell_basis(mesh, cell, degrees.k + 1).orthonormalized(mesh.cell_quadrature(cell, poly_degree));
        mass_ = basis_.mass(mesh.cell_quadrature(cell, poly_degree));
        for (auto f : T.faces) {
            face_bases_.push_back(hho::face_basis(mesh, f, degrees.k));
            face_mass_.push_back(face_bases_.back().mass(mesh.face_quadrature(f, 2 * degrees.k)));
        }

        nonlinear_degree_ = nonlinear_degree < 0 ? nonlinear_quadrature_degree(degrees) : nonlinear_degree;
        cell_quad_ = mesh.cell_quadrature(cell, nonlinear_degree_);
        cell_values_.resize(static_cast<Eigen::Index>(cell_quad_.size()), static_cast<Eigen::Index>(basis_.size()));
        for (std::size_t q = 0; q < cell_quad_.size(); ++q)
            cell_values_.row(static_cast<Eigen::Index>(q)) = basis_.values(cell_quad_.points[q].point).transpose();
        for (std::size_t i = 0; i < T.n_faces(); ++i) {
            face_quads_.push_back(mesh.face_quadrature(T.faces[i], nonlinear_degree_));
            Matrix vals(static_cast<Eigen::Index>(face_quads_.back().size()), static_cast<Eigen::Index>(n_face_dofs()));
            for (std::size_t q = 0; q < face_quads_.back().size(); ++q)
                vals.row(static_cast<Eigen::Index>(q)) = face_bases_[i].values(face_quads_.back().points[q].point).transpose();
            face_values_.push_back(std::move(vals));
        }
    }

    const Mesh& mesh() const { return *mesh_; }
    std::size_t cell_index() const { return cell_; }
    const Cell& cell() const { return mesh_->cell(cell_); }
    const HhoDegrees& degrees() const { return degrees_; }
    int nonlinear_degree() const { return nonlinear_degree_; }

    std::size_t n_faces() const { return face_bases_.size(); }
    std::size_t n_cell_dofs() const { return dim_cell_space(degrees_.l); }
    std::size_t n_face_dofs() const { return dim_face_space(degrees_.k); }
    std::size_t n_gradient_dofs() const { return dim_cell_space(degrees_.k); }
    std::size_t n_potential_dofs() const { return dim_cell_space(degrees_.k + 1); }
    std::size_t n_local_dofs() const { return n_cell_dofs() + n_faces() * n_face_dofs(); }
    std::size_t face_offset(std::size_t i) const { return n_cell_dofs() + i * n_face_dofs(); }

    /// Orthonormalized degree k+1 basis; its leading functions span P^l and P^k.
    const CellBasis& basis() const { return basis_; }
    /// Mass matrix of the degree k+1 basis.
    const Matrix& mass() const { return mass_; }
    const FaceBasis& face_basis(std::size_t i) const { return face_bases_[i]; }
    const Matrix& face_mass(std::size_t i) const { return face_mass_[i]; }

    const QuadratureRule& cell_quadrature() const { return cell_quad_; }
    /// Degree k+1 basis values at the nonlinear cell quadrature points (row per point).
    const Matrix& cell_values() const { return cell_values_; }
    const QuadratureRule& face_quadrature(std::size_t i) const { return face_quads_[i]; }
    const Matrix& face_values(std::size_t i) const { return face_values_[i]; }

    Point outward_normal(std::size_t i) const { return mesh_->outward_normal(cell_, i); }
    const Face& face(std::size_t i) const { return mesh_->face(cell().faces[i]); }

    auto cell_block(const Vector& v) const { return v.head(static_cast<Eigen::Index>(n_cell_dofs())); }
    auto face_block(const Vector& v, std::size_t i) const
    {
        return v.segment(static_cast<Eigen::Index>(face_offset(i)), static_cast<Eigen::Index>(n_face_dofs()));
    }

private:
    const Mesh* mesh_;
    std::size_t cell_;
    HhoDegrees degrees_;
    int nonlinear_degree_ = 0;
    CellBasis basis_;
    Matrix mass_;
    std::vector<FaceBasis> face_bases_;
    std::vector<Matrix> face_mass_;
    QuadratureRule cell_quad_;
    Matrix cell_values_;
    std::vector<QuadratureRule> face_quads_;
    std::vector<Matrix> face_values_;
};

/// Coefficients of pi_T^l v, integrated with the element's nonlinear rule.
inline Vector project_cell(const LocalElement& E, const ScalarFunction& v)
{
    const auto nl = static_cast<Eigen::Index>(E.n_cell_dofs());
    Vector b = Vector::Zero(nl);
    const auto& quad = E.cell_quadrature();
    for (std::size_t q = 0; q < quad.size(); ++q)
        b += quad.points[q].weight * v(quad.points[q].point) *
             E.cell_values().row(static_cast<Eigen::Index>(q)).head(nl).transpose();
    return solve_mass(E.mass().topLeftCorner(nl, nl), b);
}

/// Coefficients of pi_F^k v on the i-th face of the element.
inline Vector project_face(const LocalElement& E, std::size_t i, const ScalarFunction& v)
{
    Vector b = Vector::Zero(static_cast<Eigen::Index>(E.n_face_dofs()));
    const auto& fq = E.face_quadrature(i);
    for (std::size_t q = 0; q < fq.size(); ++q)
        b += fq.points[q].weight * v(fq.points[q].point) * E.face_values(i).row(static_cast<Eigen::Index>(q)).transpose();
    return solve_mass(E.face_mass(i), b);
}

/// Local interpolate (pi_T^l v, (pi_F^k v)_F).
inline Vector interpolate(const LocalElement& E, const ScalarFunction& v)
{
    Vector out(static_cast<Eigen::Index>(E.n_local_dofs()));
    out.head(static_cast<Eigen::Index>(E.n_cell_dofs())) = project_cell(E, v);
    for (std::size_t i = 0; i < E.n_faces(); ++i)
        out.segment(static_cast<Eigen::Index>(E.face_offset(i)), static_cast<Eigen::Index>(E.n_face_dofs())) =
            project_face(E, i, v);
    return out;
}

inline Matrix build_gradient_reconstruction(const LocalElement& E)
{
    const int k = E.degrees().k;
    const auto nk = static_cast<Eigen::Index>(E.n_gradient_dofs());
    const auto nl = static_cast<Eigen::Index>(E.n_cell_dofs());
    const auto nf = static_cast<Eigen::Index>(E.n_face_dofs());
    const auto nloc = static_cast<Eigen::Index>(E.n_local_dofs());
    const auto& B = E.basis();
    const auto& mesh = E.mesh();

    // Right-hand side of (G v, phi) = (grad v_T, phi) + sum_F (v_F - v_T, phi.n)_F.
    Matrix rhs = Matrix::Zero(2 * nk, nloc);
    for (const auto& qp : mesh.cell_quadrature(E.cell_index(), 2 * k + 2)) {
        const Vector phi = B.values(qp.point).head(nk);
        const CellBasis::Gradients grad = B.gradients(qp.point).topRows(nl);
        rhs.block(0, 0, nk, nl) += qp.weight * phi * grad.col(0).transpose();
        rhs.block(nk, 0, nk, nl) += qp.weight * phi * grad.col(1).transpose();
    }
    for (std::size_t i = 0; i < E.n_faces(); ++i) {
        const Point n = E.outward_normal(i);
        const auto off = static_cast<Eigen::Index>(E.face_offset(i));
        for (const auto& qp : mesh.face_quadrature(E.cell().faces[i], 2 * k + 2)) {
            const Vector all = B.values(qp.point);
            const Vector phi = all.head(nk);
            const Vector psi = all.head(nl);
            const Vector chi = E.face_basis(i).values(qp.point);
            for (int c = 0; c < 2; ++c) {
                rhs.block(c * nk, 0, nk, nl) -= qp.weight * n(c) * phi * psi.transpose();
                rhs.block(c * nk, off, nk, nf) += qp.weight * n(c) * phi * chi.transpose();
            }
        }
    }

    const Matrix Mk = E.mass().topLeftCorner(nk, nk);
    Matrix G(2 * nk, nloc);
    G.topRows(nk) = solve_mass(Mk, Matrix(rhs.topRows(nk)));
    G.bottomRows(nk) = solve_mass(Mk, Matrix(rhs.bottomRows(nk)));
    return G;
}

/// p_T: gradient is the L2 projection of G_T onto grad P^{k+1}(T); mean equals
/// the mean of the cell unknown. The constant mode is fixed by substitution.
inline Matrix build_potential_reconstruction(const LocalElement& E, const Matrix& G)
{
    const int k = E.degrees().k;
    const auto nk = static_cast<Eigen::Index>(E.n_gradient_dofs());
    const auto nl = static_cast<Eigen::Index>(E.n_cell_dofs());
    const auto n1 = static_cast<Eigen::Index>(E.n_potential_dofs());
    const auto nloc = static_cast<Eigen::Index>(E.n_local_dofs());
    const auto& B = E.basis();

    Matrix stiffness = Matrix::Zero(n1, n1);
    Matrix cx = Matrix::Zero(nk, n1);
    Matrix cy = Matrix::Zero(nk, n1);
    for (const auto& qp : E.mesh().cell_quadrature(E.cell_index(), 2 * k + 2)) {
        const CellBasis::Gradients grad = B.gradients(qp.point);
        const Vector phi = B.values(qp.point).head(nk);
        stiffness += qp.weight * (grad * grad.transpose());
        cx += qp.weight * phi * grad.col(0).transpose();
        cy += qp.weight * phi * grad.col(1).transpose();
    }
    const Matrix rhs = cx.transpose() * G.topRows(nk) + cy.transpose() * G.bottomRows(nk);

    Eigen::LDLT<Matrix> ldlt(stiffness.bottomRightCorner(n1 - 1, n1 - 1));
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
        throw GeometryError("stiffness matrix rank deficient beyond the constant mode on cell " +
                            std::to_string(E.cell_index()));
    Matrix P(n1, nloc);
    P.bottomRows(n1 - 1) = ldlt.solve(rhs.bottomRows(n1 - 1));

    // Mean constraint: integral of p_T v equals integral of v_T.
    const Vector means = E.mass().col(0); // integral of each basis function
    Vector row0 = Vector::Zero(nloc);
    row0.head(nl) = means.head(nl);
    row0 -= P.bottomRows(n1 - 1).transpose() * means.tail(n1 - 1);
    P.row(0) = row0.transpose() / means(0);
    return P;
}

/// P_T v = v_T + (p_T v - pi_T^l p_T v).
inline Matrix build_second_potential(const LocalElement& E, const Matrix& P)
{
    const auto nl = static_cast<Eigen::Index>(E.n_cell_dofs());
    const auto n1 = static_cast<Eigen::Index>(E.n_potential_dofs());
    Matrix P2 = P;
    // pi^l of a P^{k+1} function, in the hierarchical basis.
    const Matrix proj = solve_mass(E.mass().topLeftCorner(nl, nl), Matrix(E.mass().topRows(nl)));
    P2.topRows(nl) -= proj * P;
    P2.topLeftCorner(nl, nl) += Matrix::Identity(nl, nl);
    (void)n1;
    return P2;
}

/// D_F v = pi_F^k (v_F - P_T v) for every face of the element.
inline std::vector<Matrix> build_stabilization(const LocalElement& E, const Matrix& P2)
{
    const int k = E.degrees().k;
    const auto nf = static_cast<Eigen::Index>(E.n_face_dofs());
    const auto n1 = static_cast<Eigen::Index>(E.n_potential_dofs());
    std::vector<Matrix> D;
    D.reserve(E.n_faces());
    for (std::size_t i = 0; i < E.n_faces(); ++i) {
        Matrix cross = Matrix::Zero(nf, n1);
        for (const auto& qp : E.mesh().face_quadrature(E.cell().faces[i], 2 * k + 1))
            cross += qp.weight * E.face_basis(i).values(qp.point) * E.basis().values(qp.point).transpose();
        Matrix Di = -solve_mass(E.face_mass(i), Matrix(cross * P2));
        Di.block(0, static_cast<Eigen::Index>(E.face_offset(i)), nf, nf) += Matrix::Identity(nf, nf);
        D.push_back(std::move(Di));
    }
    return D;
}

inline LocalOperators build_local_operators(const LocalElement& E)
{
    LocalOperators ops;
    ops.gradient = build_gradient_reconstruction(E);
    ops.potential = build_potential_reconstruction(E, ops.gradient);
    ops.second_potential = build_second_potential(E, ops.potential);
    ops.face_differences = build_stabilization(E, ops.second_potential);
    return ops;
}

/// s_T(u, v) = sum_F h_F^{1-p} int_F |D_F u|^{p-2} D_F u D_F v.
inline double stabilization(const LocalElement& E, const LocalOperators& ops,
                            const Vector& u, const Vector& v, double p)
{
    double s = 0.0;
    for (std::size_t i = 0; i < E.n_faces(); ++i) {
        const Vector du = E.face_values(i) * (ops.face_differences[i] * u);
        const Vector dv = E.face_values(i) * (ops.face_differences[i] * v);
        double sf = 0.0;
        const auto& quad = E.face_quadrature(i);
        for (std::size_t q = 0; q < quad.size(); ++q) {
            const auto qi = static_cast<Eigen::Index>(q);
            sf += quad.points[q].weight * signed_power(du(qi), p) * dv(qi);
        }
        s += std::pow(E.face(i).diameter, 1.0 - p) * sf;
    }
    return s;
}

struct LocalNorms {
    double hybrid = 0.0;        ///< ||v||_{1,p,T}
    double stabilization = 0.0; ///< |v|_{s,p,T}
    double gradient = 0.0;      ///< ||G_T v||_{L^p}
    double potential = 0.0;     ///< ||grad p_T v||_{L^p}
};

/// Values of G_T v at the nonlinear cell quadrature points (row per point).
inline Eigen::Matrix<double, Eigen::Dynamic, 2> gradient_at_points(const LocalElement& E,
                                                                   const LocalOperators& ops,
                                                                   const Vector& v)
{
    const auto nk = static_cast<Eigen::Index>(E.n_gradient_dofs());
    const Vector g = ops.gradient * v;
    Eigen::Matrix<double, Eigen::Dynamic, 2> out(E.cell_values().rows(), 2);
    out.col(0) = E.cell_values().leftCols(nk) * g.head(nk);
    out.col(1) = E.cell_values().leftCols(nk) * g.tail(nk);
    return out;
}

inline LocalNorms local_norms(const LocalElement& E, const LocalOperators& ops, const Vector& v, double p)
{
    LocalNorms n;
    const auto nl = static_cast<Eigen::Index>(E.n_cell_dofs());
    const auto& quad = E.cell_quadrature();
    const Vector vT = v.head(nl);
    const Vector pv = ops.potential * v;
    const auto G = gradient_at_points(E, ops, v);

    double grad_T = 0.0, grad_G = 0.0, grad_p = 0.0;
    for (std::size_t q = 0; q < quad.size(); ++q) {
        const auto& x = quad.points[q].point;
        const double w = quad.points[q].weight;
        const CellBasis::Gradients grads = E.basis().gradients(x);
        const Point gT = grads.topRows(nl).transpose() * vT;
        const Point gp = grads.transpose() * pv;
        grad_T += w * std::pow(gT.norm(), p);
        grad_p += w * std::pow(gp.norm(), p);
        grad_G += w * std::pow(G.row(static_cast<Eigen::Index>(q)).norm(), p);
    }

    double faces = 0.0;
    for (std::size_t i = 0; i < E.n_faces(); ++i) {
        const auto& fq = E.face_quadrature(i);
        const Vector vF = E.face_block(v, i);
        double sf = 0.0;
        for (std::size_t q = 0; q < fq.size(); ++q) {
            const auto& x = fq.points[q].point;
            const double diff = E.face_values(i).row(static_cast<Eigen::Index>(q)).dot(vF) -
                                E.basis().values(x).head(nl).dot(vT);
            sf += fq.points[q].weight * std::pow(std::abs(diff), p);
        }
        faces += std::pow(E.face(i).diameter, 1.0 - p) * sf;
    }

    n.hybrid = std::pow(grad_T + faces, 1.0 / p);
    n.stabilization = std::pow(std::max(0.0, stabilization(E, ops, v, v, p)), 1.0 / p);
    n.gradient = std::pow(grad_G, 1.0 / p);
    n.potential = std::pow(grad_p, 1.0 / p);
    return n;
}

} // namespace hho
