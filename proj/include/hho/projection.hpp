// L2-orthogonal projection onto local polynomial spaces.
#pragma once

#include "hho/basis.hpp"

namespace hho {

/// Solves M c = b for an SPD mass matrix, throwing on numerical singularity.
inline Vector solve_mass(const Matrix& mass, const Vector& rhs)
{
    Eigen::LLT<Matrix> llt(mass);
    if (llt.info() != Eigen::Success)
        throw GeometryError("singular mass matrix (degenerate geometry)");
    return llt.solve(rhs);
}

inline Matrix solve_mass(const Matrix& mass, const Matrix& rhs)
{
    Eigen::LLT<Matrix> llt(mass);
    if (llt.info() != Eigen::Success)
        throw GeometryError("singular mass matrix (degenerate geometry)");
    return llt.solve(rhs);
}

/// Coefficients of the L2 projection of `f` onto the span of `basis`.
/// The rule must be exact to degree 2k for the mass matrix.
template <typename Basis>
Vector l2_project(const ScalarFunction& f, const BasisWithMass<Basis>& basis, const QuadratureRule& quad)
{
    if (quad.degree < 2 * basis.basis.degree())
        throw InputError("quadrature degree " + std::to_string(quad.degree) +
                         " too low for projection onto degree " + std::to_string(basis.basis.degree()));
    Vector b = Vector::Zero(basis.size());
    for (const auto& qp : quad)
        b += qp.weight * f(qp.point) * basis.basis.values(qp.point);
    return solve_mass(basis.mass, b);
}

/// Evaluates a polynomial given by its coefficients.
template <typename Basis>
double evaluate(const Basis& basis, const Vector& coeffs, const Point& x)
{
    return basis.values(x).head(coeffs.size()).dot(coeffs);
}

} // namespace hho
