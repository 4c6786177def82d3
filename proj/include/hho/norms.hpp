// Global discrete norms and error measures on an HHO space.
#pragma once

#include "hho/assembly.hpp"
#include "hho/manufactured.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hho {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// Accumulates ||v||_{L^q}: sums w|v|^q for finite q, tracks max|v| for q = inf.
class LpAccumulator {
public:
    explicit LpAccumulator(double q) : q_(q)
    {
        if (!(q >= 1.0))
            throw InputError("Lebesgue exponent must be >= 1");
    }

    void add(double weight, double value)
    {
        const double a = std::abs(value);
        if (std::isinf(q_))
            max_ = std::max(max_, a);
        else
            sum_ += weight * std::pow(a, q_);
    }
    /// Point sample that only enters the L^inf approximation.
    void add_sample(double value)
    {
        if (std::isinf(q_))
            max_ = std::max(max_, std::abs(value));
    }
    /// Adds the q-th power of an already computed norm (finite q).
    void add_power(double power) { sum_ += power; }

    double q() const { return q_; }
    double power() const { return sum_; }
    double value() const { return std::isinf(q_) ? max_ : std::pow(sum_, 1.0 / q_); }

private:
    double q_;
    double sum_ = 0.0;
    double max_ = 0.0;
};

struct DiscreteNorms {
    double hybrid = 0.0;   ///< ||u||_{1,p,h}
    double dg = 0.0;       ///< ||u_h||_{dG,p} of the broken cell polynomial
    double gradient = 0.0; ///< ||G_h u||_{L^p}
};

namespace detail {

inline double eval_cell(const LocalElement& E, const Vector& uT, const Point& x)
{
    return E.basis().values(x).head(uT.size()).dot(uT);
}

} // namespace detail

/// ||f||_{L^q(Omega)} with a degree `degree` rule on every cell; L^inf is
/// approximated by the max over quadrature points and vertices.
inline double function_lp_norm(const Mesh& mesh, const ScalarFunction& f, double q, int degree = 20)
{
    LpAccumulator acc(q);
    for (std::size_t c = 0; c < mesh.n_cells(); ++c)
        for (const auto& qp : mesh.cell_quadrature(c, degree))
            acc.add(qp.weight, f(qp.point));
    for (const auto& v : mesh.vertices())
        acc.add_sample(f(v));
    return acc.value();
}

/// ||u_h||_{L^q} of the broken polynomial defined by the cell blocks.
inline double cell_lp_norm(const HhoSpace& S, const Vector& full, double q)
{
    LpAccumulator acc(q);
    for (std::size_t c = 0; c < S.n_cells(); ++c) {
        const auto& E = S.element(c);
        const Vector uT = S.cell_block(full, c);
        const Vector vals = E.cell_values().leftCols(uT.size()) * uT;
        const auto& quad = E.cell_quadrature();
        for (std::size_t i = 0; i < quad.size(); ++i)
            acc.add(quad.points[i].weight, vals(static_cast<Eigen::Index>(i)));
        for (auto v : E.cell().vertices)
            acc.add_sample(detail::eval_cell(E, uT, S.mesh().vertex(v)));
    }
    return acc.value();
}

/// ||u_h - p_h u||_{L^q}.
inline double potential_difference_norm(const HhoSpace& S, const Vector& full, double q)
{
    LpAccumulator acc(q);
    for (std::size_t c = 0; c < S.n_cells(); ++c) {
        const auto& E = S.element(c);
        const Vector u = S.gather(full, c);
        Vector d = S.operators(c).potential * u;
        d.head(static_cast<Eigen::Index>(E.n_cell_dofs())) -= E.cell_block(u);
        const Vector vals = E.cell_values() * d;
        const auto& quad = E.cell_quadrature();
        for (std::size_t i = 0; i < quad.size(); ++i)
            acc.add(quad.points[i].weight, vals(static_cast<Eigen::Index>(i)));
        for (auto v : E.cell().vertices)
            acc.add_sample(E.basis().values(S.mesh().vertex(v)).dot(d));
    }
    return acc.value();
}

/// ||grad_h u_h||_{L^p} of the broken cell polynomial.
inline double broken_gradient_norm(const HhoSpace& S, const Vector& full, double p)
{
    LpAccumulator acc(p);
    for (std::size_t c = 0; c < S.n_cells(); ++c) {
        const auto& E = S.element(c);
        const Vector uT = S.cell_block(full, c);
        for (const auto& qp : E.cell_quadrature()) {
            const Point g = E.basis().gradients(qp.point).topRows(uT.size()).transpose() * uT;
            acc.add(qp.weight, g.norm());
        }
    }
    return acc.value();
}

/// ||G_h u||_{L^p}.
inline double reconstructed_gradient_norm(const HhoSpace& S, const Vector& full, double p)
{
    LpAccumulator acc(p);
    for (std::size_t c = 0; c < S.n_cells(); ++c) {
        const auto& E = S.element(c);
        const auto G = gradient_at_points(E, S.operators(c), S.gather(full, c));
        const auto& quad = E.cell_quadrature();
        for (std::size_t i = 0; i < quad.size(); ++i)
            acc.add(quad.points[i].weight, G.row(static_cast<Eigen::Index>(i)).norm());
    }
    return acc.value();
}

/// ||u||_{1,p,h} = (sum_T ||u||_{1,p,T}^p)^{1/p}. Boundary faces enter like
/// interior ones; for Dirichlet data they carry the boundary values.
inline double hybrid_norm(const HhoSpace& S, const Vector& full, double p)
{
    LpAccumulator acc(p);
    for (std::size_t c = 0; c < S.n_cells(); ++c)
        acc.add_power(std::pow(local_norms(S.element(c), S.operators(c), S.gather(full, c), p).hybrid, p));
    return acc.value();
}

/// ||u_h||_{dG,p}: broken gradient plus h_F^{1-p}-weighted jumps, where the
/// jump on a boundary face is the trace.
inline double dg_norm(const HhoSpace& S, const Vector& full, double p)
{
    const Mesh& mesh = S.mesh();
    double sum = std::pow(broken_gradient_norm(S, full, p), p);
    for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
        const Face& F = mesh.face(f);
        const auto& E1 = S.element(F.cells[0]);
        const Vector u1 = S.cell_block(full, F.cells[0]);
        double jf = 0.0;
        for (const auto& qp : mesh.face_quadrature(f, E1.nonlinear_degree())) {
            double jump = detail::eval_cell(E1, u1, qp.point);
            if (!F.is_boundary())
                jump -= detail::eval_cell(S.element(F.cells[1]), S.cell_block(full, F.cells[1]), qp.point);
            jf += qp.weight * std::pow(std::abs(jump), p);
        }
        sum += std::pow(F.diameter, 1.0 - p) * jf;
    }
    return std::pow(sum, 1.0 / p);
}

inline DiscreteNorms discrete_norms(const HhoSpace& S, const Vector& full, double p)
{
    return {hybrid_norm(S, full, p), dg_norm(S, full, p), reconstructed_gradient_norm(S, full, p)};
}

inline DiscreteNorms discrete_norms(const HhoSpace& S, const DiscreteSolution& u, double p)
{
    return discrete_norms(S, u.coefficients, p);
}

/// sum_T s_T(u, u).
inline double stabilization_sum(const HhoSpace& S, const Vector& full, double p)
{
    double s = 0.0;
    for (std::size_t c = 0; c < S.n_cells(); ++c) {
        const Vector u = S.gather(full, c);
        s += stabilization(S.element(c), S.operators(c), u, u, p);
    }
    return s;
}

/// ||G_h(u_h - I_h u)||_{L^p}, evaluated with the elements' nonlinear
/// (degree 2k+10) rule.
inline double gradient_error(const HhoSpace& S, const DiscreteSolution& u, const ScalarFunction& exact, double p)
{
    return reconstructed_gradient_norm(S, u.coefficients - S.interpolate(exact), p);
}

/// ||G_h u_h - grad u||_{L^p}, a diagnostic against the exact gradient.
inline double gradient_error_exact(const HhoSpace& S, const DiscreteSolution& u, const SmoothFunction& exact, double p)
{
    LpAccumulator acc(p);
    for (std::size_t c = 0; c < S.n_cells(); ++c) {
        const auto& E = S.element(c);
        const auto G = gradient_at_points(E, S.operators(c), S.gather(u.coefficients, c));
        const auto& quad = E.cell_quadrature();
        for (std::size_t i = 0; i < quad.size(); ++i) {
            const Point g = G.row(static_cast<Eigen::Index>(i)).transpose();
            acc.add(quad.points[i].weight, (g - exact.gradient(quad.points[i].point)).norm());
        }
    }
    return acc.value();
}

/// Integral of u_h over the domain.
inline double cell_integral(const HhoSpace& S, const Vector& full)
{
    double s = 0.0;
    for (std::size_t c = 0; c < S.n_cells(); ++c)
        s += S.cell_integrals(c).dot(S.cell_block(full, c));
    return s;
}

} // namespace hho
