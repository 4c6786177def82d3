// Scaled monomial bases on cells and faces.
//
// Cell basis functions are ((x - x_T)/h_T)^a ((y - y_T)/h_T)^b with a + b <= k,
// ordered by total degree and then by decreasing power of x. The ordering is
// hierarchical: the first dim P^l functions of a degree-k basis span P^l.
//
// A basis may carry a lower-triangular transform applied to the monomials.
// `orthonormalized` builds one from the Cholesky factor of the mass matrix;
// being triangular it keeps the hierarchy intact.
#pragma once

#include "hho/common.hpp"
#include "hho/mesh.hpp"
#include "hho/quadrature.hpp"

#include <array>
#include <vector>

namespace hho {

inline constexpr int max_basis_degree = 8;

namespace detail {

inline void check_basis_degree(int k)
{
    if (k < 0 || k > max_basis_degree)
        throw InputError("polynomial degree " + std::to_string(k) + " outside [0, " +
                         std::to_string(max_basis_degree) + "]");
}

/// Falling factorial n (n-1) ... (n-m+1).
inline double falling(int n, int m)
{
    double r = 1.0;
    for (int i = 0; i < m; ++i)
        r *= n - i;
    return r;
}

inline double ipow(double x, int n)
{
    double r = 1.0;
    for (int i = 0; i < n; ++i)
        r *= x;
    return r;
}

} // namespace detail

class CellBasis {
public:
    using Gradients = Eigen::Matrix<double, Eigen::Dynamic, 2>;

    CellBasis() = default;

    CellBasis(const Point& center, double scale, int degree)
        : center_(center), scale_(scale), degree_(degree)
    {
        detail::check_basis_degree(degree);
        for (int d = 0; d <= degree; ++d)
            for (int a = d; a >= 0; --a)
                powers_.push_back({a, d - a});
    }

    int degree() const { return degree_; }
    std::size_t size() const { return powers_.size(); }
    const Point& center() const { return center_; }
    double scale() const { return scale_; }
    const std::array<int, 2>& powers(std::size_t i) const { return powers_[i]; }

    Vector values(const Point& x) const
    {
        const auto [px, py] = power_tables(x);
        Vector v(size());
        for (std::size_t i = 0; i < size(); ++i)
            v(static_cast<Eigen::Index>(i)) = px[powers_[i][0]] * py[powers_[i][1]];
        return transformed(v);
    }

    Gradients gradients(const Point& x) const
    {
        Gradients g = monomial_gradients(x);
        if (transform_.size() > 0)
            g = transform_.triangularView<Eigen::Lower>() * g;
        return g;
    }

    /// Partial derivatives d^{dx+dy} / dx^dx dy^dy of every basis function.
    Vector derivatives(const Point& x, int dx, int dy) const
    {
        const auto [px, py] = power_tables(x);
        const double factor = detail::ipow(1.0 / scale_, dx + dy);
        Vector v(size());
        for (std::size_t i = 0; i < size(); ++i) {
            const auto [a, b] = powers_[i];
            v(static_cast<Eigen::Index>(i)) =
                (a < dx || b < dy) ? 0.0
                                   : factor * detail::falling(a, dx) * detail::falling(b, dy) *
                                         px[a - dx] * py[b - dy];
        }
        return transformed(v);
    }

    /// Mass matrix on the cell, exact for the given rule of degree >= 2k.
    Matrix mass(const QuadratureRule& quad) const
    {
        Matrix M = Matrix::Zero(size(), size());
        for (const auto& qp : quad) {
            const Vector phi = values(qp.point);
            M.selfadjointView<Eigen::Lower>().rankUpdate(phi, qp.weight);
        }
        return M.selfadjointView<Eigen::Lower>();
    }

    bool is_monomial() const { return transform_.size() == 0; }

    /// Hierarchically L2-orthonormal basis of the same space; the rule must
    /// be exact to degree 2k. Two Cholesky passes recover the accuracy lost
    /// to the conditioning of the monomial mass matrix.
    CellBasis orthonormalized(const QuadratureRule& quad) const
    {
        CellBasis b = *this;
        for (int pass = 0; pass < 2; ++pass) {
            Eigen::LLT<Matrix> llt(b.mass(quad));
            if (llt.info() != Eigen::Success)
                throw GeometryError("singular mass matrix while orthonormalizing a cell basis");
            Matrix Linv = llt.matrixL().solve(Matrix::Identity(size(), size()));
            b.transform_ = b.transform_.size() == 0 ? Linv : Matrix(Linv * b.transform_);
            b.transform_.triangularView<Eigen::StrictlyUpper>().setZero();
        }
        return b;
    }

private:
    Vector transformed(const Vector& v) const
    {
        if (transform_.size() == 0)
            return v;
        return transform_.triangularView<Eigen::Lower>() * v;
    }

    Gradients monomial_gradients(const Point& x) const
    {
        const auto [px, py] = power_tables(x);
        Gradients g(size(), 2);
        for (std::size_t i = 0; i < size(); ++i) {
            const auto [a, b] = powers_[i];
            const auto r = static_cast<Eigen::Index>(i);
            g(r, 0) = a > 0 ? a * px[a - 1] * py[b] / scale_ : 0.0;
            g(r, 1) = b > 0 ? b * px[a] * py[b - 1] / scale_ : 0.0;
        }
        return g;
    }

    std::array<std::array<double, max_basis_degree + 1>, 2> power_tables(const Point& x) const
    {
        std::array<std::array<double, max_basis_degree + 1>, 2> t{};
        const double sx = (x.x() - center_.x()) / scale_;
        const double sy = (x.y() - center_.y()) / scale_;
        t[0][0] = t[1][0] = 1.0;
        for (int i = 1; i <= degree_; ++i) {
            t[0][i] = t[0][i - 1] * sx;
            t[1][i] = t[1][i - 1] * sy;
        }
        return t;
    }

    Point center_ = Point::Zero();
    double scale_ = 1.0;
    int degree_ = 0;
    std::vector<std::array<int, 2>> powers_;
    Matrix transform_;
};

class FaceBasis {
public:
    FaceBasis() = default;

    FaceBasis(const Point& origin, const Point& tangent, double scale, int degree)
        : origin_(origin), tangent_(tangent), scale_(scale), degree_(degree)
    {
        detail::check_basis_degree(degree);
    }

    int degree() const { return degree_; }
    std::size_t size() const { return static_cast<std::size_t>(degree_ + 1); }

    double coordinate(const Point& x) const { return (x - origin_).dot(tangent_) / scale_; }

    Vector values(const Point& x) const
    {
        const double t = coordinate(x);
        Vector v(size());
        double p = 1.0;
        for (int i = 0; i <= degree_; ++i) {
            v(i) = p;
            p *= t;
        }
        return v;
    }

    Matrix mass(const QuadratureRule& quad) const
    {
        Matrix M = Matrix::Zero(size(), size());
        for (const auto& qp : quad) {
            const Vector phi = values(qp.point);
            M.selfadjointView<Eigen::Lower>().rankUpdate(phi, qp.weight);
        }
        return M.selfadjointView<Eigen::Lower>();
    }

private:
    Point origin_ = Point::Zero();
    Point tangent_ = Point(1.0, 0.0);
    double scale_ = 1.0;
    int degree_ = 0;
};

/// A basis together with its mass matrix.
template <typename Basis>
struct BasisWithMass {
    Basis basis;
    Matrix mass;

    std::size_t size() const { return basis.size(); }

    /// 2-norm condition number of the mass matrix.
    double condition_number() const
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(mass, Eigen::EigenvaluesOnly);
        const auto& ev = es.eigenvalues();
        return ev(ev.size() - 1) / ev(0);
    }
};

using CellBasisData = BasisWithMass<CellBasis>;
using FaceBasisData = BasisWithMass<FaceBasis>;

inline CellBasis cell_basis(const Mesh& mesh, std::size_t c, int k)
{
    const auto& T = mesh.cell(c);
    return CellBasis(T.centroid, T.diameter, k);
}

inline FaceBasis face_basis(const Mesh& mesh, std::size_t f, int k)
{
    const auto& F = mesh.face(f);
    return FaceBasis(F.midpoint, F.tangent, F.diameter, k);
}

enum class BasisKind { monomial, orthonormal };

inline CellBasisData make_cell_basis(const Mesh& mesh, std::size_t c, int k, BasisKind kind = BasisKind::monomial)
{
    const auto quad = mesh.cell_quadrature(c, 2 * k);
    CellBasisData b{cell_basis(mesh, c, k), {}};
    if (kind == BasisKind::orthonormal)
        b.basis = b.basis.orthonormalized(quad);
    b.mass = b.basis.mass(quad);
    return b;
}

inline FaceBasisData make_face_basis(const Mesh& mesh, std::size_t f, int k)
{
    FaceBasisData b{face_basis(mesh, f, k), {}};
    b.mass = b.basis.mass(mesh.face_quadrature(f, 2 * k));
    return b;
}

} // namespace hho
