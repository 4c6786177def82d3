// Quadrature rules on segments, triangles and polygonal cells.
//
// Segment rules are Gauss-Legendre. Triangle rules are collapsed (Duffy)
// tensor products of Gauss-Legendre rules, which are exact for any total
// degree and have positive weights. Cell rules are the union of triangle
// rules over the simplicial subdivision of the cell.
#pragma once

#include "hho/common.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace hho {

inline constexpr int max_quadrature_degree = 40;

struct QuadraturePoint {
    Point point;
    double weight;
};

struct QuadratureRule {
    std::vector<QuadraturePoint> points;
    int degree = 0;

    std::size_t size() const { return points.size(); }
    auto begin() const { return points.begin(); }
    auto end() const { return points.end(); }

    double total_weight() const
    {
        double w = 0.0;
        for (const auto& qp : points)
            w += qp.weight;
        return w;
    }
};

namespace detail {

inline void check_degree(int degree)
{
    if (degree < 0 || degree > max_quadrature_degree)
        throw InputError("quadrature degree " + std::to_string(degree) +
                         " outside [0, " + std::to_string(max_quadrature_degree) + "]");
}

} // namespace detail

/// Gauss-Legendre nodes and weights on [0, 1] with n points (exact to 2n-1).
inline std::vector<std::array<double, 2>> gauss_legendre_unit(int n)
{
    // P_n(x) and P_{n-1}(x) by the three-term recurrence.
    const auto legendre = [n](double x) {
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= n; ++j) {
            const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        return std::array<double, 2>{p1, p0};
    };

    std::vector<std::array<double, 2>> rule(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [pn, pm] = legendre(x);
            const double dx = pn / (n * (x * pn - pm) / (x * x - 1.0));
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        const auto [pn, pm] = legendre(x);
        const double dp = n * (x * pn - pm) / (x * x - 1.0);
        const double w = 1.0 / ((1.0 - x * x) * dp * dp);
        rule[static_cast<std::size_t>(i)] = {0.5 * (1.0 - x), w};
        rule[static_cast<std::size_t>(n - 1 - i)] = {0.5 * (1.0 + x), w};
    }
    return rule;
}

/// Gauss-Legendre rule on the segment [a, b], exact for polynomials of degree `degree`.
inline QuadratureRule segment_quadrature(const Point& a, const Point& b, int degree)
{
    detail::check_degree(degree);
    const int n = degree / 2 + 1;
    const double length = (b - a).norm();
    QuadratureRule rule;
    rule.degree = degree;
    rule.points.reserve(static_cast<std::size_t>(n));
    for (const auto& [t, w] : gauss_legendre_unit(n))
        rule.points.push_back({a + t * (b - a), w * length});
    return rule;
}

/// Collapsed tensor rule on the triangle (a, b, c), exact to total degree `degree`.
inline void append_triangle_quadrature(const Point& a, const Point& b, const Point& c,
                                       int degree, QuadratureRule& rule)
{
    detail::check_degree(degree);
    const int nw = degree / 2 + 1;       // exact in the collapsed variable
    const int nu = (degree + 1) / 2 + 1; // one more for the Jacobian factor u
    const Point e1 = b - a;
    const Point e2 = c - b;
    const double jac = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
    const auto ru = gauss_legendre_unit(nu);
    const auto rw = gauss_legendre_unit(nw);
    for (const auto& [u, wu] : ru)
        for (const auto& [w, ww] : rw)
            rule.points.push_back({a + u * e1 + u * w * e2, wu * ww * u * jac});
}

inline QuadratureRule triangle_quadrature(const Point& a, const Point& b, const Point& c, int degree)
{
    QuadratureRule rule;
    rule.degree = degree;
    append_triangle_quadrature(a, b, c, degree, rule);
    return rule;
}

} // namespace hho
