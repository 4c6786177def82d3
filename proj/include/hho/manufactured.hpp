// Smooth test functions with analytic derivatives of every order, and the
// manufactured-solution registry used by convergence studies.
#pragma once

#include "hho/common.hpp"
#include "hho/flux.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace hho {

/// A smooth function known through all its partial derivatives.
struct SmoothFunction {
    std::string name;
    /// d^{dx+dy} f / dx^dx dy^dy at x.
    std::function<double(const Point&, int, int)> derivative;

    double operator()(const Point& x) const { return derivative(x, 0, 0); }
    Point gradient(const Point& x) const { return {derivative(x, 1, 0), derivative(x, 0, 1)}; }
    Matrix2 hessian(const Point& x) const
    {
        Matrix2 H;
        H(0, 0) = derivative(x, 2, 0);
        H(0, 1) = H(1, 0) = derivative(x, 1, 1);
        H(1, 1) = derivative(x, 0, 2);
        return H;
    }
    ScalarFunction function() const
    {
        auto d = derivative;
        return [d](const Point& x) { return d(x, 0, 0); };
    }

    /// Euclidean norm of the tensor of m-th derivatives, |D^m f|.
    double derivative_norm(const Point& x, int m) const
    {
        double s = 0.0;
        for (int a = 0; a <= m; ++a) {
            // Each mixed partial appears binomial(m, a) times in the tensor.
            double binom = 1.0;
            for (int i = 0; i < a; ++i)
                binom = binom * (m - i) / (i + 1);
            const double v = derivative(x, a, m - a);
            s += binom * v * v;
        }
        return std::sqrt(s);
    }
};

namespace detail {

/// n-th derivative of sin(t) (shift == 0) or cos(t) (shift == 1).
inline double trig_derivative(double t, int n, int shift)
{
    return std::sin(t + (n + shift) * M_PI / 2.0);
}

inline double power_or_one(double x, int n) { return n == 0 ? 1.0 : std::pow(x, n); }

} // namespace detail

/// u = exp(x + pi y).
inline SmoothFunction exp_solution()
{
    return {"exp", [](const Point& x, int /*dx*/, int dy) {
                return detail::power_or_one(M_PI, dy) * std::exp(x.x() + M_PI * x.y());
            }};
}

/// u = sin(pi x) sin(pi y), vanishing on the boundary of the unit square.
inline SmoothFunction sinsin_solution()
{
    return {"sinsin", [](const Point& x, int dx, int dy) {
                return detail::power_or_one(M_PI, dx + dy) * detail::trig_derivative(M_PI * x.x(), dx, 0) *
                       detail::trig_derivative(M_PI * x.y(), dy, 0);
            }};
}

/// u = cos(pi x) cos(pi y): zero mean and zero normal derivative on the unit square.
inline SmoothFunction coscos_solution()
{
    return {"coscos", [](const Point& x, int dx, int dy) {
                return detail::power_or_one(M_PI, dx + dy) * detail::trig_derivative(M_PI * x.x(), dx, 1) *
                       detail::trig_derivative(M_PI * x.y(), dy, 1);
            }};
}

inline std::vector<std::string> manufactured_solution_names() { return {"exp", "sinsin", "coscos"}; }

inline SmoothFunction manufactured_solution(const std::string& name)
{
    if (name == "exp")
        return exp_solution();
    if (name == "sinsin")
        return sinsin_solution();
    if (name == "coscos")
        return coscos_solution();
    throw InputError("unknown manufactured solution '" + name + "'");
}

/// sum_i a_i sin(w_i . x + phi_i) + b exp(g . x) with random parameters.
inline SmoothFunction random_smooth_function(std::mt19937_64& rng, int terms = 3)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    struct Wave {
        double a;
        Point w;
        double phi;
    };
    std::vector<Wave> waves;
    for (int i = 0; i < terms; ++i)
        waves.push_back({u(rng), Point(3.0 * u(rng), 3.0 * u(rng)), M_PI * u(rng)});
    const double b = 0.5 * u(rng);
    const Point g(u(rng), u(rng));
    return {"random", [waves, b, g](const Point& x, int dx, int dy) {
                double v = b * detail::power_or_one(g.x(), dx) * detail::power_or_one(g.y(), dy) * std::exp(g.dot(x));
                for (const auto& w : waves)
                    v += w.a * detail::power_or_one(w.w.x(), dx) * detail::power_or_one(w.w.y(), dy) *
                         detail::trig_derivative(w.w.dot(x) + w.phi, dx + dy, 0);
                return v;
            }};
}

/// Random polynomial of total degree <= k, written in monomials around `center`
/// with variables scaled by `scale`.
inline SmoothFunction random_polynomial(std::mt19937_64& rng, int k, const Point& center = Point::Zero(),
                                        double scale = 1.0)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    struct Term {
        int a, b;
        double c;
    };
    std::vector<Term> terms;
    for (int d = 0; d <= k; ++d)
        for (int a = d; a >= 0; --a)
            terms.push_back({a, d - a, u(rng)});
    return {"polynomial", [terms, center, scale](const Point& x, int dx, int dy) {
                const double sx = (x.x() - center.x()) / scale;
                const double sy = (x.y() - center.y()) / scale;
                double v = 0.0;
                for (const auto& t : terms) {
                    if (t.a < dx || t.b < dy)
                        continue;
                    double f = t.c;
                    for (int i = 0; i < dx; ++i)
                        f *= (t.a - i) / scale;
                    for (int i = 0; i < dy; ++i)
                        f *= (t.b - i) / scale;
                    v += f * detail::power_or_one(sx, t.a - dx) * detail::power_or_one(sy, t.b - dy);
                }
                return v;
            }};
}

/// f = -div a(grad u) = -tr(J_a(grad u) D^2 u) for a law independent of x and s.
inline ScalarFunction manufactured_source(const SmoothFunction& u, FluxLawPtr law)
{
    return [u, law](const Point& x) {
        const Matrix2 J = law->jacobian(x, u(x), u.gradient(x));
        return -(J.cwiseProduct(u.hessian(x).transpose())).sum();
    };
}

/// Closed form of the source for the p-Laplacian and u = exp(x + pi y):
/// f = -(p-1) (1+pi^2)^{p/2} exp((p-1)(x + pi y)).
inline double exp_plaplace_source(const Point& x, double p)
{
    return -(p - 1.0) * std::pow(1.0 + M_PI * M_PI, p / 2.0) * std::exp((p - 1.0) * (x.x() + M_PI * x.y()));
}

} // namespace hho
