// Leray-Lions flux laws a(x, s, xi) and empirical probes of their structural
// assumptions (monotonicity, coercivity, growth).
#pragma once

#include "hho/common.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>

namespace hho {

/// Structural constants of a law: a(x,s,xi).xi >= lambda |xi|^p and
/// |a(x,s,xi)| <= abar(x) + beta (|s|^r + |xi|^{p-1}).
struct FluxConstants {
    double lambda = 1.0;
    double beta = 1.0;
    double abar = 0.0; ///< sup of the offset function; 0 for the shipped laws
    double r = 0.0;    ///< exponent on |s|; irrelevant when the law ignores s
    /// Smallest |xi| for which `lambda` is claimed (0 = everywhere).
    double coercivity_floor = 0.0;
};

class FluxLaw {
public:
    virtual ~FluxLaw() = default;

    virtual std::string name() const = 0;
    virtual double exponent() const = 0;
    virtual Point flux(const Point& x, double s, const Point& xi) const = 0;
    /// d a / d xi.
    virtual Matrix2 jacobian(const Point& x, double s, const Point& xi) const = 0;
    virtual FluxConstants constants() const = 0;

    virtual bool depends_on_s() const { return false; }
    /// d a / d s, used only when `depends_on_s()`.
    virtual Point ds(const Point&, double, const Point&) const { return Point::Zero(); }
    virtual bool has_ds() const { return false; }

    virtual double regularization() const { return 0.0; }
    /// Copy of this law with regularization parameter eps (identity for
    /// laws that need none).
    virtual std::shared_ptr<const FluxLaw> regularized(double eps) const = 0;
};

using FluxLawPtr = std::shared_ptr<const FluxLaw>;

/// a(xi) = |xi|^{p-2} xi, or (|xi|^2 + eps^2)^{(p-2)/2} xi when eps > 0.
class PLaplaceLaw final : public FluxLaw {
public:
    explicit PLaplaceLaw(double p, double epsilon = 0.0) : p_(p), eps_(epsilon)
    {
        if (!(p > 1.0) || !std::isfinite(p))
            throw InputError("p-Laplace exponent must satisfy p > 1 (got " + std::to_string(p) + ")");
        if (!(epsilon >= 0.0))
            throw InputError("regularization epsilon must be >= 0");
    }

    std::string name() const override { return "plaplace"; }
    double exponent() const override { return p_; }
    double regularization() const override { return eps_; }

    Point flux(const Point&, double, const Point& xi) const override
    {
        if (p_ == 2.0)
            return xi;
        const double rho2 = xi.squaredNorm() + eps_ * eps_;
        if (rho2 == 0.0)
            return Point::Zero();
        return std::pow(rho2, 0.5 * (p_ - 2.0)) * xi;
    }

    Matrix2 jacobian(const Point&, double, const Point& xi) const override
    {
        if (p_ == 2.0)
            return Matrix2::Identity();
        const double rho2 = xi.squaredNorm() + eps_ * eps_;
        if (rho2 == 0.0) {
            if (p_ > 2.0)
                return Matrix2::Zero();
            throw SolverError(SolverError::Kind::singular,
                              "p-Laplace Jacobian is singular at xi = 0 for p < 2 without regularization");
        }
        const double a = std::pow(rho2, 0.5 * (p_ - 2.0));
        return a * Matrix2::Identity() + (p_ - 2.0) * (a / rho2) * (xi * xi.transpose());
    }

    FluxConstants constants() const override { return {}; }

    FluxLawPtr regularized(double eps) const override { return std::make_shared<PLaplaceLaw>(p_, eps); }

private:
    double p_;
    double eps_;
};

/// Viscosity of the glacier model: the positive root F of
/// 1/F = (s F)^beta + T0^beta with beta = alpha / (1 - alpha).
inline double glacier_viscosity(double s, double alpha, double t0)
{
    if (!(s >= 0.0) || !std::isfinite(s))
        throw InputError("glacier viscosity requires s >= 0");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InputError("glacier exponent alpha must lie in (0, 1)");
    if (!(t0 > 0.0))
        throw InputError("glacier parameter T0 must be positive");

    const double beta = alpha / (1.0 - alpha);
    const double f0 = std::pow(t0, -beta);
    if (s == 0.0)
        return f0;

    // In y = log F the equation reads G(y) = y + log((sF)^beta + T0^beta) = 0
    // with G increasing and convex, so Newton started to the right of the
    // root decreases monotonically onto it. Both log f0 and -alpha log s lie
    // to the right of the root.
    const double log_s = std::log(s);
    const double log_t = std::log(t0);
    const auto G = [&](double y, double& dG) {
        const double a = beta * (log_s + y);
        const double b = beta * log_t;
        const double m = std::max(a, b);
        const double ea = std::exp(a - m), eb = std::exp(b - m);
        dG = 1.0 + beta * ea / (ea + eb);
        return y + m + std::log(ea + eb);
    };

    double y = std::min(std::log(f0), -alpha * log_s);
    double lo = -std::numeric_limits<double>::infinity();
    double hi = y;
    for (int it = 0; it < 200; ++it) {
        double dG = 0.0;
        const double r = G(y, dG);
        if (std::abs(r) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(y)))
            return std::exp(y);
        if (r > 0.0)
            hi = y;
        else
            lo = y;
        double next = y - r / dG;
        if (!(next > lo && next < hi))
            next = std::isfinite(lo) ? 0.5 * (lo + hi) : hi - 1.0;
        if (next == y)
            return std::exp(y);
        y = next;
    }
    throw SolverError(SolverError::Kind::max_iterations,
                      "glacier viscosity iteration did not converge (s=" + std::to_string(s) + ")");
}

/// a(xi) = F(|xi|) xi with the glacier viscosity; behaves like |xi|^{p-2} xi
/// with p = 2 - alpha for large |xi|.
class GlacierLaw final : public FluxLaw {
public:
    GlacierLaw(double alpha, double t0, double coercivity_floor = 1e-2)
        : alpha_(alpha), t0_(t0), floor_(coercivity_floor)
    {
        glacier_viscosity(1.0, alpha, t0); // validates parameters
        if (!(coercivity_floor > 0.0))
            throw InputError("glacier coercivity floor must be positive");
    }

    std::string name() const override { return "glacier"; }
    double exponent() const override { return 2.0 - alpha_; }
    double alpha() const { return alpha_; }
    double t0() const { return t0_; }

    Point flux(const Point&, double, const Point& xi) const override
    {
        return glacier_viscosity(xi.norm(), alpha_, t0_) * xi;
    }

    Matrix2 jacobian(const Point&, double, const Point& xi) const override
    {
        const double s = xi.norm();
        const double F = glacier_viscosity(s, alpha_, t0_);
        if (s == 0.0)
            return F * Matrix2::Identity();
        // Implicit differentiation of 1/F = (sF)^beta + T0^beta, times s.
        const double beta = alpha_ / (1.0 - alpha_);
        const double sfb = std::pow(s * F, beta);
        const double dF_times_s = -beta * sfb / (1.0 / (F * F) + beta * sfb / F);
        const Point e = xi / s;
        return F * Matrix2::Identity() + dF_times_s * (e * e.transpose());
    }

    /// lambda is the value of F(s) s^alpha at the floor: that ratio increases
    /// monotonically in s (to 1 as s -> infinity) and vanishes as s -> 0.
    FluxConstants constants() const override
    {
        FluxConstants c;
        c.lambda = glacier_viscosity(floor_, alpha_, t0_) * std::pow(floor_, alpha_);
        c.beta = 1.0;
        c.coercivity_floor = floor_;
        return c;
    }

    FluxLawPtr regularized(double) const override { return std::make_shared<GlacierLaw>(*this); }

private:
    double alpha_;
    double t0_;
    double floor_;
};

/// A law given by user callbacks; used for experiments and probe tests.
class CustomLaw final : public FluxLaw {
public:
    using FluxFn = std::function<Point(const Point&, double, const Point&)>;
    using JacobianFn = std::function<Matrix2(const Point&, double, const Point&)>;

    /// `ds` may be empty for an s-dependent law; assembly then differentiates in s numerically.
    CustomLaw(std::string name, double p, FluxFn flux, JacobianFn jacobian, FluxConstants constants = {},
              bool depends_on_s = false, FluxFn ds = {})
        : name_(std::move(name)), p_(p), flux_(std::move(flux)), jacobian_(std::move(jacobian)), constants_(constants),
          depends_on_s_(depends_on_s), ds_(std::move(ds))
    {
        if (!(p > 1.0))
            throw InputError("flux exponent must satisfy p > 1");
    }

    std::string name() const override { return name_; }
    double exponent() const override { return p_; }
    Point flux(const Point& x, double s, const Point& xi) const override { return flux_(x, s, xi); }
    Matrix2 jacobian(const Point& x, double s, const Point& xi) const override { return jacobian_(x, s, xi); }
    FluxConstants constants() const override { return constants_; }
    bool depends_on_s() const override { return depends_on_s_; }
    bool has_ds() const override { return static_cast<bool>(ds_); }
    Point ds(const Point& x, double s, const Point& xi) const override { return ds_ ? ds_(x, s, xi) : Point::Zero(); }
    FluxLawPtr regularized(double) const override { return std::make_shared<CustomLaw>(*this); }

private:
    std::string name_;
    double p_;
    FluxFn flux_;
    JacobianFn jacobian_;
    FluxConstants constants_;
    bool depends_on_s_;
    FluxFn ds_;
};

inline FluxLawPtr make_plaplace(double p, double epsilon = 0.0) { return std::make_shared<PLaplaceLaw>(p, epsilon); }

inline FluxLawPtr make_glacier(double alpha, double t0) { return std::make_shared<GlacierLaw>(alpha, t0); }

struct FluxProbeReport {
    std::string law;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    double min_monotonicity = 0.0; ///< min of (a(xi)-a(eta)).(xi-eta) / scale
    double min_coercivity = 0.0;   ///< min of a(xi).xi / |xi|^p
    double max_growth = 0.0;       ///< max of |a| / (abar + beta (|s|^r + |xi|^{p-1}))
    double lambda = 0.0;
    bool monotone = false;
    bool coercive = false;
    bool growth_bounded = false;
    /// The growth offset and s-exponent are vacuous for laws independent of s.
    bool growth_offset_vacuous = true;

    bool passed() const { return monotone && coercive && growth_bounded; }
};

/// Samples random (x, s, xi, eta) and checks the structural assumptions.
/// |xi| is drawn log-uniformly in [max(floor, 1e-3), 1e3].
inline FluxProbeReport assumption_probe(const FluxLaw& law, std::size_t samples, std::uint64_t seed = 12345)
{
    FluxProbeReport r;
    r.law = law.name();
    r.samples = samples;
    r.seed = seed;
    const auto c = law.constants();
    r.lambda = c.lambda;
    r.growth_offset_vacuous = !law.depends_on_s() && c.abar == 0.0;
    const double p = law.exponent();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double lo = std::log(std::max(c.coercivity_floor, 1e-3));
    const double hi = std::log(1e3);
    const auto random_vector = [&] {
        const double mag = std::exp(lo + (hi - lo) * unit(rng));
        const double theta = 2.0 * M_PI * unit(rng);
        return Point(mag * std::cos(theta), mag * std::sin(theta));
    };

    r.min_monotonicity = std::numeric_limits<double>::infinity();
    r.min_coercivity = std::numeric_limits<double>::infinity();
    r.max_growth = 0.0;
    bool monotone = true;
    for (std::size_t i = 0; i < samples; ++i) {
        const Point x(unit(rng), unit(rng));
        const double s = 4.0 * unit(rng) - 2.0;
        const Point xi = random_vector();
        // Half of the pairs are close together to probe the local behaviour.
        const Point eta = unit(rng) < 0.5 ? random_vector()
                                          : Point(xi + 1e-3 * xi.norm() * random_vector().normalized());
        const Point a = law.flux(x, s, xi);
        const Point b = law.flux(x, s, eta);

        const double scale = (a.norm() + b.norm()) * (xi - eta).norm();
        const double pairing = (a - b).dot(xi - eta);
        if (pairing < -1e-12 * scale)
            monotone = false;
        if (scale > 0.0)
            r.min_monotonicity = std::min(r.min_monotonicity, pairing / scale);

        r.min_coercivity = std::min(r.min_coercivity, a.dot(xi) / std::pow(xi.norm(), p));
        const double bound = c.abar + c.beta * ((law.depends_on_s() ? std::pow(std::abs(s), c.r) : 0.0) +
                                                std::pow(xi.norm(), p - 1.0));
        r.max_growth = std::max(r.max_growth, a.norm() / bound);
    }
    r.monotone = monotone;
    r.coercive = r.min_coercivity >= c.lambda - 1e-10;
    r.growth_bounded = r.max_growth <= 1.0 + 1e-10;
    return r;
}

} // namespace hho
