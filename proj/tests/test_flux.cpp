#include "hho/flux.hpp"
#include "hho/manufactured.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hho;

namespace {

const Point origin = Point::Zero();

Matrix2 fd_jacobian(const FluxLaw& law, const Point& xi, double h)
{
    Matrix2 J;
    for (int c = 0; c < 2; ++c) {
        Point d = Point::Zero();
        d(c) = h;
        J.col(c) = (law.flux(origin, 0.0, xi + d) - law.flux(origin, 0.0, xi - d)) / (2.0 * h);
    }
    return J;
}

} // namespace

TEST(Flux, PLaplaceValues)
{
    const PLaplaceLaw p2(2.0), p3(3.0), p4(4.0);
    const Point xi(0.3, -1.7);
    EXPECT_EQ(p2.flux(origin, 0.0, xi), xi);
    EXPECT_LT((p4.flux(origin, 0.0, Point(1, 0)) - Point(1, 0)).norm(), 1e-15);
    EXPECT_LT((p4.flux(origin, 0.0, Point(2, 0)) - Point(8, 0)).norm(), 1e-14);
    EXPECT_LT((p3.flux(origin, 0.0, Point(3, 4)) - Point(15, 20)).norm(), 1e-13);
    EXPECT_EQ(PLaplaceLaw(1.5).flux(origin, 0.0, Point::Zero()), Point::Zero());
    EXPECT_EQ(p3.flux(origin, 0.0, Point::Zero()), Point::Zero());
}

TEST(Flux, PLaplaceJacobianValues)
{
    EXPECT_EQ(PLaplaceLaw(2.0).jacobian(origin, 0.0, Point(0.4, 0.1)), Matrix2::Identity());
    const Matrix2 J = PLaplaceLaw(4.0).jacobian(origin, 0.0, Point(1, 0));
    EXPECT_LT((J - Eigen::Vector2d(3, 1).asDiagonal().toDenseMatrix()).norm(), 1e-15);
    EXPECT_THROW(PLaplaceLaw(1.5).jacobian(origin, 0.0, Point::Zero()), SolverError);
    EXPECT_NO_THROW(PLaplaceLaw(1.5, 1e-8).jacobian(origin, 0.0, Point::Zero()));
}

TEST(Flux, JacobianMatchesFiniteDifferences)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<FluxLawPtr> laws{make_plaplace(3.0), make_plaplace(4.0), make_plaplace(1.5),
                                 make_plaplace(1.5, 0.1), make_glacier(0.5, 1.0), make_glacier(0.3, 0.5)};
    for (const auto& law : laws) {
        for (int i = 0; i < 50; ++i) {
            const Point xi(u(rng), u(rng));
            const Matrix2 J = law->jacobian(origin, 0.0, xi);
            const Matrix2 fd = fd_jacobian(*law, xi, 1e-6);
            EXPECT_LE((J - fd).norm(), 1e-6 * J.norm()) << law->name() << " p=" << law->exponent();
            EXPECT_LE((J - J.transpose()).norm(), 1e-13 * J.norm());
        }
    }
}

TEST(Flux, RegularizationConsistency)
{
    const Point xi(0.7, -0.2);
    const PLaplaceLaw exact(1.5);
    double previous = 1e300;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-6}) {
        const double err = (PLaplaceLaw(1.5, eps).flux(origin, 0.0, xi) - exact.flux(origin, 0.0, xi)).norm();
        EXPECT_LT(err, previous);
        previous = err;
    }
    EXPECT_LT(previous, 1e-10);
    EXPECT_EQ(exact.regularized(0.5)->regularization(), 0.5);
}

TEST(Flux, Continuity)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto& law : {make_plaplace(1.5), make_plaplace(3.0), make_glacier(0.5, 1.0)}) {
        for (int i = 0; i < 20; ++i) {
            const Point xi(u(rng), u(rng));
            const Point d(u(rng), u(rng));
            double previous = 1e300;
            for (double t : {1e-2, 1e-4, 1e-6, 1e-8}) {
                const double diff = (law->flux(origin, 0.0, xi + t * d) - law->flux(origin, 0.0, xi)).norm();
                EXPECT_LE(diff, previous);
                previous = diff;
            }
            EXPECT_LT(previous, 1e-6);
        }
    }
}

TEST(Flux, InvalidParameters)
{
    EXPECT_THROW(PLaplaceLaw(1.0), InputError);
    EXPECT_THROW(PLaplaceLaw(2.0, -1.0), InputError);
    EXPECT_THROW(GlacierLaw(0.0, 1.0), InputError);
    EXPECT_THROW(GlacierLaw(1.0, 1.0), InputError);
    EXPECT_THROW(GlacierLaw(0.5, 0.0), InputError);
}

TEST(Glacier, ViscosityAtZero)
{
    for (double alpha : {0.2, 0.5, 0.8})
        for (double t0 : {0.5, 1.0, 2.0})
            EXPECT_NEAR(glacier_viscosity(0.0, alpha, t0), 1.0 / std::pow(t0, alpha / (1 - alpha)), 1e-15);
}

TEST(Glacier, ClosedFormQuadratic)
{
    // alpha = 1/2 gives beta = 1 and 1/F = F + 1.
    EXPECT_NEAR(glacier_viscosity(1.0, 0.5, 1.0), (std::sqrt(5.0) - 1.0) / 2.0, 1e-15);
}

TEST(Glacier, ResidualOfRoot)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double s = std::exp(-8.0 + 16.0 * u(rng));
        const double alpha = 0.05 + 0.9 * u(rng);
        const double t0 = std::exp(-2.0 + 4.0 * u(rng));
        const double F = glacier_viscosity(s, alpha, t0);
        const double beta = alpha / (1 - alpha);
        ASSERT_GT(F, 0.0);
        const double residual = 1.0 / F - std::pow(s * F, beta) - std::pow(t0, beta);
        EXPECT_LE(std::abs(residual) * F, 1e-13) << s << " " << alpha << " " << t0;
    }
}

TEST(Glacier, JacobianAtZero)
{
    const GlacierLaw law(0.4, 1.3);
    EXPECT_LT((law.jacobian(origin, 0.0, Point::Zero()) - glacier_viscosity(0.0, 0.4, 1.3) * Matrix2::Identity()).norm(),
              1e-15);
}

TEST(Probe, PLaplaceExact)
{
    const auto r = assumption_probe(PLaplaceLaw(3.0), 10000, 99);
    EXPECT_TRUE(r.monotone);
    EXPECT_GE(r.min_monotonicity, -1e-12);
    EXPECT_NEAR(r.lambda, 1.0, 0.0);
    EXPECT_NEAR(r.min_coercivity, 1.0, 1e-10);
    EXPECT_TRUE(r.coercive);
    EXPECT_TRUE(r.growth_bounded);
    EXPECT_TRUE(r.growth_offset_vacuous);
    EXPECT_EQ(r.seed, 99u);
    EXPECT_TRUE(r.passed());
}

TEST(Probe, GlacierSampling)
{
    const GlacierLaw law(0.5, 1.0);
    const auto r = assumption_probe(law, 10000, 5);
    EXPECT_TRUE(r.monotone);
    EXPECT_GE(r.min_coercivity, law.constants().lambda - 1e-10);
    EXPECT_TRUE(r.coercive);
    EXPECT_TRUE(r.growth_bounded);
    EXPECT_GT(law.constants().lambda, 0.0);
}

TEST(Probe, GlacierCoercivityRatioMonotone)
{
    const double alpha = 0.5, t0 = 1.0;
    double previous = 0.0;
    for (double s = 1e-6; s < 1e6; s *= 2.0) {
        const double ratio = glacier_viscosity(s, alpha, t0) * std::pow(s, alpha);
        EXPECT_GT(ratio, previous);
        EXPECT_LT(ratio, 1.0);
        previous = ratio;
    }
}

TEST(Probe, BrokenLawReported)
{
    const CustomLaw broken("broken", 2.0, [](const Point&, double, const Point& xi) { return Point(-xi); },
                           [](const Point&, double, const Point&) { return Matrix2(-Matrix2::Identity()); });
    const auto r = assumption_probe(broken, 1000);
    EXPECT_FALSE(r.monotone);
    EXPECT_FALSE(r.coercive);
    EXPECT_FALSE(r.passed());
}

TEST(Manufactured, ExpSourceClosedFormAgainstFdDivergence)
{
    const auto u = exp_solution();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double p : {1.5, 2.0, 3.0, 4.0}) {
        const PLaplaceLaw law(p);
        const auto generic = manufactured_source(u, make_plaplace(p));
        for (int i = 0; i < 20; ++i) {
            const Point x(unit(rng), unit(rng));
            // Independent oracle: central differences of a(grad u) with the analytic gradient.
            const double h = 1e-5;
            const auto ax = [&](const Point& y) { return law.flux(y, 0.0, u.gradient(y)); };
            const double div = (ax(x + Point(h, 0)).x() - ax(x - Point(h, 0)).x()) / (2 * h) +
                               (ax(x + Point(0, h)).y() - ax(x - Point(0, h)).y()) / (2 * h);
            const double closed = exp_plaplace_source(x, p);
            EXPECT_NEAR(closed, -div, 1e-6 * std::abs(closed)) << "p=" << p;
            EXPECT_NEAR(generic(x), closed, 1e-12 * std::abs(closed));
        }
    }
}

TEST(Manufactured, DerivativesMatchFiniteDifferences)
{
    std::mt19937_64 rng(6);
    std::vector<SmoothFunction> fns{exp_solution(), sinsin_solution(), coscos_solution(),
                                    random_smooth_function(rng), random_polynomial(rng, 4, Point(0.2, 0.3), 0.5)};
    const Point x(0.37, 0.61);
    const double h = 1e-5;
    for (const auto& f : fns) {
        for (int dx = 0; dx <= 2; ++dx)
            for (int dy = 0; dy <= 2; ++dy) {
                const double fd_x = (f.derivative(x + Point(h, 0), dx, dy) - f.derivative(x - Point(h, 0), dx, dy)) / (2 * h);
                const double fd_y = (f.derivative(x + Point(0, h), dx, dy) - f.derivative(x - Point(0, h), dx, dy)) / (2 * h);
                const double sx = std::max(1.0, std::abs(fd_x));
                const double sy = std::max(1.0, std::abs(fd_y));
                EXPECT_NEAR(f.derivative(x, dx + 1, dy), fd_x, 1e-7 * sx) << f.name;
                EXPECT_NEAR(f.derivative(x, dx, dy + 1), fd_y, 1e-7 * sy) << f.name;
            }
    }
}

TEST(Manufactured, Registry)
{
    for (const auto& name : manufactured_solution_names())
        EXPECT_EQ(manufactured_solution(name).name, name);
    EXPECT_THROW(manufactured_solution("nope"), InputError);
    EXPECT_NEAR(sinsin_solution()(Point(0.0, 0.4)), 0.0, 1e-15);
    EXPECT_NEAR(coscos_solution().gradient(Point(1.0, 0.3)).x(), 0.0, 1e-14);
}
