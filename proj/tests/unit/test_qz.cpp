#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include "mvks/qz.hpp"

using namespace mvks;
using boost::math::quadrature::gauss_kronrod;

namespace {

/// (2 pi t)^{-1/2} int_a^inf z e^{-(z - beta sqrt t)^2 / 2} dz by quadrature.
double at_y_quadrature(double beta, double t, double x, double y)
{
    boost::math::quadrature::exp_sinh<double> es;
    const double a = std::abs(x - y) / std::sqrt(t);
    const double m = beta * std::sqrt(t);
    const double v = es.integrate([&](double s) {
        const double z = a + s;
        return z * std::exp(-0.5 * (z - m) * (z - m));
    });
    return v / std::sqrt(2.0 * std::numbers::pi * t);
}

double mass_of(const QZParams& p)
{
    const auto f = [&p](double z) { return qz_density(p, z); };
    const double reach = 12.0 * std::sqrt(p.t) + 1.0;
    const double lo = std::min(p.x, p.y) - reach;
    const double hi = std::max(p.x, p.y) + reach;
    return gauss_kronrod<double, 31>::integrate(f, lo, p.y, 12, 1e-12)
           + gauss_kronrod<double, 31>::integrate(f, p.y, hi, 12, 1e-12);
}

} // namespace

TEST_CASE("zero drift reduces to the heat kernel")
{
    for (double t : {0.1, 1.0, 5.0})
        for (double z = -5.0; z <= 5.0; z += 0.25)
            CHECK(std::abs(qz_density({0.0, 0.3, -0.4, t}, z) - heat_kernel(t, z + 0.4)) < 1e-14);
}

TEST_CASE("density at the attractor: closed form, quadrature and the general formula")
{
    for (double beta : {0.0, 0.25, 1.0, 4.0})
        for (double t : {0.1, 1.0, 5.0})
            for (double x : {-1.0, 0.5, 2.0}) {
                const QZParams p{beta, 0.0, x, t};
                const double closed = qz_density_at_y(p);
                CHECK(closed == doctest::Approx(at_y_quadrature(beta, t, x, 0.0)).epsilon(1e-10));
                CHECK(std::abs(qz_density(p, 0.0) - closed) < 1e-10);
                CHECK(qz_bound(t, x, 0.0, beta) == closed);
            }
    CHECK(qz_density_at_y({0.0, 0.0, 1.0, 2.0}) == doctest::Approx(heat_kernel(2.0, 1.0)));
}

TEST_CASE("densities normalize")
{
    for (double beta : {0.25, 1.0, 4.0})
        for (double t : {0.1, 1.0, 5.0})
            CHECK(mass_of({beta, 0.0, 1.0, t}) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("density at y grows with beta")
{
    double prev = 0.0;
    for (double beta = 0.0; beta <= 3.0; beta += 0.25) {
        const double v = qz_density_at_y({beta, 0.0, 1.5, 1.0});
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("strong drift keeps the evaluator finite")
{
    const QZParams p{40.0, 0.0, 3.0, 5.0};
    for (double z : {-1.0, 0.0, 0.01, 2.0})
        CHECK(std::isfinite(qz_density(p, z)));
    CHECK_THROWS_AS(qz_density({-1.0, 0.0, 0.0, 1.0}, 0.0), DomainError);
    CHECK_THROWS_AS(qz_density({1.0, 0.0, 0.0, 0.0}, 0.0), DomainError);
}

TEST_CASE("histograms and the universal bound")
{
    Eigen::VectorXd s(4);
    s << -0.9, -0.1, 0.1, 0.3;
    const Histogram h = histogram(s, Bins{-1.0, 1.0, 4});
    CHECK(h.density == std::vector<double>{0.5, 0.5, 1.0, 0.0});

    const TimeMesh mesh(1.0, 200);
    const double beta = 0.5;
    const auto e = simulate_bounded_drift(
        [beta](double, double x) { return beta * std::sin(x); }, beta, [](double) { return 1.0; },
        mesh, 50000, 11, 50);
    const BoundReport r = verify_bound(e, Bins{-4.0, 5.0, 45}, {50, 100, 150, 200}, 1.0);
    CHECK(r.violations == 0);
    CHECK(r.times.size() == 4);

    auto unbounded = e;
    unbounded.drift_bound.reset();
    CHECK_THROWS_AS(verify_bound(unbounded, Bins{}, {200}, 1.0), UsageError);
    CHECK(sup_density_bound(1.0, 0.3) == doctest::Approx(2.3));
}

TEST_CASE("the sgn drift attains the bound at y")
{
    const TimeMesh mesh(1.0, 1000);
    const double beta = 0.5;
    const auto e = simulate_bounded_drift(
        [beta](double, double x) { return beta * ((x < 0.0) - (x > 0.0)); }, beta,
        [](double) { return 1.0; }, mesh, 100000, 21, 1000);
    const Histogram h = histogram(e.at_step(1000), Bins{-0.1, 0.1, 1});
    // A histogram bin sees the cusp at y averaged over its width.
    const QZParams p{beta, 0.0, 1.0, 1.0};
    const auto f = [&p](double z) { return qz_density(p, z); };
    const double bin_mean = (gauss_kronrod<double, 31>::integrate(f, -0.1, 0.0)
                             + gauss_kronrod<double, 31>::integrate(f, 0.0, 0.1))
                            / 0.2;
    CHECK(bin_mean < qz_bound(1.0, 1.0, 0.0, beta));
    CHECK(std::abs(h.density[0] - bin_mean) < 4.0 * h.std_error[0] + 5e-3);
}

TEST_CASE("mixture bound and the Lp constant")
{
    const Grid1D g(4.0, 128);
    const Field p0 = g.sample([](double x) { return std::abs(x) < 0.5 ? 1.0 : 0.0; });
    const double mix = qz_bound_mixture(1.0, 0.0, 0.3, g, p0 / mass(g, p0));
    CHECK(mix > 0.0);
    CHECK(mix <= qz_bound(1.0, 0.0, 0.0, 0.3));
    CHECK(lp_density_constant(2.0, 1.0, 0.5, 1.0, 2.0) == doctest::Approx(1.5));
}
