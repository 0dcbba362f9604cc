#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <doctest.h>

#include "mvks/mild.hpp"

using namespace mvks;

namespace {

double tanh_sinh(const std::function<double(double)>& f, double a, double b)
{
    static boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(f, a, b);
}

DensityField gaussian(const Grid1D& g, double var, double mean = 0.0)
{
    return {g.sample([&](double x) { return heat_kernel(var, x - mean); }), 0.0};
}

double variance(const Grid1D& g, const Field& p)
{
    const Field x = g.points();
    const double m = g.integrate(x * p);
    return g.integrate((x - m).square() * p);
}

/// max_k L1 distance between rows k of `coarse` and rows 2k of `fine`.
double refinement_distance(const MarginalHistory& coarse, const MarginalHistory& fine)
{
    double d = 0.0;
    for (Index k = 0; k < coarse.rows(); ++k)
        d = std::max(d, coarse.grid.integrate((coarse.row(k) - fine.row(2 * k)).abs()));
    return d;
}

} // namespace

TEST_CASE("heat flow: the march reproduces g(v0 + t)")
{
    const Grid1D g(16.0, 512);
    const TimeMesh mesh(2.0, 40);
    const auto h = march(gaussian(g, 0.5), KernelSpec::off(), InitialChemical::constant(g, 0.0), g, mesh);
    for (Index k : {1, 10, 40}) {
        const Field exact = gaussian(g, 0.5 + mesh.t(k)).values;
        CHECK((h.row(k) - exact).abs().maxCoeff() < 1e-13);
        CHECK(std::abs(h.mass_log[static_cast<std::size_t>(k)] - 1.0) < 1e-13);
    }
}

TEST_CASE("linear drift: Ornstein-Uhlenbeck variance, first order in dt")
{
    // c0 = -x^2/2 with chi = 1 gives b = -x: Var_t = 1/2 + (v0 - 1/2) e^{-2t}.
    const Grid1D g(12.0, 512);
    const double v0 = 2.0;
    KernelSpec spec = KernelSpec::off();
    spec.chi = 1.0;
    const auto chem = InitialChemical::quadratic(g, 1.0);
    double prev = 0.0;
    for (Index M : {50, 100, 200}) {
        const TimeMesh mesh(1.0, M);
        const auto h = march(gaussian(g, v0), spec, chem, g, mesh);
        const double err = std::abs(variance(g, h.row(M)) - (0.5 + (v0 - 0.5) * std::exp(-2.0)));
        CHECK(err < 2e-2);
        if (prev > 0.0)
            CHECK(prev / err > 1.8);
        prev = err;
    }
}

TEST_CASE("memory drift for a frozen Gaussian history")
{
    // p_s = g(1, .): B(t, x) = -chi x int_0^t e^{-lambda u} g(1 + u, x) / (1 + u) du.
    const auto drift_error = [](Index n, double lambda, Index k) {
        const Grid1D g(16.0, n);
        const TimeMesh mesh(1.0, 40);
        const auto h = frozen_history(g, mesh, sample_heat_kernel(g, 1.0));
        const KernelSpec spec = KernelSpec::keller_segel(1.5, lambda);
        const MemoryDrift B = memory_drift(h, spec, k);
        double worst = 0.0;
        for (double x = -4.0; x <= 4.0; x += 0.5) {
            const Index i = static_cast<Index>(std::llround((x + 16.0) / g.spacing()));
            const double ref = -1.5 * x * tanh_sinh([&](double u) {
                return std::exp(-lambda * u) * heat_kernel(1.0 + u, x) / (1.0 + u);
            }, 0.0, mesh.t(k));
            worst = std::max(worst, std::abs(B.values[i] - ref));
        }
        return worst;
    };
    for (double lambda : {0.0, 0.5})
        for (Index k : {1, 13, 40}) {
            const double coarse = drift_error(512, lambda, k);
            const double fine = drift_error(1024, lambda, k);
            CHECK(fine < 1e-4);
            CHECK(coarse / fine > 3.5);
            CHECK(drift_error(4096, lambda, k) < 1e-5);
        }
}

TEST_CASE("memory drift is causal")
{
    const Grid1D g(12.0, 256);
    const TimeMesh mesh(0.5, 30);
    const KernelSpec spec = KernelSpec::keller_segel(1.0, 0.5);
    const auto h = march(gaussian(g, 1.0), spec, InitialChemical::gaussian_bump(g, 1.0, 1.0), g, mesh);
    const Index k = 17;
    auto cut = h;
    for (Index l = k + 1; l < cut.rows(); ++l)
        cut.densities.row(l).setConstant(1e3);
    const Field a = memory_drift(h, spec, k).values;
    const Field b = memory_drift(cut, spec, k).values;
    CHECK((a - b).abs().maxCoeff() == 0.0);
    CHECK(memory_drift(h, spec, 0).sup() == 0.0);
    const auto all = memory_drift_history(h, spec);
    CHECK((all[static_cast<std::size_t>(k)] - a).abs().maxCoeff() < 1e-15);
}

TEST_CASE("march conserves mass and reports instability")
{
    const Grid1D g(12.0, 256);
    const TimeMesh mesh(1.0, 50);
    const KernelSpec spec = KernelSpec::keller_segel(1.0, 0.5);
    const auto chem = InitialChemical::gaussian_bump(g, 1.0, 1.0);
    const auto h = march(gaussian(g, 1.0), spec, chem, g, mesh);
    for (const double m : h.mass_log)
        CHECK(std::abs(m - 1.0) < 1e-12);
    try {
        march(gaussian(g, 1.0), spec, chem, g, mesh, {1e-20});
        FAIL("expected an instability");
    } catch (const InstabilityError& e) {
        CHECK(e.step() >= 1);
    }
    DensityField half = gaussian(g, 1.0);
    half.values *= 0.5;
    CHECK_THROWS_AS(march(half, spec, chem, g, mesh), DomainError);
    CHECK_THROWS_AS(march(gaussian(g, 1.0), spec, InitialChemical::constant(Grid1D(12.0, 128), 0.0), g, mesh),
                    UsageError);
}

TEST_CASE("march converges at first order in dt")
{
    const Grid1D g(12.0, 256);
    const KernelSpec spec = KernelSpec::keller_segel(1.0, 0.5);
    const auto chem = InitialChemical::gaussian_bump(g, 1.0, 1.0);
    auto run = [&](Index M) { return march(gaussian(g, 1.0), spec, chem, g, TimeMesh(0.5, M)); };
    const auto h1 = run(25);
    const auto h2 = run(50);
    const auto h4 = run(100);
    const double d1 = refinement_distance(h1, h2);
    const double d2 = refinement_distance(h2, h4);
    CHECK(d1 / d2 > 1.8);
}

TEST_CASE("Picard iterates contract onto the march")
{
    const Grid1D g(12.0, 256);
    const KernelSpec spec = KernelSpec::keller_segel(1.0, 0.0);
    const double T0 = find_T0(spec, 0.5);
    const TimeMesh mesh(T0, 50);
    const auto chem = InitialChemical::gaussian_bump(g, 1.0, 1.0);
    const auto pr = picard(gaussian(g, 1.0), spec, chem, g, mesh);
    CHECK(pr.converged);
    CHECK_FALSE(pr.diverged);
    CHECK(pr.D_of_T == doctest::Approx(0.5));
    REQUIRE(pr.distances.size() >= 2);
    for (std::size_t j = 1; j < pr.distances.size(); ++j)
        if (pr.distances[j - 1] > 1e-13)
            CHECK(pr.distances[j] <= 0.6 * pr.distances[j - 1]);
    CHECK(pr.iterates.size() == static_cast<std::size_t>(pr.iterations));
    const auto m = march(gaussian(g, 1.0), spec, chem, g, mesh);
    double d = 0.0;
    for (Index k = 0; k < m.rows(); ++k)
        d = std::max(d, g.integrate((m.row(k) - pr.last().row(k)).abs()));
    CHECK(d < 1e-10);
}

TEST_CASE("restart drift for a frozen Gaussian prefix")
{
    // b1(t, x) = chi int_t^{T0 + t} e^{-lambda u} d/dx g(1 + u, x) du.
    const Grid1D g(16.0, 1024);
    const TimeMesh mesh(0.1, 20);
    const auto prefix = frozen_history(g, mesh, sample_heat_kernel(g, 1.0));
    const KernelSpec spec = KernelSpec::keller_segel(1.0, 0.5);
    for (Index j : {0, 5, 20}) {
        const double t = j * mesh.dt();
        const Field field = restart_drift_field(prefix, spec, j);
        for (double x : {-2.0, -0.5, 0.25, 1.5}) {
            const double ref = tanh_sinh([&](double u) {
                return std::exp(-0.5 * u) * heat_kernel_dx(1.0 + u, x);
            }, t, 0.1 + t);
            const double v = restart_drift(prefix, spec, t, x);
            // At t = 0 the newest lag kernel jumps at z = 0: second order in h there.
            CHECK(std::abs(v - ref) < (j == 0 ? 4e-5 : 1e-9));
            const Index i = static_cast<Index>(std::llround((x + 16.0) / g.spacing()));
            CHECK(field[i] == doctest::Approx(restart_drift(prefix, spec, t, g.x(i))).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(restart_drift(prefix, spec, 0.2, 0.0), DomainError);

    const Grid1D fine(16.0, 4096);
    const auto fine_prefix = frozen_history(fine, mesh, sample_heat_kernel(fine, 1.0));
    for (double x : {-2.0, -0.5, 0.25, 1.5}) {
        const double ref = tanh_sinh([&](double u) { return std::exp(-0.5 * u) * heat_kernel_dx(1.0 + u, x); },
                                     0.0, 0.1);
        CHECK(std::abs(restart_drift(fine_prefix, spec, 0.0, x) - ref) < 1e-5);
    }
}

TEST_CASE("restart drift obeys Young's inequality")
{
    const Grid1D g(12.0, 256);
    const KernelSpec spec = KernelSpec::keller_segel(2.0, 0.0);
    const TimeMesh mesh(0.2, 40);
    const auto prefix = march(gaussian(g, 0.3), spec, InitialChemical::sine(g), g, mesh);
    const double sup_p = prefix.densities.maxCoeff();
    for (Index j = 0; j <= 40; j += 8) {
        const double t = j * mesh.dt();
        const double D = horizon_D(spec, 0.2 + t) - (t > 0.0 ? horizon_D(spec, t) : 0.0);
        CHECK(restart_drift_field(prefix, spec, j).abs().maxCoeff() <= sup_p * D);
    }
}

TEST_CASE("solve_global: windows agree with the single march")
{
    const Grid1D g(12.0, 256);
    const KernelSpec spec = KernelSpec::keller_segel(1.0, 0.5);
    const auto chem = InitialChemical::gaussian_bump(g, 1.0, 1.0);
    const double dt = 1e-3;
    const double T0 = find_T0(spec, 0.5, dt);
    const Index W = std::llround(T0 / dt);
    const TimeMesh mesh(2.0 * W * dt, 2 * W);
    SolveOptions opts;
    opts.mode = SolveMode::picard_with_restart;
    const auto windowed = solve_global(gaussian(g, 1.0), spec, chem, g, mesh, opts);
    CHECK(windowed.windows.size() == 2);
    CHECK(windowed.windows[1].restart_sup > 0.0);
    for (const auto& w : windowed.windows)
        CHECK(w.converged);
    const auto single = solve_global(gaussian(g, 1.0), spec, chem, g, mesh);
    double d = 0.0;
    for (Index k = 0; k < single.history.rows(); ++k)
        d = std::max(d, g.integrate((single.history.row(k) - windowed.history.row(k)).abs()));
    CHECK(d < 1e-9);

    const TimeMesh short_mesh(0.5 * T0, W / 2);
    const auto one = solve_global(gaussian(g, 1.0), spec, chem, g, short_mesh, opts);
    CHECK(one.windows.size() == 1);
}
