#include "mvks/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mvks {

namespace {

double sgn(double z) { return (z > 0.0) - (z < 0.0); }

/// e^{s} erfc(arg), where s - arg^2 == common; avoids overflow of e^{s}.
double weighted_erfc(double s, double arg, double common)
{
    if (arg <= 0.0)
        return std::exp(s) * std::erfc(arg);
    if (arg < 25.0)
        return std::exp(common) * (std::exp(arg * arg) * std::erfc(arg));
    const double inv2 = 1.0 / (arg * arg);
    return std::exp(common) * (1.0 - 0.5 * inv2 + 0.75 * inv2 * inv2 - 1.875 * inv2 * inv2 * inv2)
           / (arg * std::sqrt(std::numbers::pi));
}

/// int_0^b e^{-lambda u} g(u, z) du.
double heat_primitive(double lambda, double b, double z)
{
    if (b <= 0.0)
        return 0.0;
    const double a = std::abs(z);
    const double sb = std::sqrt(2.0 * b);
    if (lambda == 0.0)
        return 2.0 * b * std::exp(-a * a / (2.0 * b)) / std::sqrt(2.0 * std::numbers::pi * b)
               - a * std::erfc(a / sb);
    const double mu = std::sqrt(2.0 * lambda);
    const double common = -a * a / (2.0 * b) - lambda * b;
    const double lo = weighted_erfc(-mu * a, (a - mu * b) / sb, common);
    const double hi = weighted_erfc(mu * a, (a + mu * b) / sb, common);
    return (lo - hi) / (2.0 * mu);
}

/// int_0^b e^{-lambda u} |z| (2 pi u^3)^{-1/2} e^{-z^2/(2u)} du.
double first_passage_primitive(double lambda, double b, double z)
{
    const double a = std::abs(z);
    if (b <= 0.0 || a == 0.0)
        return 0.0;
    const double sb = std::sqrt(2.0 * b);
    if (lambda == 0.0)
        return std::erfc(a / sb);
    const double mu = std::sqrt(2.0 * lambda);
    const double common = -a * a / (2.0 * b) - lambda * b;
    return 0.5
           * (weighted_erfc(-mu * a, (a - mu * b) / sb, common)
              + weighted_erfc(mu * a, (a + mu * b) / sb, common));
}

InitialChemical make(const Grid1D& grid, ChemicalShape shape, double amplitude, double scale)
{
    InitialChemical c{grid, Field(), Field(), shape, amplitude, scale};
    c.c0 = grid.sample([&](double x) { return c.smoothed(0.0, x); });
    c.c0_prime = grid.sample([&](double x) { return c.smoothed_derivative(0.0, x); });
    return c;
}

/// Lag spectra of the Duhamel kernels: lag j integrates u over [(j-1) dt, j dt].
struct DuhamelCache {
    std::vector<Spectrum> value;
    std::vector<Spectrum> gradient;
};

DuhamelCache duhamel_cache(const SpectralConvolver& conv, const Grid1D& grid, double dt,
                           double lambda, Index lags)
{
    DuhamelCache cache;
    cache.value.resize(static_cast<std::size_t>(lags + 1));
    cache.gradient.resize(static_cast<std::size_t>(lags + 1));
#pragma omp parallel for schedule(static)
    for (Index j = 1; j <= lags; ++j) {
        const double a = static_cast<double>(j - 1) * dt;
        const double b = static_cast<double>(j) * dt;
        const Field gv = grid.sample([&](double z) { return heat_time_integral(lambda, a, b, z); });
        const Field gd
            = grid.sample([&](double z) { return heat_dx_time_integral(lambda, a, b, z); });
        cache.value[static_cast<std::size_t>(j)] = conv.kernel_spectrum(gv);
        cache.gradient[static_cast<std::size_t>(j)] = conv.kernel_spectrum(gd);
    }
    return cache;
}

ChemicalField assemble(const MarginalHistory& history, const InitialChemical& chem, double lambda,
                       Index k, const SpectralConvolver& conv, const std::vector<Spectrum>& rows,
                       const DuhamelCache& cache)
{
    const double t = history.mesh.t(k) - history.mesh.start();
    const double decay = std::exp(-lambda * t);
    ChemicalField out;
    out.time = history.mesh.t(k);
    out.values = decay * chem.smoothed_field(t);
    out.gradient = decay * chem.smoothed_derivative_field(t);
    if (k == 0)
        return out;
    Spectrum sv = Spectrum::Zero(conv.spectrum_size());
    Spectrum sd = Spectrum::Zero(conv.spectrum_size());
    for (Index l = 0; l < k; ++l) {
        const auto j = static_cast<std::size_t>(k - l);
        const auto& r = rows[static_cast<std::size_t>(l)];
        sv.array() += r.array() * cache.value[j].array();
        sd.array() += r.array() * cache.gradient[j].array();
    }
    out.values += conv.inverse(sv);
    out.gradient += conv.inverse(sd);
    return out;
}

} // namespace

InitialChemical InitialChemical::sine(const Grid1D& grid, double amplitude, double frequency)
{
    return make(grid, ChemicalShape::sine, amplitude, frequency);
}

InitialChemical InitialChemical::gaussian_bump(const Grid1D& grid, double amplitude, double width)
{
    if (!(width > 0.0))
        throw DomainError("gaussian_bump: width must be positive");
    return make(grid, ChemicalShape::gaussian_bump, amplitude, width);
}

InitialChemical InitialChemical::quadratic(const Grid1D& grid, double coefficient)
{
    return make(grid, ChemicalShape::quadratic, coefficient, 1.0);
}

InitialChemical InitialChemical::constant(const Grid1D& grid, double value)
{
    return make(grid, ChemicalShape::constant, value, 1.0);
}

InitialChemical InitialChemical::from_samples(const Grid1D& grid, Field c0)
{
    if (c0.size() != grid.size())
        throw UsageError("InitialChemical: samples do not match grid");
    if (!c0.allFinite())
        throw DomainError("InitialChemical: samples must be finite");
    Field d = central_difference(grid, c0);
    return InitialChemical{grid, std::move(c0), std::move(d), ChemicalShape::custom, 0.0, 1.0};
}

double InitialChemical::smoothed(double t, double x) const
{
    const double a = amplitude;
    const double w = scale;
    switch (shape) {
    case ChemicalShape::sine:
        return a * std::exp(-w * w * t / 2.0) * std::sin(w * x);
    case ChemicalShape::gaussian_bump: {
        const double v = w * w + t;
        return a * w / std::sqrt(v) * std::exp(-x * x / (2.0 * v));
    }
    case ChemicalShape::quadratic:
        return -a * (x * x + t) / 2.0;
    case ChemicalShape::constant:
        return a;
    case ChemicalShape::custom:
        break;
    }
    return grid.interpolate(smoothed_field(t), x);
}

double InitialChemical::smoothed_derivative(double t, double x) const
{
    const double a = amplitude;
    const double w = scale;
    switch (shape) {
    case ChemicalShape::sine:
        return a * w * std::exp(-w * w * t / 2.0) * std::cos(w * x);
    case ChemicalShape::gaussian_bump: {
        const double v = w * w + t;
        return -x / v * a * w / std::sqrt(v) * std::exp(-x * x / (2.0 * v));
    }
    case ChemicalShape::quadratic:
        return -a * x;
    case ChemicalShape::constant:
        return 0.0;
    case ChemicalShape::custom:
        break;
    }
    return grid.interpolate(smoothed_derivative_field(t), x);
}

Field InitialChemical::smoothed_field(double t) const
{
    if (t < 0.0)
        throw DomainError("InitialChemical: t must be non-negative");
    if (shape != ChemicalShape::custom)
        return grid.sample([&](double x) { return smoothed(t, x); });
    if (t == 0.0)
        return c0;
    return convolve(grid, c0, sample_heat_kernel(grid, t));
}

Field InitialChemical::smoothed_derivative_field(double t) const
{
    if (t < 0.0)
        throw DomainError("InitialChemical: t must be non-negative");
    if (shape != ChemicalShape::custom)
        return grid.sample([&](double x) { return smoothed_derivative(t, x); });
    if (t == 0.0)
        return c0_prime;
    return convolve(grid, c0_prime, sample_heat_kernel(grid, t));
}

double drift_b(const KernelSpec& spec, const InitialChemical& chem, double t, double x)
{
    if (t < 0.0)
        throw DomainError("drift_b: t must be non-negative");
    return spec.chi * std::exp(-spec.lambda * t) * chem.smoothed_derivative(t, x);
}

Field drift_b_field(const KernelSpec& spec, const InitialChemical& chem, double t)
{
    if (t < 0.0)
        throw DomainError("drift_b: t must be non-negative");
    return spec.chi * std::exp(-spec.lambda * t) * chem.smoothed_derivative_field(t);
}

double heat_time_integral(double lambda, double a, double b, double z)
{
    if (!(a >= 0.0 && b >= a))
        throw DomainError("heat_time_integral: need 0 <= a <= b");
    return heat_primitive(lambda, b, z) - heat_primitive(lambda, a, z);
}

double heat_dx_time_integral(double lambda, double a, double b, double z)
{
    if (!(a >= 0.0 && b >= a))
        throw DomainError("heat_dx_time_integral: need 0 <= a <= b");
    return -sgn(z)
           * (first_passage_primitive(lambda, b, z) - first_passage_primitive(lambda, a, z));
}

ChemicalField chemical_concentration(const MarginalHistory& history, const InitialChemical& chem,
                                     double lambda, Index k)
{
    if (!(history.grid == chem.grid))
        throw UsageError("chemical_concentration: grid mismatch");
    if (k < 0 || k >= history.rows())
        throw UsageError("chemical_concentration: step out of range");
    history.require_rows(k, "chemical_concentration");
    const SpectralConvolver conv(history.grid);
    std::vector<Spectrum> rows(static_cast<std::size_t>(k));
    for (Index l = 0; l < k; ++l)
        rows[static_cast<std::size_t>(l)] = conv.spectrum(history.row(l));
    const DuhamelCache cache = duhamel_cache(conv, history.grid, history.mesh.dt(), lambda, k);
    return assemble(history, chem, lambda, k, conv, rows, cache);
}

Field chemical_gradient(const MarginalHistory& history, const InitialChemical& chem,
                        const KernelSpec& spec, Index k)
{
    return chemical_concentration(history, chem, spec.lambda, k).gradient;
}

std::vector<ChemicalField> chemical_history(const MarginalHistory& history,
                                            const InitialChemical& chem, double lambda)
{
    if (!(history.grid == chem.grid))
        throw UsageError("chemical_history: grid mismatch");
    const Index count = history.populated;
    const SpectralConvolver conv(history.grid);
    std::vector<Spectrum> rows(static_cast<std::size_t>(count));
    for (Index l = 0; l < count; ++l)
        rows[static_cast<std::size_t>(l)] = conv.spectrum(history.row(l));
    const DuhamelCache cache
        = duhamel_cache(conv, history.grid, history.mesh.dt(), lambda, std::max<Index>(count - 1, 0));
    std::vector<ChemicalField> out(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(static)
    for (Index k = 0; k < count; ++k)
        out[static_cast<std::size_t>(k)] = assemble(history, chem, lambda, k, conv, rows, cache);
    return out;
}

KsResidual ks_residual(const MarginalHistory& history, const std::vector<ChemicalField>& fields,
                       double lambda, Index margin)
{
    const Index M = static_cast<Index>(fields.size()) - 1;
    if (M < 2)
        throw UsageError("ks_residual: need at least three time nodes");
    history.require_rows(M + 1, "ks_residual");
    const Grid1D& grid = history.grid;
    const double h = grid.spacing();
    const double dt = history.mesh.dt();
    const Index n = grid.size();
    if (2 * margin + 3 > n)
        throw UsageError("ks_residual: margin leaves no interior points");
    KsResidual out;
    double total = 0.0;
    for (Index k = 1; k < M; ++k) {
        const Field& prev = fields[static_cast<std::size_t>(k - 1)].values;
        const Field& cur = fields[static_cast<std::size_t>(k)].values;
        const Field& next = fields[static_cast<std::size_t>(k + 1)].values;
        const Field rho = history.row(k);
        double sum = 0.0;
        for (Index i = std::max<Index>(margin, 1); i < n - std::max<Index>(margin, 1); ++i) {
            const double ct = (next[i] - prev[i]) / (2.0 * dt);
            const double cxx = (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) / (h * h);
            const double r = ct - 0.5 * cxx + lambda * cur[i] - rho[i];
            sum += r * r;
        }
        out.times.push_back(history.mesh.t(k));
        out.l2_per_node.push_back(std::sqrt(h * sum));
        total += dt * h * sum;
    }
    out.l2 = std::sqrt(total);
    return out;
}

} // namespace mvks
