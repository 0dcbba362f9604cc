#include "mvks/qz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mvks/quadrature.hpp"

namespace mvks {

namespace {

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

/// Average of f over [a, b] by 16-point composite midpoint sampling.
template <typename F>
double bin_average(F&& f, double a, double b)
{
    constexpr int kSamples = 16;
    double s = 0.0;
    for (int j = 0; j < kSamples; ++j)
        s += f(a + (j + 0.5) * (b - a) / kSamples);
    return s / kSamples;
}

BoundReport check_bins(const ParticleEnsemble& ensemble, const Bins& bins,
                       const std::vector<Index>& steps,
                       const std::function<double(double, double)>& bound)
{
    if (!ensemble.drift_bound)
        throw UsageError("verify_bound: the ensemble has no declared drift bound");
    BoundReport report;
    report.beta = *ensemble.drift_bound;
    for (const Index step : steps) {
        const double t = ensemble.mesh.t(step) - ensemble.mesh.start();
        if (!(t > 0.0))
            throw DomainError("verify_bound: steps must lie after the start");
        const Histogram hist = histogram(ensemble.at_step(step), bins);
        report.times.push_back(t);
        double sup = 0.0;
        double sup_err = 0.0;
        for (Index b = 0; b < bins.count; ++b) {
            const auto ub = static_cast<std::size_t>(b);
            const double lo = bins.lo + static_cast<double>(b) * bins.width();
            BinCheck c;
            c.t = t;
            c.center = bins.center(b);
            c.density = hist.density[ub];
            c.std_error = hist.std_error[ub];
            c.bound = bin_average([&](double y) { return bound(t, y); }, lo, lo + bins.width());
            c.violated = c.density > c.bound + 3.0 * c.std_error;
            report.violations += c.violated;
            if (c.density > sup) {
                sup = c.density;
                sup_err = c.std_error;
            }
            report.bins.push_back(c);
        }
        report.sup_density.push_back(sup);
        report.sup_error.push_back(sup_err);
    }
    return report;
}

} // namespace

void QZParams::validate() const
{
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw DomainError("qz: beta must be non-negative");
    if (!(t > 0.0))
        throw DomainError("qz: t must be positive");
}

double qz_density(const QZParams& p, double z)
{
    p.validate();
    const double A = std::abs(p.y - p.x);
    const double Z = std::abs(z - p.y);
    const double c = A + Z;
    const double t = p.t;
    const double beta = p.beta;
    const double shift = beta * (A - Z) - 0.5 * beta * beta * t;

    const double gaussian = std::exp(shift)
                            * (std::exp(-(z - p.x) * (z - p.x) / (2.0 * t))
                               - std::exp(-c * c / (2.0 * t)))
                            / std::sqrt(2.0 * std::numbers::pi * t);

    // Integrand over ybar >= 0 with w = ybar + c; log-concave with its peak
    // at w* = (beta t + sqrt(beta^2 t^2 + 4 t)) / 2 or at ybar = 0.
    const double w_star = 0.5 * (beta * t + std::sqrt(beta * beta * t * t + 4.0 * t));
    const double peak_at = std::max(0.0, w_star - c);
    const double w_peak = peak_at + c;
    const double log_peak = shift + beta * peak_at + std::log(w_peak) - w_peak * w_peak / (2.0 * t);
    // log(integrand / peak), formed without cancelling large exponents.
    auto relative_log = [&](double ybar) {
        const double w = ybar + c;
        return beta * (ybar - peak_at) + std::log(w / w_peak) - (w - w_peak) * (w + w_peak) / (2.0 * t);
    };
    const double log_cut = std::log(1e-15);
    double upper = peak_at + std::sqrt(t);
    while (relative_log(upper) > log_cut)
        upper = peak_at + 2.0 * (upper - peak_at);

    auto integrand = [&](double ybar) {
        return ybar + c > 0.0 ? std::exp(relative_log(ybar)) : 0.0;
    };
    const double scale = std::exp(log_peak) / (kSqrt2Pi * t * std::sqrt(t));
    QuadratureResult left{0.0, 0.0, true};
    if (peak_at > 0.0)
        left = integrate_adaptive(integrand, 0.0, peak_at, 1e-16, 1e-13);
    const QuadratureResult right = integrate_adaptive(integrand, peak_at, upper, 1e-16, 1e-13);
    if (!left.converged || !right.converged)
        throw NumericError("qz_density: quadrature did not converge (beta=" + std::to_string(beta)
                           + ", t=" + std::to_string(t) + ", z=" + std::to_string(z)
                           + ", error=" + std::to_string(left.error + right.error) + ")");
    return scale * (left.value + right.value) + gaussian;
}

double qz_density_at_y(const QZParams& p)
{
    p.validate();
    const double a = std::abs(p.x - p.y) / std::sqrt(p.t);
    const double m = p.beta * std::sqrt(p.t);
    const double tail = std::exp(-0.5 * (a - m) * (a - m))
                        + m * kSqrt2Pi * 0.5 * std::erfc((a - m) / std::numbers::sqrt2);
    return tail / std::sqrt(2.0 * std::numbers::pi * p.t);
}

double qz_bound(double t, double x, double y, double beta)
{
    return qz_density_at_y({beta, y, x, t});
}

double qz_bound_mixture(double t, double y, double beta, const Grid1D& grid,
                        const Eigen::Ref<const Field>& p0)
{
    if (p0.size() != grid.size())
        throw UsageError("qz_bound_mixture: density does not match grid");
    double s = 0.0;
    for (Index i = 0; i < grid.size(); ++i)
        if (p0[i] != 0.0)
            s += p0[i] * qz_bound(t, grid.x(i), y, beta);
    return grid.spacing() * s;
}

Histogram histogram(const Eigen::Ref<const Eigen::VectorXd>& samples, const Bins& bins)
{
    if (bins.count < 1 || !(bins.hi > bins.lo))
        throw UsageError("histogram: invalid bins");
    std::vector<double> counts(static_cast<std::size_t>(bins.count), 0.0);
    const double w = bins.width();
    for (Index i = 0; i < samples.size(); ++i) {
        const double s = (samples[i] - bins.lo) / w;
        if (s >= 0.0 && s < static_cast<double>(bins.count))
            counts[static_cast<std::size_t>(s)] += 1.0;
    }
    const auto N = static_cast<double>(samples.size());
    Histogram h{bins, {}, {}};
    for (const double c : counts) {
        const double q = c / N;
        h.density.push_back(q / w);
        h.std_error.push_back(std::sqrt(q * (1.0 - q) / N) / w);
    }
    return h;
}

double BoundReport::max_excess() const
{
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& b : bins)
        if (b.std_error > 0.0)
            m = std::max(m, (b.density - b.bound) / b.std_error);
    return m;
}

BoundReport verify_bound(const ParticleEnsemble& ensemble, const Bins& bins,
                         const std::vector<Index>& steps, double x0)
{
    const double beta = ensemble.drift_bound.value_or(0.0);
    return check_bins(ensemble, bins, steps,
                      [&](double t, double y) { return qz_bound(t, x0, y, beta); });
}

BoundReport verify_bound(const ParticleEnsemble& ensemble, const Bins& bins,
                         const std::vector<Index>& steps, const Grid1D& grid,
                         const Eigen::Ref<const Field>& p0)
{
    const double beta = ensemble.drift_bound.value_or(0.0);
    const Field p = p0;
    return check_bins(ensemble, bins, steps, [&](double t, double y) {
        return qz_bound_mixture(t, y, beta, grid, p);
    });
}

double sup_density_bound(double p0_sup, double beta) { return 2.0 * p0_sup + beta; }

double lp_density_constant(double sup_density, double t, double beta, double p0_lp_norm, double p)
{
    if (!(t > 0.0 && p0_lp_norm > 0.0 && p >= 1.0))
        throw DomainError("lp_density_constant: need t > 0, ||p0|| > 0, p >= 1");
    return (sup_density - beta) * std::pow(t, 1.0 / (2.0 * p)) / p0_lp_norm;
}

} // namespace mvks
