#pragma once

#include <optional>
#include <vector>

#include "mvks/grid.hpp"
#include "mvks/particle.hpp"

namespace mvks {

/// Diffusion X_t = x + beta int_0^t sgn(y - X_s) ds + W_t observed at time t.
struct QZParams {
    double beta = 0.0;
    double y = 0.0;
    double x = 0.0;
    double t = 1.0;

    void validate() const;
};

/// Transition density of X at z: an integral over the excursion variable,
/// done by adaptive quadrature up to where the integrand falls below 1e-15 of
/// its peak, plus an explicit Gaussian-difference term.
double qz_density(const QZParams& params, double z);

/// Density at the attractor,
///   (2 pi t)^{-1/2} int_{|x-y|/sqrt t}^inf z e^{-(z - beta sqrt t)^2/2} dz,
/// in closed form.
double qz_density_at_y(const QZParams& params);

/// Upper bound on the density at y of any diffusion started at x whose drift
/// is bounded by beta.
double qz_bound(double t, double x, double y, double beta);

/// The bound integrated against a starting density on the grid.
double qz_bound_mixture(double t, double y, double beta, const Grid1D& grid,
                        const Eigen::Ref<const Field>& p0);

struct Bins {
    double lo = -5.0;
    double hi = 5.0;
    Index count = 50;

    double width() const { return (hi - lo) / static_cast<double>(count); }
    double center(Index b) const { return lo + (static_cast<double>(b) + 0.5) * width(); }
};

struct Histogram {
    Bins bins;
    std::vector<double> density;   // count / (N width)
    std::vector<double> std_error; // binomial standard error of the density
};

Histogram histogram(const Eigen::Ref<const Eigen::VectorXd>& samples, const Bins& bins);

struct BinCheck {
    double t = 0.0;
    double center = 0.0;
    double density = 0.0;
    double std_error = 0.0;
    double bound = 0.0;
    bool violated = false;
};

struct BoundReport {
    std::vector<BinCheck> bins;
    Index violations = 0;
    double beta = 0.0;
    std::vector<double> times;
    std::vector<double> sup_density; // per time
    std::vector<double> sup_error;   // standard error of the bin attaining the sup

    /// max over bins of (density - bound) / std_error.
    double max_excess() const;
};

/// Bins the ensemble at each listed step and compares every bin against the
/// bin-averaged bound, flagging bins above bound + 3 standard errors. The
/// drift bound is the one declared on the ensemble; undeclared -> UsageError.
BoundReport verify_bound(const ParticleEnsemble& ensemble, const Bins& bins,
                         const std::vector<Index>& steps, double x0);
BoundReport verify_bound(const ParticleEnsemble& ensemble, const Bins& bins,
                         const std::vector<Index>& steps, const Grid1D& grid,
                         const Eigen::Ref<const Field>& p0);

/// 2 ||p0||_inf + beta.
double sup_density_bound(double p0_sup, double beta);

/// Empirical constant C in ||p_t||_inf <= C ||p0||_p t^{-1/(2p)} + beta.
double lp_density_constant(double sup_density, double t, double beta, double p0_lp_norm,
                           double p);

} // namespace mvks
