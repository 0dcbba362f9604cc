#pragma once

#include <vector>

#include "mvks/grid.hpp"
#include "mvks/history.hpp"
#include "mvks/kernel.hpp"

namespace mvks {

enum class ChemicalShape { sine, gaussian_bump, quadratic, constant, custom };

/// Initial chemical concentration c0 and its derivative on a grid. The closed
/// forms unlock exact heat smoothing E c0(x + W_t); `custom` samples are
/// smoothed by periodic convolution.
///
/// - sine:          c0 = a sin(w x)
/// - gaussian_bump: c0 = a exp(-x^2 / (2 s^2))
/// - quadratic:     c0 = -a x^2 / 2 (linear drift surrogate, unbounded)
/// - constant:      c0 = a
struct InitialChemical {
    Grid1D grid;
    Field c0;
    Field c0_prime;
    ChemicalShape shape = ChemicalShape::custom;
    double amplitude = 0.0;
    double scale = 1.0; // frequency for sine, width for gaussian_bump

    static InitialChemical sine(const Grid1D& grid, double amplitude = 1.0, double frequency = 1.0);
    static InitialChemical gaussian_bump(const Grid1D& grid, double amplitude, double width);
    static InitialChemical quadratic(const Grid1D& grid, double coefficient);
    static InitialChemical constant(const Grid1D& grid, double value);
    /// Derivative by periodic central differences.
    static InitialChemical from_samples(const Grid1D& grid, Field c0);

    /// E c0(x + W_t) and its x-derivative; t = 0 gives c0 and c0'.
    double smoothed(double t, double x) const;
    double smoothed_derivative(double t, double x) const;
    Field smoothed_field(double t) const;
    Field smoothed_derivative_field(double t) const;

    double sup_derivative() const { return c0_prime.abs().maxCoeff(); }
    double sup_value() const { return c0.abs().maxCoeff(); }
};

/// b(t, x) = chi e^{-lambda t} E c0'(x + W_t).
double drift_b(const KernelSpec& spec, const InitialChemical& chem, double t, double x);
Field drift_b_field(const KernelSpec& spec, const InitialChemical& chem, double t);

struct ChemicalField {
    Field values;
    Field gradient;
    double time = 0.0;
};

/// int_a^b e^{-lambda u} g(u, z) du and int_a^b e^{-lambda u} d/dz g(u, z) du,
/// both in closed form.
double heat_time_integral(double lambda, double a, double b, double z);
double heat_dx_time_integral(double lambda, double a, double b, double z);

/// c_{t_k} = e^{-lambda t_k} g(t_k) * c0 + int_0^{t_k} e^{-lambda s} rho_{t_k - s} * g(s) ds,
/// with rho frozen on each mesh subinterval and the heat kernel integrated
/// exactly over it. The gradient is assembled the same way from d/dx g.
ChemicalField chemical_concentration(const MarginalHistory& history, const InitialChemical& chem,
                                     double lambda, Index k);

/// d/dx c at t_k; lambda is taken from the kernel spec.
Field chemical_gradient(const MarginalHistory& history, const InitialChemical& chem,
                        const KernelSpec& spec, Index k);

/// The chemical field at every populated mesh node.
std::vector<ChemicalField> chemical_history(const MarginalHistory& history,
                                            const InitialChemical& chem, double lambda);

/// Finite-difference residual of dc/dt = c''/2 - lambda c + rho at interior
/// nodes (k = 1..M-1, skipping `margin` cells at each edge).
struct KsResidual {
    std::vector<double> times;
    std::vector<double> l2_per_node;
    double l2 = 0.0; // sqrt(dt sum_k h sum_i r^2)
};

KsResidual ks_residual(const MarginalHistory& history, const std::vector<ChemicalField>& fields,
                       double lambda, Index margin = 4);

} // namespace mvks
