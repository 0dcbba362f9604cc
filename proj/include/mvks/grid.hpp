#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "mvks/errors.hpp"

namespace mvks {

using Eigen::Index;

template <typename Scalar>
using FieldT = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
using Field = FieldT<double>;
using Spectrum = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, 1>;

/// Uniform grid x_i = -L + i h on [-L, L), h = 2L/n.
///
/// Every field integral uses the rectangle rule h * sum(f), which coincides
/// with the trapezoid rule on the periodic box, so integrate(1) == 2L.
class Grid1D {
public:
    Grid1D(double half_width, Index n, bool periodic_wrap = true);

    double half_width() const { return half_width_; }
    Index size() const { return n_; }
    double spacing() const { return h_; }
    bool periodic_wrap() const { return periodic_; }

    double x(Index i) const { return -half_width_ + static_cast<double>(i) * h_; }
    Field points() const;

    template <typename F>
    Field sample(F&& f) const
    {
        Field out(n_);
        for (Index i = 0; i < n_; ++i)
            out[i] = f(x(i));
        return out;
    }

    double integrate(const Eigen::Ref<const Field>& f) const { return h_ * f.sum(); }

    /// Linear interpolation of grid samples at an arbitrary position. Points
    /// outside the box are wrapped periodically.
    double interpolate(const Eigen::Ref<const Field>& f, double x) const;

    /// Index of the grid point that sits at displacement zero (x_i == 0).
    Index origin_index() const { return n_ / 2; }

    bool operator==(const Grid1D& o) const
    {
        return n_ == o.n_ && half_width_ == o.half_width_ && periodic_ == o.periodic_;
    }

private:
    double half_width_;
    Index n_;
    double h_;
    bool periodic_;
};

/// Uniform time mesh t_k = start + k dt, k = 0..M, with t_M == start + T exactly.
class TimeMesh {
public:
    TimeMesh(double horizon, Index steps, double start = 0.0);

    double horizon() const { return horizon_; }
    Index steps() const { return steps_; }
    double dt() const { return dt_; }
    double start() const { return start_; }
    double t(Index k) const
    {
        return k == steps_ ? start_ + horizon_ : start_ + static_cast<double>(k) * dt_;
    }

private:
    double horizon_;
    Index steps_;
    double dt_;
    double start_;
};

/// A probability density sampled on a grid at one instant.
struct DensityField {
    Field values;
    double time = 0.0;
};

inline constexpr double kClipTolerance = 1e-12;

/// Zeroes roundoff negatives in [-kClipTolerance, 0); returns how many values
/// lie below -kClipTolerance (left untouched).
Index clip_roundoff(Eigen::Ref<Field> values);

double mass(const Grid1D& grid, const Eigen::Ref<const Field>& f);

/// Rescales to unit quadrature mass; throws if the mass is not positive.
void normalize(const Grid1D& grid, Eigen::Ref<Field> f);

template <typename Scalar>
Scalar heat_kernel(Scalar t, Scalar x)
{
    if (!(t > Scalar(0)))
        throw DomainError("heat_kernel: t must be positive");
    using std::exp;
    using std::sqrt;
    return exp(-x * x / (Scalar(2) * t)) / sqrt(Scalar(2) * std::numbers::pi_v<Scalar> * t);
}

/// d/dx g(t, x).
template <typename Scalar>
Scalar heat_kernel_dx(Scalar t, Scalar x)
{
    return -x / t * heat_kernel(t, x);
}

/// Samples g(t, .) at the grid's displacement points (x_i read as offsets).
Field sample_heat_kernel(const Grid1D& grid, double t);

enum class ConvolutionMethod { fft, direct };

/// (f * g)(x_i) ~ h sum_j f(x_j) g(x_i - x_j), where `kernel` holds samples of
/// g at the displacements x_m. Periodic grids wrap displacements modulo 2L;
/// otherwise displacements outside [-L, L) contribute zero.
Field convolve(const Grid1D& grid, const Eigen::Ref<const Field>& f,
               const Eigen::Ref<const Field>& kernel,
               ConvolutionMethod method = ConvolutionMethod::fft);

/// FFT convolution engine with reusable spectra. kernel_spectrum() folds in
/// the displacement shift and the factor h, so that
/// inverse(spectrum(f) .* kernel_spectrum(g)) == convolve(f, g).
class SpectralConvolver {
public:
    explicit SpectralConvolver(const Grid1D& grid);

    const Grid1D& grid() const { return grid_; }
    Index spectrum_size() const { return padded_ / 2 + 1; }
    /// Angular frequency of spectrum slot m.
    double wavenumber(Index m) const
    {
        return 2.0 * std::numbers::pi * static_cast<double>(m)
               / (static_cast<double>(padded_) * grid_.spacing());
    }

    Spectrum spectrum(const Eigen::Ref<const Field>& f) const;
    Spectrum kernel_spectrum(const Eigen::Ref<const Field>& kernel) const;
    Field inverse(const Spectrum& s) const;

    Field convolve(const Eigen::Ref<const Field>& f, const Eigen::Ref<const Field>& kernel) const
    {
        Spectrum s = spectrum(f);
        s.array() *= kernel_spectrum(kernel).array();
        return inverse(s);
    }

private:
    Grid1D grid_;
    Index padded_;
};

/// Central-difference derivative with periodic wrap.
Field central_difference(const Grid1D& grid, const Eigen::Ref<const Field>& f);

/// Product-integration weights w_l = int_{t_l}^{t_{l+1}} (t_k - s)^{-gamma} ds,
/// l = 0..k-1, in closed form.
Field singular_time_weights(const TimeMesh& mesh, Index k, double gamma);

} // namespace mvks
