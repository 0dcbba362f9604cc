#include "mvks/grid.hpp"

#include <unsupported/Eigen/FFT>

namespace mvks {

Grid1D::Grid1D(double half_width, Index n, bool periodic_wrap)
    : half_width_(half_width), n_(n), h_(2.0 * half_width / static_cast<double>(n)),
      periodic_(periodic_wrap)
{
    if (n < 16)
        throw UsageError("Grid1D: need at least 16 points");
    if (n % 2 != 0)
        throw UsageError("Grid1D: point count must be even so that x = 0 is a grid point");
    if (!(half_width > 0.0) || !std::isfinite(half_width))
        throw DomainError("Grid1D: half width must be positive and finite");
}

Field Grid1D::points() const
{
    return sample([](double x) { return x; });
}

double Grid1D::interpolate(const Eigen::Ref<const Field>& f, double x) const
{
    double u = (x + half_width_) / h_;
    const double n = static_cast<double>(n_);
    if (periodic_) {
        u = std::fmod(u, n);
        if (u < 0.0)
            u += n;
    } else if (u < 0.0 || u > n - 1.0) {
        return 0.0;
    }
    auto i0 = static_cast<Index>(std::floor(u));
    if (i0 >= n_)
        i0 = n_ - 1;
    const double frac = u - static_cast<double>(i0);
    const Index i1 = (i0 + 1) % n_;
    return (1.0 - frac) * f[i0] + frac * f[i1];
}

TimeMesh::TimeMesh(double horizon, Index steps, double start)
    : horizon_(horizon), steps_(steps), dt_(horizon / static_cast<double>(steps)), start_(start)
{
    if (steps < 1)
        throw UsageError("TimeMesh: need at least one step");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw DomainError("TimeMesh: horizon must be positive and finite");
}

Index clip_roundoff(Eigen::Ref<Field> values)
{
    Index below = 0;
    for (Index i = 0; i < values.size(); ++i) {
        if (values[i] < 0.0) {
            if (values[i] >= -kClipTolerance)
                values[i] = 0.0;
            else
                ++below;
        }
    }
    return below;
}

double mass(const Grid1D& grid, const Eigen::Ref<const Field>& f)
{
    if (f.size() != grid.size())
        throw UsageError("mass: field does not match grid");
    return grid.integrate(f);
}

void normalize(const Grid1D& grid, Eigen::Ref<Field> f)
{
    const double m = mass(grid, f);
    if (!(m > 0.0))
        throw UsageError("normalize: non-positive mass");
    f /= m;
}

Field sample_heat_kernel(const Grid1D& grid, double t)
{
    if (!(t > 0.0))
        throw DomainError("heat_kernel: t must be positive");
    return grid.sample([t](double x) { return heat_kernel(t, x); });
}

namespace {

// The kissfft backend keeps scratch buffers inside the engine, so each
// thread gets its own; plans are cached per transform size.
Eigen::FFT<double>& fft_engine()
{
    thread_local Eigen::FFT<double> engine = [] {
        Eigen::FFT<double> e;
        e.SetFlag(Eigen::FFT<double>::HalfSpectrum);
        return e;
    }();
    return engine;
}

} // namespace

SpectralConvolver::SpectralConvolver(const Grid1D& grid)
    : grid_(grid), padded_(grid.periodic_wrap() ? grid.size() : 2 * grid.size())
{
}

Spectrum SpectralConvolver::spectrum(const Eigen::Ref<const Field>& f) const
{
    if (f.size() != grid_.size())
        throw UsageError("convolve: field does not match grid");
    Eigen::VectorXd padded = Eigen::VectorXd::Zero(padded_);
    padded.head(grid_.size()) = f.matrix();
    Spectrum out;
    fft_engine().fwd(out, padded);
    return out;
}

Spectrum SpectralConvolver::kernel_spectrum(const Eigen::Ref<const Field>& kernel) const
{
    const Index n = grid_.size();
    if (kernel.size() != n)
        throw UsageError("convolve: kernel does not match grid");
    // Slot d (mod padded) holds the kernel at displacement d*h.
    Eigen::VectorXd shifted = Eigen::VectorXd::Zero(padded_);
    for (Index m = 0; m < n; ++m) {
        const Index d = m - n / 2;
        shifted[(d + padded_) % padded_] = kernel[m] * grid_.spacing();
    }
    Spectrum out;
    fft_engine().fwd(out, shifted);
    return out;
}

Field SpectralConvolver::inverse(const Spectrum& s) const
{
    Eigen::VectorXd out;
    fft_engine().inv(out, s, padded_);
    return out.head(grid_.size()).array();
}

namespace {

Field convolve_direct(const Grid1D& grid, const Eigen::Ref<const Field>& f,
                      const Eigen::Ref<const Field>& kernel)
{
    const Index n = grid.size();
    Field out = Field::Zero(n);
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Index j = 0; j < n; ++j) {
            Index d = i - j;
            if (grid.periodic_wrap()) {
                d = ((d + n / 2) % n + n) % n;
            } else {
                if (d < -n / 2 || d >= n / 2)
                    continue;
                d += n / 2;
            }
            acc += f[j] * kernel[d];
        }
        out[i] = acc * grid.spacing();
    }
    return out;
}

} // namespace

Field convolve(const Grid1D& grid, const Eigen::Ref<const Field>& f,
               const Eigen::Ref<const Field>& kernel, ConvolutionMethod method)
{
    if (f.size() != grid.size() || kernel.size() != grid.size())
        throw UsageError("convolve: size mismatch with grid");
    if (method == ConvolutionMethod::direct)
        return convolve_direct(grid, f, kernel);
    return SpectralConvolver(grid).convolve(f, kernel);
}

Field central_difference(const Grid1D& grid, const Eigen::Ref<const Field>& f)
{
    const Index n = grid.size();
    if (f.size() != n)
        throw UsageError("central_difference: size mismatch with grid");
    Field out(n);
    for (Index i = 0; i < n; ++i)
        out[i] = (f[(i + 1) % n] - f[(i + n - 1) % n]) / (2.0 * grid.spacing());
    return out;
}

Field singular_time_weights(const TimeMesh& mesh, Index k, double gamma)
{
    if (!(gamma > 0.0 && gamma < 1.0))
        throw DomainError("singular_time_weights: exponent must lie in (0, 1)");
    if (k < 1 || k > mesh.steps())
        throw UsageError("singular_time_weights: step index out of range");
    const double e = 1.0 - gamma;
    const double tk = mesh.t(k);
    Field w(k);
    for (Index l = 0; l < k; ++l) {
        // Distances to t_k measured in mesh units keep the last weight exact.
        const double far = l == 0 ? tk - mesh.t(0) : static_cast<double>(k - l) * mesh.dt();
        const double near = static_cast<double>(k - l - 1) * mesh.dt();
        w[l] = (std::pow(far, e) - std::pow(near, e)) / e;
    }
    return w;
}

} // namespace mvks
