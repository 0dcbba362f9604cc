#include "mvks/particle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mvks/mild.hpp"

namespace mvks {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

// Deposit weights are integers scaled by 2^40 so that sums are exact and
// independent of particle order.
constexpr double kFixedScale = 1099511627776.0;

double elapsed(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::vector<std::uint64_t> resolve_streams(Index N, const std::vector<std::uint64_t>& given)
{
    if (given.empty()) {
        std::vector<std::uint64_t> s(static_cast<std::size_t>(N));
        std::iota(s.begin(), s.end(), std::uint64_t{0});
        return s;
    }
    if (static_cast<Index>(given.size()) != N)
        throw UsageError("particles: need one stream id per particle");
    return given;
}

/// Cloud-in-cell density of the positions on the grid.
Field deposit(const Grid1D& grid, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    const Index n = grid.size();
    const double h = grid.spacing();
    const double L = grid.half_width();
    std::vector<std::int64_t> cells(static_cast<std::size_t>(n), 0);
    for (Index i = 0; i < x.size(); ++i) {
        double s = (x[i] + L) / h;
        if (grid.periodic_wrap()) {
            s = std::fmod(s, static_cast<double>(n));
            if (s < 0.0)
                s += static_cast<double>(n);
        } else if (s < 0.0 || s > static_cast<double>(n - 1)) {
            continue;
        }
        auto left = static_cast<Index>(std::floor(s));
        left = std::min(left, n - 1);
        const auto right_weight = static_cast<std::int64_t>(std::llround((s - left) * kFixedScale));
        const auto left_weight = static_cast<std::int64_t>(kFixedScale) - right_weight;
        const Index right = grid.periodic_wrap() ? (left + 1) % n : std::min(left + 1, n - 1);
        cells[static_cast<std::size_t>(left)] += left_weight;
        cells[static_cast<std::size_t>(right)] += right_weight;
    }
    Field rho(n);
    const double norm = 1.0 / (kFixedScale * static_cast<double>(x.size()) * h);
    for (Index i = 0; i < n; ++i)
        rho[i] = static_cast<double>(cells[static_cast<std::size_t>(i)]) * norm;
    return rho;
}

void sample_initial(ParticleEnsemble& e, const ParticleRng& rng,
                    const std::function<double(double)>& sampler)
{
    for (Index i = 0; i < e.N; ++i)
        e.positions(0, i) = sampler(rng.uniform(e.streams[static_cast<std::size_t>(i)], 0,
                                                RngPurpose::initial));
}

} // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key)
{
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

Philox4x32::Counter ParticleRng::draw(std::uint64_t stream, std::uint64_t step,
                                      RngPurpose purpose) const
{
    const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(step),
                                     static_cast<std::uint32_t>(step >> 32) ^ (static_cast<std::uint32_t>(purpose) << 24),
                                     static_cast<std::uint32_t>(stream),
                                     static_cast<std::uint32_t>(stream >> 32)};
    return Philox4x32::block(ctr, {static_cast<std::uint32_t>(seed_),
                                   static_cast<std::uint32_t>(seed_ >> 32)});
}

namespace {

double to_unit(std::uint32_t a, std::uint32_t b)
{
    return (static_cast<double>(a >> 5) * 67108864.0 + static_cast<double>(b >> 6))
           * (1.0 / 9007199254740992.0);
}

} // namespace

double ParticleRng::uniform(std::uint64_t stream, std::uint64_t step, RngPurpose purpose) const
{
    const auto r = draw(stream, step, purpose);
    return to_unit(r[0], r[1]);
}

double ParticleRng::normal(std::uint64_t stream, std::uint64_t step, RngPurpose purpose) const
{
    const auto r = draw(stream, step, purpose);
    const double u1 = 1.0 - to_unit(r[0], r[1]); // (0, 1]
    const double u2 = to_unit(r[2], r[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Index ParticleEnsemble::row_of_step(Index step) const
{
    const auto it = std::lower_bound(recorded_steps.begin(), recorded_steps.end(), step);
    if (it == recorded_steps.end() || *it != step)
        throw UsageError("ensemble: step " + std::to_string(step) + " was not recorded");
    return static_cast<Index>(it - recorded_steps.begin());
}

std::function<double(double)> inverse_cdf_sampler(const Grid1D& grid,
                                                  const Eigen::Ref<const Field>& p)
{
    if (p.size() != grid.size())
        throw UsageError("inverse_cdf_sampler: density does not match grid");
    if ((p < 0.0).any())
        throw DomainError("inverse_cdf_sampler: density has negative values");
    const Index n = grid.size();
    std::vector<double> cdf(static_cast<std::size_t>(n + 1), 0.0);
    for (Index i = 0; i < n; ++i)
        cdf[static_cast<std::size_t>(i + 1)] = cdf[static_cast<std::size_t>(i)] + p[i];
    const double total = cdf.back();
    if (!(total > 0.0))
        throw DomainError("inverse_cdf_sampler: density has no mass");
    for (double& c : cdf)
        c /= total;
    const double h = grid.spacing();
    const double left = grid.x(0) - 0.5 * h;
    return [cdf = std::move(cdf), h, left, n](double u) {
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        auto cell = static_cast<Index>(it - cdf.begin()) - 1;
        cell = std::clamp<Index>(cell, 0, n - 1);
        const double lo = cdf[static_cast<std::size_t>(cell)];
        const double hi = cdf[static_cast<std::size_t>(cell + 1)];
        const double frac = hi > lo ? (u - lo) / (hi - lo) : 0.5;
        return left + (static_cast<double>(cell) + frac) * h;
    };
}

ParticleEnsemble simulate_particles(Index N, const DensityField& p0, const KernelSpec& spec,
                                    const InitialChemical& chem, const Grid1D& grid,
                                    const TimeMesh& mesh, std::uint64_t seed,
                                    const ParticleOptions& options)
{
    if (N < 2)
        throw DomainError("simulate_particles: need at least two particles");
    if (!(chem.grid == grid))
        throw UsageError("simulate_particles: chemical field lives on another grid");
    spec.validate();
    const auto started = std::chrono::steady_clock::now();
    const Index M = mesh.steps();
    const double dt = mesh.dt();
    const double sqdt = std::sqrt(dt);

    ParticleEnsemble e;
    e.N = N;
    e.mesh = mesh;
    e.seed = seed;
    e.streams = resolve_streams(N, options.streams);
    e.positions.resize(M + 1, N);
    e.recorded_steps.resize(static_cast<std::size_t>(M + 1));
    std::iota(e.recorded_steps.begin(), e.recorded_steps.end(), Index{0});
    const ParticleRng rng(seed);
    sample_initial(e, rng, inverse_cdf_sampler(grid, p0.values));

    const bool interacting = spec.kind != KernelKind::none;
    const bool closed_b = chem.shape != ChemicalShape::custom;
    std::optional<MemoryOperator> op;
    std::vector<Spectrum> rows;
    if (interacting && options.interaction == InteractionMode::mesh) {
        op.emplace(spec, grid, dt, M);
        rows.reserve(static_cast<std::size_t>(M));
    }

    for (Index k = 0; k < M; ++k) {
        const double t = mesh.t(k);
        const Eigen::VectorXd x = e.positions.row(k).transpose();
        Field B;
        if (op) {
            rows.push_back(op->convolver().spectrum(deposit(grid, x)));
            B = op->apply(rows, 0, k, k);
            e.stats.interaction_evaluations += static_cast<double>(k) * op->convolver().spectrum_size();
        }
        Field b_grid;
        if (!closed_b)
            b_grid = drift_b_field(spec, chem, t);
        const double decay = spec.chi * std::exp(-spec.lambda * t);
#pragma omp parallel for schedule(static)
        for (Index i = 0; i < N; ++i) {
            const double xi = x[i];
            double u = closed_b ? decay * chem.smoothed_derivative(t, xi)
                                : grid.interpolate(b_grid, xi);
            if (op) {
                u += grid.interpolate(B, xi);
            } else if (interacting) {
                double acc = 0.0;
                for (Index l = 0; l < k; ++l) {
                    const double a = static_cast<double>(k - l - 1) * dt;
                    const double bnd = static_cast<double>(k - l) * dt;
                    for (Index j = 0; j < N; ++j)
                        acc += kernel_time_integral(spec, a, bnd, xi - e.positions(l, j));
                }
                u += acc / static_cast<double>(N);
            }
            e.positions(k + 1, i) = xi + dt * u
                                    + sqdt * rng.normal(e.streams[static_cast<std::size_t>(i)],
                                                        static_cast<std::uint64_t>(k),
                                                        RngPurpose::noise);
        }
        if (interacting && !op)
            e.stats.interaction_evaluations += static_cast<double>(N) * N * k;
    }
    e.stats.seconds = elapsed(started);
    return e;
}

ParticleEnsemble simulate_bounded_drift(const DriftFunction& b, double beta,
                                        const std::function<double(double)>& x0_sampler,
                                        const TimeMesh& mesh, Index N, std::uint64_t seed,
                                        Index record_stride)
{
    if (N < 1)
        throw DomainError("simulate_bounded_drift: need at least one path");
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw UsageError("simulate_bounded_drift: drift bound must be declared and finite");
    if (record_stride < 1)
        throw UsageError("simulate_bounded_drift: record stride must be positive");
    const auto started = std::chrono::steady_clock::now();
    const Index M = mesh.steps();
    const double dt = mesh.dt();
    const double sqdt = std::sqrt(dt);

    ParticleEnsemble e;
    e.N = N;
    e.mesh = mesh;
    e.seed = seed;
    e.drift_bound = beta;
    e.streams = resolve_streams(N, {});
    for (Index k = 0; k <= M; k += record_stride)
        e.recorded_steps.push_back(k);
    if (e.recorded_steps.back() != M)
        e.recorded_steps.push_back(M);
    e.positions.resize(static_cast<Index>(e.recorded_steps.size()), N);
    const ParticleRng rng(seed);
    sample_initial(e, rng, x0_sampler);

#pragma omp parallel for schedule(static)
    for (Index i = 0; i < N; ++i) {
        double x = e.positions(0, i);
        std::size_t row = 1;
        for (Index k = 0; k < M; ++k) {
            x += dt * b(mesh.t(k), x)
                 + sqdt * rng.normal(e.streams[static_cast<std::size_t>(i)], static_cast<std::uint64_t>(k),
                                     RngPurpose::noise);
            if (row < e.recorded_steps.size() && e.recorded_steps[row] == k + 1)
                e.positions(static_cast<Index>(row++), i) = x;
        }
    }
    e.stats.seconds = elapsed(started);
    return e;
}

double silverman_bandwidth(const Eigen::Ref<const Eigen::VectorXd>& samples)
{
    const auto N = static_cast<double>(samples.size());
    if (N < 2)
        return 0.0;
    const double mean = samples.mean();
    const double var = (samples.array() - mean).square().sum() / (N - 1.0);
    return 1.06 * std::sqrt(var) * std::pow(N, -0.2);
}

KdeDensity kde_density(const ParticleEnsemble& ensemble, Index step, const Grid1D& grid,
                       double bandwidth)
{
    const Eigen::VectorXd x = ensemble.at_step(step);
    KdeDensity out;
    out.bandwidth = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(x);
    if (!(out.bandwidth > 0.0)) {
        out.degenerate = true;
        out.bandwidth = grid.spacing();
    }
    const double bw = out.bandwidth;
    const double reach = 9.0 * bw;
    const Index n = grid.size();
    const double h = grid.spacing();
    Field rho = Field::Zero(n);
    for (Index j = 0; j < x.size(); ++j) {
        const double xj = x[j];
        const auto lo = std::max<Index>(0, static_cast<Index>(std::ceil((xj - reach - grid.x(0)) / h)));
        const auto hi = std::min<Index>(n - 1, static_cast<Index>(std::floor((xj + reach - grid.x(0)) / h)));
        for (Index i = lo; i <= hi; ++i) {
            const double z = (grid.x(i) - xj) / bw;
            rho[i] += std::exp(-0.5 * z * z);
        }
    }
    rho /= static_cast<double>(x.size()) * bw * std::sqrt(2.0 * std::numbers::pi);
    out.density = {rho, ensemble.mesh.t(step)};
    return out;
}

void ErrorTable::push(double time, double a, double b, double c)
{
    t.push_back(time);
    l1.push_back(a);
    l2.push_back(b);
    linf.push_back(c);
    max_l1 = std::max(max_l1, a);
    max_l2 = std::max(max_l2, b);
    max_linf = std::max(max_linf, c);
}

ErrorTable compare_histories(const MarginalHistory& a, const MarginalHistory& b)
{
    if (!(a.grid == b.grid) || a.mesh.steps() != b.mesh.steps()
        || a.mesh.horizon() != b.mesh.horizon() || a.populated != b.populated)
        throw UsageError("compare_histories: histories differ in shape");
    const double h = a.grid.spacing();
    ErrorTable out;
    for (Index k = 0; k < a.populated; ++k) {
        const Eigen::ArrayXd d = (a.densities.row(k) - b.densities.row(k)).transpose().array();
        out.push(a.mesh.t(k), h * d.abs().sum(), std::sqrt(h * d.square().sum()), d.abs().maxCoeff());
    }
    return out;
}

ErrorTable compare_densities(const Grid1D& grid, const std::vector<DensityField>& a,
                             const std::vector<DensityField>& b)
{
    if (a.size() != b.size())
        throw UsageError("compare_densities: row counts differ");
    const double h = grid.spacing();
    ErrorTable out;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].values.size() != grid.size() || b[k].values.size() != grid.size())
            throw UsageError("compare_densities: density does not match grid");
        const Field d = a[k].values - b[k].values;
        out.push(a[k].time, h * d.abs().sum(), std::sqrt(h * d.square().sum()), d.abs().maxCoeff());
    }
    return out;
}

} // namespace mvks
