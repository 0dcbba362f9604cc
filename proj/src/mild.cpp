#include "mvks/mild.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace mvks {

namespace {

/// Spectral symbols of g(dt) * . and -dt (d/dx g(dt)) * . on the convolver's grid.
struct StepSymbols {
    Spectrum heat;
    Spectrum flux;
};

StepSymbols step_symbols(const SpectralConvolver& conv, double dt)
{
    const Grid1D& grid = conv.grid();
    StepSymbols s;
    if (grid.periodic_wrap()) {
        // Exact heat semigroup on the periodic box.
        const Index size = conv.spectrum_size();
        s.heat.resize(size);
        s.flux.resize(size);
        for (Index m = 0; m < size; ++m) {
            const double xi = conv.wavenumber(m);
            const double decay = std::exp(-0.5 * xi * xi * dt);
            s.heat[m] = decay;
            s.flux[m] = std::complex<double>(0.0, -dt * xi * decay);
        }
        if (grid.size() % 2 == 0)
            s.flux[size - 1] = 0.0; // Nyquist mode has no odd part
        return s;
    }
    s.heat = conv.kernel_spectrum(sample_heat_kernel(grid, dt));
    s.flux = -dt * conv.kernel_spectrum(grid.sample([dt](double x) { return heat_kernel_dx(dt, x); }))
                   .array();
    return s;
}

Field advance(const SpectralConvolver& conv, const StepSymbols& sym, const Spectrum& p_hat,
              const Field& p, const Field& u)
{
    Spectrum s = p_hat.cwiseProduct(sym.heat);
    s += conv.spectrum(u * p).cwiseProduct(sym.flux);
    return conv.inverse(s);
}

/// Clips, logs and renormalizes a freshly computed row.
void commit_row(MarginalHistory& history, Index k, Index global_step, Field next, double mass_tol)
{
    clip_roundoff(next);
    const double m = mass(history.grid, next);
    if (!std::isfinite(m) || std::abs(m - 1.0) > 10.0 * mass_tol)
        throw InstabilityError("mild: mass drift " + std::to_string(m - 1.0) + " at step "
                                   + std::to_string(global_step),
                               static_cast<long>(global_step));
    next /= m;
    history.set_row(k, next, m);
}

void check_initial(const DensityField& p0, const Grid1D& grid)
{
    if (p0.values.size() != grid.size())
        throw UsageError("mild: p0 does not match grid");
    const double m = mass(grid, p0.values);
    if (!(std::abs(m - 1.0) <= 1e-3))
        throw DomainError("mild: p0 must have unit mass (got " + std::to_string(m) + ")");
}

double max_row_distance(const MarginalHistory& a, const MarginalHistory& b)
{
    double d = 0.0;
    for (Index k = 0; k < a.rows(); ++k)
        d = std::max(d, a.grid.spacing() * (a.densities.row(k) - b.densities.row(k)).cwiseAbs().sum());
    return d;
}

double wrap_displacement(const Grid1D& grid, double d)
{
    const double period = 2.0 * grid.half_width();
    return d - period * std::floor((d + grid.half_width()) / period);
}

/// Picard iteration on one window starting at absolute time `start` with the
/// frozen restart drift `prefix` (empty for the first window).
PicardResult picard_window(const Field& p_start, const KernelSpec& spec,
                           const InitialChemical& chem, const Grid1D& grid, double start,
                           double dt, Index steps, const std::vector<Field>& prefix,
                           const MemoryOperator& op, const PicardOptions& options)
{
    const SpectralConvolver& conv = op.convolver();
    const StepSymbols sym = step_symbols(conv, dt);
    const TimeMesh mesh(static_cast<double>(steps) * dt, steps, start);

    std::vector<Field> b_fields(static_cast<std::size_t>(steps));
    for (Index j = 0; j < steps; ++j) {
        b_fields[static_cast<std::size_t>(j)] = drift_b_field(spec, chem, mesh.t(j));
        if (!prefix.empty())
            b_fields[static_cast<std::size_t>(j)] += prefix[static_cast<std::size_t>(j)];
    }

    PicardResult result;
    result.D_of_T = op.active() ? horizon_D(spec, mesh.horizon()) : 0.0;
    if (result.D_of_T >= 1.0)
        result.note = "window horizon has D(T) >= 1; contraction not guaranteed";

    const Spectrum start_hat = conv.spectrum(p_start);
    std::vector<Spectrum> source(static_cast<std::size_t>(steps), start_hat);
    std::vector<MarginalHistory> kept;
    Index rising = 0;

    for (Index it = 1; it <= options.k_max; ++it) {
        MarginalHistory h(grid, mesh);
        h.set_row(0, p_start, mass(grid, p_start));
        std::vector<Spectrum> next_source(static_cast<std::size_t>(steps));
        for (Index j = 0; j < steps; ++j) {
            const Field p = h.row(j);
            const Spectrum p_hat = j == 0 ? start_hat : conv.spectrum(p);
            next_source[static_cast<std::size_t>(j)] = p_hat;
            Field u = b_fields[static_cast<std::size_t>(j)];
            if (op.active() && j > 0)
                u += op.apply(source, 0, j, j);
            commit_row(h, j + 1, j + 1, advance(conv, sym, p_hat, p, u), options.mass_tol);
        }
        result.iterations = it;
        source = std::move(next_source);
        if (!kept.empty()) {
            const double d = max_row_distance(h, kept.back());
            if (!result.distances.empty() && d > result.distances.back())
                ++rising;
            else
                rising = 0;
            result.distances.push_back(d);
        }
        if (!options.keep_iterates)
            kept.clear();
        kept.push_back(std::move(h));
        if (!result.distances.empty() && result.distances.back() < options.tol) {
            result.converged = true;
            break;
        }
        if (rising >= 3) {
            result.diverged = true;
            result.note = "distance ratio above 1 for three consecutive iterates";
            break;
        }
    }
    result.iterates = std::move(kept);
    return result;
}

} // namespace

MemoryOperator::MemoryOperator(const KernelSpec& spec, const Grid1D& grid, double dt,
                               Index max_lag)
    : spec_(spec), conv_(grid), dt_(dt), active_(spec.kind != KernelKind::none)
{
    if (!(dt > 0.0))
        throw DomainError("MemoryOperator: dt must be positive");
    spec_.validate();
    lags_.resize(1);
    reserve(max_lag);
}

void MemoryOperator::reserve(Index max_lag)
{
    const Index have = this->max_lag();
    if (max_lag <= have)
        return;
    lags_.resize(static_cast<std::size_t>(max_lag + 1));
    if (!active_)
        return;
#pragma omp parallel for schedule(static)
    for (Index j = have + 1; j <= max_lag; ++j)
        lags_[static_cast<std::size_t>(j)]
            = conv_.kernel_spectrum(lag_kernel(spec_, conv_.grid(), dt_, j));
}

Field MemoryOperator::apply(const std::vector<Spectrum>& rows, Index first, Index last,
                            Index k) const
{
    const Index n = conv_.grid().size();
    if (!active_ || last <= first)
        return Field::Zero(n);
    if (first < 0 || last > static_cast<Index>(rows.size()) || k < last)
        throw UsageError("memory drift: history rows out of range");
    if (k - first > max_lag())
        throw UsageError("memory drift: lag exceeds the cached kernels");
    Spectrum acc = Spectrum::Zero(conv_.spectrum_size());
    for (Index l = first; l < last; ++l)
        acc.array() += rows[static_cast<std::size_t>(l)].array()
                       * lags_[static_cast<std::size_t>(k - l)].array();
    return conv_.inverse(acc);
}

MemoryDrift memory_drift(const MarginalHistory& history, const KernelSpec& spec, Index k)
{
    if (k < 0 || k >= history.rows())
        throw UsageError("memory_drift: step out of range");
    history.require_rows(k, "memory_drift");
    MemoryDrift out;
    out.time = history.mesh.t(k);
    if (k == 0 || spec.kind == KernelKind::none) {
        out.values = Field::Zero(history.grid.size());
        return out;
    }
    const MemoryOperator op(spec, history.grid, history.mesh.dt(), k);
    std::vector<Spectrum> rows(static_cast<std::size_t>(k));
    for (Index l = 0; l < k; ++l)
        rows[static_cast<std::size_t>(l)] = op.convolver().spectrum(history.row(l));
    out.values = op.apply(rows, 0, k, k);
    return out;
}

std::vector<Field> memory_drift_history(const MarginalHistory& history, const KernelSpec& spec)
{
    const Index count = history.populated;
    const MemoryOperator op(spec, history.grid, history.mesh.dt(), std::max<Index>(count - 1, 1));
    std::vector<Spectrum> rows(static_cast<std::size_t>(count));
    for (Index l = 0; l < count; ++l)
        rows[static_cast<std::size_t>(l)] = op.convolver().spectrum(history.row(l));
    std::vector<Field> out(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(static)
    for (Index k = 0; k < count; ++k)
        out[static_cast<std::size_t>(k)] = op.apply(rows, 0, k, k);
    return out;
}

MarginalHistory march(const DensityField& p0, const KernelSpec& spec, const InitialChemical& chem,
                      const Grid1D& grid, const TimeMesh& mesh, const MarchOptions& options)
{
    check_initial(p0, grid);
    if (!(chem.grid == grid))
        throw UsageError("march: chemical field lives on another grid");
    const Index M = mesh.steps();
    const MemoryOperator op(spec, grid, mesh.dt(), M);
    const SpectralConvolver& conv = op.convolver();
    const StepSymbols sym = step_symbols(conv, mesh.dt());

    MarginalHistory history(grid, mesh);
    history.set_row(0, p0.values, mass(grid, p0.values));
    std::vector<Spectrum> rows;
    rows.reserve(static_cast<std::size_t>(M));
    for (Index k = 0; k < M; ++k) {
        const Field p = history.row(k);
        rows.push_back(conv.spectrum(p));
        Field u = drift_b_field(spec, chem, mesh.t(k));
        if (op.active() && k > 0)
            u += op.apply(rows, 0, k, k);
        commit_row(history, k + 1, k + 1, advance(conv, sym, rows.back(), p, u), options.mass_tol);
    }
    return history;
}

PicardResult picard(const DensityField& p0, const KernelSpec& spec, const InitialChemical& chem,
                    const Grid1D& grid, const TimeMesh& mesh, const PicardOptions& options)
{
    check_initial(p0, grid);
    if (!(chem.grid == grid))
        throw UsageError("picard: chemical field lives on another grid");
    if (options.k_max < 1)
        throw UsageError("picard: k_max must be at least 1");
    const MemoryOperator op(spec, grid, mesh.dt(), mesh.steps());
    return picard_window(p0.values, spec, chem, grid, mesh.start(), mesh.dt(), mesh.steps(), {},
                         op, options);
}

double restart_drift(const MarginalHistory& prefix, const KernelSpec& spec, double t, double x)
{
    const double T0 = prefix.mesh.horizon();
    if (!(t >= 0.0 && t <= T0))
        throw DomainError("restart_drift: t must lie in [0, T0]");
    const Index M0 = prefix.mesh.steps();
    prefix.require_rows(M0, "restart_drift");
    if (spec.kind == KernelKind::none)
        return 0.0;
    const Grid1D& grid = prefix.grid;
    const double dt = prefix.mesh.dt();
    double total = 0.0;
    for (Index l = 0; l < M0; ++l) {
        const double lo = std::max(0.0, T0 + t - (l + 1 == M0 ? T0 : static_cast<double>(l + 1) * dt));
        const double hi = T0 + t - static_cast<double>(l) * dt;
        double acc = 0.0;
        for (Index i = 0; i < grid.size(); ++i) {
            const double p = prefix.densities(l, i);
            if (p == 0.0)
                continue;
            double d = x - grid.x(i);
            if (grid.periodic_wrap())
                d = wrap_displacement(grid, d);
            else if (d < -grid.half_width() || d >= grid.half_width())
                continue;
            acc += p * kernel_time_integral(spec, lo, hi, d);
        }
        total += acc;
    }
    return grid.spacing() * total;
}

Field restart_drift_field(const MarginalHistory& prefix, const KernelSpec& spec, Index j)
{
    const Index M0 = prefix.mesh.steps();
    if (j < 0 || j > M0)
        throw DomainError("restart_drift: t must lie in [0, T0]");
    prefix.require_rows(M0, "restart_drift");
    const MemoryOperator op(spec, prefix.grid, prefix.mesh.dt(), M0 + j);
    std::vector<Spectrum> rows(static_cast<std::size_t>(M0));
    for (Index l = 0; l < M0; ++l)
        rows[static_cast<std::size_t>(l)] = op.convolver().spectrum(prefix.row(l));
    return op.apply(rows, 0, M0, M0 + j);
}

SolveResult solve_global(const DensityField& p0, const KernelSpec& spec,
                         const InitialChemical& chem, const Grid1D& grid, const TimeMesh& mesh,
                         const SolveOptions& options)
{
    if (options.mode == SolveMode::march)
        return {march(p0, spec, chem, grid, mesh, options.march),
                std::numeric_limits<double>::infinity(), {}};

    check_initial(p0, grid);
    if (!(chem.grid == grid))
        throw UsageError("solve: chemical field lives on another grid");
    const Index M = mesh.steps();
    const double dt = mesh.dt();
    SolveResult result{MarginalHistory(grid, mesh), find_T0(spec, options.safety, dt), {}};
    const Index window = std::isfinite(result.T0)
                             ? std::min<Index>(M, std::llround(result.T0 / dt))
                             : M;

    const MemoryOperator op(spec, grid, dt, M);
    const SpectralConvolver& conv = op.convolver();
    MarginalHistory& history = result.history;
    history.set_row(0, p0.values, mass(grid, p0.values));
    std::vector<Spectrum> rows;
    rows.reserve(static_cast<std::size_t>(M));

    for (Index k0 = 0; k0 < M; k0 += window) {
        const Index steps = std::min(window, M - k0);
        WindowReport report;
        report.first_step = k0;
        report.last_step = k0 + steps;
        std::vector<Field> prefix;
        if (k0 > 0 && op.active()) {
            prefix.resize(static_cast<std::size_t>(steps));
            for (Index j = 0; j < steps; ++j) {
                prefix[static_cast<std::size_t>(j)] = op.apply(rows, 0, k0, k0 + j);
                report.restart_sup
                    = std::max(report.restart_sup, prefix[static_cast<std::size_t>(j)].abs().maxCoeff());
            }
        }
        PicardOptions po = options.picard;
        po.keep_iterates = false;
        const PicardResult pr = picard_window(history.row(k0), spec, chem, grid, mesh.t(k0), dt,
                                              steps, prefix, op, po);
        report.iterations = pr.iterations;
        report.distances = pr.distances;
        report.converged = pr.converged;
        report.diverged = pr.diverged;
        const MarginalHistory& w = pr.last();
        for (Index j = 1; j <= steps; ++j)
            history.set_row(k0 + j, w.row(j), w.mass_log[static_cast<std::size_t>(j)]);
        for (Index j = 0; j < steps; ++j)
            rows.push_back(conv.spectrum(history.row(k0 + j)));
        result.windows.push_back(std::move(report));
    }
    return result;
}

} // namespace mvks
