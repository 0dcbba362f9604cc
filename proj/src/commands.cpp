#include "mvks/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "mvks/field.hpp"
#include "mvks/io.hpp"
#include "mvks/quadrature.hpp"
#include "mvks/qz.hpp"

#ifndef MVKS_VERSION
#define MVKS_VERSION "unknown"
#endif

namespace mvks {

namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class PhaseTimer {
public:
    explicit PhaseTimer(RunReport& report) : report_(report) {}

    void lap(const std::string& phase)
    {
        const auto now = std::chrono::steady_clock::now();
        report_.timing.emplace_back(phase, std::chrono::duration<double>(now - last_).count());
        last_ = now;
    }

private:
    RunReport& report_;
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void say(const CommandOptions& o, const std::string& line)
{
    if (o.log)
        *o.log << line << '\n';
}

void emit(const RunConfig& c, const fs::path& dir, const std::string& stem, const CsvTable& t,
          bool blocks = false)
{
    if (c.wants("csv"))
        write_csv(dir / (stem + ".csv"), t);
    if (c.wants("dat"))
        write_gnuplot(dir / (stem + ".dat"), t, blocks);
}

RunReport start(const std::string& command, const RunConfig& c, const CommandOptions& o)
{
    fs::create_directories(o.out_dir);
    RunReport r;
    r.command = command;
    r.config_hash = config_hash(c);
    r.code_version = code_version();
    r.seed = o.seed.value_or(c.particles.seed);
    return r;
}

int finish(RunReport& r, const RunConfig& c, const CommandOptions& o, RunReport* out)
{
    for (const auto& ch : r.checks) {
        char line[512];
        std::snprintf(line, sizeof line, "%s  %-28s value=%.6g bound=%.6g%s%s",
                      ch.pass ? "PASS" : "FAIL", ch.name.c_str(), ch.value, ch.bound,
                      ch.note.empty() ? "" : "  ", ch.note.c_str());
        say(o, line);
    }
    if (c.wants("json")) {
        std::FILE* f = std::fopen((o.out_dir / "report.json").c_str(), "w");
        if (!f)
            throw UsageError("cannot write " + (o.out_dir / "report.json").string());
        const std::string text = r.to_json();
        std::fwrite(text.data(), 1, text.size(), f);
        std::fclose(f);
    }
    const int code = r.all_pass() ? 0 : 1;
    if (out)
        *out = std::move(r);
    return code;
}

double l2_norm(const Grid1D& grid, const Field& p) { return std::sqrt(grid.integrate(p.square())); }

/// max / min of a positive sequence.
double spread(const std::vector<double>& v)
{
    if (v.empty())
        return 1.0;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo > 0.0 ? *hi / *lo : kInf;
}

SolveOptions solve_options(const RunConfig& c, const CommandOptions& o)
{
    SolveOptions s;
    s.mode = o.mode.value_or(c.solve.mode);
    s.safety = c.picard.safety;
    s.march.mass_tol = c.solve.mass_tol;
    s.picard.k_max = c.picard.k_max;
    s.picard.tol = c.picard.tol;
    s.picard.mass_tol = c.solve.mass_tol;
    return s;
}

const char* mode_name(SolveMode m) { return m == SolveMode::march ? "march" : "picard_with_restart"; }

} // namespace

void RunReport::check(std::string name, double value, double bound, bool pass, std::string note)
{
    checks.push_back({std::move(name), value, bound, pass, std::move(note)});
}

bool RunReport::all_pass() const
{
    return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
}

std::string RunReport::to_json() const
{
    using nlohmann::json;
    json j;
    j["command"] = command;
    j["provenance"] = {{"config_hash", config_hash}, {"code_version", code_version}, {"seed", seed}};
    json list = json::array();
    for (const auto& c : checks) {
        json e = {{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}};
        if (!c.note.empty())
            e["note"] = c.note;
        list.push_back(e);
    }
    j["checks"] = list;
    json t = json::object();
    for (const auto& [k, v] : timing)
        t[k] = v;
    j["timing_seconds"] = t;
    json m = json::object();
    for (const auto& [k, v] : metrics)
        m[k] = v;
    j["metrics"] = m;
    j["pass"] = all_pass();
    return j.dump(2) + "\n";
}

fs::path output_directory(const RunConfig& config, const std::optional<fs::path>& flag)
{
    if (flag && !flag->empty())
        return *flag;
    if (!config.outputs.directory.empty()) {
        const fs::path p = config.outputs.directory;
        return p.is_absolute() || config.base_directory.empty() ? p : config.base_directory / p;
    }
    if (const char* env = std::getenv("MVKS_OUT_DIR"); env && *env)
        return env;
    return "mvks_out";
}

const char* code_version() { return MVKS_VERSION; }

int cmd_check_kernel(const RunConfig& c, const CommandOptions& o, RunReport* out)
{
    RunReport r = start("check-kernel", c, o);
    PhaseTimer timer(r);
    const KernelSpec spec = make_kernel(c);
    const Grid1D grid = make_grid(c);
    const TimeMesh mesh = make_mesh(c);
    const double T = c.discretization.T;

    const HypothesisReport h =
        check_hypotheses(spec, T, grid, mesh, default_trial_densities(grid), c.picard.safety);
    timer.lap("hypotheses");
    for (const auto& item : h.items)
        r.check(item.name, item.value, item.bound, item.pass, item.note);

    r.metrics.emplace_back("D_of_T", h.D_of_T);
    r.metrics.emplace_back("f1_sup", h.f1_sup);
    r.metrics.emplace_back("f2_sup", h.f2_sup);
    r.metrics.emplace_back("T0_at_safety", h.T0 ? *h.T0 : kInf);

    CsvTable f1{{"t", "f1"}, {}};
    for (std::size_t j = 0; j < h.f1_profile.size(); ++j)
        f1.rows.push_back({h.f1_times[j], h.f1_profile[j]});
    emit(c, o.out_dir, "f1_profile", f1);

    const bool closed_form = spec.kind == KernelKind::keller_segel && spec.lambda == 0.0
                             && spec.normalization == Normalization::heat;
    if (closed_form && !h.f1_profile.empty()) {
        // f1 is the constant sqrt(2 pi) chi and D(T) = chi sqrt(8 T / pi).
        const double f1_exact = std::sqrt(2.0 * std::numbers::pi) * spec.chi;
        double f1_dev = 0.0;
        for (const double v : h.f1_profile)
            f1_dev = std::max(f1_dev, std::abs(v / f1_exact - 1.0));
        r.check("f1_constant", f1_dev, 1e-2, f1_dev <= 1e-2, "max |f1(t) / sqrt(2 pi) chi - 1|");

        const double T0_exact = std::numbers::pi / (8.0 * spec.chi * spec.chi);
        const double T0 = find_T0(spec, 1.0);
        const double rel = std::abs(T0 / T0_exact - 1.0);
        r.check("T0_closed_form", rel, 1e-2, rel <= 1e-2, "find_T0 at D = 1 vs pi / (8 chi^2)");
        r.metrics.emplace_back("T0_at_D1", T0);
    }

    if (spec.kind != KernelKind::custom) {
        CsvTable d{{"T", "D"}, {}};
        bool monotone = true;
        double prev = -kInf;
        for (int j = 1; j <= 100; ++j) {
            const double t = T * j / 100.0;
            const double D = horizon_D(spec, t);
            monotone = monotone && D >= prev;
            prev = D;
            d.rows.push_back({t, D});
        }
        emit(c, o.out_dir, "horizon_D", d);
        r.check("D_monotone", monotone ? 0.0 : 1.0, 0.0, monotone, "100-point probe on (0, T]");
    }
    timer.lap("horizon");
    return finish(r, c, o, out);
}

int cmd_solve(const RunConfig& c, const CommandOptions& o, RunReport* out)
{
    RunReport r = start("solve", c, o);
    PhaseTimer timer(r);
    const KernelSpec spec = make_kernel(c);
    const Grid1D grid = make_grid(c);
    const TimeMesh mesh = make_mesh(c);
    const DensityField p0 = make_p0(c, grid);
    const InitialChemical chem = make_c0(c, grid);
    const SolveOptions opts = solve_options(c, o);

    const SolveResult sol = solve_global(p0, spec, chem, grid, mesh, opts);
    const MarginalHistory& hist = sol.history;
    timer.lap("solve");
    const std::vector<ChemicalField> fields = chemical_history(hist, chem, spec.lambda);
    const std::vector<Field> memory = memory_drift_history(hist, spec);
    timer.lap("field");

    const Index M = mesh.steps();
    double mass_dev = 0.0;
    double identity = 0.0;
    double b_sup = 0.0;
    double dc_sup = 0.0;
    std::vector<double> peak_scaled;
    std::vector<double> l2_scaled;
    CsvTable diag{{"t", "mass", "sqrt_t_peak", "quarter_t_l2", "b_sup", "B_sup", "dc_sup",
                   "identity"},
                  {}};
    for (Index k = 0; k <= M; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const double t = mesh.t(k);
        const Field p = hist.row(k);
        const Field b = drift_b_field(spec, chem, t);
        const Field& B = memory[uk];
        const double gap = (spec.chi * fields[uk].gradient - (b + B)).abs().maxCoeff();
        const double l2 = std::pow(t, 0.25) * l2_norm(grid, p);
        mass_dev = std::max(mass_dev, std::abs(hist.mass_log[uk] - 1.0));
        identity = std::max(identity, gap);
        b_sup = std::max(b_sup, b.abs().maxCoeff());
        dc_sup = std::max(dc_sup, fields[uk].gradient.abs().maxCoeff());
        if (t >= 0.01 - 1e-12 && t <= 1.0 + 1e-12) {
            peak_scaled.push_back(hist.peak_scaled[uk]);
            l2_scaled.push_back(l2);
        }
        diag.rows.push_back({t, hist.mass_log[uk], hist.peak_scaled[uk], l2, b.abs().maxCoeff(),
                             B.abs().maxCoeff(), fields[uk].gradient.abs().maxCoeff(), gap});
    }

    r.check("mass_conservation", mass_dev, 1e-3, mass_dev <= 1e-3,
            "max |mass - 1| before renormalization");
    if (spec.kind == KernelKind::keller_segel && spec.normalization == Normalization::heat)
        r.check("structural_identity", identity, 1e-6, identity <= 1e-6,
                "sup |chi dc/dx - (b + B)| over mesh x grid");
    const double b_bound = spec.chi * chem.sup_derivative();
    r.check("drift_b_bounded", b_sup, b_bound, b_sup <= b_bound * (1.0 + 1e-9) + 1e-300,
            "sup |b| vs chi ||c0'||_inf");

    // KS residual under halving of (h, dt).
    const KsResidual res = ks_residual(hist, fields, spec.lambda);
    {
        const Grid1D fine_grid(grid.half_width(), 2 * grid.size());
        const TimeMesh fine_mesh(mesh.horizon(), 2 * M);
        const SolveResult fine = solve_global(make_p0(c, fine_grid), spec, make_c0(c, fine_grid),
                                              fine_grid, fine_mesh, opts);
        const KsResidual fine_res =
            ks_residual(fine.history, chemical_history(fine.history, make_c0(c, fine_grid), spec.lambda),
                        spec.lambda);
        const double ratio = fine_res.l2 > 0.0 ? res.l2 / fine_res.l2 : kInf;
        r.metrics.emplace_back("ks_residual", res.l2);
        r.metrics.emplace_back("ks_residual_refined", fine_res.l2);
        r.check("ks_residual_refinement", ratio, 1.5, ratio >= 1.5,
                "L2 residual ratio when h and dt are halved");
        timer.lap("refinement");
    }

    const double sqrt_t_C = *std::max_element(hist.peak_scaled.begin(), hist.peak_scaled.end());
    r.metrics.emplace_back("C_T_sqrt_t_peak", sqrt_t_C);
    r.metrics.emplace_back("C_T_dc", dc_sup - chem.sup_derivative());
    r.metrics.emplace_back("edge_density", std::max(hist.densities.col(0).maxCoeff(),
                                                    hist.densities.col(grid.size() - 1).maxCoeff()));
    r.metrics.emplace_back("T0", sol.T0);

    const ShapeSpec& p0s = c.initial.p0;
    if (p0s.name == "gaussian" && p0s.args[1] <= 0.01 + 1e-15 && mesh.horizon() >= 1.0) {
        const double s1 = spread(peak_scaled);
        const double s2 = spread(l2_scaled);
        r.check("sqrt_t_peak_scaling", s1, 2.0, s1 < 2.0, "max / min of sqrt(t) ||p_t||_inf, t in [0.01, 1]");
        r.check("quarter_t_l2_scaling", s2, 2.0, s2 < 2.0, "max / min of t^(1/4) ||p_t||_2, t in [0.01, 1]");
    }

    if (opts.mode == SolveMode::picard_with_restart) {
        CsvTable w{{"window", "first_step", "last_step", "iterations", "final_distance",
                    "converged", "restart_sup"},
                   {}};
        bool all = true;
        for (std::size_t j = 0; j < sol.windows.size(); ++j) {
            const auto& win = sol.windows[j];
            all = all && win.converged;
            w.rows.push_back({static_cast<double>(j), static_cast<double>(win.first_step),
                              static_cast<double>(win.last_step), static_cast<double>(win.iterations),
                              win.distances.empty() ? 0.0 : win.distances.back(),
                              win.converged ? 1.0 : 0.0, win.restart_sup});
        }
        emit(c, o.out_dir, "windows", w);
        r.check("windows_converged", all ? 0.0 : 1.0, 0.0, all,
                std::to_string(sol.windows.size()) + " Picard windows");
    }

    const Index stride = c.outputs.row_stride;
    emit(c, o.out_dir, "density", density_table(hist, stride), true);
    emit(c, o.out_dir, "field", field_table(grid, fields, stride), true);
    emit(c, o.out_dir, "diagnostics", diag);
    timer.lap("write");
    say(o, std::string("mode ") + mode_name(opts.mode) + ", " + std::to_string(M) + " steps");
    return finish(r, c, o, out);
}

int cmd_picard(const RunConfig& c, const CommandOptions& o, RunReport* out)
{
    RunReport r = start("picard", c, o);
    PhaseTimer timer(r);
    const KernelSpec spec = make_kernel(c);
    const Grid1D grid = make_grid(c);
    double T0 = find_T0(spec, c.picard.safety);
    if (!std::isfinite(T0))
        T0 = c.discretization.T;
    const TimeMesh mesh(T0, c.picard.M);
    const DensityField p0 = make_p0(c, grid);
    const InitialChemical chem = make_c0(c, grid);

    PicardOptions po;
    po.k_max = c.picard.k_max;
    po.tol = c.picard.tol;
    po.mass_tol = c.solve.mass_tol;
    po.keep_iterates = false;
    const PicardResult pr = picard(p0, spec, chem, grid, mesh, po);
    timer.lap("picard");
    const MarginalHistory reference = march(p0, spec, chem, grid, mesh, {c.solve.mass_tol});
    timer.lap("march");

    CsvTable dist{{"iterate", "distance", "ratio"}, {}};
    double last_ratio = 0.0;
    for (std::size_t j = 0; j < pr.distances.size(); ++j) {
        const double d = pr.distances[j];
        const double ratio = j > 0 && pr.distances[j - 1] > 0.0 ? d / pr.distances[j - 1] : 0.0;
        // Ratios below the roundoff floor are noise, not contraction.
        if (j > 0 && pr.distances[j - 1] > 1e-13)
            last_ratio = ratio;
        dist.rows.push_back({static_cast<double>(j + 2), d, ratio});
    }
    emit(c, o.out_dir, "picard_distances", dist);

    const double vs_march = compare_histories(pr.last(), reference).max_l1;
    r.metrics.emplace_back("T0", T0);
    r.metrics.emplace_back("D_of_T0", pr.D_of_T);
    r.metrics.emplace_back("iterations", static_cast<double>(pr.iterations));
    r.check("picard_converged", pr.distances.empty() ? 0.0 : pr.distances.back(), c.picard.tol,
            pr.converged && !pr.diverged, pr.note);
    r.check("picard_contraction_ratio", last_ratio, 0.6, last_ratio <= 0.6,
            "last distance ratio above the roundoff floor");
    r.check("picard_vs_march", vs_march, 1e-3, vs_march <= 1e-3, "max_k L1 distance");
    return finish(r, c, o, out);
}

int cmd_particles(const RunConfig& c, const CommandOptions& o, RunReport* out)
{
    RunReport r = start("particles", c, o);
    PhaseTimer timer(r);
    const KernelSpec spec = make_kernel(c);
    const Grid1D grid = make_grid(c);
    const TimeMesh mesh(c.discretization.T, c.particles.M);
    const DensityField p0 = make_p0(c, grid);
    const InitialChemical chem = make_c0(c, grid);
    const std::uint64_t seed = r.seed;

    const MarginalHistory mild = march(p0, spec, chem, grid, mesh, {c.solve.mass_tol});
    timer.lap("march");

    std::vector<Index> Ns = c.particles.N;
    std::sort(Ns.begin(), Ns.end());
    const Index M = mesh.steps();
    const Index probe_stride = std::max<Index>(1, M / 10);

    CsvTable table{{"N", "l1", "l2", "linf", "bandwidth"}, {}};
    std::vector<double> final_l1;
    ParticleOptions popts;
    popts.interaction = c.particles.interaction;
    for (const Index N : Ns) {
        const ParticleEnsemble e = simulate_particles(N, p0, spec, chem, grid, mesh, seed, popts);
        std::vector<DensityField> kde;
        std::vector<DensityField> ref;
        KdeDensity last;
        for (Index k = probe_stride; k <= M; k += probe_stride) {
            last = kde_density(e, k, grid, c.particles.bandwidth);
            kde.push_back(last.density);
            ref.push_back(mild.density(k));
        }
        if (M % probe_stride != 0) {
            last = kde_density(e, M, grid, c.particles.bandwidth);
            kde.push_back(last.density);
            ref.push_back(mild.density(M));
        }
        const ErrorTable err = compare_densities(grid, kde, ref);
        const std::string tag = "N" + std::to_string(N);
        emit(c, o.out_dir, "errors_" + tag, error_table(err));

        CsvTable dens{{"t", "x", "p_kde", "p_mild"}, {}};
        const Field pm = mild.row(M);
        for (Index i = 0; i < grid.size(); ++i)
            dens.rows.push_back({mesh.t(M), grid.x(i), last.density.values[i], pm[i]});
        emit(c, o.out_dir, "kde_" + tag, dens);

        table.rows.push_back({static_cast<double>(N), err.l1.back(), err.l2.back(),
                              err.linf.back(), last.bandwidth});
        final_l1.push_back(err.l1.back());
        r.timing.emplace_back("simulate_" + tag, e.stats.seconds);
        r.metrics.emplace_back("l1_at_T_" + tag, err.l1.back());
        timer.lap("kde_" + tag);
    }
    emit(c, o.out_dir, "error_vs_n", table);

    bool non_increasing = true;
    double worst = 0.0;
    for (std::size_t j = 1; j < final_l1.size(); ++j) {
        worst = std::max(worst, final_l1[j] - final_l1[j - 1]);
        non_increasing = non_increasing && final_l1[j] <= final_l1[j - 1];
    }
    r.check("l1_non_increasing_in_N", worst, 0.0, non_increasing,
            "largest increase of the L1 error at T between consecutive N");
    return finish(r, c, o, out);
}

int cmd_qz(const RunConfig& c, const CommandOptions& o, RunReport* out)
{
    RunReport r = start("qz", c, o);
    PhaseTimer timer(r);
    const auto& q = c.qz;
    const QZParams base{q.beta, q.y, q.x, q.t};
    base.validate();

    {
        double worst = 0.0;
        for (const double t : {0.1, 1.0, 5.0})
            for (double z = -6.0; z <= 6.0; z += 0.05) {
                const double v = qz_density({0.0, q.y, q.x, t}, z);
                worst = std::max(worst, std::abs(v - heat_kernel(t, z - q.x)));
            }
        r.check("qz_beta0_reduction", worst, 1e-12, worst <= 1e-12, "sup |q - g(t, z - x)|");
    }

    {
        double worst = 0.0;
        for (const double beta : {0.0, 0.25, 1.0, 4.0})
            for (const double t : {0.1, 1.0, 5.0}) {
                const QZParams p{beta, q.y, q.x, t};
                const auto f = [&p](double z) { return qz_density(p, z); };
                const double reach = 12.0 * std::sqrt(t) + 1.0;
                const double lo = std::min(q.x, q.y) - reach;
                const double hi = std::max(q.x, q.y) + reach;
                // The density has a kink at y; integrate the two sides separately.
                const double m = integrate_adaptive(f, lo, q.y, 1e-12, 1e-10).value
                                 + integrate_adaptive(f, q.y, hi, 1e-12, 1e-10).value;
                worst = std::max(worst, std::abs(m - 1.0));
            }
        r.check("qz_normalization", worst, 1e-6, worst <= 1e-6,
                "beta in {0, 0.25, 1, 4}, t in {0.1, 1, 5}");
    }

    {
        double worst = 0.0;
        for (const double beta : {0.0, 0.25, 1.0, 4.0})
            for (const double t : {0.1, 1.0, 5.0})
                for (const double dx : {-1.0, 0.5, 2.0}) {
                    const QZParams p{beta, q.y, q.y + dx, t};
                    worst = std::max(worst, std::abs(qz_density(p, q.y) - qz_density_at_y(p)));
                }
        r.check("qz_at_y_consistency", worst, 1e-8, worst <= 1e-8, "parameter lattice");
    }
    timer.lap("oracles");

    const Index steps = std::max<Index>(1, static_cast<Index>(std::llround(q.t / q.dt)));
    const TimeMesh mesh(q.t, steps);
    const double w = q.bin_width;
    const double spread_t = 4.0 * std::sqrt(q.t);
    Bins bins;
    bins.lo = std::floor((std::min(q.x, q.y) - spread_t) / w) * w;
    bins.hi = std::ceil((std::max(q.x, q.y) + spread_t) / w) * w;
    bins.count = static_cast<Index>(std::llround((bins.hi - bins.lo) / w));

    {
        const double y = q.y;
        const double beta = q.beta;
        const ParticleEnsemble e = simulate_bounded_drift(
            [beta, y](double, double x) { return beta * ((y > x) - (y < x)); }, beta,
            [&q](double) { return q.x; }, mesh, q.N, r.seed, steps);
        const Histogram h = histogram(e.at_step(steps), bins);
        CsvTable t{{"center", "mc_density", "std_error", "qz_density"}, {}};
        double worst = 0.0;
        for (Index b = 0; b < bins.count; ++b) {
            const double lo = bins.lo + static_cast<double>(b) * w;
            const auto f = [&base](double z) { return qz_density(base, z); };
            double avg = 0.0;
            if (lo < y && y < lo + w)
                avg = integrate_adaptive(f, lo, y).value + integrate_adaptive(f, y, lo + w).value;
            else
                avg = integrate_adaptive(f, lo, lo + w).value;
            avg /= w;
            const auto ub = static_cast<std::size_t>(b);
            worst = std::max(worst, std::abs(h.density[ub] - avg));
            t.rows.push_back({bins.center(b), h.density[ub], h.std_error[ub], avg});
        }
        emit(c, o.out_dir, "qz_histogram", t);
        r.check("qz_monte_carlo", worst, 2e-2, worst <= 2e-2, "binned sup error, sgn drift");
        timer.lap("monte_carlo");
    }

    const Index stride = std::max<Index>(1, steps / 20);
    std::vector<Index> probe;
    for (Index k = stride; k <= steps; k += stride)
        probe.push_back(k);
    if (probe.empty() || probe.back() != steps)
        probe.push_back(steps);

    {
        const double beta = q.beta;
        const ParticleEnsemble e = simulate_bounded_drift(
            [beta](double, double x) { return beta * std::sin(x); }, beta,
            [&q](double) { return q.x; }, mesh, q.N, r.seed + 1, stride);
        const BoundReport rep = verify_bound(e, bins, probe, q.x);
        CsvTable t{{"t", "center", "density", "std_error", "bound"}, {}};
        for (const auto& b : rep.bins)
            t.rows.push_back({b.t, b.center, b.density, b.std_error, b.bound});
        emit(c, o.out_dir, "qz_bound_sin", t, true);
        r.metrics.emplace_back("bound_max_excess_se", rep.max_excess());
        r.check("qz_bound_violations", static_cast<double>(rep.violations), 0.0, rep.violations == 0,
                "b = beta sin(x); bins above bound + 3 se");
        timer.lap("bound");
    }

    {
        const double beta = q.corollary_beta;
        const ParticleEnsemble e = simulate_bounded_drift(
            [beta](double, double x) { return beta * ((x < 0.0) - (x > 0.0)); }, beta,
            [](double u) { return u - 0.5; }, mesh, q.N, r.seed + 2, stride);
        Bins near{-2.0 - spread_t, 2.0 + spread_t, 0};
        near.lo = std::floor(near.lo / w) * w;
        near.hi = std::ceil(near.hi / w) * w;
        near.count = static_cast<Index>(std::llround((near.hi - near.lo) / w));
        const double bound = sup_density_bound(1.0, beta);
        CsvTable t{{"t", "sup_density", "std_error", "bound"}, {}};
        double sup = 0.0;
        bool ok = true;
        for (const Index k : probe) {
            const Histogram h = histogram(e.at_step(k), near);
            const auto it = std::max_element(h.density.begin(), h.density.end());
            const double se = h.std_error[static_cast<std::size_t>(it - h.density.begin())];
            ok = ok && *it <= bound + 3.0 * se;
            sup = std::max(sup, *it);
            t.rows.push_back({mesh.t(k), *it, se, bound});
        }
        emit(c, o.out_dir, "qz_corollary", t);
        r.check("qz_uniform_start_sup", sup, bound, ok,
                "max sup density vs 2 ||p0||_inf + beta (3 s.e. allowed), uniform p0 on [-1/2, 1/2]");
        timer.lap("corollary");
    }
    return finish(r, c, o, out);
}

} // namespace mvks
