#include "mvks/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mvks/io.hpp"

namespace mvks {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string join(const std::vector<std::string>& parts, const std::string& sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i)
        out += (i ? sep : "") + parts[i];
    return out;
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(s);
    while (std::getline(in, cell, ','))
        if (!trim(cell).empty())
            out.push_back(trim(cell));
    return out;
}

bool to_double(const std::string& s, double& out)
{
    try {
        std::size_t used = 0;
        out = std::stod(s, &used);
        return used == s.size() && std::isfinite(out);
    } catch (const std::exception&) {
        return false;
    }
}

bool to_index(const std::string& s, Index& out)
{
    double d = 0.0;
    if (!to_double(s, d) || d != std::floor(d) || std::abs(d) > 1e15)
        return false;
    out = static_cast<Index>(d);
    return true;
}

struct Parser {
    RunConfig& cfg;
    std::vector<std::string>& problems;
    std::string key;

    void bad(const std::string& what) { problems.push_back(key + ": " + what); }

    void number(const std::string& v, double& out)
    {
        if (!to_double(v, out))
            bad("expected a number, got '" + v + "'");
    }
    void integer(const std::string& v, Index& out)
    {
        if (!to_index(v, out))
            bad("expected an integer, got '" + v + "'");
    }
    void shape(const std::string& v, ShapeSpec& out)
    {
        const auto open = v.find('(');
        out = ShapeSpec{};
        if (open == std::string::npos) {
            out.name = trim(v);
            return;
        }
        if (v.back() != ')') {
            bad("unbalanced parentheses in '" + v + "'");
            return;
        }
        out.name = trim(v.substr(0, open));
        const std::string inner = v.substr(open + 1, v.size() - open - 2);
        if (out.name == "samples") {
            out.path = trim(inner);
            return;
        }
        for (const auto& a : split_list(inner)) {
            double d = 0.0;
            if (!to_double(a, d)) {
                bad("argument '" + a + "' is not a number");
                return;
            }
            out.args.push_back(d);
        }
    }
};

using Handler = std::function<void(Parser&, const std::string&)>;

const std::map<std::string, Handler>& handlers()
{
    static const std::map<std::string, Handler> table = {
        {"model.chi", [](Parser& p, const std::string& v) { p.number(v, p.cfg.model.chi); }},
        {"model.lambda", [](Parser& p, const std::string& v) { p.number(v, p.cfg.model.lambda); }},
        {"model.normalization",
         [](Parser& p, const std::string& v) {
             if (v == "heat")
                 p.cfg.model.normalization = Normalization::heat;
             else if (v == "paper_literal")
                 p.cfg.model.normalization = Normalization::paper_literal;
             else
                 p.bad("expected heat or paper_literal");
         }},
        {"model.kernel",
         [](Parser& p, const std::string& v) {
             if (v != "keller_segel" && v != "none" && v != "custom:sign_power")
                 p.bad("expected keller_segel, none or custom:sign_power");
             p.cfg.model.kernel = v;
         }},
        {"initial.p0", [](Parser& p, const std::string& v) { p.shape(v, p.cfg.initial.p0); }},
        {"initial.c0", [](Parser& p, const std::string& v) { p.shape(v, p.cfg.initial.c0); }},
        {"discretization.l",
         [](Parser& p, const std::string& v) { p.number(v, p.cfg.discretization.L); }},
        {"discretization.n",
         [](Parser& p, const std::string& v) { p.integer(v, p.cfg.discretization.n); }},
        {"discretization.t",
         [](Parser& p, const std::string& v) { p.number(v, p.cfg.discretization.T); }},
        {"discretization.m",
         [](Parser& p, const std::string& v) { p.integer(v, p.cfg.discretization.M); }},
        {"particles.n",
         [](Parser& p, const std::string& v) {
             p.cfg.particles.N.clear();
             for (const auto& item : split_list(v)) {
                 Index n = 0;
                 p.integer(item, n);
                 p.cfg.particles.N.push_back(n);
             }
             if (p.cfg.particles.N.empty())
                 p.bad("expected one or more particle counts");
         }},
        {"particles.seed",
         [](Parser& p, const std::string& v) {
             try {
                 std::size_t used = 0;
                 p.cfg.particles.seed = std::stoull(v, &used);
                 if (used != v.size())
                     p.bad("expected an unsigned integer");
             } catch (const std::exception&) {
                 p.bad("expected an unsigned integer");
             }
         }},
        {"particles.bandwidth",
         [](Parser& p, const std::string& v) { p.number(v, p.cfg.particles.bandwidth); }},
        {"particles.interaction",
         [](Parser& p, const std::string& v) {
             if (v == "mesh")
                 p.cfg.particles.interaction = InteractionMode::mesh;
             else if (v == "direct")
                 p.cfg.particles.interaction = InteractionMode::direct;
             else
                 p.bad("expected mesh or direct");
         }},
        {"particles.m", [](Parser& p, const std::string& v) { p.integer(v, p.cfg.particles.M); }},
        {"picard.safety", [](Parser& p, const std::string& v) { p.number(v, p.cfg.picard.safety); }},
        {"picard.k_max", [](Parser& p, const std::string& v) { p.integer(v, p.cfg.picard.k_max); }},
        {"picard.tol", [](Parser& p, const std::string& v) { p.number(v, p.cfg.picard.tol); }},
        {"picard.m", [](Parser& p, const std::string& v) { p.integer(v, p.cfg.picard.M); }},
        {"solve.mode",
         [](Parser& p, const std::string& v) {
             if (v == "march")
                 p.cfg.solve.mode = SolveMode::march;
             else if (v == "picard_with_restart")
                 p.cfg.solve.mode = SolveMode::picard_with_restart;
             else
                 p.bad("expected march or picard_with_restart");
         }},
        {"solve.mass_tol", [](Parser& p, const std::string& v) { p.number(v, p.cfg.solve.mass_tol); }},
        {"qz.beta", [](Parser& p, const std::string& v) { p.number(v, p.cfg.qz.beta); }},
        {"qz.y", [](Parser& p, const std::string& v) { p.number(v, p.cfg.qz.y); }},
        {"qz.x", [](Parser& p, const std::string& v) { p.number(v, p.cfg.qz.x); }},
        {"qz.t", [](Parser& p, const std::string& v) { p.number(v, p.cfg.qz.t); }},
        {"qz.n", [](Parser& p, const std::string& v) { p.integer(v, p.cfg.qz.N); }},
        {"qz.dt", [](Parser& p, const std::string& v) { p.number(v, p.cfg.qz.dt); }},
        {"qz.bin_width", [](Parser& p, const std::string& v) { p.number(v, p.cfg.qz.bin_width); }},
        {"qz.corollary_beta",
         [](Parser& p, const std::string& v) { p.number(v, p.cfg.qz.corollary_beta); }},
        {"outputs.directory", [](Parser& p, const std::string& v) { p.cfg.outputs.directory = v; }},
        {"outputs.formats",
         [](Parser& p, const std::string& v) {
             p.cfg.outputs.formats = split_list(v);
             for (const auto& f : p.cfg.outputs.formats)
                 if (f != "csv" && f != "dat" && f != "json")
                     p.bad("unknown format '" + f + "' (csv, dat, json)");
         }},
        {"outputs.row_stride",
         [](Parser& p, const std::string& v) { p.integer(v, p.cfg.outputs.row_stride); }},
    };
    return table;
}

void check_shape(const ShapeSpec& s, const std::string& key, bool density,
                 const std::filesystem::path& base, std::vector<std::string>& problems)
{
    auto need = [&](std::size_t lo, std::size_t hi) {
        if (s.args.size() < lo || s.args.size() > hi)
            problems.push_back(key + ": " + s.name + " takes " + std::to_string(lo)
                               + (lo == hi ? "" : "-" + std::to_string(hi)) + " arguments");
        return s.args.size() >= lo && s.args.size() <= hi;
    };
    if (s.name == "samples") {
        const auto path = s.path.is_absolute() ? s.path : base / s.path;
        if (s.path.empty() || !std::filesystem::exists(path))
            problems.push_back(key + ": samples file '" + s.path.string() + "' not found");
        return;
    }
    if (density) {
        if (s.name == "gaussian") {
            if (need(2, 2) && !(s.args[1] > 0.0))
                problems.push_back(key + ": gaussian variance must be positive");
        } else if (s.name == "uniform") {
            if (need(2, 2) && !(s.args[0] < s.args[1]))
                problems.push_back(key + ": uniform needs a < b");
        } else {
            problems.push_back(key + ": expected gaussian(mean, var), uniform(a, b) or samples(path)");
        }
        return;
    }
    if (s.name == "sine") {
        need(0, 2);
    } else if (s.name == "gaussian_bump") {
        if (need(2, 2) && !(s.args[1] > 0.0))
            problems.push_back(key + ": gaussian_bump width must be positive");
    } else if (s.name == "quadratic" || s.name == "constant") {
        need(1, 1);
    } else {
        problems.push_back(key + ": expected sine, gaussian_bump(a, w), quadratic(a), constant(v) "
                                 "or samples(path)");
    }
}

void validate(const RunConfig& c, std::vector<std::string>& problems)
{
    auto require = [&](bool ok, const std::string& what) {
        if (!ok)
            problems.push_back(what);
    };
    require(c.model.chi > 0.0, "model.chi: must be positive");
    require(c.model.lambda >= 0.0, "model.lambda: must be non-negative");
    require(c.discretization.L > 0.0, "discretization.L: must be positive");
    require(c.discretization.n >= 16 && c.discretization.n % 2 == 0,
            "discretization.n: must be even and at least 16");
    require(c.discretization.T > 0.0, "discretization.T: must be positive");
    require(c.discretization.M >= 1, "discretization.M: must be at least 1");
    for (const Index n : c.particles.N)
        require(n >= 2, "particles.N: every count must be at least 2");
    require(c.particles.bandwidth >= 0.0, "particles.bandwidth: must be non-negative");
    require(c.particles.M >= 1, "particles.M: must be at least 1");
    require(c.picard.safety > 0.0 && c.picard.safety < 1.0, "picard.safety: must lie in (0, 1)");
    require(c.picard.k_max >= 1, "picard.k_max: must be at least 1");
    require(c.picard.tol > 0.0, "picard.tol: must be positive");
    require(c.picard.M >= 1, "picard.M: must be at least 1");
    require(c.solve.mass_tol > 0.0, "solve.mass_tol: must be positive");
    require(c.qz.beta >= 0.0, "qz.beta: must be non-negative");
    require(c.qz.t > 0.0, "qz.t: must be positive");
    require(c.qz.N >= 1, "qz.N: must be at least 1");
    require(c.qz.dt > 0.0 && c.qz.dt <= c.qz.t, "qz.dt: must lie in (0, qz.t]");
    require(c.qz.bin_width > 0.0, "qz.bin_width: must be positive");
    require(c.qz.corollary_beta >= 0.0, "qz.corollary_beta: must be non-negative");
    require(c.outputs.row_stride >= 1, "outputs.row_stride: must be at least 1");
    check_shape(c.initial.p0, "initial.p0", true, c.base_directory, problems);
    check_shape(c.initial.c0, "initial.c0", false, c.base_directory, problems);
}

std::filesystem::path resolve(const RunConfig& c, const std::filesystem::path& p)
{
    return p.is_absolute() ? p : c.base_directory / p;
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : UsageError("configuration error:\n  " + join(problems, "\n  ")), problems_(std::move(problems))
{
}

std::string ShapeSpec::text() const
{
    if (name == "samples")
        return "samples(" + path.string() + ")";
    if (args.empty())
        return name;
    std::vector<std::string> parts;
    for (const double a : args)
        parts.push_back(format_double(a));
    return name + "(" + join(parts, ", ") + ")";
}

bool RunConfig::wants(const std::string& format) const
{
    return std::find(outputs.formats.begin(), outputs.formats.end(), format)
           != outputs.formats.end();
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_directory)
{
    RunConfig cfg;
    cfg.source = text;
    cfg.base_directory = base_directory;
    std::vector<std::string> problems;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::map<std::string, std::size_t> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        std::string key = trim(line.substr(0, eq));
        std::transform(key.begin(), key.end(), key.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        const std::string value = trim(line.substr(eq + 1));
        const auto h = handlers().find(key);
        if (h == handlers().end()) {
            problems.push_back("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
            continue;
        }
        if (seen.count(key))
            problems.push_back("line " + std::to_string(lineno) + ": '" + key
                               + "' already set on line " + std::to_string(seen[key]));
        seen[key] = lineno;
        Parser p{cfg, problems, key};
        h->second(p, value);
    }
    validate(cfg, problems);
    if (!problems.empty())
        throw ConfigError(std::move(problems));
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError({"cannot read config file " + path.string()});
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

std::string config_hash(const RunConfig& config)
{
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char ch : config.source) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Grid1D make_grid(const RunConfig& c) { return Grid1D(c.discretization.L, c.discretization.n); }

TimeMesh make_mesh(const RunConfig& c) { return TimeMesh(c.discretization.T, c.discretization.M); }

KernelSpec sign_power_kernel()
{
    return KernelSpec::custom_kernel("custom:sign_power", [](double t, double x) {
        return ((x > 0.0) - (x < 0.0)) / (t * std::sqrt(t));
    });
}

KernelSpec make_kernel(const RunConfig& c)
{
    KernelSpec spec;
    if (c.model.kernel == "none")
        spec = KernelSpec::off();
    else if (c.model.kernel == "custom:sign_power")
        spec = sign_power_kernel();
    else
        return KernelSpec::keller_segel(c.model.chi, c.model.lambda, c.model.normalization);
    // chi and lambda still scale the exogenous drift b.
    spec.chi = c.model.chi;
    spec.lambda = c.model.lambda;
    spec.normalization = c.model.normalization;
    return spec;
}

DensityField make_p0(const RunConfig& c, const Grid1D& grid)
{
    const ShapeSpec& s = c.initial.p0;
    Field p;
    if (s.name == "gaussian") {
        const double m = s.args[0];
        const double v = s.args[1];
        p = grid.sample([&](double x) { return heat_kernel(v, x - m); });
    } else if (s.name == "uniform") {
        // Exact cell overlap, so the quadrature mass is 1 for any grid.
        const double a = s.args[0];
        const double b = s.args[1];
        const double h = grid.spacing();
        p = grid.sample([&](double x) {
            const double overlap = std::max(0.0, std::min(b, x + 0.5 * h) - std::max(a, x - 0.5 * h));
            return overlap / (h * (b - a));
        });
    } else {
        p = resample(grid, read_samples(resolve(c, s.path)));
        if ((p < 0.0).any())
            throw DomainError("initial.p0: samples must be non-negative");
    }
    normalize(grid, p);
    return {p, 0.0};
}

InitialChemical make_c0(const RunConfig& c, const Grid1D& grid)
{
    const ShapeSpec& s = c.initial.c0;
    if (s.name == "sine")
        return InitialChemical::sine(grid, s.args.size() > 0 ? s.args[0] : 1.0,
                                     s.args.size() > 1 ? s.args[1] : 1.0);
    if (s.name == "gaussian_bump")
        return InitialChemical::gaussian_bump(grid, s.args[0], s.args[1]);
    if (s.name == "quadratic")
        return InitialChemical::quadratic(grid, s.args[0]);
    if (s.name == "constant")
        return InitialChemical::constant(grid, s.args[0]);
    return InitialChemical::from_samples(grid, resample(grid, read_samples(resolve(c, s.path))));
}

} // namespace mvks
