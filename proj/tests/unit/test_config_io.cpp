#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "mvks/commands.hpp"
#include "mvks/config.hpp"
#include "mvks/io.hpp"

using namespace mvks;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("mvks_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::string> problems_of(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.problems();
    }
    return {};
}

} // namespace

TEST_CASE("defaults parse and comments are ignored")
{
    const RunConfig c = parse_config("# nothing but a comment\n\n  model.chi = 2   # trailing\n");
    CHECK(c.model.chi == 2.0);
    CHECK(c.model.lambda == 0.0);
    CHECK(c.discretization.n == 1024);
    CHECK(c.particles.N == std::vector<Index>{1000, 10000});
    CHECK(c.initial.p0.text() == "gaussian(0, 1)");
    CHECK(c.wants("json"));
    CHECK(parse_config("Model.CHI = 3").model.chi == 3.0);
}

TEST_CASE("every problem is reported at once")
{
    const auto p = problems_of("model.chi = 0\n"
                               "model.colour = red\n"
                               "discretization.n = 1000.5\n"
                               "discretization.T = 1\n"
                               "discretization.T = 2\n"
                               "initial.p0 = gaussian(0, -1)\n"
                               "not a pair\n");
    REQUIRE(p.size() == 6);
    const auto has = [&](const std::string& s) {
        return std::any_of(p.begin(), p.end(), [&](const std::string& q) { return q.find(s) != std::string::npos; });
    };
    CHECK(has("unknown key 'model.colour'"));
    CHECK(has("already set on line 4"));
    CHECK(has("discretization.n: expected an integer"));
    CHECK(has("line 7: expected key = value"));
    CHECK(has("model.chi: must be positive"));
    CHECK(has("variance must be positive"));
}

TEST_CASE("preconditions on particle counts, grid and kernel names")
{
    CHECK_FALSE(problems_of("particles.N = 1").empty());
    CHECK_FALSE(problems_of("particles.N = 1000, 1").empty());
    CHECK(problems_of("particles.N = 2, 50").empty());
    CHECK_FALSE(problems_of("discretization.n = 1023").empty());
    CHECK_FALSE(problems_of("model.kernel = yukawa").empty());
    CHECK_FALSE(problems_of("initial.c0 = sine(1, 2, 3)").empty());
    CHECK_FALSE(problems_of("initial.p0 = samples(/nonexistent/file.csv)").empty());
    CHECK_FALSE(problems_of("outputs.formats = csv, xml").empty());
    CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), ConfigError);
    CHECK_THROWS_AS(parse_config("model.chi = 0"), UsageError);
}

TEST_CASE("kernel selection keeps chi and lambda for the exogenous drift")
{
    const auto none = make_kernel(parse_config("model.kernel = none\nmodel.chi = 1.5\nmodel.lambda = 0.2"));
    CHECK(none.kind == KernelKind::none);
    CHECK(none.chi == 1.5);
    CHECK(none.lambda == 0.2);
    CHECK(make_kernel(parse_config("model.kernel = custom:sign_power")).kind == KernelKind::custom);
    CHECK(make_kernel(parse_config("")).kind == KernelKind::keller_segel);
}

TEST_CASE("CSV round-trips doubles exactly")
{
    const fs::path dir = scratch("csv");
    CsvTable t{{"a", "b"}, {{0.1, -1e-300}, {1.0 / 3.0, 6.02214076e23}, {std::nextafter(1.0, 2.0), 0.0}}};
    write_csv(dir / "t.csv", t);
    const CsvTable r = read_csv(dir / "t.csv");
    CHECK(r.header == t.header);
    CHECK(r.rows == t.rows);
    CHECK(r.column("b") == 1);
    CHECK_THROWS_AS(r.column("c"), UsageError);
    CHECK(std::stod(format_double(0.1)) == 0.1);
}

TEST_CASE("density tables are long form with strided rows and the last row")
{
    const Grid1D g(2.0, 16);
    const TimeMesh mesh(1.0, 5);
    const auto h = frozen_history(g, mesh, Field::Constant(16, 0.25));
    const CsvTable all = density_table(h);
    CHECK(all.header == std::vector<std::string>{"t", "x", "p"});
    CHECK(all.rows.size() == 6 * 16);
    CHECK(all.rows[16][0] == mesh.t(1));
    CHECK(all.rows[17][1] == g.x(1));
    const CsvTable strided = density_table(h, 2);
    CHECK(strided.rows.size() == 4 * 16); // steps 0, 2, 4, 5
    CHECK(strided.rows.back()[0] == 1.0);

    const fs::path dir = scratch("dat");
    write_gnuplot(dir / "d.dat", strided, true);
    std::ifstream in(dir / "d.dat");
    std::string line;
    std::getline(in, line);
    CHECK(line.front() == '#');
    int blanks = 0;
    while (std::getline(in, line))
        blanks += line.empty();
    CHECK(blanks == 3);
}

TEST_CASE("samples files are read and resampled onto the grid")
{
    const fs::path dir = scratch("samples");
    {
        std::ofstream out(dir / "p0.csv");
        out << "x,value\n-1,0\n0,1\n1,0\n";
    }
    const auto s = read_samples(dir / "p0.csv");
    REQUIRE(s.size() == 3);
    const Grid1D g(2.0, 16);
    const Field f = resample(g, s);
    CHECK(f[g.origin_index()] == 1.0);
    CHECK(f[g.origin_index() + 2] == doctest::Approx(0.5));
    CHECK(f[0] == 0.0);

    std::ofstream(dir / "run.cfg") << "initial.p0 = samples(p0.csv)\ndiscretization.L = 2\ndiscretization.n = 16\n";
    const RunConfig c = load_config(dir / "run.cfg");
    const DensityField p0 = make_p0(c, make_grid(c));
    CHECK(mass(make_grid(c), p0.values) == doctest::Approx(1.0));
}

TEST_CASE("config hash is stable and sensitive to the text")
{
    CHECK(config_hash(parse_config("model.chi = 1")) == config_hash(parse_config("model.chi = 1")));
    CHECK(config_hash(parse_config("model.chi = 1")) != config_hash(parse_config("model.chi = 2")));
    CHECK(config_hash(parse_config("")) == "cbf29ce484222325");
}

TEST_CASE("output directory precedence: flag, config, environment, default")
{
    const RunConfig with_dir = parse_config("outputs.directory = results", "/base");
    const RunConfig plain = parse_config("");
    ::unsetenv("MVKS_OUT_DIR");
    CHECK(output_directory(plain, std::nullopt) == fs::path("mvks_out"));
    ::setenv("MVKS_OUT_DIR", "/env/out", 1);
    CHECK(output_directory(plain, std::nullopt) == fs::path("/env/out"));
    CHECK(output_directory(with_dir, std::nullopt) == fs::path("/base/results"));
    CHECK(output_directory(with_dir, fs::path("flagged")) == fs::path("flagged"));
    ::unsetenv("MVKS_OUT_DIR");
}
