#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include "mvks/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path source_dir = MVKS_SOURCE_DIR;

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("mvks_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args)
{
    const std::string cmd = std::string(MVKS_EXE) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text)
{
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

std::string bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

double max_difference(const mvks::CsvTable& a, const mvks::CsvTable& b)
{
    REQUIRE(a.header == b.header);
    REQUIRE(a.rows.size() == b.rows.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.rows.size(); ++i)
        for (std::size_t j = 0; j < a.rows[i].size(); ++j)
            d = std::max(d, std::abs(a.rows[i][j] - b.rows[i][j]));
    return d;
}

} // namespace

TEST_CASE("exit codes")
{
    const fs::path dir = scratch("exit");
    CHECK(run("--out " + (dir / "ck").string() + " check-kernel") == 0);
    CHECK(fs::exists(dir / "ck" / "report.json"));
    CHECK(run("--help") == 0);
    CHECK(run("--no-such-flag check-kernel") == 2);
    CHECK(run("") == 2);
    CHECK(run("--config " + (dir / "missing.cfg").string() + " solve") == 2);
    CHECK(run("--config " + write_config(dir, "chi0.cfg", "model.chi = 0\n").string() + " solve") == 2);
    CHECK(run("--config " + write_config(dir, "n1.cfg", "particles.N = 1\n").string() + " particles") == 2);
    const auto sp = write_config(dir, "sp.cfg", "model.kernel = custom:sign_power\n");
    CHECK(run("--config " + sp.string() + " --out " + (dir / "sp").string() + " check-kernel") == 1);
}

TEST_CASE("particle output is reproducible across repeats and thread counts")
{
    const fs::path dir = scratch("seed");
    const auto cfg = write_config(dir, "p.cfg",
                                  "discretization.L = 12\ndiscretization.n = 256\ndiscretization.T = 0.3\n"
                                  "particles.M = 30\nparticles.N = 300, 600\noutputs.formats = csv\n");
    const auto go = [&](const std::string& out, const std::string& extra) {
        return run("--config " + cfg.string() + " --out " + (dir / out).string() + " " + extra + " particles");
    };
    REQUIRE(go("a", "--seed 5 --threads 1") <= 1);
    REQUIRE(go("b", "--seed 5 --threads 3") <= 1);
    REQUIRE(go("c", "--seed 6 --threads 1") <= 1);
    for (const char* f : {"kde_N300.csv", "errors_N600.csv", "error_vs_n.csv"}) {
        CHECK(bytes(dir / "a" / f) == bytes(dir / "b" / f));
        CHECK_FALSE(bytes(dir / "a" / f).empty());
    }
    CHECK(bytes(dir / "a" / "kde_N300.csv") != bytes(dir / "c" / "kde_N300.csv"));
}

TEST_CASE("solve output matches the stored reference runs")
{
    const fs::path dir = scratch("golden");
    for (const char* name : {"heat", "ou", "full"}) {
        CAPTURE(name);
        const fs::path cfg = source_dir / "configs" / (std::string(name) + ".cfg");
        REQUIRE(run("--config " + cfg.string() + " --out " + (dir / name).string() + " solve") == 0);
        for (const char* f : {"density.csv", "field.csv", "diagnostics.csv"}) {
            CAPTURE(f);
            const auto got = mvks::read_csv(dir / name / f);
            const auto want = mvks::read_csv(source_dir / "tests" / "golden" / name / f);
            CHECK(max_difference(got, want) < 1e-9);
        }
    }
}
