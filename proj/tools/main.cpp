#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "mvks/commands.hpp"

namespace {

using namespace mvks;

struct Flags {
    std::string config;
    std::string out;
    int threads = 0;
    std::optional<std::uint64_t> seed;
    std::string mode;
};

int run(const std::string& command, const Flags& f)
{
    const RunConfig config = f.config.empty() ? parse_config("") : load_config(f.config);
    CommandOptions opts;
    opts.out_dir = output_directory(
        config, f.out.empty() ? std::nullopt : std::optional<std::filesystem::path>(f.out));
    opts.seed = f.seed;
    opts.log = &std::cout;
    if (f.mode == "march")
        opts.mode = SolveMode::march;
    else if (f.mode == "picard_with_restart")
        opts.mode = SolveMode::picard_with_restart;

    int code = 1;
    if (command == "check-kernel")
        code = cmd_check_kernel(config, opts);
    else if (command == "solve")
        code = cmd_solve(config, opts);
    else if (command == "particles")
        code = cmd_particles(config, opts);
    else if (command == "qz")
        code = cmd_qz(config, opts);
    else if (command == "picard")
        code = cmd_picard(config, opts);
    std::cout << (code == 0 ? "all checks passed" : "some checks failed") << "; outputs in "
              << opts.out_dir.string() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Keller-Segel McKean-Vlasov solver and verification suite", "mvks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(code_version()));

    Flags f;
    app.add_option("--config", f.config, "configuration file (key = value)")
        ->check(CLI::ExistingFile);
    app.add_option("--out", f.out, "output directory (overrides config and MVKS_OUT_DIR)");
    app.add_option("--threads", f.threads, "worker thread cap")->check(CLI::PositiveNumber);
    app.add_option("--seed", f.seed, "RNG seed (overrides particles.seed)");

    std::string chosen;
    for (const char* name : {"check-kernel", "solve", "particles", "qz", "picard"}) {
        auto* sub = app.add_subcommand(name);
        sub->fallthrough();
        sub->callback([&chosen, name] { chosen = name; });
        if (std::string(name) == "solve")
            sub->add_option("--mode", f.mode, "march or picard_with_restart")
                ->check(CLI::IsMember({"march", "picard_with_restart"}));
    }
    app.get_subcommand("check-kernel")->description("verify the kernel hypotheses and horizon");
    app.get_subcommand("solve")->description("solve for the time marginals and chemical field");
    app.get_subcommand("particles")->description("interacting particles against the mild solution");
    app.get_subcommand("qz")->description("sgn-drift densities and the universal bound");
    app.get_subcommand("picard")->description("Picard iteration on the contraction horizon");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    if (f.threads > 0)
        omp_set_num_threads(f.threads);

    try {
        return run(chosen, f);
    } catch (const UsageError& e) { // includes ConfigError
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InstabilityError& e) {
        std::cerr << "instability at step " << e.step() << ": " << e.what() << "\n";
        return 1;
    } catch (const NoHorizonError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
