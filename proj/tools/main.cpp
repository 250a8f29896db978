#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdadc/harness.hpp"

namespace {

int run_command(tdadc::Command cmd, const std::string& spec_path, bool seed_set,
                std::uint64_t seed, const std::string& out_path) {
    tdadc::ExperimentSpec spec = tdadc::load_spec(spec_path, cmd);
    if (seed_set) spec.seed = seed;
    if (!out_path.empty()) spec.output_path = out_path;
    const tdadc::RunResult result = tdadc::run(spec);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& line : result.summary) std::cout << line << "\n";
    for (const auto& a : result.artifacts) std::cout << "wrote " << a << "\n";
    return result.status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual-edge time-domain ADC simulator"};
    app.require_subcommand(1);

    std::string spec_path;
    std::string out_path;
    std::uint64_t seed = 0;
    bool seed_set = false;

    const std::pair<const char*, const char*> commands[] = {
        {"simulate", "convert a stimulus and report codes plus metrics"},
        {"vtc-curve", "trace the voltage-to-time transfer curve"},
        {"ddu-sweep", "sweep digital delay codes and report effective stage delays"},
        {"sweep-dt", "Monte Carlo SNDR/SFDR versus stage-delay deviation"},
        {"calibrate", "run foreground delay-code calibration"},
        {"power-compare", "compare single-edge and dual-edge toggle counts"},
        {"feasibility", "check the sampling-period timing budget"},
    };
    for (const auto& [name, desc] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--spec", spec_path, "experiment spec file (INI)")->required();
        sub->add_option("--seed", seed, "override [experiment] seed")
            ->each([&seed_set](const std::string&) { seed_set = true; });
        sub->add_option("--out", out_path, "override [experiment] output_path");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        return run_command(tdadc::command_from_name(name), spec_path, seed_set, seed,
                           out_path);
    } catch (const tdadc::Error& e) {
        nlohmann::json rec;
        rec["error"] = {{"exit_code", tdadc::exit_code(e.kind())},
                        {"kind", tdadc::to_string(e.kind())},
                        {"message", e.what()}};
        std::cerr << rec.dump() << "\n";
        return tdadc::exit_code(e.kind());
    } catch (const std::exception& e) {
        nlohmann::json rec;
        rec["error"] = {{"exit_code", 1}, {"kind", "internal"}, {"message", e.what()}};
        std::cerr << rec.dump() << "\n";
        return 1;
    }
}
