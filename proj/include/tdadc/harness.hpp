#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdadc/adc.hpp"
#include "tdadc/calib.hpp"
#include "tdadc/core.hpp"

namespace tdadc {

enum class Command {
    Simulate,
    VtcCurve,
    DduSweep,
    SweepDt,
    Calibrate,
    PowerCompare,
    Feasibility,
};

const char* to_string(Command cmd);
Command command_from_name(const std::string& name);

enum class OutputFormat { Csv, Json };

// Fully resolved experiment description: every field has its effective
// value after defaults, presets, file keys and CLI overrides, and the whole
// set is echoed into each output artifact.
struct ExperimentSpec {
    Command command = Command::Simulate;
    AdcModel adc;
    int n_samples = 4096;
    SignalSpec stimulus;
    std::uint64_t seed = 0;
    int trials = 10;
    std::string output_path;  // defaulted from the command when empty
    OutputFormat output_format = OutputFormat::Csv;

    // sampling-period lint inputs
    TimeFs t_m = 30000.0;
    TimeFs t_reset = 20000.0;
    bool reset_free = true;

    CalibSpec calib;

    std::vector<double> sweep_sigma_grid{0.0, 0.25, 0.5, 1.0, 2.0, 4.0};
    TimeFs sweep_jitter_sigma = 0.0;

    long long power_elements = 56;
    long long power_samples = 1000;

    std::vector<std::string> warnings;  // lints attached at load, never fatal
};

// Parses the flat-section key=value config text. Unknown sections or keys
// are rejected (with a nearest-key suggestion), parse errors carry line
// numbers, and a sampling-period violation attaches a warning instead of
// failing. `command` comes from the CLI; a command key in the file must
// agree with it.
ExperimentSpec parse_spec_text(const std::string& text, Command command,
                               const std::string& origin);
ExperimentSpec load_spec(const std::string& path, Command command);

struct RunResult {
    int status = 0;
    std::vector<std::string> summary;    // one line per metric
    std::vector<std::string> artifacts;  // files written
    std::vector<std::string> warnings;
};

// Executes the experiment and writes its artifact(s). Outputs are
// deterministic: identical spec+seed gives identical bytes, independent of
// the worker count.
RunResult run(const ExperimentSpec& spec);

// TDADC_WORKERS, clamped to [1, 64]; 1 when unset.
int worker_count();

// Resolved spec as ordered (dotted key, value) pairs; the provenance block
// of every artifact.
std::vector<std::pair<std::string, std::string>> echo_pairs(const ExperimentSpec& spec);

}  // namespace tdadc
