#pragma once

#include "cli/config.hpp"
#include "cli/outputs.hpp"

#include "remag/noise.hpp"
#include "remag/spectral.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace remag::cli {

struct RunRequest {
    std::string command;       // simulate | spectrum | sensitivity | noise | calcium | figure
    std::string figure;        // preset id for `figure`
    std::filesystem::path out; // output directory
    ScenarioConfig config;
};

/// Runs one subcommand and commits its outputs. Throws ConfigError for bad
/// input and anything else for runtime failures; outputs are removed then.
void run(const RunRequest& req);

const std::vector<std::string>& subcommands();

// Shared by the subcommands and the figure presets.

/// Sample step used when the config leaves it at 0.
double default_sample_dt(const PulseSequence& seq);

/// Exact (or Monte Carlo when noisy) trace averaged over `detunings`.
SignalTrace simulate_trace(const PulseSequence& seq, const std::vector<double>& detunings, const NoiseSpec* noise,
                           const ScenarioConfig& cfg, double sample_dt);

MonteCarloOptions monte_carlo_options(const ScenarioConfig& cfg, double sample_dt);

/// Peaks, pairs and refined detunings of `trace` (RE carrier structure).
struct SpectrumAnalysis {
    Periodogram periodogram;
    std::vector<PeakReport> peaks;
    bool has_estimate = false;
    DetuningEstimate coarse;
    DetuningEstimate refined;
    std::vector<std::string> warnings;
};

SpectrumAnalysis analyse_spectrum(const SignalTrace& trace, double theta, double rabi, const ScenarioConfig& cfg,
                                  bool extract);

nlohmann::json estimate_json(const DetuningEstimate& e);

/// (b, A) of the 14N triplet from the three strongest pairs (weaker ones are
/// sidelobes): b is the innermost detuning, A the mean of the outer two.
/// NaN where fewer than three pairs were found.
std::pair<double, double> triplet_b_and_a(const DetuningEstimate& e);

void run_figure(const std::string& id, const ScenarioConfig& cfg, OutputSet& out);
const std::vector<std::string>& figure_ids();

} // namespace remag::cli
