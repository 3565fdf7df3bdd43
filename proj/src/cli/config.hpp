#pragma once

// Scenario configuration: flat INI-style sections, MHz and microseconds at
// the boundary, converted to rad/s and seconds by the accessors.

#include "remag/calcium.hpp"
#include "remag/magnetometry.hpp"
#include "remag/noise.hpp"
#include "remag/spin_dynamics.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace remag::cli {

/// Validation failure, message already carries file:line context.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
    // [sequence]
    std::string kind = "re"; // re | rabi | ramsey
    double theta = pi;       // rad; theta_pi sets it in units of pi
    double rabi_mhz = 17.0;
    int cycles = 50;
    double duration_us = 2.0; // rabi / ramsey
    double detuning_mhz = 0.0;
    double hyperfine_mhz = 2.14;
    bool triplet = false;
    double sample_dt_us = 0.0; // 0: eight samples per carrier period (RE), auto otherwise

    // [noise]
    std::string noise_kind = "none"; // none | static | ou
    std::string noise_axis = "z";    // z | x
    double sigma_mhz = 0.0;
    double sigma_rel = 0.0; // fraction of Omega, alternative to sigma_mhz
    double tau_c_us = 0.2;
    double dt_max_us = 0.0; // 0: min(T_Rabi/200, tau_c/20)

    // [readout]
    double n0 = 0.0022;
    double n1 = 0.0015;
    double repeats = 1.0;
    double t_readout_us = 0.0;
    double dead_time_us = 0.0;
    double shots = 1.0;

    // [spectrum]
    std::string source = "model"; // model | exact
    double spectrum_duration_us = 5.0;
    double white_noise = 0.0; // per-sample standard deviation added to the trace
    int oversample = 4;
    double level = 0.01;
    int max_peaks = 16;
    bool filter = true;
    bool refine = true;

    // [sensitivity]
    double t_min_us = 0.1;
    double t_max_us = 10.0;
    int points = 200;
    double t2_star_us = 2.19; // 0: no static-bath envelope

    // [calcium]
    double ions = 1e5;
    double distance_nm = 200.0;
    double flux_duration_us = 10.0;
    double standoff_nm = 10.0;
    double ca_repetitions = 1.0;
    double target_eta_ut = 10.0; // uT/sqrt(Hz)

    // [run]
    std::uint64_t seed = 1;
    int trials = 100;
    int threads = 0;
    int chunk = 64;

    bool trials_explicit = false; // run.trials given in the file or on the command line
    std::string source_file;      // empty for defaults
    std::map<std::string, std::string> origins; // key -> "file:line" or "--flag"
    std::vector<std::string> warnings;

    double rabi() const { return mhz_to_rad(rabi_mhz); }
    double detuning() const { return mhz_to_rad(detuning_mhz); }
    double hyperfine() const { return mhz_to_rad(hyperfine_mhz); }
    double sigma() const { return sigma_rel > 0.0 ? sigma_rel * rabi() : mhz_to_rad(sigma_mhz); }
    double tau_c() const { return us_to_s(tau_c_us); }

    SequenceKind sequence_kind() const;
    PulseSequence sequence() const;
    bool noisy() const { return noise_kind != "none" && sigma() > 0.0; }
    NoiseSpec noise() const;
    ReadoutModel readout() const;
    CaDomainSpec calcium() const;
    std::vector<double> detunings() const; // single line or triplet

    /// Every key with its canonical value, defaults included.
    std::map<std::string, std::string> resolved() const;
    /// FNV-1a over the sorted resolved keys except run.threads, 16 hex digits.
    std::string hash() const;
};

/// Parses `text`; `origin` names the file in error messages.
ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ScenarioConfig load_config(const std::string& path);

/// Re-runs the invariant checks after command-line overrides.
void validate(ScenarioConfig& cfg);

} // namespace remag::cli
