#pragma once

// Classical noise processes and Monte Carlo ensemble averaging.

#include "remag/spin_dynamics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace remag {

enum class NoiseAxis { Z, X };
enum class NoiseKind { Static, OrnsteinUhlenbeck };

const char* to_string(NoiseAxis axis);
const char* to_string(NoiseKind kind);

struct NoiseSpec {
    NoiseAxis axis = NoiseAxis::Z;
    NoiseKind kind = NoiseKind::Static;
    double sigma = 0.0; // rad/s
    double tau_c = 0.0; // s, OU only
    std::uint64_t seed = 0;

    void validate() const;
};

/// Uniformly sampled noise realisation starting at t = 0. Propagation holds
/// each value constant over its grid cell.
struct NoisePath {
    double dt = 0.0;
    std::vector<double> values; // rad/s
    NoiseSpec spec;

    double value_at(double t) const;
    double end() const { return dt * static_cast<double>(values.size()); }
};

/// Draws realisation `trial_index` of `spec` on [0, t_end] with step `dt`.
/// Static: one Normal(0, sigma^2) constant. OU: exact stationary update
/// x_{k+1} = x_k e^{-dt/tau} + sigma sqrt(1 - e^{-2dt/tau}) xi_k, x_0 ~ Normal(0, sigma^2).
NoisePath sample_path(const NoiseSpec& spec, double t_end, double dt, std::uint64_t trial_index);

/// Reuses `path` storage; same values as sample_path.
void sample_path_into(const NoiseSpec& spec, double t_end, double dt, std::uint64_t trial_index, NoisePath& path);

/// Adds independent Normal(0, sigma^2) samples keyed by (seed, stream, index).
void add_white_noise(SignalTrace& trace, double sigma, std::uint64_t seed, std::uint64_t stream);

/// Running mean and variance (Welford), mergeable (Chan et al.).
class RunningStats {
  public:
    void push(double x);
    void merge(const RunningStats& other);
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const; // unbiased, 0 for n < 2
    double std_error() const;

  private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct EnsembleResult {
    SignalTrace mean; // std_error filled
    std::size_t trials = 0;
    NoiseSpec spec;
    std::uint64_t seed = 0;
};

struct MonteCarloOptions {
    std::size_t trials = 1;
    PropagateOptions propagate; // dt_max 0 -> min(T_Rabi/200, tau_c/20)
    unsigned threads = 0;       // 0 -> hardware concurrency
    std::size_t chunk = 64;     // trials per reduction chunk; fixes summation order
};

/// Averages exact propagation over independent noise realisations.
/// z noise adds to the detuning; x noise adds to the drive magnitude,
/// W(t) = SW(t) (Omega + dx(t)). The reduction order depends only on
/// `chunk`, never on the thread count.
EnsembleResult monte_carlo(const PulseSequence& seq, double detuning, const NoiseSpec& spec,
                           const MonteCarloOptions& opts);

/// Debug dump: first `max_trials` raw paths and per-trial traces as CSV.
void dump_trials_csv(const std::string& file, const PulseSequence& seq, double detuning, const NoiseSpec& spec,
                     const MonteCarloOptions& opts, std::size_t max_trials);

} // namespace remag
