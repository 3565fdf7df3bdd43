#pragma once

// Periodograms of uniformly sampled traces, sequential peak significance,
// Cramer-Rao frequency bounds, even-harmonic notch filtering and the
// inversion of rotary-echo split pairs into detunings. Frequencies are
// ordinary (Hz) throughout this header.

#include "remag/spin_dynamics.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace remag {

struct Periodogram {
    std::vector<double> frequency; // Hz, 0 .. Nyquist
    std::vector<double> power;     // |sum d_j e^{i w t_j}|^2 / M
    std::size_t samples = 0;       // M
    double dt = 0.0;               // s
    std::size_t oversample = 1;    // grid points per Fourier spacing 1/(M dt)

    double duration() const { return dt * static_cast<double>(samples); }
    double grid_step() const { return frequency.size() > 1 ? frequency[1] - frequency[0] : 0.0; }
    /// Number of independent Fourier ordinates j = 1 .. floor((M-1)/2).
    std::size_t fourier_count() const { return samples < 3 ? 0 : (samples - 1) / 2; }
    /// Power at the j-th Fourier frequency j/(M dt).
    double fourier_ordinate(std::size_t j) const { return power[j * oversample]; }
};

struct PeriodogramOptions {
    std::size_t oversample = 4;
    bool remove_mean = true;
};

Periodogram periodogram(const std::vector<double>& values, double dt, const PeriodogramOptions& opts = {});
Periodogram periodogram(const SignalTrace& trace, const PeriodogramOptions& opts = {});

struct SpectralPeak {
    double frequency = 0.0; // Hz, quadratic apex
    double power = 0.0;     // apex power
    std::size_t index = 0;  // grid index of the local maximum
};

/// Local maxima of the grid, strongest first; max_peaks 0 keeps all.
std::vector<SpectralPeak> find_peaks(const Periodogram& pg, std::size_t max_peaks = 0);

struct PeakReport {
    double frequency = 0.0; // Hz
    double power = 0.0;     // apex power
    std::size_t rank = 0;   // m, from 1
    std::size_t ordinate = 0;
    double ordinate_power = 0.0;
    double p_value = 0.0;
    bool significant = false;
    double snr = 0.0;     // K / (sqrt2 sigma)
    double delta_f = 0.0; // Hz
};

struct SignificanceOptions {
    std::size_t max_peaks = 16;
    double level = 0.01;
};

/// Sequential test over the Fourier ordinates: the m-th strongest peak has
/// T_m = I_m / (sum_k I_k - sum_{l<m} I_l) and p_m = (K-m+1)(1-T_m)^{K-m}.
/// Stops at the first p above the level; that peak is reported as not
/// significant. S/N comes from the peak area over the noise floor below
/// the significance line.
std::vector<PeakReport> peak_significance(const Periodogram& pg, const SignificanceOptions& opts = {});

/// p_m for a single ordinate; exposed for calibration.
double fisher_p_value(double t_m, std::size_t K, std::size_t m);

/// Ordinate power at which a single dominant peak reaches p = level.
double significance_threshold(double total_power, std::size_t K, double level);

/// (2 sqrt3 / pi) sigma / (K t sqrt M)
double frequency_uncertainty(double sigma, double amplitude, double t, std::size_t M);
/// K / (sqrt2 sigma)
double snr_from_amplitude(double amplitude, double sigma);

/// Carrier pi Omega/(theta mod 2pi) in Hz, i.e. Omega / (2 (theta mod 2pi)).
double re_carrier_frequency(double rabi, double theta);

struct HarmonicFilterResult {
    SignalTrace trace;
    double carrier = 0.0; // Hz
    std::size_t notches = 0;
    bool overlap_warning = false;
    std::vector<std::string> warnings;
};

/// Removes bands at 2k * carrier for every 2k * carrier <= Nyquist; flat
/// zero within 1/t, cosine edges of width 2/t. DC is preserved.
HarmonicFilterResult harmonic_filter(const SignalTrace& trace, double rabi, double theta);

struct DetuningPair {
    double lower = 0.0; // Hz
    double upper = 0.0; // Hz
    double half_splitting = 0.0;
    double detuning = 0.0;    // delta nu, Hz
    double uncertainty = 0.0; // Hz
    double power = 0.0;       // sum of the two peak powers
};

struct DetuningEstimate {
    double carrier = 0.0;         // Hz, symmetry point
    double nominal_carrier = 0.0; // Hz
    double rabi_measured = 0.0;   // rad/s
    double theta_actual = 0.0;    // rad
    std::vector<DetuningPair> pairs; // strongest first
    double symmetry_residual = 0.0;  // Hz, max |midpoint - carrier|
};

struct PairingOptions {
    double tolerance_bins = 2.0;    // in grid steps
    double grid_step = 0.0;         // Hz, required
    double carrier_window = 0.25;   // fraction of the nominal carrier searched
};

/// Symmetry point by exhaustive search over pair midpoints near the nominal
/// carrier, then greedy mirror pairing strongest first.
DetuningEstimate extract_detunings(const std::vector<PeakReport>& peaks, double theta_nominal, double rabi_nominal,
                                   const PairingOptions& opts);

/// Joint least-squares fit of c0 + sum_i cos(2pi D_i t)[a_i cos(2pi fc t) + b_i sin(2pi fc t)]
/// to the trace, starting from an extracted estimate. Resolves pairs closer
/// than the Rayleigh limit that the apex estimates bias.
DetuningEstimate refine_detunings(const SignalTrace& trace, const DetuningEstimate& start);

} // namespace remag
