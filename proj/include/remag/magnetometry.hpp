#pragma once

// Shot-noise sensitivity: closed forms, numerical estimates from signals,
// readout and hyperfine correction factors and repeated-readout accounting.
// gamma is in rad/s per tesla, so eta comes out in T/sqrt(Hz).

#include "remag/constants.hpp"
#include "remag/spin_dynamics.hpp"

#include <cstddef>
#include <vector>

namespace remag {

/// theta / (2 sin^2(theta/2))
double re_sensitivity_coefficient(double theta);

/// sqrt(theta / (2 sin^3(theta/2))), RE over Ramsey at their optimal times.
double sensitivity_ratio_re_ramsey(double theta);

struct IdealSensitivity {
    double eta = 0.0;        // T/sqrt(Hz)
    double asymptote = 0.0;  // Rabi only: sqrt(2 Omega)/gamma
    bool off_full_echo = false;
};

IdealSensitivity sensitivity_ideal(SequenceKind kind, double theta, double rabi, double t,
                                   double gamma = nv_gamma_rad_per_s_tesla);

/// Rabi-beat sensitivity near its minima t = (2k + 3/2) pi / Omega.
double rabi_sensitivity_min(double rabi, double t, double gamma = nv_gamma_rad_per_s_tesla);

struct NormalizedSignal {
    std::vector<double> value; // (S - R1)/(R0 - R1)
    std::vector<double> error;
    std::vector<double> r0, r1, dr0, dr1;
};

struct NormalizedPoint {
    double value;
    double error;
};

NormalizedPoint normalize(double s, double r0, double r1, double ds, double dr0, double dr1);
NormalizedSignal normalize(const std::vector<double>& s, const std::vector<double>& r0, const std::vector<double>& r1,
                           const std::vector<double>& ds, const std::vector<double>& dr0,
                           const std::vector<double>& dr1);

/// Oscillation period of the RE signal in detuning, 2pi/tau with tau = 2 t sin(theta/2)/theta.
double re_detuning_period(double theta, double t);

/// Uniform detuning grid covering one period starting at 0, `per_period`
/// steps per period plus two guard points either side for the stencil.
std::vector<double> detuning_grid(double period, std::size_t per_period = 32);

struct TraceSensitivityOptions {
    double interrogation_time = 0.0; // t, s
    double dead_time = 0.0;          // t_d, s
    double shots = 1.0;              // N
    double gamma = nv_gamma_rad_per_s_tesla;
    double period = 0.0;             // detuning window for the minimum; 0 = whole grid
    std::vector<double> signal_error; // Delta S per point; empty = sqrt(S(1-S)/N)
};

struct SensitivityPoint {
    double detuning = 0.0;
    double signal = 0.0;
    double derivative = 0.0;
    double eta = 0.0;
    double delta_eta = 0.0;
    bool insensitive = false;
};

struct TraceSensitivity {
    std::vector<SensitivityPoint> points; // interior points with a full stencil
    std::ptrdiff_t best = -1;             // index into points, -1 if all insensitive
    double eta_min = 0.0;
    double delta_eta_min = 0.0;
};

/// eta(dw) = Delta S / |dS/dw| sqrt(N (t + t_d)) / gamma with a Richardson
/// central difference on a uniform detuning grid. The minimum is taken over
/// the first `period` of the grid.
TraceSensitivity sensitivity_from_trace(const std::vector<double>& detunings, const std::vector<double>& signal,
                                        const TraceSensitivityOptions& opts);

struct ReadoutModel {
    double n0 = 0.0022;     // photons per readout, |0>
    double n1 = 0.0015;     // photons per readout, |1>
    double repeats = 1.0;   // N_r
    double t_readout = 0.0; // t_r, s
    double dead_time = 0.0; // t_d, s

    void validate() const;
};

/// Photon-counting detection factor after full echoes.
double detection_factor(double n0, double n1, double theta);
/// Its theta = k pi form, (1 + 3(n0+n1)/(n0-n1)^2)^{-1/2}.
double detection_factor_reduced(double n0, double n1);
/// |1 + 2 cos(2 A t sin(theta/2)/theta)| / 3
double hyperfine_factor(double theta, double hyperfine, double t);
/// |1 + 2 cos(A t)| / 3
double hyperfine_factor_ramsey(double hyperfine, double t);
/// (1 + (C^-2 - 1)/N_r)^{-1/2}; equals C at N_r = 1.
double repeated_readout_factor(double c, double repeats);

struct ReadoutFactors {
    double c = 1.0;
    double c_a = 1.0;
    double c_nr = 1.0;
    bool hyperfine_singular = false; // C_A = 0, corrected sensitivity infinite
};

ReadoutFactors readout_factors(const ReadoutModel& r, double theta, double hyperfine, double t);

/// eta_ideal * envelope / (C_A C_Nr) * sqrt((t + t_d + N_r t_r)/t), where
/// C_Nr is built from C and N_r.
double corrected_sensitivity(double eta_ideal, double c, double c_a, double envelope, double t, double t_d,
                             double repeats, double t_readout);

struct EchoTime {
    int cycles = 0;
    double t = 0.0;
    double c_a = 1.0;
};

/// Full-echo times nearest 2 A t sin(theta/2)/theta = 2 pi k, k >= 1, up to
/// the horizon. A = 0 returns every full-echo time.
std::vector<EchoTime> optimal_interrogation_times(double theta, double rabi, double hyperfine, double horizon);

struct ReadoutOptimum {
    double t = 0.0;
    double eta = 0.0;
    int cycles = 0; // RE only
};

/// Minimum corrected sensitivity over interrogation times up to `horizon`,
/// including static-bath dephasing (T2*), the hyperfine factor and the
/// readout model. RE is evaluated on its full-echo grid, Ramsey on a fine
/// uniform grid.
ReadoutOptimum repeated_readout_optimum(SequenceKind kind, double theta, double rabi, double hyperfine,
                                        double t2_star, const ReadoutModel& model, double horizon,
                                        double gamma = nv_gamma_rad_per_s_tesla);

/// Corrected sensitivity at one interrogation time (as used by the optimum).
double corrected_sensitivity_at(SequenceKind kind, double theta, double hyperfine, double t2_star,
                                const ReadoutModel& model, double t, double gamma = nv_gamma_rad_per_s_tesla);

} // namespace remag
