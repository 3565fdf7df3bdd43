#pragma once

// Exact propagation of a driven two-level system under piecewise-constant
// rotating-frame Hamiltonians
//
//     H(t) = 1/2 [ W(t) sx + (dw + dz(t)) (1 - sz) ],
//
// where W(t) is the signed drive amplitude. Every step is an exact SU(2)
// exponential, so the propagator is unitary to machine precision and the
// integrator can serve as the reference for the closed-form models.

#include "remag/constants.hpp"
#include "remag/su2.hpp"

#include <cstddef>
#include <vector>

namespace remag {

struct NoisePath;

struct NVSystemSpec {
    double zero_field_splitting = two_pi * 2.87e9;             // rad/s
    double static_field_gauss = 100.0;                         // G
    double gyromagnetic_ratio = nv_gamma_rad_per_s_gauss;      // rad/s per G
    double hyperfine = two_pi * 2.17e6;                        // rad/s

    /// omega_0 = Delta + gamma_e B
    double resonance() const { return zero_field_splitting + gyromagnetic_ratio * static_field_gauss; }
    void validate() const;
};

enum class SequenceKind { RotaryEcho, Rabi, Ramsey };

const char* to_string(SequenceKind kind);

struct PulseSequence {
    SequenceKind kind = SequenceKind::RotaryEcho;
    double theta = 0.0;    // half-echo rotation angle, rad
    double rabi = 0.0;     // Rabi frequency, rad/s
    int cycles = 0;        // rotary-echo cycles
    double duration = 0.0; // Rabi / Ramsey interrogation time, s

    static PulseSequence rotary_echo(double theta, double rabi, int cycles);
    static PulseSequence rabi_drive(double rabi, double duration);
    static PulseSequence ramsey(double duration, double rabi = 0.0);

    /// RE cycle period T = 2 theta / Omega.
    double cycle_period() const;
    double half_echo() const { return theta / rabi; }
    double total_duration() const;
    void validate() const;
};

struct DriveWaveform {
    std::vector<double> breakpoints; // n+1 ordered times starting at 0
    std::vector<double> amplitudes;  // n signed drive values, rad/s
    double detuning = 0.0;           // rad/s
    // Ideal instantaneous x rotation applied at t=0, undone (phase inverted)
    // before each readout. pi/2 for Ramsey, 0 otherwise.
    double bracket_angle = 0.0;

    std::size_t segments() const { return amplitudes.size(); }
    double duration() const { return breakpoints.empty() ? 0.0 : breakpoints.back(); }
    double max_amplitude() const;
    void validate() const;
};

DriveWaveform build_waveform(const PulseSequence& seq, double detuning);

struct SignalTrace {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> values;    // population of |0>
    std::vector<double> std_error; // empty for a single realisation
    std::size_t trials = 1;

    std::size_t size() const { return values.size(); }
    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    /// Total span covered by the samples, M * dt.
    double span() const { return dt * static_cast<double>(values.size()); }
};

struct PropagateOptions {
    double dt_max = 0.0;    // 0 -> min(T_Rabi/200, tau_c/20)
    double sample_dt = 0.0; // 0 -> first segment length (uniform waveforms only)
    std::size_t max_steps = 200'000'000;
};

/// Default integration step for a waveform, optionally resolving a noise
/// correlation time (tau_c <= 0 means no noise).
double default_dt_max(const DriveWaveform& wave, double tau_c = 0.0);

/// Precomputed step schedule for one waveform. Building the plan once and
/// running it per noise realisation is what the Monte Carlo harness does.
class PropagationPlan {
  public:
    PropagationPlan(const DriveWaveform& wave, const PropagateOptions& opts);

    /// Integrates from |0>; `noise` may be null. The returned trace is a
    /// pure function of the plan and the path.
    SignalTrace run(const NoisePath* noise) const;

    /// Same as run() but writes into `out` (size() entries), no allocation.
    void run_into(const NoisePath* noise, double* out) const;

    /// Full propagator over the waveform, noiseless, without the readout bracket.
    Unitary2d propagator() const;

    std::size_t size() const { return sample_count_; }
    std::size_t step_count() const { return total_steps_; }
    double sample_dt() const { return sample_dt_; }
    double dt_max() const { return dt_max_; }

  private:
    struct Block {
        double amplitude;
        double t_begin;
        double dt;
        std::size_t count;
        std::ptrdiff_t sample; // index recorded at the end of the block, -1 if none
        Unitary2d noiseless;   // whole-block propagator when no noise is applied
    };

    DriveWaveform wave_;
    std::vector<Block> blocks_;
    bool record_initial_ = false;
    std::size_t sample_count_ = 0;
    std::size_t total_steps_ = 0;
    double sample_dt_ = 0.0;
    double dt_max_ = 0.0;
    Unitary2d pre_;
    Unitary2d post_;
};

SignalTrace propagate(const DriveWaveform& wave, const NoisePath* noise, const PropagateOptions& opts = {});

/// Triangular wave TW(t), the integral of the unit square wave of period 2*theta/Omega.
double triangular_wave(double theta, double rabi, double t);

/// U0 = cos(Omega TW/2) 1 - i sin(Omega TW/2) sx.
Unitary2d u0_on_resonance(double theta, double rabi, double t);

/// First-order average Hamiltonian of the rotary-echo toggling frame,
/// H = offset*1 + hx sx + hy sy + hz sz (rad/s).
///
/// Coefficients use the e^{+iHt} sign convention of the toggling-frame
/// derivation; populations computed from either convention agree.
struct EffectiveHamiltonian {
    double offset = 0.0;
    double hx = 0.0;
    double hy = 0.0;
    double hz = 0.0;

    Matrix2c<double> matrix() const;
    double norm() const;
};

EffectiveHamiltonian avg_hamiltonian_first_order(double theta, double detuning);

/// exp(+i n T H) for the first-order average Hamiltonian after n cycles.
Unitary2d first_order_propagator(double theta, double rabi, double detuning, int n);

} // namespace remag
