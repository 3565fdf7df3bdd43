#pragma once

// Closed-form signals, dephasing envelopes and pulse-error infidelities.
// Angular frequencies in rad/s, times in s.

#include "remag/noise.hpp"
#include "remag/spin_dynamics.hpp"

#include <vector>

namespace remag {

/// Parameters of the first-order rotary-echo signal. An empty detuning set
/// means the single line `detuning`.
struct SignalModelParams {
    double theta = pi;
    double rabi = 0.0;
    double detuning = 0.0;
    double t = 0.0;
    double t2_star = 0.0; // 0: no Gaussian envelope
    std::vector<double> detunings;
    std::vector<double> weights;

    void validate() const;
};

/// cos(pi Omega t / (theta mod 2pi)); 1 when theta is a multiple of 2pi.
double re_fast_factor(double theta, double rabi, double t);

/// 1/2 + 1/2 cos^2(theta/2) + 1/2 sin^2(theta/2) cos(2 dw t sin(theta/2)/theta) * fast factor.
double re_signal(double theta, double rabi, double detuning, double t);

/// Weighted mixture over the detuning set, times exp(-(t/T2*)^2) on the
/// oscillating part when t2_star > 0.
double re_signal(const SignalModelParams& p);

/// Samples re_signal(p) at t_j = j dt, j < count (p.t is ignored).
SignalTrace re_model_trace(const SignalModelParams& p, double dt, std::size_t count);

/// 1/2 [1 + cos^2(theta/2) + sin^2(theta/2) cos(4 dw n sin(theta/2)/Omega)].
double re_signal_full_echo(double theta, double rabi, double detuning, int n);

/// Detunings {dw, dw + A, dw - A} of the unpolarised 14N triplet.
std::vector<double> hyperfine_triplet(double detuning, double hyperfine);

/// 1/2 (1 + sum_i w_i cos(dw_i t) e^{-(t/T2*)^2}) over {dw, dw + A, dw - A}.
/// Default weights 1/3 each; weights (1,0,0) give the single-line signal.
/// t2_star <= 0 disables the envelope.
double ramsey_signal(double detuning, double t, double t2_star, double hyperfine,
                     const std::vector<double>& weights = {});

/// 1 - Omega^2/(Omega^2 + dw^2) sin^2(t sqrt(Omega^2 + dw^2)/2).
double rabi_signal(double rabi, double detuning, double t);

/// theta / (sigma sqrt2 |sin(theta/2)|)
double t_prime_re(double theta, double sigma);
/// sqrt2 / sigma
double t_prime_ramsey(double sigma);

/// sigma^2 tau^2 (t/tau + e^{-t/tau} - 1)
double zeta_prime(double sigma, double tau_c, double t);
/// zeta'(t) * 4 sin^2(theta/2) / theta^2
double zeta_re(double theta, double sigma, double tau_c, double t);

/// Resonant rotary echo under OU drive-amplitude noise after n cycles.
/// Written with t = n*2*theta/Omega, so the long-time terms read t/tau_c
/// and e^{-t/tau_c}; n need not be an integer.
double zeta_re_drive_ou(double theta, double rabi, double sigma, double tau_c, double n);

/// Static Gaussian detuning average of the Rabi signal (sigma << Omega).
double rabi_static_z_mean(double rabi, double sigma, double t);

/// Long-time slow-bath Rabi envelope exp(-sigma t / (2 sqrt(tau_c Omega))).
double rabi_slow_bath_envelope(double rabi, double sigma, double tau_c, double t);
/// Fast-bath Rabi envelope exp(-t/T) with T = 4 Omega^2/(sigma^4 tau_c).
double rabi_fast_bath_envelope(double rabi, double sigma, double tau_c, double t);

/// tau_c sigma <= theta/2 and tau_c >= theta/(2 Omega).
bool re_bath_ou_within_validity(double theta, double rabi, double sigma, double tau_c);

struct DecayScenario {
    SequenceKind sequence = SequenceKind::RotaryEcho;
    NoiseAxis axis = NoiseAxis::Z;
    NoiseKind kind = NoiseKind::Static;
    double sigma = 0.0;
    double tau_c = 0.0;
    double theta = pi;
    double rabi = 0.0;

    void validate() const;
};

struct DecayValue {
    double envelope = 1.0; // multiplies the oscillating part
    double signal = 1.0;   // expected population at (t, detuning)
    double peak = 1.0;     // fringe maxima / full-echo value at detuning 0
    bool outside_validity = false;
};

/// Envelope and expected signal at time t. Rotary echoes are meant to be
/// evaluated at full-echo times. Rabi under OU bath noise has only the
/// regime asymptotes above and is rejected here, as is Ramsey under drive
/// noise (ideal pulses, nothing to decay).
DecayValue decay_envelope(const DecayScenario& s, double t, double detuning = 0.0);

/// Second-order infidelity for a relative Rabi error epsilon.
double infidelity_re(double epsilon, double detuning, double theta, double t);
double infidelity_rabi(double epsilon, double detuning, double rabi, double t);
double infidelity_ramsey(double epsilon, double detuning, double rabi, double t);
double infidelity(SequenceKind kind, double epsilon, double detuning, double rabi, double theta, double t);

/// Above this |epsilon| the expansion is not trusted.
constexpr double infidelity_epsilon_warn = 0.2;

/// 1 - Re Tr[U V^dagger]/2
double gate_infidelity(const Unitary2d& u, const Unitary2d& v);

} // namespace remag
