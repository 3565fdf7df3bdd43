#include "doctest.h"

#include "remag/analytic_models.hpp"
#include "remag/spin_dynamics.hpp"

#include <cmath>

using namespace remag;

namespace {

constexpr double mhz = two_pi * 1e6;

// Numerical propagator of an arbitrary piecewise waveform (no bracket).
Unitary2d waveform_unitary(const DriveWaveform& w)
{
    PropagateOptions o;
    o.sample_dt = w.duration();
    return PropagationPlan(w, o).propagator();
}

// Phase variance of a resonant RE under OU drive noise, by brute-force
// midpoint quadrature of the double integral of SW(t)SW(t')sigma^2 e^{-|t-t'|/tau}.
double drive_phase_variance(double theta, double rabi, double sigma, double tau, int n, int per_segment)
{
    const double h = theta / rabi;
    const int segs = 2 * n;
    const int m = segs * per_segment;
    const double dt = h / per_segment;
    double v = 0.0;
    for (int a = 0; a < m; ++a) {
        const double sa = (a / per_segment) % 2 == 0 ? 1.0 : -1.0;
        for (int b = 0; b < m; ++b) {
            const double sb = (b / per_segment) % 2 == 0 ? 1.0 : -1.0;
            v += sa * sb * std::exp(-std::abs(a - b) * dt / tau);
        }
    }
    return v * sigma * sigma * dt * dt;
}

} // namespace

TEST_CASE("rotary-echo signal identities")
{
    const double rabi = 17 * mhz;
    const double T = 2 * pi / rabi;
    for (int n = 0; n < 20; ++n)
        CHECK(re_signal(pi, rabi, 0.0, n * T) == doctest::Approx(1.0).epsilon(1e-14));
    const double d = 0.17 * mhz;
    CHECK(re_signal(pi, rabi, d, 85 * T) == doctest::Approx(0.0166).epsilon(0.01));
    CHECK(re_signal_full_echo(pi, rabi, d, 85) == doctest::Approx(0.0166).epsilon(0.01));
    for (double t : {0.0, 1e-7, 3.3e-6})
        CHECK(re_signal(2 * pi, rabi, 3 * mhz, t) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(re_fast_factor(4 * pi, rabi, 1.234e-7) == 1.0);
    CHECK(re_signal_full_echo(pi, rabi, d, 0) == 1.0);

    for (double theta : {3 * pi / 4, pi, 5 * pi, 1.7})
        for (int n = 0; n <= 100; ++n) {
            const double t = n * 2 * theta / rabi;
            CHECK(std::abs(re_signal(theta, rabi, 2.17 * mhz, t) - re_signal_full_echo(theta, rabi, 2.17 * mhz, n)) <
                  1e-12);
        }
    // theta = pi reduction
    for (int n = 0; n < 40; ++n)
        CHECK(re_signal_full_echo(pi, rabi, d, n) == doctest::Approx(0.5 * (1 + std::cos(4 * d * n / rabi))));
}

TEST_CASE("mixture signal and weights")
{
    SignalModelParams p;
    p.theta = pi;
    p.rabi = 17 * mhz;
    p.t = 1.3e-6;
    p.detunings = hyperfine_triplet(0.17 * mhz, 2.14 * mhz);
    double manual = 0;
    for (double d : p.detunings)
        manual += re_signal(pi, p.rabi, d, p.t) / 3;
    CHECK(re_signal(p) == doctest::Approx(manual).epsilon(1e-14));
    p.weights = {0.5, 0.25, 0.3};
    CHECK_THROWS_AS(re_signal(p), std::invalid_argument);
    p.weights = {0.5, -0.25, 0.75};
    CHECK_THROWS_AS(re_signal(p), std::invalid_argument);
}

TEST_CASE("Ramsey model")
{
    CHECK(ramsey_signal(1 * mhz, 0.0, 2.19e-6, 2.17 * mhz) == doctest::Approx(1.0));
    for (double t : {0.1e-6, 1e-6, 5e-6})
        CHECK(ramsey_signal(0.0, t, 0.0, 0.0, {1, 0, 0}) == doctest::Approx(1.0));
    const double t2 = 2.19e-6;
    const double d = 0.3 * mhz;
    const double osc = (std::cos(d * t2) + std::cos((d + 2.17 * mhz) * t2) + std::cos((d - 2.17 * mhz) * t2)) / 3;
    const double s = ramsey_signal(d, t2, t2, 2.17 * mhz);
    CHECK((s - 0.5) / (0.5 * osc) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    // single line reduces to the static-bath Ramsey form
    const double sigma = std::sqrt(2.0) / t2;
    DecayScenario sc;
    sc.sequence = SequenceKind::Ramsey;
    sc.sigma = sigma;
    CHECK(ramsey_signal(d, 1.1e-6, t2, 0.0, {1, 0, 0}) ==
          doctest::Approx(decay_envelope(sc, 1.1e-6, d).signal).epsilon(1e-12));
}

TEST_CASE("Rabi signal")
{
    const double rabi = 20 * mhz;
    CHECK(rabi_signal(rabi, 0.0, pi / rabi) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(std::abs(rabi_signal(rabi, 0.0, pi / rabi)) < 1e-14);
    CHECK(rabi_signal(rabi, 0.0, 2 * pi / rabi) == doctest::Approx(1.0));
    const double d = 2 * mhz;
    const auto w = build_waveform(PulseSequence::rabi_drive(rabi, 25e-9), d);
    const auto tr = propagate(w, nullptr);
    CHECK(std::abs(tr.values.back() - rabi_signal(rabi, d, 25e-9)) < 1e-6);
}

TEST_CASE("dephasing times and exponents")
{
    const double t2 = 2.19e-6;
    const double sigma = std::sqrt(2.0) / t2;
    CHECK(t_prime_ramsey(sigma) == doctest::Approx(t2));
    CHECK(t_prime_re(pi, sigma) == doctest::Approx(pi / 2 * t2).epsilon(1e-12));
    CHECK(t_prime_re(pi, sigma) == doctest::Approx(3.44e-6).epsilon(2e-3));

    const double s1 = mhz;
    CHECK(zeta_prime(s1, 200e-9, 200e-9) == doctest::Approx(0.581).epsilon(2e-3));
    CHECK(std::exp(-zeta_prime(s1, 200e-9, 200e-9)) == doctest::Approx(0.559).epsilon(2e-3));
    const double tc = 200e-9;
    const double t = tc / 100;
    CHECK(zeta_prime(s1, tc, t) == doctest::Approx(0.5 * s1 * s1 * t * t).epsilon(0.01));

    for (double theta = 0.05; theta < two_pi; theta += 0.05) {
        CHECK(t_prime_re(theta, s1) / t_prime_ramsey(s1) > 1.0);
        const double ratio = zeta_re(theta, s1, tc, 1e-6) / zeta_prime(s1, tc, 1e-6);
        const double tp = t_prime_ramsey(s1) / t_prime_re(theta, s1);
        CHECK(std::abs(ratio - tp * tp) < 1e-12);
    }
}

TEST_CASE("envelopes are one at t = 0 and non-increasing")
{
    const double rabi = 20 * mhz;
    std::vector<DecayScenario> cases;
    for (auto seq : {SequenceKind::RotaryEcho, SequenceKind::Ramsey, SequenceKind::Rabi})
        for (auto axis : {NoiseAxis::Z, NoiseAxis::X})
            for (auto kind : {NoiseKind::Static, NoiseKind::OrnsteinUhlenbeck}) {
                if (seq == SequenceKind::Ramsey && axis == NoiseAxis::X)
                    continue;
                if (seq == SequenceKind::Rabi && axis == NoiseAxis::Z && kind == NoiseKind::OrnsteinUhlenbeck)
                    continue;
                DecayScenario s;
                s.sequence = seq;
                s.axis = axis;
                s.kind = kind;
                s.sigma = 0.05 * rabi;
                s.tau_c = 200e-9;
                s.rabi = rabi;
                s.theta = 5 * pi;
                cases.push_back(s);
            }
    for (const auto& s : cases) {
        CHECK(decay_envelope(s, 0.0).envelope == doctest::Approx(1.0));
        double prev = 1.0;
        for (int k = 1; k <= 400; ++k) {
            const double e = decay_envelope(s, k * 5e-9).envelope;
            CHECK(e <= prev + 1e-12);
            prev = e;
        }
    }
    DecayScenario bad;
    bad.sequence = SequenceKind::Ramsey;
    bad.axis = NoiseAxis::X;
    bad.sigma = 1;
    CHECK_THROWS_AS(decay_envelope(bad, 1e-6), std::invalid_argument);
    bad.sequence = SequenceKind::Rabi;
    bad.axis = NoiseAxis::Z;
    bad.kind = NoiseKind::OrnsteinUhlenbeck;
    bad.tau_c = 1e-7;
    bad.rabi = rabi;
    CHECK_THROWS_AS(decay_envelope(bad, 1e-6), std::invalid_argument);
}

TEST_CASE("static drive noise does not decay a resonant rotary echo")
{
    DecayScenario s;
    s.axis = NoiseAxis::X;
    s.sigma = 0.05 * 20 * mhz;
    s.rabi = 20 * mhz;
    s.theta = 5 * pi;
    for (int n = 0; n < 20; ++n)
        CHECK(decay_envelope(s, n * 2 * s.theta / s.rabi).peak == 1.0);
}

TEST_CASE("OU drive-noise exponent against the double-integral oracle")
{
    const double rabi = 20 * mhz;
    const double sigma = 0.05 * rabi;
    for (double theta : {pi, 5 * pi, 3 * pi / 4})
        for (double tau : {200e-9, 50e-9, 1e-6})
            for (int n : {1, 3, 8}) {
                const double v = drive_phase_variance(theta, rabi, sigma, tau, n, 150);
                const double z = zeta_re_drive_ou(theta, rabi, sigma, tau, n);
                CHECK(z == doctest::Approx(0.5 * v).epsilon(2e-3));
            }
}

TEST_CASE("validity window flag")
{
    const double rabi = 20 * mhz;
    CHECK(re_bath_ou_within_validity(pi, rabi, 0.05 * rabi, 200e-9));
    CHECK(!re_bath_ou_within_validity(3 * pi / 4, rabi, 0.05 * rabi, 200e-9));
    CHECK(re_bath_ou_within_validity(5 * pi, rabi, 0.05 * rabi, 200e-9) == true);
    CHECK(re_bath_ou_within_validity(pi, rabi, 0.05 * rabi, 1e-9) == false);
    DecayScenario s;
    s.kind = NoiseKind::OrnsteinUhlenbeck;
    s.sigma = 0.05 * rabi;
    s.tau_c = 2e-9;
    s.rabi = rabi;
    CHECK(decay_envelope(s, 1e-6).outside_validity);
}

TEST_CASE("static bath average of the Rabi signal")
{
    const double rabi = 20 * mhz;
    const double sigma = 0.05 * rabi;
    for (double t : {0.1e-6, 0.5e-6, 1.3e-6}) {
        // Gaussian average of the exact signal by trapezoid quadrature over +-8 sigma
        double acc = 0, wsum = 0;
        const int m = 4000;
        for (int k = -m; k <= m; ++k) {
            const double x = 8.0 * k / m;
            const double w = std::exp(-0.5 * x * x);
            acc += w * rabi_signal(rabi, sigma * x, t);
            wsum += w;
        }
        CHECK(std::abs(rabi_static_z_mean(rabi, sigma, t) - acc / wsum) < 2e-3);
    }
}

TEST_CASE("infidelity formulas")
{
    CHECK(infidelity_re(0.0, mhz, pi, 1e-6) == 0.0);
    CHECK(infidelity_re(0.05, 0.0, pi, 1e-6) == 0.0);
    CHECK(infidelity_rabi(0.0, mhz, 20 * mhz, 1e-6) == 0.0);
    CHECK(infidelity_ramsey(0.0, mhz, 20 * mhz, 1e-6) == 0.0);

    const double eps = 0.05;
    SUBCASE("rotary echo against exact propagators")
    {
        const double rabi = 17 * mhz;
        const double d = 0.1 * mhz;
        const auto seq = PulseSequence::rotary_echo(pi, rabi, 34);
        auto w0 = build_waveform(seq, d);
        auto we = w0;
        for (auto& a : we.amplitudes)
            a *= 1 + eps;
        const double exact = gate_infidelity(waveform_unitary(we), waveform_unitary(w0));
        const double f = infidelity(SequenceKind::RotaryEcho, eps, d, rabi, pi, seq.total_duration());
        CHECK(exact == doctest::Approx(f).epsilon(0.2));
    }
    SUBCASE("Rabi against exact propagators")
    {
        const double rabi = 20 * mhz;
        const double d = mhz;
        const double t = 50e-9;
        const auto u0 = waveform_unitary(build_waveform(PulseSequence::rabi_drive(rabi, t), d));
        const auto ue = waveform_unitary(build_waveform(PulseSequence::rabi_drive(rabi * (1 + eps), t), d));
        CHECK(gate_infidelity(ue, u0) == doctest::Approx(infidelity_rabi(eps, d, rabi, t)).epsilon(0.01));
    }
    SUBCASE("Ramsey with finite pi/2 pulses")
    {
        const double rabi = 20 * mhz;
        const double d = 0.1 * mhz;
        const double t = 200e-9;
        auto build = [&](double e) {
            DriveWaveform w;
            const double tp = pi / (2 * rabi);
            w.breakpoints = {0.0, tp, tp + t, 2 * tp + t};
            w.amplitudes = {rabi * (1 + e), 0.0, rabi * (1 + e)};
            w.detuning = d;
            PropagateOptions o;
            o.sample_dt = w.duration();
            return PropagationPlan(w, o).propagator();
        };
        CHECK(gate_infidelity(build(eps), build(0.0)) == doctest::Approx(infidelity_ramsey(eps, d, rabi, t)).epsilon(0.01));
    }
}

TEST_CASE("slow and fast bath Rabi reference envelopes")
{
    const double rabi = 20 * mhz;
    const double sigma = 0.05 * rabi;
    CHECK(rabi_slow_bath_envelope(rabi, sigma, 1e-6, 0.0) == 1.0);
    CHECK(rabi_fast_bath_envelope(rabi, sigma, 1e-9, 0.0) == 1.0);
    const double T = 4 * rabi * rabi / (std::pow(sigma, 4) * 1e-9);
    CHECK(rabi_fast_bath_envelope(rabi, sigma, 1e-9, T) == doctest::Approx(std::exp(-1.0)));
    CHECK(rabi_slow_bath_envelope(rabi, sigma, 1e-6, 2 * std::sqrt(1e-6 * rabi) / sigma) == doctest::Approx(std::exp(-1.0)));
}
