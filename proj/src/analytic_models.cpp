#include "remag/analytic_models.hpp"

#include <cmath>
#include <algorithm>
#include <stdexcept>

namespace remag {

namespace {

void require(bool ok, const char* what)
{
    if (!ok)
        throw std::invalid_argument(what);
}

double sqr(double x) { return x * x; }

// theta mod 2pi, with values within rounding of a multiple mapped to 0
double theta_mod(double theta)
{
    double m = std::fmod(theta, two_pi);
    if (m < 0.0)
        m += two_pi;
    if (m < 1e-12 * std::max(1.0, theta) || two_pi - m < 1e-12 * std::max(1.0, theta))
        return 0.0;
    return m;
}

} // namespace

void SignalModelParams::validate() const
{
    require(std::isfinite(theta) && theta > 0.0, "SignalModelParams: theta must be positive");
    require(std::isfinite(rabi) && rabi > 0.0, "SignalModelParams: Omega must be positive");
    require(std::isfinite(t) && t >= 0.0, "SignalModelParams: t must be non-negative");
    require(std::isfinite(t2_star) && t2_star >= 0.0, "SignalModelParams: T2* must be non-negative");
    if (!detunings.empty()) {
        require(weights.empty() || weights.size() == detunings.size(), "SignalModelParams: weights/detunings size mismatch");
        if (!weights.empty()) {
            double sum = 0.0;
            for (double w : weights) {
                require(w >= 0.0, "SignalModelParams: weights must be non-negative");
                sum += w;
            }
            require(std::abs(sum - 1.0) <= 1e-9, "SignalModelParams: weights must sum to 1");
        }
    }
}

double re_fast_factor(double theta, double rabi, double t)
{
    const double m = theta_mod(theta);
    if (m == 0.0)
        return 1.0;
    return std::cos(pi * rabi * t / m);
}

double re_signal(double theta, double rabi, double detuning, double t)
{
    const double s = std::sin(theta / 2.0);
    const double c = std::cos(theta / 2.0);
    return 0.5 + 0.5 * c * c +
           0.5 * s * s * std::cos(2.0 * detuning * t * s / theta) * re_fast_factor(theta, rabi, t);
}

double re_signal(const SignalModelParams& p)
{
    p.validate();
    const double s = std::sin(p.theta / 2.0);
    const double c = std::cos(p.theta / 2.0);
    double osc = 0.0;
    if (p.detunings.empty()) {
        osc = std::cos(2.0 * p.detuning * p.t * s / p.theta);
    } else {
        const double w0 = 1.0 / static_cast<double>(p.detunings.size());
        for (std::size_t i = 0; i < p.detunings.size(); ++i)
            osc += (p.weights.empty() ? w0 : p.weights[i]) * std::cos(2.0 * p.detunings[i] * p.t * s / p.theta);
    }
    if (p.t2_star > 0.0)
        osc *= std::exp(-sqr(p.t / p.t2_star));
    return 0.5 + 0.5 * c * c + 0.5 * s * s * osc * re_fast_factor(p.theta, p.rabi, p.t);
}

SignalTrace re_model_trace(const SignalModelParams& p, double dt, std::size_t count)
{
    require(std::isfinite(dt) && dt > 0.0, "re_model_trace: dt must be positive");
    SignalTrace tr;
    tr.dt = dt;
    tr.values.resize(count);
    SignalModelParams q = p;
    for (std::size_t j = 0; j < count; ++j) {
        q.t = dt * static_cast<double>(j);
        tr.values[j] = re_signal(q);
    }
    return tr;
}

double re_signal_full_echo(double theta, double rabi, double detuning, int n)
{
    require(n >= 0, "re_signal_full_echo: n must be non-negative");
    const double s = std::sin(theta / 2.0);
    const double c = std::cos(theta / 2.0);
    return 0.5 * (1.0 + c * c + s * s * std::cos(4.0 * detuning * static_cast<double>(n) * s / rabi));
}

std::vector<double> hyperfine_triplet(double detuning, double hyperfine)
{
    return {detuning, detuning + hyperfine, detuning - hyperfine};
}

double ramsey_signal(double detuning, double t, double t2_star, double hyperfine, const std::vector<double>& weights)
{
    std::vector<double> w = weights.empty() ? std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3} : weights;
    require(w.size() == 3, "ramsey_signal: three weights expected");
    double sum = 0.0;
    for (double x : w) {
        require(x >= 0.0, "ramsey_signal: weights must be non-negative");
        sum += x;
    }
    require(std::abs(sum - 1.0) <= 1e-9, "ramsey_signal: weights must sum to 1");
    const auto d = hyperfine_triplet(detuning, hyperfine);
    double osc = 0.0;
    for (int i = 0; i < 3; ++i)
        osc += w[i] * std::cos(d[i] * t);
    if (t2_star > 0.0)
        osc *= std::exp(-sqr(t / t2_star));
    return 0.5 * (1.0 + osc);
}

double rabi_signal(double rabi, double detuning, double t)
{
    const double w2 = rabi * rabi + detuning * detuning;
    if (w2 == 0.0)
        return 1.0;
    return 1.0 - rabi * rabi / w2 * sqr(std::sin(0.5 * t * std::sqrt(w2)));
}

double t_prime_re(double theta, double sigma)
{
    require(sigma > 0.0, "t_prime_re: sigma must be positive");
    return theta / (sigma * std::sqrt(2.0) * std::abs(std::sin(theta / 2.0)));
}

double t_prime_ramsey(double sigma)
{
    require(sigma > 0.0, "t_prime_ramsey: sigma must be positive");
    return std::sqrt(2.0) / sigma;
}

double zeta_prime(double sigma, double tau_c, double t)
{
    require(tau_c > 0.0, "zeta_prime: tau_c must be positive");
    const double x = t / tau_c;
    // x + e^{-x} - 1 loses everything to cancellation for small x
    const double g = x < 1e-3 ? x * x * (0.5 - x / 6.0 + x * x / 24.0) : x + std::expm1(-x);
    return sigma * sigma * tau_c * tau_c * g;
}

double zeta_re(double theta, double sigma, double tau_c, double t)
{
    const double s = std::sin(theta / 2.0);
    return zeta_prime(sigma, tau_c, t) * 4.0 * s * s / (theta * theta);
}

double zeta_re_drive_ou(double theta, double rabi, double sigma, double tau_c, double n)
{
    require(tau_c > 0.0 && rabi > 0.0, "zeta_re_drive_ou: tau_c and Omega must be positive");
    const double a = theta / (rabi * tau_c); // half-echo over tau_c
    const double x = 2.0 * n * a;            // t / tau_c
    const double ea = std::exp(-a);
    const double th = std::tanh(0.5 * a);
    return tau_c * tau_c * sigma * sigma *
           (x + 2.0 * n * (ea - 1.0) - th * th * (2.0 * n * (ea + 1.0) + std::exp(-x) - 1.0));
}

double rabi_static_z_mean(double rabi, double sigma, double t)
{
    const double r = t * sigma * sigma / rabi;
    const double at = std::atan(r);
    const double q = 1.0 + r * r;
    return 0.5 * (1.0 + std::cos(t * rabi + at / 2.0) / std::pow(q, 0.25) +
                  sigma * sigma / (rabi * rabi) * (1.0 - std::cos(t * rabi + 1.5 * at) / std::pow(q, 0.75)));
}

double rabi_slow_bath_envelope(double rabi, double sigma, double tau_c, double t)
{
    return std::exp(-sigma * t / (2.0 * std::sqrt(tau_c * rabi)));
}

double rabi_fast_bath_envelope(double rabi, double sigma, double tau_c, double t)
{
    const double T = 4.0 * rabi * rabi / (std::pow(sigma, 4) * tau_c);
    return std::exp(-t / T);
}

bool re_bath_ou_within_validity(double theta, double rabi, double sigma, double tau_c)
{
    return tau_c * sigma <= theta / 2.0 && tau_c >= theta / (2.0 * rabi);
}

void DecayScenario::validate() const
{
    require(std::isfinite(sigma) && sigma >= 0.0, "DecayScenario: sigma must be non-negative");
    if (kind == NoiseKind::OrnsteinUhlenbeck)
        require(std::isfinite(tau_c) && tau_c > 0.0, "DecayScenario: OU requires tau_c > 0");
    if (sequence != SequenceKind::Ramsey)
        require(std::isfinite(rabi) && rabi > 0.0, "DecayScenario: Omega must be positive");
    if (sequence == SequenceKind::RotaryEcho)
        require(std::isfinite(theta) && theta > 0.0, "DecayScenario: theta must be positive");
}

DecayValue decay_envelope(const DecayScenario& sc, double t, double detuning)
{
    sc.validate();
    require(std::isfinite(t) && t >= 0.0, "decay_envelope: t must be non-negative");
    DecayValue v;
    const bool ou = sc.kind == NoiseKind::OrnsteinUhlenbeck;
    const double sigma = sc.sigma;
    switch (sc.sequence) {
    case SequenceKind::RotaryEcho: {
        const double s = std::sin(sc.theta / 2.0);
        const double c = std::cos(sc.theta / 2.0);
        if (sc.axis == NoiseAxis::Z) {
            if (ou) {
                v.envelope = std::exp(-zeta_re(sc.theta, sigma, sc.tau_c, t));
                v.outside_validity = !re_bath_ou_within_validity(sc.theta, sc.rabi, sigma, sc.tau_c);
            } else {
                v.envelope = sigma > 0.0 ? std::exp(-sqr(t / t_prime_re(sc.theta, sigma))) : 1.0;
            }
            v.signal = 0.5 * (1.0 + c * c + s * s * std::cos(2.0 * detuning * t * s / sc.theta) * v.envelope);
            v.peak = 0.5 * (1.0 + c * c + s * s * v.envelope);
        } else {
            if (ou) {
                const double n = t * sc.rabi / (2.0 * sc.theta);
                v.envelope = std::exp(-zeta_re_drive_ou(sc.theta, sc.rabi, sigma, sc.tau_c, n));
            }
            v.peak = 0.5 * (1.0 + v.envelope);
            v.signal = detuning == 0.0 ? v.peak
                                       : 0.5 * (1.0 + c * c + s * s * std::cos(2.0 * detuning * t * s / sc.theta));
        }
        break;
    }
    case SequenceKind::Ramsey:
        require(sc.axis == NoiseAxis::Z, "decay_envelope: Ramsey uses ideal pulses, drive noise does not apply");
        if (ou)
            v.envelope = std::exp(-zeta_prime(sigma, sc.tau_c, t));
        else
            v.envelope = sigma > 0.0 ? std::exp(-sqr(t / t_prime_ramsey(sigma))) : 1.0;
        v.signal = 0.5 * (1.0 + std::cos(detuning * t) * v.envelope);
        v.peak = 0.5 * (1.0 + v.envelope);
        break;
    case SequenceKind::Rabi:
        if (sc.axis == NoiseAxis::Z) {
            require(!ou, "decay_envelope: Rabi under OU bath noise has only the slow/fast asymptotes");
            const double r = t * sigma * sigma / sc.rabi;
            v.envelope = std::pow(1.0 + r * r, -0.25);
            v.signal = rabi_static_z_mean(sc.rabi, sigma, t);
            v.peak = 0.5 * (1.0 + v.envelope);
        } else {
            v.envelope = ou ? std::exp(-zeta_prime(sigma, sc.tau_c, t)) : std::exp(-0.5 * sqr(sigma * t));
            v.signal = 0.5 * (1.0 + std::cos(sc.rabi * t) * v.envelope);
            v.peak = 0.5 * (1.0 + v.envelope);
        }
        break;
    }
    return v;
}

double infidelity_re(double epsilon, double detuning, double theta, double t)
{
    return sqr(epsilon * t * detuning) / 8.0 *
           (2.0 + theta * theta - 2.0 * std::cos(theta) - 2.0 * theta * std::sin(theta)) / (theta * theta);
}

double infidelity_rabi(double epsilon, double detuning, double rabi, double t)
{
    const double x = t * rabi;
    return sqr(epsilon * x) / 8.0 - sqr(epsilon * detuning) * (-2.0 + x * x + 2.0 * std::cos(x)) / (8.0 * rabi * rabi);
}

double infidelity_ramsey(double epsilon, double detuning, double rabi, double t)
{
    const double x = pi * t * rabi;
    return sqr(epsilon * pi) / 8.0 -
           sqr(epsilon * detuning) * (-16.0 + 4.0 * pi * pi + x * (8.0 + x)) / (32.0 * rabi * rabi);
}

double infidelity(SequenceKind kind, double epsilon, double detuning, double rabi, double theta, double t)
{
    switch (kind) {
    case SequenceKind::RotaryEcho: return infidelity_re(epsilon, detuning, theta, t);
    case SequenceKind::Rabi: return infidelity_rabi(epsilon, detuning, rabi, t);
    case SequenceKind::Ramsey: return infidelity_ramsey(epsilon, detuning, rabi, t);
    }
    return 0.0;
}

double gate_infidelity(const Unitary2d& u, const Unitary2d& v)
{
    return 1.0 - 0.5 * (u * v.adjoint()).trace().real();
}

} // namespace remag
