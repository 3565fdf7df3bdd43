#include "remag/magnetometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace remag {

namespace {

void require(bool ok, const char* what)
{
    if (!ok)
        throw std::invalid_argument(what);
}

bool refocusing_angle(double theta)
{
    const double m = std::fmod(theta, two_pi);
    return m < 1e-12 * std::max(1.0, theta) || two_pi - m < 1e-12 * std::max(1.0, theta);
}

} // namespace

double re_sensitivity_coefficient(double theta)
{
    const double s = std::sin(theta / 2.0);
    return theta / (2.0 * s * s);
}

double sensitivity_ratio_re_ramsey(double theta)
{
    require(theta > 0.0 && theta < two_pi, "sensitivity_ratio_re_ramsey: theta must be in (0, 2pi)");
    const double s = std::sin(theta / 2.0);
    return std::sqrt(theta / (2.0 * s * s * s));
}

IdealSensitivity sensitivity_ideal(SequenceKind kind, double theta, double rabi, double t, double gamma)
{
    require(std::isfinite(t) && t > 0.0, "sensitivity_ideal: t must be positive");
    require(gamma > 0.0, "sensitivity_ideal: gamma must be positive");
    IdealSensitivity r;
    switch (kind) {
    case SequenceKind::RotaryEcho: {
        require(theta > 0.0 && rabi > 0.0, "sensitivity_ideal: theta and Omega must be positive");
        if (refocusing_angle(theta))
            throw std::invalid_argument("sensitivity_ideal: theta = 2 pi k has no field response");
        r.eta = re_sensitivity_coefficient(theta) / (gamma * std::sqrt(t));
        const double n = t * rabi / (2.0 * theta);
        r.off_full_echo = std::abs(n - std::round(n)) > 1e-6 * std::max(1.0, n);
        break;
    }
    case SequenceKind::Ramsey:
        r.eta = 1.0 / (gamma * std::sqrt(t));
        break;
    case SequenceKind::Rabi: {
        require(rabi > 0.0, "sensitivity_ideal: Omega must be positive");
        const double x = t * rabi;
        const double den = 2.0 - 2.0 * std::cos(x) - x * std::sin(x);
        r.asymptote = std::sqrt(2.0 * rabi) / gamma;
        r.eta = den == 0.0 ? std::numeric_limits<double>::infinity() : r.asymptote * std::sqrt(std::abs(x / den));
        break;
    }
    }
    return r;
}

double rabi_sensitivity_min(double rabi, double t, double gamma)
{
    return std::sqrt(2.0 * rabi) / gamma / std::sqrt(1.0 + 2.0 / (t * rabi));
}

NormalizedPoint normalize(double s, double r0, double r1, double ds, double dr0, double dr1)
{
    const double d = r0 - r1;
    if (d == 0.0 || !std::isfinite(d))
        throw std::invalid_argument("normalize: references coincide");
    const double a = (s - r1) / (d * d);
    const double e0 = dr0 * std::abs(a);
    const double e1 = dr1 * std::abs(a - 1.0 / d);
    const double es = ds * std::abs(1.0 / d);
    return {(s - r1) / d, std::sqrt(e0 * e0 + e1 * e1 + es * es)};
}

NormalizedSignal normalize(const std::vector<double>& s, const std::vector<double>& r0, const std::vector<double>& r1,
                           const std::vector<double>& ds, const std::vector<double>& dr0,
                           const std::vector<double>& dr1)
{
    const std::size_t n = s.size();
    require(r0.size() == n && r1.size() == n && ds.size() == n && dr0.size() == n && dr1.size() == n,
            "normalize: input sizes differ");
    NormalizedSignal out;
    out.value.resize(n);
    out.error.resize(n);
    out.r0 = r0;
    out.r1 = r1;
    out.dr0 = dr0;
    out.dr1 = dr1;
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = normalize(s[i], r0[i], r1[i], ds[i], dr0[i], dr1[i]);
        out.value[i] = p.value;
        out.error[i] = p.error;
    }
    return out;
}

double re_detuning_period(double theta, double t)
{
    const double tau = 2.0 * t * std::sin(theta / 2.0) / theta;
    require(tau != 0.0, "re_detuning_period: no oscillation at this angle");
    return two_pi / std::abs(tau);
}

std::vector<double> detuning_grid(double period, std::size_t per_period)
{
    require(period > 0.0 && per_period >= 8, "detuning_grid: need a positive period and >= 8 steps");
    const double h = period / static_cast<double>(per_period);
    std::vector<double> g;
    for (long k = -2; k <= static_cast<long>(per_period) + 2; ++k)
        g.push_back(h * static_cast<double>(k));
    return g;
}

TraceSensitivity sensitivity_from_trace(const std::vector<double>& detunings, const std::vector<double>& signal,
                                        const TraceSensitivityOptions& opts)
{
    const std::size_t n = detunings.size();
    require(signal.size() == n, "sensitivity_from_trace: grid and signal sizes differ");
    require(n >= 5, "sensitivity_from_trace: need at least 5 grid points");
    require(opts.interrogation_time > 0.0 && opts.shots > 0.0 && opts.dead_time >= 0.0,
            "sensitivity_from_trace: t, N must be positive and t_d non-negative");
    require(opts.signal_error.empty() || opts.signal_error.size() == n,
            "sensitivity_from_trace: signal_error size differs from grid");
    const double h = (detunings.back() - detunings.front()) / static_cast<double>(n - 1);
    require(h > 0.0, "sensitivity_from_trace: detuning grid must increase");
    for (std::size_t i = 1; i < n; ++i)
        require(std::abs(detunings[i] - detunings[i - 1] - h) <= 1e-6 * h, "sensitivity_from_trace: grid must be uniform");

    const double root_time = std::sqrt(opts.shots * (opts.interrogation_time + opts.dead_time));
    const double window_end =
        opts.period > 0.0 ? detunings[2] + opts.period * (1.0 - 1e-9) : std::numeric_limits<double>::infinity();

    TraceSensitivity out;
    double scale = 0.0;
    for (double v : signal)
        scale = std::max(scale, std::abs(v));
    const double floor = 1e-10 * std::max(scale, 1e-300);
    for (std::size_t i = 2; i + 2 < n; ++i) {
        SensitivityPoint p;
        p.detuning = detunings[i];
        p.signal = signal[i];
        const double d1 = (signal[i + 1] - signal[i - 1]) / (2.0 * h);
        const double d2 = (signal[i + 2] - signal[i - 2]) / (4.0 * h);
        p.derivative = (4.0 * d1 - d2) / 3.0;
        const double s = std::clamp(p.signal, 0.0, 1.0);
        const double ds = opts.signal_error.empty() ? std::sqrt(s * (1.0 - s) / opts.shots) : opts.signal_error[i];
        p.insensitive = std::abs(p.derivative) * h <= floor;
        if (p.insensitive) {
            p.eta = std::numeric_limits<double>::infinity();
            p.delta_eta = std::numeric_limits<double>::infinity();
        } else {
            const double inv = 1.0 / std::abs(p.derivative);
            p.eta = ds * inv * root_time / opts.gamma;
            const double var = s * (1.0 - s);
            p.delta_eta = var > 0.0 ? std::abs((1.0 - 2.0 * s) / (2.0 * std::sqrt(var))) * inv * ds * root_time / opts.gamma
                                    : std::numeric_limits<double>::infinity();
        }
        out.points.push_back(p);
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < out.points.size(); ++k) {
        const auto& p = out.points[k];
        if (p.detuning > window_end || p.insensitive || !(p.eta > 0.0))
            continue;
        if (p.eta < best) {
            best = p.eta;
            out.best = static_cast<std::ptrdiff_t>(k);
        }
    }
    if (out.best >= 0) {
        out.eta_min = out.points[static_cast<std::size_t>(out.best)].eta;
        out.delta_eta_min = out.points[static_cast<std::size_t>(out.best)].delta_eta;
    } else {
        out.eta_min = std::numeric_limits<double>::infinity();
        out.delta_eta_min = std::numeric_limits<double>::infinity();
    }
    return out;
}

void ReadoutModel::validate() const
{
    require(std::isfinite(n0) && std::isfinite(n1) && n1 >= 0.0 && n0 > n1, "ReadoutModel: need n0 > n1 >= 0");
    require(std::isfinite(repeats) && repeats >= 1.0, "ReadoutModel: N_r must be >= 1");
    require(std::isfinite(t_readout) && t_readout >= 0.0, "ReadoutModel: t_r must be non-negative");
    require(std::isfinite(dead_time) && dead_time >= 0.0, "ReadoutModel: t_d must be non-negative");
}

double detection_factor(double n0, double n1, double theta)
{
    require(n0 != n1, "detection_factor: n0 and n1 must differ");
    const double d2 = (n0 - n1) * (n0 - n1);
    const double s = std::sin(theta / 2.0);
    require(s != 0.0, "detection_factor: theta = 2 pi k");
    const double inv2 = 1.0 + 0.5 + (-11.0 * n0 + 5.0 * n1) / (2.0 * d2) +
                        0.5 * std::cos(theta) * (1.0 - (n0 + n1) / d2) + 8.0 * n0 / (d2 * s * s);
    return 1.0 / std::sqrt(inv2);
}

double detection_factor_reduced(double n0, double n1)
{
    require(n0 != n1, "detection_factor_reduced: n0 and n1 must differ");
    return 1.0 / std::sqrt(1.0 + 3.0 * (n0 + n1) / ((n0 - n1) * (n0 - n1)));
}

double hyperfine_factor(double theta, double hyperfine, double t)
{
    return std::abs(1.0 + 2.0 * std::cos(2.0 * hyperfine * t * std::sin(theta / 2.0) / theta)) / 3.0;
}

double hyperfine_factor_ramsey(double hyperfine, double t) { return std::abs(1.0 + 2.0 * std::cos(hyperfine * t)) / 3.0; }

double repeated_readout_factor(double c, double repeats)
{
    require(c > 0.0 && c <= 1.0, "repeated_readout_factor: C must be in (0, 1]");
    require(repeats >= 1.0, "repeated_readout_factor: N_r must be >= 1");
    return 1.0 / std::sqrt(1.0 + (1.0 / (c * c) - 1.0) / repeats);
}

ReadoutFactors readout_factors(const ReadoutModel& r, double theta, double hyperfine, double t)
{
    r.validate();
    ReadoutFactors f;
    f.c = detection_factor(r.n0, r.n1, theta);
    f.c_a = hyperfine_factor(theta, hyperfine, t);
    f.hyperfine_singular = f.c_a <= 1e-12;
    if (f.hyperfine_singular)
        f.c_a = 0.0;
    f.c_nr = repeated_readout_factor(f.c, r.repeats);
    return f;
}

double corrected_sensitivity(double eta_ideal, double c, double c_a, double envelope, double t, double t_d,
                             double repeats, double t_readout)
{
    require(eta_ideal > 0.0 && envelope > 0.0 && t > 0.0, "corrected_sensitivity: eta, envelope and t must be positive");
    require(c > 0.0 && c <= 1.0 && c_a > 0.0 && c_a <= 1.0 + 1e-12, "corrected_sensitivity: factors must be in (0, 1]");
    require(t_d >= 0.0 && t_readout >= 0.0, "corrected_sensitivity: times must be non-negative");
    const double c_nr = repeated_readout_factor(c, repeats);
    return eta_ideal * envelope / (c_a * c_nr) * std::sqrt((t + t_d + repeats * t_readout) / t);
}

std::vector<EchoTime> optimal_interrogation_times(double theta, double rabi, double hyperfine, double horizon)
{
    require(theta > 0.0 && rabi > 0.0 && horizon > 0.0, "optimal_interrogation_times: invalid arguments");
    const double T = 2.0 * theta / rabi;
    const int n_max = static_cast<int>(std::floor(horizon / T * (1.0 + 1e-12)));
    std::vector<EchoTime> out;
    const double s = std::sin(theta / 2.0);
    if (hyperfine == 0.0 || s == 0.0) {
        for (int n = 1; n <= n_max; ++n)
            out.push_back({n, n * T, 1.0});
        return out;
    }
    const double spacing = pi * theta / (std::abs(hyperfine) * std::abs(s));
    for (int k = 1;; ++k) {
        const int n = static_cast<int>(std::lround(k * spacing / T));
        if (n > n_max)
            break;
        if (n < 1 || (!out.empty() && out.back().cycles == n))
            continue;
        out.push_back({n, n * T, hyperfine_factor(theta, hyperfine, n * T)});
    }
    return out;
}

double corrected_sensitivity_at(SequenceKind kind, double theta, double hyperfine, double t2_star,
                                const ReadoutModel& model, double t, double gamma)
{
    model.validate();
    double eta = 0.0;
    double envelope = 1.0;
    double c = 0.0;
    double c_a = 1.0;
    if (kind == SequenceKind::RotaryEcho) {
        eta = re_sensitivity_coefficient(theta) / (gamma * std::sqrt(t));
        if (t2_star > 0.0) {
            const double tp = t2_star * theta / (2.0 * std::abs(std::sin(theta / 2.0)));
            envelope = std::exp((t / tp) * (t / tp));
        }
        c = detection_factor(model.n0, model.n1, theta);
        c_a = hyperfine_factor(theta, hyperfine, t);
    } else if (kind == SequenceKind::Ramsey) {
        eta = 1.0 / (gamma * std::sqrt(t));
        if (t2_star > 0.0)
            envelope = std::exp((t / t2_star) * (t / t2_star));
        c = detection_factor_reduced(model.n0, model.n1);
        c_a = hyperfine_factor_ramsey(hyperfine, t);
    } else {
        throw std::invalid_argument("corrected_sensitivity_at: RE or Ramsey only");
    }
    if (c_a <= 1e-12 || !std::isfinite(envelope))
        return std::numeric_limits<double>::infinity();
    return corrected_sensitivity(eta, c, c_a, envelope, t, model.dead_time, model.repeats, model.t_readout);
}

ReadoutOptimum repeated_readout_optimum(SequenceKind kind, double theta, double rabi, double hyperfine,
                                        double t2_star, const ReadoutModel& model, double horizon, double gamma)
{
    require(horizon > 0.0, "repeated_readout_optimum: horizon must be positive");
    ReadoutOptimum best;
    best.eta = std::numeric_limits<double>::infinity();
    if (kind == SequenceKind::RotaryEcho) {
        require(rabi > 0.0, "repeated_readout_optimum: Omega must be positive");
        const double T = 2.0 * theta / rabi;
        const int n_max = static_cast<int>(std::floor(horizon / T));
        for (int n = 1; n <= n_max; ++n) {
            const double eta = corrected_sensitivity_at(kind, theta, hyperfine, t2_star, model, n * T, gamma);
            if (eta < best.eta)
                best = {n * T, eta, n};
        }
    } else {
        const std::size_t steps = 200000;
        for (std::size_t k = 1; k <= steps; ++k) {
            const double t = horizon * static_cast<double>(k) / static_cast<double>(steps);
            const double eta = corrected_sensitivity_at(kind, theta, hyperfine, t2_star, model, t, gamma);
            if (eta < best.eta)
                best = {t, eta, 0};
        }
    }
    return best;
}

} // namespace remag
