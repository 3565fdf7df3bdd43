#include "remag/spin_dynamics.hpp"

#include "remag/noise.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <stdexcept>
#include <string>

namespace remag {

namespace {

void require(bool ok, const char* what)
{
    if (!ok)
        throw std::invalid_argument(what);
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

Unitary2d x_rotation(double angle) { return su2_exp(0.0, 0.5, 0.0, 0.0, angle); }

} // namespace

void NVSystemSpec::validate() const
{
    require(positive_finite(zero_field_splitting), "NVSystemSpec: zero-field splitting must be positive");
    require(positive_finite(static_field_gauss), "NVSystemSpec: static field must be positive");
    require(positive_finite(gyromagnetic_ratio), "NVSystemSpec: gyromagnetic ratio must be positive");
    require(positive_finite(hyperfine), "NVSystemSpec: hyperfine coupling must be positive");
    require(resonance() > 0.0, "NVSystemSpec: resonance must be positive");
}

const char* to_string(SequenceKind kind)
{
    switch (kind) {
    case SequenceKind::RotaryEcho: return "rotary_echo";
    case SequenceKind::Rabi: return "rabi";
    case SequenceKind::Ramsey: return "ramsey";
    }
    return "unknown";
}

PulseSequence PulseSequence::rotary_echo(double theta, double rabi, int cycles)
{
    PulseSequence s;
    s.kind = SequenceKind::RotaryEcho;
    s.theta = theta;
    s.rabi = rabi;
    s.cycles = cycles;
    s.validate();
    return s;
}

PulseSequence PulseSequence::rabi_drive(double rabi, double duration)
{
    PulseSequence s;
    s.kind = SequenceKind::Rabi;
    s.rabi = rabi;
    s.duration = duration;
    s.validate();
    return s;
}

PulseSequence PulseSequence::ramsey(double duration, double rabi)
{
    PulseSequence s;
    s.kind = SequenceKind::Ramsey;
    s.duration = duration;
    s.rabi = rabi;
    s.validate();
    return s;
}

double PulseSequence::cycle_period() const { return 2.0 * theta / rabi; }

double PulseSequence::total_duration() const
{
    if (kind == SequenceKind::RotaryEcho)
        return cycle_period() * static_cast<double>(cycles);
    return duration;
}

void PulseSequence::validate() const
{
    switch (kind) {
    case SequenceKind::RotaryEcho:
        require(positive_finite(theta), "PulseSequence: theta must be positive");
        require(positive_finite(rabi), "PulseSequence: Rabi frequency must be positive");
        require(cycles >= 1, "PulseSequence: rotary echo needs at least one cycle");
        break;
    case SequenceKind::Rabi:
        require(positive_finite(rabi), "PulseSequence: Rabi frequency must be positive");
        require(positive_finite(duration), "PulseSequence: duration must be positive");
        break;
    case SequenceKind::Ramsey:
        require(positive_finite(duration), "PulseSequence: duration must be positive");
        require(std::isfinite(rabi) && rabi >= 0.0, "PulseSequence: Rabi frequency must be non-negative");
        break;
    }
}

double DriveWaveform::max_amplitude() const
{
    double m = 0.0;
    for (double a : amplitudes)
        m = std::max(m, std::abs(a));
    return m;
}

void DriveWaveform::validate() const
{
    require(!amplitudes.empty(), "DriveWaveform: no segments");
    require(breakpoints.size() == amplitudes.size() + 1, "DriveWaveform: breakpoints/amplitudes size mismatch");
    require(breakpoints.front() == 0.0, "DriveWaveform: first breakpoint must be 0");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        require(breakpoints[i + 1] > breakpoints[i], "DriveWaveform: breakpoints must be strictly increasing");
    for (double a : amplitudes)
        require(std::isfinite(a), "DriveWaveform: non-finite amplitude");
    require(std::isfinite(detuning), "DriveWaveform: non-finite detuning");
}

DriveWaveform build_waveform(const PulseSequence& seq, double detuning)
{
    seq.validate();
    require(std::isfinite(detuning), "build_waveform: non-finite detuning");
    DriveWaveform w;
    w.detuning = detuning;
    switch (seq.kind) {
    case SequenceKind::RotaryEcho: {
        const double h = seq.half_echo();
        const std::size_t n = 2 * static_cast<std::size_t>(seq.cycles);
        w.breakpoints.reserve(n + 1);
        w.amplitudes.reserve(n);
        for (std::size_t k = 0; k <= n; ++k)
            w.breakpoints.push_back(h * static_cast<double>(k));
        for (std::size_t k = 0; k < n; ++k)
            w.amplitudes.push_back(k % 2 == 0 ? seq.rabi : -seq.rabi);
        break;
    }
    case SequenceKind::Rabi:
        w.breakpoints = {0.0, seq.duration};
        w.amplitudes = {seq.rabi};
        break;
    case SequenceKind::Ramsey:
        w.breakpoints = {0.0, seq.duration};
        w.amplitudes = {0.0};
        w.bracket_angle = pi / 2.0;
        break;
    }
    return w;
}

double default_dt_max(const DriveWaveform& wave, double tau_c)
{
    double dt = wave.duration() / 1000.0;
    const double w = wave.max_amplitude();
    if (w > 0.0)
        dt = two_pi / w / 200.0;
    if (tau_c > 0.0)
        dt = std::min(dt, tau_c / 20.0);
    return dt;
}

PropagationPlan::PropagationPlan(const DriveWaveform& wave, const PropagateOptions& opts) : wave_(wave)
{
    wave_.validate();
    dt_max_ = opts.dt_max > 0.0 ? opts.dt_max : default_dt_max(wave_);
    require(std::isfinite(dt_max_) && dt_max_ > 0.0, "propagate: dt_max must be positive");

    const auto& bp = wave_.breakpoints;
    const double first_seg = bp[1] - bp[0];
    if (opts.sample_dt > 0.0) {
        sample_dt_ = opts.sample_dt;
    } else {
        for (std::size_t i = 1; i + 1 < bp.size(); ++i)
            require(std::abs((bp[i + 1] - bp[i]) - first_seg) <= 1e-9 * first_seg,
                    "propagate: sample_dt required for non-uniform waveforms");
        sample_dt_ = first_seg;
    }
    const double duration = wave_.duration();
    double min_seg = first_seg;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i)
        min_seg = std::min(min_seg, bp[i + 1] - bp[i]);
    const double tol = 1e-9 * std::min(sample_dt_, min_seg);

    sample_count_ = static_cast<std::size_t>(std::floor((duration + tol) / sample_dt_)) + 1;
    record_initial_ = true;

    // Merge segment breakpoints and sample instants into one event list.
    std::size_t next_bp = 1;
    std::size_t next_sample = 1;
    double cur = 0.0;
    while (next_bp < bp.size()) {
        const double tb = bp[next_bp];
        const double ts = next_sample < sample_count_ ? sample_dt_ * static_cast<double>(next_sample)
                                                      : std::numeric_limits<double>::infinity();
        bool hit_bp = false;
        bool hit_sample = false;
        double next = 0.0;
        if (std::abs(tb - ts) <= tol) {
            next = tb;
            hit_bp = hit_sample = true;
        } else if (tb < ts) {
            next = tb;
            hit_bp = true;
        } else {
            next = ts;
            hit_sample = true;
        }
        Block b{};
        b.amplitude = wave_.amplitudes[next_bp - 1];
        b.t_begin = cur;
        const double len = next - cur;
        if (len > tol) {
            b.count = static_cast<std::size_t>(std::ceil(len / dt_max_ - 1e-9));
            b.count = std::max<std::size_t>(b.count, 1);
            b.dt = len / static_cast<double>(b.count);
        } else {
            b.count = 0;
            b.dt = 0.0;
        }
        const double delta = wave_.detuning;
        b.noiseless = su2_exp(0.5 * delta, 0.5 * b.amplitude, 0.0, -0.5 * delta, std::max(len, 0.0));
        b.sample = hit_sample ? static_cast<std::ptrdiff_t>(next_sample) : -1;
        total_steps_ += b.count;
        if (total_steps_ > opts.max_steps)
            throw std::length_error("propagate: step count exceeds max_steps (" + std::to_string(opts.max_steps) + ")");
        blocks_.push_back(b);
        if (hit_sample)
            ++next_sample;
        if (hit_bp)
            ++next_bp;
        cur = next;
    }
    pre_ = x_rotation(wave_.bracket_angle);
    post_ = x_rotation(-wave_.bracket_angle);
}

void PropagationPlan::run_into(const NoisePath* noise, double* out) const
{
    const auto population = [this](const State2d& psi) {
        return std::norm(post_(0, 0) * psi(0) + post_(0, 1) * psi(1));
    };
    State2d psi = pre_.col(0);
    if (record_initial_)
        out[0] = population(psi);

    // A zero-strength path is the noiseless problem; take the exact block route.
    if (noise == nullptr || noise->spec.sigma == 0.0) {
        for (const Block& b : blocks_) {
            psi = b.noiseless * psi;
            if (b.sample >= 0)
                out[b.sample] = population(psi);
        }
        return;
    }

    require(noise->dt > 0.0 && noise->dt <= dt_max_ * (1.0 + 1e-9),
            "propagate: noise path must be sampled at least as finely as dt_max");
    require(noise->end() + 1e-12 * noise->dt >= wave_.duration(), "propagate: noise path shorter than waveform");
    for (double v : noise->values)
        if (!std::isfinite(v))
            throw std::invalid_argument("propagate: non-finite noise sample");

    const bool on_z = noise->spec.axis == NoiseAxis::Z;
    const double delta0 = wave_.detuning;
    const double inv_dt = 1.0 / noise->dt;
    const std::size_t last = noise->values.size() - 1;
    for (const Block& b : blocks_) {
        for (std::size_t j = 0; j < b.count; ++j) {
            const double t_mid = b.t_begin + (static_cast<double>(j) + 0.5) * b.dt;
            const auto cell = std::min(static_cast<std::size_t>(t_mid * inv_dt), last);
            const double v = noise->values[cell];
            double w = b.amplitude;
            double delta = delta0;
            if (on_z)
                delta += v;
            else if (w != 0.0)
                w += w > 0.0 ? v : -v;
            psi = su2_exp(0.5 * delta, 0.5 * w, 0.0, -0.5 * delta, b.dt) * psi;
        }
        if (b.sample >= 0)
            out[b.sample] = population(psi);
    }
}

SignalTrace PropagationPlan::run(const NoisePath* noise) const
{
    SignalTrace trace;
    trace.t0 = 0.0;
    trace.dt = sample_dt_;
    trace.values.assign(sample_count_, 0.0);
    run_into(noise, trace.values.data());
    return trace;
}

Unitary2d PropagationPlan::propagator() const
{
    Unitary2d u = Unitary2d::Identity();
    for (const Block& b : blocks_)
        u = b.noiseless * u;
    return u;
}

SignalTrace propagate(const DriveWaveform& wave, const NoisePath* noise, const PropagateOptions& opts)
{
    PropagateOptions o = opts;
    if (o.dt_max <= 0.0) {
        double tau = 0.0;
        if (noise != nullptr && noise->spec.kind == NoiseKind::OrnsteinUhlenbeck)
            tau = noise->spec.tau_c;
        o.dt_max = default_dt_max(wave, tau);
    }
    return PropagationPlan(wave, o).run(noise);
}

double triangular_wave(double theta, double rabi, double t)
{
    require(positive_finite(theta) && positive_finite(rabi), "triangular_wave: theta and Omega must be positive");
    require(std::isfinite(t) && t >= 0.0, "triangular_wave: t must be non-negative");
    const double h = theta / rabi;
    const double tm = std::fmod(t, 2.0 * h);
    return tm <= h ? tm : 2.0 * h - tm;
}

Unitary2d u0_on_resonance(double theta, double rabi, double t)
{
    const double angle = rabi * triangular_wave(theta, rabi, t);
    return x_rotation(angle);
}

Matrix2c<double> EffectiveHamiltonian::matrix() const
{
    return offset * Matrix2c<double>::Identity() + hx * pauli_x<double>() + hy * pauli_y<double>() +
           hz * pauli_z<double>();
}

double EffectiveHamiltonian::norm() const { return std::sqrt(hx * hx + hy * hy + hz * hz); }

EffectiveHamiltonian avg_hamiltonian_first_order(double theta, double detuning)
{
    require(positive_finite(theta), "avg_hamiltonian_first_order: theta must be positive");
    const double s = std::sin(theta / 2.0);
    const double c = std::cos(theta / 2.0);
    EffectiveHamiltonian h;
    h.offset = 0.5 * detuning;
    h.hx = 0.0;
    h.hy = detuning / theta * s * s;
    h.hz = -detuning / theta * s * c;
    return h;
}

Unitary2d first_order_propagator(double theta, double rabi, double detuning, int n)
{
    require(positive_finite(rabi), "first_order_propagator: Omega must be positive");
    require(n >= 0, "first_order_propagator: n must be non-negative");
    const EffectiveHamiltonian h = avg_hamiltonian_first_order(theta, detuning);
    const double t = static_cast<double>(n) * 2.0 * theta / rabi;
    return su2_exp(-h.offset, -h.hx, -h.hy, -h.hz, t);
}

} // namespace remag
