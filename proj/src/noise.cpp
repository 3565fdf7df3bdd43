#include "remag/noise.hpp"

#include "remag/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>
#include <thread>

namespace remag {

double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0)
            return -std::numeric_limits<double>::infinity();
        if (p == 1.0)
            return std::numeric_limits<double>::infinity();
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                    45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                    21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double x;
    if (r <= 5.0) {
        r -= 1.6;
        x = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734) /
            (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                 0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772) /
            (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                 7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -x : x;
}

const char* to_string(NoiseAxis axis) { return axis == NoiseAxis::Z ? "z" : "x"; }
const char* to_string(NoiseKind kind) { return kind == NoiseKind::Static ? "static" : "ou"; }

void NoiseSpec::validate() const
{
    if (!(std::isfinite(sigma) && sigma >= 0.0))
        throw std::invalid_argument("NoiseSpec: sigma must be finite and non-negative");
    if (kind == NoiseKind::OrnsteinUhlenbeck && !(std::isfinite(tau_c) && tau_c > 0.0))
        throw std::invalid_argument("NoiseSpec: tau_c must be positive for OU noise");
}

double NoisePath::value_at(double t) const
{
    if (values.empty())
        return 0.0;
    if (t <= 0.0)
        return values.front();
    const auto cell = static_cast<std::size_t>(t / dt);
    return values[std::min(cell, values.size() - 1)];
}

void sample_path_into(const NoiseSpec& spec, double t_end, double dt, std::uint64_t trial_index, NoisePath& path)
{
    spec.validate();
    if (!(std::isfinite(t_end) && t_end > 0.0))
        throw std::invalid_argument("sample_path: t_end must be positive");
    if (!(std::isfinite(dt) && dt > 0.0))
        throw std::invalid_argument("sample_path: dt must be positive");
    if (spec.kind == NoiseKind::OrnsteinUhlenbeck && dt > spec.tau_c / 20.0 * (1.0 + 1e-9))
        throw std::invalid_argument("sample_path: dt exceeds tau_c/20");
    const double cells = std::ceil(t_end / dt);
    if (cells > 1e9)
        throw std::length_error("sample_path: grid too large");
    const auto n = static_cast<std::size_t>(cells) + 1;

    path.dt = dt;
    path.spec = spec;
    path.values.resize(n);
    const std::uint64_t seed = spec.seed;
    if (spec.sigma == 0.0) {
        std::fill(path.values.begin(), path.values.end(), 0.0);
        return;
    }
    if (spec.kind == NoiseKind::Static) {
        std::fill(path.values.begin(), path.values.end(), spec.sigma * counter_normal(seed, trial_index, 0));
        return;
    }
    const double a = std::exp(-dt / spec.tau_c);
    const double b = spec.sigma * std::sqrt(-std::expm1(-2.0 * dt / spec.tau_c));
    double x = spec.sigma * counter_normal(seed, trial_index, 0);
    path.values[0] = x;
    for (std::size_t k = 1; k < n; ++k) {
        x = a * x + b * counter_normal(seed, trial_index, k);
        path.values[k] = x;
    }
}

NoisePath sample_path(const NoiseSpec& spec, double t_end, double dt, std::uint64_t trial_index)
{
    NoisePath p;
    sample_path_into(spec, t_end, dt, trial_index, p);
    return p;
}

void add_white_noise(SignalTrace& trace, double sigma, std::uint64_t seed, std::uint64_t stream)
{
    if (!(std::isfinite(sigma) && sigma >= 0.0))
        throw std::invalid_argument("add_white_noise: sigma must be non-negative");
    for (std::size_t i = 0; i < trace.values.size(); ++i)
        trace.values[i] += sigma * counter_normal(seed, stream, i);
}

void RunningStats::push(double x)
{
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
}

void RunningStats::merge(const RunningStats& o)
{
    if (o.n_ == 0)
        return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double n = na + nb;
    const double d = o.mean_ - mean_;
    mean_ += d * nb / n;
    m2_ += o.m2_ + d * d * na * nb / n;
    n_ += o.n_;
}

double RunningStats::variance() const { return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1); }

double RunningStats::std_error() const { return n_ < 1 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_)); }

namespace {

PropagateOptions resolve_options(const DriveWaveform& wave, const NoiseSpec& spec, PropagateOptions p)
{
    if (p.dt_max <= 0.0)
        p.dt_max = default_dt_max(wave, spec.kind == NoiseKind::OrnsteinUhlenbeck ? spec.tau_c : 0.0);
    return p;
}

} // namespace

EnsembleResult monte_carlo(const PulseSequence& seq, double detuning, const NoiseSpec& spec,
                           const MonteCarloOptions& opts)
{
    if (opts.trials < 1)
        throw std::invalid_argument("monte_carlo: trials must be >= 1");
    if (opts.chunk < 1)
        throw std::invalid_argument("monte_carlo: chunk must be >= 1");
    spec.validate();
    const DriveWaveform wave = build_waveform(seq, detuning);
    const PropagationPlan plan(wave, resolve_options(wave, spec, opts.propagate));
    const std::size_t m = plan.size();
    const double t_end = wave.duration();
    const double path_dt = plan.dt_max();

    const std::size_t n_chunks = (opts.trials + opts.chunk - 1) / opts.chunk;
    unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_chunks));

    std::vector<RunningStats> total(m);
    // Chunks are reduced in index order, one window at a time, so the
    // result never depends on which thread ran which chunk.
    const std::size_t window = std::max<std::size_t>(4 * threads, 16);
    std::vector<std::vector<RunningStats>> partial(std::min(window, n_chunks), std::vector<RunningStats>(m));

    for (std::size_t base = 0; base < n_chunks; base += window) {
        const std::size_t count = std::min(window, n_chunks - base);
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        auto worker = [&] {
            NoisePath path;
            std::vector<double> trace(m);
            try {
                for (std::size_t c = next++; c < count && !failed; c = next++) {
                    auto& acc = partial[c];
                    std::fill(acc.begin(), acc.end(), RunningStats{});
                    const std::size_t first = (base + c) * opts.chunk;
                    const std::size_t last = std::min(first + opts.chunk, opts.trials);
                    for (std::size_t trial = first; trial < last; ++trial) {
                        sample_path_into(spec, t_end, path_dt, trial, path);
                        plan.run_into(&path, trace.data());
                        for (std::size_t i = 0; i < m; ++i) {
                            if (!std::isfinite(trace[i]))
                                throw std::runtime_error("monte_carlo: non-finite signal");
                            acc[i].push(trace[i]);
                        }
                    }
                }
            } catch (...) {
                if (!failed.exchange(true))
                    failure = std::current_exception();
            }
        };
        if (threads <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (unsigned k = 0; k < threads; ++k)
                pool.emplace_back(worker);
            for (auto& t : pool)
                t.join();
        }
        if (failure)
            std::rethrow_exception(failure);
        for (std::size_t c = 0; c < count; ++c)
            for (std::size_t i = 0; i < m; ++i)
                total[i].merge(partial[c][i]);
    }

    EnsembleResult r;
    r.trials = opts.trials;
    r.spec = spec;
    r.seed = spec.seed;
    r.mean.t0 = 0.0;
    r.mean.dt = plan.sample_dt();
    r.mean.trials = opts.trials;
    r.mean.values.resize(m);
    r.mean.std_error.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        r.mean.values[i] = total[i].mean();
        r.mean.std_error[i] = total[i].std_error();
    }
    return r;
}

void dump_trials_csv(const std::string& file, const PulseSequence& seq, double detuning, const NoiseSpec& spec,
                     const MonteCarloOptions& opts, std::size_t max_trials)
{
    spec.validate();
    const DriveWaveform wave = build_waveform(seq, detuning);
    const PropagationPlan plan(wave, resolve_options(wave, spec, opts.propagate));
    std::ofstream out(file);
    if (!out)
        throw std::runtime_error("dump_trials_csv: cannot open " + file);
    out << std::setprecision(17);
    out << "trial,series,index,t_s,value\n";
    const std::size_t n = std::min(max_trials, opts.trials);
    for (std::size_t trial = 0; trial < n; ++trial) {
        const NoisePath path = sample_path(spec, wave.duration(), plan.dt_max(), trial);
        for (std::size_t k = 0; k < path.values.size(); ++k)
            out << trial << ",path," << k << ',' << path.dt * static_cast<double>(k) << ',' << path.values[k] << '\n';
        const SignalTrace tr = plan.run(&path);
        for (std::size_t k = 0; k < tr.size(); ++k)
            out << trial << ",signal," << k << ',' << tr.time(k) << ',' << tr.values[k] << '\n';
    }
    if (!out)
        throw std::runtime_error("dump_trials_csv: write failed for " + file);
}

} // namespace remag
