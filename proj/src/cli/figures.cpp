#include "cli/runner.hpp"

#include "remag/analytic_models.hpp"
#include "remag/magnetometry.hpp"
#include "remag/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>

namespace remag::cli {

namespace {

constexpr double mhz = two_pi * 1e6;
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::size_t trials_or(const ScenarioConfig& cfg, std::size_t preset)
{
    return cfg.trials_explicit ? static_cast<std::size_t>(cfg.trials) : preset;
}

std::uint64_t series_seed(const ScenarioConfig& cfg, std::uint64_t series) { return counter_bits(cfg.seed, series, 0); }

std::string theta_label(double theta)
{
    const double k = theta / pi;
    char buf[32];
    if (std::abs(k - 0.75) < 1e-12)
        return "3pi/4";
    std::snprintf(buf, sizeof buf, "%gpi", k);
    return buf;
}

// Preset 1b: ideal sensitivities with the static-bath correction.
void fig_1b(const ScenarioConfig&, OutputSet& out)
{
    const double rabi = 17 * mhz;
    const double t2 = 2.19e-6;
    const double horizon = 10e-6;
    Table t({"series", "theta_pi", "t_us", "eta_ideal", "eta"});
    t.notes.push_back("Omega/2pi = 17 MHz, T2* = 2.19 us, eta -> eta exp((t/T')^2); Rabi without envelope");
    nlohmann::json minima;
    for (double theta : {3 * pi / 4, pi, 5 * pi}) {
        const double T = 2 * theta / rabi;
        const double tp = t2 * theta / (2 * std::abs(std::sin(theta / 2)));
        double best = std::numeric_limits<double>::infinity(), best_t = 0;
        for (int n = 1; n * T <= horizon * (1 + 1e-12); ++n) {
            const double ti = n * T;
            const double ideal = sensitivity_ideal(SequenceKind::RotaryEcho, theta, rabi, ti).eta;
            const double eta = ideal * std::exp(std::pow(ti / tp, 2));
            t.add({"re_" + theta_label(theta), theta / pi, s_to_us(ti), ideal, eta});
            if (eta < best) {
                best = eta;
                best_t = ti;
            }
        }
        minima["re_" + theta_label(theta)] = {{"t_us", s_to_us(best_t)}, {"eta", best}};
    }
    double best = std::numeric_limits<double>::infinity(), best_t = 0;
    for (int k = 1; k <= 1000; ++k) {
        const double ti = horizon * k / 1000.0;
        const double ideal = sensitivity_ideal(SequenceKind::Ramsey, 0, 0, ti).eta;
        const double eta = ideal * std::exp(std::pow(ti / t2, 2));
        t.add({"ramsey", 0.0, s_to_us(ti), ideal, eta});
        if (eta < best) {
            best = eta;
            best_t = ti;
        }
    }
    minima["ramsey"] = {{"t_us", s_to_us(best_t)}, {"eta", best}};
    for (int k = 0; (2 * k + 1.5) * pi / rabi <= horizon; ++k) {
        const double ti = (2 * k + 1.5) * pi / rabi;
        const auto r = sensitivity_ideal(SequenceKind::Rabi, 0, rabi, ti);
        t.add({"rabi", 0.0, s_to_us(ti), r.eta, r.eta});
    }
    minima["rabi_asymptote"] = std::sqrt(2 * rabi) / nv_gamma_rad_per_s_tesla;
    out.csv("fig1b", t, {{"minima", minima}});
}

// Preset 1c: 55-cycle pi-RE with the nitrogen triplet under static bath noise,
// filtered for even harmonics and compared with the first-order model.
void fig_1c(const ScenarioConfig& cfg, OutputSet& out)
{
    const double theta = pi, rabi = 17 * mhz, t2 = 2.19e-6;
    const auto seq = PulseSequence::rotary_echo(theta, rabi, 55);
    const auto dets = hyperfine_triplet(0.17 * mhz, 2.14 * mhz);
    ScenarioConfig c = cfg;
    c.trials = static_cast<int>(trials_or(cfg, 200));
    c.seed = series_seed(cfg, 1);
    NoiseSpec noise;
    noise.axis = NoiseAxis::Z;
    noise.kind = NoiseKind::Static;
    noise.sigma = std::sqrt(2.0) / t2;
    const double dt = default_sample_dt(seq);
    const auto sim = simulate_trace(seq, dets, &noise, c, dt);
    const auto filt = harmonic_filter(sim, rabi, theta);
    SignalModelParams p;
    p.theta = theta;
    p.rabi = rabi;
    p.detunings = dets;
    p.t2_star = t_prime_re(theta, noise.sigma);
    const auto model = re_model_trace(p, dt, sim.size());
    // The notches leak into neighbouring bins, so the filtered trace is
    // compared with the model passed through the same filter.
    const auto model_f = harmonic_filter(model, rabi, theta).trace;
    Table t({"t_us", "signal", "std_error", "filtered", "model", "model_filtered"});
    t.notes.push_back("theta = pi, Omega/2pi = 17 MHz, n = 55, detunings {b, A+b, b-A}, b = 0.17 MHz, A = 2.14 MHz, "
                      "static bath T2* = 2.19 us");
    double r0 = 0, r1 = 0;
    for (std::size_t i = 0; i < sim.size(); ++i) {
        t.add({s_to_us(sim.time(i)), sim.values[i], sim.std_error[i], filt.trace.values[i], model.values[i],
               model_f.values[i]});
        r0 += std::pow(sim.values[i] - model.values[i], 2);
        r1 += std::pow(filt.trace.values[i] - model_f.values[i], 2);
    }
    const double m = static_cast<double>(sim.size());
    out.csv("fig1c", t,
            {{"trials", c.trials},
             {"rms_residual_raw", std::sqrt(r0 / m)},
             {"rms_residual_filtered", std::sqrt(r1 / m)},
             {"notches", filt.notches}});
}

struct Fig2Run {
    SignalTrace trace;
    SpectrumAnalysis sa;
};

Fig2Run fig2_trace(const ScenarioConfig& cfg, double b, double A, double duration, double noise, std::uint64_t stream)
{
    const double theta = pi, rabi = 17 * mhz;
    SignalModelParams p;
    p.theta = theta;
    p.rabi = rabi;
    p.detunings = hyperfine_triplet(b, A);
    const double dt = 1.0 / (8 * re_carrier_frequency(rabi, theta));
    Fig2Run r;
    r.trace = re_model_trace(p, dt, static_cast<std::size_t>(std::llround(duration / dt)));
    add_white_noise(r.trace, noise, cfg.seed, stream);
    ScenarioConfig c = cfg;
    c.oversample = 4;
    c.level = 0.01;
    c.max_peaks = std::max(cfg.max_peaks, 16);
    c.refine = true;
    r.sa = analyse_spectrum(r.trace, theta, rabi, c, true);
    return r;
}

const double fig2_noise = 0.0753;

void fig_2a(const ScenarioConfig& cfg, OutputSet& out)
{
    const double b = 0.17 * mhz, A = 2.14 * mhz;
    Table pg({"t_us", "f_mhz", "power"});
    Table pk({"t_us", "rank", "f_mhz", "power", "p_value", "significant", "snr", "delta_f_khz"});
    pg.notes.push_back("synthetic pi-RE, Omega/2pi = 17 MHz, b = 0.17 MHz, A = 2.14 MHz, white noise sigma = 0.0753");
    nlohmann::json est = nlohmann::json::object();
    for (int k = 1; k <= 5; ++k) {
        const double dur = k * 1e-6;
        const auto r = fig2_trace(cfg, b, A, dur, fig2_noise, static_cast<std::uint64_t>(k));
        const auto& P = r.sa.periodogram;
        for (std::size_t i = 0; i < P.frequency.size(); ++i)
            if (P.frequency[i] >= 12e6 && P.frequency[i] <= 22e6)
                pg.add({k * 1.0, P.frequency[i] * 1e-6, P.power[i]});
        for (const auto& p : r.sa.peaks)
            pk.add({k * 1.0, std::int64_t(p.rank), p.frequency * 1e-6, p.power, p.p_value, std::int64_t(p.significant),
                    p.snr, p.delta_f * 1e-3});
        if (k == 5 && r.sa.has_estimate) {
            const auto [bb, aa] = triplet_b_and_a(r.sa.refined);
            est = {{"b_mhz", bb * 1e-6},
                   {"A_mhz", aa * 1e-6},
                   {"significant_peaks",
                    std::count_if(r.sa.peaks.begin(), r.sa.peaks.end(), [](auto& p) { return p.significant; })},
                   {"refined", estimate_json(r.sa.refined)}};
        }
    }
    out.csv("fig2a_periodogram", pg);
    out.csv("fig2a_peaks", pk, {{"estimate_5us", est}});
}

void fig_2b(const ScenarioConfig& cfg, OutputSet& out)
{
    const double b = 0.064 * mhz, A = 2.14 * mhz;
    const auto r = fig2_trace(cfg, b, A, 15e-6, fig2_noise, 100);
    Table pg({"f_mhz", "power"});
    pg.notes.push_back("synthetic pi-RE, 15 us, b = 64 kHz, A = 2.14 MHz, white noise sigma = 0.0753");
    const auto& P = r.sa.periodogram;
    for (std::size_t i = 0; i < P.frequency.size(); ++i)
        if (std::abs(P.frequency[i] - 17e6) <= 0.3e6)
            pg.add({P.frequency[i] * 1e-6, P.power[i]});
    nlohmann::json s = nlohmann::json::object();
    if (r.sa.has_estimate) {
        const auto [bb, aa] = triplet_b_and_a(r.sa.refined);
        double unc = nan;
        for (const auto& p : r.sa.refined.pairs)
            if (p.detuning == bb)
                unc = p.uncertainty;
        s = {{"b_khz", bb * 1e-3}, {"b_uncertainty_khz", unc * 1e-3}, {"A_mhz", aa * 1e-6}};
    }
    out.csv("fig2b", pg, s);
}

// Signal of the triplet at a full-echo time with the static-bath envelope.
double fig3_signal(double theta, double rabi, double A, double t2, int n, double dw)
{
    const double t = n * 2 * theta / rabi;
    const double s = std::sin(theta / 2), c = std::cos(theta / 2);
    const double env = std::exp(-std::pow(t / (t2 * theta / (2 * std::abs(s))), 2));
    double osc = 0;
    for (double d : hyperfine_triplet(dw, A))
        osc += std::cos(2 * d * t * s / theta) / 3;
    return 0.5 * (1 + c * c + s * s * env * osc);
}

std::vector<EchoTime> fig3_times()
{
    auto times = optimal_interrogation_times(pi, 17 * mhz, 2.14 * mhz, 4e-6);
    return times;
}

void fig_3a(const ScenarioConfig&, OutputSet& out)
{
    const double theta = pi, rabi = 17 * mhz, A = 2.14 * mhz, t2 = 2.19e-6;
    Table t({"t_us", "cycles", "detuning_mhz", "signal"});
    t.notes.push_back("pi-RE, Omega/2pi = 17 MHz, A = 2.14 MHz, T2* = 2.19 us, at hyperfine-maximum full-echo times");
    for (const auto& e : fig3_times())
        for (int k = -400; k <= 400; ++k) {
            const double dw = two_pi * 1.5e6 * k / 400.0;
            t.add({s_to_us(e.t), std::int64_t(e.cycles), rad_to_mhz(dw), fig3_signal(theta, rabi, A, t2, e.cycles, dw)});
        }
    out.csv("fig3a", t);
}

void fig_3b(const ScenarioConfig&, OutputSet& out)
{
    const double theta = pi, rabi = 17 * mhz, A = 2.14 * mhz, t2 = 2.19e-6;
    const ReadoutModel model;
    Table t({"t_us", "cycles", "C_A", "eta_trace", "eta_trace_corrected", "eta_theory"});
    t.notes.push_back("eta_trace: minimum within one period of the numerically differentiated signal, binomial "
                      "readout; corrected divides by C; theory is eta exp((t/T')^2)/(C C_A)");
    const double c = detection_factor(model.n0, model.n1, theta);
    for (const auto& e : fig3_times()) {
        const double period = re_detuning_period(theta, e.t);
        auto grid = detuning_grid(period, 64);
        for (auto& g : grid)
            g -= period / 2;
        std::vector<double> sig;
        for (double dw : grid)
            sig.push_back(fig3_signal(theta, rabi, A, t2, e.cycles, dw));
        TraceSensitivityOptions o;
        o.interrogation_time = e.t;
        o.period = period;
        const auto r = sensitivity_from_trace(grid, sig, o);
        const double theory = corrected_sensitivity_at(SequenceKind::RotaryEcho, theta, A, t2, model, e.t);
        t.add({s_to_us(e.t), std::int64_t(e.cycles), e.c_a, r.eta_min, r.eta_min / c, theory});
    }
    out.csv("fig3b", t);
}

// Presets 4a-4c: full-echo (or fringe-peak) series under static and OU drive noise.
void fig_4(const ScenarioConfig& cfg, OutputSet& out, const std::string& name, SequenceKind kind, double theta,
           double duration)
{
    const double rabi = 19 * mhz;
    const double sigma = 0.05 * rabi, tau = 200e-9;
    const PulseSequence seq = kind == SequenceKind::Rabi
                                  ? PulseSequence::rabi_drive(rabi, duration)
                                  : PulseSequence::rotary_echo(theta, rabi, int(std::floor(duration * rabi / (2 * theta))));
    const double dt = kind == SequenceKind::Rabi ? two_pi / rabi : seq.cycle_period();
    Table t({"noise", "t_us", "mean", "std_error", "analytic", "z"});
    t.notes.push_back("drive noise sigma = 0.05 Omega, Omega/2pi = 19 MHz, OU tau_c = 200 ns, zero detuning");
    nlohmann::json summary;
    std::uint64_t stream = 10;
    for (NoiseKind nk : {NoiseKind::Static, NoiseKind::OrnsteinUhlenbeck}) {
        NoiseSpec spec;
        spec.axis = NoiseAxis::X;
        spec.kind = nk;
        spec.sigma = sigma;
        spec.tau_c = tau;
        spec.seed = series_seed(cfg, stream++);
        ScenarioConfig c = cfg;
        c.trials = static_cast<int>(trials_or(cfg, 1000));
        c.dt_max_us = 0;
        const auto mc = monte_carlo(seq, 0.0, spec, monte_carlo_options(c, dt));
        DecayScenario sc{kind, NoiseAxis::X, nk, sigma, tau, theta, rabi};
        std::size_t within = 0, n = 0;
        for (std::size_t i = 0; i < mc.mean.size(); ++i) {
            const double ti = mc.mean.time(i);
            const double a = decay_envelope(sc, ti).signal;
            const double se = mc.mean.std_error[i];
            const double z = se > 0 ? (mc.mean.values[i] - a) / se : (std::abs(mc.mean.values[i] - a) < 1e-9 ? 0.0 : nan);
            ++n;
            within += std::abs(z) <= 3.0;
            t.add({to_string(nk), s_to_us(ti), mc.mean.values[i], se, a, z});
        }
        summary[to_string(nk)] = {{"points", n}, {"within_3se", within}, {"trials", c.trials}};
    }
    out.csv(name, t, summary);
}

// Preset s4: Monte Carlo against the closed forms, (a) OU bath, (b) OU drive.
void fig_s4(const ScenarioConfig& cfg, OutputSet& out)
{
    const double rabi = 20 * mhz, sigma = 0.05 * rabi, tau = 200e-9;
    Table t({"panel", "series", "t_us", "mean", "std_error", "analytic", "z", "outside_validity"});
    t.notes.push_back("Omega/2pi = 20 MHz, sigma = 0.05 Omega, tau_c = 200 ns; panel a: OU bath, detuning 2 MHz; "
                      "panel b: OU drive, zero detuning");
    nlohmann::json summary;
    std::uint64_t stream = 20;
    auto series = [&](const std::string& panel, const std::string& label, const PulseSequence& seq, NoiseAxis axis,
                      double detuning, double dt) {
        NoiseSpec spec;
        spec.axis = axis;
        spec.kind = NoiseKind::OrnsteinUhlenbeck;
        spec.sigma = sigma;
        spec.tau_c = tau;
        spec.seed = series_seed(cfg, stream++);
        ScenarioConfig c = cfg;
        c.trials = static_cast<int>(trials_or(cfg, 1000));
        c.dt_max_us = 0;
        const auto mc = monte_carlo(seq, detuning, spec, monte_carlo_options(c, dt));
        DecayScenario sc{seq.kind, axis, NoiseKind::OrnsteinUhlenbeck, sigma, tau, seq.theta, rabi};
        std::size_t within = 0, n = 0;
        bool outside = false;
        for (std::size_t i = 0; i < mc.mean.size(); ++i) {
            const double ti = mc.mean.time(i);
            const auto dv = decay_envelope(sc, ti, detuning);
            outside = dv.outside_validity;
            const double se = mc.mean.std_error[i];
            const double z = se > 0 ? (mc.mean.values[i] - dv.signal) / se : 0.0;
            ++n;
            within += std::abs(z) <= 3.0;
            t.add({panel, label, s_to_us(ti), mc.mean.values[i], se, dv.signal, z, std::int64_t(outside)});
        }
        summary[panel + "_" + label] = {{"points", n}, {"within_3se", within}, {"outside_validity", outside}};
    };
    for (double theta : {3 * pi / 4, pi, 5 * pi}) {
        const int n = int(std::floor(2e-6 * rabi / (2 * theta)));
        const auto seq = PulseSequence::rotary_echo(theta, rabi, n);
        series("a", "re_" + theta_label(theta), seq, NoiseAxis::Z, 2 * mhz, seq.cycle_period());
    }
    series("a", "ramsey", PulseSequence::ramsey(1e-6), NoiseAxis::Z, 2 * mhz, 10e-9);
    for (double theta : {3 * pi / 4, pi, 5 * pi}) {
        const int n = int(std::floor(4e-6 * rabi / (2 * theta)));
        const auto seq = PulseSequence::rotary_echo(theta, rabi, n);
        series("b", "re_" + theta_label(theta), seq, NoiseAxis::X, 0.0, seq.cycle_period());
    }
    series("b", "rabi", PulseSequence::rabi_drive(rabi, 1e-6), NoiseAxis::X, 0.0, two_pi / rabi);
    out.csv("figs4", t, summary);
}

// Preset s5: corrected sensitivity with repeated readouts.
void fig_s5(const ScenarioConfig&, OutputSet& out)
{
    const double rabi = 17 * mhz, A = 2.14 * mhz, t2 = 3e-6;
    ReadoutModel m;
    m.repeats = 100;
    m.t_readout = 1.5e-6;
    Table t({"series", "t_us", "eta"});
    t.notes.push_back("N_r = 100, t_r = 1.5 us, T2* = 3 us, A = 2.14 MHz, Omega/2pi = 17 MHz");
    nlohmann::json summary;
    for (double theta : {pi, 11 * pi}) {
        const double T = 2 * theta / rabi;
        for (int n = 1; n * T <= 40e-6; ++n)
            t.add({"re_" + theta_label(theta), s_to_us(n * T),
                   corrected_sensitivity_at(SequenceKind::RotaryEcho, theta, A, t2, m, n * T)});
        const auto o = repeated_readout_optimum(SequenceKind::RotaryEcho, theta, rabi, A, t2, m, 40e-6);
        summary["re_" + theta_label(theta)] = {{"t_us", s_to_us(o.t)}, {"eta", o.eta}, {"cycles", o.cycles}};
    }
    for (int k = 1; k <= 2000; ++k) {
        const double ti = 10e-6 * k / 2000.0;
        t.add({"ramsey", s_to_us(ti), corrected_sensitivity_at(SequenceKind::Ramsey, 0, A, t2, m, ti)});
    }
    const auto o = repeated_readout_optimum(SequenceKind::Ramsey, 0, 0, A, t2, m, 10e-6);
    summary["ramsey"] = {{"t_us", s_to_us(o.t)}, {"eta", o.eta}};
    out.csv("figs5", t, summary);
}

using Preset = std::function<void(const ScenarioConfig&, OutputSet&)>;

const std::map<std::string, Preset>& presets()
{
    static const std::map<std::string, Preset> p{
        {"1b", fig_1b},
        {"1c", fig_1c},
        {"2a", fig_2a},
        {"2b", fig_2b},
        {"3a", fig_3a},
        {"3b", fig_3b},
        {"4a", [](auto& c, auto& o) { fig_4(c, o, "fig4a", SequenceKind::Rabi, 0.0, 1e-6); }},
        {"4b", [](auto& c, auto& o) { fig_4(c, o, "fig4b", SequenceKind::RotaryEcho, 5 * pi, 4e-6); }},
        {"4c", [](auto& c, auto& o) { fig_4(c, o, "fig4c", SequenceKind::RotaryEcho, pi, 4e-6); }},
        {"s4", fig_s4},
        {"s5", fig_s5},
    };
    return p;
}

} // namespace

std::pair<double, double> triplet_b_and_a(const DetuningEstimate& e)
{
    std::vector<double> d;
    for (std::size_t i = 0; i < e.pairs.size() && i < 3; ++i)
        d.push_back(e.pairs[i].detuning);
    std::sort(d.begin(), d.end());
    if (d.size() < 3)
        return {d.empty() ? nan : d[0], nan};
    return {d[0], 0.5 * (d[1] + d[2])};
}

const std::vector<std::string>& figure_ids()
{
    static const std::vector<std::string> ids{"1b", "1c", "2a", "2b", "3a", "3b", "4a", "4b", "4c", "s4", "s5"};
    return ids;
}

void run_figure(const std::string& id, const ScenarioConfig& cfg, OutputSet& out)
{
    const auto it = presets().find(id);
    if (it == presets().end())
        throw ConfigError("figure: unknown preset '" + id + "'");
    it->second(cfg, out);
}

} // namespace remag::cli
