#include "cli/runner.hpp"

#include "remag/analytic_models.hpp"
#include "remag/calcium.hpp"
#include "remag/magnetometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace remag::cli {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

SignalModelParams model_params(const ScenarioConfig& cfg)
{
    SignalModelParams p;
    p.theta = cfg.theta;
    p.rabi = cfg.rabi();
    p.detunings = cfg.detunings();
    return p;
}

double model_value(const ScenarioConfig& cfg, double t)
{
    const auto dets = cfg.detunings();
    switch (cfg.sequence_kind()) {
    case SequenceKind::RotaryEcho: {
        auto p = model_params(cfg);
        p.t = t;
        return re_signal(p);
    }
    case SequenceKind::Ramsey: {
        double s = 0.0;
        for (double d : dets)
            s += 0.5 * (1.0 + std::cos(d * t));
        return s / static_cast<double>(dets.size());
    }
    case SequenceKind::Rabi: {
        double s = 0.0;
        for (double d : dets)
            s += rabi_signal(cfg.rabi(), d, t);
        return s / static_cast<double>(dets.size());
    }
    }
    return nan;
}

double trace_sample_dt(const ScenarioConfig& cfg, const PulseSequence& seq)
{
    return cfg.sample_dt_us > 0.0 ? us_to_s(cfg.sample_dt_us) : default_sample_dt(seq);
}

void cmd_simulate(const ScenarioConfig& cfg, OutputSet& out)
{
    const auto seq = cfg.sequence();
    const double dt = trace_sample_dt(cfg, seq);
    const NoiseSpec noise = cfg.noise();
    const auto trace = simulate_trace(seq, cfg.detunings(), cfg.noisy() ? &noise : nullptr, cfg, dt);
    Table t({"t_us", "population", "std_error", "model"});
    for (std::size_t i = 0; i < trace.size(); ++i)
        t.add({s_to_us(trace.time(i)), trace.values[i], trace.std_error.empty() ? 0.0 : trace.std_error[i],
               model_value(cfg, trace.time(i))});
    nlohmann::json summary;
    summary["sequence"] = to_string(seq.kind);
    summary["samples"] = trace.size();
    summary["trials"] = trace.trials;
    summary["noise"] = cfg.noisy() ? nlohmann::json{{"axis", to_string(noise.axis)}, {"kind", to_string(noise.kind)},
                                                    {"sigma_mhz", rad_to_mhz(noise.sigma)}, {"tau_c_us", cfg.tau_c_us}}
                                   : nlohmann::json("none");
    out.csv("trace", t, summary);
}

void cmd_spectrum(const ScenarioConfig& cfg, OutputSet& out)
{
    const bool re = cfg.sequence_kind() == SequenceKind::RotaryEcho;
    const double t_total = us_to_s(cfg.spectrum_duration_us);
    SignalTrace trace;
    if (cfg.source == "model" && !re)
        throw ConfigError("spectrum.source: the model source is available for rotary echoes only");
    if (re) {
        const double T = 2.0 * cfg.theta / cfg.rabi();
        const auto seq = PulseSequence::rotary_echo(cfg.theta, cfg.rabi(), std::max(1, int(std::ceil(t_total / T))));
        const double dt = trace_sample_dt(cfg, seq);
        const auto count = static_cast<std::size_t>(std::llround(t_total / dt));
        if (cfg.source == "model") {
            trace = re_model_trace(model_params(cfg), dt, count);
        } else {
            const NoiseSpec noise = cfg.noise();
            trace = simulate_trace(seq, cfg.detunings(), cfg.noisy() ? &noise : nullptr, cfg, dt);
            trace.values.resize(std::min(count, trace.size()));
            trace.std_error.clear();
        }
    } else {
        auto c = cfg;
        c.duration_us = cfg.spectrum_duration_us;
        const auto seq = c.sequence();
        const NoiseSpec noise = c.noise();
        trace = simulate_trace(seq, c.detunings(), c.noisy() ? &noise : nullptr, c, trace_sample_dt(c, seq));
        trace.std_error.clear();
    }
    if (cfg.white_noise > 0.0)
        add_white_noise(trace, cfg.white_noise, cfg.seed, 0);

    SignalTrace analysed = trace;
    std::vector<double> filtered;
    if (re && cfg.filter && std::fmod(cfg.theta, two_pi) > 1e-9) {
        auto f = harmonic_filter(trace, cfg.rabi(), cfg.theta);
        for (const auto& w : f.warnings)
            out.warn(w);
        analysed = f.trace;
        filtered = f.trace.values;
    }
    const auto sa = analyse_spectrum(analysed, cfg.theta, cfg.rabi(), cfg, re);
    for (const auto& w : sa.warnings)
        out.warn(w);

    Table tr({"t_us", "value", "filtered"});
    for (std::size_t i = 0; i < trace.size(); ++i)
        tr.add({s_to_us(trace.time(i)), trace.values[i], filtered.empty() ? trace.values[i] : filtered[i]});
    out.csv("trace", tr);

    Table pg({"f_mhz", "power"});
    for (std::size_t k = 0; k < sa.periodogram.frequency.size(); ++k)
        pg.add({sa.periodogram.frequency[k] * 1e-6, sa.periodogram.power[k]});
    out.csv("periodogram", pg, {{"samples", sa.periodogram.samples}, {"duration_us", s_to_us(sa.periodogram.duration())}});

    Table pk({"rank", "f_mhz", "power", "p_value", "significant", "snr", "delta_f_khz"});
    for (const auto& p : sa.peaks)
        pk.add({std::int64_t(p.rank), p.frequency * 1e-6, p.power, p.p_value, std::int64_t(p.significant), p.snr,
                p.delta_f * 1e-3});
    out.csv("peaks", pk);

    nlohmann::json summary;
    summary["significant_peaks"] = std::count_if(sa.peaks.begin(), sa.peaks.end(), [](auto& p) { return p.significant; });
    if (sa.has_estimate) {
        summary["coarse"] = estimate_json(sa.coarse);
        summary["refined"] = estimate_json(sa.refined);
    }
    out.json("detunings", summary);
}

void cmd_sensitivity(const ScenarioConfig& cfg, OutputSet& out)
{
    const auto kind = cfg.sequence_kind();
    const auto model = cfg.readout();
    const double t2 = us_to_s(cfg.t2_star_us);
    const double tmin = us_to_s(cfg.t_min_us);
    const double tmax = us_to_s(cfg.t_max_us);
    std::vector<double> times;
    std::vector<int> cycles;
    if (kind == SequenceKind::RotaryEcho) {
        const double T = 2.0 * cfg.theta / cfg.rabi();
        const int n0 = std::max(1, int(std::ceil(tmin / T - 1e-9)));
        const int n1 = int(std::floor(tmax / T + 1e-9));
        if (n1 < n0)
            throw ConfigError("sensitivity: no full-echo time inside [t_min_us, t_max_us]");
        const int stride = std::max(1, (n1 - n0 + 1 + cfg.points - 1) / cfg.points);
        for (int n = n0; n <= n1; n += stride) {
            times.push_back(n * T);
            cycles.push_back(n);
        }
    } else {
        for (int k = 0; k < cfg.points; ++k) {
            times.push_back(tmin + (tmax - tmin) * k / (cfg.points - 1));
            cycles.push_back(0);
        }
    }
    Table t({"t_us", "cycles", "eta_ideal", "C", "C_A", "C_Nr", "envelope", "eta_corrected"});
    double best = std::numeric_limits<double>::infinity();
    double best_t = nan;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double ti = times[i];
        const auto ideal = sensitivity_ideal(kind, cfg.theta, cfg.rabi(), ti);
        double c = nan, ca = nan, cnr = nan, env = nan, corr = nan;
        if (kind == SequenceKind::RotaryEcho) {
            const auto f = readout_factors(model, cfg.theta, cfg.hyperfine(), ti);
            c = f.c;
            ca = f.c_a;
            cnr = f.c_nr;
            const double tp = t2 > 0 ? t2 * cfg.theta / (2.0 * std::abs(std::sin(cfg.theta / 2.0))) : 0.0;
            env = t2 > 0 ? std::exp(std::pow(ti / tp, 2)) : 1.0;
            corr = corrected_sensitivity_at(kind, cfg.theta, cfg.hyperfine(), t2, model, ti);
        } else if (kind == SequenceKind::Ramsey) {
            c = detection_factor_reduced(model.n0, model.n1);
            ca = hyperfine_factor_ramsey(cfg.hyperfine(), ti);
            cnr = repeated_readout_factor(c, model.repeats);
            env = t2 > 0 ? std::exp(std::pow(ti / t2, 2)) : 1.0;
            corr = corrected_sensitivity_at(kind, 0.0, cfg.hyperfine(), t2, model, ti);
        }
        if (corr < best) {
            best = corr;
            best_t = ti;
        }
        t.add({s_to_us(ti), std::int64_t(cycles[i]), ideal.eta, c, ca, cnr, env, corr});
    }
    nlohmann::json summary;
    summary["sequence"] = to_string(kind);
    if (std::isfinite(best)) {
        summary["eta_corrected_min"] = best;
        summary["t_at_min_us"] = s_to_us(best_t);
    }
    if (kind == SequenceKind::Rabi)
        summary["asymptote"] = std::sqrt(2.0 * cfg.rabi()) / nv_gamma_rad_per_s_tesla;
    out.csv("sensitivity", t, summary);
}

void cmd_noise(const ScenarioConfig& cfg, OutputSet& out)
{
    if (!cfg.noisy())
        throw ConfigError("noise: [noise] kind must be static or ou with a positive sigma");
    const auto seq = cfg.sequence();
    const NoiseSpec noise = cfg.noise();
    DecayScenario sc;
    sc.sequence = seq.kind;
    sc.axis = noise.axis;
    sc.kind = noise.kind;
    sc.sigma = noise.sigma;
    sc.tau_c = noise.tau_c;
    sc.theta = cfg.theta;
    sc.rabi = cfg.rabi();
    // Rotary echoes at full echoes, Rabi/Ramsey on a uniform grid.
    const double dt = seq.kind == SequenceKind::RotaryEcho ? seq.cycle_period() : trace_sample_dt(cfg, seq);
    const auto mc = monte_carlo(seq, cfg.detuning(), noise, monte_carlo_options(cfg, dt));
    Table t({"t_us", "mean", "std_error", "analytic", "z"});
    std::size_t within = 0, compared = 0;
    double zmax = 0.0;
    bool analytic_ok = true;
    for (std::size_t i = 0; i < mc.mean.size(); ++i) {
        const double ti = mc.mean.time(i);
        double a = nan;
        try {
            const auto dv = decay_envelope(sc, ti, cfg.detuning());
            a = dv.signal;
            if (dv.outside_validity)
                out.warn("analytic decay evaluated outside its validity window");
        } catch (const std::invalid_argument& e) {
            if (analytic_ok)
                out.warn(std::string("no closed form: ") + e.what());
            analytic_ok = false;
        }
        const double se = mc.mean.std_error[i];
        double z = nan;
        if (std::isfinite(a) && se > 0.0) {
            z = (mc.mean.values[i] - a) / se;
            ++compared;
            within += std::abs(z) <= 3.0;
            zmax = std::max(zmax, std::abs(z));
        }
        t.add({s_to_us(ti), mc.mean.values[i], se, a, z});
    }
    nlohmann::json summary{{"trials", mc.trials}, {"compared", compared}, {"within_3se", within}, {"max_abs_z", zmax}};
    out.csv("decay", t, summary);
}

void cmd_calcium(const ScenarioConfig& cfg, OutputSet& out)
{
    const auto base = cfg.calcium();
    const double target = cfg.target_eta_ut * 1e-6;
    Table t({"case", "ions", "distance_nm", "duration_us", "standoff_nm", "repetitions", "field_uT",
             "eta_required_uT_per_sqrtHz"});
    auto add = [&](const std::string& label, const CaDomainSpec& s) {
        t.add({label, s.ions, s.distance * 1e9, s_to_us(s.duration), s.standoff * 1e9, s.repetitions,
               ca_field(s) * 1e6, ca_required_sensitivity(s) * 1e6});
    };
    add("configured", base);
    CaDomainSpec implied = base;
    implied.repetitions = ca_repetitions_for(base, target);
    add("implied_N", implied);
    for (double n = 1.0; n <= 1e8; n *= 10.0) {
        CaDomainSpec s = base;
        s.repetitions = n;
        add("sweep", s);
    }
    const double identity = ca_field(base) * std::sqrt(two_pi * base.repetitions * base.duration);
    nlohmann::json summary{{"field_T", ca_field(base)},
                           {"eta_required_T_per_sqrtHz", ca_required_sensitivity(base)},
                           {"identity_relative_error", std::abs(ca_required_sensitivity(base) - identity) / identity},
                           {"target_eta_T_per_sqrtHz", target},
                           {"implied_repetitions", implied.repetitions}};
    out.csv("calcium", t, summary);
}

} // namespace

double default_sample_dt(const PulseSequence& seq)
{
    switch (seq.kind) {
    case SequenceKind::RotaryEcho: {
        const double m = std::fmod(seq.theta, two_pi);
        if (m < 1e-9 || two_pi - m < 1e-9)
            return seq.cycle_period() / 8.0;
        return 1.0 / (8.0 * re_carrier_frequency(seq.rabi, seq.theta));
    }
    case SequenceKind::Rabi:
        return two_pi / seq.rabi / 16.0;
    case SequenceKind::Ramsey:
        return seq.duration / 200.0;
    }
    return 0.0;
}

MonteCarloOptions monte_carlo_options(const ScenarioConfig& cfg, double sample_dt)
{
    MonteCarloOptions o;
    o.trials = static_cast<std::size_t>(cfg.trials);
    o.threads = static_cast<unsigned>(cfg.threads);
    o.chunk = static_cast<std::size_t>(cfg.chunk);
    o.propagate.sample_dt = sample_dt;
    o.propagate.dt_max = us_to_s(cfg.dt_max_us);
    return o;
}

SignalTrace simulate_trace(const PulseSequence& seq, const std::vector<double>& detunings, const NoiseSpec* noise,
                           const ScenarioConfig& cfg, double sample_dt)
{
    SignalTrace sum;
    std::vector<double> var;
    const double w = 1.0 / static_cast<double>(detunings.size());
    for (std::size_t k = 0; k < detunings.size(); ++k) {
        SignalTrace tr;
        if (noise) {
            NoiseSpec spec = *noise;
            spec.seed = cfg.seed + 0x9E3779B97F4A7C15ULL * k;
            tr = monte_carlo(seq, detunings[k], spec, monte_carlo_options(cfg, sample_dt)).mean;
        } else {
            PropagateOptions o;
            o.sample_dt = sample_dt;
            o.dt_max = us_to_s(cfg.dt_max_us);
            tr = propagate(build_waveform(seq, detunings[k]), nullptr, o);
        }
        if (k == 0) {
            sum = tr;
            sum.std_error.clear();
            for (auto& v : sum.values)
                v *= w;
            var.assign(tr.size(), 0.0);
        } else {
            for (std::size_t i = 0; i < tr.size(); ++i)
                sum.values[i] += w * tr.values[i];
        }
        if (!tr.std_error.empty())
            for (std::size_t i = 0; i < tr.size(); ++i)
                var[i] += w * w * tr.std_error[i] * tr.std_error[i];
    }
    if (noise) {
        sum.std_error.resize(var.size());
        for (std::size_t i = 0; i < var.size(); ++i)
            sum.std_error[i] = std::sqrt(var[i]);
    }
    return sum;
}

SpectrumAnalysis analyse_spectrum(const SignalTrace& trace, double theta, double rabi, const ScenarioConfig& cfg,
                                  bool extract)
{
    SpectrumAnalysis sa;
    PeriodogramOptions po;
    po.oversample = static_cast<std::size_t>(cfg.oversample);
    sa.periodogram = periodogram(trace, po);
    SignificanceOptions so;
    so.level = cfg.level;
    so.max_peaks = static_cast<std::size_t>(cfg.max_peaks);
    sa.peaks = peak_significance(sa.periodogram, so);
    if (!extract)
        return sa;
    std::vector<PeakReport> sig;
    for (const auto& p : sa.peaks)
        if (p.significant)
            sig.push_back(p);
    PairingOptions pair;
    pair.grid_step = sa.periodogram.grid_step();
    try {
        sa.coarse = extract_detunings(sig, theta, rabi, pair);
        sa.refined = cfg.refine ? refine_detunings(trace, sa.coarse) : sa.coarse;
        sa.has_estimate = true;
    } catch (const std::runtime_error& e) {
        sa.warnings.push_back(std::string("detuning extraction: ") + e.what());
    }
    return sa;
}

nlohmann::json estimate_json(const DetuningEstimate& e)
{
    nlohmann::json j;
    j["carrier_mhz"] = e.carrier * 1e-6;
    j["nominal_carrier_mhz"] = e.nominal_carrier * 1e-6;
    j["rabi_measured_mhz"] = rad_to_mhz(e.rabi_measured);
    j["theta_actual_pi"] = e.theta_actual / pi;
    j["symmetry_residual_khz"] = e.symmetry_residual * 1e-3;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : e.pairs)
        pairs.push_back({{"lower_mhz", p.lower * 1e-6},
                         {"upper_mhz", p.upper * 1e-6},
                         {"half_splitting_mhz", p.half_splitting * 1e-6},
                         {"detuning_mhz", p.detuning * 1e-6},
                         {"uncertainty_mhz", p.uncertainty * 1e-6}});
    j["pairs"] = pairs;
    return j;
}

const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> s{"simulate", "spectrum", "sensitivity", "noise", "calcium", "figure"};
    return s;
}

void run(const RunRequest& req)
{
    OutputSet out(req.out, req.command == "figure" ? "figure " + req.figure : req.command, req.config);
    const auto& c = req.config;
    if (req.command == "simulate")
        cmd_simulate(c, out);
    else if (req.command == "spectrum")
        cmd_spectrum(c, out);
    else if (req.command == "sensitivity")
        cmd_sensitivity(c, out);
    else if (req.command == "noise")
        cmd_noise(c, out);
    else if (req.command == "calcium")
        cmd_calcium(c, out);
    else if (req.command == "figure")
        run_figure(req.figure, c, out);
    else
        throw ConfigError("unknown subcommand '" + req.command + "'");
    out.commit();
}

} // namespace remag::cli
