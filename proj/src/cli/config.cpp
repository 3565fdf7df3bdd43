#include "cli/config.hpp"

#include "remag/analytic_models.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

namespace remag::cli {

namespace {

using Member = std::variant<double ScenarioConfig::*, int ScenarioConfig::*, bool ScenarioConfig::*,
                            std::string ScenarioConfig::*, std::uint64_t ScenarioConfig::*>;

struct Field {
    const char* section;
    const char* key;
    Member member;
    std::vector<std::string> choices = {};
};

const std::vector<Field>& fields()
{
    using C = ScenarioConfig;
    static const std::vector<Field> f = {
        {"sequence", "kind", &C::kind, {"re", "rabi", "ramsey"}},
        {"sequence", "theta", &C::theta},
        {"sequence", "rabi_mhz", &C::rabi_mhz},
        {"sequence", "cycles", &C::cycles},
        {"sequence", "duration_us", &C::duration_us},
        {"sequence", "detuning_mhz", &C::detuning_mhz},
        {"sequence", "hyperfine_mhz", &C::hyperfine_mhz},
        {"sequence", "triplet", &C::triplet},
        {"sequence", "sample_dt_us", &C::sample_dt_us},
        {"noise", "kind", &C::noise_kind, {"none", "static", "ou"}},
        {"noise", "axis", &C::noise_axis, {"z", "x"}},
        {"noise", "sigma_mhz", &C::sigma_mhz},
        {"noise", "sigma_rel", &C::sigma_rel},
        {"noise", "tau_c_us", &C::tau_c_us},
        {"noise", "dt_max_us", &C::dt_max_us},
        {"readout", "n0", &C::n0},
        {"readout", "n1", &C::n1},
        {"readout", "repeats", &C::repeats},
        {"readout", "t_readout_us", &C::t_readout_us},
        {"readout", "dead_time_us", &C::dead_time_us},
        {"readout", "shots", &C::shots},
        {"spectrum", "source", &C::source, {"model", "exact"}},
        {"spectrum", "duration_us", &C::spectrum_duration_us},
        {"spectrum", "white_noise", &C::white_noise},
        {"spectrum", "oversample", &C::oversample},
        {"spectrum", "level", &C::level},
        {"spectrum", "max_peaks", &C::max_peaks},
        {"spectrum", "filter", &C::filter},
        {"spectrum", "refine", &C::refine},
        {"sensitivity", "t_min_us", &C::t_min_us},
        {"sensitivity", "t_max_us", &C::t_max_us},
        {"sensitivity", "points", &C::points},
        {"sensitivity", "t2_star_us", &C::t2_star_us},
        {"calcium", "ions", &C::ions},
        {"calcium", "distance_nm", &C::distance_nm},
        {"calcium", "duration_us", &C::flux_duration_us},
        {"calcium", "standoff_nm", &C::standoff_nm},
        {"calcium", "repetitions", &C::ca_repetitions},
        {"calcium", "target_eta_ut", &C::target_eta_ut},
        {"run", "seed", &C::seed},
        {"run", "trials", &C::trials},
        {"run", "threads", &C::threads},
        {"run", "chunk", &C::chunk},
    };
    return f;
}

std::string trim(std::string s)
{
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

double parse_double(const std::string& v, const std::string& where, const std::string& name)
{
    double x = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x))
        fail(where, name + ": expected a finite number, got '" + v + "'");
    return x;
}

template <class Int>
Int parse_int(const std::string& v, const std::string& where, const std::string& name)
{
    Int x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        fail(where, name + ": expected an integer, got '" + v + "'");
    return x;
}

bool parse_bool(std::string v, const std::string& where, const std::string& name)
{
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "yes" || v == "on" || v == "1")
        return true;
    if (v == "false" || v == "no" || v == "off" || v == "0")
        return false;
    fail(where, name + ": expected true or false, got '" + v + "'");
}

void assign(ScenarioConfig& cfg, const Field& f, const std::string& value, const std::string& where)
{
    const std::string name = std::string(f.section) + "." + f.key;
    std::visit(
        [&](auto m) {
            using T = std::remove_cvref_t<decltype(cfg.*m)>;
            if constexpr (std::is_same_v<T, double>)
                cfg.*m = parse_double(value, where, name);
            else if constexpr (std::is_same_v<T, int>)
                cfg.*m = parse_int<int>(value, where, name);
            else if constexpr (std::is_same_v<T, std::uint64_t>)
                cfg.*m = parse_int<std::uint64_t>(value, where, name);
            else if constexpr (std::is_same_v<T, bool>)
                cfg.*m = parse_bool(value, where, name);
            else {
                if (!f.choices.empty() && std::find(f.choices.begin(), f.choices.end(), value) == f.choices.end()) {
                    std::string all;
                    for (const auto& c : f.choices)
                        all += (all.empty() ? "" : "|") + c;
                    fail(where, name + ": expected one of " + all + ", got '" + value + "'");
                }
                cfg.*m = value;
            }
        },
        f.member);
}

std::string render(const ScenarioConfig& cfg, const Field& f)
{
    return std::visit(
        [&](auto m) -> std::string {
            using T = std::remove_cvref_t<decltype(cfg.*m)>;
            if constexpr (std::is_same_v<T, double>)
                return format_double(cfg.*m);
            else if constexpr (std::is_same_v<T, bool>)
                return cfg.*m ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::string>)
                return cfg.*m;
            else
                return std::to_string(cfg.*m);
        },
        f.member);
}

// Where each key was set, for invariant messages.
using Origins = std::map<std::string, std::string>;

std::string origin_of(const Origins& o, const ScenarioConfig& cfg, const std::string& key)
{
    auto it = o.find(key);
    if (it != o.end())
        return it->second;
    return (cfg.source_file.empty() ? std::string("<defaults>") : cfg.source_file) + ": " + key + " (default)";
}

void check_invariants(ScenarioConfig& cfg, const Origins& o)
{
    auto need = [&](bool ok, const std::string& key, const std::string& what) {
        if (!ok)
            fail(origin_of(o, cfg, key), key + ": " + what);
    };
    need(cfg.rabi_mhz > 0.0, "sequence.rabi_mhz", "must be positive");
    need(cfg.theta > 0.0, "sequence.theta", "must be positive");
    need(cfg.cycles >= 1, "sequence.cycles", "must be >= 1");
    need(cfg.duration_us > 0.0, "sequence.duration_us", "must be positive");
    need(cfg.hyperfine_mhz >= 0.0, "sequence.hyperfine_mhz", "must be non-negative");
    need(cfg.sample_dt_us >= 0.0, "sequence.sample_dt_us", "must be non-negative");
    need(cfg.sigma_mhz >= 0.0, "noise.sigma_mhz", "must be non-negative");
    need(cfg.sigma_rel >= 0.0, "noise.sigma_rel", "must be non-negative");
    need(!(cfg.sigma_mhz > 0.0 && cfg.sigma_rel > 0.0), "noise.sigma_rel", "set either sigma_mhz or sigma_rel, not both");
    need(cfg.tau_c_us > 0.0, "noise.tau_c_us", "must be positive");
    need(cfg.dt_max_us >= 0.0, "noise.dt_max_us", "must be non-negative");
    need(cfg.n0 > cfg.n1 && cfg.n1 >= 0.0, "readout.n0", "need n0 > n1 >= 0");
    need(cfg.repeats >= 1.0, "readout.repeats", "must be >= 1");
    need(cfg.t_readout_us >= 0.0, "readout.t_readout_us", "must be non-negative");
    need(cfg.dead_time_us >= 0.0, "readout.dead_time_us", "must be non-negative");
    need(cfg.shots > 0.0, "readout.shots", "must be positive");
    need(cfg.spectrum_duration_us > 0.0, "spectrum.duration_us", "must be positive");
    need(cfg.white_noise >= 0.0, "spectrum.white_noise", "must be non-negative");
    need(cfg.oversample >= 1, "spectrum.oversample", "must be >= 1");
    need(cfg.level > 0.0 && cfg.level < 1.0, "spectrum.level", "must be in (0, 1)");
    need(cfg.max_peaks >= 1, "spectrum.max_peaks", "must be >= 1");
    need(cfg.t_min_us > 0.0, "sensitivity.t_min_us", "must be positive");
    need(cfg.t_max_us > cfg.t_min_us, "sensitivity.t_max_us", "must exceed t_min_us");
    need(cfg.points >= 2, "sensitivity.points", "must be >= 2");
    need(cfg.t2_star_us >= 0.0, "sensitivity.t2_star_us", "must be non-negative");
    need(cfg.ions >= 0.0, "calcium.ions", "must be non-negative");
    need(cfg.distance_nm > 0.0, "calcium.distance_nm", "must be positive");
    need(cfg.flux_duration_us > 0.0, "calcium.duration_us", "must be positive");
    need(cfg.standoff_nm > 0.0, "calcium.standoff_nm", "must be positive");
    need(cfg.ca_repetitions > 0.0, "calcium.repetitions", "must be positive");
    need(cfg.target_eta_ut > 0.0, "calcium.target_eta_ut", "must be positive");
    need(cfg.trials >= 1, "run.trials", "must be >= 1");
    need(cfg.threads >= 0, "run.threads", "must be >= 0");
    need(cfg.chunk >= 1, "run.chunk", "must be >= 1");

    // Module-level checks, reported against the sequence section.
    try {
        cfg.sequence().validate();
        if (cfg.noisy())
            cfg.noise().validate();
    } catch (const std::invalid_argument& e) {
        fail(origin_of(o, cfg, "sequence.kind"), e.what());
    }

    cfg.warnings.clear();
    if (cfg.noisy() && cfg.noise_kind == "ou" && cfg.noise_axis == "z" && cfg.kind == "re" &&
        !re_bath_ou_within_validity(cfg.theta, cfg.rabi(), cfg.sigma(), cfg.tau_c()))
        cfg.warnings.push_back("OU bath parameters outside the rotary-echo validity window "
                               "(need tau_c sigma <= theta/2 and tau_c >= theta/(2 Omega))");
}

} // namespace

SequenceKind ScenarioConfig::sequence_kind() const
{
    if (kind == "rabi")
        return SequenceKind::Rabi;
    if (kind == "ramsey")
        return SequenceKind::Ramsey;
    return SequenceKind::RotaryEcho;
}

PulseSequence ScenarioConfig::sequence() const
{
    switch (sequence_kind()) {
    case SequenceKind::Rabi:
        return PulseSequence::rabi_drive(rabi(), us_to_s(duration_us));
    case SequenceKind::Ramsey:
        return PulseSequence::ramsey(us_to_s(duration_us));
    default:
        return PulseSequence::rotary_echo(theta, rabi(), cycles);
    }
}

NoiseSpec ScenarioConfig::noise() const
{
    NoiseSpec n;
    n.axis = noise_axis == "x" ? NoiseAxis::X : NoiseAxis::Z;
    n.kind = noise_kind == "ou" ? NoiseKind::OrnsteinUhlenbeck : NoiseKind::Static;
    n.sigma = noisy() ? sigma() : 0.0;
    n.tau_c = tau_c();
    n.seed = seed;
    return n;
}

ReadoutModel ScenarioConfig::readout() const
{
    ReadoutModel r;
    r.n0 = n0;
    r.n1 = n1;
    r.repeats = repeats;
    r.t_readout = us_to_s(t_readout_us);
    r.dead_time = us_to_s(dead_time_us);
    return r;
}

CaDomainSpec ScenarioConfig::calcium() const
{
    CaDomainSpec c;
    c.ions = ions;
    c.distance = distance_nm * 1e-9;
    c.duration = us_to_s(flux_duration_us);
    c.standoff = standoff_nm * 1e-9;
    c.repetitions = ca_repetitions;
    return c;
}

std::vector<double> ScenarioConfig::detunings() const
{
    if (triplet)
        return hyperfine_triplet(detuning(), hyperfine());
    return {detuning()};
}

std::map<std::string, std::string> ScenarioConfig::resolved() const
{
    std::map<std::string, std::string> out;
    for (const auto& f : fields())
        out[std::string(f.section) + "." + f.key] = render(*this, f);
    return out;
}

std::string ScenarioConfig::hash() const
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [k, v] : resolved()) {
        if (k == "run.threads") // results do not depend on it
            continue;
        for (char c : k + "=" + v + "\n") {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ScenarioConfig parse_config(const std::string& text, const std::string& origin)
{
    ScenarioConfig cfg;
    cfg.source_file = origin;
    std::set<std::string> seen;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string where = origin + ":" + std::to_string(line_no);
        std::string line = raw;
        for (std::size_t i = 0; i < line.size(); ++i)
            if ((line[i] == '#' || line[i] == ';') && (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) {
                line.resize(i);
                break;
            }
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail(where, "malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            const bool known = std::any_of(fields().begin(), fields().end(),
                                           [&](const Field& f) { return section == f.section; });
            if (!known)
                fail(where, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(where, "expected key = value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            fail(where, "key '" + key + "' outside any section");
        if (value.empty())
            fail(where, section + "." + key + ": empty value");
        std::string name = section + "." + key;

        if (name == "sequence.theta_pi") {
            if (seen.count("sequence.theta"))
                fail(where, "sequence.theta_pi: theta already given");
            cfg.theta = pi * parse_double(value, where, name);
            name = "sequence.theta";
        } else {
            if (name == "sequence.theta" && seen.count("sequence.theta"))
                fail(where, "sequence.theta: theta already given");
            const auto it = std::find_if(fields().begin(), fields().end(),
                                         [&](const Field& f) { return section == f.section && key == f.key; });
            if (it == fields().end())
                fail(where, "unknown key '" + key + "' in section [" + section + "]");
            assign(cfg, *it, value, where);
        }
        if (name == "run.trials")
            cfg.trials_explicit = true;
        if (!seen.insert(name).second)
            fail(where, name + ": duplicate key");
        cfg.origins[name] = where;
    }
    check_invariants(cfg, cfg.origins);
    return cfg;
}

ScenarioConfig load_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

void validate(ScenarioConfig& cfg) { check_invariants(cfg, cfg.origins); }

} // namespace remag::cli
