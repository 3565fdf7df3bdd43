#include "remag/spectral.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace remag {

namespace {

void require(bool ok, const char* what)
{
    if (!ok)
        throw std::invalid_argument(what);
}

// Fraction of a Fejer kernel's integral inside its main lobe.
constexpr double main_lobe_fraction = 0.9028233767;

} // namespace

Periodogram periodogram(const std::vector<double>& values, double dt, const PeriodogramOptions& opts)
{
    require(values.size() >= 8, "periodogram: need at least 8 samples");
    require(std::isfinite(dt) && dt > 0.0, "periodogram: sampling interval must be positive");
    require(opts.oversample >= 1, "periodogram: oversample must be >= 1");
    const std::size_t m = values.size();
    const std::size_t n = m * opts.oversample;

    double mean = 0.0;
    if (opts.remove_mean) {
        for (double v : values)
            mean += v;
        mean /= static_cast<double>(m);
    }
    std::vector<double> padded(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        require(std::isfinite(values[i]), "periodogram: non-finite sample");
        padded[i] = values[i] - mean;
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, padded);

    Periodogram pg;
    pg.samples = m;
    pg.dt = dt;
    pg.oversample = opts.oversample;
    const std::size_t half = n / 2;
    pg.frequency.resize(half + 1);
    pg.power.resize(half + 1);
    const double df = 1.0 / (static_cast<double>(n) * dt);
    for (std::size_t k = 0; k <= half; ++k) {
        pg.frequency[k] = df * static_cast<double>(k);
        pg.power[k] = std::norm(spec[k]) / static_cast<double>(m);
    }
    return pg;
}

Periodogram periodogram(const SignalTrace& trace, const PeriodogramOptions& opts)
{
    if (trace.values.empty())
        throw std::invalid_argument("periodogram: empty trace");
    return periodogram(trace.values, trace.dt, opts);
}

std::vector<SpectralPeak> find_peaks(const Periodogram& pg, std::size_t max_peaks)
{
    std::vector<SpectralPeak> peaks;
    const auto& p = pg.power;
    const double df = pg.grid_step();
    for (std::size_t k = 1; k + 1 < p.size(); ++k) {
        if (!(p[k] > p[k - 1] && p[k] >= p[k + 1]))
            continue;
        const double curv = p[k - 1] - 2.0 * p[k] + p[k + 1];
        double off = 0.0;
        if (curv < 0.0)
            off = std::clamp(0.5 * (p[k - 1] - p[k + 1]) / curv, -0.5, 0.5);
        SpectralPeak pk;
        pk.index = k;
        pk.frequency = (static_cast<double>(k) + off) * df;
        pk.power = p[k] - 0.25 * (p[k - 1] - p[k + 1]) * off;
        peaks.push_back(pk);
    }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const SpectralPeak& a, const SpectralPeak& b) { return a.power > b.power; });
    if (max_peaks > 0 && peaks.size() > max_peaks)
        peaks.resize(max_peaks);
    return peaks;
}

double fisher_p_value(double t_m, std::size_t K, std::size_t m)
{
    require(m >= 1 && m <= K, "fisher_p_value: rank out of range");
    const double t = std::clamp(t_m, 0.0, 1.0);
    return static_cast<double>(K - m + 1) * std::pow(1.0 - t, static_cast<double>(K - m));
}

double significance_threshold(double total_power, std::size_t K, double level)
{
    require(K >= 2, "significance_threshold: need at least two ordinates");
    return total_power * (1.0 - std::pow(level / static_cast<double>(K), 1.0 / static_cast<double>(K - 1)));
}

double frequency_uncertainty(double sigma, double amplitude, double t, std::size_t M)
{
    require(sigma > 0.0 && amplitude > 0.0 && t > 0.0 && M >= 1, "frequency_uncertainty: inputs must be positive");
    return 2.0 * std::sqrt(3.0) / pi * sigma / (amplitude * t * std::sqrt(static_cast<double>(M)));
}

double snr_from_amplitude(double amplitude, double sigma)
{
    require(sigma > 0.0, "snr_from_amplitude: sigma must be positive");
    return amplitude / (std::sqrt(2.0) * sigma);
}

std::vector<PeakReport> peak_significance(const Periodogram& pg, const SignificanceOptions& opts)
{
    require(opts.max_peaks >= 1, "peak_significance: max_peaks must be >= 1");
    require(opts.level > 0.0 && opts.level < 1.0, "peak_significance: level must be in (0,1)");
    const std::size_t K = pg.fourier_count();
    require(K >= 2, "peak_significance: too few samples");

    std::vector<double> ord(K + 1, 0.0);
    double total = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t j = 1; j <= K; ++j) {
        ord[j] = pg.fourier_ordinate(j);
        total += ord[j];
        lo = std::min(lo, ord[j]);
        hi = std::max(hi, ord[j]);
    }
    if (!(total > 0.0) || hi - lo <= 1e-12 * hi)
        throw std::invalid_argument("peak_significance: degenerate spectrum");

    // Each grid peak claims its nearest Fourier ordinate, or the other
    // neighbour when the nearest is taken.
    const double t = pg.duration();
    std::vector<bool> claimed(K + 1, false);
    struct Claim {
        SpectralPeak peak;
        std::size_t j;
    };
    std::vector<Claim> claims;
    for (const auto& pk : find_peaks(pg)) {
        const double x = pk.frequency * t;
        const auto near = static_cast<long>(std::lround(x));
        const long other = x >= static_cast<double>(near) ? near + 1 : near - 1;
        for (long j : {near, other}) {
            if (j < 1 || j > static_cast<long>(K) || claimed[static_cast<std::size_t>(j)])
                continue;
            claimed[static_cast<std::size_t>(j)] = true;
            claims.push_back({pk, static_cast<std::size_t>(j)});
            break;
        }
    }
    std::stable_sort(claims.begin(), claims.end(), [&](const Claim& a, const Claim& b) { return ord[a.j] > ord[b.j]; });

    // Noise floor: mean ordinate below the p = 0.01 line.
    const double thr = significance_threshold(total, K, 0.01);
    double floor_sum = 0.0;
    std::size_t floor_n = 0;
    for (std::size_t j = 1; j <= K; ++j)
        if (ord[j] < thr) {
            floor_sum += ord[j];
            ++floor_n;
        }
    const double floor = floor_n ? floor_sum / static_cast<double>(floor_n) : total / static_cast<double>(K);

    std::vector<PeakReport> out;
    double removed = 0.0;
    const double df = pg.grid_step();
    const double M = static_cast<double>(pg.samples);
    for (std::size_t m = 1; m <= claims.size() && m <= K; ++m) {
        const Claim& c = claims[m - 1];
        PeakReport r;
        r.frequency = c.peak.frequency;
        r.power = c.peak.power;
        r.rank = m;
        r.ordinate = c.j;
        r.ordinate_power = ord[c.j];
        const double denom = total - removed;
        r.p_value = fisher_p_value(denom > 0.0 ? ord[c.j] / denom : 1.0, K, m);
        r.significant = r.p_value <= opts.level;
        removed += ord[c.j];

        double area = 0.0;
        const auto lo_k = static_cast<long>(std::ceil((r.frequency - 1.0 / t) / df));
        const auto hi_k = static_cast<long>(std::floor((r.frequency + 1.0 / t) / df));
        for (long k = std::max(lo_k, 0L); k <= std::min(hi_k, static_cast<long>(pg.power.size()) - 1); ++k)
            area += (pg.power[static_cast<std::size_t>(k)] - floor) * df;
        const double height = area * t / main_lobe_fraction;
        if (height > 0.0 && floor > 0.0) {
            const double k_over_sigma = std::sqrt(4.0 * height / (M * floor));
            r.snr = k_over_sigma / std::sqrt(2.0);
            r.delta_f = frequency_uncertainty(1.0, k_over_sigma, t, pg.samples);
        } else {
            r.snr = 0.0;
            r.delta_f = std::numeric_limits<double>::infinity();
        }
        out.push_back(r);
        if (!r.significant || out.size() >= opts.max_peaks)
            break;
    }
    return out;
}

double re_carrier_frequency(double rabi, double theta)
{
    require(rabi > 0.0 && theta > 0.0, "re_carrier_frequency: Omega and theta must be positive");
    double m = std::fmod(theta, two_pi);
    if (m < 1e-12 * theta || two_pi - m < 1e-12 * theta)
        throw std::invalid_argument("re_carrier_frequency: theta is a multiple of 2pi, no carrier");
    return rabi / (2.0 * m);
}

HarmonicFilterResult harmonic_filter(const SignalTrace& trace, double rabi, double theta)
{
    require(trace.values.size() >= 8, "harmonic_filter: need at least 8 samples");
    require(trace.dt > 0.0, "harmonic_filter: sampling interval must be positive");
    HarmonicFilterResult res;
    res.carrier = re_carrier_frequency(rabi, theta);
    const std::size_t m = trace.values.size();
    const double t = trace.span();
    const double nyquist = 0.5 / trace.dt;
    const double flat = 1.0 / t;
    const double taper = 2.0 / t;

    std::vector<double> centres;
    for (int k = 1; 2.0 * k * res.carrier <= nyquist; ++k)
        centres.push_back(2.0 * k * res.carrier);
    res.notches = centres.size();
    if (centres.empty())
        res.warnings.push_back("no even harmonic of the carrier below Nyquist; trace returned unchanged");
    if (flat + taper > 0.5 * res.carrier) {
        res.overlap_warning = true;
        res.warnings.push_back("notch width exceeds half the carrier; split pairs may be attenuated");
    }

    res.trace = trace;
    if (centres.empty())
        return res;

    const std::size_t n = m;
    std::vector<std::complex<double>> in(trace.values.begin(), trace.values.end());
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, in);
    const double fbin = 1.0 / (static_cast<double>(n) * trace.dt);
    for (std::size_t j = 1; j < n; ++j) {
        const double f = fbin * static_cast<double>(j <= n / 2 ? j : n - j);
        double w = 1.0;
        for (double c : centres) {
            const double d = std::abs(f - c);
            if (d <= flat)
                w = 0.0;
            else if (d < flat + taper)
                w *= 0.5 * (1.0 - std::cos(pi * (d - flat) / taper));
        }
        spec[j] *= w;
    }
    std::vector<std::complex<double>> back;
    fft.inv(back, spec);
    for (std::size_t i = 0; i < m; ++i)
        res.trace.values[i] = back[i].real();
    return res;
}

namespace {

struct Pairing {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double score = 0.0;
};

Pairing greedy_pairs(const std::vector<PeakReport>& peaks, const std::vector<std::size_t>& order, double centre,
                     double tol)
{
    Pairing out;
    std::vector<bool> used(peaks.size(), false);
    for (std::size_t a : order) {
        if (used[a])
            continue;
        const double mirror = 2.0 * centre - peaks[a].frequency;
        if (std::abs(mirror - peaks[a].frequency) <= tol)
            continue;
        std::size_t best = peaks.size();
        double best_d = tol;
        for (std::size_t b = 0; b < peaks.size(); ++b) {
            if (b == a || used[b])
                continue;
            const double d = std::abs(peaks[b].frequency - mirror);
            if (d <= best_d) {
                best_d = d;
                best = b;
            }
        }
        if (best == peaks.size())
            continue;
        used[a] = used[best] = true;
        out.pairs.emplace_back(a, best);
        out.score += peaks[a].power + peaks[best].power;
    }
    return out;
}

double rotation_factor(double theta) { return theta / (2.0 * std::sin(theta / 2.0)); }

void fill_pairs(DetuningEstimate& est, const std::vector<PeakReport>& peaks, const Pairing& pr)
{
    est.pairs.clear();
    est.symmetry_residual = 0.0;
    const double g = rotation_factor(est.theta_actual);
    for (auto [a, b] : pr.pairs) {
        DetuningPair p;
        p.lower = std::min(peaks[a].frequency, peaks[b].frequency);
        p.upper = std::max(peaks[a].frequency, peaks[b].frequency);
        p.half_splitting = 0.5 * (p.upper - p.lower);
        p.detuning = p.half_splitting * g;
        const double da = std::isfinite(peaks[a].delta_f) ? peaks[a].delta_f : 0.0;
        const double db = std::isfinite(peaks[b].delta_f) ? peaks[b].delta_f : 0.0;
        p.uncertainty = 0.5 * std::hypot(da, db) * std::abs(g);
        p.power = peaks[a].power + peaks[b].power;
        est.symmetry_residual = std::max(est.symmetry_residual, std::abs(0.5 * (p.lower + p.upper) - est.carrier));
        est.pairs.push_back(p);
    }
}

} // namespace

DetuningEstimate extract_detunings(const std::vector<PeakReport>& peaks, double theta_nominal, double rabi_nominal,
                                   const PairingOptions& opts)
{
    require(opts.grid_step > 0.0, "extract_detunings: grid step must be positive");
    require(opts.tolerance_bins > 0.0, "extract_detunings: tolerance must be positive");
    const double nominal = re_carrier_frequency(rabi_nominal, theta_nominal);
    const double tol = opts.tolerance_bins * opts.grid_step;
    if (peaks.size() < 2)
        throw std::runtime_error("extract_detunings: no symmetric pair found (fewer than two peaks)");

    std::vector<std::size_t> order(peaks.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return peaks[a].power > peaks[b].power; });

    Pairing best;
    double best_centre = nominal;
    double best_offset = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < peaks.size(); ++i)
        for (std::size_t j = i + 1; j < peaks.size(); ++j) {
            const double mid = 0.5 * (peaks[i].frequency + peaks[j].frequency);
            const double offset = std::abs(mid - nominal);
            if (offset > opts.carrier_window * nominal)
                continue;
            Pairing p = greedy_pairs(peaks, order, mid, tol);
            if (p.score > best.score * (1.0 + 1e-12) || (p.score >= best.score * (1.0 - 1e-12) && offset < best_offset)) {
                best = std::move(p);
                best_centre = mid;
                best_offset = offset;
            }
        }
    if (best.pairs.empty())
        throw std::runtime_error("extract_detunings: no symmetric pair found near the nominal carrier");

    // Power-weighted symmetry point of the accepted pairs, then re-pair once.
    auto weighted_centre = [&](const Pairing& p) {
        double num = 0.0;
        double den = 0.0;
        for (auto [a, b] : p.pairs) {
            const double w = peaks[a].power + peaks[b].power;
            num += w * 0.5 * (peaks[a].frequency + peaks[b].frequency);
            den += w;
        }
        return num / den;
    };
    double centre = weighted_centre(best);
    Pairing again = greedy_pairs(peaks, order, centre, tol);
    if (again.score >= best.score * (1.0 - 1e-12) && !again.pairs.empty()) {
        best = std::move(again);
        centre = weighted_centre(best);
    }
    (void)best_centre;

    DetuningEstimate est;
    est.carrier = centre;
    est.nominal_carrier = nominal;
    const double ratio = centre / nominal;
    est.rabi_measured = rabi_nominal * ratio;
    est.theta_actual = theta_nominal * ratio;
    fill_pairs(est, peaks, best);
    return est;
}

namespace {

// Residuals of the split-pair model with the linear amplitudes projected out.
// Parameters are offsets from the start point in units of 1/t (cycles over
// the trace).
struct SplitPairResidual {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const SignalTrace* trace;
    std::vector<double> start; // fc, D_1..D_n in Hz
    double span;

    SplitPairResidual(const SignalTrace& tr, std::vector<double> p0)
        : trace(&tr), start(std::move(p0)), span(tr.span())
    {
    }

    int inputs() const { return static_cast<int>(start.size()); }
    int values() const { return static_cast<int>(trace->values.size()); }

    std::vector<double> frequencies(const Eigen::VectorXd& x) const
    {
        std::vector<double> f(start.size());
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] = start[i] + x[static_cast<Eigen::Index>(i)] / span;
        return f;
    }

    Eigen::MatrixXd design(const std::vector<double>& f) const
    {
        const std::size_t n = f.size() - 1;
        const auto m = static_cast<Eigen::Index>(trace->values.size());
        Eigen::MatrixXd X(m, static_cast<Eigen::Index>(1 + 2 * n));
        for (Eigen::Index r = 0; r < m; ++r) {
            const double t = trace->time(static_cast<std::size_t>(r));
            const double cc = std::cos(two_pi * f[0] * t);
            const double cs = std::sin(two_pi * f[0] * t);
            X(r, 0) = 1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = std::cos(two_pi * f[i + 1] * t);
                X(r, static_cast<Eigen::Index>(1 + 2 * i)) = e * cc;
                X(r, static_cast<Eigen::Index>(2 + 2 * i)) = e * cs;
            }
        }
        return X;
    }

    Eigen::VectorXd amplitudes(const Eigen::MatrixXd& X) const
    {
        const Eigen::Map<const Eigen::VectorXd> y(trace->values.data(), static_cast<Eigen::Index>(trace->values.size()));
        return X.colPivHouseholderQr().solve(y);
    }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const
    {
        const Eigen::Map<const Eigen::VectorXd> y(trace->values.data(), static_cast<Eigen::Index>(trace->values.size()));
        const Eigen::MatrixXd X = design(frequencies(x));
        fvec = y - X * amplitudes(X);
        return 0;
    }
};

} // namespace

DetuningEstimate refine_detunings(const SignalTrace& trace, const DetuningEstimate& start)
{
    require(!start.pairs.empty(), "refine_detunings: no pairs to refine");
    require(trace.values.size() > 4 * start.pairs.size() + 4, "refine_detunings: trace too short");
    std::vector<double> p0{start.carrier};
    for (const auto& p : start.pairs)
        p0.push_back(p.half_splitting);

    SplitPairResidual fn(trace, p0);
    Eigen::NumericalDiff<SplitPairResidual, Eigen::Central> diff(fn);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<SplitPairResidual, Eigen::Central>> lm(diff);
    lm.parameters.maxfev = 400;
    lm.parameters.xtol = 1e-12;
    lm.parameters.ftol = 1e-14;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p0.size()));
    lm.minimize(x);
    if (!x.allFinite())
        throw std::runtime_error("refine_detunings: fit diverged");

    const std::vector<double> f = fn.frequencies(x);
    const Eigen::MatrixXd X = fn.design(f);
    const Eigen::VectorXd beta = fn.amplitudes(X);
    Eigen::VectorXd r;
    fn(x, r);
    Eigen::MatrixXd J(r.size(), x.size());
    diff.df(x, J);
    const auto m = static_cast<double>(trace.values.size());
    const double dof = m - static_cast<double>(x.size() + beta.size());
    const double s2 = r.squaredNorm() / std::max(dof, 1.0);
    Eigen::MatrixXd cov = s2 * (J.transpose() * J).ldlt().solve(Eigen::MatrixXd::Identity(x.size(), x.size()));

    DetuningEstimate est = start;
    const double theta_nominal = start.theta_actual * start.nominal_carrier / start.carrier;
    const double rabi_nominal = start.rabi_measured * start.nominal_carrier / start.carrier;
    est.carrier = f[0];
    const double ratio = f[0] / start.nominal_carrier;
    est.rabi_measured = rabi_nominal * ratio;
    est.theta_actual = theta_nominal * ratio;
    const double g = rotation_factor(est.theta_actual);
    est.pairs.clear();
    for (std::size_t i = 1; i < f.size(); ++i) {
        DetuningPair p;
        p.half_splitting = std::abs(f[i]);
        p.lower = f[0] - p.half_splitting;
        p.upper = f[0] + p.half_splitting;
        p.detuning = p.half_splitting * g;
        const auto k = static_cast<Eigen::Index>(i);
        p.uncertainty = std::sqrt(std::max(cov(k, k), 0.0)) / fn.span * std::abs(g);
        const double a = beta[static_cast<Eigen::Index>(2 * i - 1)];
        const double b = beta[static_cast<Eigen::Index>(2 * i)];
        p.power = a * a + b * b;
        est.pairs.push_back(p);
    }
    std::stable_sort(est.pairs.begin(), est.pairs.end(),
                     [](const DetuningPair& a, const DetuningPair& b) { return a.power > b.power; });
    est.symmetry_residual = 0.0;
    return est;
}

} // namespace remag
