#include "doctest.h"

#include "remag/analytic_models.hpp"
#include "remag/noise.hpp"
#include "remag/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace remag;

namespace {
constexpr double mhz = two_pi * 1e6;
}

TEST_CASE("inverse normal CDF")
{
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
    CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-14));
    CHECK(normal_quantile(0.3) == doctest::Approx(-0.5244005127080409).epsilon(1e-14));
    CHECK(normal_quantile(0.999999) == doctest::Approx(4.753424308817087).epsilon(1e-14));
    CHECK(normal_quantile(0.02425) == doctest::Approx(-1.972961051311885).epsilon(1e-14));
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(std::isinf(normal_quantile(0.0)));
}

TEST_CASE("counter RNG is a pure function of its key")
{
    CHECK(counter_bits(1, 2, 3) == counter_bits(1, 2, 3));
    CHECK(counter_bits(1, 2, 3) != counter_bits(1, 2, 4));
    CHECK(counter_bits(1, 2, 3) != counter_bits(1, 3, 3));
    CHECK(counter_bits(1, 2, 3) != counter_bits(2, 2, 3));
    double mean = 0, m2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = counter_normal(99, 5, i);
        mean += x;
        m2 += x * x;
    }
    mean /= n;
    CHECK(std::abs(mean) < 5 / std::sqrt(double(n)));
    CHECK(std::abs(m2 / n - 1) < 0.015);
}

TEST_CASE("path sampling basics")
{
    NoiseSpec zero;
    zero.sigma = 0;
    for (double v : sample_path(zero, 1e-6, 1e-9, 0).values)
        CHECK(v == 0.0);

    NoiseSpec st;
    st.sigma = mhz;
    st.seed = 42;
    const auto a = sample_path(st, 1e-6, 1e-9, 5);
    const auto b = sample_path(st, 1e-6, 1e-9, 5);
    CHECK(a.values == b.values);
    for (double v : a.values)
        CHECK(v == a.values.front());
    CHECK(a.end() >= 1e-6);
    CHECK(sample_path(st, 1e-6, 1e-9, 6).values.front() != a.values.front());

    NoiseSpec ou;
    ou.kind = NoiseKind::OrnsteinUhlenbeck;
    ou.sigma = mhz;
    ou.tau_c = 200e-9;
    CHECK_THROWS_AS(sample_path(ou, 1e-6, 20e-9, 0), std::invalid_argument);
    CHECK_NOTHROW(sample_path(ou, 1e-6, 10e-9, 0));
    ou.sigma = -1;
    CHECK_THROWS_AS(sample_path(ou, 1e-6, 1e-9, 0), std::invalid_argument);
    ou.sigma = mhz;
    ou.tau_c = 0;
    CHECK_THROWS_AS(sample_path(ou, 1e-6, 1e-9, 0), std::invalid_argument);
    CHECK_THROWS_AS(sample_path(st, 0.0, 1e-9, 0), std::invalid_argument);
}

TEST_CASE("OU stationarity across the grid")
{
    NoiseSpec ou;
    ou.kind = NoiseKind::OrnsteinUhlenbeck;
    ou.sigma = mhz;
    ou.tau_c = 200e-9;
    ou.seed = 11;
    const double dt = ou.tau_c / 20;
    RunningStats first, last;
    NoisePath p;
    for (std::uint64_t k = 0; k < 20000; ++k) {
        sample_path_into(ou, 10 * ou.tau_c, dt, k, p);
        first.push(p.values.front());
        last.push(p.values.back());
    }
    const double s2 = ou.sigma * ou.sigma;
    CHECK(std::abs(first.variance() / s2 - 1) < 0.05);
    CHECK(std::abs(last.variance() / s2 - 1) < 0.05);
}

TEST_CASE("RunningStats matches two-pass statistics and merges exactly")
{
    std::vector<double> x;
    for (int i = 0; i < 1000; ++i)
        x.push_back(1e6 + std::sin(i * 0.37) + 0.001 * i);
    double mean = 0;
    for (double v : x)
        mean += v;
    mean /= x.size();
    double var = 0;
    for (double v : x)
        var += (v - mean) * (v - mean);
    var /= x.size() - 1;

    RunningStats all, a, b;
    for (std::size_t i = 0; i < x.size(); ++i) {
        all.push(x[i]);
        (i < 400 ? a : b).push(x[i]);
    }
    a.merge(b);
    CHECK(all.mean() == doctest::Approx(mean).epsilon(1e-14));
    CHECK(all.variance() == doctest::Approx(var).epsilon(1e-9));
    CHECK(a.count() == 1000);
    CHECK(a.mean() == doctest::Approx(mean).epsilon(1e-14));
    CHECK(a.variance() == doctest::Approx(var).epsilon(1e-9));
    CHECK(all.std_error() == doctest::Approx(std::sqrt(var / 1000)).epsilon(1e-9));
}

TEST_CASE("single noiseless trial equals propagate")
{
    const double rabi = 20 * mhz;
    const auto seq = PulseSequence::rotary_echo(pi, rabi, 30);
    NoiseSpec spec;
    MonteCarloOptions o;
    o.trials = 1;
    o.propagate.sample_dt = seq.cycle_period();
    const auto r = monte_carlo(seq, 2 * mhz, spec, o);
    PropagateOptions po;
    po.sample_dt = seq.cycle_period();
    po.dt_max = default_dt_max(build_waveform(seq, 2 * mhz));
    const auto tr = propagate(build_waveform(seq, 2 * mhz), nullptr, po);
    REQUIRE(r.mean.size() == tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i)
        CHECK(r.mean.values[i] == tr.values[i]);
    CHECK(r.trials == 1);
}

TEST_CASE("ensemble mean is independent of the thread count")
{
    const double rabi = 20 * mhz;
    const auto seq = PulseSequence::rotary_echo(pi, rabi, 10);
    NoiseSpec spec;
    spec.kind = NoiseKind::OrnsteinUhlenbeck;
    spec.sigma = 0.05 * rabi;
    spec.tau_c = 200e-9;
    spec.seed = 123;
    MonteCarloOptions o;
    o.trials = 300;
    o.chunk = 16;
    o.propagate.sample_dt = seq.cycle_period();
    o.threads = 1;
    const auto a = monte_carlo(seq, 2 * mhz, spec, o);
    o.threads = 3;
    const auto b = monte_carlo(seq, 2 * mhz, spec, o);
    CHECK(a.mean.values == b.mean.values);
    CHECK(a.mean.std_error == b.mean.std_error);
    for (double v : a.mean.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("Ramsey under OU bath noise follows the Kubo envelope")
{
    NoiseSpec spec;
    spec.kind = NoiseKind::OrnsteinUhlenbeck;
    spec.sigma = mhz;
    spec.tau_c = 200e-9;
    spec.seed = 2024;
    const auto seq = PulseSequence::ramsey(1e-6);
    MonteCarloOptions o;
    o.trials = 4000;
    o.propagate.sample_dt = 50e-9;
    const auto r = monte_carlo(seq, 0.0, spec, o);
    for (std::size_t i = 1; i < r.mean.size(); ++i) {
        const double t = r.mean.time(i);
        const double expect = 0.5 * (1 + std::exp(-zeta_prime(spec.sigma, spec.tau_c, t)));
        CHECK(std::abs(r.mean.values[i] - expect) <= 3 * r.mean.std_error[i] + 1e-12);
    }
}

TEST_CASE("long-correlation OU reproduces static noise")
{
    const double rabi = 20 * mhz;
    const auto seq = PulseSequence::rotary_echo(pi, rabi, 40);
    const double t_end = seq.total_duration();
    NoiseSpec st;
    st.sigma = 1.0 * mhz;
    st.seed = 1;
    NoiseSpec ou = st;
    ou.kind = NoiseKind::OrnsteinUhlenbeck;
    ou.tau_c = 1e4 * t_end;
    ou.seed = 2;
    MonteCarloOptions o;
    o.trials = 2000;
    o.propagate.sample_dt = seq.cycle_period();
    o.propagate.dt_max = default_dt_max(build_waveform(seq, 0.0));
    const auto a = monte_carlo(seq, 0.5 * mhz, st, o);
    const auto b = monte_carlo(seq, 0.5 * mhz, ou, o);
    for (std::size_t i = 0; i < a.mean.size(); ++i) {
        const double se = std::hypot(a.mean.std_error[i], b.mean.std_error[i]);
        CHECK(std::abs(a.mean.values[i] - b.mean.values[i]) <= 3 * se + 1e-12);
    }
}

TEST_CASE("trial dump")
{
    const auto seq = PulseSequence::rotary_echo(pi, 20 * mhz, 2);
    NoiseSpec spec;
    spec.sigma = mhz;
    MonteCarloOptions o;
    o.trials = 5;
    const std::string file = "remag_test_dump.csv";
    dump_trials_csv(file, seq, 0.0, spec, o, 2);
    std::ifstream in(file);
    std::string header;
    std::getline(in, header);
    CHECK(header == "trial,series,index,t_s,value");
    std::size_t lines = 0;
    for (std::string l; std::getline(in, l);)
        ++lines;
    CHECK(lines > 10);
    std::remove(file.c_str());
}
