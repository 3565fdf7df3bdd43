#include "doctest.h"

#include "cli/runner.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace remag;
using namespace remag::cli;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text)
{
    try {
        parse_config(text, "scenario.ini");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string body(const fs::path& p)
{
    std::ifstream in(p);
    std::string line, out;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#')
            out += line + '\n';
    return out;
}

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("remag_test_" + name);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("config errors carry file and line")
{
    CHECK(error_of("[sequence]\nrabi_mhz = 17\nbogus = 1\n").find("scenario.ini:3") == 0);
    CHECK(error_of("[nope]\n").find("scenario.ini:1") == 0);
    CHECK(error_of("rabi_mhz = 17\n").find("scenario.ini:1") == 0);
    CHECK(error_of("[sequence]\nrabi_mhz = fast\n").find("scenario.ini:2") == 0);
    CHECK(error_of("[sequence]\ncycles = 3\ncycles = 4\n").find("scenario.ini:3") == 0);
    CHECK(error_of("[sequence]\ntheta = 1\ntheta_pi = 1\n").find("scenario.ini:3") == 0);
    CHECK(error_of("[sequence]\n\nrabi_mhz = -2\n").find("scenario.ini:3") == 0);
    CHECK(error_of("[noise]\nkind = pink\n").find("scenario.ini:2") == 0);
    CHECK(error_of("[sequence]\nrabi_mhz = 17 ; inline comment\n# comment\n").empty());
}

TEST_CASE("defaults, theta_pi and units")
{
    const auto d = parse_config("");
    CHECK(d.theta == doctest::Approx(pi));
    CHECK(d.rabi() == doctest::Approx(two_pi * 17e6));
    CHECK_FALSE(d.trials_explicit);
    const auto c = parse_config("[sequence]\ntheta_pi = 0.75\n[noise]\ntau_c_us = 0.5\n[run]\ntrials = 7\n");
    CHECK(c.theta == doctest::Approx(0.75 * pi));
    CHECK(c.tau_c() == doctest::Approx(0.5e-6));
    CHECK(c.trials_explicit);
    CHECK(c.sequence().theta == doctest::Approx(0.75 * pi));
}

TEST_CASE("config hash ignores key order and formatting")
{
    const auto a = parse_config("[sequence]\nrabi_mhz = 20\ncycles = 9\n[run]\nseed = 4\n");
    const auto b = parse_config("[run]\nseed=4\n\n[sequence]\ncycles =9\nrabi_mhz= 20.0\n");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    const auto c = parse_config("[sequence]\nrabi_mhz = 20\ncycles = 10\n[run]\nseed = 4\n");
    CHECK(a.hash() != c.hash());
    // theta_pi and theta resolve to the same key
    CHECK(parse_config("[sequence]\ntheta_pi = 1\n").hash() == parse_config("").hash());
    CHECK(parse_config("[run]\nthreads = 3\n").hash() == parse_config("").hash());
}

TEST_CASE("validity warning for OU bath outside the window")
{
    const auto c = parse_config("[sequence]\ntheta_pi = 0.75\n[noise]\nkind = ou\nsigma_rel = 0.05\ntau_c_us = 0.01\n");
    CHECK(c.warnings.size() == 1);
    const auto ok = parse_config("[sequence]\ntheta_pi = 1\nrabi_mhz = 20\n[noise]\nkind = ou\nsigma_rel = 0.05\n");
    CHECK(ok.warnings.empty());
}

TEST_CASE("simulate is reproducible and writes a manifest")
{
    auto cfg = parse_config("[sequence]\ncycles = 20\n[noise]\nkind = ou\nsigma_rel = 0.05\n[run]\ntrials = 40\n");
    const auto d1 = scratch("sim1"), d2 = scratch("sim2");
    RunRequest r{"simulate", "", d1, cfg};
    run(r);
    cfg.threads = 3;
    r.out = d2;
    r.config = cfg;
    run(r);
    CHECK(body(d1 / "trace.csv") == body(d2 / "trace.csv"));
    CHECK(fs::exists(d1 / "trace.json"));
    std::ifstream in(d1 / "manifest.json");
    const auto m = nlohmann::json::parse(in);
    CHECK(m["config_hash"] == cfg.hash());
    CHECK(m["seed"] == 1);
    CHECK(m["files"].size() == 2);
    CHECK(m.contains("started_utc"));
    CHECK(m.contains("finished_utc"));
    std::ifstream csv(d1 / "trace.csv");
    std::string first;
    std::getline(csv, first);
    CHECK(first.rfind("# tool: remag", 0) == 0);
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("partial outputs are removed on failure")
{
    const auto dir = scratch("fail");
    const auto cfg = parse_config("");
    {
        OutputSet out(dir, "simulate", cfg);
        Table t({"x"});
        t.add({1.0});
        out.csv("partial", t);
        CHECK(fs::exists(dir / "partial.csv"));
    }
    CHECK_FALSE(fs::exists(dir));

    // failure inside a command
    RunRequest r{"spectrum", "", dir, parse_config("[sequence]\nkind = rabi\n")};
    CHECK_THROWS_AS(run(r), ConfigError);
    CHECK_FALSE(fs::exists(dir));

    // a pre-existing directory survives, only our files go
    fs::create_directories(dir);
    std::ofstream(dir / "keep.txt") << "x";
    CHECK_THROWS_AS(run(r), ConfigError);
    CHECK(fs::exists(dir / "keep.txt"));
    CHECK_FALSE(fs::exists(dir / "trace.csv"));
    fs::remove_all(dir);
}

TEST_CASE("cell formatting round-trips")
{
    for (double v : {0.1, 1.0 / 3.0, 6.6e-3, 1e-300, 12345.678})
        CHECK(std::stod(format_cell(v)) == v);
    CHECK(format_cell(std::int64_t(42)) == "42");
    CHECK(format_cell(std::string("re")) == "re");
}

TEST_CASE("every figure preset is known")
{
    CHECK(figure_ids().size() == 11);
    const auto dir = scratch("fig");
    RunRequest r{"figure", "zz", dir, parse_config("")};
    CHECK_THROWS_AS(run(r), ConfigError);
    CHECK_FALSE(fs::exists(dir));
}
