#include "cli/runner.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace remag::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Rotary-echo magnetometry toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    std::string config_path, out_dir = "out", figure;
    std::uint64_t seed = 0;
    int trials = 0, threads = -1;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "scenario file (INI sections)");
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--trials", trials, "Monte Carlo trials");
        sub->add_option("--threads", threads, "worker threads, 0 = all cores");
    };
    const std::vector<std::pair<std::string, std::string>> cmds{
        {"simulate", "propagate one sequence, optionally averaged over noise"},
        {"spectrum", "periodogram, peak significance and detuning extraction"},
        {"sensitivity", "ideal and corrected sensitivity against interrogation time"},
        {"noise", "Monte Carlo decay against the closed-form envelopes"},
        {"calcium", "field and required sensitivity of a calcium flux"},
        {"figure", "regenerate one figure preset"},
    };
    for (const auto& [name, help] : cmds) {
        auto* sub = app.add_subcommand(name, help);
        add_common(sub);
        if (name == "figure")
            sub->add_option("id", figure, "preset id")->required()->check(CLI::IsMember(figure_ids()));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    RunRequest req;
    req.command = app.get_subcommands().front()->get_name();
    req.figure = figure;
    req.out = out_dir;
    try {
        req.config = config_path.empty() ? parse_config("", "<defaults>") : load_config(config_path);
        auto* sub = app.get_subcommands().front();
        auto& c = req.config;
        if (sub->count("--seed")) {
            c.seed = seed;
            c.origins["run.seed"] = "--seed";
        }
        if (sub->count("--trials")) {
            c.trials = trials;
            c.trials_explicit = true;
            c.origins["run.trials"] = "--trials";
        }
        if (sub->count("--threads")) {
            c.threads = threads;
            c.origins["run.threads"] = "--threads";
        }
        validate(req.config);
        for (const auto& w : req.config.warnings)
            std::cerr << "warning: " << w << '\n';
        run(req);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
    std::cout << req.out.string() << '\n';
    return 0;
}
