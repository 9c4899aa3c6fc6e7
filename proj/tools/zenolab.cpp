#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qzeno/config.hpp"
#include "qzeno/runner.hpp"
#include "qzeno/validate.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> calibration;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "JSON experiment configuration")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", args.out_path, "output CSV path (default: stdout)");
    sub->add_option("--seed", args.seed, "override the master seed");
    sub->add_option("--threads", args.threads, "worker threads (output is unaffected)");
    sub->add_option("--calibration", args.calibration, "frequency calibration")
        ->check(CLI::IsMember({"khz", "mhz"}));
}

qzeno::ExperimentConfig load_config(const CommonArgs& args) {
    qzeno::ExperimentConfig cfg;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw qzeno::ArgumentError("cannot open config " + args.config_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw qzeno::ArgumentError(std::string("config is not valid JSON: ") + e.what());
        }
        cfg = qzeno::parse_config(j);
    }
    if (args.seed) cfg.seed = *args.seed;
    if (args.threads) cfg.threads = *args.threads;
    if (args.calibration) cfg.calibration = *args.calibration;
    cfg.calibration_scale(); // validates the tag
    return cfg;
}

template <class Runner>
int run_to_output(const CommonArgs& args, Runner&& runner) {
    const qzeno::ExperimentConfig cfg = load_config(args);
    if (args.out_path.empty()) {
        runner(cfg, std::cout);
        return 0;
    }
    std::ofstream out(args.out_path);
    if (!out) {
        std::cerr << "cannot open output " << args.out_path << "\n";
        return 1;
    }
    runner(cfg, out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic-Zeno survival and Fisher-information laboratory"};
    app.require_subcommand(1);

    CommonArgs surface_args, scaling_args, crb_args, ld_args;
    CLI::App* surface = app.add_subcommand(
        "surface", "survival and Fisher eigenvalue over a (mu1, mu2) grid");
    add_common(surface, surface_args);
    CLI::App* scaling = app.add_subcommand(
        "scaling", "Fisher information versus spin count and measurement count");
    add_common(scaling, scaling_args);
    CLI::App* crb =
        app.add_subcommand("crb", "estimator variance against the Cramer-Rao bound");
    add_common(crb, crb_args);
    CLI::App* ld =
        app.add_subcommand("ld", "concentration of the log-survival rate versus m");
    add_common(ld, ld_args);
    CLI::App* validate = app.add_subcommand("validate", "run the acceptance checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (surface->parsed()) return run_to_output(surface_args, [](auto& c, auto& o) {
                qzeno::run_surface(c, o);
            });
        if (scaling->parsed()) return run_to_output(scaling_args, [](auto& c, auto& o) {
                qzeno::run_scaling(c, o);
            });
        if (crb->parsed()) return run_to_output(crb_args, [](auto& c, auto& o) {
                qzeno::run_crb(c, o);
            });
        if (ld->parsed()) return run_to_output(ld_args, [](auto& c, auto& o) {
                qzeno::run_ld(c, o);
            });
        if (validate->parsed()) {
            return qzeno::acceptance::run_and_print(std::cout) ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
