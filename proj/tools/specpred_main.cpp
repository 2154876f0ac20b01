#include "specpred/run.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

using namespace specpred;

namespace {

// Flags shared by every subcommand; values land in cfg.
void add_common(CLI::App* sub, RunConfig& cfg, std::string& config_path, std::optional<double>& falsify) {
    sub->add_option("--config", config_path, "JSON run config; explicit flags override its keys");
    sub->add_option("--descriptor", cfg.descriptor, "system descriptor JSON");
    sub->add_option("--certificate", cfg.certificate, "certificate JSON");
    sub->add_option("--scenario", cfg.scenario, "scenario JSON (validate-lemma2: problem JSON)");
    sub->add_option("--trajectory", cfg.trajectory, "trajectory CSV");
    sub->add_option("--out", cfg.out, "output path; stdout when omitted");
    sub->add_option("--seed", cfg.seed, "ensemble seed");
    sub->add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--sweep", cfg.sweep, "sweep axis param=lo:hi:n (repeatable)");
    sub->add_flag("--oracle", cfg.oracle, "simulate with the RK4 reference engine");
    sub->add_flag("!--no-fit", cfg.fit, "certify without fitting the existential constants");
    sub->add_option("--members", cfg.members, "validate-lemma2 ensemble size")->check(CLI::PositiveNumber);
    sub->add_option("--falsify-eps", falsify, "validate-lemma2: also test the fitted envelope at this eps");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predictor-feedback certificates for diagonal boundary control systems"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::string config_path;
    std::optional<double> falsify;
    for (const char* name : {"certify", "simulate", "check", "sweep", "validate-lemma2"}) {
        const char* help = "";
        std::string n = name;
        if (n == "certify") help = "synthesize (and fit) a certificate from a descriptor";
        else if (n == "simulate") help = "simulate a scenario to a trajectory CSV";
        else if (n == "check") help = "check a trajectory against a certificate's envelopes";
        else if (n == "sweep") help = "sweep scenario parameters over a grid";
        else help = "fit and falsify the perturbed-delay envelope";
        add_common(app.add_subcommand(name, help), cfg, config_path, falsify);
    }
    CLI11_PARSE(app, argc, argv);

    LogLevel level;
    try {
        level = parse_log_level(std::getenv("SPECPRED_LOG"));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    if (!config_path.empty()) {
        RunConfig file_cfg;
        try {
            json j = load_json_file(config_path);
            if (!j.contains("subcommand")) j["subcommand"] = sub->get_name();
            file_cfg = run_config_from_json(j);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        }
        // Paths inside a config file are relative to the file.
        std::filesystem::path dir = std::filesystem::path(config_path).parent_path();
        auto resolve = [&](const std::string& p) {
            if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
            return (dir / p).string();
        };
        auto given = [&](const char* flag) { return sub->count(flag) > 0; };
        if (!given("--descriptor")) cfg.descriptor = resolve(file_cfg.descriptor);
        if (!given("--certificate")) cfg.certificate = resolve(file_cfg.certificate);
        if (!given("--scenario")) cfg.scenario = resolve(file_cfg.scenario);
        if (!given("--trajectory")) cfg.trajectory = resolve(file_cfg.trajectory);
        if (!given("--out")) cfg.out = resolve(file_cfg.out);
        if (!given("--seed")) cfg.seed = file_cfg.seed;
        if (!given("--jobs")) cfg.jobs = file_cfg.jobs;
        if (!given("--sweep")) cfg.sweep = file_cfg.sweep;
        if (!given("--oracle")) cfg.oracle = file_cfg.oracle;
        if (!given("--no-fit")) cfg.fit = file_cfg.fit;
        if (!given("--members")) cfg.members = file_cfg.members;
        if (!given("--falsify-eps")) falsify = file_cfg.falsify_eps;
    }
    cfg.subcommand = sub->get_name();
    cfg.falsify_eps = falsify;
    return run(cfg, std::cout, std::cerr, level);
}
