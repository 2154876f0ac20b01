#include "specpred/run.hpp"

#include "specpred/sweep.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace specpred {

namespace fs = std::filesystem;

LogLevel parse_log_level(const char* text) {
    if (text == nullptr) return LogLevel::info;
    std::string s = text;
    if (s.empty() || s == "info" || s == "1") return LogLevel::info;
    if (s == "quiet" || s == "0" || s == "error") return LogLevel::quiet;
    if (s == "debug" || s == "2") return LogLevel::debug;
    throw std::invalid_argument("SPECPRED_LOG: expected quiet, info or debug, got '" + s + "'");
}

void validate_run_config(const RunConfig& c) {
    const std::string& sub = c.subcommand;
    if (sub != "certify" && sub != "simulate" && sub != "check" && sub != "sweep" && sub != "validate-lemma2")
        throw std::invalid_argument("unknown subcommand '" + sub + "'");
    auto need = [&](const std::string& value, const char* flag) {
        if (value.empty()) throw std::invalid_argument(sub + ": " + flag + " is required");
    };
    if (sub == "simulate" || sub == "sweep") need(c.scenario, "--scenario");
    if (sub == "check") {
        need(c.trajectory, "--trajectory");
        need(c.certificate, "--certificate");
    }
    for (const auto& [value, flag] : {std::pair{c.descriptor, "--descriptor"}, {c.certificate, "--certificate"},
                                      {c.scenario, "--scenario"}, {c.trajectory, "--trajectory"}})
        if (!value.empty() && !fs::exists(value)) throw std::invalid_argument(std::string(flag) + ": no such file " + value);
    if (sub == "sweep" && c.sweep.empty()) throw std::invalid_argument("sweep: at least one --sweep axis is required");
    if (c.jobs < 1) throw std::invalid_argument("--jobs must be at least 1");
    if (c.members < 1) throw std::invalid_argument("--members must be at least 1");
}

Lemma2Problem default_lemma2_problem() {
    Lemma2Problem p;
    p.A = Mat::Zero(2, 2);
    p.A(0, 0) = -1.0;
    p.A(1, 1) = -2.0;
    p.C = 10.0 * Mat::Identity(2, 2);
    p.r = 0.5;
    p.eps = 0.015;
    p.M_lambda = 1.0;
    p.lambda = 1.0;
    p.p = DisturbanceSignal::zero(2);
    p.x0.offset = Vec::Zero(2);
    return p;
}

namespace {

struct Context {
    const RunConfig& cfg;
    std::ostream& out;
    std::ostream& log;
    LogLevel level;

    void info(const std::string& msg) const {
        if (level != LogLevel::quiet) log << msg << '\n';
    }
    void debug(const std::string& msg) const {
        if (level == LogLevel::debug) log << msg << '\n';
    }

    // Writes to --out, or to the output stream when no path is given.
    template <class Fn>
    void emit(Fn&& write) const {
        if (cfg.out.empty()) {
            write(out);
            return;
        }
        std::ofstream f(cfg.out);
        if (!f) throw std::runtime_error("cannot write " + cfg.out);
        write(f);
        info("wrote " + cfg.out);
    }
};

Scenario load_scenario(const Context& ctx) {
    fs::path p = ctx.cfg.scenario;
    Scenario s = scenario_from_json(load_json_file(p), p.parent_path());
    if (!ctx.cfg.certificate.empty()) {
        s.certificate = certificate_from_json(load_json_file(ctx.cfg.certificate));
        ctx.debug("certificate from " + ctx.cfg.certificate);
    }
    return s;
}

int do_certify(const Context& ctx) {
    SystemDescriptor desc = ctx.cfg.descriptor.empty()
                                ? SystemDescriptor::reaction_diffusion(15.0)
                                : descriptor_from_json(load_json_file(ctx.cfg.descriptor));
    Certificate cert;
    if (ctx.cfg.fit) {
        CertifyOptions o;
        o.ensemble.seed = ctx.cfg.seed;
        o.jobs = ctx.cfg.jobs;
        cert = certify_with_fit(desc, o);
    } else {
        cert = synthesize(desc);
    }
    ctx.info("n0 " + std::to_string(cert.n0) + "  delta_max " + format_double(cert.delta_max) + "  sigma " +
             format_double(cert.sigma) + "  kappa " + format_double(cert.kappa));
    ctx.emit([&](std::ostream& os) { os << certificate_to_json(cert).dump(2) << '\n'; });
    return cert.delta_max > 0.0 && cert.sigma > 0.0 ? 0 : 1;
}

int do_simulate(const Context& ctx) {
    Scenario s = load_scenario(ctx);
    Trajectory tr = ctx.cfg.oracle ? oracle_simulate(s) : simulate(s);
    ctx.info(std::to_string(tr.samples()) + " samples, " + std::to_string(tr.n_modes) + " modes" +
             (ctx.cfg.oracle ? " (reference engine)" : ""));
    ctx.emit([&](std::ostream& os) { write_trajectory_csv(os, tr); });
    return 0;
}

int do_check(const Context& ctx) {
    Trajectory tr = load_trajectory_csv(ctx.cfg.trajectory);
    Certificate cert = certificate_from_json(load_json_file(ctx.cfg.certificate));
    Scenario s;
    if (!ctx.cfg.scenario.empty()) {
        s = load_scenario(ctx);
    } else {
        s.certificate = cert;
        s.delay = DelaySignal::constant(cert.D0);
        s.d1 = DisturbanceSignal::zero(cert.m);
        s.d2 = DisturbanceSignal::zero(cert.m);
    }
    s.dt = tr.dt;
    EnvelopeReport rep = check_envelopes(tr, s);
    json j = envelope_report_to_json(rep);
    DecayFit decay = fit_decay_rate(tr, cert);
    j["kappa_hat"] = decay.kappa_hat;
    j["kappa"] = cert.kappa;
    for (const auto& e : rep.estimates)
        ctx.info(e.name + ": worst ratio " + format_double(e.worst_ratio) + (e.pass ? " pass" : " FAIL"));
    ctx.emit([&](std::ostream& os) { os << j.dump(2) << '\n'; });
    return rep.pass() ? 0 : 1;
}

int do_sweep(const Context& ctx) {
    Scenario base = load_scenario(ctx);
    std::vector<SweepAxis> axes;
    for (const auto& text : ctx.cfg.sweep) axes.push_back(parse_sweep_axis(text, base.certificate.delta_max));
    SweepResult r = run_sweep(base, axes, ctx.cfg.jobs);
    int failed = 0, uncertified = 0;
    for (const auto& row : r.rows) {
        if (!row.certified) ++uncertified;
        else if (!row.pass) ++failed;
    }
    ctx.info(std::to_string(r.rows.size()) + " points, " + std::to_string(failed) + " failed, " +
             std::to_string(uncertified) + " uncertified");
    ctx.emit([&](std::ostream& os) { write_sweep_csv(os, r); });
    return r.pass() ? 0 : 1;
}

int do_lemma2(const Context& ctx) {
    Lemma2Problem p = ctx.cfg.scenario.empty() ? default_lemma2_problem()
                                               : lemma2_problem_from_json(load_json_file(ctx.cfg.scenario));
    Lemma2Options o;
    o.members = ctx.cfg.members;
    o.seed = ctx.cfg.seed;
    o.jobs = ctx.cfg.jobs;
    Lemma2Report rep = lemma2_validate(p, o);
    json j = lemma2_report_to_json(rep);
    ctx.info("M " + format_double(rep.M) + "  N " + format_double(rep.N) + "  sigma " + format_double(rep.sigma.sigma));
    bool ok = rep.pass();
    if (ctx.cfg.falsify_eps) {
        Lemma2Problem wide = p;
        wide.eps = *ctx.cfg.falsify_eps;
        Lemma2Falsification f = lemma2_falsify(wide, rep.M, rep.N, rep.sigma.sigma, o);
        j["falsification"] = lemma2_falsification_to_json(f);
        j["falsification"]["eps"] = wide.eps;
        ctx.info("eps " + format_double(wide.eps) + ": worst ratio " + format_double(f.worst_ratio) +
                 (f.violated() ? " (envelope violated)" : " (envelope holds)"));
        ok = ok && f.violated();
    }
    ctx.emit([&](std::ostream& os) { os << j.dump(2) << '\n'; });
    return ok ? 0 : 1;
}

}  // namespace

int run(const RunConfig& c, std::ostream& out, std::ostream& log, LogLevel level) {
    Context ctx{c, out, log, level};
    auto start = std::chrono::steady_clock::now();
    int status = 2;
    try {
        validate_run_config(c);
        ctx.debug("config " + run_config_to_json(c).dump());
        if (c.subcommand == "certify") status = do_certify(ctx);
        else if (c.subcommand == "simulate") status = do_simulate(ctx);
        else if (c.subcommand == "check") status = do_check(ctx);
        else if (c.subcommand == "sweep") status = do_sweep(ctx);
        else status = do_lemma2(ctx);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return 2;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ctx.debug(c.subcommand + " finished in " + format_double(secs) + " s, exit " + std::to_string(status));
    return status;
}

}  // namespace specpred
