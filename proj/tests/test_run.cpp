#include "doctest.h"

#include "specpred/run.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace specpred;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(SPECPRED_SOURCE_DIR) / "configs";

fs::path temp_path(const std::string& name) {
    return fs::temp_directory_path() / ("specpred_test_run_" + name);
}

struct Outcome {
    int status;
    std::string out;
    std::string log;
};

Outcome run_quiet(const RunConfig& c) {
    std::ostringstream out, log;
    int status = run(c, out, log, LogLevel::quiet);
    return {status, out.str(), log.str()};
}

Scenario toy_scenario() {
    Scenario s;
    s.system = SystemDescriptor::explicit_list({cplx(1.0), cplx(-2.0), cplx(-7.0)}, {{1.0}, {0.5}, {0.25}}, 1.0, 1.0);
    CertifyOptions o;
    o.synthesis.alpha = 1.5;
    o.ensemble.initial = 2;
    o.ensemble.d1 = 2;
    o.ensemble.d2 = 2;
    o.dt = 2e-3;
    o.t_final = 4.0;
    s.certificate = certify_with_fit(s.system, o);
    s.delay = DelaySignal::sinusoid(s.certificate.D0, s.certificate.delta_max, 3.0);
    s.d1 = DisturbanceSignal::zero(1);
    s.d2 = DisturbanceSignal::zero(1);
    s.x0 = {1.0, 0.5, -0.25};
    s.n_modes = 3;
    s.dt = 2e-3;
    s.t_final = 4.0;
    return s;
}

}  // namespace

TEST_CASE("log level parsing") {
    CHECK(parse_log_level(nullptr) == LogLevel::info);
    CHECK(parse_log_level("") == LogLevel::info);
    CHECK(parse_log_level("quiet") == LogLevel::quiet);
    CHECK(parse_log_level("2") == LogLevel::debug);
    CHECK_THROWS_AS(parse_log_level("loud"), std::invalid_argument);
}

TEST_CASE("run config validation") {
    RunConfig c;
    c.subcommand = "plot";
    CHECK_THROWS_AS(validate_run_config(c), std::invalid_argument);
    c.subcommand = "simulate";
    CHECK_THROWS_AS(validate_run_config(c), std::invalid_argument);
    c.scenario = (kConfigs / "does_not_exist.json").string();
    CHECK_THROWS_AS(validate_run_config(c), std::invalid_argument);
    c.scenario = (kConfigs / "scenario_zero.json").string();
    CHECK_NOTHROW(validate_run_config(c));
    c.subcommand = "sweep";
    CHECK_THROWS_AS(validate_run_config(c), std::invalid_argument);
    c.sweep = {"delay_omega=1:2:2"};
    CHECK_NOTHROW(validate_run_config(c));
    c.jobs = 0;
    CHECK_THROWS_AS(validate_run_config(c), std::invalid_argument);
    RunConfig chk;
    chk.subcommand = "check";
    chk.trajectory = c.scenario;
    CHECK_THROWS_AS(validate_run_config(chk), std::invalid_argument);
}

TEST_CASE("simulate with zero data writes an all-zero trajectory") {
    RunConfig c;
    c.subcommand = "simulate";
    c.scenario = (kConfigs / "scenario_zero.json").string();
    Outcome r = run_quiet(c);
    REQUIRE(r.status == 0);
    std::istringstream in(r.out);
    Trajectory tr = read_trajectory_csv(in);
    CHECK(tr.samples() == 101);
    CHECK(tr.c.cwiseAbs().maxCoeff() == 0.0);
    CHECK(tr.u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(*std::max_element(tr.norm_upper.begin(), tr.norm_upper.end()) == 0.0);
}

TEST_CASE("module errors map to exit status 2 with the message") {
    auto bad = temp_path("bad_scenario.json");
    {
        std::ofstream f(bad);
        f << R"({"system": {"kind": "reaction_diffusion"}})";
    }
    RunConfig c;
    c.subcommand = "simulate";
    c.scenario = bad.string();
    Outcome r = run_quiet(c);
    CHECK(r.status == 2);
    CHECK(r.log.find("missing key 'c'") != std::string::npos);
    fs::remove(bad);
}

TEST_CASE("certify without fitting on the built-in descriptor") {
    RunConfig c;
    c.subcommand = "certify";
    c.fit = false;
    Outcome r = run_quiet(c);
    REQUIRE(r.status == 0);
    Certificate cert = certificate_from_json(json::parse(r.out));
    CHECK(cert.delta_max > 0.0);
    CHECK(cert.sigma > 0.0);
    CHECK_FALSE(cert.has_fitted());
}

TEST_CASE("check passes a certified trajectory and writes a report") {
    Scenario s = toy_scenario();
    auto cert_path = temp_path("cert.json");
    auto traj_path = temp_path("traj.csv");
    auto scen_path = temp_path("scenario.json");
    auto report_path = temp_path("report.json");
    save_json_file(cert_path, certificate_to_json(s.certificate));
    save_trajectory_csv(traj_path, simulate(s));
    save_json_file(scen_path, scenario_to_json(s));

    RunConfig c;
    c.subcommand = "check";
    c.certificate = cert_path.string();
    c.trajectory = traj_path.string();
    c.scenario = scen_path.string();
    c.out = report_path.string();
    Outcome r = run_quiet(c);
    CHECK(r.status == 0);
    json rep = load_json_file(report_path);
    CHECK(rep["pass"] == true);
    CHECK(rep["kappa_hat"].get<double>() >= rep["kappa"].get<double>());

    Certificate tight = s.certificate;
    tight.set("Cbar1", 1e-3 * tight.value("Cbar1"), Provenance::fitted);
    save_json_file(cert_path, certificate_to_json(tight));
    c.scenario.clear();
    CHECK(run_quiet(c).status == 1);
    for (const auto& p : {cert_path, traj_path, scen_path, report_path}) fs::remove(p);
}

TEST_CASE("validate-lemma2 with falsification") {
    RunConfig c;
    c.subcommand = "validate-lemma2";
    c.scenario = (kConfigs / "lemma2_triple.json").string();
    c.members = 20;
    c.falsify_eps = 0.45;
    Outcome r = run_quiet(c);
    CHECK(r.status == 0);
    json rep = json::parse(r.out);
    CHECK(rep["falsification"]["violated"] == true);
    c.falsify_eps = 0.015;
    CHECK(run_quiet(c).status == 1);
}
