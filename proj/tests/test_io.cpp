#include "doctest.h"

#include "specpred/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

using namespace specpred;

namespace {

std::string message_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

Scenario toy_scenario() {
    Scenario s;
    s.system = SystemDescriptor::explicit_list({cplx(1.0), cplx(-2.0), cplx(-7.0)}, {{1.0}, {0.5}, {0.25}}, 1.0, 1.0);
    SynthesisOptions o;
    o.alpha = 1.5;
    s.certificate = synthesize(s.system, o);
    DelaySpec ds;
    ds.kind = DelayKind::sinusoid;
    ds.D0 = s.certificate.D0;
    ds.amplitude = 0.5 * s.certificate.delta_max;
    ds.omega = 2.0;
    s.delay = make_delay(ds, s.certificate.delta_max);
    DisturbanceSpec d;
    d.dim = 1;
    DisturbanceTerm t;
    t.kind = TermKind::pulse;
    t.amplitude = {0.3};
    t.t_on = 0.2;
    t.t_off = 0.6;
    t.width = 0.1;
    d.terms = {t};
    s.d1 = make_disturbance(d);
    s.d2 = DisturbanceSignal::zero(1);
    s.x0 = {1.0, -0.5, 0.25};
    s.n_modes = 3;
    s.dt = 2e-3;
    s.t_final = 1.0;
    s.name = "toy";
    return s;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("specpred_test_io_" + name);
}

}  // namespace

TEST_CASE("shortest decimal formatting round-trips") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e-12) == "1e-12");
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(format_double(-INFINITY) == "-inf");
    for (double x : {M_PI, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0660788})
        CHECK(parse_double(format_double(x)) == x);
    CHECK(std::isnan(parse_double("nan")));
    CHECK(parse_double("+2.5") == 2.5);
    CHECK_THROWS_AS(parse_double("2.5x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_double(""), std::invalid_argument);
}

TEST_CASE("complex and matrix encoding") {
    CHECK(complex_to_json(cplx(2.0)) == json(2.0));
    CHECK(complex_to_json(cplx(1.0, -3.0)) == json::array({1.0, -3.0}));
    CHECK(complex_from_json(json::array({0.5, 0.25}), "z") == cplx(0.5, 0.25));
    CHECK(message_of([] { complex_from_json(json::array({1.0}), "x0[2]"); }).find("x0[2]") != std::string::npos);
    Mat m(2, 2);
    m << cplx(1.0, 2.0), 3.0, -4.0, cplx(0.0, 1e-9);
    CHECK(matrix_from_json(matrix_to_json(m), "m") == m);
}

TEST_CASE("descriptor round-trips") {
    SystemDescriptor rd = SystemDescriptor::reaction_diffusion(15.0, 8192);
    json j = descriptor_to_json(rd);
    CHECK(j["kind"] == "reaction_diffusion");
    SystemDescriptor back = descriptor_from_json(j);
    CHECK(back.reaction() == 15.0);
    CHECK(back.quadrature_panels() == 8192);
    CHECK(descriptor_to_json(back) == j);

    LiftingNorms lift{{0.75}, {2.5}};
    SystemDescriptor ex = SystemDescriptor::explicit_list({cplx(1.0, 2.0), cplx(-3.0)}, {{1.0}, {cplx(0.0, 1.0)}},
                                                          0.5, 2.0, lift);
    json je = descriptor_to_json(ex);
    SystemDescriptor eb = descriptor_from_json(je);
    CHECK(eb.explicit_eigenvalues() == ex.explicit_eigenvalues());
    CHECK(eb.explicit_b() == ex.explicit_b());
    REQUIRE(eb.lifting_norms().has_value());
    CHECK(eb.lifting_norms()->abe_sq == lift.abe_sq);
    CHECK(descriptor_to_json(eb) == je);

    json bad = je;
    bad.erase("explicit_eigenvalues");
    CHECK(message_of([&] { descriptor_from_json(bad); }).find("explicit_eigenvalues") != std::string::npos);
}

TEST_CASE("certificate round-trips bit-exactly") {
    Scenario s = toy_scenario();
    Certificate c = s.certificate;
    c.set("Cbar1", 48.61234567891, Provenance::fitted);
    c.set("Cbar4", 1.0 / 3.0, Provenance::fitted);
    c.ensemble = "initial:6 d1:7 d2:7";
    Certificate back = certificate_from_json(certificate_to_json(c));
    CHECK(back == c);
    CHECK(back.find("Cbar1")->provenance == Provenance::fitted);
    CHECK(back.value("Cbar4") == 1.0 / 3.0);

    json text = json::parse(certificate_to_json(c).dump());
    CHECK(certificate_from_json(text) == c);

    json bad = certificate_to_json(c);
    bad.erase("delta_max");
    CHECK(message_of([&] { certificate_from_json(bad); }).find("delta_max") != std::string::npos);
}

TEST_CASE("scenario round-trips and resolves named delay values") {
    Scenario s = toy_scenario();
    json j = scenario_to_json(s);
    Scenario back = scenario_from_json(json::parse(j.dump()));
    CHECK(back.name == "toy");
    CHECK(back.certificate == s.certificate);
    CHECK(back.delay.spec() == s.delay.spec());
    CHECK(back.d1.spec() == s.d1.spec());
    CHECK(back.d2.is_zero());
    CHECK(back.x0 == s.x0);
    CHECK(back.dt == s.dt);
    CHECK(back.n_modes == 3);
    CHECK(scenario_to_json(back) == j);

    json named = j;
    named["delay"]["amplitude"] = "delta_max";
    named["delay"]["D0"] = "D0";
    Scenario nb = scenario_from_json(named);
    CHECK(nb.delay.spec().amplitude == s.certificate.delta_max);
    CHECK(nb.delay.nominal() == s.certificate.D0);

    json over = j;
    over["delay"]["amplitude"] = 2.0 * s.certificate.delta_max;
    CHECK_THROWS_AS(scenario_from_json(over), std::invalid_argument);
}

TEST_CASE("scenario sections may be files") {
    Scenario s = toy_scenario();
    auto sys = temp_file("system.json");
    save_json_file(sys, descriptor_to_json(s.system));
    json j = scenario_to_json(s);
    j["system"] = sys.filename().string();
    j.erase("certificate");
    Scenario back = scenario_from_json(j, sys.parent_path());
    CHECK(back.system.explicit_eigenvalues() == s.system.explicit_eigenvalues());
    CHECK(back.certificate.n0 >= 1);
    std::filesystem::remove(sys);
}

TEST_CASE("json files report parse errors with their name") {
    auto p = temp_file("broken.json");
    {
        std::ofstream out(p);
        out << "{\n  \"c\": 15,\n  \"m\": \n}\n";
    }
    std::string msg = message_of([&] { load_json_file(p); });
    CHECK(msg.find(p.string()) != std::string::npos);
    CHECK(msg.find("line 4") != std::string::npos);
    std::filesystem::remove(p);
    CHECK_THROWS_AS(load_json_file(temp_file("missing.json")), std::runtime_error);
}

TEST_CASE("trajectory csv round-trips bit-exactly") {
    Scenario s = toy_scenario();
    Trajectory tr = simulate(s);
    std::stringstream ss;
    write_trajectory_csv(ss, tr);
    Trajectory back = read_trajectory_csv(ss);
    CHECK(back.t == tr.t);
    CHECK(back.c == tr.c);
    CHECK(back.Y == tr.Y);
    CHECK(back.Z == tr.Z);
    CHECK(back.u == tr.u);
    CHECK(back.v == tr.v);
    CHECK(back.norm_lower == tr.norm_lower);
    CHECK(back.norm_upper == tr.norm_upper);
    CHECK(back.n0 == tr.n0);
    CHECK(back.m == tr.m);
    CHECK(back.n_modes == tr.n_modes);
}

TEST_CASE("trajectory csv diagnostics name the line") {
    std::stringstream bad_header("t,c_1,norm_upper\n");
    CHECK_THROWS_AS(read_trajectory_csv(bad_header), std::invalid_argument);

    std::string head = "t,c_1,Y_1,Z_1,u_1,v_1,norm_lower,norm_upper\n";
    std::stringstream short_row(head + "0,1,1,1,0,0,1,1\n\n0.1,1,1\n");
    CHECK(message_of([&] { read_trajectory_csv(short_row); }).find("line 4") != std::string::npos);

    std::stringstream bad_value(head + "0,1,1,1,0,0,1,1\n0.1,1,1,x,0,0,1,1\n");
    std::string msg = message_of([&] { read_trajectory_csv(bad_value); });
    CHECK(msg.find("line 3") != std::string::npos);

    std::stringstream cplx_row(head + "0,1-2e-3i,1,1,0,0,1,1\n");
    Trajectory tr = read_trajectory_csv(cplx_row);
    CHECK(tr.c(0, 0) == cplx(1.0, -2e-3));
}

TEST_CASE("sweep axis parsing") {
    SweepAxis a = parse_sweep_axis("delay_amplitude=0:delta_max:5", 0.2);
    CHECK(a.param == "delay_amplitude");
    CHECK(a.lo == 0.0);
    CHECK(a.hi == 0.2);
    CHECK(a.n == 5);
    CHECK(parse_sweep_axis(sweep_axis_to_string(a)) == a);
    CHECK(parse_sweep_axis("disturbance_scale=1:1:1").n == 1);
    CHECK_THROWS_AS(parse_sweep_axis("delay_amplitude=0:delta_max:5"), std::invalid_argument);
    CHECK_THROWS_AS(parse_sweep_axis("gain=0:1:3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_sweep_axis("delay_omega=0:1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_sweep_axis("delay_omega=0:1:0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_sweep_axis("delay_omega=0:1:1"), std::invalid_argument);
}

TEST_CASE("run config round-trips") {
    RunConfig c;
    c.subcommand = "sweep";
    c.scenario = "scenario.json";
    c.out = "sweep.csv";
    c.seed = 42;
    c.jobs = 8;
    c.sweep = {"delay_amplitude=0:delta_max:5", "disturbance_scale=0.5:2:4"};
    c.falsify_eps = 0.45;
    CHECK(run_config_from_json(json::parse(run_config_to_json(c).dump())) == c);
    RunConfig d;
    d.subcommand = "certify";
    d.fit = false;
    CHECK(run_config_from_json(run_config_to_json(d)) == d);
    CHECK_THROWS_AS(run_config_from_json(json::object()), std::invalid_argument);
}

TEST_CASE("lemma2 problem round-trips") {
    Lemma2Problem p;
    p.A = Mat::Zero(2, 2);
    p.A(0, 0) = -1.0;
    p.A(1, 1) = -2.0;
    p.C = 10.0 * Mat::Identity(2, 2);
    p.r = 0.5;
    p.eps = 0.015;
    p.M_lambda = 1.0;
    p.lambda = 1.0;
    p.d = Modulation::smoothed_square(1.0, M_PI / 0.5, 20.0);
    p.q = Modulation::sinusoid(0.5, 1.3, 0.2);
    p.p = DisturbanceSignal::zero(2);
    p.x0.offset = Vec::Ones(2);
    json j = lemma2_problem_to_json(p);
    Lemma2Problem back = lemma2_problem_from_json(json::parse(j.dump()));
    CHECK(lemma2_problem_to_json(back) == j);
    CHECK(back.d.value(0.3) == p.d.value(0.3));
    CHECK(back.q.value(0.7) == p.q.value(0.7));
    CHECK(*back.M_lambda == 1.0);
}
