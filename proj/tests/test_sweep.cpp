#include "doctest.h"

#include "specpred/sweep.hpp"

#include <cmath>
#include <sstream>

using namespace specpred;

namespace {

Scenario fitted_toy() {
    SystemDescriptor sys =
        SystemDescriptor::explicit_list({cplx(1.0), cplx(-2.0), cplx(-7.0)}, {{1.0}, {0.5}, {0.25}}, 1.0, 1.0);
    CertifyOptions o;
    o.synthesis.alpha = 1.5;
    o.ensemble.initial = 2;
    o.ensemble.d1 = 2;
    o.ensemble.d2 = 2;
    o.dt = 2e-3;
    o.t_final = 4.0;
    Scenario s;
    s.system = sys;
    s.certificate = certify_with_fit(sys, o);
    s.delay = DelaySignal::constant(s.certificate.D0);
    s.d1 = DisturbanceSignal::zero(1);
    s.d2 = DisturbanceSignal::zero(1);
    s.x0 = {1.0, 0.5, -0.25};
    s.n_modes = 3;
    s.dt = 2e-3;
    s.t_final = 4.0;
    return s;
}

}  // namespace

TEST_CASE("sweep grid, uncertified row and job independence") {
    Scenario base = fitted_toy();
    double dm = base.certificate.delta_max;
    std::vector<SweepAxis> axes = {parse_sweep_axis("delay_amplitude=0:delta_max:3", dm),
                                   parse_sweep_axis("disturbance_scale=0:1:2")};
    SweepResult a = run_sweep(base, axes, 1);
    SweepResult b = run_sweep(base, axes, 8);
    REQUIRE(a.rows.size() == 3 * 2 + 1);
    CHECK(a.rows[0].params == std::vector<double>{0.0, 0.0});
    CHECK(a.rows[1].params == std::vector<double>{0.0, 1.0});
    CHECK(a.rows[5].params == std::vector<double>{dm, 1.0});
    for (size_t i = 0; i + 1 < a.rows.size(); ++i) {
        CHECK(a.rows[i].certified);
        CHECK(a.rows[i].ratios.size() == 4);
        CHECK(a.rows[i].kappa_hat >= a.rows[i].kappa);
    }
    const SweepRow& extra = a.rows.back();
    CHECK_FALSE(extra.certified);
    CHECK(extra.status() == "uncertified");
    CHECK(extra.params[0] == doctest::Approx(1.5 * dm));
    CHECK(extra.delta == doctest::Approx(1.5 * dm));
    CHECK(a.pass());

    std::ostringstream ca, cb;
    write_sweep_csv(ca, a);
    write_sweep_csv(cb, b);
    CHECK(ca.str() == cb.str());
    CHECK(ca.str().rfind("index,delay_amplitude,disturbance_scale,delta,kappa_hat,kappa,state_iss", 0) == 0);
}

TEST_CASE("sweep input errors") {
    Scenario base = fitted_toy();
    CHECK_THROWS_AS(run_sweep(base, {}), std::invalid_argument);
    SweepAxis bad{"gain", 0.0, 1.0, 2};
    CHECK_THROWS_AS(run_sweep(base, {bad}), std::invalid_argument);
}

TEST_CASE("sweep without fitted constants reports NaN ratios") {
    Scenario base = fitted_toy();
    base.certificate.constants.clear();
    SweepResult r = run_sweep(base, {parse_sweep_axis("delay_omega=1:4:2")});
    REQUIRE(r.rows.size() == 2);
    for (const auto& row : r.rows) {
        CHECK(std::isnan(row.ratios[0]));
        CHECK(row.kappa_hat >= row.kappa);
    }
}
