#include "doctest.h"

#include "specpred/signals.hpp"

#include <cmath>
#include <stdexcept>

using namespace specpred;

TEST_CASE("smoothstep clamps and is C1 at the ends") {
    CHECK(smoothstep(-1.0) == 0.0);
    CHECK(smoothstep(0.0) == 0.0);
    CHECK(smoothstep(0.5) == 0.5);
    CHECK(smoothstep(1.0) == 1.0);
    CHECK(smoothstep(3.0) == 1.0);
    CHECK(smoothstep_derivative(0.0) == 0.0);
    CHECK(smoothstep_derivative(1.0) == 0.0);
    CHECK(smoothstep_derivative(0.5) == doctest::Approx(1.5));
}

TEST_CASE("constant delay") {
    DelaySignal d = make_delay(DelaySpec{});
    for (double t : {0.0, 0.3, 7.0}) {
        CHECK(d.value(t) == 0.5);
        CHECK(d.derivative(t) == 0.0);
    }
    CHECK(d.max_deviation() == 0.0);
}

TEST_CASE("sinusoid delay covers exactly [D0 - a, D0 + a]") {
    const double D0 = 0.5;
    const double a = 0.01;
    const double omega = 3.0;
    DelaySignal d = DelaySignal::sinusoid(D0, a, omega);
    double lo = 1e9;
    double hi = -1e9;
    for (int i = 0; i <= 20000; ++i) {
        double t = i * (2.0 * M_PI / omega) / 20000.0;
        lo = std::min(lo, d.value(t));
        hi = std::max(hi, d.value(t));
    }
    CHECK(lo == doctest::Approx(D0 - a).epsilon(1e-12));
    CHECK(hi == doctest::Approx(D0 + a).epsilon(1e-12));
    CHECK(d.max_deviation() == a);
    double h = 1e-6;
    CHECK(d.derivative(0.7) == doctest::Approx((d.value(0.7 + h) - d.value(0.7 - h)) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("table delay is C1, monotone between knots and flat outside") {
    DelaySpec s;
    s.kind = DelayKind::table;
    s.D0 = 0.5;
    s.times = {0.0, 1.0, 2.0, 3.0};
    s.values = {0.5, 0.51, 0.51, 0.49};
    DelaySignal d = make_delay(s);
    CHECK(d.value(-1.0) == 0.5);
    CHECK(d.value(5.0) == 0.49);
    CHECK(d.max_deviation() == doctest::Approx(0.01));
    for (double t = 0.0; t <= 3.0; t += 0.001) {
        CHECK(d.value(t) <= 0.51 + 1e-15);
        CHECK(d.value(t) >= 0.49 - 1e-15);
    }
    for (double knot : {1.0, 2.0}) {
        double e = 1e-9;
        CHECK(d.derivative(knot - e) == doctest::Approx(d.derivative(knot + e)).epsilon(1e-6));
    }
    double h = 1e-6;
    CHECK(d.derivative(1.3) == doctest::Approx((d.value(1.3 + h) - d.value(1.3 - h)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("make_delay errors") {
    DelaySpec s;
    s.kind = DelayKind::sinusoid;
    s.amplitude = 0.02;
    CHECK_THROWS_AS(make_delay(s, 0.01), std::invalid_argument);
    CHECK_NOTHROW(make_delay(s, 0.02));
    s.amplitude = 0.6;
    CHECK_THROWS_AS(make_delay(s), std::invalid_argument);
    s.D0 = -1.0;
    CHECK_THROWS_AS(make_delay(s), std::invalid_argument);
}

TEST_CASE("zero disturbance is identically zero") {
    DisturbanceSignal d = DisturbanceSignal::zero(2);
    CHECK(d.is_zero());
    for (double t : {0.0, 1.0, 100.0}) {
        CHECK(d.value(t).norm() == 0.0);
        CHECK(d.derivative(t).norm() == 0.0);
    }
}

TEST_CASE("disturbance terms and derivatives") {
    DisturbanceSpec s;
    s.dim = 2;
    DisturbanceTerm sine;
    sine.kind = TermKind::sinusoid;
    sine.amplitude = {1.0, -2.0};
    sine.omega = 2.0;
    sine.phase = 0.3;
    DisturbanceTerm step;
    step.kind = TermKind::smoothed_step;
    step.amplitude = {0.5, 0.0};
    step.t_on = 1.0;
    step.width = 0.5;
    DisturbanceTerm decay;
    decay.kind = TermKind::exponential_decay;
    decay.amplitude = {0.0, 3.0};
    decay.rate = 0.7;
    DisturbanceTerm pulse;
    pulse.kind = TermKind::pulse;
    pulse.amplitude = {1.0, 1.0};
    pulse.t_on = 2.0;
    pulse.t_off = 3.0;
    pulse.width = 0.25;
    s.terms = {sine, step, decay, pulse};
    DisturbanceSignal d = make_disturbance(s);

    CHECK(d.value(0.0)(0).real() == doctest::Approx(std::sin(0.3)));
    CHECK(d.value(0.0)(1).real() == doctest::Approx(-2.0 * std::sin(0.3) + 3.0));
    // Step is complete after t_on + width; pulse is off before t_on and after t_off + width.
    CHECK(d.value(1.6)(0).real() == doctest::Approx(std::sin(3.5) + 0.5));
    CHECK(d.value(2.5)(0).real() == doctest::Approx(std::sin(5.3) + 0.5 + 1.0));
    CHECK(d.value(3.5)(0).real() == doctest::Approx(std::sin(7.3) + 0.5));
    double h = 1e-6;
    for (double t : {0.4, 1.2, 2.1, 3.1}) {
        Vec fd = (d.value(t + h) - d.value(t - h)) / (2 * h);
        CHECK((fd - d.derivative(t)).norm() < 1e-6);
    }
}

TEST_CASE("disturbance algebra is pointwise") {
    DisturbanceSpec s;
    DisturbanceTerm a;
    a.amplitude = {2.0};
    a.omega = 1.5;
    s.terms = {a};
    DisturbanceSignal d = make_disturbance(s);
    DisturbanceSignal e = d.scaled(-0.5) + DisturbanceSignal::zero(1);
    for (double t : {0.0, 0.9, 4.0}) CHECK(std::abs(e.value(t)(0) + 0.5 * d.value(t)(0)) < 1e-15);
    CHECK_THROWS_AS(d + DisturbanceSignal::zero(2), std::invalid_argument);
}

TEST_CASE("disturbance amplitude dimension is checked") {
    DisturbanceSpec s;
    s.dim = 2;
    DisturbanceTerm a;
    a.amplitude = {1.0};
    s.terms = {a};
    CHECK_THROWS_AS(make_disturbance(s), std::invalid_argument);
}
