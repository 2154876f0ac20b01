#include "specpred/sweep.hpp"

#include "specpred/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace specpred {

std::string SweepRow::status() const {
    if (!certified) return "uncertified";
    return pass ? "pass" : "fail";
}

bool SweepResult::pass() const {
    for (const auto& r : rows)
        if (r.certified && !r.pass) return false;
    return true;
}

namespace {

const std::vector<std::string> kEstimates = {"state_iss", "control_iss", "truncated_state", "control_truncated_rate"};

double axis_value(const SweepAxis& a, int i) {
    if (a.n == 1) return a.lo;
    return a.lo + (a.hi - a.lo) * static_cast<double>(i) / static_cast<double>(a.n - 1);
}

DelaySpec sinusoid_base(const Scenario& base) {
    DelaySpec spec = base.delay.spec();
    if (spec.kind != DelayKind::sinusoid) {
        spec = DelaySpec{};
        spec.kind = DelayKind::sinusoid;
        spec.D0 = base.certificate.D0;
        spec.amplitude = base.certificate.delta_max;
        spec.omega = 3.0;
    }
    return spec;
}

Scenario point_scenario(const Scenario& base, const std::vector<SweepAxis>& axes, const std::vector<double>& values) {
    Scenario s = base;
    std::optional<DelaySpec> delay;
    const double delta = base.certificate.delta_max;
    for (size_t i = 0; i < axes.size(); ++i) {
        const std::string& p = axes[i].param;
        double v = values[i];
        if (p == "delay_amplitude") {
            if (!delay) delay = sinusoid_base(base);
            delay->amplitude = v;
        } else if (p == "delay_omega") {
            if (!delay) delay = sinusoid_base(base);
            delay->omega = v;
        } else if (p == "disturbance_scale") {
            s.d1 = base.d1.scaled(v);
            s.d2 = base.d2.scaled(v);
        } else {
            throw std::invalid_argument("sweep: unknown parameter '" + p + "'");
        }
    }
    if (delay) {
        s.certified = std::abs(delay->amplitude) <= delta * (1.0 + 1e-12);
        s.delay = make_delay(*delay, s.certified ? std::optional<double>(delta) : std::nullopt);
    }
    return s;
}

SweepRow evaluate(const Scenario& s, const std::vector<double>& values) {
    SweepRow row;
    row.params = values;
    row.delta = s.delay.max_deviation();
    row.certified = s.certified;
    row.kappa = s.certificate.kappa;
    Trajectory tr = simulate(s);

    bool has_x0 = std::any_of(s.x0.begin(), s.x0.end(), [](cplx z) { return z != 0.0; });
    row.kappa_hat = std::numeric_limits<double>::quiet_NaN();
    if (has_x0) {
        if (s.d1.is_zero() && s.d2.is_zero()) {
            row.kappa_hat = fit_decay_rate(tr, s.certificate).kappa_hat;
        } else {
            Scenario free = s;
            free.d1 = DisturbanceSignal::zero(s.certificate.m);
            free.d2 = DisturbanceSignal::zero(s.certificate.m);
            row.kappa_hat = fit_decay_rate(simulate(free), s.certificate).kappa_hat;
        }
    }
    bool pass = std::isnan(row.kappa_hat) || row.kappa_hat >= row.kappa;
    if (s.certificate.has_fitted()) {
        EnvelopeReport rep = check_envelopes(tr, s);
        for (const auto& name : kEstimates) {
            const EstimateCheck* e = rep.find(name);
            row.ratios.push_back(e->worst_ratio);
            pass = pass && e->pass;
        }
    } else {
        row.ratios.assign(kEstimates.size(), std::numeric_limits<double>::quiet_NaN());
    }
    row.pass = pass;
    return row;
}

}  // namespace

SweepResult run_sweep(const Scenario& base, const std::vector<SweepAxis>& axes, int jobs) {
    if (axes.empty()) throw std::invalid_argument("sweep: at least one axis is required");
    SweepResult out;
    out.estimates = kEstimates;
    for (const auto& a : axes) {
        if (a.n < 1) throw std::invalid_argument("sweep: axis '" + a.param + "' needs at least one point");
        out.axes.push_back(a.param);
    }
    size_t total = 1;
    for (const auto& a : axes) total *= static_cast<size_t>(a.n);
    std::vector<std::vector<double>> grid;
    for (size_t flat = 0; flat < total; ++flat) {
        std::vector<double> v(axes.size());
        size_t rest = flat;
        for (size_t k = axes.size(); k-- > 0;) {
            v[k] = axis_value(axes[k], static_cast<int>(rest % static_cast<size_t>(axes[k].n)));
            rest /= static_cast<size_t>(axes[k].n);
        }
        grid.push_back(std::move(v));
    }
    for (size_t i = 0; i < axes.size(); ++i) {
        if (axes[i].param != "delay_amplitude") continue;
        std::vector<double> v = grid.front();
        v[i] = 1.5 * base.certificate.delta_max;
        grid.push_back(v);
    }
    out.rows.resize(grid.size());
    parallel_for(grid.size(), jobs, [&](size_t i) { out.rows[i] = evaluate(point_scenario(base, axes, grid[i]), grid[i]); });
    return out;
}

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
    os << "index";
    for (const auto& a : r.axes) os << ',' << a;
    os << ",delta,kappa_hat,kappa";
    for (const auto& e : r.estimates) os << ',' << e;
    os << ",status\n";
    for (size_t i = 0; i < r.rows.size(); ++i) {
        const SweepRow& row = r.rows[i];
        os << i;
        for (double p : row.params) os << ',' << format_double(p);
        os << ',' << format_double(row.delta) << ',' << format_double(row.kappa_hat) << ',' << format_double(row.kappa);
        for (double x : row.ratios) os << ',' << format_double(x);
        os << ',' << row.status() << '\n';
    }
}

}  // namespace specpred
