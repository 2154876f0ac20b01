#include "specpred/signals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace specpred {

double smoothstep(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s * s * (3.0 - 2.0 * s);
}

double smoothstep_derivative(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return 6.0 * s * (1.0 - s);
}

DelaySignal::DelaySignal(DelaySpec spec) : spec_(std::move(spec)) {
    if (spec_.kind != DelayKind::table) return;
    const auto& x = spec_.times;
    const auto& y = spec_.values;
    size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("delay table: need at least two knots with matching values");
    for (size_t i = 1; i < n; ++i)
        if (!(x[i] > x[i - 1])) throw std::invalid_argument("delay table: knot times must be strictly increasing");
    // Monotone cubic Hermite slopes (Fritsch-Carlson) with flat ends.
    std::vector<double> secant(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) secant[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    slopes_.assign(n, 0.0);
    for (size_t i = 1; i + 1 < n; ++i)
        if (secant[i - 1] * secant[i] > 0.0) slopes_[i] = 0.5 * (secant[i - 1] + secant[i]);
    for (size_t i = 0; i + 1 < n; ++i) {
        if (secant[i] == 0.0) {
            slopes_[i] = 0.0;
            slopes_[i + 1] = 0.0;
            continue;
        }
        double a = slopes_[i] / secant[i];
        double b = slopes_[i + 1] / secant[i];
        double r = a * a + b * b;
        if (r > 9.0) {
            double tau = 3.0 / std::sqrt(r);
            slopes_[i] = tau * a * secant[i];
            slopes_[i + 1] = tau * b * secant[i];
        }
    }
}

DelaySignal DelaySignal::constant(double D0) {
    DelaySpec s;
    s.kind = DelayKind::constant;
    s.D0 = D0;
    return DelaySignal(s);
}

DelaySignal DelaySignal::sinusoid(double D0, double amplitude, double omega, double phase) {
    DelaySpec s;
    s.kind = DelayKind::sinusoid;
    s.D0 = D0;
    s.amplitude = amplitude;
    s.omega = omega;
    s.phase = phase;
    return DelaySignal(s);
}

double DelaySignal::value(double t) const {
    switch (spec_.kind) {
    case DelayKind::constant:
        return spec_.D0;
    case DelayKind::sinusoid:
        return spec_.D0 + spec_.amplitude * std::sin(spec_.omega * t + spec_.phase);
    case DelayKind::table: {
        const auto& x = spec_.times;
        const auto& y = spec_.values;
        if (t <= x.front()) return y.front();
        if (t >= x.back()) return y.back();
        size_t i = static_cast<size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin()) - 1;
        double h = x[i + 1] - x[i];
        double s = (t - x[i]) / h;
        double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        double h10 = s * (1.0 - s) * (1.0 - s);
        double h01 = s * s * (3.0 - 2.0 * s);
        double h11 = s * s * (s - 1.0);
        return h00 * y[i] + h10 * h * slopes_[i] + h01 * y[i + 1] + h11 * h * slopes_[i + 1];
    }
    }
    return spec_.D0;
}

double DelaySignal::derivative(double t) const {
    switch (spec_.kind) {
    case DelayKind::constant:
        return 0.0;
    case DelayKind::sinusoid:
        return spec_.amplitude * spec_.omega * std::cos(spec_.omega * t + spec_.phase);
    case DelayKind::table: {
        const auto& x = spec_.times;
        const auto& y = spec_.values;
        if (t <= x.front() || t >= x.back()) return 0.0;
        size_t i = static_cast<size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin()) - 1;
        double h = x[i + 1] - x[i];
        double s = (t - x[i]) / h;
        double d00 = 6.0 * s * (s - 1.0);
        double d10 = (1.0 - s) * (1.0 - 3.0 * s);
        double d01 = -d00;
        double d11 = s * (3.0 * s - 2.0);
        return (d00 * y[i] + d01 * y[i + 1]) / h + d10 * slopes_[i] + d11 * slopes_[i + 1];
    }
    }
    return 0.0;
}

double DelaySignal::max_deviation() const {
    switch (spec_.kind) {
    case DelayKind::constant:
        return 0.0;
    case DelayKind::sinusoid:
        return std::abs(spec_.amplitude);
    case DelayKind::table: {
        double d = 0.0;
        for (double v : spec_.values) d = std::max(d, std::abs(v - spec_.D0));
        return d;
    }
    }
    return 0.0;
}

DelaySignal make_delay(const DelaySpec& spec, std::optional<double> certified_delta) {
    if (!(spec.D0 > 0.0) || !std::isfinite(spec.D0)) throw std::invalid_argument("delay: D0 must be positive");
    if (spec.kind == DelayKind::sinusoid && (!(spec.amplitude >= 0.0) || !std::isfinite(spec.omega)))
        throw std::invalid_argument("delay: sinusoid needs a nonnegative amplitude and finite frequency");
    DelaySignal d(spec);
    if (!(d.min_value() > 0.0)) throw std::invalid_argument("delay: D(t) must stay positive");
    if (certified_delta && d.max_deviation() > *certified_delta)
        throw std::invalid_argument("delay: amplitude exceeds the certified delta");
    return d;
}

DisturbanceSignal::DisturbanceSignal(DisturbanceSpec spec) : spec_(std::move(spec)) {
    if (spec_.dim < 1) throw std::invalid_argument("disturbance: dimension must be >= 1");
    for (const auto& term : spec_.terms) {
        if (static_cast<int>(term.amplitude.size()) != spec_.dim)
            throw std::invalid_argument("disturbance: amplitude length must equal the input dimension");
        if ((term.kind == TermKind::smoothed_step || term.kind == TermKind::pulse) && !(term.width > 0.0))
            throw std::invalid_argument("disturbance: smoothing width must be positive");
        if (term.kind == TermKind::pulse && !(term.t_off >= term.t_on))
            throw std::invalid_argument("disturbance: pulse must end after it starts");
        if (term.kind == TermKind::exponential_decay && !std::isfinite(term.rate))
            throw std::invalid_argument("disturbance: decay rate must be finite");
    }
}

DisturbanceSignal DisturbanceSignal::zero(int dim) {
    DisturbanceSpec s;
    s.dim = dim;
    return DisturbanceSignal(s);
}

namespace {

void shape(const DisturbanceTerm& term, double t, double& f, double& df) {
    switch (term.kind) {
    case TermKind::sinusoid:
        f = std::sin(term.omega * t + term.phase);
        df = term.omega * std::cos(term.omega * t + term.phase);
        return;
    case TermKind::smoothed_step: {
        double s = (t - term.t_on) / term.width;
        f = smoothstep(s);
        df = smoothstep_derivative(s) / term.width;
        return;
    }
    case TermKind::exponential_decay:
        f = std::exp(-term.rate * t);
        df = -term.rate * f;
        return;
    case TermKind::pulse: {
        double s1 = (t - term.t_on) / term.width;
        double s2 = (t - term.t_off) / term.width;
        f = smoothstep(s1) - smoothstep(s2);
        df = (smoothstep_derivative(s1) - smoothstep_derivative(s2)) / term.width;
        return;
    }
    }
    f = 0.0;
    df = 0.0;
}

}  // namespace

Vec DisturbanceSignal::value(double t) const {
    Vec out = Vec::Zero(spec_.dim);
    for (const auto& term : spec_.terms) {
        double f = 0.0;
        double df = 0.0;
        shape(term, t, f, df);
        if (f == 0.0) continue;
        for (int k = 0; k < spec_.dim; ++k) out(k) += term.amplitude[static_cast<size_t>(k)] * f;
    }
    return out;
}

Vec DisturbanceSignal::derivative(double t) const {
    Vec out = Vec::Zero(spec_.dim);
    for (const auto& term : spec_.terms) {
        double f = 0.0;
        double df = 0.0;
        shape(term, t, f, df);
        for (int k = 0; k < spec_.dim; ++k) out(k) += term.amplitude[static_cast<size_t>(k)] * df;
    }
    return out;
}

DisturbanceSignal DisturbanceSignal::scaled(double factor) const {
    DisturbanceSpec s = spec_;
    for (auto& term : s.terms)
        for (auto& a : term.amplitude) a *= factor;
    return DisturbanceSignal(s);
}

DisturbanceSignal DisturbanceSignal::operator+(const DisturbanceSignal& other) const {
    if (other.dim() != dim()) throw std::invalid_argument("disturbance: dimension mismatch in sum");
    DisturbanceSpec s = spec_;
    s.terms.insert(s.terms.end(), other.spec_.terms.begin(), other.spec_.terms.end());
    return DisturbanceSignal(s);
}

DisturbanceSignal make_disturbance(const DisturbanceSpec& spec) {
    return DisturbanceSignal(spec);
}

}  // namespace specpred
