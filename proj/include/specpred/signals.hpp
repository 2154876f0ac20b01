#pragma once

#include "specpred/numerics.hpp"

#include <optional>
#include <vector>

namespace specpred {

// Cubic smoothstep 3s^2 - 2s^3 on [0, 1], clamped outside.
double smoothstep(double s);
double smoothstep_derivative(double s);

enum class DelayKind { constant, sinusoid, table };

struct DelaySpec {
    DelayKind kind = DelayKind::constant;
    double D0 = 0.5;
    double amplitude = 0.0;
    double omega = 1.0;
    double phase = 0.0;
    // Knots for the table kind; values are delays, not deviations.
    std::vector<double> times;
    std::vector<double> values;

    bool operator==(const DelaySpec&) const = default;
};

// Time-varying input delay D(t), C^1 in t.
class DelaySignal {
public:
    DelaySignal() = default;
    explicit DelaySignal(DelaySpec spec);

    static DelaySignal constant(double D0);
    static DelaySignal sinusoid(double D0, double amplitude, double omega, double phase = 0.0);

    double value(double t) const;
    double derivative(double t) const;
    double nominal() const { return spec_.D0; }
    // max |D(t) - D0| over all t.
    double max_deviation() const;
    double min_value() const { return spec_.D0 - max_deviation(); }
    const DelaySpec& spec() const { return spec_; }

private:
    DelaySpec spec_;
    std::vector<double> slopes_;
};

DelaySignal make_delay(const DelaySpec& spec, std::optional<double> certified_delta = std::nullopt);

enum class TermKind { sinusoid, smoothed_step, exponential_decay, pulse };

// One additive component a * shape(t) of a vector disturbance.
struct DisturbanceTerm {
    TermKind kind = TermKind::sinusoid;
    std::vector<cplx> amplitude;
    double omega = 1.0;
    double phase = 0.0;
    double t_on = 0.0;
    double t_off = 1.0;
    double width = 1.0;
    double rate = 1.0;

    bool operator==(const DisturbanceTerm&) const = default;
};

struct DisturbanceSpec {
    int dim = 1;
    std::vector<DisturbanceTerm> terms;  // empty: identically zero

    bool operator==(const DisturbanceSpec&) const = default;
};

class DisturbanceSignal {
public:
    DisturbanceSignal() = default;
    explicit DisturbanceSignal(DisturbanceSpec spec);

    static DisturbanceSignal zero(int dim);

    Vec value(double t) const;
    Vec derivative(double t) const;
    bool is_zero() const { return spec_.terms.empty(); }
    int dim() const { return spec_.dim; }
    DisturbanceSignal scaled(double factor) const;
    DisturbanceSignal operator+(const DisturbanceSignal& other) const;
    const DisturbanceSpec& spec() const { return spec_; }

private:
    DisturbanceSpec spec_;
};

DisturbanceSignal make_disturbance(const DisturbanceSpec& spec);

}  // namespace specpred
