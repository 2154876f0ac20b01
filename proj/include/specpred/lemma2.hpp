#pragma once

#include "specpred/signals.hpp"
#include "specpred/synthesis.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace specpred {

// Scalar signal with |value| <= 1, used for the delay mismatch d and the gain q
// of the perturbed delay system x' = A x + q C [x(t - r - eps d) - x(t - r)] + p.
enum class ModulationKind { constant, sinusoid, smoothed_square };

struct Modulation {
    ModulationKind kind = ModulationKind::constant;
    double level = 0.0;  // constant value, or amplitude
    double omega = 1.0;
    double phase = 0.0;
    double sharpness = 10.0;  // smoothed_square: level tanh(sharpness sin(omega t + phase))

    double value(double t) const;
    double max_abs() const;

    static Modulation constant(double v);
    static Modulation sinusoid(double amplitude, double omega, double phase = 0.0);
    static Modulation smoothed_square(double amplitude, double omega, double sharpness = 10.0, double phase = 0.0);
};

// Initial history x0(theta) = offset + amplitude sin(omega theta + phase) on [-r - eps, 0].
struct HistorySpec {
    Vec offset;
    Vec amplitude;
    double omega = 0.0;
    double phase = 0.0;

    Vec value(double theta) const;
    Vec derivative(double theta) const;
};

struct Lemma2Problem {
    Mat A;
    Mat C;
    double r = 0.5;
    double eps = 0.0;
    // Decay envelope ||e^{At}|| <= M_lambda e^{-lambda t}; computed by decay_envelope when absent.
    std::optional<double> M_lambda;
    std::optional<double> lambda;
    Modulation d;
    Modulation q = Modulation::constant(1.0);
    DisturbanceSignal p;
    HistorySpec x0;
    double dt = 1e-2;
    double t_final = 20.0;
};

struct Lemma2Rates {
    double M_lambda = 1.0;
    double lambda = 0.0;
    double norm_A = 0.0;
    double norm_C = 0.0;
    double small_gain_lhs = 0.0;  // M_lambda ||C|| (e^{||A|| eps} - e^{-lambda eps})
    bool small_gain = false;      // small_gain_lhs < lambda
};

Lemma2Rates lemma2_rates(const Lemma2Problem& p);

// Throws std::invalid_argument on malformed problems (shapes, r, eps, dt, |d|, |q|).
void validate_lemma2(const Lemma2Problem& p);

struct Lemma2Run {
    std::vector<double> t;
    Mat x;  // rows: time samples
    std::vector<double> norm;
    double history_sup = 0.0;  // grid sup of ||x0|| over [-r - eps, 0]
};

// RK4 with cubic Hermite interpolation of the computed solution for delayed
// reads. Needs dt <= r - eps so every delayed read is already known.
Lemma2Run lemma2_simulate(const Lemma2Problem& p);

struct Lemma2Options {
    int members = 50;
    std::uint64_t seed = 1;
    int jobs = 1;
};

// Ensemble of admissible (d, q, p, x0) around the base problem's (A, C, r, eps).
// Each member uses one channel: initial history with p = 0, or disturbance with
// x0 = 0. Deterministic extremes come first, then random members alternating
// between the channels, each drawn from its own stream of the seed.
std::vector<Lemma2Problem> lemma2_ensemble(const Lemma2Problem& base, const Lemma2Options& opts);

struct Lemma2Report {
    Lemma2Rates rates;
    SigmaRate sigma;
    double M = 0.0;  // worst ||x(t)|| e^{sigma t} / sup ||x0|| over initial members
    double N = 0.0;  // worst ||x(t)|| / sup e^{-sigma (t - tau)} ||p(tau)|| over disturbance members
    int members = 0;
    int initial_members = 0;
    int disturbance_members = 0;
    double max_growth_rate = 0.0;  // largest late-time log-slope of ||x|| among initial members
    bool finite = false;
    // The lemma is not falsified by this ensemble. An ensemble can never prove it.
    bool pass() const { return finite && M >= 1.0; }
};

// Requires the small-gain condition; throws std::invalid_argument otherwise.
Lemma2Report lemma2_validate(const Lemma2Problem& base, const Lemma2Options& opts = {});

struct Lemma2Falsification {
    double worst_ratio = 0.0;  // against M e^{-sigma t} sup||x0|| + N sup e^{-sigma (t - tau)} ||p||
    double max_growth_rate = 0.0;
    std::string worst_member;
    bool violated() const { return worst_ratio > 1.0; }
};

// Runs the ensemble of `problem` without the small-gain precondition and
// measures it against a fixed envelope (M, N, sigma).
Lemma2Falsification lemma2_falsify(const Lemma2Problem& problem, double M, double N, double sigma,
                                   const Lemma2Options& opts = {});

}  // namespace specpred
