#pragma once

#include "specpred/signals.hpp"
#include "specpred/synthesis.hpp"

namespace specpred {

struct TransitionSignal {
    double t0 = 1.0;
};

struct TransitionValue {
    double value = 0.0;
    double derivative = 0.0;
};

TransitionValue transition_eval(const TransitionSignal& signal, double t);

// Piecewise-linear interpolation of samples g_j at s = j*dt.
template <class Sample>
auto interp_linear(double s, double dt, Sample&& sample) {
    double x = s / dt;
    double base = std::floor(x);
    double frac = x - base;
    auto j = static_cast<long>(base);
    auto g0 = sample(j);
    if (frac == 0.0) return decltype(g0)(g0);
    return decltype(g0)(g0 + (sample(j + 1) - g0) * frac);
}

// Uniform control samples u_j = u(j dt), j >= 0, with u = 0 for negative times.
class ControlHistory {
public:
    ControlHistory(int inputs, double dt, double span);

    int inputs() const { return m_; }
    double dt() const { return dt_; }
    long size() const { return count_; }
    double latest_time() const { return static_cast<double>(count_ - 1) * dt_; }

    void push(const Vec& u);
    Vec sample(long j) const;
    cplx component(long j, int k) const;
    Vec value(double s) const;

private:
    int m_;
    double dt_;
    long capacity_;
    long count_ = 0;
    Mat ring_;
};

// The implicit feedback law, extracted from a certificate.
struct ControlLaw {
    Mat K;
    Vec lambdas;
    Mat B;
    double D0 = 0.5;
    TransitionSignal transition;
};

ControlLaw control_law(const Certificate& cert);

// Integral over [max(t - D0, 0), t] of e^{(t - s - D0) A} B u(s) ds for the
// piecewise-linear interpolant of the history (which must cover t).
Vec predictor_integral(const ControlHistory& history, double t, const Vec& lambdas, const Mat& B, double D0);

struct ControllerSettings {
    double dt = 1e-3;
    int max_iters = 50;
    double tol = 1e-12;
};

struct ControlSolve {
    Vec u;
    int iterations = 0;
    double residual = 0.0;
};

// Solves u = phi(t) {K Y + d2 + K I[u](t)} at t = history.size() * dt without
// modifying the history.
ControlSolve control_step(const Vec& Y, const Vec& d2, double t, const ControlLaw& law, const ControlHistory& history,
                          const ControllerSettings& settings);

// Norm of the map u(t) -> phi K I[u](t) restricted to the last segment (phi = 1).
double implicit_contraction(const ControlLaw& law, double dt);

class Controller {
public:
    Controller(ControlLaw law, ControllerSettings settings, double delta);

    // Computes and records u at the next grid time.
    Vec step(double t, const Vec& Y, const Vec& d2);

    const ControlHistory& history() const { return history_; }
    const ControlLaw& law() const { return law_; }
    const ControllerSettings& settings() const { return settings_; }
    int last_iterations() const { return last_iterations_; }
    double last_residual() const { return last_residual_; }
    double max_residual() const { return max_residual_; }

private:
    ControlLaw law_;
    ControllerSettings settings_;
    ControlHistory history_;
    int last_iterations_ = 0;
    double last_residual_ = 0.0;
    double max_residual_ = 0.0;
};

}  // namespace specpred
