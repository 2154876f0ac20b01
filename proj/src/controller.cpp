#include "specpred/controller.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace specpred {

TransitionValue transition_eval(const TransitionSignal& signal, double t) {
    double s = t / signal.t0;
    return {smoothstep(s), smoothstep_derivative(s) / signal.t0};
}

ControlHistory::ControlHistory(int inputs, double dt, double span) : m_(inputs), dt_(dt) {
    if (inputs < 1) throw std::invalid_argument("ControlHistory: need at least one input");
    if (!(dt > 0.0)) throw std::invalid_argument("ControlHistory: dt must be positive");
    if (!(span >= 0.0)) throw std::invalid_argument("ControlHistory: span must be nonnegative");
    capacity_ = static_cast<long>(std::ceil(span / dt)) + 4;
    ring_ = Mat::Zero(m_, capacity_);
}

void ControlHistory::push(const Vec& u) {
    if (u.size() != m_) throw std::invalid_argument("ControlHistory: sample dimension mismatch");
    ring_.col(count_ % capacity_) = u;
    ++count_;
}

Vec ControlHistory::sample(long j) const {
    if (j < 0) return Vec::Zero(m_);
    if (j >= count_ || j < count_ - capacity_)
        throw std::out_of_range("ControlHistory: insufficient history for sample " + std::to_string(j));
    return ring_.col(j % capacity_);
}

cplx ControlHistory::component(long j, int k) const {
    if (j < 0) return 0.0;
    if (j >= count_ || j < count_ - capacity_)
        throw std::out_of_range("ControlHistory: insufficient history for sample " + std::to_string(j));
    return ring_(k, j % capacity_);
}

Vec ControlHistory::value(double s) const {
    double x = s / dt_;
    double r = std::round(x);
    if (std::abs(x - r) < 1e-9) return sample(static_cast<long>(r));
    return interp_linear(s, dt_, [this](long j) { return sample(j); });
}

ControlLaw control_law(const Certificate& cert) {
    ControlLaw law;
    law.K = cert.K;
    law.lambdas = cert.A.diagonal();
    law.B = cert.B;
    law.D0 = cert.D0;
    law.transition.t0 = cert.t0;
    return law;
}

namespace {

// Per-mode integral with the sample at index `skip` replaced by zero (skip < 0: none).
Vec predictor_integral_impl(const ControlHistory& history, double t, const Vec& lambdas, const Mat& B, double D0,
                            long skip) {
    const double dt = history.dt();
    const Eigen::Index n0 = lambdas.size();
    Vec out(n0);
    double lo = std::max(t - D0, 0.0);
    for (Eigen::Index n = 0; n < n0; ++n) {
        auto row = B.row(n);
        auto g = [&](long j) -> cplx {
            if (j < 0 || j == skip) return 0.0;
            cplx acc = 0.0;
            for (int k = 0; k < history.inputs(); ++k) acc += row(k) * history.component(j, k);
            return acc;
        };
        out(n) = exp_weighted_integral(lambdas(n), t - D0, lo, t, dt, g);
    }
    return out;
}

Vec endpoint_weights(const ControlLaw& law, double t, double dt) {
    Vec w(law.lambdas.size());
    for (Eigen::Index n = 0; n < law.lambdas.size(); ++n)
        w(n) = exp_weighted_endpoint_weight(law.lambdas(n), t - law.D0, t, dt);
    return w;
}

}  // namespace

Vec predictor_integral(const ControlHistory& history, double t, const Vec& lambdas, const Mat& B, double D0) {
    if (B.rows() != lambdas.size() || B.cols() != history.inputs())
        throw std::invalid_argument("predictor_integral: dimension mismatch");
    if (t > history.latest_time() + 1e-9 * history.dt())
        throw std::out_of_range("predictor_integral: insufficient history");
    return predictor_integral_impl(history, t, lambdas, B, D0, -1);
}

double implicit_contraction(const ControlLaw& law, double dt) {
    Vec w = endpoint_weights(law, law.D0, dt);
    return spectral_norm(law.K * w.asDiagonal() * law.B);
}

ControlSolve control_step(const Vec& Y, const Vec& d2, double t, const ControlLaw& law, const ControlHistory& history,
                          const ControllerSettings& settings) {
    const double dt = history.dt();
    const long J = history.size();
    if (std::abs(t - static_cast<double>(J) * dt) > 1e-9 * dt)
        throw std::invalid_argument("control_step: t must be the next history grid time");
    const int m = history.inputs();
    ControlSolve out;
    double phi = transition_eval(law.transition, t).value;
    if (phi == 0.0) {
        out.u = Vec::Zero(m);
        return out;
    }
    if (!(law.D0 >= dt)) throw std::invalid_argument("control_step: controller dt must not exceed D0");

    Vec known = predictor_integral_impl(history, t, law.lambdas, law.B, law.D0, J);
    Vec base = phi * (law.K * (Y + known) + d2);
    Mat gain = phi * law.K * endpoint_weights(law, t, dt).asDiagonal() * law.B;

    Vec u = J > 0 ? history.sample(J - 1) : Vec::Zero(m);
    bool converged = false;
    for (int it = 1; it <= settings.max_iters; ++it) {
        Vec next = base + gain * u;
        double step = (next - u).norm();
        u = std::move(next);
        out.iterations = it;
        if (!std::isfinite(step)) throw std::runtime_error("control_step: non-finite control at t = " + std::to_string(t));
        if (step <= settings.tol * std::max(1.0, u.norm())) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw std::runtime_error("control_step: fixed-point iteration did not converge in " +
                                 std::to_string(settings.max_iters) + " iterations at t = " + std::to_string(t) +
                                 " (reduce controller dt)");
    out.residual = (u - base - gain * u).norm();
    out.u = std::move(u);
    return out;
}

Controller::Controller(ControlLaw law, ControllerSettings settings, double delta)
    : law_(std::move(law)),
      settings_(settings),
      history_(static_cast<int>(law_.K.rows()), settings.dt, law_.D0 + delta + 2.0 * settings.dt) {
    if (!(settings_.dt > 0.0) || !(settings_.dt < law_.D0))
        throw std::invalid_argument("Controller: controller dt must lie in (0, D0)");
    if (settings_.max_iters < 1 || !(settings_.tol > 0.0))
        throw std::invalid_argument("Controller: max_iters and tol must be positive");
    if (law_.K.cols() != law_.lambdas.size() || law_.B.rows() != law_.lambdas.size() || law_.B.cols() != law_.K.rows())
        throw std::invalid_argument("Controller: inconsistent gain dimensions");
    double q = implicit_contraction(law_, settings_.dt);
    if (!(q < 1.0))
        throw std::invalid_argument("Controller: implicit equation is not a contraction at this controller dt (factor " +
                                    std::to_string(q) + ")");
}

Vec Controller::step(double t, const Vec& Y, const Vec& d2) {
    ControlSolve s = control_step(Y, d2, t, law_, history_, settings_);
    last_iterations_ = s.iterations;
    last_residual_ = s.residual;
    max_residual_ = std::max(max_residual_, s.residual / std::max(1.0, s.u.norm()));
    if (!(last_residual_ <= 10.0 * settings_.tol * std::max(1.0, s.u.norm())))
        throw std::runtime_error("Controller: implicit residual above tolerance at t = " + std::to_string(t));
    history_.push(s.u);
    return s.u;
}

}  // namespace specpred
