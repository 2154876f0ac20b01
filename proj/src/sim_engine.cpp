#include "specpred/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace specpred {

namespace {

long steps_for(double t_final, double dt) {
    return static_cast<long>(std::llround(t_final / dt));
}

// Four-point Lagrange interpolation of samples f(j) at x (in units of the grid),
// stencil clamped into [0, last].
template <class Sample>
auto interp_cubic(double x, long last, Sample&& f) {
    using R = std::decay_t<decltype(f(0L))>;
    auto base = static_cast<long>(std::floor(x));
    long start = std::clamp(base - 1, 0L, std::max(0L, last - 3));
    double weights[4];
    for (int i = 0; i < 4; ++i) {
        double w = 1.0;
        for (int k = 0; k < 4; ++k)
            if (k != i) w *= (x - static_cast<double>(start + k)) / static_cast<double>(i - k);
        weights[i] = w;
    }
    R acc = f(start) * weights[0];
    for (int i = 1; i < 4; ++i) acc += f(start + i) * weights[i];
    return acc;
}

struct ModeData {
    Vec lambda;
    Mat b;  // n_modes x m
};

ModeData mode_data(const SystemDescriptor& desc, int n_modes) {
    ModeData d;
    int m = desc.num_inputs();
    d.lambda.resize(n_modes);
    d.b.resize(n_modes, m);
    for (int n = 1; n <= n_modes; ++n) {
        d.lambda(n - 1) = desc.eigenvalue(n);
        for (int k = 0; k < m; ++k) d.b(n - 1, k) = desc.input_coeff(n, k);
    }
    return d;
}

Vec initial_state(const Scenario& s, int n_modes) {
    Vec c = Vec::Zero(n_modes);
    for (size_t i = 0; i < s.x0.size(); ++i) c(static_cast<Eigen::Index>(i)) = s.x0[i];
    return c;
}

Trajectory empty_trajectory(const Scenario& s, int n_modes, long samples) {
    Trajectory tr;
    tr.dt = s.dt;
    tr.n0 = s.certificate.n0;
    tr.m = s.certificate.m;
    tr.n_modes = n_modes;
    tr.t.resize(static_cast<size_t>(samples));
    tr.c.resize(samples, n_modes);
    tr.Y.resize(samples, tr.n0);
    tr.Z.resize(samples, tr.n0);
    tr.u.resize(samples, tr.m);
    tr.v.resize(samples, tr.m);
    tr.norm_lower.resize(static_cast<size_t>(samples));
    tr.norm_upper.resize(static_cast<size_t>(samples));
    return tr;
}

void record_state(Trajectory& tr, long j, double t, const Vec& c, double mr, double MR) {
    tr.t[static_cast<size_t>(j)] = t;
    tr.c.row(j) = c.transpose();
    tr.Y.row(j) = c.head(tr.n0).transpose();
    auto [lo, hi] = state_norm(c, mr, MR);
    tr.norm_lower[static_cast<size_t>(j)] = lo;
    tr.norm_upper[static_cast<size_t>(j)] = hi;
}

void check_finite(const Vec& c, long step) {
    if (!c.allFinite()) throw std::runtime_error("simulate: non-finite state at step " + std::to_string(step));
}

}  // namespace

int default_mode_count(const SystemDescriptor& desc, double alpha, int n0) {
    int cap = std::min(400, desc.max_index());
    for (int n = n0 + 1; n <= cap; ++n)
        if (desc.eigenvalue(n).real() <= -50.0 * alpha) return n;
    return std::max(cap, std::min(n0 + 1, desc.max_index()));
}

int resolved_mode_count(const Scenario& s) {
    if (s.n_modes > 0) return s.n_modes;
    return default_mode_count(s.system, s.certificate.alpha, s.certificate.n0);
}

double resolved_controller_dt(const Scenario& s) {
    return s.controller_dt > 0.0 ? s.controller_dt : s.dt;
}

void validate_scenario(const Scenario& s) {
    const Certificate& cert = s.certificate;
    if (cert.K.size() == 0) throw std::invalid_argument("scenario: certificate has no gain");
    if (cert.A.rows() != cert.n0 || cert.B.rows() != cert.n0 || cert.K.cols() != cert.n0 || cert.K.rows() != cert.m)
        throw std::invalid_argument("scenario: certificate dimensions are inconsistent");
    if (cert.m != s.system.num_inputs()) throw std::invalid_argument("scenario: certificate input count differs from system");
    for (int n = 1; n <= cert.n0; ++n)
        if (cert.A(n - 1, n - 1) != s.system.eigenvalue(n))
            throw std::invalid_argument("scenario: certificate was synthesized for a different system");
    int nm = resolved_mode_count(s);
    if (nm < cert.n0) throw std::invalid_argument("scenario: N_modes must be >= N0");
    if (nm > s.system.max_index()) throw std::invalid_argument("scenario: N_modes exceeds the descriptor size");
    if (static_cast<int>(s.x0.size()) > nm) throw std::invalid_argument("scenario: more initial coefficients than modes");
    for (cplx z : s.x0)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw std::invalid_argument("scenario: non-finite initial coefficient");
    if (!(s.dt > 0.0)) throw std::invalid_argument("scenario: dt must be positive");
    if (!(s.t_final >= 0.0)) throw std::invalid_argument("scenario: T_final must be nonnegative");
    double dtc = resolved_controller_dt(s);
    double ratio = dtc / s.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0)
        throw std::invalid_argument("scenario: controller dt must be a positive integer multiple of dt");
    long J = steps_for(s.t_final, s.dt);
    if (J % std::llround(ratio) != 0)
        throw std::invalid_argument("scenario: T_final must be a multiple of the controller dt");
    if (std::abs(s.delay.nominal() - cert.D0) > 1e-12 * cert.D0)
        throw std::invalid_argument("scenario: delay nominal D0 differs from the certificate D0");
    if (s.certified && s.delay.max_deviation() > cert.delta_max)
        throw std::invalid_argument("scenario: delay amplitude exceeds the certified delta_max");
    if (s.delay.min_value() < s.dt + dtc)
        throw std::invalid_argument("scenario: minimum delay must be at least dt + controller dt");
    if (s.d1.dim() != cert.m || s.d2.dim() != cert.m)
        throw std::invalid_argument("scenario: disturbance dimension differs from the input count");
    if (steps_for(s.t_final, s.dt) + 1 > s.max_samples)
        throw std::invalid_argument("scenario: trajectory exceeds the configured sample cap");
}

std::pair<double, double> state_norm(const Vec& coeffs, double riesz_lower, double riesz_upper) {
    double sq = coeffs.squaredNorm();
    return {std::sqrt(riesz_lower * sq), std::sqrt(riesz_upper * sq)};
}

Trajectory simulate(const Scenario& s) {
    validate_scenario(s);
    const Certificate& cert = s.certificate;
    const int nm = resolved_mode_count(s);
    const long J = steps_for(s.t_final, s.dt);
    const double dtc = resolved_controller_dt(s);
    const long stride = std::llround(dtc / s.dt);
    const double mr = s.system.riesz_lower();
    const double MR = s.system.riesz_upper();

    ModeData md = mode_data(s.system, nm);
    Vec e(nm);
    Vec wa(nm);
    Vec wb(nm);
    for (int n = 0; n < nm; ++n) {
        PhiValues p = phi_functions(md.lambda(n) * s.dt);
        e(n) = p.exp_z;
        wa(n) = s.dt * (p.phi1 - p.phi2);
        wb(n) = s.dt * p.phi2;
    }

    ControllerSettings cs{dtc, s.max_iters, s.tol};
    Controller ctrl(control_law(cert), cs, std::max(cert.delta_max, s.delay.max_deviation()));
    Trajectory tr = empty_trajectory(s, nm, J + 1);

    auto delayed_input = [&](double t) -> Vec {
        return ctrl.history().value(t - s.delay.value(t)) + s.d1.value(t);
    };

    Vec c = initial_state(s, nm);
    Vec v_now;
    for (long j = 0; j <= J; ++j) {
        double t = static_cast<double>(j) * s.dt;
        record_state(tr, j, t, c, mr, MR);
        if (j % stride == 0) {
            ctrl.step(t, c.head(cert.n0), s.d2.value(t));
            for (long i = std::max(0L, j - stride + 1); i <= j; ++i)
                tr.u.row(i) = ctrl.history().value(static_cast<double>(i) * s.dt).transpose();
        }
        if (j == 0) v_now = delayed_input(t);
        tr.v.row(j) = v_now.transpose();
        if (j == J) break;
        Vec v_next = delayed_input(t + s.dt);
        Vec forcing_a = md.b * v_now;
        Vec forcing_b = md.b * v_next;
        c = e.cwiseProduct(c) + wa.cwiseProduct(forcing_a) + wb.cwiseProduct(forcing_b);
        check_finite(c, j + 1);
        v_now = std::move(v_next);
    }
    tr.max_control_residual = ctrl.max_residual();
    tr.Z = artstein_transform(tr, cert);
    return tr;
}

namespace {

template <class T>
T to_scalar(cplx z);

template <>
double to_scalar<double>(cplx z) {
    return z.real();
}

template <>
cplx to_scalar<cplx>(cplx z) {
    return z;
}

template <class T>
Trajectory oracle_run(const Scenario& s, int substeps) {
    const Certificate& cert = s.certificate;
    const int nm = resolved_mode_count(s);
    const int n0 = cert.n0;
    const int m = cert.m;
    const long J = steps_for(s.t_final, s.dt);
    const double mr = s.system.riesz_lower();
    const double MR = s.system.riesz_upper();
    ModeData md = mode_data(s.system, nm);

    double lam_max = md.lambda.cwiseAbs().maxCoeff();
    while (lam_max * s.dt / substeps > 1.0) substeps *= 2;
    const double h = s.dt / substeps;
    const long fine = J * substeps;

    // Trapezoid weights over lag k*h in [0, D0], per truncated mode.
    const double D0 = cert.D0;
    const auto M = static_cast<long>(std::floor(D0 / h + 1e-9));
    const double rem = D0 - static_cast<double>(M) * h;
    const bool partial = rem > 1e-12 * h;
    std::vector<std::vector<T>> w(static_cast<size_t>(n0), std::vector<T>(static_cast<size_t>(M) + 1));
    std::vector<T> w_end(static_cast<size_t>(n0));
    for (int n = 0; n < n0; ++n) {
        cplx lam = cert.A(n, n);
        for (long k = 0; k <= M; ++k) {
            double lag = static_cast<double>(k) * h;
            double wt = h;
            if (k == 0) wt = 0.5 * h;
            if (k == M) wt = partial ? 0.5 * h + 0.5 * rem : 0.5 * h;
            w[static_cast<size_t>(n)][static_cast<size_t>(k)] = to_scalar<T>(wt * std::exp(lam * (lag - D0)));
        }
        w_end[static_cast<size_t>(n)] = to_scalar<T>(0.5 * rem);
    }

    // g[n][i] = (B u(i h))_n; u itself kept for the delayed reads.
    std::vector<std::vector<T>> g(static_cast<size_t>(n0), std::vector<T>(static_cast<size_t>(fine) + 1, T(0)));
    std::vector<Vec> u_hist(static_cast<size_t>(fine) + 1, Vec::Zero(m));
    Mat Bm = cert.B;
    Mat Kt = cert.K;

    auto u_at = [&](double tau, long latest) -> Vec {
        if (tau <= 0.0) return Vec::Zero(m);
        double x = tau / h;
        return interp_cubic(x, latest, [&](long i) -> Vec {
            if (i < 0) return Vec::Zero(m);
            return u_hist[static_cast<size_t>(i)];
        });
    };
    auto g_at = [&](int n, double tau, long latest) -> T {
        if (tau <= 0.0) return T(0);
        return interp_cubic(tau / h, latest, [&](long i) -> T {
            if (i < 0) return T(0);
            return g[static_cast<size_t>(n)][static_cast<size_t>(i)];
        });
    };
    auto v_at = [&](double tau, long latest) -> Vec {
        return u_at(tau - s.delay.value(tau), latest) + s.d1.value(tau);
    };

    Trajectory tr = empty_trajectory(s, nm, J + 1);
    Vec c = initial_state(s, nm);
    Vec P(n0);
    for (long i = 0; i <= fine; ++i) {
        double tau = static_cast<double>(i) * h;
        // Predictor integral with the current sample excluded.
        for (int n = 0; n < n0; ++n) {
            const auto& wn = w[static_cast<size_t>(n)];
            const auto& gn = g[static_cast<size_t>(n)];
            long kmax = std::min(M, i);
            T acc = T(0);
            const T* gp = gn.data() + i;
            for (long k = 1; k <= kmax; ++k) acc += wn[static_cast<size_t>(k)] * gp[-k];
            if (partial) acc += w_end[static_cast<size_t>(n)] * g_at(n, tau - D0, i - 1);
            P(n) = acc;
        }
        double phi = transition_eval(TransitionSignal{cert.t0}, tau).value;
        Vec u = Vec::Zero(m);
        Vec Yi = c.head(n0);
        if (phi != 0.0) {
            Vec w0(n0);
            for (int n = 0; n < n0; ++n) w0(n) = cplx(w[static_cast<size_t>(n)][0]);
            Mat lhs = Mat::Identity(m, m) - phi * Kt * w0.asDiagonal() * Bm;
            Vec rhs = phi * (Kt * (Yi + P) + s.d2.value(tau));
            u = lhs.fullPivLu().solve(rhs);
        }
        u_hist[static_cast<size_t>(i)] = u;
        Vec bu = Bm * u;
        for (int n = 0; n < n0; ++n) {
            g[static_cast<size_t>(n)][static_cast<size_t>(i)] = to_scalar<T>(bu(n));
            P(n) += cplx(w[static_cast<size_t>(n)][0]) * bu(n);
        }

        if (i % substeps == 0) {
            long j = i / substeps;
            record_state(tr, j, static_cast<double>(j) * s.dt, c, mr, MR);
            tr.u.row(j) = u.transpose();
            tr.v.row(j) = v_at(tau, i).transpose();
            tr.Z.row(j) = (Yi + P).transpose();
        }
        if (i == fine) break;

        Vec v0 = v_at(tau, i);
        Vec vh = v_at(tau + 0.5 * h, i);
        Vec v1 = v_at(tau + h, i);
        Vec f0 = md.b * v0;
        Vec fh = md.b * vh;
        Vec f1 = md.b * v1;
        Vec k1 = md.lambda.cwiseProduct(c) + f0;
        Vec k2 = md.lambda.cwiseProduct(c + 0.5 * h * k1) + fh;
        Vec k3 = md.lambda.cwiseProduct(c + 0.5 * h * k2) + fh;
        Vec k4 = md.lambda.cwiseProduct(c + h * k3) + f1;
        c += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_finite(c, i + 1);
    }
    return tr;
}

bool is_real_problem(const Scenario& s) {
    const Certificate& c = s.certificate;
    return s.system.field() == Field::real && c.K.imag().cwiseAbs().maxCoeff() == 0.0 &&
           c.B.imag().cwiseAbs().maxCoeff() == 0.0 && c.A.imag().cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

Trajectory oracle_simulate(const Scenario& s, int substeps) {
    validate_scenario(s);
    if (substeps < 1) throw std::invalid_argument("oracle_simulate: substeps must be >= 1");
    if (is_real_problem(s)) return oracle_run<double>(s, substeps);
    return oracle_run<cplx>(s, substeps);
}

Mat artstein_transform(const Trajectory& traj, const Certificate& cert) {
    const long S = traj.samples();
    const int n0 = cert.n0;
    if (traj.u.rows() != S || traj.Y.rows() != S) throw std::invalid_argument("artstein_transform: missing history");
    Mat bu = traj.u * cert.B.transpose();  // S x n0
    Mat Z(S, n0);
    for (long j = 0; j < S; ++j) {
        double t = traj.t[static_cast<size_t>(j)];
        for (int n = 0; n < n0; ++n) {
            auto g = [&](long k) -> cplx {
                if (k < 0) return 0.0;
                return bu(k, n);
            };
            Z(j, n) = traj.Y(j, n) +
                      exp_weighted_integral(cert.A(n, n), t - cert.D0, std::max(t - cert.D0, 0.0), t, traj.dt, g);
        }
    }
    return Z;
}

ArtsteinResidual artstein_residual(const Trajectory& traj, const Scenario& s) {
    const Certificate& cert = s.certificate;
    const long S = traj.samples();
    const int n0 = cert.n0;
    const double dt = traj.dt;
    ArtsteinResidual out;
    out.residual.assign(static_cast<size_t>(S), 0.0);
    if (S < 3) return out;
    const TransitionSignal phi{cert.t0};
    Mat shifted = cert.B;
    for (int n = 0; n < n0; ++n) shifted.row(n) *= std::exp(-cert.D0 * cert.A(n, n));
    Mat BK = cert.B * cert.K;

    // Delayed terms use the engine's piecewise-linear interpolant of the sampled products.
    auto phi_at = [&](long i) { return i < 0 ? 0.0 : transition_eval(phi, static_cast<double>(i) * dt).value; };
    auto phiZ = [&](double tau) -> Vec {
        return interp_linear(tau, dt, [&](long i) -> Vec {
            long k = std::clamp(i, 0L, S - 1);
            return phi_at(i) * traj.Z.row(k).transpose();
        });
    };
    auto phid2 = [&](double tau) -> Vec {
        return interp_linear(tau, dt, [&](long i) -> Vec {
            double p = phi_at(i);
            if (p == 0.0) return Vec::Zero(cert.m);
            return p * s.d2.value(static_cast<double>(i) * dt);
        });
    };

    double sum_sq = 0.0;
    for (long j = 1; j + 1 < S; ++j) {
        double t = traj.t[static_cast<size_t>(j)];
        Vec z = traj.Z.row(j).transpose();
        Vec zdot = (traj.Z.row(j + 1) - traj.Z.row(j - 1)).transpose() / (2.0 * dt);
        double p = transition_eval(phi, t).value;
        double D = s.delay.value(t);
        Vec rhs = cert.A * z + p * (shifted * (cert.K * z)) + BK * (phiZ(t - D) - phiZ(t - cert.D0)) +
                  cert.B * s.d1.value(t) + p * (shifted * s.d2.value(t)) +
                  cert.B * (phid2(t - D) - phid2(t - cert.D0));
        double r = (zdot - rhs).norm();
        out.residual[static_cast<size_t>(j)] = r;
        out.max_residual = std::max(out.max_residual, r);
        sum_sq += r * r;
    }
    out.rms_residual = std::sqrt(sum_sq / static_cast<double>(S - 2));
    return out;
}

double relative_gap(const Trajectory& a, const Trajectory& b) {
    if (a.c.rows() != b.c.rows() || a.c.cols() != b.c.cols())
        throw std::invalid_argument("relative_gap: trajectories have different shapes");
    double gap = 0.0;
    double scale = 0.0;
    for (Eigen::Index j = 0; j < a.c.rows(); ++j) {
        gap = std::max(gap, (a.c.row(j) - b.c.row(j)).norm());
        scale = std::max(scale, a.c.row(j).norm());
    }
    return gap / (1.0 + scale);
}

}  // namespace specpred
