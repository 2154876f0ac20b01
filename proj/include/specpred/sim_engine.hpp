#pragma once

#include "specpred/controller.hpp"
#include "specpred/signals.hpp"
#include "specpred/spectral_model.hpp"
#include "specpred/synthesis.hpp"

#include <string>
#include <utility>
#include <vector>

namespace specpred {

struct Scenario {
    SystemDescriptor system;
    Certificate certificate;
    DelaySignal delay;
    DisturbanceSignal d1;
    DisturbanceSignal d2;
    std::vector<cplx> x0;  // c_n(0), zero-padded to n_modes
    int n_modes = 0;       // 0: default_mode_count
    double dt = 1e-3;
    double t_final = 10.0;
    double controller_dt = 0.0;  // 0: same as dt
    int max_iters = 50;
    double tol = 1e-12;
    bool certified = true;
    long max_samples = 20'000'000;
    std::string name;
};

struct Trajectory {
    double dt = 0.0;
    int n0 = 1;
    int m = 1;
    int n_modes = 0;
    std::vector<double> t;
    Mat c;  // rows: time samples, cols: modes
    Mat Y;
    Mat Z;
    Mat u;
    Mat v;
    std::vector<double> norm_lower;
    std::vector<double> norm_upper;
    double max_control_residual = 0.0;

    long samples() const { return static_cast<long>(t.size()); }
};

// Smallest n with Re lambda_n <= -50 alpha, capped at 400 and at the descriptor size.
int default_mode_count(const SystemDescriptor& desc, double alpha, int n0);

int resolved_mode_count(const Scenario& s);
double resolved_controller_dt(const Scenario& s);

// Throws std::invalid_argument when a scenario invariant fails.
void validate_scenario(const Scenario& s);

Trajectory simulate(const Scenario& s);

// Independent reference: RK4 on the modal ODEs at dt / substeps with
// trapezoidal predictor quadrature and cubic history interpolation.
Trajectory oracle_simulate(const Scenario& s, int substeps = 20);

std::pair<double, double> state_norm(const Vec& coeffs, double riesz_lower, double riesz_upper);

// Z(t_j) = Y(t_j) + integral over [t_j - D0, t_j] of e^{(t_j - D0 - s) A} B u(s) ds.
Mat artstein_transform(const Trajectory& traj, const Certificate& cert);

struct ArtsteinResidual {
    std::vector<double> residual;  // per grid point; zero at both ends
    double max_residual = 0.0;
    double rms_residual = 0.0;  // discrete L2 norm in time over interior points, divided by sqrt(T)
};

// Residual of the Z-dynamics with central differences at interior grid points.
ArtsteinResidual artstein_residual(const Trajectory& traj, const Scenario& s);

// Relative sup gap between two trajectories' modal coefficients.
double relative_gap(const Trajectory& a, const Trajectory& b);

}  // namespace specpred
