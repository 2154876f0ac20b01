#pragma once

#include "specpred/sim_engine.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace specpred {

// s_j = max(e^{-kappa dt} s_{j-1}, x_j), s_0 = x_0: the grid value of
// sup over tau in [0, t_j] of e^{-kappa (t_j - tau)} x(tau).
std::vector<double> fading_memory_sup(const std::vector<double>& x, double dt, double kappa);

// Same sup restricted to tau in [0, max(t_j - lag, 0)], from the unrestricted
// sequence s of fading_memory_sup.
std::vector<double> lagged_fading_sup(const std::vector<double>& s, double dt, double kappa, double lag);

// Norms of the data entering the estimates, sampled on the trajectory grid.
struct ChannelSamples {
    double dt = 0.0;
    std::vector<double> t;
    double x0_norm = 0.0;  // sqrt(m_R) ||c(0)||, a lower bound on ||X_0||
    std::vector<double> d1;
    std::vector<double> d2;
};

ChannelSamples sample_signals(const Trajectory& traj, const Scenario& s);

// c_x0 e^{-rate t} ||X_0|| + c_d1 sup e^{-rate (t - tau)} ||d1|| + c_d2 sup_{tau <= t - lag} e^{-rate (t - tau)} ||d2||.
struct EnvelopeTerms {
    double c_x0 = 0.0;
    double c_d1 = 0.0;
    double c_d2 = 0.0;
    double rate = 0.0;
    double d2_lag = 0.0;
};

std::vector<double> envelope_rhs(const ChannelSamples& samples, const EnvelopeTerms& terms);

// Right-hand side of the state estimate with the certificate's fitted constants.
std::vector<double> state_envelope_rhs(const ChannelSamples& samples, const Certificate& cert);

struct EstimateCheck {
    std::string name;
    std::string observed;  // which signal is bounded
    bool pass = false;
    bool vacuous = false;  // every observed sample and bound was zero
    double worst_ratio = 0.0;
    double worst_time = 0.0;
    EnvelopeTerms terms;
    std::vector<NamedConstant> constants;
};

struct EnvelopeReport {
    std::string scenario;
    std::vector<EstimateCheck> estimates;

    bool pass() const;
    const EstimateCheck* find(const std::string& name) const;
};

// Worst observed/bound ratio over the grid. Samples whose bound is below
// `floor` count as ratio 0 when the observation is below `floor` too, and as
// infinite otherwise.
EstimateCheck ratio_check(const std::vector<double>& observed, const std::vector<double>& bound,
                          const std::vector<double>& t, double floor);

// Evaluates state_iss, control_iss (rate kappa), truncated_state and
// control_truncated_rate (rate sigma), and state_iss_assembled when the
// certificate carries the assembled constants. Throws std::runtime_error when
// fitted constants are missing.
EnvelopeReport check_envelopes(const Trajectory& traj, const Scenario& s);

enum class Channel { initial, d1, d2, mixed, none };

Channel channel_of(const Scenario& s);
const char* channel_name(Channel c);

struct EnsembleMember {
    Scenario scenario;
    Trajectory trajectory;
    // Members sharing a group id >= 0 are unit responses x0 = e_{basis_index}
    // under one delay and jointly give the operator norm of the initial-state map.
    int basis_group = -1;
    int basis_index = -1;
};

struct FitOptions {
    double inflation = 1.1;
};

struct FittedConstants {
    // Cbar1..Cbar3 at rate kappa; Cbar4..Cbar6 and C1..C3 at rate sigma.
    std::vector<NamedConstant> constants;
    std::string ensemble;
};

FittedConstants fit_constants(const std::vector<EnsembleMember>& ensemble, const Certificate& cert,
                              const FitOptions& opts = {});

// Stores the fitted constants in the certificate and, when lifting norms are
// available, the exact tail constants and the assembled state constants.
void apply_fitted(Certificate& cert, const FittedConstants& fit);

struct DecayFit {
    double kappa_hat = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;
    long points = 0;
    bool truncated = false;  // the norm reached numerical zero inside the window
};

// Least-squares slope of log ||X||_upper over [t_start, T]; kappa_hat = -slope.
DecayFit fit_decay_rate(const Trajectory& traj, double t_start);
DecayFit fit_decay_rate(const Trajectory& traj, const Certificate& cert);

// Ensemble generation. Every member draws from its own stream of the seed so
// members are reproducible independently of order and scheduling.
struct EnsembleSpec {
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;  // first stream index; disjoint ensembles use disjoint ranges
    int initial = 6;
    int d1 = 7;
    int d2 = 7;
    int mixed = 0;
    bool basis = true;
};

// Standard normal draw; complex draws have unit expected modulus squared.
cplx draw_coeff(std::mt19937_64& rng, Field field);

// One to three terms of random kind, shape and amplitude on [0, T].
DisturbanceSignal random_disturbance(std::mt19937_64& rng, int dim, Field field, double T);

// Random admissible data (X0, d1, d2, D) built on the base scenario's system,
// certificate and integration settings.
Scenario random_scenario(const Scenario& base, Channel channel, std::uint64_t seed, std::uint64_t stream);

std::vector<Scenario> ensemble_scenarios(const Scenario& base, const EnsembleSpec& spec);
std::vector<EnsembleMember> run_ensemble(const Scenario& base, const EnsembleSpec& spec, int jobs = 1);

// Unit initial states e_1 .. e_N under the base scenario's delay, no disturbances.
std::vector<Scenario> basis_scenarios(const Scenario& base);

// The five reference closed loops of the reaction-diffusion plant with c = 15.
std::vector<Scenario> builtin_scenarios(const Certificate& cert, const SystemDescriptor& desc);

struct CertifyOptions {
    SynthesisOptions synthesis;
    EnsembleSpec ensemble;
    double dt = 1e-3;
    double t_final = 10.0;
    int jobs = 1;
};

// synthesize, run the fitting ensemble, fit and store the constants.
Certificate certify_with_fit(const SystemDescriptor& desc, const CertifyOptions& opts = {});

}  // namespace specpred
