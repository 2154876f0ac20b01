#pragma once

#include "specpred/spectral_model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace specpred {

enum class Provenance { exact, fitted };

struct NamedConstant {
    std::string name;
    double value = 0.0;
    Provenance provenance = Provenance::exact;

    bool operator==(const NamedConstant&) const = default;
};

// Everything the stability theorem promises, made numeric.
struct Certificate {
    int n0 = 1;
    int m = 1;
    Field field = Field::real;
    double D0 = 0.5;
    double t0 = 0.5;
    double alpha = 0.0;
    double xi = 1.0;
    bool xi_exact = true;
    double riesz_lower = 1.0;
    double riesz_upper = 1.0;

    Mat A;
    Mat B;
    Mat K;
    Mat A_cl;
    std::vector<cplx> target_poles;

    double lambda_fraction = 0.95;
    double M_lambda = 1.0;
    double lambda = 0.0;
    double T_check = 0.0;
    double norm_A_cl = 0.0;
    double norm_BK = 0.0;

    double delta_star = 0.0;
    double delta_margin = 0.1;
    double delta_max = 0.0;
    bool delta_degenerate = false;

    double sigma = 0.0;
    double sigma_delta_tilde = 0.0;
    double kappa_fraction = 0.5;
    double kappa = 0.0;
    double epsilon = 0.0;

    // Sums over inputs of ||B e_k||^2 and ||A B e_k||^2, when the descriptor provides them.
    std::optional<double> lifting_be_sq;
    std::optional<double> lifting_abe_sq;

    std::vector<NamedConstant> constants;
    std::string ensemble;

    const NamedConstant* find(std::string_view name) const;
    double value(std::string_view name) const;
    void set(std::string_view name, double value, Provenance provenance);
    bool has_fitted() const;
};

bool operator==(const Certificate& a, const Certificate& b);

// Pole placement for the pair (A, e^{-D0 A} B); single input only.
Mat place_gain(const TruncatedModel& model, double D0, const std::vector<cplx>& target_poles);

// Closed-loop matrix A + e^{-D0 A} B K.
Mat closed_loop(const TruncatedModel& model, double D0, const Mat& K);

struct EnvelopeResult {
    double M_lambda = 1.0;
    double lambda = 0.0;
    double M_sampled = 1.0;
    double T_check = 0.0;
    double grid_step = 0.0;
    double abscissa = 0.0;
};

EnvelopeResult decay_envelope(const Mat& A_cl, double lambda_fraction = 0.95,
                              std::optional<double> T_check = std::nullopt);

// M ||BK|| (e^{||A_cl|| delta} - e^{-lambda delta}).
double small_gain_lhs(double M_lambda, double norm_BK, double norm_A_cl, double lambda, double delta);

struct DeltaMargin {
    double delta_star = 0.0;
    double delta_max = 0.0;
    bool degenerate = false;
};

// delta_star solves the small-gain equality; delta_max = min(delta_star (1 - margin), D0 (1 - 1e-6)).
DeltaMargin delta_margin(double norm_A_cl, double norm_BK, double M_lambda, double lambda, double D0,
                         double margin = 0.1);

double delta_tilde(double sigma, double M_lambda, double lambda, double norm_A, double norm_C, double r, double eps);

struct SigmaRate {
    double sigma = 0.0;
    double threshold = 0.0;
    double delta_tilde = 0.0;
};

SigmaRate sigma_rate(double M_lambda, double lambda, double norm_A, double norm_C, double r, double eps);

struct TailInputs {
    double alpha = 0.0;
    double xi = 1.0;
    double kappa = 0.0;
    double D0 = 0.0;
    double delta = 0.0;
    double riesz_lower = 1.0;
    int m = 1;
    double sum_be_sq = 0.0;
    double sum_abe_sq = 0.0;
    double cbar4 = 0.0;
    double cbar5 = 0.0;
    double cbar6 = 0.0;
};

struct TailConstants {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
};

TailConstants tail_constants(const TailInputs& in);

// Tail constants for a certificate whose control constants Cbar4..Cbar6 are present.
TailConstants iss_constants(const Certificate& cert);

// Stores tilde_C1..3 and the assembled sqrt(M_R)(C_i + sqrt(tilde_C_i)) for i <= 3.
void apply_tail_constants(Certificate& cert);

struct SynthesisOptions {
    double D0 = 0.5;
    double t0 = 0.5;
    std::vector<cplx> target_poles;  // empty: -2, -3, ...
    std::optional<Mat> gain;         // manual K, required when m > 1
    double lambda_fraction = 0.95;
    std::optional<double> T_check;
    double delta_margin = 0.1;
    double kappa_fraction = 0.5;
    int scan_depth = 200;
    std::optional<double> alpha;
};

std::vector<cplx> default_target_poles(int n0);

// spectral_model + synthesis pipeline; fitted constants are left empty.
Certificate synthesize(const SystemDescriptor& desc, const SynthesisOptions& opts = {});

}  // namespace specpred
