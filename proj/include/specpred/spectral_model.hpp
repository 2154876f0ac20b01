#pragma once

#include "specpred/numerics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace specpred {

enum class Field { real, complex };

enum class DescriptorKind { reaction_diffusion, explicit_list };

// Per-input squared norms of the lifting, ||B e_k||^2 and ||A B e_k||^2.
struct LiftingNorms {
    std::vector<double> be_sq;
    std::vector<double> abe_sq;
};

// A diagonal boundary control system given by its eigen-data.
class SystemDescriptor {
public:
    // Placeholder: reaction-diffusion with c = 0 and no lifting data.
    SystemDescriptor() = default;

    static SystemDescriptor reaction_diffusion(double c, int quadrature_panels = 4096);
    static SystemDescriptor explicit_list(std::vector<cplx> eigenvalues, std::vector<std::vector<cplx>> b,
                                          double riesz_lower, double riesz_upper,
                                          std::optional<LiftingNorms> lifting = std::nullopt);

    DescriptorKind kind() const { return kind_; }
    Field field() const { return field_; }
    int num_inputs() const { return m_; }
    double riesz_lower() const { return riesz_lower_; }
    double riesz_upper() const { return riesz_upper_; }
    double reaction() const { return c_; }
    int quadrature_panels() const { return panels_; }

    // Largest valid mode index; effectively unbounded for closed-form laws.
    int max_index() const;
    cplx eigenvalue(int n) const;
    cplx input_coeff(int n, int k) const;
    const std::optional<LiftingNorms>& lifting_norms() const { return lifting_; }

    const std::vector<cplx>& explicit_eigenvalues() const { return eig_; }
    const std::vector<std::vector<cplx>>& explicit_b() const { return b_; }

private:
    DescriptorKind kind_ = DescriptorKind::reaction_diffusion;
    Field field_ = Field::real;
    int m_ = 1;
    double c_ = 0.0;
    double riesz_lower_ = 1.0;
    double riesz_upper_ = 1.0;
    int panels_ = 4096;
    std::vector<cplx> eig_;
    std::vector<std::vector<cplx>> b_;
    std::optional<LiftingNorms> lifting_;
};

SystemDescriptor build_reaction_diffusion(double c, int quadrature_panels = 4096);

// Sampled lifting data on a uniform grid of [0, 1] (or any [a, b]).
struct LiftingSamples {
    double a = 0.0;
    double b = 1.0;
    std::vector<std::vector<cplx>> be;   // be[k][i]
    std::vector<std::vector<cplx>> abe;  // abe[k][i]
};

struct ModalCoeffs {
    Mat b;  // rows: modes n = 1..N, cols: inputs
    std::string rule;
    int panels = 0;
};

// b_{n,k} = -lambda_n <B e_k, psi_n> + <A B e_k, psi_n> by composite Simpson.
ModalCoeffs modal_input_coeffs(const LiftingSamples& lifting, const std::vector<std::vector<cplx>>& psi,
                               const std::vector<cplx>& lambdas);

// Inner product <f, g> = integral of f conj(g) by composite Simpson on a uniform grid.
cplx simpson_inner(const std::vector<cplx>& f, const std::vector<cplx>& g, double a, double b);

// Reaction-diffusion eigenfunction sqrt(2) sin(n pi x) on panels+1 uniform points of [0, 1].
std::vector<cplx> sine_mode_samples(int n, int panels);

struct ModeClassification {
    int n0 = 1;
    double alpha = 0.0;
    double xi = 1.0;
    bool xi_exact = false;
    int scan_depth = 0;
};

ModeClassification classify_modes(const SystemDescriptor& desc, int scan_depth,
                                  std::optional<double> alpha_request = std::nullopt);

struct TruncatedModel {
    Mat A;
    Mat B;
    int n0 = 1;
    double alpha = 0.0;
    double xi = 1.0;
    Field field = Field::real;

    int num_inputs() const { return static_cast<int>(B.cols()); }
};

TruncatedModel truncated_model(const SystemDescriptor& desc, int n0, double alpha, double xi);

}  // namespace specpred
