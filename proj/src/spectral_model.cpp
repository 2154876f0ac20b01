#include "specpred/spectral_model.hpp"

#include <algorithm>
#include <climits>
#include <numbers>
#include <stdexcept>

namespace specpred {

namespace {

constexpr int kValidatedModes = 20;
constexpr double kLawTolerance = 1e-6;

double analytic_rd_b(int n) {
    double sign = (n % 2 == 1) ? 1.0 : -1.0;
    return std::numbers::sqrt2 * sign * n * std::numbers::pi;
}

bool is_real(cplx z) { return z.imag() == 0.0; }

}  // namespace

SystemDescriptor SystemDescriptor::reaction_diffusion(double c, int quadrature_panels) {
    if (!std::isfinite(c)) throw std::invalid_argument("reaction_diffusion: coefficient must be finite");
    if (quadrature_panels < 2 || quadrature_panels % 2 != 0)
        throw std::invalid_argument("reaction_diffusion: quadrature panel count must be even and >= 2");
    SystemDescriptor d;
    d.kind_ = DescriptorKind::reaction_diffusion;
    d.field_ = Field::real;
    d.m_ = 1;
    d.c_ = c;
    d.panels_ = quadrature_panels;

    // Lifting (Bw)(x) = x w and its image under the differential expression w'' + c w.
    int p = quadrature_panels;
    LiftingSamples lift;
    lift.be.assign(1, std::vector<cplx>(static_cast<size_t>(p) + 1));
    lift.abe.assign(1, std::vector<cplx>(static_cast<size_t>(p) + 1));
    for (int i = 0; i <= p; ++i) {
        double x = static_cast<double>(i) / p;
        lift.be[0][static_cast<size_t>(i)] = x;
        lift.abe[0][static_cast<size_t>(i)] = c * x;
    }
    std::vector<std::vector<cplx>> psi;
    std::vector<cplx> lambdas;
    for (int n = 1; n <= kValidatedModes; ++n) {
        psi.push_back(sine_mode_samples(n, p));
        lambdas.push_back(d.eigenvalue(n));
    }
    ModalCoeffs q = modal_input_coeffs(lift, psi, lambdas);
    for (int n = 1; n <= kValidatedModes; ++n) {
        double err = std::abs(q.b(n - 1, 0) - analytic_rd_b(n));
        if (err > kLawTolerance)
            throw std::runtime_error("reaction_diffusion: analytic input law disagrees with quadrature at mode " +
                                     std::to_string(n));
    }
    LiftingNorms norms;
    norms.be_sq.push_back(simpson_inner(lift.be[0], lift.be[0], 0.0, 1.0).real());
    norms.abe_sq.push_back(simpson_inner(lift.abe[0], lift.abe[0], 0.0, 1.0).real());
    d.lifting_ = norms;
    return d;
}

SystemDescriptor SystemDescriptor::explicit_list(std::vector<cplx> eigenvalues, std::vector<std::vector<cplx>> b,
                                                 double riesz_lower, double riesz_upper,
                                                 std::optional<LiftingNorms> lifting) {
    if (eigenvalues.empty()) throw std::invalid_argument("explicit descriptor: eigenvalue list is empty");
    if (b.size() != eigenvalues.size())
        throw std::invalid_argument("explicit descriptor: explicit_b must have one row per eigenvalue");
    size_t m = b.front().size();
    if (m == 0) throw std::invalid_argument("explicit descriptor: explicit_b rows must be nonempty");
    for (const auto& row : b)
        if (row.size() != m) throw std::invalid_argument("explicit descriptor: explicit_b rows differ in length");
    if (!(riesz_lower > 0.0) || !(riesz_upper >= riesz_lower) || !std::isfinite(riesz_upper))
        throw std::invalid_argument("explicit descriptor: need 0 < riesz_lower <= riesz_upper");
    for (size_t i = 0; i < eigenvalues.size(); ++i) {
        if (!std::isfinite(eigenvalues[i].real()) || !std::isfinite(eigenvalues[i].imag()))
            throw std::invalid_argument("explicit descriptor: non-finite eigenvalue");
        for (size_t j = 0; j < i; ++j)
            if (eigenvalues[i] == eigenvalues[j])
                throw std::invalid_argument("explicit descriptor: eigenvalues must be pairwise distinct");
    }
    if (lifting) {
        if (lifting->be_sq.size() != m || lifting->abe_sq.size() != m)
            throw std::invalid_argument("explicit descriptor: lifting norms need one entry per input");
        for (size_t k = 0; k < m; ++k)
            if (lifting->be_sq[k] < 0.0 || lifting->abe_sq[k] < 0.0)
                throw std::invalid_argument("explicit descriptor: lifting norms must be nonnegative");
    }
    SystemDescriptor d;
    d.kind_ = DescriptorKind::explicit_list;
    d.m_ = static_cast<int>(m);
    d.riesz_lower_ = riesz_lower;
    d.riesz_upper_ = riesz_upper;
    bool real = std::all_of(eigenvalues.begin(), eigenvalues.end(), is_real);
    for (const auto& row : b) real = real && std::all_of(row.begin(), row.end(), is_real);
    d.field_ = real ? Field::real : Field::complex;
    d.eig_ = std::move(eigenvalues);
    d.b_ = std::move(b);
    d.lifting_ = std::move(lifting);
    return d;
}

int SystemDescriptor::max_index() const {
    if (kind_ == DescriptorKind::explicit_list) return static_cast<int>(eig_.size());
    return INT_MAX;
}

cplx SystemDescriptor::eigenvalue(int n) const {
    if (n < 1 || n > max_index()) throw std::out_of_range("eigenvalue: mode index out of range");
    if (kind_ == DescriptorKind::reaction_diffusion) {
        double k = n * std::numbers::pi;
        return c_ - k * k;
    }
    return eig_[static_cast<size_t>(n - 1)];
}

cplx SystemDescriptor::input_coeff(int n, int k) const {
    if (n < 1 || n > max_index()) throw std::out_of_range("input_coeff: mode index out of range");
    if (k < 0 || k >= m_) throw std::out_of_range("input_coeff: input index out of range");
    if (kind_ == DescriptorKind::reaction_diffusion) return analytic_rd_b(n);
    return b_[static_cast<size_t>(n - 1)][static_cast<size_t>(k)];
}

SystemDescriptor build_reaction_diffusion(double c, int quadrature_panels) {
    return SystemDescriptor::reaction_diffusion(c, quadrature_panels);
}

cplx simpson_inner(const std::vector<cplx>& f, const std::vector<cplx>& g, double a, double b) {
    if (f.size() != g.size()) throw std::invalid_argument("simpson_inner: grid mismatch");
    int panels = static_cast<int>(f.size()) - 1;
    std::vector<double> w = simpson_weights(panels, a, b);
    cplx sum = 0.0;
    for (size_t i = 0; i < f.size(); ++i) sum += w[i] * f[i] * std::conj(g[i]);
    return sum;
}

std::vector<cplx> sine_mode_samples(int n, int panels) {
    std::vector<cplx> s(static_cast<size_t>(panels) + 1);
    for (int i = 0; i <= panels; ++i) {
        double x = static_cast<double>(i) / panels;
        s[static_cast<size_t>(i)] = std::numbers::sqrt2 * std::sin(n * std::numbers::pi * x);
    }
    return s;
}

ModalCoeffs modal_input_coeffs(const LiftingSamples& lifting, const std::vector<std::vector<cplx>>& psi,
                               const std::vector<cplx>& lambdas) {
    if (psi.size() != lambdas.size()) throw std::invalid_argument("modal_input_coeffs: one eigenvalue per eigenvector required");
    if (lifting.be.size() != lifting.abe.size() || lifting.be.empty())
        throw std::invalid_argument("modal_input_coeffs: lifting pairs mismatch");
    size_t npts = lifting.be.front().size();
    if (npts < 3 || (npts - 1) % 2 != 0)
        throw std::invalid_argument("modal_input_coeffs: grid needs an even number of panels");
    auto check = [&](const std::vector<cplx>& v) {
        if (v.size() != npts) throw std::invalid_argument("modal_input_coeffs: grid mismatch");
        for (cplx z : v)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                throw std::invalid_argument("modal_input_coeffs: non-finite samples");
    };
    for (size_t k = 0; k < lifting.be.size(); ++k) {
        check(lifting.be[k]);
        check(lifting.abe[k]);
    }
    for (const auto& p : psi) check(p);

    ModalCoeffs out;
    out.rule = "composite Simpson";
    out.panels = static_cast<int>(npts) - 1;
    out.b = Mat::Zero(static_cast<Eigen::Index>(psi.size()), static_cast<Eigen::Index>(lifting.be.size()));
    for (size_t n = 0; n < psi.size(); ++n) {
        for (size_t k = 0; k < lifting.be.size(); ++k) {
            cplx ip_be = simpson_inner(lifting.be[k], psi[n], lifting.a, lifting.b);
            cplx ip_abe = simpson_inner(lifting.abe[k], psi[n], lifting.a, lifting.b);
            out.b(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) = -lambdas[n] * ip_be + ip_abe;
        }
    }
    return out;
}

ModeClassification classify_modes(const SystemDescriptor& desc, int scan_depth, std::optional<double> alpha_request) {
    if (scan_depth < 2) throw std::invalid_argument("classify_modes: scan_depth must be >= 2");
    if (alpha_request && !(*alpha_request > 0.0)) throw std::invalid_argument("classify_modes: alpha_request must be positive");
    int depth = std::min(scan_depth, desc.max_index());
    if (depth < 2) throw std::invalid_argument("classify_modes: descriptor has fewer than two modes");
    std::vector<double> re(static_cast<size_t>(depth) + 1);
    for (int n = 1; n <= depth; ++n) re[static_cast<size_t>(n)] = desc.eigenvalue(n).real();
    if (re[static_cast<size_t>(depth)] >= 0.0)
        throw std::runtime_error("classify_modes: eigenvalue with nonnegative real part at the scan front (mode " +
                                 std::to_string(depth) + ")");

    ModeClassification out;
    out.scan_depth = depth;
    if (!alpha_request) {
        int last_unstable = 0;
        for (int n = 1; n <= depth; ++n)
            if (re[static_cast<size_t>(n)] >= 0.0) last_unstable = n;
        out.n0 = std::max(1, last_unstable);
        double worst = -INFINITY;
        for (int n = out.n0 + 1; n <= depth; ++n) worst = std::max(worst, re[static_cast<size_t>(n)]);
        out.alpha = -worst;
    } else {
        double alpha = *alpha_request;
        int n0 = depth;
        for (int n = depth; n >= 1; --n) {
            if (re[static_cast<size_t>(n)] > -alpha) break;
            n0 = n - 1;
        }
        out.n0 = std::max(1, n0);
        out.alpha = alpha;
    }
    if (out.n0 >= depth) throw std::runtime_error("classify_modes: no admissible N0 within scan_depth");

    if (desc.field() == Field::real) {
        out.xi = 1.0;
        out.xi_exact = true;
    } else {
        double xi = 1.0;
        for (int n = out.n0 + 1; n <= depth; ++n) {
            cplx l = desc.eigenvalue(n);
            xi = std::max(xi, std::abs(l) / std::abs(l.real()));
        }
        out.xi = xi;
        out.xi_exact = false;
    }
    return out;
}

TruncatedModel truncated_model(const SystemDescriptor& desc, int n0, double alpha, double xi) {
    if (n0 < 1 || n0 > desc.max_index()) throw std::invalid_argument("truncated_model: N0 out of range");
    if (!(alpha > 0.0)) throw std::invalid_argument("truncated_model: alpha must be positive");
    if (!(xi >= 1.0)) throw std::invalid_argument("truncated_model: xi must be >= 1");
    TruncatedModel tm;
    tm.n0 = n0;
    tm.alpha = alpha;
    tm.xi = xi;
    tm.field = desc.field();
    int m = desc.num_inputs();
    tm.A = Mat::Zero(n0, n0);
    tm.B = Mat::Zero(n0, m);
    for (int n = 1; n <= n0; ++n) {
        tm.A(n - 1, n - 1) = desc.eigenvalue(n);
        for (int k = 0; k < m; ++k) tm.B(n - 1, k) = desc.input_coeff(n, k);
    }
    return tm;
}

}  // namespace specpred
