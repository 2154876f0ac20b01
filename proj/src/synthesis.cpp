#include "specpred/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace specpred {

namespace {

bool same_matrix(const Mat& a, const Mat& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

}  // namespace

const NamedConstant* Certificate::find(std::string_view name) const {
    for (const auto& c : constants)
        if (c.name == name) return &c;
    return nullptr;
}

double Certificate::value(std::string_view name) const {
    const NamedConstant* c = find(name);
    if (!c)
        throw std::runtime_error("certificate: constant " + std::string(name) +
                                 " missing (run fit_constants to populate fitted constants)");
    return c->value;
}

void Certificate::set(std::string_view name, double value, Provenance provenance) {
    for (auto& c : constants) {
        if (c.name == name) {
            c.value = value;
            c.provenance = provenance;
            return;
        }
    }
    constants.push_back({std::string(name), value, provenance});
}

bool Certificate::has_fitted() const {
    return std::any_of(constants.begin(), constants.end(),
                       [](const NamedConstant& c) { return c.provenance == Provenance::fitted; });
}

bool operator==(const Certificate& a, const Certificate& b) {
    return a.n0 == b.n0 && a.m == b.m && a.field == b.field && a.D0 == b.D0 && a.t0 == b.t0 && a.alpha == b.alpha &&
           a.xi == b.xi && a.xi_exact == b.xi_exact && a.riesz_lower == b.riesz_lower &&
           a.riesz_upper == b.riesz_upper && same_matrix(a.A, b.A) && same_matrix(a.B, b.B) &&
           same_matrix(a.K, b.K) && same_matrix(a.A_cl, b.A_cl) && a.target_poles == b.target_poles &&
           a.lambda_fraction == b.lambda_fraction && a.M_lambda == b.M_lambda && a.lambda == b.lambda &&
           a.T_check == b.T_check && a.norm_A_cl == b.norm_A_cl && a.norm_BK == b.norm_BK &&
           a.delta_star == b.delta_star && a.delta_margin == b.delta_margin && a.delta_max == b.delta_max &&
           a.delta_degenerate == b.delta_degenerate && a.sigma == b.sigma &&
           a.sigma_delta_tilde == b.sigma_delta_tilde && a.kappa_fraction == b.kappa_fraction &&
           a.kappa == b.kappa && a.epsilon == b.epsilon && a.lifting_be_sq == b.lifting_be_sq &&
           a.lifting_abe_sq == b.lifting_abe_sq && a.constants == b.constants && a.ensemble == b.ensemble;
}

Mat place_gain(const TruncatedModel& model, double D0, const std::vector<cplx>& target_poles) {
    const Eigen::Index n = model.A.rows();
    if (model.B.cols() != 1)
        throw std::invalid_argument("place_gain: pole placement supports a single input; provide K manually for m > 1");
    if (static_cast<Eigen::Index>(target_poles.size()) != n)
        throw std::invalid_argument("place_gain: need exactly N0 target poles");
    for (cplx p : target_poles)
        if (!(p.real() < 0.0)) throw std::invalid_argument("place_gain: target poles must have negative real parts");
    if (model.field == Field::real) {
        for (cplx p : target_poles) {
            bool paired = std::any_of(target_poles.begin(), target_poles.end(), [&](cplx q) {
                return std::abs(q - std::conj(p)) <= 1e-12 * std::max(1.0, std::abs(p));
            });
            if (!paired) throw std::invalid_argument("place_gain: target poles must be closed under conjugation");
        }
    }

    Vec lam = model.A.diagonal();
    Vec bt(n);
    double bscale = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        bt(i) = std::exp(-D0 * lam(i)) * model.B(i, 0);
        bscale = std::max(bscale, std::abs(model.B(i, 0)));
    }
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(model.B(i, 0)) <= 1e-14 * std::max(1.0, bscale))
            throw std::invalid_argument("place_gain: uncontrollable pair (b_" + std::to_string(i + 1) + " = 0)");

    // Residues of 1 - K (sI - A)^{-1} b~ at the open-loop eigenvalues.
    Mat K(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        cplx num = 1.0;
        for (cplx p : target_poles) num *= lam(i) - p;
        cplx den = bt(i);
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) den *= lam(i) - lam(j);
        K(0, i) = -num / den;
    }
    if (model.field == Field::real) {
        double scale = K.cwiseAbs().maxCoeff();
        if (K.imag().cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, scale))
            throw std::runtime_error("place_gain: real-field gain has a non-negligible imaginary part");
        K = K.real().cast<cplx>();
    }

    Mat acl = closed_loop(model, D0, K);
    Eigen::ComplexEigenSolver<Mat> es(acl, false);
    std::vector<cplx> got(es.eigenvalues().data(), es.eigenvalues().data() + n);
    for (cplx p : target_poles) {
        auto it = std::min_element(got.begin(), got.end(),
                                   [&](cplx a, cplx b) { return std::abs(a - p) < std::abs(b - p); });
        if (std::abs(*it - p) > 1e-8 * std::max(1.0, std::abs(p)))
            throw std::runtime_error("place_gain: placed spectrum misses a target pole (ill-conditioned placement)");
        got.erase(it);
    }
    return K;
}

Mat closed_loop(const TruncatedModel& model, double D0, const Mat& K) {
    Mat shifted = model.B;
    for (Eigen::Index i = 0; i < model.A.rows(); ++i) shifted.row(i) *= std::exp(-D0 * model.A(i, i));
    return model.A + shifted * K;
}

EnvelopeResult decay_envelope(const Mat& A_cl, double lambda_fraction, std::optional<double> T_check) {
    if (A_cl.rows() != A_cl.cols() || A_cl.rows() == 0) throw std::invalid_argument("decay_envelope: square matrix required");
    if (!(lambda_fraction > 0.0 && lambda_fraction < 1.0))
        throw std::invalid_argument("decay_envelope: lambda_fraction must lie in (0, 1)");
    const Eigen::Index n = A_cl.rows();
    Eigen::ComplexEigenSolver<Mat> es(A_cl, true);
    if (es.info() != Eigen::Success) throw std::runtime_error("decay_envelope: eigen decomposition failed");
    double abscissa = es.eigenvalues().real().maxCoeff();
    if (!(abscissa < 0.0)) throw std::invalid_argument("decay_envelope: A_cl is not Hurwitz");

    EnvelopeResult out;
    out.abscissa = abscissa;
    out.lambda = lambda_fraction * (-abscissa);
    Mat shifted = A_cl + out.lambda * Mat::Identity(n, n);
    double gap = (1.0 - lambda_fraction) * (-abscissa);

    // Initial horizon from eigenvector conditioning, then doubled until
    // ||e^{shifted T}|| <= 1, after which submultiplicativity caps the tail.
    Eigen::JacobiSVD<Mat> vsvd(es.eigenvectors());
    double smin = vsvd.singularValues()(n - 1);
    double cond = smin > 0.0 ? vsvd.singularValues()(0) / smin : INFINITY;
    double horizon = 1.0 / gap;
    if (std::isfinite(cond) && cond < 1e12) horizon = std::max(horizon, std::log(std::max(cond, 1.0)) / gap);
    if (T_check) horizon = std::max(horizon, *T_check);
    int doublings = 0;
    while (spectral_norm(matrix_exp(shifted * horizon)) > 1.0) {
        horizon *= 2.0;
        if (++doublings > 60) throw std::runtime_error("decay_envelope: envelope horizon did not close");
    }

    double nb = spectral_norm(shifted);
    double step = horizon / 2000.0;
    if (nb > 0.0) step = std::min(step, std::log(1.01) / nb);
    auto count = static_cast<long>(std::ceil(horizon / step));
    if (count > 20'000'000) throw std::runtime_error("decay_envelope: sampling grid too fine");
    step = horizon / static_cast<double>(count);

    Mat e_step = matrix_exp(shifted * step);
    Mat e = Mat::Identity(n, n);
    double best = 1.0;
    for (long k = 1; k <= count; ++k) {
        if (k % 64 == 0)
            e = matrix_exp(shifted * (step * static_cast<double>(k)));
        else
            e = e * e_step;
        if (e.norm() <= best) continue;
        best = std::max(best, spectral_norm(e));
    }
    out.M_sampled = best;
    out.M_lambda = std::max(1.0, 1.05 * best);
    out.T_check = horizon;
    out.grid_step = step;
    return out;
}

double small_gain_lhs(double M_lambda, double norm_BK, double norm_A_cl, double lambda, double delta) {
    return M_lambda * norm_BK * (std::expm1(norm_A_cl * delta) - std::expm1(-lambda * delta));
}

DeltaMargin delta_margin(double norm_A_cl, double norm_BK, double M_lambda, double lambda, double D0, double margin) {
    if (!(norm_BK >= 0.0) || !(M_lambda >= 1.0) || !(lambda > 0.0) || !(D0 > 0.0) || !(norm_A_cl >= 0.0))
        throw std::invalid_argument("delta_margin: invalid envelope inputs");
    if (!(margin >= 0.0 && margin < 1.0)) throw std::invalid_argument("delta_margin: margin must lie in [0, 1)");
    DeltaMargin out;
    double cap = D0 * (1.0 - 1e-6);
    auto g = [&](double d) { return small_gain_lhs(M_lambda, norm_BK, norm_A_cl, lambda, d) - lambda; };
    if (norm_BK == 0.0) {
        out.degenerate = true;
        out.delta_star = cap;
        out.delta_max = cap;
        return out;
    }
    double lo = 0.0;
    double hi = 1.0 / (norm_A_cl + lambda);
    while (g(hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6 * std::max(D0, 1.0)) {
            out.degenerate = true;
            out.delta_star = cap;
            out.delta_max = cap;
            return out;
        }
    }
    for (int it = 0; it < 2000; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (g(mid) <= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    out.delta_star = std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
    out.delta_max = std::min(out.delta_star * (1.0 - margin), cap);
    return out;
}

double delta_tilde(double sigma, double M_lambda, double lambda, double norm_A, double norm_C, double r, double eps) {
    double gap = lambda - sigma;
    double bracket = std::exp(sigma * eps) * std::expm1(norm_A * eps) - std::expm1(-gap * eps);
    return M_lambda * norm_C / gap * std::exp(sigma * r) * bracket;
}

SigmaRate sigma_rate(double M_lambda, double lambda, double norm_A, double norm_C, double r, double eps) {
    if (!(lambda > 0.0) || !(M_lambda >= 1.0) || !(norm_C >= 0.0) || !(r > 0.0) || !(eps >= 0.0))
        throw std::invalid_argument("sigma_rate: invalid inputs");
    const double threshold = 1.0 - 1e-6;
    auto f = [&](double s) { return delta_tilde(s, M_lambda, lambda, norm_A, norm_C, r, eps); };
    if (!(f(0.0) < threshold))
        throw std::invalid_argument("sigma_rate: small-gain condition violated (delta_tilde(0) >= 1)");
    double lo = 0.0;
    double hi = lambda;
    for (int it = 0; it < 2000; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) <= threshold)
            lo = mid;
        else
            hi = mid;
    }
    SigmaRate out;
    out.threshold = lo;
    out.sigma = 0.99 * lo;
    out.delta_tilde = f(out.sigma);
    return out;
}

TailConstants tail_constants(const TailInputs& in) {
    if (!(in.kappa > 0.0 && in.kappa < in.alpha)) throw std::invalid_argument("tail_constants: need 0 < kappa < alpha");
    if (!(in.riesz_lower > 0.0)) throw std::invalid_argument("tail_constants: riesz_lower must be positive");
    TailConstants out;
    double gap_sq = (in.alpha - in.kappa) * (in.alpha - in.kappa);
    double grow = std::exp(in.kappa * (in.D0 + in.delta));
    out.c0 = in.alpha * in.alpha * in.xi * in.xi * in.sum_be_sq + in.sum_abe_sq;
    double ratio = out.c0 / gap_sq;
    out.c1 = 4.0 / in.riesz_lower * (1.0 + 2.0 * in.m * in.cbar4 * in.cbar4 * grow * grow * ratio);
    out.c2 = 8.0 * in.m * (1.0 + in.cbar5 * grow) * (1.0 + in.cbar5 * grow) * ratio / in.riesz_lower;
    out.c3 = 8.0 * in.m * in.cbar6 * in.cbar6 * grow * grow * ratio / in.riesz_lower;
    return out;
}

TailConstants iss_constants(const Certificate& cert) {
    if (!cert.lifting_be_sq || !cert.lifting_abe_sq)
        throw std::runtime_error("iss_constants: descriptor provides no lifting norms");
    TailInputs in;
    in.alpha = cert.alpha;
    in.xi = cert.xi;
    in.kappa = cert.kappa;
    in.D0 = cert.D0;
    in.delta = cert.delta_max;
    in.riesz_lower = cert.riesz_lower;
    in.m = cert.m;
    in.sum_be_sq = *cert.lifting_be_sq;
    in.sum_abe_sq = *cert.lifting_abe_sq;
    in.cbar4 = cert.value("Cbar4");
    in.cbar5 = cert.value("Cbar5");
    in.cbar6 = cert.value("Cbar6");
    return tail_constants(in);
}

void apply_tail_constants(Certificate& cert) {
    TailConstants tc = iss_constants(cert);
    cert.set("tilde_C0", tc.c0, Provenance::exact);
    cert.set("tilde_C1", tc.c1, Provenance::exact);
    cert.set("tilde_C2", tc.c2, Provenance::exact);
    cert.set("tilde_C3", tc.c3, Provenance::exact);
    const double tilde[3] = {tc.c1, tc.c2, tc.c3};
    const char* names[3] = {"C1", "C2", "C3"};
    const char* assembled[3] = {"Cbar1_assembled", "Cbar2_assembled", "Cbar3_assembled"};
    double root = std::sqrt(cert.riesz_upper);
    for (int i = 0; i < 3; ++i) {
        const NamedConstant* c = cert.find(names[i]);
        if (!c) throw std::runtime_error("apply_tail_constants: truncated-state constants missing (run fit_constants)");
        cert.set(assembled[i], root * (c->value + std::sqrt(tilde[i])), c->provenance);
    }
}

std::vector<cplx> default_target_poles(int n0) {
    std::vector<cplx> p;
    for (int i = 0; i < n0; ++i) p.emplace_back(-2.0 - i, 0.0);
    return p;
}

Certificate synthesize(const SystemDescriptor& desc, const SynthesisOptions& opts) {
    if (!(opts.D0 > 0.0)) throw std::invalid_argument("synthesize: D0 must be positive");
    if (!(opts.t0 > 0.0)) throw std::invalid_argument("synthesize: t0 must be positive");
    if (!(opts.kappa_fraction > 0.0 && opts.kappa_fraction < 1.0))
        throw std::invalid_argument("synthesize: kappa_fraction must lie in (0, 1)");

    ModeClassification mc = classify_modes(desc, opts.scan_depth, opts.alpha);
    TruncatedModel tm = truncated_model(desc, mc.n0, mc.alpha, mc.xi);

    Certificate cert;
    cert.n0 = mc.n0;
    cert.m = desc.num_inputs();
    cert.field = desc.field();
    cert.D0 = opts.D0;
    cert.t0 = opts.t0;
    cert.alpha = mc.alpha;
    cert.xi = mc.xi;
    cert.xi_exact = mc.xi_exact;
    cert.riesz_lower = desc.riesz_lower();
    cert.riesz_upper = desc.riesz_upper();
    cert.A = tm.A;
    cert.B = tm.B;

    if (opts.gain) {
        if (opts.gain->rows() != cert.m || opts.gain->cols() != cert.n0)
            throw std::invalid_argument("synthesize: manual gain must be m x N0");
        cert.K = *opts.gain;
    } else {
        cert.target_poles = opts.target_poles.empty() ? default_target_poles(cert.n0) : opts.target_poles;
        cert.K = place_gain(tm, opts.D0, cert.target_poles);
    }
    cert.A_cl = closed_loop(tm, opts.D0, cert.K);
    if (!(spectral_abscissa(cert.A_cl) < 0.0)) throw std::runtime_error("synthesize: closed-loop matrix is not Hurwitz");

    EnvelopeResult env = decay_envelope(cert.A_cl, opts.lambda_fraction, opts.T_check);
    cert.lambda_fraction = opts.lambda_fraction;
    cert.M_lambda = env.M_lambda;
    cert.lambda = env.lambda;
    cert.T_check = env.T_check;
    cert.norm_A_cl = spectral_norm(cert.A_cl);
    cert.norm_BK = spectral_norm(cert.B * cert.K);

    DeltaMargin dm = delta_margin(cert.norm_A_cl, cert.norm_BK, cert.M_lambda, cert.lambda, cert.D0, opts.delta_margin);
    cert.delta_star = dm.delta_star;
    cert.delta_margin = opts.delta_margin;
    cert.delta_max = dm.delta_max;
    cert.delta_degenerate = dm.degenerate;

    SigmaRate sr = sigma_rate(cert.M_lambda, cert.lambda, cert.norm_A_cl, cert.norm_BK, cert.D0, cert.delta_max);
    cert.sigma = sr.sigma;
    cert.sigma_delta_tilde = sr.delta_tilde;

    cert.kappa_fraction = opts.kappa_fraction;
    cert.kappa = opts.kappa_fraction * std::min(cert.alpha, cert.sigma);
    cert.epsilon = cert.kappa / cert.alpha;

    if (const auto& lift = desc.lifting_norms()) {
        double be = 0.0;
        double abe = 0.0;
        for (double v : lift->be_sq) be += v;
        for (double v : lift->abe_sq) abe += v;
        cert.lifting_be_sq = be;
        cert.lifting_abe_sq = abe;
        cert.set("tilde_C0", cert.alpha * cert.alpha * cert.xi * cert.xi * be + abe, Provenance::exact);
    }
    return cert;
}

}  // namespace specpred
