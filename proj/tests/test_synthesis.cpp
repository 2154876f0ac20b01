#include "doctest.h"

#include "specpred/synthesis.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <numbers>
#include <random>

using namespace specpred;

namespace {

// Ackermann's formula for A + b K with characteristic polynomial prod (s - p).
Mat ackermann(const Mat& A, const Vec& b, const std::vector<cplx>& poles) {
    const Eigen::Index n = A.rows();
    Mat ctrb(n, n);
    Vec col = b;
    for (Eigen::Index j = 0; j < n; ++j) {
        ctrb.col(j) = col;
        col = A * col;
    }
    Mat pa = Mat::Identity(n, n);
    for (cplx p : poles) pa = pa * (A - p * Mat::Identity(n, n));
    Mat en = Mat::Zero(1, n);
    en(0, n - 1) = 1.0;
    return -(en * ctrb.inverse() * pa);
}

TruncatedModel diag_model(std::vector<double> lam, std::vector<double> b) {
    TruncatedModel tm;
    auto n = static_cast<Eigen::Index>(lam.size());
    tm.n0 = static_cast<int>(n);
    tm.A = Mat::Zero(n, n);
    tm.B = Mat::Zero(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        tm.A(i, i) = lam[static_cast<size_t>(i)];
        tm.B(i, 0) = b[static_cast<size_t>(i)];
    }
    tm.alpha = 1.0;
    return tm;
}

double envelope_ratio(const Mat& A, double lambda, double t) {
    return spectral_norm((A * t).exp()) * std::exp(lambda * t);
}

}  // namespace

TEST_CASE("scalar pole placement matches the closed form") {
    double a = 15.0 - std::numbers::pi * std::numbers::pi;
    double b = std::numbers::sqrt2 * std::numbers::pi;
    double D0 = 0.5;
    double p = 2.0;
    Mat K = place_gain(diag_model({a}, {b}), D0, {cplx(-p)});
    double expect = -(p + a) * std::exp(D0 * a) / b;
    CHECK(std::abs(K(0, 0) - expect) < 1e-10 * std::abs(expect));
}

TEST_CASE("reaction-diffusion gain places the closed-loop pole") {
    auto d = build_reaction_diffusion(15.0);
    TruncatedModel tm = truncated_model(d, 1, 4.0 * std::numbers::pi * std::numbers::pi - 15.0, 1.0);
    Mat K = place_gain(tm, 0.5, {cplx(-2.0)});
    Mat acl = closed_loop(tm, 0.5, K);
    Eigen::ComplexEigenSolver<Mat> es(acl);
    CHECK(std::abs(es.eigenvalues()(0) - cplx(-2.0)) < 1e-8);
    CHECK(K.imag().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("multi-mode placement agrees with Ackermann") {
    TruncatedModel tm = diag_model({3.0, 1.0, -0.5}, {1.0, -2.0, 0.7});
    std::vector<cplx> poles{cplx(-1.0, 1.0), cplx(-1.0, -1.0), cplx(-3.0)};
    double D0 = 0.3;
    Mat K = place_gain(tm, D0, poles);
    Vec bt(3);
    for (int i = 0; i < 3; ++i) bt(i) = std::exp(-D0 * tm.A(i, i)) * tm.B(i, 0);
    Mat ref = ackermann(tm.A, bt, poles);
    CHECK((K - ref).cwiseAbs().maxCoeff() < 1e-9 * ref.cwiseAbs().maxCoeff());
}

TEST_CASE("place_gain reports uncontrollable and invalid requests") {
    CHECK_THROWS_WITH_AS(place_gain(diag_model({1.0, -1.0}, {0.0, 1.0}), 0.5, {cplx(-1.0), cplx(-2.0)}),
                         doctest::Contains("uncontrollable"), std::invalid_argument);
    CHECK_THROWS_AS(place_gain(diag_model({1.0}, {1.0}), 0.5, {cplx(1.0)}), std::invalid_argument);
    CHECK_THROWS_AS(place_gain(diag_model({1.0, 2.0}, {1.0, 1.0}), 0.5, {cplx(-1.0, 1.0), cplx(-2.0)}),
                    std::invalid_argument);
    TruncatedModel two_inputs = diag_model({1.0}, {1.0});
    two_inputs.B = Mat::Ones(1, 2);
    CHECK_THROWS_AS(place_gain(two_inputs, 0.5, {cplx(-1.0)}), std::invalid_argument);
}

TEST_CASE("scalar envelope") {
    Mat a(1, 1);
    a(0, 0) = -2.0;
    EnvelopeResult env = decay_envelope(a);
    CHECK(env.lambda == doctest::Approx(1.9).epsilon(1e-15));
    CHECK(env.M_sampled == 1.0);
    CHECK(env.M_lambda == doctest::Approx(1.05).epsilon(1e-15));
}

TEST_CASE("normal matrices have unit pre-inflation envelope") {
    Mat a = Mat::Zero(3, 3);
    a(0, 0) = -1.0;
    a(1, 1) = cplx(-2.0, 3.0);
    a(2, 2) = cplx(-2.0, -3.0);
    for (double f : {0.2, 0.5, 0.95}) {
        EnvelopeResult env = decay_envelope(a, f);
        CHECK(env.M_sampled == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("defective Jordan block envelope covers brute sampling") {
    Mat a(2, 2);
    a << -1.0, 10.0, 0.0, -1.0;
    EnvelopeResult env = decay_envelope(a);
    double brute = 0.0;
    for (int k = 0; k <= 60000; ++k) brute = std::max(brute, envelope_ratio(a, env.lambda, k * 1e-3));
    CHECK(brute > 1.0);
    CHECK(env.M_lambda > 1.0);
    CHECK(env.M_sampled >= brute * (1.0 - 1e-9));
    CHECK(env.M_lambda >= brute);
}

TEST_CASE("envelope is sound at random times") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 3; ++trial) {
        Mat a(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a(i, j) = nd(rng);
        a -= (spectral_abscissa(a) + 0.5) * Mat::Identity(3, 3);
        EnvelopeResult env = decay_envelope(a);
        std::uniform_real_distribution<double> ut(0.0, env.T_check);
        for (int k = 0; k < 2000; ++k) {
            double t = ut(rng);
            CHECK(envelope_ratio(a, env.lambda, t) <= env.M_lambda);
        }
    }
}

TEST_CASE("envelope rejects non-Hurwitz input") {
    Mat a(1, 1);
    a(0, 0) = 0.1;
    CHECK_THROWS_AS(decay_envelope(a), std::invalid_argument);
}

TEST_CASE("delta margin solves the small-gain equality") {
    CHECK(small_gain_lhs(3.0, 5.0, 2.0, 1.0, 0.0) == 0.0);
    // Independent root of e^{2d} - e^{-d} = 1 (bracketing solve in double precision).
    const double oracle = 0.2811995743229608;
    DeltaMargin dm = delta_margin(2.0, 1.0, 1.0, 1.0, 10.0);
    CHECK(std::abs(dm.delta_star - oracle) < 1e-12);
    CHECK(std::abs(small_gain_lhs(1.0, 1.0, 2.0, 1.0, dm.delta_star) - 1.0) <= 1e-10);
    CHECK(small_gain_lhs(1.0, 1.0, 2.0, 1.0, 1.01 * dm.delta_star) > 1.0);
    CHECK(dm.delta_max == doctest::Approx(0.9 * dm.delta_star).epsilon(1e-15));
    CHECK(small_gain_lhs(1.0, 1.0, 2.0, 1.0, dm.delta_max) < 1.0);
    CHECK_FALSE(dm.degenerate);
}

TEST_CASE("delta margin respects D0 and monotonicity") {
    DeltaMargin capped = delta_margin(2.0, 1.0, 1.0, 1.0, 0.1);
    CHECK(capped.delta_max == doctest::Approx(0.1 * (1.0 - 1e-6)).epsilon(1e-15));
    DeltaMargin base = delta_margin(2.0, 1.0, 1.2, 1.0, 10.0);
    DeltaMargin doubled = delta_margin(2.0, 2.0, 1.2, 1.0, 10.0);
    CHECK(doubled.delta_max < base.delta_max);
    DeltaMargin degen = delta_margin(2.0, 0.0, 1.0, 1.0, 0.4);
    CHECK(degen.degenerate);
    CHECK(degen.delta_max == doctest::Approx(0.4 * (1.0 - 1e-6)).epsilon(1e-15));
}

TEST_CASE("sigma rate bisection brackets the threshold") {
    SigmaRate zero = sigma_rate(1.0, 1.0, 2.0, 1.0, 0.5, 0.0);
    CHECK(zero.sigma == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(zero.delta_tilde == 0.0);

    SigmaRate sr = sigma_rate(1.0, 1.0, 2.0, 1.0, 0.5, 0.1);
    CHECK(sr.sigma > 0.0);
    CHECK(sr.delta_tilde <= 1.0 - 1e-6);
    double probe = sr.sigma / 0.99 * 1.01;
    if (probe < 1.0) CHECK(delta_tilde(probe, 1.0, 1.0, 2.0, 1.0, 0.5, 0.1) > 1.0 - 1e-6);

    double prev = -1.0;
    for (int k = 0; k < 100; ++k) {
        double s = 0.0099 * k;
        double v = delta_tilde(s, 1.0, 1.0, 2.0, 1.0, 0.5, 0.1);
        CHECK(v > prev);
        prev = v;
    }
    double last = 1.0;
    for (double eps : {0.02, 0.05, 0.1, 0.15, 0.2}) {
        SigmaRate s = sigma_rate(1.0, 1.0, 2.0, 1.0, 0.5, eps);
        CHECK(s.sigma < last);
        last = s.sigma;
    }
    CHECK_THROWS_AS(sigma_rate(1.0, 1.0, 2.0, 1.0, 0.5, 0.3), std::invalid_argument);
}

TEST_CASE("tail constants collapse without lifting energy") {
    TailInputs in;
    in.alpha = 2.0;
    in.xi = 0.0;
    in.kappa = 0.5;
    in.D0 = 0.5;
    in.delta = 0.1;
    in.riesz_lower = 0.8;
    in.sum_be_sq = 1.0;
    in.sum_abe_sq = 0.0;
    in.cbar4 = 3.0;
    in.cbar5 = 3.0;
    in.cbar6 = 3.0;
    TailConstants tc = tail_constants(in);
    CHECK(tc.c0 == 0.0);
    CHECK(tc.c2 == 0.0);
    CHECK(tc.c3 == 0.0);
    CHECK(tc.c1 == doctest::Approx(4.0 / 0.8));
}

TEST_CASE("tail constants match a second transcription") {
    TailInputs in;
    in.alpha = 1.0;
    in.xi = 1.0;
    in.kappa = 0.5;
    in.D0 = 1.0;
    in.delta = 1.0;
    in.riesz_lower = 1.0;
    in.m = 1;
    in.sum_be_sq = 1.0;
    in.sum_abe_sq = 1.0;
    in.cbar4 = 1.0;
    in.cbar5 = 1.0;
    in.cbar6 = 1.0;
    TailConstants tc = tail_constants(in);
    // Written out term by term for these inputs: C0 = 2, (alpha - kappa)^2 = 1/4, e^{kappa(D0+delta)} = e.
    double e = std::exp(1.0);
    double c0 = 1.0 + 1.0;
    double c1 = 4.0 + 8.0 * e * e * c0 * 4.0;
    double c2 = 8.0 * (1.0 + e) * (1.0 + e) * c0 * 4.0;
    double c3 = 8.0 * e * e * c0 * 4.0;
    CHECK(tc.c0 == doctest::Approx(c0).epsilon(1e-15));
    CHECK(tc.c1 == doctest::Approx(c1).epsilon(1e-14));
    CHECK(tc.c2 == doctest::Approx(c2).epsilon(1e-14));
    CHECK(tc.c3 == doctest::Approx(c3).epsilon(1e-14));

    double prev = 0.0;
    for (double c4 : {0.5, 1.0, 2.0, 4.0}) {
        in.cbar4 = c4;
        double v = tail_constants(in).c1;
        CHECK(v > prev);
        prev = v;
    }
    in.kappa = 1.0;
    CHECK_THROWS_AS(tail_constants(in), std::invalid_argument);
}

TEST_CASE("synthesis pipeline on the unstable reaction-diffusion plant") {
    auto d = build_reaction_diffusion(15.0);
    Certificate cert = synthesize(d);
    CHECK(cert.n0 == 1);
    CHECK(cert.K(0, 0).real() < 0.0);
    CHECK(spectral_abscissa(cert.A_cl) == doctest::Approx(-2.0).epsilon(1e-10));
    CHECK(cert.lambda == doctest::Approx(1.9).epsilon(1e-10));
    CHECK(cert.M_lambda == doctest::Approx(1.05).epsilon(1e-12));
    CHECK(cert.delta_max > 0.0);
    CHECK(cert.delta_max < cert.D0);
    CHECK(small_gain_lhs(cert.M_lambda, cert.norm_BK, cert.norm_A_cl, cert.lambda, cert.delta_max) < cert.lambda);
    CHECK(cert.sigma > 0.0);
    CHECK(cert.sigma < cert.lambda);
    CHECK(cert.kappa > 0.0);
    CHECK(cert.kappa < std::min(cert.alpha, cert.sigma));
    CHECK(cert.epsilon == doctest::Approx(cert.kappa / cert.alpha));
    double alpha = cert.alpha;
    CHECK(cert.value("tilde_C0") == doctest::Approx(alpha * alpha / 3.0 + 75.0).epsilon(1e-10));
    CHECK_FALSE(cert.has_fitted());
    CHECK_THROWS_AS(cert.value("Cbar4"), std::runtime_error);
}

TEST_CASE("manual gain is required for multiple inputs") {
    auto d = SystemDescriptor::explicit_list({cplx(1.0), cplx(-5.0), cplx(-9.0)},
                                             {{cplx(1.0), cplx(0.5)}, {cplx(1.0), cplx(0.0)}, {cplx(1.0), cplx(1.0)}}, 1.0,
                                             1.0);
    CHECK_THROWS_AS(synthesize(d), std::invalid_argument);
    SynthesisOptions opts;
    Mat K(2, 1);
    K << -3.0, -3.0;
    opts.gain = K;
    Certificate cert = synthesize(d, opts);
    CHECK(cert.m == 2);
    CHECK(cert.delta_max > 0.0);
}
