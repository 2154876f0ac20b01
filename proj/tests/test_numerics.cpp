#include "doctest.h"

#include "specpred/numerics.hpp"

#include <random>

using namespace specpred;

namespace {

// Reference integral: composite Simpson inside each interpolation segment.
cplx brute_integral(cplx lambda, double c, double lo, double hi, double h, const std::vector<cplx>& g) {
    const int panels = 400;
    cplx sum = 0.0;
    for (size_t j = 0; j + 1 < g.size(); ++j) {
        double a = std::max(lo, static_cast<double>(j) * h);
        double b = std::min(hi, static_cast<double>(j + 1) * h);
        if (b <= a) continue;
        double step = (b - a) / panels;
        cplx part = 0.0;
        for (int i = 0; i <= panels; ++i) {
            double s = a + i * step;
            double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            double f = (s - static_cast<double>(j) * h) / h;
            cplx gs = g[j] * (1.0 - f) + g[j + 1] * f;
            part += w * std::exp(lambda * (c - s)) * gs;
        }
        sum += part * step / 3.0;
    }
    return sum;
}

}  // namespace

TEST_CASE("phi functions agree with closed forms away from zero") {
    for (cplx z : {cplx(0.7, 0.0), cplx(-3.0, 0.5), cplx(2.0, -1.0), cplx(-40.0, 0.0)}) {
        PhiValues p = phi_functions(z);
        CHECK(std::abs(p.exp_z - std::exp(z)) < 1e-14 * std::abs(std::exp(z)) + 1e-300);
        CHECK(std::abs(p.phi1 - (std::exp(z) - 1.0) / z) < 1e-13);
        CHECK(std::abs(p.phi2 - (std::exp(z) - 1.0 - z) / (z * z)) < 1e-12);
    }
}

TEST_CASE("phi functions are continuous across the series switch") {
    for (double r : {0.4999999, 0.5000001}) {
        cplx z(r, 0.0);
        PhiValues p = phi_functions(z);
        CHECK(std::abs(p.phi1 - std::expm1(r) / r) < 1e-14);
        CHECK(std::abs(p.phi2 - (std::expm1(r) - r) / (r * r)) < 1e-13);
    }
    PhiValues zero = phi_functions(0.0);
    CHECK(zero.phi1 == 1.0);
    CHECK(zero.phi2 == 0.5);
    PhiValues tiny = phi_functions(1e-12);
    CHECK(std::abs(tiny.phi1 - 1.0) < 1e-11);
    CHECK(std::abs(tiny.phi2 - 0.5) < 1e-11);
}

TEST_CASE("simpson weights integrate cubics exactly") {
    auto w = simpson_weights(8, -1.0, 2.0);
    double sum = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        double x = -1.0 + 3.0 * static_cast<double>(i) / 8.0;
        sum += w[i] * (x * x * x - 2.0 * x + 1.0);
    }
    CHECK(sum == doctest::Approx(3.75 - 3.0 + 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(simpson_weights(7, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("exponential integral of a constant matches the antiderivative") {
    double h = 0.01;
    cplx lambda = 1.7;
    double D0 = 0.5;
    double t = 0.73;
    std::vector<cplx> g(200, 2.0);
    cplx got = exp_weighted_integral(lambda, t - D0, std::max(t - D0, 0.0), t, h, [&](long j) { return g[static_cast<size_t>(j)]; });
    cplx expect = std::exp(-D0 * lambda) * (std::exp(lambda * std::min(t, D0)) - 1.0) / lambda * 2.0;
    CHECK(std::abs(got - expect) < 1e-13);
}

TEST_CASE("exponential integral with zero rate is the plain integral") {
    double h = 0.125;
    std::vector<cplx> g(9);
    for (size_t j = 0; j < g.size(); ++j) g[j] = static_cast<double>(j) * h;
    cplx got = exp_weighted_integral(0.0, 0.0, 0.0, 1.0, h, [&](long j) { return g[static_cast<size_t>(j)]; });
    CHECK(std::abs(got - 0.5) < 1e-15);
}

TEST_CASE("exponential integral matches brute quadrature on random data with clipped ends") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    double h = 0.02;
    std::vector<cplx> g(120);
    for (auto& v : g) v = cplx(nd(rng), nd(rng));
    for (cplx lambda : {cplx(5.13, 0.0), cplx(-30.0, 0.0), cplx(-1.0, 4.0), cplx(1e-9, 0.0)}) {
        double lo = 0.137;
        double hi = 1.911;
        double c = 0.4;
        cplx got = exp_weighted_integral(lambda, c, lo, hi, h, [&](long j) { return g[static_cast<size_t>(j)]; });
        cplx ref = brute_integral(lambda, c, lo, hi, h, g);
        CHECK(std::abs(got - ref) < 1e-9 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("endpoint weight isolates the last sample") {
    double h = 0.01;
    cplx lambda = 4.0;
    double t = 1.0;
    double c = t - 0.5;
    std::vector<cplx> g(101, 0.0);
    g[100] = 1.0;
    cplx got = exp_weighted_integral(lambda, c, t - 0.5, t, h, [&](long j) { return g[static_cast<size_t>(j)]; });
    CHECK(std::abs(got - exp_weighted_endpoint_weight(lambda, c, t, h)) < 1e-15);
}

TEST_CASE("seed derivation is deterministic and stream-sensitive") {
    CHECK(derive_seed(42, 0) == derive_seed(42, 0));
    CHECK(derive_seed(42, 0) != derive_seed(42, 1));
    CHECK(derive_seed(42, 0) != derive_seed(43, 0));
}

TEST_CASE("spectral norm and abscissa") {
    Mat m(2, 2);
    m << -1.0, 10.0, 0.0, -2.0;
    CHECK(spectral_abscissa(m) == doctest::Approx(-1.0));
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = -4.0;
    CHECK(spectral_norm(d) == doctest::Approx(4.0));
}
