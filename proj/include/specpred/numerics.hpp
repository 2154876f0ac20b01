#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace specpred {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

// e^z together with phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2.
// Near z = 0 both are summed as power series.
struct PhiValues {
    cplx exp_z;
    cplx phi1;
    cplx phi2;
};

PhiValues phi_functions(cplx z);

double spectral_norm(const Mat& m);
Mat matrix_exp(const Mat& m);
double spectral_abscissa(const Mat& m);

// Composite Simpson weights on [a, b] with an even number of panels.
std::vector<double> simpson_weights(int panels, double a, double b);

// Integral over [lo, hi] of e^{lambda (c - s)} g(s) ds where g is the
// piecewise-linear interpolant of samples g_j taken at s = j*h.
// sample(j) must return g_j for every j touched by [lo, hi].
template <class Sample>
cplx exp_weighted_integral(cplx lambda, double c, double lo, double hi, double h, Sample&& sample);

// Weight multiplying g_J (J = round(hi/h)) in exp_weighted_integral when hi
// lies on the grid and lo <= hi - h.
cplx exp_weighted_endpoint_weight(cplx lambda, double c, double hi, double h);

// 64-bit mixing used to derive independent seeds from (seed, stream).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

namespace detail {

inline double snap_to_grid(double x, double h) {
    double r = std::round(x / h);
    if (std::abs(x / h - r) < 1e-9) return r * h;
    return x;
}

// Exact integral over one segment [a, b] of e^{lambda (c - s)} times the
// linear function with values ga at a and gb at b.
inline cplx segment_integral(cplx lambda, double c, double a, double b, cplx ga, cplx gb) {
    double len = b - a;
    if (len <= 0.0) return 0.0;
    PhiValues p = phi_functions(-lambda * len);
    cplx scale = len * std::exp(lambda * (c - a));
    return scale * (p.phi2 * ga + (p.phi1 - p.phi2) * gb);
}

}  // namespace detail

template <class Sample>
cplx exp_weighted_integral(cplx lambda, double c, double lo, double hi, double h, Sample&& sample) {
    if (!(hi > lo)) return 0.0;
    lo = detail::snap_to_grid(lo, h);
    hi = detail::snap_to_grid(hi, h);
    auto j_lo = static_cast<long>(std::floor(lo / h + 1e-12));
    auto j_hi = static_cast<long>(std::ceil(hi / h - 1e-12));

    auto value_at = [&](long j, double s) -> cplx {
        double frac = (s - static_cast<double>(j) * h) / h;
        cplx g0 = sample(j);
        if (frac <= 0.0) return g0;
        return g0 + (sample(j + 1) - g0) * frac;
    };

    // Full segments share phi values and a geometric exponential factor.
    PhiValues full = phi_functions(-lambda * h);
    cplx step_factor = std::exp(lambda * h);
    cplx total = 0.0;
    cplx factor = 0.0;
    long since_refresh = 64;
    for (long j = j_hi - 1; j >= j_lo; --j) {
        double a = std::max(lo, static_cast<double>(j) * h);
        double b = std::min(hi, static_cast<double>(j + 1) * h);
        if (b <= a) continue;
        bool is_full = a == static_cast<double>(j) * h && b == static_cast<double>(j + 1) * h;
        if (is_full) {
            if (since_refresh >= 64) {
                factor = std::exp(lambda * (c - a));
                since_refresh = 0;
            } else {
                factor *= step_factor;
            }
            ++since_refresh;
            total += h * factor * (full.phi2 * sample(j) + (full.phi1 - full.phi2) * sample(j + 1));
        } else {
            since_refresh = 64;
            total += detail::segment_integral(lambda, c, a, b, value_at(j, a), value_at(j, b));
        }
    }
    return total;
}

}  // namespace specpred
