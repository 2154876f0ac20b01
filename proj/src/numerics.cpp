#include "specpred/numerics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <stdexcept>

namespace specpred {

PhiValues phi_functions(cplx z) {
    if (std::abs(z) < 0.5) {
        // phi1 = sum z^k/(k+1)!, phi2 = sum z^k/(k+2)!
        cplx term1 = 1.0;
        cplx term2 = 0.5;
        cplx phi1 = term1;
        cplx phi2 = term2;
        for (int k = 1; k < 24; ++k) {
            term1 *= z / static_cast<double>(k + 1);
            term2 *= z / static_cast<double>(k + 2);
            phi1 += term1;
            phi2 += term2;
        }
        return {1.0 + z * phi1, phi1, phi2};
    }
    cplx e = std::exp(z);
    cplx phi1 = (e - 1.0) / z;
    cplx phi2 = (phi1 - 1.0) / z;
    return {e, phi1, phi2};
}

double spectral_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

Mat matrix_exp(const Mat& m) {
    return m.exp();
}

double spectral_abscissa(const Mat& m) {
    if (m.rows() != m.cols() || m.rows() == 0) throw std::invalid_argument("spectral_abscissa: square nonempty matrix required");
    Eigen::ComplexEigenSolver<Mat> es(m, false);
    if (es.info() != Eigen::Success) throw std::runtime_error("spectral_abscissa: eigenvalue solver failed");
    return es.eigenvalues().real().maxCoeff();
}

std::vector<double> simpson_weights(int panels, double a, double b) {
    if (panels < 2 || panels % 2 != 0) throw std::invalid_argument("simpson_weights: panel count must be even and >= 2");
    double h = (b - a) / panels;
    std::vector<double> w(static_cast<size_t>(panels) + 1);
    for (int i = 0; i <= panels; ++i) {
        double c = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        w[static_cast<size_t>(i)] = c * h / 3.0;
    }
    return w;
}

cplx exp_weighted_endpoint_weight(cplx lambda, double c, double hi, double h) {
    PhiValues p = phi_functions(-lambda * h);
    return h * std::exp(lambda * (c - (hi - h))) * (p.phi1 - p.phi2);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

}  // namespace specpred
