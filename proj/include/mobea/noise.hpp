#ifndef MOBEA_NOISE_HPP
#define MOBEA_NOISE_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mobea/array.hpp"
#include "mobea/rng.hpp"

namespace mobea {

/// Two-term complex Gaussian mixture: dense component of variance base_variance
/// with probability 1 - outlier_prob, outliers of variance outlier_variance.
struct GmmNoiseModel {
    double outlier_prob = 0.1;    // c2
    double base_variance = 1.0;   // eta_1^2
    double outlier_variance = 100.0; // eta_2^2

    GmmNoiseModel() = default;
    GmmNoiseModel(double c2, double eta1_sq, double eta2_sq)
        : outlier_prob(c2), base_variance(eta1_sq), outlier_variance(eta2_sq) {
        if (!(c2 >= 0.0 && c2 < 0.5))
            throw std::domain_error("GmmNoiseModel: outlier probability must be in [0, 0.5)");
        if (eta1_sq <= 0.0 || eta2_sq <= 0.0)
            throw std::domain_error("GmmNoiseModel: variances must be positive");
    }
};

/// Symmetric alpha-stable with characteristic function exp(-gamma^alpha |x|^alpha),
/// applied independently to real and imaginary parts.
struct SasNoiseModel {
    double alpha = 1.4;
    double scale = 1.0; // gamma

    SasNoiseModel() = default;
    SasNoiseModel(double a, double gamma) : alpha(a), scale(gamma) {
        if (!(a > 0.0 && a <= 2.0))
            throw std::domain_error("SasNoiseModel: alpha must be in (0, 2]");
        if (gamma <= 0.0)
            throw std::domain_error("SasNoiseModel: scale must be positive");
    }
};

/// SNR = eta_s^2 / eta_1^2, with the fixed outlier ratio eta_2^2 = 100 eta_1^2.
inline GmmNoiseModel gmm_from_snr(double snr_db, double source_power, double c2) {
    if (!(c2 > 0.0 && c2 < 0.5))
        throw std::domain_error("gmm_from_snr: c2 must be in (0, 0.5)");
    if (source_power <= 0.0)
        throw std::domain_error("gmm_from_snr: source power must be positive");
    const double eta1_sq = source_power / std::pow(10.0, snr_db / 10.0);
    return GmmNoiseModel(c2, eta1_sq, 100.0 * eta1_sq);
}

/// GSNR = eta_s^2 / gamma^alpha.
inline SasNoiseModel sas_from_gsnr(double gsnr_db, double source_power, double alpha) {
    if (!(alpha > 0.0 && alpha <= 2.0))
        throw std::domain_error("sas_from_gsnr: alpha must be in (0, 2]");
    if (source_power <= 0.0)
        throw std::domain_error("sas_from_gsnr: source power must be positive");
    const double gamma = std::pow(source_power / std::pow(10.0, gsnr_db / 10.0), 1.0 / alpha);
    return SasNoiseModel(alpha, gamma);
}

inline CMatrix sample_gmm(const GmmNoiseModel& model, int m, int t, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sd1 = std::sqrt(model.base_variance / 2.0);
    const double sd2 = std::sqrt(model.outlier_variance / 2.0);
    CMatrix out(m, t);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < t; ++j) {
            const double sd = uni(rng) < model.outlier_prob ? sd2 : sd1;
            out(i, j) = Complex(sd * gauss(rng), sd * gauss(rng));
        }
    return out;
}

namespace detail {

// Chambers-Mallows-Stuck draw with unit scale. The alpha=1 branch of the
// general formula degenerates to tan(u), which it reproduces exactly since
// the second factor's exponent (1-alpha)/alpha vanishes.
inline double sas_standard(double alpha, Rng& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double u = std::numbers::pi * (uni(rng) - 0.5); // (-pi/2, pi/2)
    double w;
    do {
        w = -std::log(1.0 - uni(rng));
    } while (w <= 0.0);
    if (std::abs(alpha - 1.0) < 1e-12)
        return std::tan(u);
    const double s = std::sin(alpha * u) / std::pow(std::cos(u), 1.0 / alpha);
    return s * std::pow(std::cos(u - alpha * u) / w, (1.0 - alpha) / alpha);
}

} // namespace detail

inline CMatrix sample_sas(const SasNoiseModel& model, int m, int t, std::uint64_t seed) {
    Rng rng(seed);
    CMatrix out(m, t);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < t; ++j) {
            const double re = model.scale * detail::sas_standard(model.alpha, rng);
            const double im = model.scale * detail::sas_standard(model.alpha, rng);
            out(i, j) = Complex(re, im);
        }
    return out;
}

} // namespace mobea

#endif
