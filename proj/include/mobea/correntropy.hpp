#ifndef MOBEA_CORRENTROPY_HPP
#define MOBEA_CORRENTROPY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mobea/array.hpp"

namespace mobea {

/// Annealed kernel size sigma(G) = sigma_max exp(-nu G) + sigma_min.
struct KernelSchedule {
    double sigma_max = 1.0;
    double sigma_min = 0.03;
    double decay = 2e-4; // nu

    KernelSchedule() = default;
    KernelSchedule(double smax, double smin, double nu)
        : sigma_max(smax), sigma_min(smin), decay(nu) {
        if (smax <= 0.0 || smin <= 0.0 || nu <= 0.0)
            throw std::domain_error("KernelSchedule: parameters must be positive");
    }
};

inline double gaussian_kernel(Complex p, double sigma) {
    if (sigma <= 0.0)
        throw std::domain_error("gaussian_kernel: sigma must be positive");
    // the exact value is strictly positive; keep the floating-point result
    // inside (0, 1] even when the exponential underflows
    return std::max(std::exp(-std::norm(p) / (2.0 * sigma * sigma)),
                    std::numeric_limits<double>::min());
}

/// Correntropy loss: 1 - mean elementwise Gaussian kernel of the residual X - Z.
inline double clf(const CMatrix& x, const CMatrix& z, double sigma) {
    if (x.rows() != z.rows() || x.cols() != z.cols())
        throw std::domain_error("clf: dimension mismatch");
    const Eigen::Index p = x.size();
    if (p < 1)
        throw std::domain_error("clf: empty input");
    if (sigma <= 0.0)
        throw std::domain_error("clf: sigma must be positive");
    const double inv = 1.0 / (2.0 * sigma * sigma);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            acc += std::exp(-std::norm(x(i, j) - z(i, j)) * inv);
    // strictly below 1 in exact arithmetic; clamp the underflow case
    return std::min(1.0 - acc / static_cast<double>(p),
                    1.0 - std::numeric_limits<double>::epsilon() / 2.0);
}

namespace detail {

// Type-7 quantile (linear interpolation between order statistics) of a
// sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double l) {
    const std::size_t n = sorted.size();
    if (n == 1)
        return sorted[0];
    const double h = l * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

} // namespace detail

/// Data-driven kernel bounds: sigma_min fixed at 0.03, sigma_max from the
/// interquantile spread of the snapshot magnitudes.
inline std::pair<double, double> sigma_bounds_from_data(const CMatrix& y) {
    if (y.size() < 1)
        throw std::domain_error("sigma_bounds_from_data: empty snapshot matrix");
    std::vector<double> mags;
    mags.reserve(static_cast<std::size_t>(y.size()));
    for (Eigen::Index j = 0; j < y.cols(); ++j)
        for (Eigen::Index i = 0; i < y.rows(); ++i)
            mags.push_back(std::abs(y(i, j)));
    std::sort(mags.begin(), mags.end());
    const double sigma_min = 0.03;
    const double sigma_max =
        0.5 * (detail::quantile_sorted(mags, 0.875) - detail::quantile_sorted(mags, 0.125)) -
        sigma_min;
    if (sigma_max <= 0.0)
        throw std::runtime_error("sigma_bounds_from_data: degenerate magnitude spread");
    return {sigma_max, sigma_min};
}

inline double kernel_size(int generation, const KernelSchedule& sched) {
    if (generation < 0)
        throw std::domain_error("kernel_size: generation must be nonnegative");
    return sched.sigma_max * std::exp(-sched.decay * generation) + sched.sigma_min;
}

} // namespace mobea

#endif
