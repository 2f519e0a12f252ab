#ifndef MOBEA_ARRAY_HPP
#define MOBEA_ARRAY_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mobea/rng.hpp"

namespace mobea {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Complex = std::complex<double>;

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Uniform linear array: M omnidirectional sensors, spacing d expressed as d/lambda.
struct ArrayConfig {
    int num_sensors = 8;
    double spacing_over_wavelength = 0.5;

    ArrayConfig() = default;
    ArrayConfig(int m, double d_over_lambda)
        : num_sensors(m), spacing_over_wavelength(d_over_lambda) {
        if (m < 2)
            throw std::invalid_argument("ArrayConfig: need at least 2 sensors");
        if (d_over_lambda <= 0.0)
            throw std::invalid_argument("ArrayConfig: spacing must be positive");
    }
};

/// Equi-spaced angular grid over [-90, 90] degrees.
struct Grid {
    std::vector<double> points; // degrees, strictly increasing
    double interval = 0.0;      // degrees

    static Grid uniform(double interval_deg) {
        if (interval_deg <= 0.0)
            throw std::invalid_argument("Grid: interval must be positive");
        Grid g;
        g.interval = interval_deg;
        const int n = static_cast<int>(std::floor(180.0 / interval_deg + 1e-9)) + 1;
        if (n < 2)
            throw std::invalid_argument("Grid: fewer than 2 points");
        g.points.resize(n);
        for (int i = 0; i < n; ++i)
            g.points[i] = -90.0 + i * interval_deg;
        return g;
    }

    int size() const { return static_cast<int>(points.size()); }
};

struct Scenario {
    ArrayConfig array;
    Grid grid;
    std::vector<double> true_doas; // degrees
    int snapshots = 20;
    double source_power = 1.0; // eta_s^2

    void validate() const {
        const int k = static_cast<int>(true_doas.size());
        if (k < 1)
            throw std::invalid_argument("Scenario: need at least one source");
        if (k > array.num_sensors - 1)
            throw std::invalid_argument("Scenario: more sources than the array can resolve");
        for (std::size_t i = 0; i < true_doas.size(); ++i) {
            if (!(true_doas[i] > -90.0 && true_doas[i] <= 90.0))
                throw std::invalid_argument("Scenario: DOA outside (-90, 90]");
            for (std::size_t j = i + 1; j < true_doas.size(); ++j)
                if (true_doas[i] == true_doas[j])
                    throw std::invalid_argument("Scenario: duplicate DOAs");
        }
        if (snapshots < 1)
            throw std::invalid_argument("Scenario: snapshots must be positive");
        if (source_power <= 0.0)
            throw std::invalid_argument("Scenario: source power must be positive");
    }
};

namespace detail {

// No range check; the solver evaluates perturbed grid points that can sit
// up to r/2 beyond the nominal [-90, 90] range.
inline CVector steering_unchecked(double theta_deg, const ArrayConfig& array) {
    const int m = array.num_sensors;
    CVector a(m);
    const double phase = -2.0 * std::numbers::pi * array.spacing_over_wavelength *
                         std::sin(deg2rad(theta_deg));
    for (int i = 0; i < m; ++i)
        a(i) = std::polar(1.0, phase * i);
    return a;
}

inline CMatrix manifold_unchecked(const std::vector<double>& angles_deg,
                                  const ArrayConfig& array) {
    if (angles_deg.empty())
        throw std::invalid_argument("manifold: empty angle sequence");
    CMatrix a(array.num_sensors, static_cast<int>(angles_deg.size()));
    for (std::size_t j = 0; j < angles_deg.size(); ++j)
        a.col(static_cast<int>(j)) = steering_unchecked(angles_deg[j], array);
    return a;
}

} // namespace detail

/// a(theta)_m = exp(-j 2 pi m (d/lambda) sin theta), m = 0..M-1.
inline CVector steering_vector(double theta_deg, const ArrayConfig& array) {
    if (!(theta_deg >= -90.0 && theta_deg <= 90.0))
        throw std::domain_error("steering_vector: angle outside [-90, 90]");
    return detail::steering_unchecked(theta_deg, array);
}

inline CMatrix manifold(const std::vector<double>& angles_deg, const ArrayConfig& array) {
    for (double t : angles_deg)
        if (!(t >= -90.0 && t <= 90.0))
            throw std::domain_error("manifold: angle outside [-90, 90]");
    return detail::manifold_unchecked(angles_deg, array);
}

/// Draws K x T source waveforms (i.i.d. circular complex Gaussian, variance
/// source_power per entry) and returns the clean snapshot matrix A(theta_true) * S.
inline std::pair<CMatrix, CMatrix> synthesize(const Scenario& sc, std::uint64_t seed) {
    sc.validate();
    const int k = static_cast<int>(sc.true_doas.size());
    const int t = sc.snapshots;
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(sc.source_power / 2.0));
    CMatrix s(k, t);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < t; ++j)
            s(i, j) = Complex(gauss(rng), gauss(rng));
    CMatrix a = manifold(sc.true_doas, sc.array);
    return {a * s, s};
}

} // namespace mobea

#endif
