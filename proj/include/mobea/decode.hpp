#ifndef MOBEA_DECODE_HPP
#define MOBEA_DECODE_HPP

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mobea/array.hpp"
#include "mobea/correntropy.hpp"

namespace mobea {

using ActiveSet = std::vector<std::uint8_t>; // length N, entries 0/1

inline int popcount(const ActiveSet& e) {
    int c = 0;
    for (auto b : e)
        c += b ? 1 : 0;
    return c;
}

inline std::vector<int> active_indices(const ActiveSet& e) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < e.size(); ++i)
        if (e[i])
            idx.push_back(static_cast<int>(i));
    return idx;
}

inline CMatrix perturbed_manifold(const Grid& grid, const RVector& mismatch,
                                  const ArrayConfig& array) {
    std::vector<double> angles(grid.points);
    for (int i = 0; i < grid.size(); ++i)
        angles[static_cast<std::size_t>(i)] += mismatch(i);
    return detail::manifold_unchecked(angles, array);
}

/// W_{i,j} = g_sigma((Y - A * S_knee)_{i,j}); S_knee enters through its active
/// rows only, so the product uses the compressed form A|_e * S|_e.
inline RMatrix weight_matrix(const CMatrix& y, const CMatrix& a, const CMatrix& s_knee,
                             double sigma) {
    CMatrix residual = y - a * s_knee;
    RMatrix w(y.rows(), y.cols());
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (Eigen::Index j = 0; j < y.cols(); ++j)
        for (Eigen::Index i = 0; i < y.rows(); ++i)
            w(i, j) = std::max(std::exp(-std::norm(residual(i, j)) * inv),
                               std::numeric_limits<double>::min());
    return w;
}

/// Weighted least squares via the normal equations, with a truncated
/// eigen-pseudoinverse fallback when the weighted Gram matrix is close to
/// singular (adjacent grid columns can be nearly collinear).
inline CVector wls_solve(const CMatrix& a_active, const RVector& w, const CVector& y) {
    const Eigen::Index m = a_active.rows();
    const Eigen::Index k = a_active.cols();
    if (k > m)
        throw std::invalid_argument("wls_solve: overcomplete support (k > M)");
    if (w.size() != m || y.size() != m)
        throw std::invalid_argument("wls_solve: dimension mismatch");
    CMatrix aw = a_active.adjoint() * w.asDiagonal(); // k x M
    CMatrix gram = aw * a_active;                     // k x k Hermitian
    CVector rhs = aw * y;

    Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram);
    const RVector& ev = eig.eigenvalues(); // ascending, real
    const double emax = ev(k - 1);
    if (emax <= 0.0)
        return CVector::Zero(k);
    const double cutoff = emax / 1e12;
    CVector proj = eig.eigenvectors().adjoint() * rhs;
    for (Eigen::Index i = 0; i < k; ++i)
        proj(i) = ev(i) > cutoff ? proj(i) / ev(i) : Complex(0.0, 0.0);
    return eig.eigenvectors() * proj;
}

/// Decodes one active set into an N x T row-sparse signal matrix: column-wise
/// weighted least squares on the active submatrix of A, zeros elsewhere.
inline CMatrix decode_one(const CMatrix& y, const CMatrix& a, const ActiveSet& e,
                          const RMatrix& w) {
    const Eigen::Index n = a.cols();
    const Eigen::Index t = y.cols();
    CMatrix s = CMatrix::Zero(n, t);
    const std::vector<int> idx = active_indices(e);
    if (idx.empty())
        return s;
    CMatrix a_active(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c)
        a_active.col(static_cast<Eigen::Index>(c)) = a.col(idx[c]);
    for (Eigen::Index j = 0; j < t; ++j) {
        CVector sj = wls_solve(a_active, w.col(j), y.col(j));
        for (std::size_t c = 0; c < idx.size(); ++c)
            s(idx[c], j) = sj(static_cast<Eigen::Index>(c));
    }
    return s;
}

/// Shared-weight decoding of a whole set of active sets (one weight matrix
/// computed from the knee solution's signal estimate).
inline std::vector<CMatrix> decode(const CMatrix& y, const CMatrix& a,
                                   const std::vector<ActiveSet>& sets,
                                   const CMatrix& s_knee, double sigma) {
    RMatrix w = weight_matrix(y, a, s_knee, sigma);
    std::vector<CMatrix> out;
    out.reserve(sets.size());
    for (const ActiveSet& e : sets)
        out.push_back(decode_one(y, a, e, w));
    return out;
}

} // namespace mobea

#endif
