#ifndef MOBEA_SOLVER_HPP
#define MOBEA_SOLVER_HPP

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mobea/moea.hpp"

namespace mobea {

enum class RefinementMode { ForwardSearch, OnGridOnly, Taylor };

inline std::string to_string(RefinementMode m) {
    switch (m) {
    case RefinementMode::ForwardSearch: return "forward";
    case RefinementMode::OnGridOnly: return "on-grid";
    case RefinementMode::Taylor: return "taylor";
    }
    return "?";
}

struct SolverConfig {
    int population_size = 50;
    double crossover_prob = 0.9;
    double mutation_prob = -1.0; // <0 means 1/N
    int inner_max = 50;          // lt_max
    int inner_knee_patience = 5;
    int forward_max = 200;       // ut_max
    double step_deg = -1.0;      // <0 means r/100
    int outer_max = 200;         // G_max
    double convergence_tol = 1e-6;
    int convergence_window = 5;
    // Earliest outer generation at which the convergence test may fire. The
    // knee signal can sit still for a few generations while the combinatorial
    // level is still discovering supports; declaring convergence that early
    // occasionally freezes a wrong support. A warm-up floor removes those
    // premature stops at modest cost for runs that genuinely settle fast.
    int min_generations = 30;
    // Number of initial outer generations that run without mismatch
    // refinement. Refining through a not-yet-settled knee perturbs the shared
    // grid for every candidate support, which can permanently entrench a wrong
    // support: once zeta is biased toward it, better supports decode against a
    // perturbed manifold and lose the comparison they would win at zeta = 0.
    int refine_warmup = 10;
    RefinementMode mode = RefinementMode::ForwardSearch;
};

struct GenerationTrace {
    int generation = 0;
    int knee_f1 = 0;
    double knee_f2 = 0.0;
    double sigma = 0.0;
    double elapsed_seconds = 0.0;
};

struct EstimationResult {
    std::vector<double> estimated_doas; // degrees
    int estimated_source_number = 0;
    RVector final_mismatch;
    std::vector<GenerationTrace> trace;
    bool converged = false;
    int generations = 0;
};

struct EstimationFailed : std::runtime_error {
    std::vector<GenerationTrace> trace;
    explicit EstimationFailed(std::vector<GenerationTrace> tr)
        : std::runtime_error("estimation failed: knee unavailable for the entire run"),
          trace(std::move(tr)) {}
};

/// Derivative-free grid refinement (two phases): probe a random +-1 direction
/// per active grid point against the joint loss, then step all accepted
/// directions together until the loss stops decreasing. Components leaving
/// (-r/2, r/2] are rejected and stay put.
inline RVector forward_search(const RVector& mismatch, const ActiveSet& knee_set,
                              const CMatrix& knee_signal, const CMatrix& y,
                              const Grid& grid, const ArrayConfig& array, double sigma,
                              double step_deg, int ut_max, Rng& rng) {
    const double half = grid.interval / 2.0;
    auto feasible = [&](double z) { return z > -half && z <= half; };
    auto loss = [&](const RVector& z) {
        return clf(y, perturbed_manifold(grid, z, array) * knee_signal, sigma);
    };

    const std::vector<int> idx = active_indices(knee_set);
    const double f0 = loss(mismatch);

    // Phase 1: independent direction probes against the incoming mismatch.
    std::uniform_int_distribution<int> coin(0, 1);
    std::vector<int> beta(idx.size(), 0);
    for (std::size_t c = 0; c < idx.size(); ++c) {
        int b = coin(rng) ? 1 : -1;
        const double proposal = mismatch(idx[c]) + step_deg * b;
        if (!feasible(proposal)) {
            beta[c] = 0;
            continue;
        }
        RVector probe = mismatch;
        probe(idx[c]) = proposal;
        const double f = loss(probe);
        if (std::abs(f - f0) <= 1e-14) {
            b = 0;
        } else if (f > f0) {
            // verify the flipped direction before committing to it: at a
            // coordinate-wise minimum both probes increase the loss, and a
            // blind flip would drag the component away during phase 2
            b = -b;
            const double flipped = mismatch(idx[c]) + step_deg * b;
            if (!feasible(flipped)) {
                b = 0;
            } else {
                probe(idx[c]) = flipped;
                if (loss(probe) >= f0)
                    b = 0;
            }
        }
        beta[c] = b;
    }

    // Phase 2: joint steps while the loss strictly decreases.
    RVector current = mismatch;
    double f_current = f0;
    for (int ut = 0; ut < ut_max; ++ut) {
        RVector next = current;
        for (std::size_t c = 0; c < idx.size(); ++c) {
            const double proposal = current(idx[c]) + step_deg * beta[c];
            if (feasible(proposal))
                next(idx[c]) = proposal;
        }
        const double f_next = loss(next);
        if (f_next >= f_current)
            break;
        current = std::move(next);
        f_current = f_next;
    }
    return current;
}

namespace detail {

// d a(theta)/d theta (theta in degrees) for one grid angle
inline CVector steering_derivative(double theta_deg, const ArrayConfig& array) {
    CVector a = steering_unchecked(theta_deg, array);
    const double factor = -2.0 * std::numbers::pi * array.spacing_over_wavelength *
                          std::cos(deg2rad(theta_deg)) * std::numbers::pi / 180.0;
    for (int m = 0; m < array.num_sensors; ++m)
        a(m) *= Complex(0.0, factor * m);
    return a;
}

} // namespace detail

/// First-order Taylor refinement of the mismatch: linearize the manifold around
/// the nominal grid, set the stationarity condition of the (half-quadratic
/// weighted) loss to zero for the active components, damped and clipped.
inline RVector taylor_refine(const RVector& mismatch, const ActiveSet& knee_set,
                             const CMatrix& knee_signal, const CMatrix& y,
                             const Grid& grid, const ArrayConfig& array, double sigma,
                             double damping = 0.5, int max_iters = 5) {
    const double half = grid.interval / 2.0;
    const std::vector<int> idx = active_indices(knee_set);
    if (idx.empty())
        return mismatch;
    const int k = static_cast<int>(idx.size());
    const int t = static_cast<int>(y.cols());
    const int m = array.num_sensors;

    CMatrix a0(m, k), a1(m, k);
    for (int c = 0; c < k; ++c) {
        a0.col(c) = detail::steering_unchecked(grid.points[static_cast<std::size_t>(idx[c])], array);
        a1.col(c) = detail::steering_derivative(grid.points[static_cast<std::size_t>(idx[c])], array);
    }
    CMatrix s_active(k, t);
    for (int c = 0; c < k; ++c)
        s_active.row(c) = knee_signal.row(idx[c]);

    RVector zeta(k);
    for (int c = 0; c < k; ++c)
        zeta(c) = mismatch(idx[c]);

    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int it = 0; it < max_iters; ++it) {
        // residual of the linearized model at the current zeta
        CMatrix model = a0 * s_active;
        for (int c = 0; c < k; ++c)
            model += zeta(c) * (a1.col(c) * s_active.row(c));
        CMatrix residual0 = y - a0 * s_active; // base residual at zeta = 0

        RMatrix w(m, t);
        for (int j = 0; j < t; ++j)
            for (int i = 0; i < m; ++i)
                w(i, j) = std::exp(-std::norm(y(i, j) - model(i, j)) * inv);

        // weighted normal equations in the real unknown zeta:
        //   sum_ij w_ij |residual0_ij - sum_c zeta_c (a1_c s_c)_ij|^2
        RMatrix gram = RMatrix::Zero(k, k);
        RVector rhs = RVector::Zero(k);
        std::vector<CMatrix> basis;
        basis.reserve(static_cast<std::size_t>(k));
        for (int c = 0; c < k; ++c)
            basis.push_back(a1.col(c) * s_active.row(c));
        for (int c = 0; c < k; ++c) {
            for (int d = c; d < k; ++d) {
                double g = 0.0;
                for (int j = 0; j < t; ++j)
                    for (int i = 0; i < m; ++i)
                        g += w(i, j) * std::real(std::conj(basis[static_cast<std::size_t>(c)](i, j)) *
                                                 basis[static_cast<std::size_t>(d)](i, j));
                gram(c, d) = g;
                gram(d, c) = g;
            }
            double r = 0.0;
            for (int j = 0; j < t; ++j)
                for (int i = 0; i < m; ++i)
                    r += w(i, j) * std::real(std::conj(basis[static_cast<std::size_t>(c)](i, j)) *
                                             residual0(i, j));
            rhs(c) = r;
        }
        Eigen::LDLT<RMatrix> ldlt(gram);
        if (ldlt.info() != Eigen::Success)
            return mismatch;
        RVector target = ldlt.solve(rhs);
        if (!target.allFinite())
            return mismatch;
        zeta += damping * (target - zeta);
        for (int c = 0; c < k; ++c)
            zeta(c) = std::clamp(zeta(c), std::nextafter(-half, half), half);
    }

    RVector out = mismatch;
    for (int c = 0; c < k; ++c)
        out(idx[c]) = zeta(c);
    return out;
}

namespace detail {

struct EvaluatedSets {
    std::vector<Individual> individuals;
};

inline std::vector<Individual> decode_and_evaluate(const CMatrix& y, const CMatrix& a,
                                                   const std::vector<ActiveSet>& sets,
                                                   const CMatrix& knee_signal, double sigma) {
    RMatrix w = weight_matrix(y, a, knee_signal, sigma);
    std::vector<Individual> out;
    out.reserve(sets.size());
    const CMatrix zero_signal = CMatrix::Zero(a.cols(), y.cols());
    for (const ActiveSet& e : sets) {
        Individual ind;
        ind.active_set = e;
        if (popcount(e) >= static_cast<int>(a.rows())) {
            // k > M is transiently overcomplete after mutation; k = M is a
            // degenerate exact interpolator (zero residual for *any* support,
            // so f2 = 0 carries no model-selection information, yet such
            // corner points are permanently nondominated and crowd out the
            // useful cardinalities). Both get worst-case objectives so
            // selection prunes them.
            ind.signal = zero_signal;
            ind.f1 = popcount(e);
            ind.f2 = clf(y, CMatrix::Zero(y.rows(), y.cols()), sigma);
        } else {
            ind.signal = decode_one(y, a, e, w);
            auto [f1, f2] = evaluate(ind.signal, y, a, sigma);
            ind.f1 = f1;
            ind.f2 = f2;
        }
        out.push_back(std::move(ind));
    }
    return out;
}

inline std::vector<Individual> first_front(const std::vector<Individual>& pop) {
    std::vector<Individual> front;
    for (const Individual& ind : pop)
        if (ind.rank == 0)
            front.push_back(ind);
    if (front.empty())
        front = pop;
    return front;
}

inline void assign_ranks(std::vector<Individual>& pop) {
    std::vector<std::vector<int>> fronts;
    nondominated_sort(pop, fronts);
    for (const auto& f : fronts)
        crowding_distance(pop, f);
}

} // namespace detail

/// Bilevel estimation loop: on-grid evolutionary search with kernel annealing,
/// knee extraction, off-grid refinement of the shared mismatch, and re-decoding
/// of the population against the refined grid.
inline EstimationResult run_solver(const CMatrix& y, const Grid& grid,
                                   const ArrayConfig& array, const SolverConfig& cfg,
                                   std::uint64_t seed) {
    const auto t_start = std::chrono::steady_clock::now();
    const int n = grid.size();
    const int m = array.num_sensors;
    const double pm = cfg.mutation_prob >= 0.0 ? cfg.mutation_prob : 1.0 / n;
    const double step = cfg.step_deg > 0.0 ? cfg.step_deg : grid.interval / 100.0;

    auto [sigma_max, sigma_min] = sigma_bounds_from_data(y);
    KernelSchedule sched(sigma_max, sigma_min, 2e-4);

    Rng rng(seed);
    RVector zeta = RVector::Zero(n);
    CMatrix a = perturbed_manifold(grid, zeta, array);

    double sigma = kernel_size(0, sched);
    std::vector<ActiveSet> init_sets = initial_active_sets(a, y, cfg.population_size, rng);
    CMatrix knee_signal = CMatrix::Zero(n, y.cols());
    std::vector<Individual> pop =
        detail::decode_and_evaluate(y, a, init_sets, knee_signal, sigma);
    detail::assign_ranks(pop);

    std::optional<Individual> knee;
    try {
        knee = knee_identification(detail::first_front(pop), m);
        knee_signal = knee->signal;
    } catch (const KneeUnavailable&) {
        // retry after the first on-grid pass
    }

    std::vector<GenerationTrace> trace;
    int stable_count = 0;
    bool converged = false;
    int generation = 0;

    for (generation = 0; generation < cfg.outer_max; ++generation) {
        sigma = kernel_size(generation, sched);
        const CMatrix knee_prev_signal = knee_signal;

        // on-grid level: NSGA-II-style inner loop with knee-patience stop
        int knee_stable = 0;
        for (int lt = 0; lt < cfg.inner_max; ++lt) {
            std::vector<ActiveSet> offspring_sets =
                crossover_mutation(pop, cfg.crossover_prob, pm, rng);
            std::vector<Individual> offspring =
                detail::decode_and_evaluate(y, a, offspring_sets, knee_signal, sigma);
            std::vector<Individual> combined = pop;
            combined.insert(combined.end(), offspring.begin(), offspring.end());
            pop = environmental_selection(std::move(combined), cfg.population_size);
            detail::assign_ranks(pop);
            try {
                const std::vector<Individual> front = detail::first_front(pop);
                const Individual& k = knee_identification(front, m);
                if (knee && knee->active_set == k.active_set)
                    ++knee_stable;
                else
                    knee_stable = 0;
                knee = k;
                knee_signal = k.signal;
            } catch (const KneeUnavailable&) {
                knee_stable = 0; // keep previous knee
            }
            if (knee_stable >= cfg.inner_knee_patience)
                break;
        }

        // off-grid level: refine the shared mismatch through the knee solution
        // (held off for the first few generations so supports compete on the
        // unperturbed grid first)
        if (knee && generation >= cfg.refine_warmup) {
            switch (cfg.mode) {
            case RefinementMode::ForwardSearch:
                zeta = forward_search(zeta, knee->active_set, knee_signal, y, grid, array,
                                      sigma, step, cfg.forward_max, rng);
                break;
            case RefinementMode::Taylor:
                zeta = taylor_refine(zeta, knee->active_set, knee_signal, y, grid, array,
                                     sigma);
                break;
            case RefinementMode::OnGridOnly:
                break;
            }
            if (cfg.mode != RefinementMode::OnGridOnly)
                a = perturbed_manifold(grid, zeta, array);
        }

        // re-decode the population against the refined grid, reusing the
        // pre-refinement knee signal for the weights
        std::vector<ActiveSet> sets;
        sets.reserve(pop.size());
        for (const Individual& ind : pop)
            sets.push_back(ind.active_set);
        pop = detail::decode_and_evaluate(y, a, sets, knee_signal, sigma);
        detail::assign_ranks(pop);
        try {
            const std::vector<Individual> front = detail::first_front(pop);
            knee = knee_identification(front, m);
            knee_signal = knee->signal;
        } catch (const KneeUnavailable&) {
        }

        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        trace.push_back({generation, knee ? knee->f1 : 0, knee ? knee->f2 : 1.0, sigma,
                         elapsed});

        const double change =
            (knee_signal - knee_prev_signal).squaredNorm() / static_cast<double>(n * y.cols());
        if (change < cfg.convergence_tol)
            ++stable_count;
        else
            stable_count = 0;
        if (static_cast<int>(trace.size()) >= cfg.convergence_window &&
            static_cast<int>(trace.size()) >= cfg.min_generations &&
            stable_count >= cfg.convergence_window) {
            converged = true;
            ++generation;
            break;
        }
    }

    if (!knee)
        throw EstimationFailed(std::move(trace));

    EstimationResult result;
    result.final_mismatch = zeta;
    result.trace = std::move(trace);
    result.converged = converged;
    result.generations = generation;
    for (Eigen::Index i = 0; i < knee_signal.rows(); ++i)
        if (knee->active_set[static_cast<std::size_t>(i)] &&
            knee_signal.row(i).norm() > 1e-12)
            result.estimated_doas.push_back(grid.points[static_cast<std::size_t>(i)] + zeta(i));
    result.estimated_source_number = static_cast<int>(result.estimated_doas.size());
    return result;
}

} // namespace mobea

#endif
