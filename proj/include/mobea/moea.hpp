#ifndef MOBEA_MOEA_HPP
#define MOBEA_MOEA_HPP

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mobea/decode.hpp"

namespace mobea {

struct Individual {
    ActiveSet active_set;
    CMatrix signal;  // decoded N x T estimate
    int f1 = 0;      // number of nonzero rows of signal
    double f2 = 1.0; // correntropy loss
    int rank = 0;
    double crowding = 0.0;
};

struct Population {
    std::vector<Individual> individuals;
    RVector mismatch; // shared across the population
};

struct KneeUnavailable : std::runtime_error {
    KneeUnavailable() : std::runtime_error("knee identification: no candidate with f1 < M") {}
};

inline int count_nonzero_rows(const CMatrix& s, double tol = 1e-12) {
    int c = 0;
    for (Eigen::Index i = 0; i < s.rows(); ++i)
        if (s.row(i).norm() > tol)
            ++c;
    return c;
}

inline std::pair<int, double> evaluate(const CMatrix& s, const CMatrix& y, const CMatrix& a,
                                       double sigma) {
    return {count_nonzero_rows(s), clf(y, a * s, sigma)};
}

/// Correlation-guided initialization: active sets drawn from the 2M grid
/// points whose steering vectors correlate most with the snapshots.
inline std::vector<ActiveSet> initial_active_sets(const CMatrix& a, const CMatrix& y,
                                                  int pop_size, Rng& rng) {
    const int n = static_cast<int>(a.cols());
    const int m = static_cast<int>(a.rows());
    if (n < 2 * m)
        throw std::invalid_argument("initialization: grid must have at least 2M points");
    RVector tau = RVector::Zero(n);
    for (int j = 0; j < n; ++j)
        for (Eigen::Index t = 0; t < y.cols(); ++t)
            tau(j) += std::abs(a.col(j).dot(y.col(t)));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return tau(i) > tau(j); });
    std::vector<int> candidates(order.begin(), order.begin() + 2 * m);

    std::uniform_int_distribution<int> card_dist(1, m - 1);
    std::vector<ActiveSet> sets;
    sets.reserve(static_cast<std::size_t>(pop_size));
    for (int p = 0; p < pop_size; ++p) {
        const int card = card_dist(rng);
        std::vector<int> pool = candidates;
        ActiveSet e(static_cast<std::size_t>(n), 0);
        for (int c = 0; c < card; ++c) {
            std::uniform_int_distribution<int> pick(0, static_cast<int>(pool.size()) - 1);
            const int at = pick(rng);
            e[static_cast<std::size_t>(pool[at])] = 1;
            pool.erase(pool.begin() + at);
        }
        sets.push_back(std::move(e));
    }
    return sets;
}

namespace detail {

// a dominates b on minimized (f1, f2)
inline bool dominates(const Individual& a, const Individual& b) {
    return (a.f1 <= b.f1 && a.f2 <= b.f2) && (a.f1 < b.f1 || a.f2 < b.f2);
}

inline void nondominated_sort(std::vector<Individual>& pop,
                              std::vector<std::vector<int>>& fronts) {
    const int n = static_cast<int>(pop.size());
    std::vector<std::vector<int>> dominated(static_cast<std::size_t>(n));
    std::vector<int> dom_count(static_cast<std::size_t>(n), 0);
    fronts.clear();
    fronts.emplace_back();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j)
                continue;
            if (dominates(pop[i], pop[j]))
                dominated[i].push_back(j);
            else if (dominates(pop[j], pop[i]))
                ++dom_count[i];
        }
    for (int i = 0; i < n; ++i)
        if (dom_count[i] == 0) {
            pop[i].rank = 0;
            fronts[0].push_back(i);
        }
    std::size_t f = 0;
    while (!fronts[f].empty()) {
        std::vector<int> next;
        for (int i : fronts[f])
            for (int j : dominated[i])
                if (--dom_count[j] == 0) {
                    pop[static_cast<std::size_t>(j)].rank = static_cast<int>(f) + 1;
                    next.push_back(j);
                }
        fronts.push_back(std::move(next));
        ++f;
    }
    if (fronts.back().empty())
        fronts.pop_back();
}

inline void crowding_distance(std::vector<Individual>& pop, const std::vector<int>& front) {
    const double inf = std::numeric_limits<double>::infinity();
    for (int i : front)
        pop[static_cast<std::size_t>(i)].crowding = 0.0;
    if (front.size() <= 2) {
        for (int i : front)
            pop[static_cast<std::size_t>(i)].crowding = inf;
        return;
    }
    auto accumulate_obj = [&](auto getter) {
        std::vector<int> idx = front;
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return getter(pop[static_cast<std::size_t>(a)]) <
                   getter(pop[static_cast<std::size_t>(b)]);
        });
        const double lo = getter(pop[static_cast<std::size_t>(idx.front())]);
        const double hi = getter(pop[static_cast<std::size_t>(idx.back())]);
        pop[static_cast<std::size_t>(idx.front())].crowding = inf;
        pop[static_cast<std::size_t>(idx.back())].crowding = inf;
        if (hi - lo <= 0.0)
            return;
        for (std::size_t p = 1; p + 1 < idx.size(); ++p) {
            double& c = pop[static_cast<std::size_t>(idx[p])].crowding;
            if (std::isinf(c))
                continue;
            c += (getter(pop[static_cast<std::size_t>(idx[p + 1])]) -
                  getter(pop[static_cast<std::size_t>(idx[p - 1])])) /
                 (hi - lo);
        }
    };
    accumulate_obj([](const Individual& ind) { return static_cast<double>(ind.f1); });
    accumulate_obj([](const Individual& ind) { return ind.f2; });
}

} // namespace detail

/// NSGA-II environmental selection: fill by whole fronts, split the last one by
/// crowding distance, deterministic tie-break (lower f1, lower f2, input order).
inline std::vector<Individual> environmental_selection(std::vector<Individual> combined,
                                                       int target_size) {
    if (static_cast<int>(combined.size()) < target_size)
        throw std::invalid_argument("environmental_selection: fewer individuals than target");
    std::vector<std::vector<int>> fronts;
    detail::nondominated_sort(combined, fronts);
    for (const auto& f : fronts)
        detail::crowding_distance(combined, f);

    std::vector<Individual> out;
    out.reserve(static_cast<std::size_t>(target_size));
    for (const auto& front : fronts) {
        if (static_cast<int>(out.size()) + static_cast<int>(front.size()) <= target_size) {
            for (int i : front)
                out.push_back(combined[static_cast<std::size_t>(i)]);
            if (static_cast<int>(out.size()) == target_size)
                break;
        } else {
            std::vector<int> idx = front;
            std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
                const Individual& ia = combined[static_cast<std::size_t>(a)];
                const Individual& ib = combined[static_cast<std::size_t>(b)];
                if (ia.crowding != ib.crowding)
                    return ia.crowding > ib.crowding;
                if (ia.f1 != ib.f1)
                    return ia.f1 < ib.f1;
                if (ia.f2 != ib.f2)
                    return ia.f2 < ib.f2;
                return a < b;
            });
            for (int p = 0; static_cast<int>(out.size()) < target_size; ++p)
                out.push_back(combined[static_cast<std::size_t>(idx[static_cast<std::size_t>(p)])]);
            break;
        }
    }
    return out;
}

/// Binary-tournament mating selection followed by one-point crossover and
/// bitwise mutation. Output size equals input size.
inline std::vector<ActiveSet> crossover_mutation(const std::vector<Individual>& parents,
                                                 double pc, double pm, Rng& rng) {
    const int np = static_cast<int>(parents.size());
    if (np < 2)
        throw std::invalid_argument("crossover_mutation: need at least 2 parents");
    const int n = static_cast<int>(parents.front().active_set.size());
    std::uniform_int_distribution<int> pick(0, np - 1);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    auto tournament = [&]() -> const ActiveSet& {
        const int a = pick(rng);
        const int b = pick(rng);
        const Individual& ia = parents[static_cast<std::size_t>(a)];
        const Individual& ib = parents[static_cast<std::size_t>(b)];
        if (ia.rank != ib.rank)
            return (ia.rank < ib.rank ? ia : ib).active_set;
        if (ia.crowding != ib.crowding)
            return (ia.crowding > ib.crowding ? ia : ib).active_set;
        return ia.active_set;
    };

    std::vector<ActiveSet> offspring;
    offspring.reserve(static_cast<std::size_t>(np));
    while (static_cast<int>(offspring.size()) < np) {
        ActiveSet c1 = tournament();
        ActiveSet c2 = tournament();
        if (uni(rng) < pc && n >= 2) {
            std::uniform_int_distribution<int> cut_dist(1, n - 1);
            const int cut = cut_dist(rng);
            for (int i = cut; i < n; ++i)
                std::swap(c1[static_cast<std::size_t>(i)], c2[static_cast<std::size_t>(i)]);
        }
        for (ActiveSet* c : {&c1, &c2})
            for (int i = 0; i < n; ++i)
                if (uni(rng) < pm)
                    (*c)[static_cast<std::size_t>(i)] ^= 1;
        offspring.push_back(std::move(c1));
        if (static_cast<int>(offspring.size()) < np)
            offspring.push_back(std::move(c2));
    }
    return offspring;
}

/// Knee selection on the first nondominated front, restricted to source
/// numbers in [1, M-1]. The deduplicated front is normalized to [0,1] in both
/// objectives and extended flat to f1 = M-1 (support supersets reach the same
/// loss), and the point farthest below the chord joining the extremes wins:
/// the spot where the front bends from steep descent to a flat tail.
inline const Individual& knee_identification(const std::vector<Individual>& front,
                                             int num_sensors) {
    std::vector<const Individual*> cand;
    for (const Individual& ind : front)
        if (ind.f1 >= 1 && ind.f1 < num_sensors)
            cand.push_back(&ind);
    if (cand.empty())
        throw KneeUnavailable();

    // deduplicate by f1, keeping the lowest f2
    std::stable_sort(cand.begin(), cand.end(), [](const Individual* a, const Individual* b) {
        if (a->f1 != b->f1)
            return a->f1 < b->f1;
        return a->f2 < b->f2;
    });
    std::vector<const Individual*> pts;
    for (const Individual* p : cand)
        if (pts.empty() || pts.back()->f1 != p->f1)
            pts.push_back(p);

    if (pts.size() <= 2) {
        const Individual* best = pts.front();
        for (const Individual* p : pts)
            if (p->f2 < best->f2 || (p->f2 == best->f2 && p->f1 < best->f1))
                best = p;
        return *best;
    }

    const double f1_lo = pts.front()->f1;
    const double f1_hi = std::max<double>(pts.back()->f1, num_sensors - 1);
    double f2_lo = pts.front()->f2, f2_hi = pts.front()->f2;
    for (const Individual* p : pts) {
        f2_lo = std::min(f2_lo, p->f2);
        f2_hi = std::max(f2_hi, p->f2);
    }
    const double f1_span = std::max(f1_hi - f1_lo, 1e-300);
    const double f2_span = std::max(f2_hi - f2_lo, 1e-300);
    auto nx = [&](double f1) { return (f1 - f1_lo) / f1_span; };
    auto ny = [&](double f2) { return (f2 - f2_lo) / f2_span; };

    // chord from the first point to the flat extension's endpoint (M-1, f2_last)
    const double x0 = nx(pts.front()->f1), y0 = ny(pts.front()->f2);
    const double x1 = nx(f1_hi), y1 = ny(pts.back()->f2);
    const double dx = x1 - x0, dy = y1 - y0;
    const double len = std::sqrt(dx * dx + dy * dy);

    const Individual* best = nullptr;
    double best_dist = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < pts.size(); ++i) {
        // signed perpendicular distance below the chord
        const double px = nx(pts[i]->f1), py = ny(pts[i]->f2);
        const double dist = (dy * (px - x0) - dx * (py - y0)) / len;
        if (dist > best_dist || (dist == best_dist && best && pts[i]->f1 < best->f1)) {
            best_dist = dist;
            best = pts[i];
        }
    }
    return *best;
}

} // namespace mobea

#endif
