#ifndef MOBEA_METRICS_HPP
#define MOBEA_METRICS_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mobea {

struct NotAdmissible : std::runtime_error {
    NotAdmissible() : std::runtime_error("assignment: fewer estimates than true sources") {}
};

/// Minimum-cost rectangular assignment (Hungarian algorithm with potentials).
/// Returns, for each true angle, the index of the matched estimate; extra
/// estimates stay unmatched.
inline std::vector<int> hungarian_assign(const std::vector<double>& estimates,
                                         const std::vector<double>& truth) {
    const int rows = static_cast<int>(truth.size());
    const int cols = static_cast<int>(estimates.size());
    if (cols < rows)
        throw NotAdmissible();
    const double inf = std::numeric_limits<double>::infinity();
    auto cost = [&](int i, int j) {
        const double d = estimates[static_cast<std::size_t>(j)] - truth[static_cast<std::size_t>(i)];
        return d * d;
    };
    // standard O(rows^2 * cols) shortest augmenting path formulation,
    // 1-based with a virtual row/column 0
    std::vector<double> u(static_cast<std::size_t>(rows) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(cols) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(cols) + 1, 0); // column -> row
    std::vector<int> way(static_cast<std::size_t>(cols) + 1, 0);
    for (int i = 1; i <= rows; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(cols) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(cols) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = match[static_cast<std::size_t>(j0)];
            double delta = inf;
            int j1 = -1;
            for (int j = 1; j <= cols; ++j) {
                if (used[static_cast<std::size_t>(j)])
                    continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= cols; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(static_cast<std::size_t>(rows), -1);
    for (int j = 1; j <= cols; ++j)
        if (match[static_cast<std::size_t>(j)] != 0)
            assignment[static_cast<std::size_t>(match[static_cast<std::size_t>(j)]) - 1] = j - 1;
    return assignment;
}

struct TrialRecord {
    std::uint64_t seed = 0;
    std::vector<double> estimated_doas;
    int estimated_source_number = 0;
    double runtime_seconds = 0.0;
    bool converged = false;
    bool failed = false;
    int generations = 0;
};

/// RMSE over admitted trials (estimated source number >= K), truth matched to
/// estimates per trial by minimum-cost assignment. Returns nullopt for the
/// RMSE when no trial is admitted.
inline std::pair<std::optional<double>, int>
compute_rmse(const std::vector<TrialRecord>& trials, const std::vector<double>& truth) {
    const int k = static_cast<int>(truth.size());
    double sum_sq = 0.0;
    int admitted = 0;
    for (const TrialRecord& trial : trials) {
        if (trial.failed || trial.estimated_source_number < k)
            continue;
        const std::vector<int> assignment = hungarian_assign(trial.estimated_doas, truth);
        for (int i = 0; i < k; ++i) {
            const double d =
                trial.estimated_doas[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])] -
                truth[static_cast<std::size_t>(i)];
            sum_sq += d * d;
        }
        ++admitted;
    }
    if (admitted == 0)
        return {std::nullopt, 0};
    return {std::sqrt(sum_sq / (static_cast<double>(k) * admitted)), admitted};
}

/// Mean estimated source number over all trials; failed trials count as 0.
inline double avg_source_number(const std::vector<TrialRecord>& trials) {
    if (trials.empty())
        throw std::invalid_argument("avg_source_number: no trials");
    double acc = 0.0;
    for (const TrialRecord& trial : trials)
        acc += trial.failed ? 0.0 : trial.estimated_source_number;
    return acc / static_cast<double>(trials.size());
}

} // namespace mobea

#endif
