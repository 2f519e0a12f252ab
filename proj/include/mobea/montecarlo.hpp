#ifndef MOBEA_MONTECARLO_HPP
#define MOBEA_MONTECARLO_HPP

#include <atomic>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mobea/config.hpp"
#include "mobea/metrics.hpp"
#include "mobea/solver.hpp"

namespace mobea {

struct MonteCarloReport {
    std::string sweep_param = "none";
    double sweep_value = 0.0;
    std::vector<TrialRecord> trials;
    std::optional<double> rmse;
    int admitted = 0;
    double avg_k = 0.0;
    double mean_runtime_seconds = 0.0;
};

inline TrialRecord run_trial(const ExperimentConfig& cfg, std::uint64_t trial_seed,
                             EstimationResult* result_out = nullptr) {
    TrialRecord rec;
    rec.seed = trial_seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const Scenario sc = cfg.scenario();
        auto [clean, waveforms] = synthesize(sc, derive_seed(trial_seed, 0));
        (void)waveforms;
        CMatrix y = cfg.apply_noise(clean, derive_seed(trial_seed, 1));
        EstimationResult res =
            run_solver(y, sc.grid, sc.array, cfg.solver, derive_seed(trial_seed, 2));
        rec.estimated_doas = res.estimated_doas;
        rec.estimated_source_number = res.estimated_source_number;
        rec.converged = res.converged;
        rec.generations = res.generations;
        if (result_out)
            *result_out = std::move(res);
    } catch (const EstimationFailed&) {
        rec.failed = true;
    }
    rec.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

/// Runs `num_trials` independent trials on a bounded worker pool. Each trial
/// owns a seed derived from (base_seed, index); records are aggregated by
/// index, so the report does not depend on the worker count.
inline MonteCarloReport run_monte_carlo(const ExperimentConfig& cfg, int num_trials,
                                        std::uint64_t base_seed, int workers) {
    if (num_trials < 1)
        throw std::invalid_argument("run_monte_carlo: need at least one trial");
    if (workers < 1)
        workers = 1;
    MonteCarloReport report;
    report.trials.resize(static_cast<std::size_t>(num_trials));

    std::atomic<int> next{0};
    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= num_trials)
                return;
            report.trials[static_cast<std::size_t>(i)] =
                run_trial(cfg, derive_seed(base_seed, static_cast<std::uint64_t>(i)));
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (auto& th : pool)
            th.join();
    }

    auto [rmse, admitted] = compute_rmse(report.trials, cfg.true_doas);
    report.rmse = rmse;
    report.admitted = admitted;
    report.avg_k = avg_source_number(report.trials);
    double acc = 0.0;
    for (const TrialRecord& t : report.trials)
        acc += t.runtime_seconds;
    report.mean_runtime_seconds = acc / num_trials;
    return report;
}

namespace detail {

inline std::string format_double(double v, int decimals = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

} // namespace detail

inline std::string csv_header() {
    return "sweep_param,value,rmse,admitted,avg_k,mean_runtime_s\n";
}

/// One CSV row per report. Timing is omitted (written as 0) unless requested,
/// keeping the default output byte-reproducible across runs and worker counts.
inline std::string csv_row(const MonteCarloReport& r, bool include_timing = false) {
    std::string row = r.sweep_param;
    row += ',';
    row += detail::format_double(r.sweep_value);
    row += ',';
    row += r.rmse ? detail::format_double(*r.rmse) : "nan";
    row += ',';
    row += std::to_string(r.admitted);
    row += ',';
    row += detail::format_double(r.avg_k);
    row += ',';
    row += detail::format_double(include_timing ? r.mean_runtime_seconds : 0.0, 3);
    row += '\n';
    return row;
}

} // namespace mobea

#endif
