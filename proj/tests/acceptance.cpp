// End-to-end acceptance suite. Each criterion prints a single PASS/FAIL line;
// the process exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mobea/mobea.hpp"

namespace {

using namespace mobea;

int failures = 0;

void report(int idx, const std::string& name, bool ok, const std::string& detail) {
    std::cout << "criterion " << idx << " (" << name << "): " << (ok ? "PASS" : "FAIL")
              << " -- " << detail << "\n"
              << std::flush;
    if (!ok)
        ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. Noise-free exact recovery: three on-grid sources, 20 seeds.
void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg;
    cfg.true_doas = {-2.0, 6.0, 20.0};
    MonteCarloReport rep = run_monte_carlo(cfg, 20, 42, 1);
    int correct_k = 0;
    for (const TrialRecord& t : rep.trials)
        if (!t.failed && t.estimated_source_number == 3)
            ++correct_k;
    const double rmse = rep.rmse ? *rep.rmse : 1e9;
    const double elapsed = seconds_since(t0);
    std::ostringstream d;
    d << "k_hat=3 in " << correct_k << "/20, rmse=" << rmse << " deg, " << elapsed << " s";
    report(1, "noise-free exact recovery",
           correct_k >= 19 && rmse < 0.05 && elapsed < 120.0, d.str());
}

// ---------------------------------------------------------------------------
// 2. Off-grid refinement trend: forward search beats on-grid-only and Taylor
//    refinement at grid intervals {2, 4, 6} degrees, with a >= 10% margin at 6.
void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::ostringstream d;
    for (double g : {2.0, 4.0, 6.0}) {
        double rmse[3] = {0, 0, 0};
        int i = 0;
        for (RefinementMode mode : {RefinementMode::ForwardSearch, RefinementMode::OnGridOnly,
                                    RefinementMode::Taylor}) {
            ExperimentConfig cfg;
            cfg.true_doas = {1.6, 13.2};
            cfg.grid_interval = g;
            cfg.noise = NoiseKind::Gmm;
            cfg.snr_db = 10.0;
            cfg.gmm_c2 = 0.1;
            cfg.solver.mode = mode;
            MonteCarloReport rep = run_monte_carlo(cfg, 100, 2024, 1);
            rmse[i++] = rep.rmse ? *rep.rmse : 1e9;
        }
        const double margin = g == 6.0 ? 0.9 : 1.0;
        if (!(rmse[0] <= margin * rmse[1] && rmse[0] <= margin * rmse[2]))
            ok = false;
        d << "g=" << g << ": fwd=" << rmse[0] << " ongrid=" << rmse[1]
          << " taylor=" << rmse[2] << "; ";
    }
    const double elapsed = seconds_since(t0);
    d << elapsed << " s";
    report(2, "off-grid refinement trend", ok && elapsed < 1800.0, d.str());
}

// ---------------------------------------------------------------------------
// 3. Source-number accuracy at high SNR.
void criterion_3() {
    ExperimentConfig cfg;
    cfg.true_doas = {-2.7, 5.8, 20.2};
    cfg.noise = NoiseKind::Gmm;
    cfg.snr_db = 10.0;
    cfg.gmm_c2 = 0.1;
    MonteCarloReport rep = run_monte_carlo(cfg, 100, 2024, 1);
    std::ostringstream d;
    d << "avg_k=" << rep.avg_k << " over 100 trials";
    report(3, "source-number accuracy", rep.avg_k >= 2.7 && rep.avg_k <= 3.3, d.str());
}

// ---------------------------------------------------------------------------
// 4. Correntropy loss property suite.
void criterion_4() {
    std::mt19937_64 rng(4001);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> psize(1, 16);
    std::uniform_real_distribution<double> sigma_dist(0.1, 3.0);
    int bad = 0;
    std::string first_fail;
    for (int it = 0; it < 100000; ++it) {
        const int p = psize(rng);
        const double sigma = sigma_dist(rng);
        CMatrix x(1, p), z(1, p);
        for (int j = 0; j < p; ++j) {
            x(0, j) = Complex(gauss(rng), gauss(rng));
            z(0, j) = x(0, j) + Complex(gauss(rng), gauss(rng)); // x != z a.s.
        }
        const double v = clf(x, z, sigma);
        bool ok = v >= 0.0 && v < 1.0 && v > 0.0;          // bounds, nonzero for x != z
        ok = ok && clf(z, x, sigma) == v;                  // symmetry
        ok = ok && clf(x, x, sigma) == 0.0;                // zero iff equal
        if (p == 1) {                                      // analytic single-element value
            const double analytic =
                1.0 - std::exp(-std::norm(x(0, 0) - z(0, 0)) / (2.0 * sigma * sigma));
            ok = ok && std::abs(v - analytic) <= 1e-12;
        }
        CMatrix z2 = z;                                    // bounded single-outlier influence
        z2(0, it % p) += Complex(1e3, -1e3);
        ok = ok && std::abs(clf(x, z2, sigma) - v) <= 1.0 / p + 1e-12;
        if (!ok) {
            ++bad;
            if (first_fail.empty())
                first_fail = " first at instance " + std::to_string(it);
        }
    }
    report(4, "correntropy loss properties", bad == 0,
           std::to_string(bad) + "/100000 violations" + first_fail);
}

// ---------------------------------------------------------------------------
// 5. Weighted least squares against a direct normal-equation oracle.
void criterion_5() {
    std::mt19937_64 rng(5001);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> kdist(1, 7);
    std::uniform_real_distribution<double> wdist(0.1, 2.0);
    const int m = 8;
    int bad = 0;
    for (int it = 0; it < 1000; ++it) {
        const int k = kdist(rng);
        CMatrix a(m, k);
        double cond;
        do {
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < k; ++j)
                    a(i, j) = Complex(gauss(rng), gauss(rng));
            Eigen::JacobiSVD<CMatrix> svd(a);
            cond = svd.singularValues()(0) / svd.singularValues()(k - 1);
        } while (cond >= 1e6);
        CVector y(m);
        for (int i = 0; i < m; ++i)
            y(i) = Complex(gauss(rng), gauss(rng));

        // unit weights: must match the unweighted normal equations
        const CVector s = wls_solve(a, RVector::Ones(m), y);
        const CVector oracle = (a.adjoint() * a).ldlt().solve(a.adjoint() * y);
        bool ok = (s - oracle).norm() / std::max(oracle.norm(), 1e-300) < 1e-9;

        // random positive weights: solution is a stationary point of the
        // weighted quadratic, so small perturbations never reduce the cost
        RVector w(m);
        for (int i = 0; i < m; ++i)
            w(i) = wdist(rng);
        const CVector sw = wls_solve(a, w, y);
        auto cost = [&](const CVector& v) {
            return ((y - a * v).array().abs2() * w.array()).sum();
        };
        const double c0 = cost(sw);
        for (int probe = 0; probe < 4; ++probe) {
            CVector dir(k);
            for (int j = 0; j < k; ++j)
                dir(j) = Complex(gauss(rng), gauss(rng));
            if (cost(sw + 1e-3 * dir) < c0 - 1e-10)
                ok = false;
        }
        if (!ok)
            ++bad;
    }
    report(5, "weighted least squares oracle", bad == 0,
           std::to_string(bad) + "/1000 mismatches");
}

// ---------------------------------------------------------------------------
// 6. Nondominated sorting vs. brute-force peeling; assignment vs. enumeration.
void criterion_6() {
    std::mt19937_64 rng(6001);
    std::uniform_int_distribution<int> f1dist(0, 8);
    std::uniform_real_distribution<double> f2dist(0.0, 1.0);
    int bad_sort = 0;
    for (int it = 0; it < 1000; ++it) {
        std::uniform_int_distribution<int> ndist(1, 100);
        const int n = ndist(rng);
        std::vector<Individual> pop(static_cast<std::size_t>(n));
        for (Individual& ind : pop) {
            ind.f1 = f1dist(rng);
            // quantized half the time so that exact duplicates occur
            const double f2 = f2dist(rng);
            ind.f2 = it % 2 == 0 ? std::round(f2 * 10.0) / 10.0 : f2;
        }
        std::vector<std::vector<int>> fronts;
        detail::nondominated_sort(pop, fronts);
        // brute force: repeatedly peel the currently nondominated individuals
        std::vector<int> expected(pop.size(), -1);
        int assigned = 0;
        for (int r = 0; assigned < n; ++r) {
            std::vector<int> cur;
            for (int i = 0; i < n; ++i) {
                if (expected[static_cast<std::size_t>(i)] != -1)
                    continue;
                bool dominated = false;
                for (int j = 0; j < n && !dominated; ++j)
                    if (expected[static_cast<std::size_t>(j)] == -1 && j != i &&
                        detail::dominates(pop[static_cast<std::size_t>(j)],
                                          pop[static_cast<std::size_t>(i)]))
                        dominated = true;
                if (!dominated)
                    cur.push_back(i);
            }
            for (int i : cur)
                expected[static_cast<std::size_t>(i)] = r;
            assigned += static_cast<int>(cur.size());
        }
        for (int i = 0; i < n; ++i)
            if (pop[static_cast<std::size_t>(i)].rank != expected[static_cast<std::size_t>(i)])
                ++bad_sort;
    }

    std::uniform_real_distribution<double> angle(-90.0, 90.0);
    int bad_assign = 0;
    for (int it = 0; it < 1000; ++it) {
        std::uniform_int_distribution<int> kdist(1, 6);
        const int k = kdist(rng);
        std::uniform_int_distribution<int> khat_dist(k, 8);
        const int khat = khat_dist(rng);
        std::vector<double> truth(static_cast<std::size_t>(k));
        std::vector<double> est(static_cast<std::size_t>(khat));
        for (double& t : truth)
            t = angle(rng);
        for (double& e : est)
            e = angle(rng);
        const std::vector<int> assign = hungarian_assign(est, truth);
        double got = 0.0;
        std::vector<char> used(est.size(), 0);
        bool valid = true;
        for (int i = 0; i < k; ++i) {
            const int j = assign[static_cast<std::size_t>(i)];
            if (j < 0 || j >= khat || used[static_cast<std::size_t>(j)])
                valid = false;
            else {
                used[static_cast<std::size_t>(j)] = 1;
                const double d = est[static_cast<std::size_t>(j)] - truth[static_cast<std::size_t>(i)];
                got += d * d;
            }
        }
        // exhaustive minimum over all injective truth -> estimate maps
        double best = std::numeric_limits<double>::infinity();
        std::vector<char> taken(est.size(), 0);
        auto recurse = [&](auto&& self, int i, double acc) -> void {
            if (acc >= best)
                return;
            if (i == k) {
                best = acc;
                return;
            }
            for (int j = 0; j < khat; ++j) {
                if (taken[static_cast<std::size_t>(j)])
                    continue;
                taken[static_cast<std::size_t>(j)] = 1;
                const double d = est[static_cast<std::size_t>(j)] - truth[static_cast<std::size_t>(i)];
                self(self, i + 1, acc + d * d);
                taken[static_cast<std::size_t>(j)] = 0;
            }
        };
        recurse(recurse, 0, 0.0);
        if (!valid || std::abs(got - best) > 1e-9 * std::max(1.0, best))
            ++bad_assign;
    }
    report(6, "sorting and assignment oracles", bad_sort == 0 && bad_assign == 0,
           std::to_string(bad_sort) + " rank mismatches, " + std::to_string(bad_assign) +
               " assignment mismatches");
}

// ---------------------------------------------------------------------------
// 7. Noise sampler statistics at 10^6 samples.
void criterion_7() {
    const int m = 1000, t = 1000;
    const double n_samples = static_cast<double>(m) * t;

    // SaS alpha=2, gamma=1 is Gaussian with per-component variance 2
    CMatrix g2 = sample_sas(SasNoiseModel(2.0, 1.0), m, t, 7001);
    double var = 0.0;
    for (int j = 0; j < t; ++j)
        for (int i = 0; i < m; ++i)
            var += g2(i, j).real() * g2(i, j).real();
    var /= n_samples;

    // SaS alpha=1, gamma=1 is Cauchy with interquartile range 2
    CMatrix c1 = sample_sas(SasNoiseModel(1.0, 1.0), m, t, 7002);
    std::vector<double> reals;
    reals.reserve(static_cast<std::size_t>(m) * t);
    for (int j = 0; j < t; ++j)
        for (int i = 0; i < m; ++i)
            reals.push_back(c1(i, j).real());
    std::sort(reals.begin(), reals.end());
    const std::size_t q1 = reals.size() / 4;
    const std::size_t q3 = 3 * reals.size() / 4;
    const double iqr = reals[q3] - reals[q1];

    // GMM second moment: (1 - c2) eta1^2 + c2 eta2^2
    const GmmNoiseModel gmm(0.1, 1.0, 100.0);
    CMatrix gn = sample_gmm(gmm, m, t, 7003);
    double m2 = 0.0;
    for (int j = 0; j < t; ++j)
        for (int i = 0; i < m; ++i)
            m2 += std::norm(gn(i, j));
    m2 /= n_samples;
    const double m2_expected = 0.9 * 1.0 + 0.1 * 100.0;

    const bool ok = std::abs(var - 2.0) < 0.02 * 2.0 && std::abs(iqr - 2.0) < 0.02 * 2.0 &&
                    std::abs(m2 - m2_expected) < 0.02 * m2_expected;
    std::ostringstream d;
    d << "alpha=2 var=" << var << " (want 2), alpha=1 iqr=" << iqr
      << " (want 2), gmm m2=" << m2 << " (want " << m2_expected << ")";
    report(7, "noise sampler statistics", ok, d.str());
}

// ---------------------------------------------------------------------------
// 8. Forward search: monotone descent, bounded iterations, box constraint.
void criterion_8() {
    ExperimentConfig scen;
    scen.true_doas = {0.0};
    scen.grid_interval = 4.0;
    Scenario sc = scen.scenario();
    const int n = sc.grid.size();
    const int t = 10;
    const double half = sc.grid.interval / 2.0;

    std::mt19937_64 gen(8001);
    Rng rng(8002);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> kdist(1, 3);
    std::uniform_int_distribution<int> ndist(0, n - 1);
    std::uniform_real_distribution<double> zdist(-half * 0.99, half);
    std::uniform_real_distribution<double> sdist(0.5, 2.0);
    int bad = 0;
    for (int it = 0; it < 1000; ++it) {
        ActiveSet e(static_cast<std::size_t>(n), 0);
        const int k = kdist(gen);
        for (int c = 0; c < k; ++c)
            e[static_cast<std::size_t>(ndist(gen))] = 1;
        CMatrix s = CMatrix::Zero(n, t);
        for (int i = 0; i < n; ++i)
            if (e[static_cast<std::size_t>(i)])
                for (int j = 0; j < t; ++j)
                    s(i, j) = Complex(gauss(gen), gauss(gen));
        CMatrix y(sc.array.num_sensors, t);
        for (int i = 0; i < sc.array.num_sensors; ++i)
            for (int j = 0; j < t; ++j)
                y(i, j) = Complex(gauss(gen), gauss(gen));
        RVector zeta = RVector::Zero(n);
        for (int i = 0; i < n; ++i)
            if (e[static_cast<std::size_t>(i)])
                zeta(i) = zdist(gen);
        const double sigma = sdist(gen);
        auto loss = [&](const RVector& z) {
            return clf(y, perturbed_manifold(sc.grid, z, sc.array) * s, sigma);
        };
        const double f_in = loss(zeta);
        const double step = sc.grid.interval / 100.0;

        RVector out = forward_search(zeta, e, s, y, sc.grid, sc.array, sigma, step, 200, rng);
        bool ok = loss(out) <= f_in + 1e-12;
        for (int i = 0; i < n; ++i) {
            if (!(out(i) > -half && out(i) <= half))
                ok = false;
            if (!e[static_cast<std::size_t>(i)] && out(i) != zeta(i))
                ok = false; // inactive components must not move
        }

        // ut_max = 0 allows probing but no committed steps
        RVector frozen = forward_search(zeta, e, s, y, sc.grid, sc.array, sigma, step, 0, rng);
        if ((frozen - zeta).norm() != 0.0)
            ok = false;

        // proposals leaving (-r/2, r/2] are rejected: with a step wider than
        // the box, no component can ever move
        RVector edge = RVector::Zero(n);
        for (int i = 0; i < n; ++i)
            if (e[static_cast<std::size_t>(i)])
                edge(i) = half;
        RVector pinned = forward_search(edge, e, s, y, sc.grid, sc.array, sigma,
                                        sc.grid.interval, 200, rng);
        if ((pinned - edge).norm() != 0.0)
            ok = false;

        if (!ok)
            ++bad;
    }
    report(8, "forward-search descent", bad == 0, std::to_string(bad) + "/1000 violations");
}

// ---------------------------------------------------------------------------
// 9. CLI determinism: identical CSV bytes for worker counts 1 and 4.
void criterion_9() {
    const char* cli = std::getenv("MOBEA_CLI");
    if (cli == nullptr) {
        report(9, "CLI determinism", false, "MOBEA_CLI not set");
        return;
    }
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "mobea_acceptance";
    fs::create_directories(dir);
    const fs::path cfg_path = dir / "scenario.cfg";
    {
        std::ofstream cfg(cfg_path);
        cfg << "sensors = 8\n"
               "grid_interval = 4\n"
               "true_doas = 1.6, 13.2\n"
               "snapshots = 20\n"
               "noise = gmm\n"
               "snr_db = 10\n"
               "c2 = 0.1\n";
    }
    auto run = [&](int workers, const fs::path& out) {
        std::ostringstream cmd;
        cmd << '"' << cli << '"' << " montecarlo --config " << cfg_path
            << " --trials 8 --seed 7 --sweep grid_interval=2,4 --workers " << workers
            << " --out " << out;
        return std::system(cmd.str().c_str());
    };
    const fs::path out1 = dir / "w1.csv";
    const fs::path out4 = dir / "w4.csv";
    const int rc1 = run(1, out1);
    const int rc4 = run(4, out4);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string a = slurp(out1);
    const std::string b = slurp(out4);
    const bool ok = rc1 == 0 && rc4 == 0 && !a.empty() && a == b;
    std::ostringstream d;
    d << "exit codes " << rc1 << "/" << rc4 << ", " << a.size() << " vs " << b.size()
      << " bytes, " << (a == b ? "identical" : "different");
    report(9, "CLI determinism", ok, d.str());
}

// ---------------------------------------------------------------------------
// 10. Kernel annealing schedule.
void criterion_10() {
    KernelSchedule sched; // library defaults
    bool ok = sched.sigma_min == 0.03 && sched.decay == 2e-4;
    ok = ok && std::abs(kernel_size(0, sched) - (sched.sigma_max + sched.sigma_min)) <= 1e-15;
    double prev = kernel_size(0, sched);
    for (int g = 1; g <= 5000; ++g) {
        const double cur = kernel_size(g, sched);
        if (!(cur < prev) || !(cur > sched.sigma_min))
            ok = false;
        const double analytic = sched.sigma_max * std::exp(-2e-4 * g) + 0.03;
        if (std::abs(cur - analytic) > 1e-15)
            ok = false;
        prev = cur;
    }
    // the data-driven bound fixes the same floor
    CMatrix y(4, 8);
    std::mt19937_64 rng(10001);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 4; ++i)
            y(i, j) = Complex(gauss(rng), gauss(rng));
    ok = ok && sigma_bounds_from_data(y).second == 0.03;
    report(10, "kernel annealing schedule", ok,
           "sigma(0)=sigma_max+sigma_min, strictly decreasing, floor 0.03, nu=2e-4");
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    std::cout << (failures == 0 ? "all criteria passed" : "FAILURES: " + std::to_string(failures))
              << "\n";
    return failures;
}
