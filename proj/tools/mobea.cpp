#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mobea/mobea.hpp"

namespace {

using nlohmann::json;

json trial_to_json(const mobea::TrialRecord& t) {
    return json{{"seed", t.seed},
                {"estimated_doas", t.estimated_doas},
                {"estimated_source_number", t.estimated_source_number},
                {"runtime_seconds", t.runtime_seconds},
                {"converged", t.converged},
                {"failed", t.failed},
                {"generations", t.generations}};
}

void write_trace(const std::filesystem::path& path,
                 const std::vector<mobea::GenerationTrace>& trace) {
    std::ofstream out(path);
    out << "generation,knee_f1,knee_f2,sigma,elapsed_s\n";
    for (const auto& g : trace)
        out << g.generation << ',' << g.knee_f1 << ',' << g.knee_f2 << ',' << g.sigma
            << ',' << g.elapsed_seconds << '\n';
}

std::pair<std::string, std::vector<double>> parse_sweep(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw mobea::ConfigError("sweep: expected <param>=<v1,v2,...>");
    const std::string param = spec.substr(0, eq);
    const std::vector<double> values = mobea::detail::parse_list(param, spec.substr(eq + 1));
    return {param, values};
}

struct SweepRow {
    std::string label;
    mobea::MonteCarloReport report;
};

std::vector<SweepRow> run_sweep(mobea::ExperimentConfig cfg, const std::string& sweep,
                                int trials, std::uint64_t seed, int workers,
                                const std::string& label_prefix,
                                const std::string& trace_dir) {
    std::vector<SweepRow> rows;
    std::string param = "none";
    std::vector<double> values = {0.0};
    if (!sweep.empty())
        std::tie(param, values) = parse_sweep(sweep);
    for (double v : values) {
        mobea::ExperimentConfig point = cfg;
        if (!sweep.empty()) {
            std::ostringstream vs;
            vs << v;
            point.set(param, vs.str());
        }
        SweepRow row;
        row.report = mobea::run_monte_carlo(point, trials, seed, workers);
        row.report.sweep_param = label_prefix.empty() ? param : label_prefix + ":" + param;
        row.report.sweep_value = v;
        row.label = row.report.sweep_param;
        if (!trace_dir.empty()) {
            mobea::EstimationResult res;
            mobea::run_trial(point, mobea::derive_seed(seed, 0), &res);
            std::ostringstream name;
            name << "trace_" << row.report.sweep_param << '_' << v << ".csv";
            std::string file = name.str();
            for (char& c : file)
                if (c == ':' || c == '/')
                    c = '-';
            write_trace(std::filesystem::path(trace_dir) / file, res.trace);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Off-grid DOA estimation benchmark harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 1;
    std::string out_path;
    std::string json_path;
    std::string trace_dir;
    std::string sweep;
    std::string modes = "forward,on-grid,taylor";
    int trials = 100;
    int workers = 1;
    bool timing = false;

    auto* estimate = app.add_subcommand("estimate", "single estimation run");
    estimate->add_option("--config", config_path, "scenario config file")->required();
    estimate->add_option("--seed", seed, "RNG seed");
    estimate->add_option("--out", out_path, "write result as JSON");
    estimate->add_option("--emit-trace", trace_dir, "write per-generation knee trace CSV");

    auto* montecarlo = app.add_subcommand("montecarlo", "Monte Carlo sweep driver");
    montecarlo->add_option("--config", config_path, "scenario config file")->required();
    montecarlo->add_option("--trials", trials, "trials per sweep point");
    montecarlo->add_option("--seed", seed, "base RNG seed");
    montecarlo->add_option("--sweep", sweep, "<param>=<v1,v2,...>");
    montecarlo->add_option("--workers", workers, "worker threads");
    montecarlo->add_option("--out", out_path, "output CSV path")->required();
    montecarlo->add_option("--json", json_path, "dump per-trial records as JSON");
    montecarlo->add_option("--emit-trace", trace_dir, "trace directory");
    montecarlo->add_flag("--timing", timing,
                         "include wall-clock timing in the CSV (not reproducible)");

    auto* ablate = app.add_subcommand("ablate", "sweep across refinement modes");
    ablate->add_option("--config", config_path, "scenario config file")->required();
    ablate->add_option("--modes", modes, "comma-separated refinement modes");
    ablate->add_option("--trials", trials, "trials per sweep point");
    ablate->add_option("--seed", seed, "base RNG seed");
    ablate->add_option("--sweep", sweep, "<param>=<v1,v2,...>");
    ablate->add_option("--workers", workers, "worker threads");
    ablate->add_option("--out", out_path, "output CSV path")->required();
    ablate->add_option("--json", json_path, "dump per-trial records as JSON");
    ablate->add_option("--emit-trace", trace_dir, "trace directory");
    ablate->add_flag("--timing", timing, "include wall-clock timing in the CSV");

    CLI11_PARSE(app, argc, argv);

    mobea::ExperimentConfig cfg;
    try {
        cfg = mobea::load_config(config_path);
        cfg.scenario(); // validate early
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (!trace_dir.empty())
            std::filesystem::create_directories(trace_dir);

        if (estimate->parsed()) {
            mobea::EstimationResult res;
            mobea::TrialRecord rec = mobea::run_trial(cfg, seed, &res);
            if (rec.failed) {
                std::cerr << "estimation failed: knee unavailable\n";
                return 2;
            }
            std::cout << "K_hat = " << rec.estimated_source_number << "\ntheta_hat =";
            for (double d : rec.estimated_doas)
                std::cout << ' ' << d;
            std::cout << '\n';
            if (!out_path.empty()) {
                json j = trial_to_json(rec);
                std::ofstream(out_path) << j.dump(2) << '\n';
            }
            if (!trace_dir.empty())
                write_trace(std::filesystem::path(trace_dir) / "trace.csv", res.trace);
            return 0;
        }

        std::vector<SweepRow> rows;
        if (montecarlo->parsed()) {
            rows = run_sweep(cfg, sweep, trials, seed, workers, "", trace_dir);
        } else { // ablate
            std::stringstream ms(modes);
            std::string mode;
            while (std::getline(ms, mode, ',')) {
                mobea::ExperimentConfig mode_cfg = cfg;
                mode_cfg.set("mode", mode);
                auto mode_rows =
                    run_sweep(mode_cfg, sweep, trials, seed, workers, mode, trace_dir);
                rows.insert(rows.end(), mode_rows.begin(), mode_rows.end());
            }
        }

        std::ofstream csv(out_path);
        if (!csv) {
            std::cerr << "cannot open output file: " << out_path << '\n';
            return 2;
        }
        csv << mobea::csv_header();
        for (const SweepRow& row : rows)
            csv << mobea::csv_row(row.report, timing);

        if (!json_path.empty()) {
            json j = json::array();
            for (const SweepRow& row : rows) {
                json trials_json = json::array();
                for (const auto& t : row.report.trials)
                    trials_json.push_back(trial_to_json(t));
                j.push_back(json{{"sweep_param", row.report.sweep_param},
                                 {"value", row.report.sweep_value},
                                 {"rmse", row.report.rmse ? json(*row.report.rmse) : json()},
                                 {"admitted", row.report.admitted},
                                 {"avg_k", row.report.avg_k},
                                 {"trials", std::move(trials_json)}});
            }
            std::ofstream(json_path) << j.dump(2) << '\n';
        }
        return 0;
    } catch (const mobea::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << '\n';
        return 2;
    }
}
