#ifndef MOBEA_CONFIG_HPP
#define MOBEA_CONFIG_HPP

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mobea/array.hpp"
#include "mobea/noise.hpp"
#include "mobea/solver.hpp"

namespace mobea {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class NoiseKind { None, Gmm, Sas };

/// Everything a single experiment needs: scenario geometry, noise model
/// parameters, and solver settings. Parsed from a flat `key = value` file.
struct ExperimentConfig {
    int sensors = 8;
    double spacing_over_wavelength = 0.5;
    double grid_interval = 2.0;
    std::vector<double> true_doas = {0.0};
    int snapshots = 20;
    double source_power = 1.0;

    NoiseKind noise = NoiseKind::None;
    double snr_db = 10.0;   // GMM
    double gmm_c2 = 0.1;    // GMM
    double gsnr_db = 10.0;  // SaS
    double sas_alpha = 1.4; // SaS

    SolverConfig solver;

    Scenario scenario() const {
        Scenario sc;
        sc.array = ArrayConfig(sensors, spacing_over_wavelength);
        sc.grid = Grid::uniform(grid_interval);
        sc.true_doas = true_doas;
        sc.snapshots = snapshots;
        sc.source_power = source_power;
        sc.validate();
        return sc;
    }

    /// Adds the scenario's noise realization on top of the clean snapshots.
    CMatrix apply_noise(const CMatrix& clean, std::uint64_t seed) const {
        switch (noise) {
        case NoiseKind::None:
            return clean;
        case NoiseKind::Gmm: {
            GmmNoiseModel model = gmm_from_snr(snr_db, source_power, gmm_c2);
            return clean + sample_gmm(model, static_cast<int>(clean.rows()),
                                      static_cast<int>(clean.cols()), seed);
        }
        case NoiseKind::Sas: {
            SasNoiseModel model = sas_from_gsnr(gsnr_db, source_power, sas_alpha);
            return clean + sample_sas(model, static_cast<int>(clean.rows()),
                                      static_cast<int>(clean.cols()), seed);
        }
        }
        return clean;
    }

    void set(const std::string& key, const std::string& value);
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos)
        return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument(value);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for '" + key + "': " + value);
    }
}

inline int parse_int(const std::string& key, const std::string& value) {
    const double d = parse_double(key, value);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d)
        throw ConfigError("config: expected integer for '" + key + "': " + value);
    return i;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(parse_double(key, item));
    }
    if (out.empty())
        throw ConfigError("config: empty list for '" + key + "'");
    return out;
}

} // namespace detail

inline void ExperimentConfig::set(const std::string& key, const std::string& value) {
    using detail::parse_double;
    using detail::parse_int;
    if (key == "sensors") {
        sensors = parse_int(key, value);
    } else if (key == "spacing_over_wavelength") {
        spacing_over_wavelength = parse_double(key, value);
    } else if (key == "grid_interval") {
        grid_interval = parse_double(key, value);
    } else if (key == "true_doas") {
        true_doas = detail::parse_list(key, value);
    } else if (key == "snapshots") {
        snapshots = parse_int(key, value);
    } else if (key == "source_power") {
        source_power = parse_double(key, value);
    } else if (key == "noise") {
        if (value == "none")
            noise = NoiseKind::None;
        else if (value == "gmm")
            noise = NoiseKind::Gmm;
        else if (value == "sas")
            noise = NoiseKind::Sas;
        else
            throw ConfigError("config: unknown noise model '" + value + "'");
    } else if (key == "snr_db") {
        snr_db = parse_double(key, value);
    } else if (key == "c2") {
        gmm_c2 = parse_double(key, value);
    } else if (key == "gsnr_db") {
        gsnr_db = parse_double(key, value);
    } else if (key == "alpha") {
        sas_alpha = parse_double(key, value);
    } else if (key == "population") {
        solver.population_size = parse_int(key, value);
    } else if (key == "crossover_prob") {
        solver.crossover_prob = parse_double(key, value);
    } else if (key == "mutation_prob") {
        solver.mutation_prob = parse_double(key, value);
    } else if (key == "inner_max") {
        solver.inner_max = parse_int(key, value);
    } else if (key == "forward_max") {
        solver.forward_max = parse_int(key, value);
    } else if (key == "step_deg") {
        solver.step_deg = parse_double(key, value);
    } else if (key == "outer_max") {
        solver.outer_max = parse_int(key, value);
    } else if (key == "tol") {
        solver.convergence_tol = parse_double(key, value);
    } else if (key == "window") {
        solver.convergence_window = parse_int(key, value);
    } else if (key == "min_generations") {
        solver.min_generations = parse_int(key, value);
    } else if (key == "refine_warmup") {
        solver.refine_warmup = parse_int(key, value);
    } else if (key == "mode") {
        if (value == "forward")
            solver.mode = RefinementMode::ForwardSearch;
        else if (value == "on-grid")
            solver.mode = RefinementMode::OnGridOnly;
        else if (value == "taylor")
            solver.mode = RefinementMode::Taylor;
        else
            throw ConfigError("config: unknown refinement mode '" + value + "'");
    } else if (key == "separation") {
        // sweep helper: keeps the first DOA, places the second at a fixed offset
        if (true_doas.empty())
            throw ConfigError("config: 'separation' needs at least one base DOA");
        true_doas.resize(1);
        true_doas.push_back(true_doas[0] + parse_double(key, value));
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
        cfg.set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open '" + path + "'");
    return parse_config(in);
}

} // namespace mobea

#endif
