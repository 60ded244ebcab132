#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "pbi/engine.hpp"

namespace pbi {

// Full description of an experiment: a model preset with its parameters,
// the algorithm tunables, and the run settings.
struct ExperimentConfig {
    // [model]
    std::string preset{"gmm-demo"};
    double q{0.5};
    int dim{0};           // nl2/linear parameter dimension; 0 = preset default
    int J{2};             // mixture components
    int dx{4};            // mixture covariate dimension
    double sigma_rho{0.0};
    double gmm_theta_star{0.0};
    std::string csv_path;
    std::optional<std::uint64_t> csv_shuffle_seed;

    // [algo]
    AlgoConfig algo;

    // [run]
    std::uint64_t seed{1};
    std::int64_t horizon{100000};
    std::optional<Vec> truth;  // filled from the generator when absent
    std::string out{"trace.csv"};
    std::int64_t sample_every{0};
    bool timing{false};
};

// Model + stream + known truth assembled from a config.
struct ExperimentSetup {
    std::unique_ptr<Model> model;
    std::unique_ptr<ObservationStream> stream;
    std::optional<Vec> truth;
};

// Presets cover every synthetic scenario; "csv-mixture" reads observations
// from a file instead of a generator.
std::vector<std::string> preset_names();
ExperimentConfig preset_config(const std::string& name);

ExperimentSetup build_experiment(ExperimentConfig& cfg);

// Flat sectioned key=value file.  parse(emit(cfg)) == cfg.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);
void emit_config(const ExperimentConfig& cfg, std::ostream& out);
bool config_equal(const ExperimentConfig& a, const ExperimentConfig& b);

// One "key=value" override, e.g. "algo.N=4096" or "run.horizon=100000".
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

}  // namespace pbi
