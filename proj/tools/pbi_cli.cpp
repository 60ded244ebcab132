// Command-line front end: run experiments, fit error slopes, score mixture
// predictions, list presets.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pbi/config.hpp"
#include "pbi/trace.hpp"

namespace {

int cmd_run(pbi::ExperimentConfig cfg, const std::string& summary_path,
            const std::string& checkpoint_path) {
    pbi::ExperimentSetup setup = pbi::build_experiment(cfg);
    pbi::Engine engine(*setup.model, cfg.algo, cfg.seed);
    engine.set_timing(cfg.timing);

    const pbi::Vec* truth = setup.truth ? &*setup.truth : nullptr;
    const pbi::RunReport report =
        engine.run(*setup.stream, cfg.horizon, truth, cfg.sample_every);

    pbi::write_trace_file(cfg.out, report, setup.model->dim(), truth != nullptr, cfg.timing);

    if (!summary_path.empty()) {
        std::ofstream s(summary_path);
        s << "observations = " << report.observations << "\n";
        s << "perturbations = " << report.perturbations << "\n";
        s << "likelihood_evals = " << report.likelihood_evals << "\n";
        s << "final_estimate = ";
        for (std::size_t i = 0; i < report.final_estimate.size(); ++i)
            s << (i ? "," : "") << pbi::format_double(report.final_estimate[i]);
        s << "\n";
        s << "final_partition = " << report.final_partition.digest() << "\n";
        if (truth) {
            s << "final_error = "
              << pbi::format_double(pbi::max_norm_dist(report.final_estimate, *truth)) << "\n";
        }
        if (cfg.timing)
            s << "wall_ns_per_obs = " << pbi::format_double(report.wall_ns_per_obs) << "\n";
    }
    if (!checkpoint_path.empty()) {
        std::ofstream c(checkpoint_path);
        pbi::write_checkpoint(c, engine.main_system(), engine.aux_system());
    }

    std::cout << "run: " << report.observations << " observations, " << report.perturbations
              << " perturbations, trace -> " << cfg.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"perturbed Bayesian inference for streaming parameter estimation"};
    app.require_subcommand(1);

    // run ---------------------------------------------------------------
    auto* run = app.add_subcommand("run", "run an experiment and write a trace");
    std::string config_path, preset_name, out_path, summary_path, checkpoint_path;
    std::vector<std::string> overrides;
    std::int64_t horizon = -1, seed = -1, N = -1, sample_every = -1, threads = -1;
    double q = -1.0;
    bool timing = false;
    run->add_option("--config", config_path, "config file (key = value sections)");
    run->add_option("--preset", preset_name, "experiment preset");
    run->add_option("--horizon", horizon, "observations to consume");
    run->add_option("--seed", seed, "root rng seed");
    run->add_option("--N", N, "main support size");
    run->add_option("--q", q, "quantile level");
    run->add_option("--threads", threads, "worker threads (default $PBI_THREADS or 1)");
    run->add_option("--out", out_path, "trace output path");
    run->add_option("--summary", summary_path, "write a run summary file");
    run->add_option("--checkpoint", checkpoint_path, "write final particle state");
    run->add_option("--sample-every", sample_every, "extra trace rows every k observations");
    run->add_flag("--timing", timing, "include wall-clock and rss columns");
    run->add_option("--set", overrides, "override any config key, e.g. algo.N=4096");

    // slope -------------------------------------------------------------
    auto* slope = app.add_subcommand("slope", "error-vs-t slope over trailing decades");
    std::string slope_trace;
    double window = 1.0;
    slope->add_option("trace", slope_trace, "trace csv")->required();
    slope->add_option("--window", window, "window size in decades");

    // predict -----------------------------------------------------------
    auto* predict = app.add_subcommand("predict", "mixture purchase-probability scores");
    std::string theta_arg, theta_file, csv_in, csv_out;
    int J = 2;
    predict->add_option("--theta", theta_arg, "comma-separated parameter vector");
    predict->add_option("--theta-file", theta_file, "file with one parameter per line");
    predict->add_option("--J", J, "mixture components");
    predict->add_option("--in", csv_in, "input csv")->required();
    predict->add_option("--out", csv_out, "output csv")->required();

    // presets -----------------------------------------------------------
    auto* presets = app.add_subcommand("presets", "list experiment presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            pbi::ExperimentConfig cfg;
            if (!config_path.empty()) cfg = pbi::parse_config_file(config_path);
            if (!preset_name.empty()) {
                pbi::ExperimentConfig p = pbi::preset_config(preset_name);
                if (!config_path.empty()) p.algo.threads = cfg.algo.threads;
                cfg = p;
            }
            if (config_path.empty() && preset_name.empty())
                throw pbi::ConfigError("run: need --config or --preset");
            if (const char* env = std::getenv("PBI_THREADS"))
                cfg.algo.threads = std::max(1, std::atoi(env));
            for (const auto& kv : overrides) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw pbi::ConfigError("--set expects key=value, got: " + kv);
                pbi::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
            }
            if (horizon >= 0) cfg.horizon = horizon;
            if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
            if (N > 0) cfg.algo.N = N;
            if (q > 0.0) cfg.q = q;
            if (threads > 0) cfg.algo.threads = static_cast<int>(threads);
            if (!out_path.empty()) cfg.out = out_path;
            if (sample_every >= 0) cfg.sample_every = sample_every;
            if (timing) cfg.timing = true;
            return cmd_run(std::move(cfg), summary_path, checkpoint_path);
        }
        if (slope->parsed()) {
            const pbi::TraceData data = pbi::read_trace_file(slope_trace);
            if (!data.has_error)
                throw pbi::ConfigError("slope: trace has no error column (truth unknown)");
            std::string warn;
            const double s = pbi::slope_diagnostic(data.t, data.error, window, &warn);
            if (!warn.empty()) std::cerr << "warning: " << warn << "\n";
            std::cout << "slope = " << pbi::format_double(s) << "\n";
            return 0;
        }
        if (predict->parsed()) {
            pbi::Vec theta;
            if (!theta_file.empty()) {
                std::ifstream f(theta_file);
                if (!f) throw pbi::ConfigError("predict: cannot open " + theta_file);
                double v;
                while (f >> v) theta.push_back(v);
            } else if (!theta_arg.empty()) {
                std::stringstream ss(theta_arg);
                std::string cell;
                while (std::getline(ss, cell, ',')) theta.push_back(std::atof(cell.c_str()));
            } else {
                throw pbi::ConfigError("predict: need --theta or --theta-file");
            }
            pbi::predict_scores(theta, J, csv_in, csv_out);
            std::cout << "scores -> " << csv_out << "\n";
            return 0;
        }
        if (presets->parsed()) {
            for (const auto& name : pbi::preset_names()) {
                pbi::ExperimentConfig c = pbi::preset_config(name);
                std::cout << name << ": N=" << c.algo.N << " t1=" << c.algo.t1
                          << " N_aux=" << c.algo.N_aux << " horizon=" << c.horizon << "\n";
            }
            return 0;
        }
    } catch (const pbi::PbiError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
