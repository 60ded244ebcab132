#include "pbi/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

namespace pbi {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, Rng::Role role) {
    return Rng::substream(seed, 0, role).next_u64();
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& key) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str()) throw ConfigError("config: bad number for " + key + ": " + v);
    return x;
}

std::int64_t to_int(const std::string& v, const std::string& key) {
    char* end = nullptr;
    const std::int64_t x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str()) throw ConfigError("config: bad integer for " + key + ": " + v);
    return x;
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: bad bool for " + key + ": " + v);
}

Vec to_vec(const std::string& v, const std::string& key) {
    Vec out;
    std::stringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trim(cell);
        if (cell.empty()) continue;
        out.push_back(to_double(cell, key));
    }
    return out;
}

std::string vec_to_string(const Vec& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += format_double(v[i]);
    }
    return s;
}

// Parses the digest notation back into blocks: "1,11:20|2:10" (1-based).
std::vector<std::vector<int>> parse_partition_spec(const std::string& s) {
    std::vector<std::vector<int>> blocks;
    std::stringstream bs(s);
    std::string btxt;
    while (std::getline(bs, btxt, '|')) {
        std::vector<int> block;
        std::stringstream es(btxt);
        std::string etxt;
        while (std::getline(es, etxt, ',')) {
            etxt = trim(etxt);
            if (etxt.empty()) continue;
            const auto colon = etxt.find(':');
            if (colon == std::string::npos) {
                block.push_back(static_cast<int>(to_int(etxt, "partition")) - 1);
            } else {
                const int a = static_cast<int>(to_int(etxt.substr(0, colon), "partition"));
                const int b = static_cast<int>(to_int(etxt.substr(colon + 1), "partition"));
                for (int i = a; i <= b; ++i) block.push_back(i - 1);
            }
        }
        if (!block.empty()) blocks.push_back(std::move(block));
    }
    return blocks;
}

std::string partition_spec_string(const std::vector<std::vector<int>>& blocks) {
    Partition p;
    p.blocks = blocks;
    p.resolutions.assign(blocks.size(), 1);
    return p.digest();
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"gmm-demo", "nl1", "nl2", "linear", "mixture", "csv-mixture"};
}

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig c;
    c.preset = name;
    c.algo.init_mean.clear();  // derived from the preset truth unless set
    if (name == "gmm-demo") {
        c.algo.N = 5;
        c.algo.t1 = 10;
        c.algo.N_aux = 100;
        c.algo.init_mean = {-8.0};
        c.algo.init_var = 0.5;
        c.horizon = 400000;
    } else if (name == "nl1") {
        c.algo.N = 4096;
        c.algo.t1 = 5;
        c.algo.N_aux = 1000;
        c.horizon = 1000000;
    } else if (name == "nl2") {
        c.dim = 7;
        c.algo.N = 128;
        c.algo.t1 = 5;
        c.algo.N_aux = 20000;
        c.horizon = 1000000;
    } else if (name == "linear") {
        c.dim = 20;
        c.algo.N = 35000;
        c.algo.t1 = 5;
        c.algo.N_aux = 40000;
        c.horizon = 1000000;
    } else if (name == "mixture") {
        c.dx = 3;
        c.J = 2;
        c.algo.N = 128;
        c.algo.t1 = 100;
        c.algo.N_aux = 10000;
        c.algo.init_mean = {0.0};
        c.horizon = 1000000;
    } else if (name == "csv-mixture") {
        c.dx = 0;  // taken from the file
        c.J = 2;
        c.algo.N = 512;
        c.algo.t1 = 100;
        c.algo.N_aux = 10000;
        c.algo.init_mean = {0.0};
        c.horizon = 1000000;
    } else {
        throw ConfigError("unknown preset: " + name);
    }
    return c;
}

ExperimentSetup build_experiment(ExperimentConfig& cfg) {
    ExperimentSetup setup;
    const std::uint64_t data_seed = derive_seed(cfg.seed, Rng::Role::data);

    if (cfg.preset == "gmm-demo") {
        auto model = std::make_unique<GmmDemoModel>();
        setup.stream = std::make_unique<GmmDemoStream>(*model, cfg.gmm_theta_star, data_seed);
        setup.truth = Vec{cfg.gmm_theta_star};
        setup.model = std::move(model);
    } else if (cfg.preset == "nl1") {
        auto model = std::make_unique<QuantileModel>(QuantileMean::nl1, 4, 3, cfg.q);
        Vec star{70.0, 10.0, 3.0, 10.0};
        setup.stream = std::make_unique<QuantileStream>(*model, star, data_seed);
        setup.truth = star;
        setup.model = std::move(model);
    } else if (cfg.preset == "nl2") {
        const int d = cfg.dim > 0 ? cfg.dim : 7;
        cfg.dim = d;
        auto model = std::make_unique<QuantileModel>(QuantileMean::nl2, d, d, cfg.q);
        auto stream = QuantileStream::nl2(*model, data_seed);
        setup.truth = stream->theta_star();
        setup.stream = std::move(stream);
        setup.model = std::move(model);
    } else if (cfg.preset == "linear") {
        const int d = cfg.dim > 0 ? cfg.dim : 20;
        cfg.dim = d;
        auto model = std::make_unique<QuantileModel>(QuantileMean::linear, d, d, cfg.q);
        auto stream = QuantileStream::linear(*model, cfg.sigma_rho, data_seed);
        setup.truth = stream->theta_star();
        setup.stream = std::move(stream);
        setup.model = std::move(model);
    } else if (cfg.preset == "mixture") {
        auto model = std::make_unique<MixtureLogisticModel>(cfg.J, cfg.dx);
        auto stream = std::make_unique<MixtureStream>(*model, data_seed);
        setup.truth = stream->theta_star();
        setup.stream = std::move(stream);
        setup.model = std::move(model);
    } else if (cfg.preset == "csv-mixture") {
        if (cfg.csv_path.empty()) throw ConfigError("csv-mixture: csv_path required");
        auto stream = cfg.csv_shuffle_seed
                          ? std::make_unique<CsvStream>(cfg.csv_path, *cfg.csv_shuffle_seed)
                          : std::make_unique<CsvStream>(cfg.csv_path);
        if (cfg.dx == 0) cfg.dx = stream->covariate_dim();
        if (cfg.dx != stream->covariate_dim())
            throw ConfigError("csv-mixture: dx does not match the file");
        setup.model = std::make_unique<MixtureLogisticModel>(cfg.J, cfg.dx);
        setup.stream = std::move(stream);
    } else {
        throw ConfigError("unknown preset: " + cfg.preset);
    }

    if (cfg.truth) setup.truth = cfg.truth;

    if (cfg.algo.init_mean.empty()) {
        // Quantile scenarios start 10 below the target; everything else at 0.
        if (setup.truth && (cfg.preset == "nl1" || cfg.preset == "nl2" ||
                            cfg.preset == "linear")) {
            cfg.algo.init_mean = *setup.truth;
            for (auto& v : cfg.algo.init_mean) v -= 10.0;
        } else {
            cfg.algo.init_mean = {0.0};
        }
    }
    return setup;
}

// ---- file format ------------------------------------------------------------

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    AlgoConfig& a = cfg.algo;
    if (key == "model.preset") cfg.preset = value;
    else if (key == "model.q") cfg.q = to_double(value, key);
    else if (key == "model.dim") cfg.dim = static_cast<int>(to_int(value, key));
    else if (key == "model.J") cfg.J = static_cast<int>(to_int(value, key));
    else if (key == "model.dx") cfg.dx = static_cast<int>(to_int(value, key));
    else if (key == "model.sigma_rho") cfg.sigma_rho = to_double(value, key);
    else if (key == "model.gmm_theta_star") cfg.gmm_theta_star = to_double(value, key);
    else if (key == "model.csv_path") cfg.csv_path = value;
    else if (key == "model.csv_shuffle_seed")
        cfg.csv_shuffle_seed = static_cast<std::uint64_t>(to_int(value, key));
    else if (key == "algo.N") a.N = to_int(value, key);
    else if (key == "algo.M_prime") a.M_prime = static_cast<int>(to_int(value, key));
    else if (key == "algo.t1") a.t1 = to_int(value, key);
    else if (key == "algo.kappa") a.kappa = to_double(value, key);
    else if (key == "algo.eps0") a.eps0 = to_double(value, key);
    else if (key == "algo.varrho") a.varrho = to_double(value, key);
    else if (key == "algo.beta") a.beta = to_double(value, key);
    else if (key == "algo.varepsilon") a.varepsilon = to_double(value, key);
    else if (key == "algo.Delta") a.Delta = to_double(value, key);
    else if (key == "algo.zeta1") a.zeta1 = to_double(value, key);
    else if (key == "algo.zeta2") a.zeta2 = to_double(value, key);
    else if (key == "algo.zeta3") a.zeta3 = to_double(value, key);
    else if (key == "algo.zeta4") a.zeta4 = to_double(value, key);
    else if (key == "algo.nu") a.nu = to_double(value, key);
    else if (key == "algo.L") a.clamp_L = to_double(value, key);
    else if (key == "algo.N_aux") a.N_aux = to_int(value, key);
    else if (key == "algo.threads") a.threads = static_cast<int>(to_int(value, key));
    else if (key == "algo.batch") a.batch = static_cast<int>(to_int(value, key));
    else if (key == "algo.share_support") a.share_support = to_bool(value, key);
    else if (key == "algo.init_mean") a.init_mean = to_vec(value, key);
    else if (key == "algo.init_var") a.init_var = to_double(value, key);
    else if (key == "algo.partition") a.partition_override = parse_partition_spec(value);
    else if (key == "run.seed") cfg.seed = static_cast<std::uint64_t>(to_int(value, key));
    else if (key == "run.horizon") cfg.horizon = to_int(value, key);
    else if (key == "run.truth") cfg.truth = to_vec(value, key);
    else if (key == "run.out") cfg.out = value;
    else if (key == "run.sample_every") cfg.sample_every = to_int(value, key);
    else if (key == "run.timing") cfg.timing = to_bool(value, key);
    else throw ConfigError("config: unknown key " + key);
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    cfg.algo.init_mean.clear();
    std::string line, section;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config: bad line: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        apply_override(cfg, section.empty() ? key : section + "." + key, value);
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    return parse_config(f);
}

void emit_config(const ExperimentConfig& cfg, std::ostream& out) {
    const AlgoConfig& a = cfg.algo;
    out << "[model]\n";
    out << "preset = " << cfg.preset << "\n";
    out << "q = " << format_double(cfg.q) << "\n";
    out << "dim = " << cfg.dim << "\n";
    out << "J = " << cfg.J << "\n";
    out << "dx = " << cfg.dx << "\n";
    out << "sigma_rho = " << format_double(cfg.sigma_rho) << "\n";
    out << "gmm_theta_star = " << format_double(cfg.gmm_theta_star) << "\n";
    if (!cfg.csv_path.empty()) out << "csv_path = " << cfg.csv_path << "\n";
    if (cfg.csv_shuffle_seed) out << "csv_shuffle_seed = " << *cfg.csv_shuffle_seed << "\n";
    out << "\n[algo]\n";
    out << "N = " << a.N << "\n";
    out << "M_prime = " << a.M_prime << "\n";
    out << "t1 = " << a.t1 << "\n";
    out << "kappa = " << format_double(a.kappa) << "\n";
    out << "eps0 = " << format_double(a.eps0) << "\n";
    out << "varrho = " << format_double(a.varrho) << "\n";
    out << "beta = " << format_double(a.beta) << "\n";
    out << "varepsilon = " << format_double(a.varepsilon) << "\n";
    out << "Delta = " << format_double(a.Delta) << "\n";
    out << "zeta1 = " << format_double(a.zeta1) << "\n";
    out << "zeta2 = " << format_double(a.zeta2) << "\n";
    out << "zeta3 = " << format_double(a.zeta3) << "\n";
    out << "zeta4 = " << format_double(a.zeta4) << "\n";
    out << "nu = " << format_double(a.nu) << "\n";
    out << "L = " << format_double(a.clamp_L) << "\n";
    out << "N_aux = " << a.N_aux << "\n";
    out << "threads = " << a.threads << "\n";
    out << "batch = " << a.batch << "\n";
    out << "share_support = " << (a.share_support ? "true" : "false") << "\n";
    if (!a.init_mean.empty()) out << "init_mean = " << vec_to_string(a.init_mean) << "\n";
    out << "init_var = " << format_double(a.init_var) << "\n";
    if (a.partition_override)
        out << "partition = " << partition_spec_string(*a.partition_override) << "\n";
    out << "\n[run]\n";
    out << "seed = " << cfg.seed << "\n";
    out << "horizon = " << cfg.horizon << "\n";
    if (cfg.truth) out << "truth = " << vec_to_string(*cfg.truth) << "\n";
    out << "out = " << cfg.out << "\n";
    out << "sample_every = " << cfg.sample_every << "\n";
    out << "timing = " << (cfg.timing ? "true" : "false") << "\n";
}

bool config_equal(const ExperimentConfig& a, const ExperimentConfig& b) {
    std::ostringstream sa, sb;
    emit_config(a, sa);
    emit_config(b, sb);
    return sa.str() == sb.str();
}

}  // namespace pbi
