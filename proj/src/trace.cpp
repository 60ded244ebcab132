#include "pbi/trace.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace pbi {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (quoted) {
            if (c == '"')
                quoted = false;
            else
                cur += c;
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

}  // namespace

void write_trace(std::ostream& out, const RunReport& report, int d, bool have_truth,
                 bool timing) {
    out << "t,p,xi,eps,q,branch,gt_branch";
    for (int i = 0; i < d; ++i) out << ",est_" << i;
    if (have_truth) out << ",err";
    out << ",ess,tau,partition";
    if (timing) out << ",wall_ns_per_obs,rss_kb";
    out << "\n";
    for (const TraceRow& row : report.rows) {
        out << row.t << ',' << row.p << ',' << format_double(row.xi) << ','
            << format_double(row.eps) << ',' << row.q << ','
            << (row.branch == Branch::own_estimate ? "own" : "aux") << ','
            << (row.gt_branch == GtBranch::mean ? "mean" : "mode");
        for (int i = 0; i < d; ++i) out << ',' << format_double(row.estimate[i]);
        if (have_truth) out << ',' << format_double(row.error);
        out << ',' << format_double(row.ess) << ',' << row.tau << ",\"" << row.partition
            << '"';
        if (timing) out << ',' << format_double(row.wall_ns_per_obs) << ',' << row.rss_kb;
        out << "\n";
    }
}

void write_trace_file(const std::string& path, const RunReport& report, int d,
                      bool have_truth, bool timing) {
    std::ofstream f(path);
    if (!f) throw ConfigError("trace: cannot open " + path + " for writing");
    write_trace(f, report, d, have_truth, timing);
}

TraceData read_trace_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("trace: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw ConfigError("trace: empty file " + path);
    const auto header = split_csv_line(line);
    int col_t = -1, col_err = -1, col_wall = -1, col_part = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "t") col_t = static_cast<int>(i);
        if (header[i] == "err") col_err = static_cast<int>(i);
        if (header[i] == "wall_ns_per_obs") col_wall = static_cast<int>(i);
        if (header[i] == "partition") col_part = static_cast<int>(i);
    }
    if (col_t < 0) throw ConfigError("trace: no t column in " + path);

    TraceData data;
    data.has_error = col_err >= 0;
    data.has_timing = col_wall >= 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        data.t.push_back(std::strtoll(cells[col_t].c_str(), nullptr, 10));
        if (col_err >= 0) data.error.push_back(std::strtod(cells[col_err].c_str(), nullptr));
        if (col_wall >= 0) data.wall_ns.push_back(std::strtod(cells[col_wall].c_str(), nullptr));
        if (col_part >= 0) data.partition.push_back(cells[col_part]);
    }
    return data;
}

double slope_diagnostic(std::span<const std::int64_t> t, std::span<const double> error,
                        double window_decades, std::string* warning) {
    if (t.empty()) {
        if (warning) *warning = "slope: empty trace";
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double t_max = static_cast<double>(t.back());
    const double t_min = t_max / std::pow(10.0, window_decades);

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (static_cast<double>(t[i]) < t_min) continue;
        if (!(error[i] > 0.0) || !std::isfinite(error[i])) continue;
        const double x = std::log(static_cast<double>(t[i]));
        const double y = std::log(error[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 5) {
        if (warning)
            *warning = "slope: fewer than 5 usable rows in the window (" +
                       std::to_string(n) + "); returning NaN";
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) {
        if (warning) *warning = "slope: degenerate time values";
        return std::numeric_limits<double>::quiet_NaN();
    }
    return (n * sxy - sx * sy) / denom;
}

void predict_scores(const Vec& theta, int J, const std::string& csv_in,
                    const std::string& csv_out) {
    const int dx = static_cast<int>((theta.size() + 1) / J) - 1;
    if (static_cast<std::size_t>((dx + 1) * J - 1) != theta.size())
        throw ConfigError("predict: theta length does not fit J components");

    CsvStream in(csv_in);
    if (in.covariate_dim() != dx)
        throw ConfigError("predict: csv has " + std::to_string(in.covariate_dim()) +
                          " covariates, model expects " + std::to_string(dx));
    std::ofstream out(csv_out);
    if (!out) throw ConfigError("predict: cannot open " + csv_out + " for writing");
    out << "z,score\n";
    Observation y;
    while (in.next(y)) {
        const double p = mixture_logistic_prob(theta, y.x, J);
        out << format_double(y.z) << ',' << format_double(p) << "\n";
    }
}

void write_checkpoint(std::ostream& out, const ParticleSystem& main_sys,
                      const ParticleSystem& aux_sys) {
    const int d = main_sys.dim;
    out << "system,n,block_start_t,log_weight";
    for (int i = 0; i < d; ++i) out << ",x" << i;
    out << "\n";
    const auto dump = [&](const char* name, const ParticleSystem& sys) {
        for (int n = 0; n < sys.size(); ++n) {
            out << name << ',' << n << ',' << sys.block_start_t << ','
                << format_double(sys.log_weights[n]);
            const auto pt = sys.point(n);
            for (int i = 0; i < sys.dim; ++i) out << ',' << format_double(pt[i]);
            out << "\n";
        }
    };
    dump("main", main_sys);
    dump("aux", aux_sys);
}

void read_checkpoint(std::istream& in, ParticleSystem& main_sys, ParticleSystem& aux_sys) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("checkpoint: empty input");
    const auto header = split_csv_line(line);
    if (header.size() < 5 || header[0] != "system")
        throw ConfigError("checkpoint: bad header");
    const int d = static_cast<int>(header.size()) - 4;

    main_sys = ParticleSystem(0, d);
    aux_sys = ParticleSystem(0, d);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) != d + 4)
            throw ConfigError("checkpoint: bad row width");
        ParticleSystem& sys = cells[0] == "main" ? main_sys : aux_sys;
        sys.block_start_t = std::strtoll(cells[2].c_str(), nullptr, 10);
        sys.log_weights.push_back(std::strtod(cells[3].c_str(), nullptr));
        for (int i = 0; i < d; ++i)
            sys.points.push_back(std::strtod(cells[4 + i].c_str(), nullptr));
    }
    main_sys.weight_comp.assign(main_sys.log_weights.size(), 0.0);
    aux_sys.weight_comp.assign(aux_sys.log_weights.size(), 0.0);
}

}  // namespace pbi
