#pragma once

#include <iosfwd>
#include <string>

#include "pbi/engine.hpp"

namespace pbi {

// Append-only CSV: one UTF-8 line per row, '.' decimal, 17-significant-digit
// floats.  The error column appears only when the truth is known; the
// wall-clock and RSS columns only when timing is enabled (they are the one
// part of a trace that is not reproducible byte for byte).
void write_trace(std::ostream& out, const RunReport& report, int d, bool have_truth,
                 bool timing);
void write_trace_file(const std::string& path, const RunReport& report, int d,
                      bool have_truth, bool timing);

struct TraceData {
    std::vector<std::int64_t> t;
    Vec error;
    Vec wall_ns;
    std::vector<std::string> partition;
    bool has_error{false};
    bool has_timing{false};
};

TraceData read_trace_file(const std::string& path);

// Least-squares slope of log error against log t over the trailing
// `window_decades` decades of a trace.  Rows with non-positive error are
// unusable; fewer than five usable rows yields NaN and a warning.
double slope_diagnostic(std::span<const std::int64_t> t, std::span<const double> error,
                        double window_decades, std::string* warning = nullptr);

// Per-row purchase probability P(Z=1|x) under the fitted mixture; input CSV
// as in the data module, output CSV "z,score".
void predict_scores(const Vec& theta, int J, const std::string& csv_in,
                    const std::string& csv_out);

// Particle state round-trip (both systems), same CSV conventions.
void write_checkpoint(std::ostream& out, const ParticleSystem& main_sys,
                      const ParticleSystem& aux_sys);
void read_checkpoint(std::istream& in, ParticleSystem& main_sys, ParticleSystem& aux_sys);

}  // namespace pbi
