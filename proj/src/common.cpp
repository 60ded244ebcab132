#include "pbi/common.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

namespace pbi {

double max_norm(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::fabs(v));
    return m;
}

double max_norm_dist(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

double log_sum_exp(std::span<const double> v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

void softmax(std::span<const double> log_w, std::span<double> out) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : log_w) mx = std::max(mx, x);
    double s = 0.0;
    for (std::size_t i = 0; i < log_w.size(); ++i) {
        out[i] = std::exp(log_w[i] - mx);
        s += out[i];
    }
    const double inv = 1.0 / s;
    for (std::size_t i = 0; i < log_w.size(); ++i) out[i] *= inv;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace pbi
