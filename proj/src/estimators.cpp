#include "pbi/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace pbi {

void GtWeights::validate() const {
    if (!(Delta > 0.0 && Delta < 1.0)) throw ConfigError("Gt: Delta must be in (0,1)");
    if (!(zeta1 > 0.0 && zeta3 > 0.0)) throw ConfigError("Gt: zeta1, zeta3 must be > 0");
    if (!(zeta2 > 0.0 && zeta2 < 1.0) || !(zeta4 > 0.0 && zeta4 < 1.0))
        throw ConfigError("Gt: zeta2, zeta4 must be in (0,1)");
}

Vec estimate_G(const ParticleSystem& sys) {
    return posterior_mean(sys);
}

Vec estimate_Gtilde_mode(const AuxEstimateInputs& in) {
    const auto pt = in.sys->point(mode_index(*in.sys));
    return Vec(pt.begin(), pt.end());
}

namespace {

// a_n of the ball-mass statistic, 0-based: grid, Student-t, pool extras.
inline double a_weight(int n, int N, int M, const GtWeights& gw) {
    if (n < N) return gw.zeta1 * M / N;
    if (n == N) return gw.zeta2 * M;
    return 1.0 - gw.zeta2;
}

}  // namespace

double compute_Zt(const AuxEstimateInputs& in, const GtWeights& gw) {
    const ParticleSystem& sys = *in.sys;
    const double radius = (1.0 + gw.kappa) * in.eps;
    const double mx = *std::max_element(sys.log_weights.begin(), sys.log_weights.end());
    double num = 0.0, den = 0.0;
    for (int n = 0; n < sys.size(); ++n) {
        const double v = a_weight(n, in.N, in.M, gw) * std::exp(sys.log_weights[n] - mx);
        den += v;
        if (max_norm_dist(sys.point(n), in.mu) <= radius) num += v;
    }
    return num / den;
}

Vec estimate_Gtilde(const AuxEstimateInputs& in, const GtWeights& gw, GtBranch* branch) {
    const ParticleSystem& sys = *in.sys;
    const double z = compute_Zt(in, gw);
    if (!(z > gw.Delta)) {
        if (branch) *branch = GtBranch::mode;
        return estimate_Gtilde_mode(in);
    }
    if (branch) *branch = GtBranch::mean;

    // J: exploration points inside B_{(1+2 kappa) eps}(mu), as global indices.
    const double radius = (1.0 + 2.0 * gw.kappa) * in.eps;
    std::vector<int> J;
    for (int m = 1; m <= in.M; ++m) {
        const int n = in.N + m - 1;
        if (max_norm_dist(sys.point(n), in.mu) <= radius) J.push_back(n);
    }
    const double jsize = static_cast<double>(J.size());

    const double mx = *std::max_element(sys.log_weights.begin(), sys.log_weights.end());
    Vec out(sys.dim, 0.0);
    double den = 0.0;
    auto accumulate = [&](int n, double a) {
        const double v = a * std::exp(sys.log_weights[n] - mx);
        den += v;
        const auto pt = sys.point(n);
        for (int i = 0; i < sys.dim; ++i) out[i] += v * pt[i];
    };
    for (int n = 0; n < in.N; ++n) accumulate(n, gw.zeta3 * std::max(1.0, jsize) / in.N);
    for (int n : J) accumulate(n, n == in.N ? gw.zeta4 * jsize : 1.0 - gw.zeta4);
    for (auto& v : out) v /= den;
    return out;
}

}  // namespace pbi
