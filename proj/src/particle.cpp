#include "pbi/particle.hpp"

#include <cmath>

#include "pbi/stream.hpp"

namespace pbi {

void bayes_update(ParticleSystem& sys, const Observation& y, const Model& model) {
    const int n = sys.size();
    Vec increments(n);
    for (int i = 0; i < n; ++i) {
        increments[i] = model.log_density(sys.point(i), y);
        if (!std::isfinite(increments[i]))
            throw ModelEvalError("bayes_update: non-finite log-density at particle " +
                                 std::to_string(i) + "; observation rejected");
    }
    for (int i = 0; i < n; ++i) sys.add_log_weight(i, increments[i]);
}

void reset_weights(ParticleSystem& sys, std::int64_t t) {
    for (auto& w : sys.log_weights) w = 0.0;
    for (auto& c : sys.weight_comp) c = 0.0;
    sys.block_start_t = t;
}

Vec posterior_mean(const ParticleSystem& sys) {
    Vec w(sys.size());
    softmax(sys.log_weights, w);
    Vec mean(sys.dim, 0.0);
    for (int n = 0; n < sys.size(); ++n) {
        const auto pt = sys.point(n);
        for (int i = 0; i < sys.dim; ++i) mean[i] += w[n] * pt[i];
    }
    return mean;
}

int mode_index(const ParticleSystem& sys) {
    int best = 0;
    for (int n = 1; n < sys.size(); ++n)
        if (sys.log_weights[n] > sys.log_weights[best]) best = n;
    return best;
}

double mass_in_ball(const ParticleSystem& sys, std::span<const double> center, double radius) {
    Vec w(sys.size());
    softmax(sys.log_weights, w);
    double mass = 0.0;
    for (int n = 0; n < sys.size(); ++n)
        if (max_norm_dist(sys.point(n), center) <= radius) mass += w[n];
    return mass;
}

int argmin_kl_concentration_check(ParticleSystem sys, const Model& model,
                                  ObservationStream& stream, std::int64_t T) {
    Observation y;
    for (std::int64_t t = 0; t < T && stream.next(y); ++t) bayes_update(sys, y, model);
    return mode_index(sys);
}

}  // namespace pbi
