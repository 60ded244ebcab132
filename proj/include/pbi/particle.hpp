#pragma once

#include <cstdint>

#include "pbi/models.hpp"

namespace pbi {

class ObservationStream;

// Finite-support distribution propagated by Bayes weight updates.  Weights
// live in the log domain: blocks between perturbations reach ~1e5
// observations and raw products underflow.  Normalization happens lazily,
// only when a mean/mode/mass query is made.
struct ParticleSystem {
    int dim{0};
    Vec points;           // row-major, size() x dim
    Vec log_weights;
    Vec weight_comp;      // Kahan compensation: blocks reach ~1e5 updates
    std::int64_t block_start_t{0};

    ParticleSystem() = default;
    ParticleSystem(int n, int d) : dim(d), points(static_cast<std::size_t>(n) * d, 0.0),
                                   log_weights(n, 0.0), weight_comp(n, 0.0) {}

    // log_weights[n] += increment, with compensation.
    void add_log_weight(int n, double increment) {
        const double y = increment - weight_comp[n];
        const double t = log_weights[n] + y;
        weight_comp[n] = (t - log_weights[n]) - y;
        log_weights[n] = t;
    }

    int size() const { return static_cast<int>(log_weights.size()); }
    std::span<const double> point(int n) const {
        return {points.data() + static_cast<std::size_t>(n) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<double> mutable_point(int n) {
        return {points.data() + static_cast<std::size_t>(n) * dim, static_cast<std::size_t>(dim)};
    }
};

// log w_n += log f_{theta_n}(y) for every particle.  All densities are
// evaluated and checked before any weight changes, so a non-finite value
// rejects the observation and leaves the system untouched.
void bayes_update(ParticleSystem& sys, const Observation& y, const Model& model);

void reset_weights(ParticleSystem& sys, std::int64_t t);

Vec posterior_mean(const ParticleSystem& sys);

// Index of the largest log weight; ties go to the lowest index.
int mode_index(const ParticleSystem& sys);

double mass_in_ball(const ParticleSystem& sys, std::span<const double> center, double radius);

// Empirical check of the discrete-support concentration property: runs T
// Bayes updates from a stream over a fixed support and returns the index
// with the largest posterior mass.
int argmin_kl_concentration_check(ParticleSystem sys, const Model& model,
                                  ObservationStream& stream, std::int64_t T);

}  // namespace pbi
