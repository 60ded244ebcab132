#pragma once

#include <cstdint>

#include "pbi/common.hpp"

namespace pbi {

// Tunables of the perturbation schedule and its scalar sequences.
struct ScheduleConfig {
    double kappa{0.9};        // in (0,1)
    std::int64_t t1{10};      // first perturbation time, >= 1
    double eps0{1.0};         // guidance radius scale
    double varrho{2.1};       // > 2
    double beta{0.01};        // > 0
    double varepsilon{0.1};   // > 0, exponent in c_p
    int d{1};                 // parameter dimension

    void validate() const;    // throws ConfigError
};

// State of the schedule after perturbation p-1, ready to run perturbation p.
// xi holds xi_{p-1}, eps_p holds the guidance radius of the upcoming
// perturbation, c_prev/c_cur cache c_{q-1} and c_q for the running counter.
struct ScheduleState {
    std::int64_t p{1};
    std::int64_t t_prev{0};
    std::int64_t t_cur{0};
    std::int64_t q{0};
    double xi{1.0};
    double eps_p{0.0};
    double c_prev{1.0};
    double c_cur{1.0};
};

enum class Branch { own_estimate, aux_estimate };

// t_p = t_{p-1} + max(ceil((kappa^{-2} - 1) t_{p-1}), t_1).  The max applies
// to the increment, so consecutive times differ by at least t_1.
std::int64_t next_perturbation_time(std::int64_t t_prev, const ScheduleConfig& cfg);

// eps_p = eps0 * min(1, (varrho * ln(p+1) / p))^{1/(d+beta)}
double epsilon_p(std::int64_t p, const ScheduleConfig& cfg);

// c_0 = 1, c_p = min(((1+kappa)/(2 kappa))^p, p^{(1+varepsilon)/2})
double c_p(std::int64_t p, const ScheduleConfig& cfg);

ScheduleState initial_schedule_state(const ScheduleConfig& cfg);

// Runs the interaction test ||theta_bar - vartheta_bar|| <= 2 eps_p for the
// pending perturbation and updates (q, xi) accordingly.  Does not advance p.
Branch apply_interaction(ScheduleState& state, double dist, const ScheduleConfig& cfg);

// Moves on to the next perturbation: p, t_prev/t_cur and eps_p.
void advance_schedule(ScheduleState& state, const ScheduleConfig& cfg);

// Number of perturbations with t_p <= horizon.
std::int64_t count_perturbations(std::int64_t horizon, const ScheduleConfig& cfg);

}  // namespace pbi
