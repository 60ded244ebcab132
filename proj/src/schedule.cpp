#include "pbi/schedule.hpp"

#include <cmath>

namespace pbi {

void ScheduleConfig::validate() const {
    if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("schedule: kappa must be in (0,1)");
    if (t1 < 1) throw ConfigError("schedule: t1 must be >= 1");
    if (!(eps0 > 0.0)) throw ConfigError("schedule: eps0 must be > 0");
    if (!(varrho > 2.0)) throw ConfigError("schedule: varrho must be > 2");
    if (!(beta > 0.0)) throw ConfigError("schedule: beta must be > 0");
    if (!(varepsilon > 0.0)) throw ConfigError("schedule: varepsilon must be > 0");
    if (d < 1) throw ConfigError("schedule: d must be >= 1");
}

std::int64_t next_perturbation_time(std::int64_t t_prev, const ScheduleConfig& cfg) {
    const double growth = (1.0 / (cfg.kappa * cfg.kappa) - 1.0) * static_cast<double>(t_prev);
    const auto inc = static_cast<std::int64_t>(std::ceil(growth));
    return t_prev + std::max(inc, cfg.t1);
}

double epsilon_p(std::int64_t p, const ScheduleConfig& cfg) {
    const double pd = static_cast<double>(p);
    const double arg = cfg.varrho * std::log(pd + 1.0) / pd;
    return cfg.eps0 * std::min(1.0, std::pow(arg, 1.0 / (cfg.d + cfg.beta)));
}

double c_p(std::int64_t p, const ScheduleConfig& cfg) {
    if (p == 0) return 1.0;
    const double pd = static_cast<double>(p);
    const double geo = std::pow((1.0 + cfg.kappa) / (2.0 * cfg.kappa), pd);
    const double poly = std::pow(pd, 0.5 * (1.0 + cfg.varepsilon));
    return std::min(geo, poly);
}

ScheduleState initial_schedule_state(const ScheduleConfig& cfg) {
    ScheduleState s;
    s.p = 1;
    s.t_prev = 0;
    s.t_cur = next_perturbation_time(0, cfg);  // = t_1
    s.q = 0;
    s.xi = 1.0;
    s.eps_p = epsilon_p(1, cfg);
    s.c_prev = 1.0;
    s.c_cur = c_p(0, cfg);
    return s;
}

Branch apply_interaction(ScheduleState& state, double dist, const ScheduleConfig& cfg) {
    if (dist <= 2.0 * state.eps_p) {
        const double c_old = c_p(state.q, cfg);
        state.q += 1;
        const double c_new = c_p(state.q, cfg);
        state.xi = cfg.kappa * (c_new / c_old) * state.xi;
        state.c_prev = c_old;
        state.c_cur = c_new;
        return Branch::own_estimate;
    }
    state.q = 1;
    state.xi = state.eps_p;
    state.c_prev = c_p(0, cfg);
    state.c_cur = c_p(1, cfg);
    return Branch::aux_estimate;
}

void advance_schedule(ScheduleState& state, const ScheduleConfig& cfg) {
    state.p += 1;
    state.t_prev = state.t_cur;
    state.t_cur = next_perturbation_time(state.t_cur, cfg);
    state.eps_p = epsilon_p(state.p, cfg);
}

std::int64_t count_perturbations(std::int64_t horizon, const ScheduleConfig& cfg) {
    std::int64_t count = 0;
    std::int64_t t = 0;
    for (;;) {
        t = next_perturbation_time(t, cfg);
        if (t > horizon) break;
        ++count;
    }
    return count;
}

}  // namespace pbi
