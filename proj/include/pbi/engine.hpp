#pragma once

#include <limits>
#include <optional>

#include "pbi/meanfield.hpp"
#include "pbi/schedule.hpp"
#include "pbi/stream.hpp"

namespace pbi {

// Every tunable of the algorithm.  Defaults follow the reference parameter
// table; kappa feeds both the schedule and the auxiliary estimate.
struct AlgoConfig {
    std::int64_t N{32};
    int M_prime{2};
    std::int64_t t1{10};
    double kappa{0.9};
    double eps0{1.0};
    double varrho{2.1};
    double beta{0.01};
    double varepsilon{0.1};
    double Delta{0.95};
    double zeta1{1.0};
    double zeta2{0.5};
    double zeta3{1.0};
    double zeta4{0.5};
    double nu{3.0};
    double clamp_L{500.0};
    std::int64_t N_aux{1000};
    int threads{1};
    int batch{32};
    bool share_support{false};
    Vec init_mean{0.0};  // broadcast over coordinates when of size 1
    double init_var{1.0};
    std::optional<std::vector<std::vector<int>>> partition_override;

    ScheduleConfig schedule_config(int d) const;
    GtWeights gt_weights() const;
    void validate(int d) const;
};

struct TraceRow {
    std::int64_t t{0};
    std::int64_t p{0};
    double xi{0.0};
    double eps{0.0};
    std::int64_t q{0};
    Branch branch{Branch::own_estimate};
    GtBranch gt_branch{GtBranch::mean};
    Vec estimate;
    double error{std::numeric_limits<double>::quiet_NaN()};
    double ess{std::numeric_limits<double>::quiet_NaN()};
    std::int64_t tau{0};
    std::string partition;
    double wall_ns_per_obs{0.0};
    std::int64_t rss_kb{0};
    bool is_perturbation{true};
};

struct RunReport {
    std::vector<TraceRow> rows;
    Vec final_estimate;
    Partition final_partition;
    std::int64_t observations{0};
    std::int64_t perturbations{0};
    std::int64_t likelihood_evals{0};
    double wall_ns_per_obs{0.0};
};

// Distance between the two point estimates, minimized over the likelihood-
// preserving relabelings of the auxiliary estimate.
double estimate_distance(std::span<const double> theta_bar,
                         std::span<const double> vartheta_bar, const Model& model);

std::int64_t current_rss_kb();

// Runs the perturbed posterior recursion: per-observation Bayes updates on
// the main and auxiliary systems plus the exploration pool, and the
// perturbation block (estimates, interaction, support regeneration,
// partition learning) at the scheduled times.  Observations are consumed
// strictly once, in order; a staging buffer of at most `batch` observations
// is the only look-ahead, and processing is bit-identical for every batch
// size and thread count.
class Engine {
public:
    Engine(const Model& model, AlgoConfig cfg, std::uint64_t seed);

    void step(const Observation& y);
    RunReport run(ObservationStream& stream, std::int64_t horizon,
                  const Vec* truth = nullptr, std::int64_t sample_every = 0);
    RunReport report() const;

    Vec current_estimate() const;  // provisional before the first perturbation
    bool provisional() const { return !structured_; }
    std::int64_t t() const { return t_; }
    std::int64_t perturbations_run() const { return sched_.p - 1; }
    const ParticleSystem& main_system() const { return main_; }
    const ParticleSystem& aux_system() const { return aux_; }
    const Vec& main_center() const { return main_center_; }
    double main_radius() const { return main_radius_; }
    const Vec& aux_center() const { return aux_center_; }
    double aux_radius() const { return aux_radius_; }
    const Partition& partition() const { return partition_; }
    const ScheduleState& schedule_state() const { return sched_; }
    std::int64_t likelihood_evals() const { return evals_; }
    void set_truth(Vec truth) { truth_ = std::move(truth); }
    void set_timing(bool on) { timing_ = on; }

private:
    void run_perturbation();
    void apply_batch();
    void take_correlation_snapshot();
    void append_sample_row();
    std::vector<ScoredCandidate> top_candidates(int k) const;
    Vec init_mean_full() const;

    const Model& model_;
    AlgoConfig cfg_;
    ScheduleConfig sched_cfg_;
    GtWeights gt_;
    std::uint64_t seed_;
    int d_;
    int R_;
    bool meanfield_;
    int M_;
    int feas_k_;

    ParticleSystem main_, aux_, pool_;
    std::int64_t n_uniform_pool_{0};
    ScheduleState sched_;
    Partition partition_;
    bool structured_{false};

    Vec main_center_;
    double main_radius_{0.0};
    Vec aux_center_;
    double aux_radius_{0.0};

    std::int64_t t_{0};
    double T_{3.0};
    std::int64_t tau_current_{1};
    bool snapped_this_block_{false};
    Matrix rho_;
    double rho_ess_{std::numeric_limits<double>::quiet_NaN()};
    bool rho_ready_{false};
    Matrix sigma_;

    std::optional<Vec> truth_;
    bool timing_{false};
    std::int64_t evals_{0};
    double block_wall_ns_{0.0};
    double total_wall_ns_{0.0};

    ObsBatch batch_;
    std::vector<TraceRow> rows_;
};

}  // namespace pbi
