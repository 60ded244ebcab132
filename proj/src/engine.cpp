#include "pbi/engine.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

namespace pbi {

ScheduleConfig AlgoConfig::schedule_config(int d) const {
    ScheduleConfig s;
    s.kappa = kappa;
    s.t1 = t1;
    s.eps0 = eps0;
    s.varrho = varrho;
    s.beta = beta;
    s.varepsilon = varepsilon;
    s.d = d;
    return s;
}

GtWeights AlgoConfig::gt_weights() const {
    GtWeights g;
    g.Delta = Delta;
    g.zeta1 = zeta1;
    g.zeta2 = zeta2;
    g.zeta3 = zeta3;
    g.zeta4 = zeta4;
    g.kappa = kappa;
    return g;
}

void AlgoConfig::validate(int d) const {
    schedule_config(d).validate();
    gt_weights().validate();
    if (N < 2 * d) throw ConfigError("engine: N must be >= 2d");
    if (M_prime < 1) throw ConfigError("engine: M' must be >= 1");
    if (!(nu > 0.0)) throw ConfigError("engine: nu must be > 0");
    if (!(clamp_L > 0.0)) throw ConfigError("engine: L must be > 0");
    if (N_aux < 2) throw ConfigError("engine: N_aux must be >= 2");
    if (threads < 1 || threads > 256) throw ConfigError("engine: threads must be in 1..256");
    if (batch < 1 || batch > 256) throw ConfigError("engine: batch must be in 1..256");
    if (!(init_var > 0.0)) throw ConfigError("engine: init_var must be > 0");
    if (init_mean.size() != 1 && static_cast<int>(init_mean.size()) != d)
        throw ConfigError("engine: init_mean must have 1 or d entries");
}

double estimate_distance(std::span<const double> theta_bar,
                         std::span<const double> vartheta_bar, const Model& model) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& v : model.relabelings(vartheta_bar))
        best = std::min(best, max_norm_dist(theta_bar, v));
    return best;
}

std::int64_t current_rss_kb() {
    std::ifstream f("/proc/self/status");
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind("VmRSS:", 0) == 0) return std::atoll(line.c_str() + 6);
    }
    return 0;
}

namespace {

void parallel_apply(int threads, std::int64_t total,
                    const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (threads <= 1 || total < 2 * threads) {
        fn(0, total);
        return;
    }
    std::vector<std::thread> workers;
    const std::int64_t chunk = (total + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const std::int64_t lo = w * chunk;
        const std::int64_t hi = std::min(total, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back(fn, lo, hi);
    }
    for (auto& th : workers) th.join();
}

}  // namespace

Vec Engine::init_mean_full() const {
    Vec m(d_);
    for (int i = 0; i < d_; ++i)
        m[i] = cfg_.init_mean.size() == 1 ? cfg_.init_mean[0] : cfg_.init_mean[i];
    return m;
}

Engine::Engine(const Model& model, AlgoConfig cfg, std::uint64_t seed)
    : model_(model), cfg_(std::move(cfg)), seed_(seed), d_(model.dim()) {
    cfg_.validate(d_);
    sched_cfg_ = cfg_.schedule_config(d_);
    gt_ = cfg_.gt_weights();

    if (cfg_.partition_override) {
        partition_ = make_partition(cfg_.N, *cfg_.partition_override);
        R_ = partition_.R();
    } else {
        R_ = r_of_n(cfg_.N, d_);
        partition_ = default_partition(cfg_.N, d_);
    }
    meanfield_ = R_ >= 2;
    M_ = meanfield_ ? (R_ + 1) * cfg_.M_prime : cfg_.M_prime;
    feas_k_ = kn_mf(cfg_.N, d_, R_);

    const Vec mu0 = init_mean_full();
    const double sd = std::sqrt(cfg_.init_var);

    main_ = ParticleSystem(static_cast<int>(cfg_.N), d_);
    Rng rng_main = Rng::substream(seed_, 0, Rng::Role::init_main);
    for (int n = 0; n < main_.size(); ++n) {
        auto pt = main_.mutable_point(n);
        for (int i = 0; i < d_; ++i) pt[i] = mu0[i] + sd * rng_main.normal();
    }

    aux_ = ParticleSystem(static_cast<int>(cfg_.N) + M_, d_);
    Rng rng_aux = Rng::substream(seed_, 0, Rng::Role::init_aux);
    for (int n = 0; n < aux_.size(); ++n) {
        auto pt = aux_.mutable_point(n);
        for (int i = 0; i < d_; ++i) pt[i] = mu0[i] + sd * rng_aux.normal();
    }

    // vartheta_bar_{t_0}: plain average of the initial auxiliary support.
    aux_center_.assign(d_, 0.0);
    for (int n = 0; n < aux_.size(); ++n) {
        const auto pt = aux_.point(n);
        for (int i = 0; i < d_; ++i) aux_center_[i] += pt[i];
    }
    for (auto& v : aux_center_) v /= aux_.size();
    aux_radius_ = cfg_.eps0;  // eps_{p-1} argument of the first estimate

    main_center_ = mu0;
    main_radius_ = std::numeric_limits<double>::infinity();

    sched_ = initial_schedule_state(sched_cfg_);
    rho_ = Matrix::identity(d_);
    sigma_ = Matrix::identity(d_);
    for (auto& v : sigma_.a) v *= 10.0;

    Rng rng_pool = Rng::substream(seed_, 0, Rng::Role::pool);
    n_uniform_pool_ = aux_pool_sampler(aux_center_, sched_.xi, sigma_, cfg_.N_aux, rng_pool,
                                       pool_);
    const TauAdaptation ta = adapt_tau(sched_.t_cur - sched_.t_prev, T_, std::nullopt,
                                       n_uniform_pool_);
    T_ = ta.T;
    tau_current_ = ta.tau;

    batch_.reset(model_.covariate_dim(), cfg_.batch);
}

std::vector<ScoredCandidate> Engine::top_candidates(int k) const {
    // Candidates are the pool, the main support and the auxiliary support,
    // every one scored by its accumulated block log-likelihood.
    struct Ref {
        const ParticleSystem* sys;
        int n;
        double score;
    };
    std::vector<Ref> refs;
    refs.reserve(pool_.size() + main_.size() + aux_.size());
    for (const ParticleSystem* sys : {&pool_, &main_, &aux_})
        for (int n = 0; n < sys->size(); ++n)
            refs.push_back({sys, n, sys->log_weights[n]});
    const auto cmp = [](const Ref& a, const Ref& b) { return a.score > b.score; };
    const std::size_t kk = std::min<std::size_t>(k, refs.size());
    std::partial_sort(refs.begin(), refs.begin() + kk, refs.end(), cmp);
    std::vector<ScoredCandidate> out;
    out.reserve(kk);
    for (std::size_t i = 0; i < kk; ++i) {
        const auto pt = refs[i].sys->point(refs[i].n);
        out.push_back({Vec(pt.begin(), pt.end()), refs[i].score});
    }
    return out;
}

void Engine::take_correlation_snapshot() {
    Vec w(n_uniform_pool_);
    softmax(std::span<const double>(pool_.log_weights.data(), n_uniform_pool_), w);
    rho_ = weighted_correlation(pool_.points, static_cast<int>(n_uniform_pool_), d_, w);
    rho_ess_ = ess(w);
    rho_ready_ = true;
    snapped_this_block_ = true;
}

void Engine::run_perturbation() {
    const std::int64_t t_p = sched_.t_cur;

    // Point estimates from the systems as they stand at t_p.  The initial
    // cloud has no grid structure, so the first perturbation uses the
    // full-dimensional estimates.
    Vec theta_bar;
    if (structured_ && meanfield_)
        theta_bar = estimate_G_mf(main_, partition_, main_center_, main_radius_);
    else
        theta_bar = estimate_G(main_);

    AuxEstimateInputs in;
    in.sys = &aux_;
    in.N = static_cast<int>(cfg_.N);
    in.M = M_;
    in.eps = aux_radius_;
    in.mu = aux_center_;
    GtBranch gt_branch = GtBranch::mean;
    Vec vartheta_bar;
    if (structured_ && meanfield_)
        vartheta_bar = estimate_Gtilde_mf(in, partition_, cfg_.M_prime, gt_, &gt_branch);
    else
        vartheta_bar = estimate_Gtilde(in, gt_, &gt_branch);
    const Vec aux_mode = estimate_Gtilde_mode(in);

    const double dist = estimate_distance(theta_bar, vartheta_bar, model_);
    const Branch branch = apply_interaction(sched_, dist, sched_cfg_);
    const Vec& center = branch == Branch::own_estimate ? theta_bar : vartheta_bar;
    const double xi_p = sched_.xi;
    const double eps_p = sched_.eps_p;

    // Partition and Sigma for the new supports come from the importance
    // snapshot taken during the block that just ended.  A degenerate
    // snapshot (ess < 4) keeps the previous partition.
    if (rho_ready_) {
        sigma_ = sigma_update(rho_);
        if (meanfield_ && !cfg_.partition_override && rho_ess_ >= 4.0)
            partition_ = min_rcut_partition(rho_, R_, cfg_.N, feas_k_);
    }

    const std::vector<ScoredCandidate> candidates = top_candidates(cfg_.M_prime - 1);

    AuxParams aux_params;
    aux_params.nu = cfg_.nu;
    aux_params.clamp_L = cfg_.clamp_L;
    aux_params.sigma = sigma_;
    aux_params.M = M_;
    aux_params.N_aux = cfg_.N_aux;

    Rng rng_aux = Rng::substream(seed_, sched_.p, Rng::Role::aux_support);
    if (meanfield_) {
        MfAuxLayout layout{static_cast<int>(cfg_.N), R_, cfg_.M_prime};
        gen_support_Ftilde_mf(t_p, vartheta_bar, eps_p, layout, partition_, aux_params,
                              candidates, rng_aux, aux_);
    } else {
        gen_support_Ftilde(t_p, vartheta_bar, eps_p, static_cast<int>(cfg_.N), aux_params,
                           candidates, rng_aux, aux_);
    }

    if (cfg_.share_support && branch == Branch::aux_estimate) {
        // xi_p == eps_p here, so the first N auxiliary points already form a
        // valid main support.
        main_.dim = d_;
        main_.points.assign(aux_.points.begin(),
                            aux_.points.begin() + static_cast<std::size_t>(cfg_.N) * d_);
        main_.log_weights.assign(cfg_.N, 0.0);
        main_.weight_comp.assign(cfg_.N, 0.0);
    } else {
        Rng rng_main = Rng::substream(seed_, sched_.p, Rng::Role::main_support);
        if (meanfield_)
            gen_support_F_mf(t_p, center, xi_p, static_cast<int>(cfg_.N), partition_, rng_main,
                             main_);
        else
            gen_support_F(t_p, center, xi_p, static_cast<int>(cfg_.N), rng_main, main_);
    }

    reset_weights(main_, t_p);
    reset_weights(aux_, t_p);
    main_center_ = center;
    main_radius_ = xi_p;
    aux_center_ = vartheta_bar;
    aux_radius_ = eps_p;
    structured_ = true;

    // Fresh exploration pool around the auxiliary mode.
    Rng rng_pool = Rng::substream(seed_, sched_.p, Rng::Role::pool);
    n_uniform_pool_ = aux_pool_sampler(aux_mode, xi_p, sigma_, cfg_.N_aux, rng_pool, pool_);

    TraceRow row;
    row.t = t_p;
    row.p = sched_.p;
    row.xi = xi_p;
    row.eps = eps_p;
    row.q = sched_.q;
    row.branch = branch;
    row.gt_branch = gt_branch;
    row.estimate = theta_bar;
    if (truth_) row.error = max_norm_dist(theta_bar, *truth_);
    row.ess = rho_ess_;
    row.tau = tau_current_;
    row.partition = partition_.digest();
    const std::int64_t block_len = sched_.t_cur - sched_.t_prev;
    row.wall_ns_per_obs = block_len > 0 ? block_wall_ns_ / static_cast<double>(block_len) : 0.0;
    row.rss_kb = timing_ ? current_rss_kb() : 0;
    rows_.push_back(std::move(row));
    block_wall_ns_ = 0.0;

    // Advance to perturbation p+1; the new block length fixes tau.
    const double measured_ess = rho_ess_;
    advance_schedule(sched_, sched_cfg_);
    const TauAdaptation ta =
        adapt_tau(sched_.t_cur - sched_.t_prev, T_,
                  snapped_this_block_ ? std::optional<double>(measured_ess) : std::nullopt,
                  n_uniform_pool_);
    T_ = ta.T;
    tau_current_ = ta.tau;
    snapped_this_block_ = false;
    rho_ready_ = false;
}

void Engine::apply_batch() {
    const int count = batch_.count;
    if (count == 0) return;
    evals_ += static_cast<std::int64_t>(count) *
              (main_.size() + aux_.size() + pool_.size());

    std::atomic<bool> failed{false};
    std::mutex err_mutex;
    std::string err_msg;

    const auto process = [&](ParticleSystem& sys, std::int64_t lo, std::int64_t hi) {
        std::array<double, 256> buf;
        for (std::int64_t n = lo; n < hi; ++n) {
            model_.log_density_batch(sys.point(static_cast<int>(n)), batch_,
                                     std::span<double>(buf.data(), count));
            for (int s = 0; s < count; ++s) {
                if (!std::isfinite(buf[s])) {
                    if (!failed.exchange(true)) {
                        std::lock_guard<std::mutex> lock(err_mutex);
                        err_msg = "non-finite log-density at observation " +
                                  std::to_string(t_ + s + 1);
                    }
                    return;
                }
                sys.add_log_weight(static_cast<int>(n), buf[s]);
            }
        }
    };

    const std::int64_t n_main = main_.size();
    const std::int64_t n_aux = aux_.size();
    const std::int64_t total = n_main + n_aux + pool_.size();
    parallel_apply(cfg_.threads, total, [&](std::int64_t lo, std::int64_t hi) {
        // Pre-assigned slot ranges across the three systems.
        const std::int64_t m_lo = std::min(lo, n_main), m_hi = std::min(hi, n_main);
        if (m_lo < m_hi) process(main_, m_lo, m_hi);
        const std::int64_t a_lo = std::clamp(lo - n_main, std::int64_t{0}, n_aux);
        const std::int64_t a_hi = std::clamp(hi - n_main, std::int64_t{0}, n_aux);
        if (a_lo < a_hi) process(aux_, a_lo, a_hi);
        const std::int64_t p_lo = std::max(std::int64_t{0}, lo - n_main - n_aux);
        const std::int64_t p_hi = std::max(std::int64_t{0}, hi - n_main - n_aux);
        if (p_lo < p_hi) process(pool_, p_lo, p_hi);
    });

    if (failed.load()) throw ModelEvalError("engine: " + err_msg + "; run aborted");
}

void Engine::step(const Observation& y) {
    if (t_ == sched_.t_cur) run_perturbation();
    batch_.clear();
    batch_.push(y);
    apply_batch();
    t_ += 1;
    if (!snapped_this_block_ && t_ == sched_.t_prev + tau_current_)
        take_correlation_snapshot();
}

void Engine::append_sample_row() {
    TraceRow row;
    row.t = t_;
    row.p = sched_.p;
    row.xi = sched_.xi;
    row.eps = sched_.eps_p;
    row.q = sched_.q;
    row.estimate = current_estimate();
    if (truth_) row.error = max_norm_dist(row.estimate, *truth_);
    row.ess = rho_ess_;
    row.tau = tau_current_;
    row.partition = partition_.digest();
    row.rss_kb = timing_ ? current_rss_kb() : 0;
    row.is_perturbation = false;
    rows_.push_back(std::move(row));
}

RunReport Engine::run(ObservationStream& stream, std::int64_t horizon, const Vec* truth,
                      std::int64_t sample_every) {
    if (truth) truth_ = *truth;
    using clock = std::chrono::steady_clock;
    const auto run_start = clock::now();

    Observation pending;
    bool have_pending = false;
    bool exhausted = false;

    while (t_ < horizon && !exhausted) {
        if (!have_pending) {
            if (!stream.next(pending)) break;
            have_pending = true;
        }
        if (t_ == sched_.t_cur) run_perturbation();

        std::int64_t next_stop = std::min(horizon, sched_.t_cur);
        const std::int64_t snap_t = sched_.t_prev + tau_current_;
        if (!snapped_this_block_ && snap_t > t_) next_stop = std::min(next_stop, snap_t);
        if (sample_every > 0) {
            const std::int64_t sample_t = (t_ / sample_every + 1) * sample_every;
            next_stop = std::min(next_stop, sample_t);
        }
        const auto room = static_cast<int>(std::min<std::int64_t>(cfg_.batch, next_stop - t_));

        batch_.clear();
        batch_.push(pending);
        have_pending = false;
        while (batch_.count < room) {
            if (!stream.next(pending)) {
                exhausted = true;
                break;
            }
            batch_.push(pending);
        }

        const auto t0 = clock::now();
        apply_batch();
        const double ns = std::chrono::duration<double, std::nano>(clock::now() - t0).count();
        block_wall_ns_ += ns;

        t_ += batch_.count;
        if (!snapped_this_block_ && t_ == snap_t) take_correlation_snapshot();
        if (sample_every > 0 && t_ % sample_every == 0) append_sample_row();
    }

    total_wall_ns_ += std::chrono::duration<double, std::nano>(clock::now() - run_start).count();
    return report();
}

RunReport Engine::report() const {
    RunReport rep;
    rep.rows = rows_;
    rep.final_estimate = current_estimate();
    rep.final_partition = partition_;
    rep.observations = t_;
    rep.perturbations = sched_.p - 1;
    rep.likelihood_evals = evals_;
    rep.wall_ns_per_obs = t_ > 0 ? total_wall_ns_ / static_cast<double>(t_) : 0.0;
    return rep;
}

Vec Engine::current_estimate() const {
    return posterior_mean(main_);
}

}  // namespace pbi
