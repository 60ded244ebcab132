#pragma once

#include <optional>
#include <string>

#include "pbi/estimators.hpp"
#include "pbi/linalg.hpp"
#include "pbi/support.hpp"

namespace pbi {

// Ordered disjoint blocks of coordinate indices covering 0..d-1, with a
// per-block cell resolution.
struct Partition {
    std::vector<std::vector<int>> blocks;
    std::vector<int> resolutions;

    int R() const { return static_cast<int>(blocks.size()); }
    int dim() const;
    void validate(std::int64_t N) const;   // coverage, disjointness, cost <= N
    std::string digest() const;            // canonical, 1-based, e.g. "1,11:20|2:10"
    bool same_blocks(const Partition& other) const;
};

// R_N: smallest R for which a 2-exhaustive exploration of some R-block split
// of the coordinates fits in N particles.  Requires N >= 2d.
int r_of_n(std::int64_t N, int d);

// Balanced block sizes (larger blocks first, sizes differ by at most one).
std::vector<int> balanced_sizes(int d, int R);

// Common resolution K with sum_r (K+1)^{s_r} > N >= sum_r K^{s_r} over the
// balanced sizes.
int kn_mf(std::int64_t N, int d, int R);

// Greedy per-block refinement: raise individual resolutions (largest cost
// increase first, ties to the lowest block) while the total stays <= N.
std::vector<int> per_block_resolutions(std::int64_t N, const std::vector<int>& sizes,
                                       int base_k);

// Partition with the given blocks and maximal per-block resolutions.
Partition make_partition(std::int64_t N, const std::vector<std::vector<int>>& blocks);

// Contiguous balanced partition; the fallback before any correlation
// estimate exists.
Partition default_partition(std::int64_t N, int d);

// Mean-field support mapping: per-block cell centroids of each coordinate
// slice of B_eps(mu) (off-block coordinates frozen at mu), surplus points
// drawn uniformly in block cells, cycling blocks and cells.  With R = 1 this
// reproduces gen_support_F bit for bit.
void gen_support_F_mf(std::int64_t t, std::span<const double> mu, double eps, int N,
                      const Partition& part, Rng& rng, ParticleSystem& out);

// Blockwise weighted means assembled into one vector (Condition MF4).
Vec estimate_G_mf(const ParticleSystem& sys, const Partition& part,
                  std::span<const double> mu, double eps);

// Index layout of the mean-field auxiliary system: N grid points, then for
// each exploration draw n its per-block embeddings (off-block coordinates at
// mu), then the M' global exploration points themselves (the first being the
// Student-t draw).
struct MfAuxLayout {
    int N{0};
    int R{1};
    int M_prime{2};

    int M() const { return (R + 1) * M_prime; }
    int total() const { return N + M(); }
    int embed_index(int r, int n) const { return N + n * R + r; }
    int global_index(int n) const { return N + R * M_prime + n; }
};

void gen_support_Ftilde_mf(std::int64_t t, std::span<const double> mu, double eps,
                           const MfAuxLayout& layout, const Partition& part,
                           const AuxParams& aux, const std::vector<ScoredCandidate>& pool,
                           Rng& rng, ParticleSystem& out);

// Per-block ball-mass statistics Z_r; the estimate takes the blockwise
// reweighted means when min_r Z_r > Delta and the global mode otherwise.
// With R = 1 this delegates to estimate_Gtilde.
Vec estimate_Gtilde_mf(const AuxEstimateInputs& in, const Partition& part, int M_prime,
                       const GtWeights& gw, GtBranch* branch = nullptr);
double compute_Zr(const AuxEstimateInputs& in, const Partition& part, int M_prime,
                  const GtWeights& gw, int r);

// Importance-weighted correlation matrix of a weighted point set.
struct CorrEstimate {
    Matrix rho;
    double ess{0.0};
    std::int64_t tau{0};
    double T{3.0};
};

Matrix weighted_correlation(std::span<const double> points, int n, int d,
                            std::span<const double> weights);

double ess(std::span<const double> weights);

// ESS-adaptive block length: T drifts by 0.1 to keep the effective sample
// size inside (floor(N_mf/2)/4, 3 floor(N_mf/2)/4); tau = floor(t_gap^{1/T}).
struct TauAdaptation {
    std::int64_t tau{1};
    double T{3.0};
};
TauAdaptation adapt_tau(std::int64_t t_gap, double T_prev, std::optional<double> ess_prev,
                        std::int64_t N_mf);

// Minimum R-cut of |rho| over partitions whose size multiset is feasible,
// i.e. sum_r feas_k^{s_r} <= N.  Exact by enumeration when the state space
// allows (all of R = 2 up to d = 20), greedy swap refinement with restarts
// otherwise.
Partition min_rcut_partition(const Matrix& rho_hat, int R, std::int64_t N, int feas_k);

// Cross-block sum of absolute correlations (unordered pairs).
double rcut_objective(const Matrix& rho_hat, const Partition& part);

// Exploration pool: floor(N_aux/2) uniform draws on the box center +- xi,
// the remainder Gaussian around the same centre.  Returns the number of
// uniform-role points.
std::int64_t aux_pool_sampler(std::span<const double> center, double xi, const Matrix& sigma,
                              std::int64_t N_aux, Rng& rng, ParticleSystem& out);

// Sigma_t = 10 rho_hat, floored to SPD.
Matrix sigma_update(const Matrix& rho_hat);

}  // namespace pbi
