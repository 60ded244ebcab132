#pragma once

#include <cstdint>

#include "pbi/linalg.hpp"
#include "pbi/particle.hpp"
#include "pbi/rng.hpp"

namespace pbi {

// k^d clipped at cap+1 so feasibility checks never overflow.
std::int64_t checked_pow(std::int64_t k, int d, std::int64_t cap);

// K_N = max{k : k^d <= N}
int k_of_n(std::int64_t N, int d);

// Equal-volume hypercube partition of the max-norm ball B_eps(mu), K cells
// per axis, row-major cell indexing (axis 0 slowest).
struct BallGrid {
    Vec center;
    double eps{1.0};
    int cells_per_axis{1};

    int dim() const { return static_cast<int>(center.size()); }
    std::int64_t cells() const;
    void centroid(std::int64_t j, std::span<double> out) const;
    void uniform_in_cell(std::int64_t j, Rng& rng, std::span<double> out) const;
    std::int64_t locate(std::span<const double> point) const;  // -1 if outside
};

struct AuxParams {
    double nu{3.0};
    double clamp_L{500.0};
    Matrix sigma;     // d x d SPD scale of the exploratory Student-t
    int M{2};         // auxiliary extras
    std::int64_t N_aux{1000};
};

// A parameter with its accumulated block log-likelihood.
struct ScoredCandidate {
    Vec theta;
    double score{0.0};
};

// Support mapping F: the first K_N^d points are the cell centroids, the
// surplus is drawn uniformly one cell at a time so no cell ever exceeds
// ceil(N / K_N^d) + 1 occupants.  Requires N >= 2^d.
void gen_support_F(std::int64_t t, std::span<const double> mu, double eps, int N, Rng& rng,
                   ParticleSystem& out);

// Componentwise projection onto [-L, L]^d (the max-norm argmin).
Vec clamp_g(std::span<const double> theta, double L);

// Multivariate Student-t with location clamp_g(mu, L), scale Sigma, dof nu,
// sampled through the scale-mixture representation.
Vec draw_student_t(std::span<const double> mu, const Matrix& sigma, double nu, double L,
                   Rng& rng);

// Support mapping F~: points 1..N as gen_support_F around mu, point N+1 the
// exploratory Student-t, points N+2..N+M the best exploration candidates by
// descending block log-likelihood.  An exhausted candidate pool is padded
// with further independent Student-t draws.
void gen_support_Ftilde(std::int64_t t, std::span<const double> mu, double eps, int N,
                        const AuxParams& aux, const std::vector<ScoredCandidate>& pool,
                        Rng& rng, ParticleSystem& out);

}  // namespace pbi
