#pragma once

#include "pbi/particle.hpp"

namespace pbi {

// Constants of the stabilized auxiliary estimate.
struct GtWeights {
    double Delta{0.95};
    double zeta1{1.0};
    double zeta2{0.5};
    double zeta3{1.0};
    double zeta4{0.5};
    double kappa{0.9};

    void validate() const;
};

// Inputs of the auxiliary point-estimate mapping at a perturbation: the
// (N+M)-particle system, the radius eps_{p-1} and centre mu = the previous
// auxiliary estimate.  Aux layout: points 0..N-1 grid, point N the
// exploratory Student-t, points N+1..N+M-1 exploration candidates.
struct AuxEstimateInputs {
    const ParticleSystem* sys{nullptr};
    int N{0};
    int M{0};
    double eps{1.0};
    std::span<const double> mu;
};

enum class GtBranch { mean, mode };

// Weighted posterior mean (Condition G).
Vec estimate_G(const ParticleSystem& sys);

// Mode of the auxiliary system; ties broken by lowest index.
Vec estimate_Gtilde_mode(const AuxEstimateInputs& in);

// Reweighted mass of B_{(1+kappa)eps}(mu) under the a_n-tilted weights.
double compute_Zt(const AuxEstimateInputs& in, const GtWeights& gw);

// Full auxiliary estimate: the hat-a reweighted mean over the grid points
// and the exploration points inside B_{(1+2kappa)eps}(mu) when Z_t > Delta,
// the mode otherwise.
Vec estimate_Gtilde(const AuxEstimateInputs& in, const GtWeights& gw,
                    GtBranch* branch = nullptr);

}  // namespace pbi
