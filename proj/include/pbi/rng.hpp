#pragma once

#include <cstdint>

#include "pbi/common.hpp"

namespace pbi {

// Deterministic generator (xoshiro256++) with explicit sub-stream derivation.
// Every random draw in a run comes from a stream keyed by (root seed,
// perturbation index, role), so results do not depend on thread count or on
// the order in which independent components consume randomness.
class Rng {
public:
    enum class Role : std::uint64_t {
        init_main = 1,
        init_aux = 2,
        main_support = 3,
        aux_support = 4,
        student_t = 5,
        pool = 6,
        data = 7,
        shuffle = 8,
        misc = 9,
    };

    explicit Rng(std::uint64_t seed);
    static Rng substream(std::uint64_t root_seed, std::uint64_t p, Role role);

    std::uint64_t next_u64();
    double uniform();                       // [0, 1)
    double uniform(double a, double b);     // a + (b-a) * uniform()
    double normal();                        // inverse-CDF, deterministic
    double gamma(double shape);             // scale 1, shape > 0
    double chi_squared(double nu);

private:
    std::uint64_t s_[4];
};

}  // namespace pbi
