#include "pbi/support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pbi {

std::int64_t checked_pow(std::int64_t k, int d, std::int64_t cap) {
    std::int64_t r = 1;
    for (int i = 0; i < d; ++i) {
        if (r > cap / k) return cap + 1;
        r *= k;
    }
    return r;
}

int k_of_n(std::int64_t N, int d) {
    if (N < 1 || d < 1) throw ConfigError("k_of_n: need N >= 1, d >= 1");
    int k = 1;
    while (checked_pow(k + 1, d, N) <= N) ++k;
    return k;
}

std::int64_t BallGrid::cells() const {
    return checked_pow(cells_per_axis, dim(), std::numeric_limits<std::int64_t>::max() / 2);
}

void BallGrid::centroid(std::int64_t j, std::span<double> out) const {
    const int d = dim();
    const double side = 2.0 * eps / cells_per_axis;
    for (int i = d - 1; i >= 0; --i) {
        const auto digit = j % cells_per_axis;
        j /= cells_per_axis;
        out[i] = center[i] - eps + (static_cast<double>(digit) + 0.5) * side;
    }
}

void BallGrid::uniform_in_cell(std::int64_t j, Rng& rng, std::span<double> out) const {
    const int d = dim();
    const double side = 2.0 * eps / cells_per_axis;
    for (int i = d - 1; i >= 0; --i) {
        const auto digit = j % cells_per_axis;
        j /= cells_per_axis;
        out[i] = center[i] - eps + (static_cast<double>(digit) + rng.uniform()) * side;
    }
}

std::int64_t BallGrid::locate(std::span<const double> point) const {
    const int d = dim();
    const double side = 2.0 * eps / cells_per_axis;
    std::int64_t j = 0;
    for (int i = 0; i < d; ++i) {
        const double off = point[i] - (center[i] - eps);
        if (off < 0.0 || off > 2.0 * eps) return -1;
        auto digit = static_cast<std::int64_t>(off / side);
        digit = std::clamp<std::int64_t>(digit, 0, cells_per_axis - 1);
        j = j * cells_per_axis + digit;
    }
    return j;
}

void gen_support_F(std::int64_t, std::span<const double> mu, double eps, int N, Rng& rng,
                   ParticleSystem& out) {
    const int d = static_cast<int>(mu.size());
    if (checked_pow(2, d, N) > N)
        throw ConfigError(
            "gen_support_F: N < 2^d; full-dimensional exploration is infeasible, use the "
            "mean-field mappings");
    if (!(eps > 0.0)) throw ConfigError("gen_support_F: eps must be > 0");

    out.dim = d;
    out.points.assign(static_cast<std::size_t>(N) * d, 0.0);
    out.log_weights.assign(N, 0.0);
    out.weight_comp.assign(N, 0.0);

    BallGrid grid{Vec(mu.begin(), mu.end()), eps, k_of_n(N, d)};
    const std::int64_t cells = grid.cells();
    for (std::int64_t j = 0; j < cells; ++j) grid.centroid(j, out.mutable_point(j));
    for (std::int64_t i = 0; cells + i < N; ++i)
        grid.uniform_in_cell(i % cells, rng, out.mutable_point(static_cast<int>(cells + i)));
}

Vec clamp_g(std::span<const double> theta, double L) {
    Vec out(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i)
        out[i] = std::min(L, std::max(-L, theta[i]));
    return out;
}

Vec draw_student_t(std::span<const double> mu, const Matrix& sigma, double nu, double L,
                   Rng& rng) {
    const int d = static_cast<int>(mu.size());
    const Matrix chol = cholesky(sigma);  // throws ConfigError if not SPD
    Vec z(d);
    for (auto& v : z) v = rng.normal();
    Vec scaled(d);
    lower_tri_matvec(chol, z, scaled);
    const double w = std::sqrt(nu / rng.chi_squared(nu));
    Vec out = clamp_g(mu, L);
    for (int i = 0; i < d; ++i) out[i] += scaled[i] * w;
    return out;
}

void gen_support_Ftilde(std::int64_t t, std::span<const double> mu, double eps, int N,
                        const AuxParams& aux, const std::vector<ScoredCandidate>& pool,
                        Rng& rng, ParticleSystem& out) {
    const int d = static_cast<int>(mu.size());
    ParticleSystem head;
    gen_support_F(t, mu, eps, N, rng, head);

    out.dim = d;
    out.points.assign(static_cast<std::size_t>(N + aux.M) * d, 0.0);
    out.log_weights.assign(N + aux.M, 0.0);
    out.weight_comp.assign(N + aux.M, 0.0);
    std::copy(head.points.begin(), head.points.end(), out.points.begin());

    const Vec tpoint = draw_student_t(mu, aux.sigma, aux.nu, aux.clamp_L, rng);
    std::copy(tpoint.begin(), tpoint.end(), out.mutable_point(N).begin());

    // Remaining slots by descending block log-likelihood, argmax first.
    std::vector<int> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return pool[a].score > pool[b].score; });
    for (int m = 1; m < aux.M; ++m) {
        auto dst = out.mutable_point(N + m);
        if (m - 1 < static_cast<int>(order.size())) {
            const Vec& src = pool[order[m - 1]].theta;
            std::copy(src.begin(), src.end(), dst.begin());
        } else {
            const Vec extra = draw_student_t(mu, aux.sigma, aux.nu, aux.clamp_L, rng);
            std::copy(extra.begin(), extra.end(), dst.begin());
        }
    }
}

}  // namespace pbi
