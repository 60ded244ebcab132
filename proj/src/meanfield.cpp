#include "pbi/meanfield.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace pbi {

int Partition::dim() const {
    int d = 0;
    for (const auto& b : blocks) d += static_cast<int>(b.size());
    return d;
}

void Partition::validate(std::int64_t N) const {
    const int d = dim();
    if (blocks.empty()) throw ConfigError("partition: no blocks");
    if (resolutions.size() != blocks.size())
        throw ConfigError("partition: one resolution per block required");
    std::vector<char> seen(d, 0);
    for (const auto& b : blocks) {
        if (b.empty()) throw ConfigError("partition: empty block");
        for (int i : b) {
            if (i < 0 || i >= d || seen[i]) throw ConfigError("partition: bad coverage");
            seen[i] = 1;
        }
    }
    std::int64_t cost = 0;
    for (int r = 0; r < R(); ++r) {
        if (resolutions[r] < 1) throw ConfigError("partition: resolution must be >= 1");
        cost += checked_pow(resolutions[r], static_cast<int>(blocks[r].size()), N);
        if (cost > N) throw ConfigError("partition: cell count exceeds N");
    }
}

namespace {

std::vector<std::vector<int>> canonical_blocks(std::vector<std::vector<int>> blocks) {
    for (auto& b : blocks) std::sort(b.begin(), b.end());
    std::sort(blocks.begin(), blocks.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return blocks;
}

}  // namespace

std::string Partition::digest() const {
    const auto canon = canonical_blocks(blocks);
    std::ostringstream os;
    for (std::size_t r = 0; r < canon.size(); ++r) {
        if (r) os << '|';
        const auto& b = canon[r];
        std::size_t i = 0;
        bool first = true;
        while (i < b.size()) {
            std::size_t j = i;
            while (j + 1 < b.size() && b[j + 1] == b[j] + 1) ++j;
            if (!first) os << ',';
            first = false;
            if (j > i + 1)
                os << b[i] + 1 << ':' << b[j] + 1;
            else if (j == i + 1)
                os << b[i] + 1 << ',' << b[j] + 1;
            else
                os << b[i] + 1;
            i = j + 1;
        }
    }
    return os.str();
}

bool Partition::same_blocks(const Partition& other) const {
    return canonical_blocks(blocks) == canonical_blocks(other.blocks);
}

int r_of_n(std::int64_t N, int d) {
    if (N < 2 * d)
        throw ConfigError("r_of_n: the mean-field mappings need N >= 2d");
    for (int R = 1; R <= d; ++R) {
        const auto sizes = balanced_sizes(d, R);
        std::int64_t cost = 0;
        for (int s : sizes) cost += checked_pow(2, s, N);
        if (cost <= N) return R;
    }
    throw ConfigError("r_of_n: infeasible");  // unreachable for N >= 2d
}

std::vector<int> balanced_sizes(int d, int R) {
    std::vector<int> sizes(R, d / R);
    for (int r = 0; r < d % R; ++r) sizes[r] += 1;
    return sizes;
}

int kn_mf(std::int64_t N, int d, int R) {
    const auto sizes = balanced_sizes(d, R);
    int k = 1;
    for (;;) {
        std::int64_t cost = 0;
        for (int s : sizes) cost += checked_pow(k + 1, s, N);
        if (cost > N) return k;
        ++k;
    }
}

std::vector<int> per_block_resolutions(std::int64_t N, const std::vector<int>& sizes,
                                       int base_k) {
    const int R = static_cast<int>(sizes.size());
    std::vector<int> ks(R, base_k);
    auto total = [&]() {
        std::int64_t c = 0;
        for (int r = 0; r < R; ++r) c += checked_pow(ks[r], sizes[r], N);
        return c;
    };
    for (;;) {
        int best = -1;
        std::int64_t best_marginal = -1;
        const std::int64_t cur = total();
        for (int r = 0; r < R; ++r) {
            const std::int64_t now = checked_pow(ks[r], sizes[r], N);
            const std::int64_t up = checked_pow(ks[r] + 1, sizes[r], N);
            if (up > N || cur - now + up > N) continue;
            const std::int64_t marginal = up - now;
            if (marginal > best_marginal) {
                best_marginal = marginal;
                best = r;
            }
        }
        if (best < 0) break;
        ks[best] += 1;
    }
    return ks;
}

Partition make_partition(std::int64_t N, const std::vector<std::vector<int>>& blocks) {
    Partition p;
    p.blocks = canonical_blocks(blocks);
    std::vector<int> sizes;
    sizes.reserve(p.blocks.size());
    for (const auto& b : p.blocks) sizes.push_back(static_cast<int>(b.size()));
    int k = 1;
    for (;;) {
        std::int64_t cost = 0;
        for (int s : sizes) cost += checked_pow(k + 1, s, N);
        if (cost > N) break;
        ++k;
    }
    p.resolutions = per_block_resolutions(N, sizes, k);
    p.validate(N);
    return p;
}

Partition default_partition(std::int64_t N, int d) {
    const int R = r_of_n(N, d);
    const auto sizes = balanced_sizes(d, R);
    std::vector<std::vector<int>> blocks(R);
    int next = 0;
    for (int r = 0; r < R; ++r)
        for (int s = 0; s < sizes[r]; ++s) blocks[r].push_back(next++);
    return make_partition(N, blocks);
}

// ---- support generation ----------------------------------------------------

namespace {

// Centroid / uniform draw of sub-cell j of the block slice; loop order over
// the block's coordinates mirrors BallGrid so that the R = 1 case consumes
// the rng identically to gen_support_F.
void slice_centroid(std::span<const double> mu, const std::vector<int>& coords, double eps,
                    int K, std::int64_t j, std::span<double> out) {
    const double side = 2.0 * eps / K;
    for (int idx = static_cast<int>(coords.size()) - 1; idx >= 0; --idx) {
        const auto digit = j % K;
        j /= K;
        const int c = coords[idx];
        out[c] = mu[c] - eps + (static_cast<double>(digit) + 0.5) * side;
    }
}

void slice_uniform(std::span<const double> mu, const std::vector<int>& coords, double eps,
                   int K, std::int64_t j, Rng& rng, std::span<double> out) {
    const double side = 2.0 * eps / K;
    for (int idx = static_cast<int>(coords.size()) - 1; idx >= 0; --idx) {
        const auto digit = j % K;
        j /= K;
        const int c = coords[idx];
        out[c] = mu[c] - eps + (static_cast<double>(digit) + rng.uniform()) * side;
    }
}

// point lies in the slice of block r: off-block coordinates exactly mu,
// block coordinates within `radius`.
bool in_slice(std::span<const double> point, std::span<const double> mu,
              const std::vector<int>& block_coords, const std::vector<int>& coord_block,
              int r, double radius) {
    const int d = static_cast<int>(mu.size());
    for (int i = 0; i < d; ++i) {
        if (coord_block[i] != r && point[i] != mu[i]) return false;
    }
    for (int c : block_coords)
        if (std::fabs(point[c] - mu[c]) > radius) return false;
    return true;
}

double block_dist(std::span<const double> point, std::span<const double> mu,
                  const std::vector<int>& coords) {
    double m = 0.0;
    for (int c : coords) m = std::max(m, std::fabs(point[c] - mu[c]));
    return m;
}

std::vector<int> coord_block_of(const Partition& part, int d) {
    std::vector<int> cb(d, -1);
    for (int r = 0; r < part.R(); ++r)
        for (int c : part.blocks[r]) cb[c] = r;
    return cb;
}

}  // namespace

void gen_support_F_mf(std::int64_t, std::span<const double> mu, double eps, int N,
                      const Partition& part, Rng& rng, ParticleSystem& out) {
    const int d = static_cast<int>(mu.size());
    part.validate(N);
    if (!(eps > 0.0)) throw ConfigError("gen_support_F_mf: eps must be > 0");

    out.dim = d;
    out.points.resize(static_cast<std::size_t>(N) * d);
    out.log_weights.assign(N, 0.0);
    out.weight_comp.assign(N, 0.0);
    for (int n = 0; n < N; ++n)
        std::copy(mu.begin(), mu.end(), out.mutable_point(n).begin());

    const int R = part.R();
    std::vector<std::int64_t> cells(R);
    for (int r = 0; r < R; ++r)
        cells[r] = checked_pow(part.resolutions[r], static_cast<int>(part.blocks[r].size()), N);

    int idx = 0;
    for (int r = 0; r < R; ++r)
        for (std::int64_t j = 0; j < cells[r]; ++j)
            slice_centroid(mu, part.blocks[r], eps, part.resolutions[r], j,
                           out.mutable_point(idx++));

    std::vector<std::int64_t> counter(R, 0);
    for (std::int64_t i = 0; idx < N; ++i) {
        const int r = static_cast<int>(i % R);
        const std::int64_t j = counter[r]++ % cells[r];
        slice_uniform(mu, part.blocks[r], eps, part.resolutions[r], j, rng,
                      out.mutable_point(idx++));
    }
}

Vec estimate_G_mf(const ParticleSystem& sys, const Partition& part,
                  std::span<const double> mu, double eps) {
    const int d = sys.dim;
    const auto coord_block = coord_block_of(part, d);
    Vec mean(d, 0.0);
    std::vector<int> members;
    Vec w;
    for (int r = 0; r < part.R(); ++r) {
        members.clear();
        for (int n = 0; n < sys.size(); ++n)
            if (in_slice(sys.point(n), mu, part.blocks[r], coord_block, r, eps))
                members.push_back(n);
        if (members.empty())
            throw PbiError("estimate_G_mf: block " + std::to_string(r) +
                           " has no support points in its slice");
        w.resize(members.size());
        double mx = -std::numeric_limits<double>::infinity();
        for (int n : members) mx = std::max(mx, sys.log_weights[n]);
        double s = 0.0;
        for (std::size_t j = 0; j < members.size(); ++j) {
            w[j] = std::exp(sys.log_weights[members[j]] - mx);
            s += w[j];
        }
        const double inv = 1.0 / s;
        for (auto& v : w) v *= inv;
        for (std::size_t j = 0; j < members.size(); ++j) {
            const auto pt = sys.point(members[j]);
            for (int c : part.blocks[r]) mean[c] += w[j] * pt[c];
        }
    }
    return mean;
}

void gen_support_Ftilde_mf(std::int64_t t, std::span<const double> mu, double eps,
                           const MfAuxLayout& layout, const Partition& part,
                           const AuxParams& aux, const std::vector<ScoredCandidate>& pool,
                           Rng& rng, ParticleSystem& out) {
    const int d = static_cast<int>(mu.size());
    const int total = layout.total();

    ParticleSystem grid;
    gen_support_F_mf(t, mu, eps, layout.N, part, rng, grid);

    out.dim = d;
    out.points.resize(static_cast<std::size_t>(total) * d);
    out.log_weights.assign(total, 0.0);
    out.weight_comp.assign(total, 0.0);
    std::copy(grid.points.begin(), grid.points.end(), out.points.begin());

    // Global exploration points: the Student-t first, then the best pool
    // candidates by descending block log-likelihood.
    std::vector<Vec> globals(layout.M_prime);
    globals[0] = draw_student_t(mu, aux.sigma, aux.nu, aux.clamp_L, rng);
    std::vector<int> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return pool[a].score > pool[b].score; });
    for (int n = 1; n < layout.M_prime; ++n) {
        if (n - 1 < static_cast<int>(order.size()))
            globals[n] = pool[order[n - 1]].theta;
        else
            globals[n] = draw_student_t(mu, aux.sigma, aux.nu, aux.clamp_L, rng);
    }

    for (int n = 0; n < layout.M_prime; ++n) {
        std::copy(globals[n].begin(), globals[n].end(),
                  out.mutable_point(layout.global_index(n)).begin());
        for (int r = 0; r < layout.R; ++r) {
            auto dst = out.mutable_point(layout.embed_index(r, n));
            std::copy(mu.begin(), mu.end(), dst.begin());
            for (int c : part.blocks[r]) dst[c] = globals[n][c];
        }
    }
}

double compute_Zr(const AuxEstimateInputs& in, const Partition& part, int M_prime,
                  const GtWeights& gw, int r) {
    const ParticleSystem& sys = *in.sys;
    const int d = sys.dim;
    const auto coord_block = coord_block_of(part, d);
    MfAuxLayout layout{in.N, part.R(), M_prime};

    std::vector<int> grid_members;
    for (int n = 0; n < in.N; ++n)
        if (in_slice(sys.point(n), in.mu, part.blocks[r], coord_block, r, in.eps))
            grid_members.push_back(n);

    double mx = -std::numeric_limits<double>::infinity();
    for (int n : grid_members) mx = std::max(mx, sys.log_weights[n]);
    for (int m = 0; m < M_prime; ++m)
        mx = std::max(mx, sys.log_weights[layout.embed_index(r, m)]);

    const double radius = (1.0 + gw.kappa) * in.eps;
    double num = 0.0, den = 0.0;
    if (!grid_members.empty()) {
        const double a_grid = gw.zeta1 * M_prime / static_cast<double>(grid_members.size());
        for (int n : grid_members) {
            const double v = a_grid * std::exp(sys.log_weights[n] - mx);
            den += v;
            if (block_dist(sys.point(n), in.mu, part.blocks[r]) <= radius) num += v;
        }
    }
    for (int m = 0; m < M_prime; ++m) {
        const int n = layout.embed_index(r, m);
        const double a = (m == 0) ? gw.zeta2 * M_prime : 1.0 - gw.zeta2;
        const double v = a * std::exp(sys.log_weights[n] - mx);
        den += v;
        if (block_dist(sys.point(n), in.mu, part.blocks[r]) <= radius) num += v;
    }
    return den > 0.0 ? num / den : 0.0;
}

Vec estimate_Gtilde_mf(const AuxEstimateInputs& in, const Partition& part, int M_prime,
                       const GtWeights& gw, GtBranch* branch) {
    const ParticleSystem& sys = *in.sys;
    if (part.R() == 1) {
        AuxEstimateInputs flat = in;
        flat.M = sys.size() - in.N;
        return estimate_Gtilde(flat, gw, branch);
    }

    const int R = part.R();
    double z = std::numeric_limits<double>::infinity();
    for (int r = 0; r < R; ++r) z = std::min(z, compute_Zr(in, part, M_prime, gw, r));
    if (!(z > gw.Delta)) {
        if (branch) *branch = GtBranch::mode;
        const auto pt = sys.point(mode_index(sys));
        return Vec(pt.begin(), pt.end());
    }
    if (branch) *branch = GtBranch::mean;

    const int d = sys.dim;
    const auto coord_block = coord_block_of(part, d);
    MfAuxLayout layout{in.N, R, M_prime};
    const double radius = (1.0 + 2.0 * gw.kappa) * in.eps;

    Vec out(d, 0.0);
    for (int r = 0; r < R; ++r) {
        std::vector<int> grid_members;
        for (int n = 0; n < in.N; ++n)
            if (in_slice(sys.point(n), in.mu, part.blocks[r], coord_block, r, in.eps))
                grid_members.push_back(n);
        std::vector<int> jr;  // embeddings inside the enlarged slice
        for (int m = 0; m < M_prime; ++m) {
            const int n = layout.embed_index(r, m);
            if (block_dist(sys.point(n), in.mu, part.blocks[r]) <= radius) jr.push_back(m);
        }
        if (grid_members.empty() && jr.empty())
            throw PbiError("estimate_Gtilde_mf: empty index set for block " + std::to_string(r));

        double mx = -std::numeric_limits<double>::infinity();
        for (int n : grid_members) mx = std::max(mx, sys.log_weights[n]);
        for (int m : jr) mx = std::max(mx, sys.log_weights[layout.embed_index(r, m)]);

        const double jsize = static_cast<double>(jr.size());
        double den = 0.0;
        Vec bmean(part.blocks[r].size(), 0.0);
        auto accumulate = [&](int n, double a) {
            const double v = a * std::exp(sys.log_weights[n] - mx);
            den += v;
            const auto pt = sys.point(n);
            for (std::size_t i = 0; i < part.blocks[r].size(); ++i)
                bmean[i] += v * pt[part.blocks[r][i]];
        };
        if (!grid_members.empty()) {
            const double a_grid =
                gw.zeta3 * std::max(1.0, jsize) / static_cast<double>(grid_members.size());
            for (int n : grid_members) accumulate(n, a_grid);
        }
        for (int m : jr)
            accumulate(layout.embed_index(r, m), m == 0 ? gw.zeta4 * jsize : 1.0 - gw.zeta4);
        for (std::size_t i = 0; i < part.blocks[r].size(); ++i)
            out[part.blocks[r][i]] = bmean[i] / den;
    }
    return out;
}

// ---- partition learning ----------------------------------------------------

Matrix weighted_correlation(std::span<const double> points, int n, int d,
                            std::span<const double> weights) {
    Vec mean(d, 0.0);
    for (int i = 0; i < n; ++i) {
        const double w = weights[i];
        const double* x = points.data() + static_cast<std::size_t>(i) * d;
        for (int c = 0; c < d; ++c) mean[c] += w * x[c];
    }
    Matrix cov(d);
    Vec centered(d);
    for (int i = 0; i < n; ++i) {
        const double w = weights[i];
        const double* x = points.data() + static_cast<std::size_t>(i) * d;
        for (int c = 0; c < d; ++c) centered[c] = x[c] - mean[c];
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) cov(a, b) += w * centered[a] * centered[b];
    }
    Matrix rho(d);
    for (int a = 0; a < d; ++a) rho(a, a) = 1.0;
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            const double va = cov(a, a), vb = cov(b, b);
            double r = 0.0;
            if (va > 1e-280 && vb > 1e-280) {
                r = cov(a, b) / std::sqrt(va * vb);
                r = std::clamp(r, -1.0, 1.0);
            }
            rho(a, b) = r;
            rho(b, a) = r;
        }
    }
    return rho;
}

double ess(std::span<const double> weights) {
    double s = 0.0;
    for (double w : weights) s += w * w;
    return 1.0 / s;
}

TauAdaptation adapt_tau(std::int64_t t_gap, double T_prev, std::optional<double> ess_prev,
                        std::int64_t N_mf) {
    TauAdaptation out;
    out.T = T_prev;
    if (ess_prev) {
        const double band = static_cast<double>(N_mf / 2);
        if (*ess_prev < band / 4.0)
            out.T = T_prev + 0.1;
        else if (*ess_prev > 3.0 * band / 4.0)
            out.T = std::max(1.0, T_prev - 0.1);
    }
    const double g = static_cast<double>(t_gap);
    auto k = static_cast<std::int64_t>(std::floor(std::pow(g, 1.0 / out.T) + 1e-9));
    while (k > 1 && std::pow(static_cast<double>(k), out.T) > g + 1e-9) --k;
    while (std::pow(static_cast<double>(k + 1), out.T) <= g + 1e-9) ++k;
    out.tau = std::max<std::int64_t>(1, std::min(k, t_gap));
    return out;
}

double rcut_objective(const Matrix& rho_hat, const Partition& part) {
    const int d = rho_hat.n;
    const auto coord_block = coord_block_of(part, d);
    double s = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (coord_block[i] != coord_block[j]) s += std::fabs(rho_hat(i, j));
    return s;
}

namespace {

Partition partition_from_blocks(std::int64_t N, std::vector<std::vector<int>> blocks) {
    return make_partition(N, std::move(blocks));
}

// Exact minimum cut over two blocks via Gray-code enumeration of the subsets
// containing coordinate 0.
Partition min_rcut_two_blocks(const Matrix& rho, std::int64_t N, int feas_k) {
    const int d = rho.n;
    Vec row(d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (j != i) row[i] += std::fabs(rho(i, j));

    std::vector<char> feasible_size(d, 0);
    for (int b = 1; b < d; ++b) {
        const std::int64_t cost =
            checked_pow(feas_k, d - b, N) + checked_pow(feas_k, b, N);
        feasible_size[b] = cost <= N;
    }

    std::vector<char> in_b(d, 0);
    Vec sum_b(d, 0.0);  // sum of |rho(c, j)| over j currently in block B
    double cut = 0.0;
    int size_b = 0;

    double best = std::numeric_limits<double>::infinity();
    std::uint64_t best_mask = 0;

    const std::uint64_t states = 1ULL << (d - 1);
    std::uint64_t gray = 0;
    for (std::uint64_t i = 1; i < states; ++i) {
        const int bit = std::countr_zero(i);
        const int c = bit + 1;  // coordinate 0 stays in block A
        gray ^= 1ULL << bit;
        if (in_b[c]) {
            in_b[c] = 0;
            --size_b;
            cut += 2.0 * sum_b[c] - row[c];
            for (int j = 0; j < d; ++j)
                if (j != c) sum_b[j] -= std::fabs(rho(j, c));
        } else {
            in_b[c] = 1;
            ++size_b;
            cut += row[c] - 2.0 * sum_b[c];
            for (int j = 0; j < d; ++j)
                if (j != c) sum_b[j] += std::fabs(rho(j, c));
        }
        if (size_b >= 1 && feasible_size[size_b] && cut < best) {
            best = cut;
            best_mask = gray;
        }
    }
    if (!std::isfinite(best))
        throw ConfigError("min_rcut: no feasible two-block partition");

    std::vector<std::vector<int>> blocks(2);
    blocks[0].push_back(0);
    for (int c = 1; c < d; ++c) blocks[(best_mask >> (c - 1)) & 1 ? 1 : 0].push_back(c);
    return partition_from_blocks(N, std::move(blocks));
}

bool sizes_feasible(const std::vector<int>& sizes, std::int64_t N, int feas_k) {
    std::int64_t cost = 0;
    for (int s : sizes) {
        cost += checked_pow(feas_k, s, N);
        if (cost > N) return false;
    }
    return true;
}

// Canonical recursive enumeration for R >= 3; gives up (returns false) once
// the node budget is exhausted.
bool enumerate_exact(const Matrix& rho, int R, std::int64_t N, int feas_k,
                     std::vector<int>& assign, int coord, std::int64_t& budget,
                     double& best, std::vector<int>& best_assign) {
    const int d = rho.n;
    if (--budget < 0) return false;
    if (coord == d) {
        std::vector<int> sizes(R, 0);
        for (int c = 0; c < d; ++c) ++sizes[assign[c]];
        for (int s : sizes)
            if (s == 0) return true;
        if (!sizes_feasible(sizes, N, feas_k)) return true;
        double cut = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                if (assign[i] != assign[j]) cut += std::fabs(rho(i, j));
        if (cut < best) {
            best = cut;
            best_assign = assign;
        }
        return true;
    }
    int used = 0;
    for (int c = 0; c < coord; ++c) used = std::max(used, assign[c] + 1);
    const int limit = std::min(R - 1, used);
    for (int b = 0; b <= limit; ++b) {
        assign[coord] = b;
        if (!enumerate_exact(rho, R, N, feas_k, assign, coord + 1, budget, best, best_assign))
            return false;
    }
    return true;
}

Partition greedy_rcut(const Matrix& rho, int R, std::int64_t N, int feas_k) {
    const int d = rho.n;
    const auto sizes = balanced_sizes(d, R);
    if (!sizes_feasible(sizes, N, feas_k))
        throw ConfigError("min_rcut: balanced sizes infeasible");

    Rng rng = Rng::substream(0x9e3779b9ULL, static_cast<std::uint64_t>(d), Rng::Role::misc);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_assign;

    for (int restart = 0; restart < 32; ++restart) {
        std::vector<int> order(d);
        std::iota(order.begin(), order.end(), 0);
        if (restart > 0) {
            for (int i = d - 1; i > 0; --i) {
                const int j = static_cast<int>(rng.next_u64() % (i + 1));
                std::swap(order[i], order[j]);
            }
        }
        // Seed sizes: balanced, then a few random feasible unit transfers so
        // restarts cover unbalanced splits as well.
        std::vector<int> seed_sizes = sizes;
        if (restart > 0) {
            for (int step = 0; step < 2 * d; ++step) {
                const int from = static_cast<int>(rng.next_u64() % R);
                const int to = static_cast<int>(rng.next_u64() % R);
                if (from == to || seed_sizes[from] <= 1) continue;
                seed_sizes[from] -= 1;
                seed_sizes[to] += 1;
                if (!sizes_feasible(seed_sizes, N, feas_k)) {
                    seed_sizes[from] += 1;
                    seed_sizes[to] -= 1;
                }
            }
        }
        std::vector<int> assign(d);
        int pos = 0;
        for (int r = 0; r < R; ++r)
            for (int s = 0; s < seed_sizes[r]; ++s) assign[order[pos++]] = r;

        auto objective = [&]() {
            double cut = 0.0;
            for (int i = 0; i < d; ++i)
                for (int j = i + 1; j < d; ++j)
                    if (assign[i] != assign[j]) cut += std::fabs(rho(i, j));
            return cut;
        };
        std::vector<int> block_count(R, 0);
        for (int c = 0; c < d; ++c) ++block_count[assign[c]];
        auto move_feasible = [&](int from, int to) {
            if (block_count[from] <= 1) return false;
            std::vector<int> s;
            for (int r = 0; r < R; ++r) {
                int v = block_count[r] + (r == to) - (r == from);
                if (v > 0) s.push_back(v);
            }
            return sizes_feasible(s, N, feas_k);
        };

        double cur = objective();
        bool improved = true;
        while (improved) {
            improved = false;
            // swaps keep sizes, moves change them within feasibility
            for (int i = 0; i < d; ++i) {
                for (int j = i + 1; j < d; ++j) {
                    if (assign[i] == assign[j]) continue;
                    std::swap(assign[i], assign[j]);
                    const double cand = objective();
                    if (cand + 1e-15 < cur) {
                        cur = cand;
                        improved = true;
                    } else {
                        std::swap(assign[i], assign[j]);
                    }
                }
            }
            for (int i = 0; i < d; ++i) {
                for (int b = 0; b < R; ++b) {
                    const int old = assign[i];
                    if (b == old || !move_feasible(old, b)) continue;
                    assign[i] = b;
                    const double cand = objective();
                    if (cand + 1e-15 < cur) {
                        cur = cand;
                        improved = true;
                        --block_count[old];
                        ++block_count[b];
                    } else {
                        assign[i] = old;
                    }
                }
            }
        }
        if (cur < best) {
            best = cur;
            best_assign = assign;
        }
    }

    std::vector<std::vector<int>> blocks(R);
    for (int c = 0; c < d; ++c) blocks[best_assign[c]].push_back(c);
    return partition_from_blocks(N, std::move(blocks));
}

}  // namespace

Partition min_rcut_partition(const Matrix& rho_hat, int R, std::int64_t N, int feas_k) {
    const int d = rho_hat.n;
    if (R < 1) throw ConfigError("min_rcut: R must be >= 1");
    if (R == 1) {
        std::vector<std::vector<int>> all(1);
        for (int c = 0; c < d; ++c) all[0].push_back(c);
        return partition_from_blocks(N, std::move(all));
    }
    if (R == 2 && d <= 21) return min_rcut_two_blocks(rho_hat, N, feas_k);

    std::vector<int> assign(d, 0), best_assign;
    double best = std::numeric_limits<double>::infinity();
    std::int64_t budget = 2'000'000;
    if (enumerate_exact(rho_hat, R, N, feas_k, assign, 0, budget, best, best_assign) &&
        !best_assign.empty()) {
        std::vector<std::vector<int>> blocks(R);
        for (int c = 0; c < d; ++c) blocks[best_assign[c]].push_back(c);
        return partition_from_blocks(N, std::move(blocks));
    }
    return greedy_rcut(rho_hat, R, N, feas_k);
}

std::int64_t aux_pool_sampler(std::span<const double> center, double xi, const Matrix& sigma,
                              std::int64_t N_aux, Rng& rng, ParticleSystem& out) {
    if (N_aux < 2) throw ConfigError("aux_pool_sampler: N_aux must be >= 2");
    const int d = static_cast<int>(center.size());
    const std::int64_t n_uniform = N_aux / 2;

    out.dim = d;
    out.points.resize(static_cast<std::size_t>(N_aux) * d);
    out.log_weights.assign(N_aux, 0.0);
    out.weight_comp.assign(N_aux, 0.0);

    for (std::int64_t n = 0; n < n_uniform; ++n) {
        auto pt = out.mutable_point(static_cast<int>(n));
        for (int c = 0; c < d; ++c) pt[c] = center[c] + xi * (2.0 * rng.uniform() - 1.0);
    }
    const Matrix chol = cholesky(sigma);
    Vec z(d), scaled(d);
    for (std::int64_t n = n_uniform; n < N_aux; ++n) {
        auto pt = out.mutable_point(static_cast<int>(n));
        for (auto& v : z) v = rng.normal();
        lower_tri_matvec(chol, z, scaled);
        for (int c = 0; c < d; ++c) pt[c] = center[c] + scaled[c];
    }
    return n_uniform;
}

Matrix sigma_update(const Matrix& rho_hat) {
    Matrix sigma = rho_hat;
    for (auto& v : sigma.a) v *= 10.0;
    return spd_floor(sigma, 1e-6);
}

}  // namespace pbi
