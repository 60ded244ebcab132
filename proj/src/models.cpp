#include "pbi/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace pbi {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

// log(1 + e^x) without overflow.
inline double softplus(double x) {
    if (x > 35.0) return x;
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

void ObsBatch::reset(int dx_, int capacity) {
    dx = dx_;
    capacity_ = capacity;
    count = 0;
    z.assign(capacity, 0.0);
    xt.assign(static_cast<std::size_t>(std::max(dx_, 1)) * capacity, 0.0);
}

void ObsBatch::push(const Observation& y) {
    z[count] = y.z;
    for (int i = 0; i < dx; ++i) xt[static_cast<std::size_t>(i) * capacity_ + count] = y.x[i];
    ++count;
}

void Model::log_density_batch(std::span<const double> theta, const ObsBatch& batch,
                              std::span<double> out) const {
    Observation y;
    y.x.resize(batch.dx);
    for (int s = 0; s < batch.count; ++s) {
        y.z = batch.z[s];
        for (int i = 0; i < batch.dx; ++i) y.x[i] = batch.x(i, s);
        out[s] = log_density(theta, y);
    }
}

std::vector<Vec> Model::relabelings(std::span<const double> theta) const {
    return {Vec(theta.begin(), theta.end())};
}

// ---- formulas -------------------------------------------------------------

double gmm_demo_logf(double theta, double y, int J, double sigma0_sq, double sigma1_sq) {
    const double shift = 0.5 * (J - 1.0);
    double log_alpha_norm;
    {
        Vec la(J);
        for (int j = 0; j < J; ++j) {
            const double m = -shift + j;
            la[j] = -0.5 * m * m / sigma1_sq;
        }
        log_alpha_norm = log_sum_exp(la);
    }
    Vec terms(J);
    for (int j = 0; j < J; ++j) {
        const double m = -shift + j;
        const double la = -0.5 * m * m / sigma1_sq - log_alpha_norm;
        const double mu = theta - shift + j;
        terms[j] = la - 0.5 * (kLogTwoPi + std::log(sigma0_sq)) -
                   0.5 * (y - mu) * (y - mu) / sigma0_sq;
    }
    return log_sum_exp(terms);
}

double rho_q(double u, double q) {
    return 0.5 * (std::fabs(u) + (2.0 * q - 1.0) * u);
}

double quantile_logf(double z, double mean, double q) {
    return std::log(q * (1.0 - q)) - rho_q(z - mean, q);
}

double mean_fn_nl1(std::span<const double> theta, std::span<const double> x) {
    double t3 = theta[2];
    if (std::fabs(t3) < 1e-12) t3 = std::copysign(1e-12, t3 == 0.0 ? 1.0 : t3);
    const double e = std::exp((theta[1] + x[1] - x[2]) / t3);
    return theta[3] + (theta[0] - theta[3] + x[0]) / (1.0 + e);
}

double mean_fn_nl2(std::span<const double> theta, std::span<const double> x) {
    const std::size_t d = theta.size();
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        s += std::exp(-x[i] * theta[i] * theta[i]) + x[i] * theta[d - 1 - i];
    return s;
}

double mixture_logistic_logf(std::span<const double> theta, double z,
                             std::span<const double> x, int J) {
    const int dx = static_cast<int>(x.size());
    std::array<double, 32> terms{};
    Vec logits(J);
    logits[0] = 0.0;
    for (int j = 1; j < J; ++j) logits[j] = theta[j - 1];
    const double lse = log_sum_exp(logits);

    for (int j = 0; j < J; ++j) {
        const double* block = theta.data() + (J - 1) + static_cast<std::size_t>(j) * dx;
        double eta = 0.0;
        for (int i = 0; i < dx; ++i) eta += block[i] * x[i];
        const double log_p = (z == 1.0) ? -softplus(-eta) : -softplus(eta);
        terms[j] = logits[j] - lse + log_p;
    }
    return log_sum_exp(std::span<const double>(terms.data(), J));
}

double mixture_logistic_prob(std::span<const double> theta, std::span<const double> x, int J) {
    const int dx = static_cast<int>(x.size());
    Vec logits(J);
    logits[0] = 0.0;
    for (int j = 1; j < J; ++j) logits[j] = theta[j - 1];
    Vec w(J);
    softmax(logits, w);
    double p = 0.0;
    for (int j = 0; j < J; ++j) {
        const double* block = theta.data() + (J - 1) + static_cast<std::size_t>(j) * dx;
        double eta = 0.0;
        for (int i = 0; i < dx; ++i) eta += block[i] * x[i];
        p += w[j] * sigmoid(eta);
    }
    return p;
}

std::vector<Vec> mixture_relabelings(std::span<const double> theta, int J, int dx) {
    Vec logits(J);
    logits[0] = 0.0;
    for (int j = 1; j < J; ++j) logits[j] = theta[j - 1];

    std::vector<int> perm(J);
    std::iota(perm.begin(), perm.end(), 0);

    std::vector<Vec> out;
    do {
        Vec v(theta.size());
        // Re-anchor the permuted logits so that the first one is zero again.
        for (int j = 1; j < J; ++j) v[j - 1] = logits[perm[j]] - logits[perm[0]];
        for (int j = 0; j < J; ++j) {
            const double* src = theta.data() + (J - 1) + static_cast<std::size_t>(perm[j]) * dx;
            double* dst = v.data() + (J - 1) + static_cast<std::size_t>(j) * dx;
            std::copy(src, src + dx, dst);
        }
        out.push_back(std::move(v));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

// ---- model classes --------------------------------------------------------

GmmDemoModel::GmmDemoModel(int J, double sigma0_sq, double sigma1_sq)
    : J_(J), sigma0_sq_(sigma0_sq) {
    if (J < 1 || J > 64 || !(sigma0_sq > 0.0) || !(sigma1_sq > 0.0))
        throw ConfigError("gmm demo: bad parameters");
    log_alpha_.resize(J);
    const double shift = 0.5 * (J - 1.0);
    for (int j = 0; j < J; ++j) {
        const double m = -shift + j;
        log_alpha_[j] = -0.5 * m * m / sigma1_sq;
    }
    const double norm = log_sum_exp(log_alpha_);
    for (auto& la : log_alpha_) la -= norm;
}

double GmmDemoModel::component_weight(int j) const {
    return std::exp(log_alpha_[j]);
}

double GmmDemoModel::log_density(std::span<const double> theta, const Observation& y) const {
    const double shift = 0.5 * (J_ - 1.0);
    const double log_gauss_norm = -0.5 * (kLogTwoPi + std::log(sigma0_sq_));
    std::array<double, 64> terms{};
    for (int j = 0; j < J_; ++j) {
        const double mu = theta[0] - shift + j;
        terms[j] = log_alpha_[j] + log_gauss_norm - 0.5 * (y.z - mu) * (y.z - mu) / sigma0_sq_;
    }
    return log_sum_exp(std::span<const double>(terms.data(), J_));
}

QuantileModel::QuantileModel(QuantileMean kind, int d, int dx, double q)
    : kind_(kind), d_(d), dx_(dx), q_(q) {
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("quantile: q must be in (0,1)");
    if (kind == QuantileMean::nl1 && (d != 4 || dx != 3))
        throw ConfigError("quantile nl1: requires d=4, dx=3");
    if (kind == QuantileMean::nl2 && d != dx)
        throw ConfigError("quantile nl2: requires d=dx");
    if (kind == QuantileMean::linear && d != dx)
        throw ConfigError("quantile linear: requires d=dx");
    log_norm_ = std::log(q * (1.0 - q));
}

double QuantileModel::mean(std::span<const double> theta, std::span<const double> x) const {
    switch (kind_) {
        case QuantileMean::nl1:
            return mean_fn_nl1(theta, x);
        case QuantileMean::nl2:
            return mean_fn_nl2(theta, x);
        case QuantileMean::linear: {
            double s = 0.0;
            for (int i = 0; i < d_; ++i) s += theta[i] * x[i];
            return s;
        }
    }
    return 0.0;
}

double QuantileModel::log_density(std::span<const double> theta, const Observation& y) const {
    return log_norm_ - rho_q(y.z - mean(theta, y.x), q_);
}

void QuantileModel::log_density_batch(std::span<const double> theta, const ObsBatch& batch,
                                      std::span<double> out) const {
    if (kind_ != QuantileMean::linear) {
        Model::log_density_batch(theta, batch, out);
        return;
    }
    // Accumulate the linear predictor across batch lanes; the per-lane
    // i-order matches the scalar path, so results are bit-identical.
    const int n = batch.count;
    std::array<double, 256> acc{};
    for (int i = 0; i < d_; ++i) {
        const double ti = theta[i];
        const double* xi = batch.row(i);
        for (int s = 0; s < n; ++s) acc[s] += ti * xi[s];
    }
    for (int s = 0; s < n; ++s) out[s] = log_norm_ - rho_q(batch.z[s] - acc[s], q_);
}

MixtureLogisticModel::MixtureLogisticModel(int J, int dx) : J_(J), dx_(dx) {
    if (J < 1 || J > 5) throw ConfigError("mixture: J must be in 1..5");
    if (dx < 1) throw ConfigError("mixture: dx must be >= 1");
}

double MixtureLogisticModel::log_density(std::span<const double> theta,
                                         const Observation& y) const {
    return mixture_logistic_logf(theta, y.z, y.x, J_);
}

std::vector<Vec> MixtureLogisticModel::relabelings(std::span<const double> theta) const {
    return mixture_relabelings(theta, J_, dx_);
}

double GaussianLocationModel::log_density(std::span<const double> theta,
                                          const Observation& y) const {
    double ss = (y.z - theta[0]) * (y.z - theta[0]);
    for (int i = 1; i < d_; ++i) ss += (y.x[i - 1] - theta[i]) * (y.x[i - 1] - theta[i]);
    return -0.5 * d_ * kLogTwoPi - 0.5 * ss;
}

}  // namespace pbi
