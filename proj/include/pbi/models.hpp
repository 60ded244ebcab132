#pragma once

#include <memory>
#include <span>
#include <vector>

#include "pbi/common.hpp"

namespace pbi {

// One observation: a response z plus a covariate vector x (empty for models
// of the response alone).
struct Observation {
    double z{0.0};
    Vec x;
};

// A small staging batch with the covariates laid out as a transposed panel
// (coordinate-major), so per-parameter likelihood kernels can stream over
// observations.  x(i, s) is coordinate i of observation s.
struct ObsBatch {
    int dx{0};
    int count{0};
    Vec z;
    Vec xt;  // dx rows of `count` values

    void reset(int dx_, int capacity);
    void clear() { count = 0; }
    void push(const Observation& y);
    double x(int i, int s) const { return xt[static_cast<std::size_t>(i) * capacity_ + s]; }
    const double* row(int i) const { return xt.data() + static_cast<std::size_t>(i) * capacity_; }

private:
    int capacity_{0};
};

// Per-observation log-likelihood theta -> log f_theta(y).  Models are
// immutable after construction; log_density is pure and callable
// concurrently.
class Model {
public:
    virtual ~Model() = default;
    virtual int dim() const = 0;             // parameter dimension d
    virtual int covariate_dim() const { return 0; }
    virtual double log_density(std::span<const double> theta, const Observation& y) const = 0;

    // Evaluates one parameter against every observation of a batch.  The
    // default loops over log_density; models with a cheap kernel override it.
    // Implementations must produce bit-identical values to log_density.
    virtual void log_density_batch(std::span<const double> theta, const ObsBatch& batch,
                                   std::span<double> out) const;

    // All parameter vectors with the same likelihood as theta (label
    // switching).  Defaults to the singleton {theta}.
    virtual std::vector<Vec> relabelings(std::span<const double> theta) const;
};

// ---- formulas -------------------------------------------------------------

// 21-component Gaussian mixture of the one-dimensional demo model:
// f_theta(y) = sum_j alpha_j N(y; theta - (J-1)/2 + j - 1, sigma0_sq) with
// alpha_j proportional to N((1-J)/2 + j - 1; 0, sigma1_sq).
double gmm_demo_logf(double theta, double y, int J = 21, double sigma0_sq = 0.01,
                     double sigma1_sq = 0.64);

// Check function rho_q(u) = (|u| + (2q-1)u) / 2.
double rho_q(double u, double q);

// Asymmetric-Laplace log density log(q(1-q)) - rho_q(z - mean).
double quantile_logf(double z, double mean, double q);

double mean_fn_nl1(std::span<const double> theta, std::span<const double> x);
double mean_fn_nl2(std::span<const double> theta, std::span<const double> x);

// Mixture of logistic regressions with theta = (logits_{1:J-1}, blocks) and
// the convention logit_0 = 0.
double mixture_logistic_logf(std::span<const double> theta, double z,
                             std::span<const double> x, int J);
double mixture_logistic_prob(std::span<const double> theta, std::span<const double> x, int J);
std::vector<Vec> mixture_relabelings(std::span<const double> theta, int J, int dx);

// ---- model classes --------------------------------------------------------

class GmmDemoModel : public Model {
public:
    GmmDemoModel(int J = 21, double sigma0_sq = 0.01, double sigma1_sq = 0.64);
    int dim() const override { return 1; }
    double log_density(std::span<const double> theta, const Observation& y) const override;

    int components() const { return J_; }
    double component_weight(int j) const;  // alpha_j, j in 0..J-1
    double sigma0_sq() const { return sigma0_sq_; }

private:
    int J_;
    double sigma0_sq_;
    Vec log_alpha_;
};

enum class QuantileMean { nl1, nl2, linear };

class QuantileModel : public Model {
public:
    QuantileModel(QuantileMean kind, int d, int dx, double q);
    int dim() const override { return d_; }
    int covariate_dim() const override { return dx_; }
    double log_density(std::span<const double> theta, const Observation& y) const override;
    void log_density_batch(std::span<const double> theta, const ObsBatch& batch,
                           std::span<double> out) const override;
    double mean(std::span<const double> theta, std::span<const double> x) const;
    double q() const { return q_; }

private:
    QuantileMean kind_;
    int d_;
    int dx_;
    double q_;
    double log_norm_;
};

class MixtureLogisticModel : public Model {
public:
    MixtureLogisticModel(int J, int dx);
    int dim() const override { return (dx_ + 1) * J_ - 1; }
    int covariate_dim() const override { return dx_; }
    double log_density(std::span<const double> theta, const Observation& y) const override;
    std::vector<Vec> relabelings(std::span<const double> theta) const override;
    int components() const { return J_; }

private:
    int J_;
    int dx_;
};

// N(theta, 1) location model on R^d; used by the concentration checks.
class GaussianLocationModel : public Model {
public:
    explicit GaussianLocationModel(int d = 1) : d_(d) {}
    int dim() const override { return d_; }
    int covariate_dim() const override { return d_ > 1 ? d_ : 0; }
    double log_density(std::span<const double> theta, const Observation& y) const override;

private:
    int d_;
};

}  // namespace pbi
