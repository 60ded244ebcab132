#pragma once

#include <memory>
#include <string>

#include "pbi/linalg.hpp"
#include "pbi/models.hpp"
#include "pbi/rng.hpp"

namespace pbi {

// One-pass observation source.  next() is the whole interface: data can be
// read once, in arrival order.
class ObservationStream {
public:
    virtual ~ObservationStream() = default;
    virtual bool next(Observation& out) = 0;
};

// y ~ f_theta_star for the 1-d mixture demo model.
class GmmDemoStream : public ObservationStream {
public:
    GmmDemoStream(const GmmDemoModel& model, double theta_star, std::uint64_t seed);
    bool next(Observation& out) override;

private:
    const GmmDemoModel& model_;
    double theta_star_;
    Vec cum_alpha_;
    Rng rng_;
};

// Quantile-regression data: z = mean(theta_star, x) + N(0,1) noise, with the
// covariate law depending on the mean function.
//   nl1:    x ~ N2(0, [[4,-2],[-2,4]]) (x) Unif(0,20)
//   nl2:    x ~ delta_1 (x) Unif(0,1)^{d-1}
//   linear: x ~ delta_1 (x) N_{d-1}(0, Sigma_x)
class QuantileStream : public ObservationStream {
public:
    // nl1
    QuantileStream(const QuantileModel& model, Vec theta_star, std::uint64_t seed);
    // linear: Sigma_x built from coupling rho by the rejection recipe; pass
    // rho < 0 to obtain the nl2 covariate law instead.
    static std::unique_ptr<QuantileStream> linear(const QuantileModel& model, double rho,
                                                  std::uint64_t seed);
    static std::unique_ptr<QuantileStream> nl2(const QuantileModel& model, std::uint64_t seed);

    bool next(Observation& out) override;
    const Vec& theta_star() const { return theta_star_; }
    const Matrix& sigma_x() const { return sigma_x_; }

private:
    const QuantileModel& model_;
    QuantileMean kind_;
    Vec theta_star_;
    Matrix sigma_x_;       // linear only
    Matrix sigma_chol_;
    Rng rng_;
    Vec scratch_;
};

// Builds Sigma_{x,rho}: two uniform Gram blocks coupled by rho, normalized by
// the largest absolute entry, re-drawn until positive definite.
Matrix build_linear_sigma_x(int dim, double rho, Rng& rng, int max_attempts = 10000);

// theta_star ~ Unif(1,5)^d, seeded.
Vec linear_theta_star(int d, std::uint64_t seed);

// Mixture-of-logistic-regressions data: x ~ delta_1 (x) N_{dx-1}(0, I),
// z | x ~ g_{J,theta_star}.  theta_star comes from a seeded recipe with
// mixing weight alpha_2 = 0.7.
class MixtureStream : public ObservationStream {
public:
    MixtureStream(const MixtureLogisticModel& model, std::uint64_t seed);
    MixtureStream(const MixtureLogisticModel& model, Vec theta_star, std::uint64_t seed);
    bool next(Observation& out) override;
    const Vec& theta_star() const { return theta_star_; }

private:
    const MixtureLogisticModel& model_;
    Vec theta_star_;
    Rng rng_;
};

Vec mixture_theta_star(int J, int dx, std::uint64_t seed);

// i.i.d. N_d(theta, I); z is the first coordinate, x the rest.
class GaussianStream : public ObservationStream {
public:
    GaussianStream(Vec theta, std::uint64_t seed) : theta_(std::move(theta)), rng_(seed) {}
    bool next(Observation& out) override;

private:
    Vec theta_;
    Rng rng_;
};

// CSV file: header row, first column the response z, remaining columns the
// covariates.  With a shuffle seed the rows are read into memory, permuted
// once, then streamed.
class CsvStream : public ObservationStream {
public:
    explicit CsvStream(const std::string& path);
    CsvStream(const std::string& path, std::uint64_t shuffle_seed);
    ~CsvStream() override;
    bool next(Observation& out) override;
    int covariate_dim() const { return dx_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int dx_{0};
};

}  // namespace pbi
