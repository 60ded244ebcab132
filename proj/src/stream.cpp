#include "pbi/stream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pbi {

GmmDemoStream::GmmDemoStream(const GmmDemoModel& model, double theta_star, std::uint64_t seed)
    : model_(model), theta_star_(theta_star), rng_(seed) {
    cum_alpha_.resize(model.components());
    double acc = 0.0;
    for (int j = 0; j < model.components(); ++j) {
        acc += model.component_weight(j);
        cum_alpha_[j] = acc;
    }
    cum_alpha_.back() = 1.0;
}

bool GmmDemoStream::next(Observation& out) {
    const double u = rng_.uniform();
    int j = 0;
    while (cum_alpha_[j] < u) ++j;
    const double shift = 0.5 * (model_.components() - 1.0);
    const double mu = theta_star_ - shift + j;
    out.z = mu + std::sqrt(model_.sigma0_sq()) * rng_.normal();
    out.x.clear();
    return true;
}

QuantileStream::QuantileStream(const QuantileModel& model, Vec theta_star, std::uint64_t seed)
    : model_(model), kind_(QuantileMean::nl1), theta_star_(std::move(theta_star)), rng_(seed) {}

std::unique_ptr<QuantileStream> QuantileStream::nl2(const QuantileModel& model,
                                                    std::uint64_t seed) {
    auto s = std::make_unique<QuantileStream>(model, Vec(model.dim(), 1.0), seed);
    s->kind_ = QuantileMean::nl2;
    return s;
}

std::unique_ptr<QuantileStream> QuantileStream::linear(const QuantileModel& model, double rho,
                                                       std::uint64_t seed) {
    auto s = std::make_unique<QuantileStream>(model, linear_theta_star(model.dim(), seed), seed);
    s->kind_ = QuantileMean::linear;
    Rng sigma_rng = Rng::substream(seed, 0, Rng::Role::misc);
    s->sigma_x_ = build_linear_sigma_x(model.dim() - 1, rho, sigma_rng);
    s->sigma_chol_ = cholesky(s->sigma_x_);
    s->scratch_.resize(model.dim() - 1);
    return s;
}

bool QuantileStream::next(Observation& out) {
    const int dx = model_.covariate_dim();
    out.x.resize(dx);
    switch (kind_) {
        case QuantileMean::nl1: {
            // N2(0, [[4,-2],[-2,4]]): chol = [[2,0],[-1,sqrt(3)]]
            const double z1 = rng_.normal();
            const double z2 = rng_.normal();
            out.x[0] = 2.0 * z1;
            out.x[1] = -z1 + std::sqrt(3.0) * z2;
            out.x[2] = rng_.uniform(0.0, 20.0);
            break;
        }
        case QuantileMean::nl2: {
            out.x[0] = 1.0;
            for (int i = 1; i < dx; ++i) out.x[i] = rng_.uniform();
            break;
        }
        case QuantileMean::linear: {
            out.x[0] = 1.0;
            for (int i = 0; i < dx - 1; ++i) scratch_[i] = rng_.normal();
            for (int i = 0; i < dx - 1; ++i) {
                double s = 0.0;
                for (int j = 0; j <= i; ++j) s += sigma_chol_(i, j) * scratch_[j];
                out.x[i + 1] = s;
            }
            break;
        }
    }
    out.z = model_.mean(theta_star_, out.x) + rng_.normal();
    return true;
}

Matrix build_linear_sigma_x(int dim, double rho, Rng& rng, int max_attempts) {
    // First block 9 x 9 covers covariates 2:10 of the model, second block the
    // remaining ones; under rho = 0 the two groups are independent.
    const int n1 = (dim + 1) / 2 - 1;
    const int n2 = dim - n1;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Matrix a1(n1), a2(n2);
        for (auto& v : a1.a) v = rng.uniform();
        for (auto& v : a2.a) v = rng.uniform();
        Matrix sigma(dim);
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n1; ++j) {
                double s = 0.0;
                for (int k = 0; k < n1; ++k) s += a1(k, i) * a1(k, j);
                sigma(i, j) = s;
            }
        for (int i = 0; i < n2; ++i)
            for (int j = 0; j < n2; ++j) {
                double s = 0.0;
                for (int k = 0; k < n2; ++k) s += a2(k, i) * a2(k, j);
                sigma(n1 + i, n1 + j) = s;
            }
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j) {
                sigma(i, n1 + j) = rho;
                sigma(n1 + j, i) = rho;
            }
        double max_abs = 0.0;
        for (double v : sigma.a) max_abs = std::max(max_abs, std::fabs(v));
        for (auto& v : sigma.a) v /= max_abs;
        try {
            cholesky(sigma);
            return sigma;
        } catch (const ConfigError&) {
            continue;
        }
    }
    throw PbiError("build_linear_sigma_x: no SPD draw within attempt budget");
}

Vec linear_theta_star(int d, std::uint64_t seed) {
    Rng rng = Rng::substream(seed, 0, Rng::Role::data);
    Vec th(d);
    for (auto& v : th) v = rng.uniform(1.0, 5.0);
    return th;
}

Vec mixture_theta_star(int J, int dx, std::uint64_t seed) {
    Rng rng = Rng::substream(seed, 1, Rng::Role::data);
    Vec th((dx + 1) * J - 1);
    // Mixing logits: alpha_2 = 0.7 for J = 2; later components split evenly.
    for (int j = 1; j < J; ++j) th[j - 1] = std::log(0.7 / 0.3);
    for (int j = 0; j < J; ++j) {
        double* block = th.data() + (J - 1) + static_cast<std::size_t>(j) * dx;
        block[0] = -2.0 + rng.normal();
        for (int i = 1; i < dx; ++i) block[i] = rng.normal();
    }
    return th;
}

MixtureStream::MixtureStream(const MixtureLogisticModel& model, std::uint64_t seed)
    : MixtureStream(model, mixture_theta_star(model.components(), model.covariate_dim(), seed),
                    seed) {}

MixtureStream::MixtureStream(const MixtureLogisticModel& model, Vec theta_star,
                             std::uint64_t seed)
    : model_(model), theta_star_(std::move(theta_star)), rng_(seed) {}

bool MixtureStream::next(Observation& out) {
    const int dx = model_.covariate_dim();
    out.x.resize(dx);
    out.x[0] = 1.0;
    for (int i = 1; i < dx; ++i) out.x[i] = rng_.normal();
    const double p = mixture_logistic_prob(theta_star_, out.x, model_.components());
    out.z = rng_.uniform() < p ? 1.0 : 0.0;
    return true;
}

bool GaussianStream::next(Observation& out) {
    out.z = theta_[0] + rng_.normal();
    out.x.resize(theta_.size() - 1);
    for (std::size_t i = 1; i < theta_.size(); ++i) out.x[i - 1] = theta_[i] + rng_.normal();
    return true;
}

// ---- CSV ------------------------------------------------------------------

struct CsvStream::Impl {
    std::ifstream file;
    std::vector<Observation> rows;  // shuffle mode only
    std::size_t pos{0};
    bool buffered{false};
};

namespace {

bool parse_csv_line(const std::string& line, Observation& out) {
    std::stringstream ss(line);
    std::string cell;
    bool first = true;
    out.x.clear();
    while (std::getline(ss, cell, ',')) {
        if (cell.empty() && first) return false;
        const double v = std::strtod(cell.c_str(), nullptr);
        if (first) {
            out.z = v;
            first = false;
        } else {
            out.x.push_back(v);
        }
    }
    return !first;
}

}  // namespace

CsvStream::CsvStream(const std::string& path) : impl_(std::make_unique<Impl>()) {
    impl_->file.open(path);
    if (!impl_->file) throw ConfigError("csv: cannot open " + path);
    std::string header;
    std::getline(impl_->file, header);
    dx_ = static_cast<int>(std::count(header.begin(), header.end(), ',')) ;
}

CsvStream::CsvStream(const std::string& path, std::uint64_t shuffle_seed) : CsvStream(path) {
    impl_->buffered = true;
    Observation y;
    std::string line;
    while (std::getline(impl_->file, line)) {
        if (line.empty()) continue;
        if (!parse_csv_line(line, y)) throw ConfigError("csv: bad row in " + path);
        if (static_cast<int>(y.x.size()) != dx_) throw ConfigError("csv: column count mismatch");
        impl_->rows.push_back(y);
    }
    Rng rng = Rng::substream(shuffle_seed, 0, Rng::Role::shuffle);
    for (std::size_t i = impl_->rows.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(impl_->rows[i - 1], impl_->rows[j]);
    }
}

CsvStream::~CsvStream() = default;

bool CsvStream::next(Observation& out) {
    if (impl_->buffered) {
        if (impl_->pos >= impl_->rows.size()) return false;
        out = impl_->rows[impl_->pos++];
        return true;
    }
    std::string line;
    while (std::getline(impl_->file, line)) {
        if (line.empty()) continue;
        if (!parse_csv_line(line, out)) throw ConfigError("csv: bad row");
        if (static_cast<int>(out.x.size()) != dx_) throw ConfigError("csv: column count mismatch");
        return true;
    }
    return false;
}

}  // namespace pbi
