#include <doctest.h>

#include <cmath>

#include "pbi/particle.hpp"
#include "pbi/stream.hpp"

using namespace pbi;

namespace {

// Model whose log-density is a fixed value per particle index; the index is
// smuggled through the first coordinate.
class TableModel : public Model {
public:
    explicit TableModel(Vec values) : values_(std::move(values)) {}
    int dim() const override { return 1; }
    double log_density(std::span<const double> theta, const Observation&) const override {
        return values_[static_cast<std::size_t>(theta[0])];
    }

private:
    Vec values_;
};

ParticleSystem indexed_system(int n) {
    ParticleSystem sys(n, 1);
    for (int i = 0; i < n; ++i) sys.mutable_point(i)[0] = i;
    return sys;
}

Vec normalized(const ParticleSystem& sys) {
    Vec w(sys.size());
    softmax(sys.log_weights, w);
    return w;
}

// Extended-precision product oracle: multiplies raw densities, tracking the
// binary exponent explicitly so 1e4-observation blocks neither underflow nor
// overflow.  Deliberately avoids the log-domain path under test.
struct ProductOracle {
    std::vector<long double> mantissa;
    std::vector<long long> exponent;

    explicit ProductOracle(int n) : mantissa(n, 0.5L), exponent(n, 1) {}

    void multiply(int i, long double density) {
        int e = 0;
        mantissa[i] = std::frexp(mantissa[i] * density, &e);
        exponent[i] += e;
    }
    Vec normalized() const {
        const auto n = mantissa.size();
        long long emax = exponent[0];
        for (auto e : exponent) emax = std::max(emax, e);
        std::vector<long double> raw(n);
        long double sum = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            raw[i] = std::ldexp(mantissa[i], static_cast<int>(exponent[i] - emax));
            sum += raw[i];
        }
        Vec out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(raw[i] / sum);
        return out;
    }
};

// Naive (non-log) density of the demo mixture.
long double gmm_naive_density(double theta, double y) {
    const int J = 21;
    const double s0 = 0.01, s1 = 0.64;
    long double alpha_norm = 0.0L, f = 0.0L;
    for (int j = 0; j < J; ++j) {
        const double m = -10.0 + j;
        alpha_norm += std::exp(-0.5L * m * m / s1);
    }
    for (int j = 0; j < J; ++j) {
        const double m = -10.0 + j;
        const long double alpha = std::exp(-0.5L * m * m / s1) / alpha_norm;
        const long double u = y - (theta + m);
        const long double pi = 3.141592653589793238462643383279502884L;
        f += alpha * std::exp(-0.5L * u * u / s0) / std::sqrt(2.0L * pi * s0);
    }
    return f;
}

}  // namespace

TEST_CASE("bayes_update: closed-form softmax for two particles") {
    TableModel model({-1.0, -3.0});
    auto sys = indexed_system(2);
    bayes_update(sys, Observation{}, model);
    const Vec w = normalized(sys);
    const double e1 = std::exp(-1.0), e3 = std::exp(-3.0);
    CHECK(w[0] == doctest::Approx(e1 / (e1 + e3)).epsilon(1e-14));
    CHECK(w[1] == doctest::Approx(e3 / (e1 + e3)).epsilon(1e-14));
    CHECK(w[0] == doctest::Approx(0.8808).epsilon(1e-3));
}

TEST_CASE("bayes_update: single particle still normalizes") {
    TableModel model({-5.0});
    auto sys = indexed_system(1);
    bayes_update(sys, Observation{}, model);
    CHECK(normalized(sys)[0] == doctest::Approx(1.0));
}

TEST_CASE("bayes_update: non-finite density rejects the observation") {
    TableModel model({-1.0, std::numeric_limits<double>::quiet_NaN()});
    auto sys = indexed_system(2);
    const Vec before = sys.log_weights;
    CHECK_THROWS_AS(bayes_update(sys, Observation{}, model), ModelEvalError);
    CHECK(sys.log_weights == before);
}

TEST_CASE("log-domain recursion matches the extended-precision product oracle") {
    GmmDemoModel model;
    const Vec support{-0.4, -0.1, 0.0, 0.2, 1.5};
    ParticleSystem sys(static_cast<int>(support.size()), 1);
    for (std::size_t i = 0; i < support.size(); ++i) sys.mutable_point(i)[0] = support[i];

    ProductOracle oracle(static_cast<int>(support.size()));
    GmmDemoStream stream(model, 0.0, 77);
    Observation y;
    for (int t = 0; t < 5000; ++t) {
        stream.next(y);
        bayes_update(sys, y, model);
        for (std::size_t i = 0; i < support.size(); ++i)
            oracle.multiply(static_cast<int>(i), gmm_naive_density(support[i], y.z));
    }
    const Vec got = normalized(sys);
    const Vec want = oracle.normalized();
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (want[i] > 1e-280)
            CHECK(std::fabs(got[i] - want[i]) / want[i] <= 1e-10);
    }
}

TEST_CASE("reset_weights: uniform weights, full ball mass, replay equivalence") {
    GmmDemoModel model;
    ParticleSystem sys(4, 1);
    for (int i = 0; i < 4; ++i) sys.mutable_point(i)[0] = -1.0 + i;

    GmmDemoStream stream(model, 0.0, 5);
    Observation y;
    for (int t = 0; t < 50; ++t) {
        stream.next(y);
        bayes_update(sys, y, model);
    }
    reset_weights(sys, 50);
    const Vec w = normalized(sys);
    for (double v : w) CHECK(v == doctest::Approx(0.25));
    CHECK(sys.block_start_t == 50);
    CHECK(mass_in_ball(sys, Vec{0.5}, 10.0) == doctest::Approx(1.0));

    // reset + k updates == fresh system with the same points after k updates
    ParticleSystem fresh(4, 1);
    for (int i = 0; i < 4; ++i) fresh.mutable_point(i)[0] = -1.0 + i;
    GmmDemoStream s2(model, 0.0, 6), s3(model, 0.0, 6);
    for (int t = 0; t < 25; ++t) {
        stream.next(y);  // keep consuming, irrelevant
        s2.next(y);
        bayes_update(sys, y, model);
        Observation y3;
        s3.next(y3);
        bayes_update(fresh, y3, model);
    }
    for (int i = 0; i < 4; ++i) CHECK(sys.log_weights[i] == fresh.log_weights[i]);
}

TEST_CASE("posterior_mean: symmetry, saturation, hand value") {
    SUBCASE("uniform weights over symmetric points") {
        ParticleSystem sys(4, 1);
        const double pts[] = {1.0, 2.0, 4.0, 5.0};  // symmetric about 3
        for (int i = 0; i < 4; ++i) sys.mutable_point(i)[0] = pts[i];
        CHECK(posterior_mean(sys)[0] == doctest::Approx(3.0));
    }
    SUBCASE("one weight dominating by +700 in log") {
        ParticleSystem sys(3, 1);
        for (int i = 0; i < 3; ++i) sys.mutable_point(i)[0] = i;
        sys.log_weights = {0.0, 700.0, 0.0};
        CHECK(std::fabs(posterior_mean(sys)[0] - 1.0) < 1e-12);
    }
    SUBCASE("weights from the two-particle bayes example") {
        ParticleSystem sys(2, 1);
        sys.mutable_point(0)[0] = 0.0;
        sys.mutable_point(1)[0] = 1.0;
        sys.log_weights = {-1.0, -3.0};
        const double e1 = std::exp(-1.0), e3 = std::exp(-3.0);
        CHECK(posterior_mean(sys)[0] == doctest::Approx(e3 / (e1 + e3)).epsilon(1e-12));
        CHECK(posterior_mean(sys)[0] == doctest::Approx(0.1192).epsilon(1e-3));
    }
}

TEST_CASE("posterior_mean invariant under constant log-weight shifts") {
    ParticleSystem sys(5, 2);
    Rng rng(3);
    for (int i = 0; i < 5; ++i) {
        sys.mutable_point(i)[0] = rng.normal();
        sys.mutable_point(i)[1] = rng.normal();
        sys.log_weights[i] = rng.normal();
    }
    const Vec base = posterior_mean(sys);
    for (auto& w : sys.log_weights) w += 123.25;
    const Vec shifted = posterior_mean(sys);
    // invariant up to the rounding of the shifted subtractions
    CHECK(base[0] == doctest::Approx(shifted[0]).epsilon(1e-13));
    CHECK(base[1] == doctest::Approx(shifted[1]).epsilon(1e-13));
}

TEST_CASE("particle order independence up to permutation") {
    GmmDemoModel model;
    ParticleSystem sys(6, 1), perm(6, 1);
    const int order[] = {3, 0, 5, 1, 4, 2};
    Rng rng(11);
    Vec pts(6);
    for (auto& v : pts) v = rng.normal();
    for (int i = 0; i < 6; ++i) {
        sys.mutable_point(i)[0] = pts[i];
        perm.mutable_point(i)[0] = pts[order[i]];
    }
    GmmDemoStream s1(model, 0.0, 9), s2(model, 0.0, 9);
    Observation y;
    for (int t = 0; t < 200; ++t) {
        s1.next(y);
        bayes_update(sys, y, model);
        Observation y2;
        s2.next(y2);
        bayes_update(perm, y2, model);
    }
    // un-permute and compare bit for bit
    for (int i = 0; i < 6; ++i) CHECK(perm.log_weights[i] == sys.log_weights[order[i]]);
}

TEST_CASE("mode_index breaks ties at the lowest index") {
    ParticleSystem sys(6, 1);
    sys.log_weights = {0.0, 1.0, 2.0, 1.0, 2.0, 0.0};
    CHECK(mode_index(sys) == 2);
}

TEST_CASE("concentration check: posterior locks on the KL minimizer") {
    GaussianLocationModel model(1);

    SUBCASE("support {0, 5}, data N(0,1)") {
        ParticleSystem sys(2, 1);
        sys.mutable_point(0)[0] = 0.0;
        sys.mutable_point(1)[0] = 5.0;
        int hits = 0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            auto fresh = sys;
            GaussianStream stream(Vec{0.0}, seed);
            const int idx = argmin_kl_concentration_check(fresh, model, stream, 200);
            if (idx == 0) ++hits;
        }
        CHECK(hits == 20);
    }
    SUBCASE("support containing theta_star exactly") {
        ParticleSystem sys(3, 1);
        sys.mutable_point(0)[0] = -2.0;
        sys.mutable_point(1)[0] = 1.25;
        sys.mutable_point(2)[0] = 4.0;
        GaussianStream stream(Vec{1.25}, 4);
        CHECK(argmin_kl_concentration_check(sys, model, stream, 400) == 1);
    }
    SUBCASE("two identical points share the mass forever") {
        ParticleSystem sys(2, 1);
        sys.mutable_point(0)[0] = 1.0;
        sys.mutable_point(1)[0] = 1.0;
        GaussianStream stream(Vec{0.0}, 8);
        Observation y;
        for (int t = 0; t < 100; ++t) {
            stream.next(y);
            bayes_update(sys, y, model);
        }
        const Vec w = normalized(sys);
        CHECK(w[0] == doctest::Approx(0.5));
        CHECK(w[1] == doctest::Approx(0.5));
    }
}
