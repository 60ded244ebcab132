#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pbi/config.hpp"
#include "pbi/trace.hpp"

using namespace pbi;

namespace {

std::string temp_path(const std::string& name) {
    return std::string("/tmp/pbi_test_") + name;
}

}  // namespace

TEST_CASE("config: defaults match the reference parameter table") {
    const AlgoConfig a;
    CHECK(a.eps0 == 1.0);
    CHECK(a.kappa == 0.9);
    CHECK(a.Delta == 0.95);
    CHECK(a.varrho == 2.1);
    CHECK(a.beta == 0.01);
    CHECK(a.varepsilon == 0.1);
    CHECK(a.zeta1 == 1.0);
    CHECK(a.zeta2 == 0.5);
    CHECK(a.zeta3 == 1.0);
    CHECK(a.zeta4 == 0.5);
    CHECK(a.nu == 3.0);
    CHECK(a.clamp_L == 500.0);
    CHECK(a.M_prime == 2);
}

TEST_CASE("config: emit/parse round trip") {
    for (const auto& name : preset_names()) {
        ExperimentConfig cfg = preset_config(name);
        cfg.seed = 123;
        cfg.horizon = 4567;
        cfg.truth = Vec{1.0, 2.5};
        if (name == "csv-mixture") cfg.csv_path = "/tmp/data.csv";
        std::ostringstream os;
        emit_config(cfg, os);
        std::istringstream is(os.str());
        const ExperimentConfig back = parse_config(is);
        CHECK(config_equal(cfg, back));
    }
}

TEST_CASE("config: overrides, including partition specs") {
    ExperimentConfig cfg = preset_config("linear");
    apply_override(cfg, "algo.N", "1000");
    apply_override(cfg, "algo.partition", "1,11:20|2:10");
    apply_override(cfg, "run.horizon", "55");
    CHECK(cfg.algo.N == 1000);
    CHECK(cfg.horizon == 55);
    REQUIRE(cfg.algo.partition_override.has_value());
    CHECK(cfg.algo.partition_override->size() == 2);
    CHECK((*cfg.algo.partition_override)[0] ==
          std::vector<int>{0, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19});
    CHECK_THROWS_AS(apply_override(cfg, "bogus.key", "1"), ConfigError);
}

TEST_CASE("slope_diagnostic") {
    SUBCASE("exact power law t^{-1/2}") {
        std::vector<std::int64_t> t;
        Vec err;
        for (double x = 100.0; x <= 1e6; x *= 1.4) {
            t.push_back(static_cast<std::int64_t>(x));
            err.push_back(std::pow(x, -0.5));
        }
        const double s = slope_diagnostic(t, err, 1.0);
        CHECK(s == doctest::Approx(-0.5).epsilon(1e-5));
    }
    SUBCASE("log-augmented rate over two decades lands in the documented band") {
        std::vector<std::int64_t> t;
        Vec err;
        for (double x = 1e4; x <= 1e6; x *= 1.3) {
            t.push_back(static_cast<std::int64_t>(x));
            err.push_back(std::pow(std::log(x), 0.55) * std::pow(x, -0.5));
        }
        const double s = slope_diagnostic(t, err, 2.0);
        CHECK(s >= -0.50);
        CHECK(s <= -0.43);
    }
    SUBCASE("constant error has slope zero") {
        std::vector<std::int64_t> t{1000, 2000, 4000, 8000, 16000, 32000};
        const Vec err(6, 0.25);
        CHECK(slope_diagnostic(t, err, 2.0) == doctest::Approx(0.0));
    }
    SUBCASE("zero errors yield the NaN sentinel with a warning") {
        std::vector<std::int64_t> t{1000, 2000, 4000, 8000, 16000};
        const Vec err(5, 0.0);
        std::string warn;
        const double s = slope_diagnostic(t, err, 2.0, &warn);
        CHECK(std::isnan(s));
        CHECK(!warn.empty());
    }
}

TEST_CASE("trace: write and read back") {
    RunReport rep;
    for (int i = 1; i <= 6; ++i) {
        TraceRow row;
        row.t = 10 * i;
        row.p = i;
        row.xi = 1.0 / i;
        row.eps = 0.9 / i;
        row.q = i;
        row.branch = i % 2 ? Branch::own_estimate : Branch::aux_estimate;
        row.estimate = {0.5 * i, -0.5 * i};
        row.error = 1.0 / i;
        row.ess = 100.0;
        row.tau = 3;
        row.partition = "1,2|3:4";  // contains a comma: must round-trip quoted
        rep.rows.push_back(row);
    }
    const std::string path = temp_path("trace.csv");
    write_trace_file(path, rep, 2, /*have_truth=*/true, /*timing=*/false);

    const TraceData data = read_trace_file(path);
    REQUIRE(data.t.size() == 6);
    CHECK(data.has_error);
    CHECK(!data.has_timing);
    CHECK(data.t[0] == 10);
    CHECK(data.error[5] == doctest::Approx(1.0 / 6).epsilon(1e-15));
    CHECK(data.partition[3] == "1,2|3:4");
    std::remove(path.c_str());
}

TEST_CASE("predict_scores") {
    const std::string in_path = temp_path("predict_in.csv");
    const std::string out_path = temp_path("predict_out.csv");
    {
        std::ofstream f(in_path);
        f << "z,x1,x2\n";
        f << "1,1.0,0.5\n";
        f << "0,1.0,-2.0\n";
        f << "1,1.0,0.0\n";
    }

    SUBCASE("all-zero regression blocks score 0.5 everywhere") {
        const Vec theta{0.0, 0.0, 0.0, 0.0, 0.0};  // J=2, dx=2
        predict_scores(theta, 2, in_path, out_path);
        std::ifstream f(out_path);
        std::string line;
        std::getline(f, line);
        CHECK(line == "z,score");
        int rows = 0;
        while (std::getline(f, line)) {
            const auto comma = line.find(',');
            const double score = std::atof(line.c_str() + comma + 1);
            CHECK(score == doctest::Approx(0.5));
            ++rows;
        }
        CHECK(rows == 3);
    }
    SUBCASE("J=1 equals plain logistic and stays in (0,1)") {
        const Vec theta{1.5, -0.7};
        predict_scores(theta, 1, in_path, out_path);
        std::ifstream f(out_path);
        std::string line;
        std::getline(f, line);
        int row = 0;
        const double x2[] = {0.5, -2.0, 0.0};
        while (std::getline(f, line)) {
            const auto comma = line.find(',');
            const double score = std::atof(line.c_str() + comma + 1);
            const double eta = 1.5 - 0.7 * x2[row];
            CHECK(score == doctest::Approx(1.0 / (1.0 + std::exp(-eta))).epsilon(1e-12));
            CHECK(score > 0.0);
            CHECK(score < 1.0);
            ++row;
        }
    }
    SUBCASE("column mismatch is a config error") {
        const Vec theta{0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};  // dx=3
        CHECK_THROWS_AS(predict_scores(theta, 2, in_path, out_path), ConfigError);
    }
    std::remove(in_path.c_str());
    std::remove(out_path.c_str());
}

TEST_CASE("checkpoint round trip is exact") {
    ParticleSystem main_sys(3, 2), aux_sys(4, 2);
    Rng rng(55);
    for (int n = 0; n < 3; ++n) {
        main_sys.mutable_point(n)[0] = rng.normal();
        main_sys.mutable_point(n)[1] = rng.normal();
        main_sys.log_weights[n] = rng.normal() * 100.0;
    }
    for (int n = 0; n < 4; ++n) {
        aux_sys.mutable_point(n)[0] = rng.normal();
        aux_sys.mutable_point(n)[1] = rng.normal();
        aux_sys.log_weights[n] = rng.normal() * 100.0;
    }
    main_sys.block_start_t = 1234;
    aux_sys.block_start_t = 1234;

    std::stringstream ss;
    write_checkpoint(ss, main_sys, aux_sys);
    ParticleSystem m2, a2;
    read_checkpoint(ss, m2, a2);
    CHECK(m2.points == main_sys.points);  // %.17g round-trips doubles exactly
    CHECK(m2.log_weights == main_sys.log_weights);
    CHECK(m2.block_start_t == 1234);
    CHECK(a2.points == aux_sys.points);
    CHECK(a2.log_weights == aux_sys.log_weights);
}

TEST_CASE("csv stream: plain and shuffled") {
    const std::string path = temp_path("stream.csv");
    {
        std::ofstream f(path);
        f << "z,x1\n";
        for (int i = 0; i < 10; ++i) f << i << "," << 2 * i << "\n";
    }
    SUBCASE("plain order") {
        CsvStream s(path);
        CHECK(s.covariate_dim() == 1);
        Observation y;
        for (int i = 0; i < 10; ++i) {
            REQUIRE(s.next(y));
            CHECK(y.z == i);
            CHECK(y.x[0] == 2 * i);
        }
        CHECK(!s.next(y));
    }
    SUBCASE("shuffle permutes deterministically") {
        CsvStream s1(path, 9);
        CsvStream s2(path, 9);
        Vec a, b;
        Observation y;
        while (s1.next(y)) a.push_back(y.z);
        while (s2.next(y)) b.push_back(y.z);
        CHECK(a == b);
        Vec sorted = a;
        std::sort(sorted.begin(), sorted.end());
        CHECK(sorted == Vec{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
        CsvStream s3(path, 10);
        Vec c;
        while (s3.next(y)) c.push_back(y.z);
        CHECK(c != a);  // different seed, different order (overwhelmingly)
    }
    std::remove(path.c_str());
}

TEST_CASE("build_experiment: presets assemble and derive init means") {
    SUBCASE("nl1 starts 10 below the target") {
        ExperimentConfig cfg = preset_config("nl1");
        auto setup = build_experiment(cfg);
        REQUIRE(setup.truth.has_value());
        CHECK(*setup.truth == Vec{70.0, 10.0, 3.0, 10.0});
        CHECK(cfg.algo.init_mean == Vec{60.0, 0.0, -7.0, 0.0});
        CHECK(setup.model->dim() == 4);
    }
    SUBCASE("gmm demo keeps its explicit init") {
        ExperimentConfig cfg = preset_config("gmm-demo");
        auto setup = build_experiment(cfg);
        CHECK(cfg.algo.init_mean == Vec{-8.0});
        CHECK(cfg.algo.init_var == 0.5);
        CHECK(*setup.truth == Vec{0.0});
    }
    SUBCASE("unknown preset") {
        CHECK_THROWS_AS(preset_config("nope"), ConfigError);
    }
}
