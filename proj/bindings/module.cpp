#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pbi/config.hpp"
#include "pbi/trace.hpp"

namespace py = pybind11;
using namespace pbi;

namespace {

ScheduleConfig make_schedule(double kappa, std::int64_t t1, double eps0, double varrho,
                             double beta, double varepsilon, int d) {
    ScheduleConfig c;
    c.kappa = kappa;
    c.t1 = t1;
    c.eps0 = eps0;
    c.varrho = varrho;
    c.beta = beta;
    c.varepsilon = varepsilon;
    c.d = d;
    c.validate();
    return c;
}

py::dict row_to_dict(const TraceRow& row) {
    py::dict d;
    d["t"] = row.t;
    d["p"] = row.p;
    d["xi"] = row.xi;
    d["eps"] = row.eps;
    d["q"] = row.q;
    d["branch"] = row.branch == Branch::own_estimate ? "own" : "aux";
    d["gt_branch"] = row.gt_branch == GtBranch::mean ? "mean" : "mode";
    d["estimate"] = row.estimate;
    d["error"] = row.error;
    d["ess"] = row.ess;
    d["tau"] = row.tau;
    d["partition"] = row.partition;
    return d;
}

py::dict run_experiment(const std::string& preset, py::dict options) {
    ExperimentConfig cfg = preset_config(preset);
    for (auto item : options) {
        const auto key = py::cast<std::string>(item.first);
        const auto value = py::cast<std::string>(py::str(item.second));
        apply_override(cfg, key, value);
    }
    ExperimentSetup setup = build_experiment(cfg);
    Engine engine(*setup.model, cfg.algo, cfg.seed);
    const Vec* truth = setup.truth ? &*setup.truth : nullptr;
    const RunReport rep = engine.run(*setup.stream, cfg.horizon, truth, cfg.sample_every);

    py::dict out;
    out["final_estimate"] = rep.final_estimate;
    out["final_partition"] = rep.final_partition.digest();
    out["observations"] = rep.observations;
    out["perturbations"] = rep.perturbations;
    out["likelihood_evals"] = rep.likelihood_evals;
    if (truth) out["truth"] = *truth;
    py::list rows;
    for (const auto& row : rep.rows) rows.append(row_to_dict(row));
    out["rows"] = rows;
    return out;
}

}  // namespace

PYBIND11_MODULE(_pbi, m) {
    m.doc() = "perturbed Bayesian inference for streaming parameter estimation";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<ModelEvalError>(m, "ModelEvalError");

    // schedule
    m.def(
        "next_perturbation_time",
        [](std::int64_t t_prev, double kappa, std::int64_t t1) {
            return next_perturbation_time(t_prev, make_schedule(kappa, t1, 1, 2.1, 0.01, 0.1, 1));
        },
        py::arg("t_prev"), py::arg("kappa") = 0.9, py::arg("t1") = 10);
    m.def(
        "epsilon_p",
        [](std::int64_t p, int d, double eps0, double varrho, double beta) {
            return epsilon_p(p, make_schedule(0.9, 10, eps0, varrho, beta, 0.1, d));
        },
        py::arg("p"), py::arg("d"), py::arg("eps0") = 1.0, py::arg("varrho") = 2.1,
        py::arg("beta") = 0.01);
    m.def(
        "c_p",
        [](std::int64_t p, double kappa, double varepsilon) {
            return c_p(p, make_schedule(kappa, 10, 1.0, 2.1, 0.01, varepsilon, 1));
        },
        py::arg("p"), py::arg("kappa") = 0.9, py::arg("varepsilon") = 0.1);
    m.def(
        "count_perturbations",
        [](std::int64_t horizon, double kappa, std::int64_t t1) {
            return count_perturbations(horizon,
                                       make_schedule(kappa, t1, 1.0, 2.1, 0.01, 0.1, 1));
        },
        py::arg("horizon"), py::arg("kappa") = 0.9, py::arg("t1") = 10);

    // combinatorics
    m.def("k_of_n", &k_of_n, py::arg("N"), py::arg("d"));
    m.def("r_of_n", &r_of_n, py::arg("N"), py::arg("d"));
    m.def("balanced_sizes", &balanced_sizes, py::arg("d"), py::arg("R"));
    m.def("kn_mf", &kn_mf, py::arg("N"), py::arg("d"), py::arg("R"));
    m.def(
        "min_rcut_partition",
        [](const std::vector<Vec>& rho, int R, std::int64_t N) {
            const int d = static_cast<int>(rho.size());
            Matrix m(d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) m(i, j) = rho[i][j];
            return min_rcut_partition(m, R, N, kn_mf(N, d, R)).digest();
        },
        py::arg("rho"), py::arg("R"), py::arg("N"));
    m.def(
        "ess", [](const Vec& w) { return ess(w); }, py::arg("weights"));

    // formulas
    m.def("gmm_demo_logf", &gmm_demo_logf, py::arg("theta"), py::arg("y"), py::arg("J") = 21,
          py::arg("sigma0_sq") = 0.01, py::arg("sigma1_sq") = 0.64);
    m.def("rho_q", &rho_q, py::arg("u"), py::arg("q"));
    m.def(
        "quantile_logf",
        [](double z, double mean, double q) { return quantile_logf(z, mean, q); },
        py::arg("z"), py::arg("mean"), py::arg("q"));
    m.def(
        "mean_fn_nl1", [](const Vec& th, const Vec& x) { return mean_fn_nl1(th, x); },
        py::arg("theta"), py::arg("x"));
    m.def(
        "mean_fn_nl2", [](const Vec& th, const Vec& x) { return mean_fn_nl2(th, x); },
        py::arg("theta"), py::arg("x"));
    m.def(
        "mixture_logistic_logf",
        [](const Vec& th, double z, const Vec& x, int J) {
            return mixture_logistic_logf(th, z, x, J);
        },
        py::arg("theta"), py::arg("z"), py::arg("x"), py::arg("J"));
    m.def(
        "mixture_relabelings",
        [](const Vec& th, int J, int dx) { return mixture_relabelings(th, J, dx); },
        py::arg("theta"), py::arg("J"), py::arg("dx"));

    // experiments
    m.def("preset_names", &preset_names);
    m.def("run_experiment", &run_experiment, py::arg("preset"), py::arg("options") = py::dict());
    m.def(
        "slope_diagnostic",
        [](const std::vector<std::int64_t>& t, const Vec& err, double window) {
            std::string warn;
            const double s = slope_diagnostic(t, err, window, &warn);
            return py::make_tuple(s, warn);
        },
        py::arg("t"), py::arg("error"), py::arg("window") = 1.0);
    m.def("predict_scores", &predict_scores, py::arg("theta"), py::arg("J"),
          py::arg("csv_in"), py::arg("csv_out"));
}
