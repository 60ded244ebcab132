"""Perturbed Bayesian inference for streaming parameter estimation."""

from _pbi import (  # noqa: F401
    ConfigError,
    ModelEvalError,
    balanced_sizes,
    c_p,
    count_perturbations,
    epsilon_p,
    ess,
    gmm_demo_logf,
    k_of_n,
    kn_mf,
    mean_fn_nl1,
    mean_fn_nl2,
    min_rcut_partition,
    mixture_logistic_logf,
    mixture_relabelings,
    next_perturbation_time,
    predict_scores,
    preset_names,
    quantile_logf,
    r_of_n,
    rho_q,
    run_experiment,
    slope_diagnostic,
)

__all__ = [
    "ConfigError",
    "ModelEvalError",
    "balanced_sizes",
    "c_p",
    "count_perturbations",
    "epsilon_p",
    "ess",
    "gmm_demo_logf",
    "k_of_n",
    "kn_mf",
    "mean_fn_nl1",
    "mean_fn_nl2",
    "min_rcut_partition",
    "mixture_logistic_logf",
    "mixture_relabelings",
    "next_perturbation_time",
    "predict_scores",
    "preset_names",
    "quantile_logf",
    "r_of_n",
    "rho_q",
    "run_experiment",
    "slope_diagnostic",
]
