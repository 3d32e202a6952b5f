"""Monotone baseline hazard estimation and Weibull goodness-of-fit
testing for the Cox proportional hazards model.

The package fits a nonincreasing baseline hazard as the left-hand slope
of the least concave majorant of the Breslow estimator, tests a Weibull
baseline against that monotone alternative with bootstrap critical
values, and ships a simulation harness plus Monte-Carlo tooling for the
limit distribution of the scaled L_p estimation error.
"""

from .bootstrap import (
    TestReport,
    bootstrap_critical_value,
    bootstrap_reports,
    resample,
)
from .coxfit import (
    CoxFit,
    fit,
    log_partial_likelihood,
    partial_likelihood_gradient,
    partial_likelihood_hessian,
)
from .data import Dataset, Observation, load_csv, split, write_csv
from .estimators import (
    MonotoneHazard,
    StepCumHazard,
    SurvivalCurve,
    breslow,
    breslow_cdf,
    grenander,
    inverse_process,
    kaplan_meier,
    phi_n,
    phi_n_function,
)
from .exceptions import (
    BootstrapError,
    ConvergenceError,
    FitError,
    NonIdentifiableError,
    ParseError,
    SeparationError,
)
from .gof import (
    TestConfig,
    lp_distance,
    lp_distance_to_baseline,
    statistic_LR,
    statistic_S,
    statistic_T,
)
from .harness import StudyConfig, StudyRow, reference_tables, run_study, rows_to_csv
from .limits import (
    ArgmaxMCConfig,
    CltReport,
    LimitConstants,
    asymptotic_moments,
    clt_check,
    estimate_constants,
    scaled_lp_error,
    simulate_X,
)
from .scenarios import (
    AltABaseline,
    AltBBaseline,
    Scenario,
    WeibullBaseline,
    cum_hazard_true,
    sample,
)
from .weibull import (
    WeibullTheta,
    conditional_cdf,
    fit_weibull,
    param_cum_hazard,
    param_hazard,
    weibull_loglik,
    weibull_loglik_gradient,
)

__version__ = "0.1.0"
