"""Causal inference for randomized experiments with spillover.

Estimators: ANCOVA, bootstrap matching, structural time-series impact, and
the spillover-corrected impact pipeline, plus a synthetic-experiment
generator with known ground truth for validating all of them.
"""

from . import errors
from ._core import backend_name
from .estimators import (
    ImpactResult,
    SportsResult,
    ancova,
    bootstrap_matching_estimate,
    causal_impact,
    sports_causal,
)
from .inference import (
    BootstrapSummary,
    EffectEstimate,
    aggregate_replicates,
    bh_adjust,
    ols_fit,
)
from .matching import MatchSet, PropensityModel, fit_propensity, match_nearest, score
from .panel import (
    GroupSeries,
    PanelData,
    aggregate_groups,
    load_panel,
    split_periods,
    write_panel,
)
from .simulate import SimConfig, fraction_sweep, gen_experiment
from .timeseries import (
    ARModel,
    Forecast,
    StateSpaceFit,
    StateSpaceSpec,
    fit_ar,
    fit_state_space,
    forecast_ar,
    kalman_loglik,
    predict_counterfactual,
    select_ar_order,
)

__version__ = "0.1.0"

__all__ = [
    "ARModel",
    "BootstrapSummary",
    "EffectEstimate",
    "Forecast",
    "GroupSeries",
    "ImpactResult",
    "MatchSet",
    "PanelData",
    "PropensityModel",
    "SimConfig",
    "SportsResult",
    "StateSpaceFit",
    "StateSpaceSpec",
    "aggregate_groups",
    "aggregate_replicates",
    "ancova",
    "backend_name",
    "bh_adjust",
    "bootstrap_matching_estimate",
    "causal_impact",
    "errors",
    "fit_ar",
    "fit_propensity",
    "fit_state_space",
    "forecast_ar",
    "fraction_sweep",
    "gen_experiment",
    "kalman_loglik",
    "load_panel",
    "match_nearest",
    "ols_fit",
    "predict_counterfactual",
    "score",
    "select_ar_order",
    "split_periods",
    "sports_causal",
    "write_panel",
    "__version__",
]
