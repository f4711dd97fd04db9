"""Monte Carlo laboratory for singular mean-field SDEs.

Particle schemes for classical, frozen-flow and interacting dynamics;
probability distances between empirical measures; fixed-point iteration on
measure flows; coupled pair dynamics with change-of-measure reweighting; and
a battery of empirical checks for the moment, stability, and Harnack-type
estimates these constructions support.
"""

__version__ = "0.1.0"

from .config import ExperimentConfig, load_config, parse_config
from .coupling import (
    CouplingRun,
    DiniGate,
    GammaSchedule,
    coupled_batch,
    coupled_simulate,
    coupling_success,
    dini_gate,
    gamma_schedule,
)
from .metrics import (
    DiscreteMeasure,
    HistogramMeasure,
    kvar_inequality_check,
    wasserstein,
    weighted_variation,
)
from .models import (
    HypothesisReport,
    ModelSpec,
    get_model,
    list_models,
    register_model,
    verify_hypotheses,
)
from .particle import (
    MeasureFlow,
    ParticleCloud,
    PathEnsemble,
    cloud_integral,
    simulate_classical,
    simulate_frozen,
    simulate_interacting,
)
from .paths import StreamKey, TimeGrid, brownian_increments
from .picard import PicardDiagnostics, picard_map, picard_solve, rho_lambda
from .verify import (
    BootstrapCI,
    HarnackReport,
    bootstrap_ci,
    grr_check,
    harnack_check,
    mc_semigroup,
    moment_check,
    ou_oracle,
    stability_check,
)

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "CouplingRun",
    "DiniGate",
    "GammaSchedule",
    "coupled_batch",
    "coupled_simulate",
    "coupling_success",
    "dini_gate",
    "gamma_schedule",
    "DiscreteMeasure",
    "HistogramMeasure",
    "kvar_inequality_check",
    "wasserstein",
    "weighted_variation",
    "HypothesisReport",
    "ModelSpec",
    "get_model",
    "list_models",
    "register_model",
    "verify_hypotheses",
    "MeasureFlow",
    "ParticleCloud",
    "PathEnsemble",
    "cloud_integral",
    "simulate_classical",
    "simulate_frozen",
    "simulate_interacting",
    "StreamKey",
    "TimeGrid",
    "brownian_increments",
    "PicardDiagnostics",
    "picard_map",
    "picard_solve",
    "rho_lambda",
    "BootstrapCI",
    "HarnackReport",
    "bootstrap_ci",
    "grr_check",
    "harnack_check",
    "mc_semigroup",
    "moment_check",
    "ou_oracle",
    "stability_check",
]
