"""Generalized linear bandits with constant per-step cost and hash-based
sublinear arm selection.

Pieces: reward families (``families``), the online Newton learner (``ons``),
budget-driven confidence ellipsoids (``confidence``), arm-selection rules
(``policies``), sign-projection MIPS hashing (``hashing``), sampled
inner-product estimators (``sampling``), the simulation harness (``envs``)
and the command-line front end (``cli``).
"""

__version__ = "0.1.0"

from .families import FamilyConstants, GlmFamily, make_family
from .ons import OnsGlmLearner, ball_projection
from .confidence import Ellipsoid, OnlineConfidenceSet, RefinedConfidenceSet, radius_scale
from .policies import (
    ArmSet,
    QglocQuery,
    arm_norm_floor,
    default_c0,
    gloc_select,
    gloc_ts_select,
    glm_mle,
    make_arm_set,
    qgloc_query,
    qgloc_select,
    quadratic_features,
    ucb_glm_select,
)
from .sampling import SamplingScheme, gaussian_variance_study, hoeffding_bound
from .hashing import HashIndex, MipsSeries, qgloc_score_bounds, series_depth
from .envs import RegretTrace, TrialSpec, gen_instance, run_trial, step_regret

__all__ = [
    "ArmSet",
    "Ellipsoid",
    "FamilyConstants",
    "GlmFamily",
    "HashIndex",
    "MipsSeries",
    "OnlineConfidenceSet",
    "OnsGlmLearner",
    "QglocQuery",
    "RefinedConfidenceSet",
    "RegretTrace",
    "SamplingScheme",
    "TrialSpec",
    "arm_norm_floor",
    "ball_projection",
    "default_c0",
    "gaussian_variance_study",
    "gen_instance",
    "gloc_select",
    "gloc_ts_select",
    "glm_mle",
    "hoeffding_bound",
    "make_arm_set",
    "make_family",
    "qgloc_query",
    "qgloc_score_bounds",
    "qgloc_select",
    "quadratic_features",
    "radius_scale",
    "run_trial",
    "series_depth",
    "step_regret",
    "ucb_glm_select",
]
