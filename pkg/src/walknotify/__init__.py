"""Context-aware nearby-barrier notification for pedestrians.

Core pieces: spherical geometry and a grid index (:mod:`walknotify.geo`),
the content/trace store (:mod:`walknotify.store`), a discrete Bayesian
reaction model (:mod:`walknotify.bayes`), the selection pipeline
(:mod:`walknotify.selector`), an HTTP service (:mod:`walknotify.service`),
and a deterministic simulator/evaluator (:mod:`walknotify.sim`).
"""

__version__ = "0.1.0"

from .geo import GeoPoint, GridIndex, haversine_distance, in_sector, initial_bearing
from .store import ContentRecord, ContentStore, Fix, HeadingEstimate, TimeWindow
from .bayes import (
    BayesNet,
    CandidateMap,
    ReactionRecord,
    default_candidates,
    default_structure,
    infer_posterior,
    k_fold_cv,
    learn_parameters,
    predict_reaction,
)
from .selector import Notification, SelectionPipeline, SelectorConfig, UserContext, classify_timing
from .service import create_app
from .sim import GroundTruthSpec, Route, default_ground_truth, eval_report, gen_dataset, replay

__all__ = [
    "__version__",
    "GeoPoint",
    "GridIndex",
    "haversine_distance",
    "initial_bearing",
    "in_sector",
    "ContentRecord",
    "ContentStore",
    "Fix",
    "HeadingEstimate",
    "TimeWindow",
    "BayesNet",
    "CandidateMap",
    "ReactionRecord",
    "default_candidates",
    "default_structure",
    "infer_posterior",
    "k_fold_cv",
    "learn_parameters",
    "predict_reaction",
    "Notification",
    "SelectionPipeline",
    "SelectorConfig",
    "UserContext",
    "classify_timing",
    "create_app",
    "GroundTruthSpec",
    "Route",
    "default_ground_truth",
    "eval_report",
    "gen_dataset",
    "replay",
]
