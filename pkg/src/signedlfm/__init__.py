"""Signed latent factor mining for spam-activity detection.

Contaminated bipartite user-target networks are treated as signed
networks; two trainers (pointwise multi-relational likelihood estimation
and signed pairwise ranking) mine per-entity normal/spam factor vectors,
which five combination operators turn into edge features or suspicion
scores.
"""

__version__ = "0.1.0"

from .detect import LinearClassifier, Threshold, TopK, decide, train_classifier
from .errors import SignedLfmError
from .evaluate import (
    EvaluationReport,
    Imbalance,
    Incompleteness,
    LabelSweep,
    MethodSpec,
    RunSettings,
    auc,
    f_measure,
    precision_at_k,
    run_experiment,
)
from .factors import EdgeScore, FactorModel, activation, edge_scores, init_model
from .graph import (
    Edge,
    EdgeLabel,
    SignedBipartiteNetwork,
    TrainTestSplit,
    drop_edges,
    evidence_count,
    make_split,
    parse_edge_list,
)
from .mrle import (
    MrleConfig,
    RelationSets,
    augment_with_auxiliary,
    mrle_objective,
    train_mrle,
)
from .operators import OperatorKind, apply_operator
from .spr import (
    RankingTriple,
    SprConfig,
    build_ranking_pairs,
    rank_held_out,
    sample_triple,
    sgd_step,
    target_class,
    train_spr,
    triple_objective,
)
from .synth import SynthParams, generate

__all__ = [
    "EdgeLabel",
    "Edge",
    "SignedBipartiteNetwork",
    "TrainTestSplit",
    "parse_edge_list",
    "make_split",
    "evidence_count",
    "drop_edges",
    "FactorModel",
    "EdgeScore",
    "activation",
    "edge_scores",
    "init_model",
    "MrleConfig",
    "RelationSets",
    "mrle_objective",
    "train_mrle",
    "augment_with_auxiliary",
    "SprConfig",
    "RankingTriple",
    "target_class",
    "build_ranking_pairs",
    "sample_triple",
    "triple_objective",
    "sgd_step",
    "train_spr",
    "rank_held_out",
    "OperatorKind",
    "apply_operator",
    "LinearClassifier",
    "train_classifier",
    "Threshold",
    "TopK",
    "decide",
    "auc",
    "precision_at_k",
    "f_measure",
    "LabelSweep",
    "Imbalance",
    "Incompleteness",
    "MethodSpec",
    "RunSettings",
    "run_experiment",
    "EvaluationReport",
    "SynthParams",
    "generate",
    "SignedLfmError",
]
