"""Ranking/classification metrics and the three experiment protocols.

Protocols: a labeled-fraction sweep (AUC on held-out edges), a
class-imbalance study (F-measure on a 1:10 spam:normal test resample with
the training normal count pinned), and a graph-incompleteness study
(F-measure after random edge removal at a fixed 40% label budget).  Every
method in a protocol cell shares the same split, and all randomness flows
from the supplied seeds, so reports are byte-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .detect import (
    DecisionPolicy,
    Threshold,
    TopK,
    decide,
    train_classifier,
)
from .errors import ProtocolError, SignedLfmError, UndefinedMetricError
from .factors import FactorModel
from .graph import (
    EdgeLabel,
    SignedBipartiteNetwork,
    TrainTestSplit,
    drop_edges,
    make_split,
)
from .mrle import MrleConfig, augment_with_auxiliary, train_mrle
from .operators import OperatorKind, operator_features
from .seeding import derive_seed
from .spr import SprConfig, rank_held_out, train_spr


# ---------------------------------------------------------------------------
# metrics

def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-based (Mann-Whitney) AUC with ties counted as half wins."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise SignedLfmError("scores and labels must be equal-length vectors")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            f"AUC needs both classes, got {n_pos} positive / {n_neg} negative"
        )
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(s.size, dtype=np.float64)
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and s[order[j + 1]] == s[order[i]]:
            j += 1
        # 1-based ranks; tied block shares the mean rank, a multiple of 0.5
        ranks[order[i : j + 1]] = (i + 1 + j + 1) / 2.0
        i = j + 1
    pos_rank_sum = float(np.sum(ranks[y == 1]))
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def precision_at_k(
    ranked_edges: Sequence[tuple], labels: dict[tuple[int, int], int], k: int
) -> float:
    """Spam fraction among the k top-ranked edges.

    ``ranked_edges`` items start with (user, target); ``labels`` maps those
    keys to 1 (spam) / 0 (normal).
    """
    if not (1 <= k <= len(ranked_edges)):
        raise SignedLfmError(f"k must be in [1, {len(ranked_edges)}], got {k}")
    hits = sum(labels[(e[0], e[1])] for e in ranked_edges[:k])
    return hits / k


def f_measure(decisions: np.ndarray, labels: np.ndarray) -> float:
    """F1 with spam as the positive class; 0.0 when precision+recall = 0."""
    d = np.asarray(decisions)
    y = np.asarray(labels)
    if d.shape != y.shape:
        raise SignedLfmError("decisions and labels must align")
    tp = int(np.sum((d == 1) & (y == 1)))
    fp = int(np.sum((d == 1) & (y == 0)))
    fn = int(np.sum((d == 0) & (y == 1)))
    if 2 * tp + fp + fn == 0:
        return 0.0
    return 2 * tp / (2 * tp + fp + fn)


# ---------------------------------------------------------------------------
# methods

TRAINERS = ("mrle", "mrle-non", "mrle+au", "spr", "mrle-spr")


@dataclass(frozen=True)
class MethodSpec:
    trainer: str
    operator: OperatorKind

    def __post_init__(self):
        if self.trainer not in TRAINERS:
            raise SignedLfmError(f"unknown trainer {self.trainer!r}")

    @property
    def name(self) -> str:
        return f"{self.trainer}_{self.operator.value}"


def parse_method(name: str) -> MethodSpec:
    trainer, _, op = name.rpartition("_")
    try:
        return MethodSpec(trainer, OperatorKind(op))
    except ValueError:
        raise SignedLfmError(f"bad method name {name!r}") from None


DEFAULT_METHODS = (
    MethodSpec("mrle", OperatorKind.CON),
    MethodSpec("spr", OperatorKind.CON),
)


# ---------------------------------------------------------------------------
# protocols

@dataclass(frozen=True)
class LabelSweep:
    fractions: tuple[float, ...] = (0.2, 0.25, 0.3, 0.4, 0.5)
    metrics: tuple[str, ...] = ("auc",)
    precision_ks: tuple[int, ...] = ()
    name: str = field(default="label_sweep", init=False)


@dataclass(frozen=True)
class Imbalance:
    fractions: tuple[float, ...] = (0.2, 0.25, 0.3, 0.4, 0.5)
    test_normal_per_spam: int = 10
    name: str = field(default="imbalance", init=False)


@dataclass(frozen=True)
class Incompleteness:
    degrees: tuple[float, ...] = (0.0, 0.03, 0.05, 0.07, 0.10)
    label_fraction: float = 0.4
    name: str = field(default="incompleteness", init=False)


Protocol = LabelSweep | Imbalance | Incompleteness


@dataclass(frozen=True)
class ReportRow:
    protocol: str
    setting: float
    method: str
    metric: str
    value: float
    seed: int


@dataclass
class EvaluationReport:
    protocol: str
    rows: list[ReportRow]
    snapshot: dict

    CSV_HEADER = "protocol,setting,method,metric,value,seed"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        lines.extend(
            f"{r.protocol},{r.setting!r},{r.method},{r.metric},{r.value!r},{r.seed}"
            for r in self.rows
        )
        return "\n".join(lines) + "\n"

    def values(self, method: str, metric: str) -> dict[float, list[float]]:
        """setting -> per-seed values, for trend checks."""
        out: dict[float, list[float]] = {}
        for r in self.rows:
            if r.method == method and r.metric == metric:
                out.setdefault(r.setting, []).append(r.value)
        return out

    def summary_table(self) -> str:
        """Aligned mean-over-seeds table, settings as columns."""
        settings = sorted({r.setting for r in self.rows})
        cells: dict[tuple[str, str], dict[float, list[float]]] = {}
        for r in self.rows:
            cells.setdefault((r.method, r.metric), {}).setdefault(
                r.setting, []
            ).append(r.value)
        name_w = max((len(f"{m} ({k})") for m, k in cells), default=10)
        header = "".rjust(name_w) + "".join(f"{s:>10g}" for s in settings)
        lines = [header]
        for (method, metric), by_setting in sorted(cells.items()):
            row = f"{method} ({metric})".rjust(name_w)
            for s in settings:
                vals = by_setting.get(s)
                row += f"{np.mean(vals):>10.4f}" if vals else " " * 10
            lines.append(row)
        return "\n".join(lines)


@dataclass(frozen=True)
class RunSettings:
    """Trainer and classifier knobs shared by all experiment cells."""

    mrle: MrleConfig = MrleConfig()
    spr: SprConfig = SprConfig()
    clf_l2: float = 1e-4
    clf_learning_rate: float = 0.1
    clf_epochs: int = 500
    au_fraction: float = 0.01  # held-out share promoted by the +au variant
    policy: DecisionPolicy | None = None  # None = per-method default


def labeled_edges(
    network: SignedBipartiteNetwork, keys: Sequence[tuple[int, int]]
) -> tuple[list[tuple[int, int]], np.ndarray]:
    """Edges with ground-truth labels, plus their 1/0 label vector."""
    pairs = []
    labels = []
    label_by_key = {(e.user, e.target): e.label for e in network.edges}
    for key in sorted(keys):
        label = label_by_key[key]
        if label is None:
            continue
        pairs.append(key)
        labels.append(1 if label is EdgeLabel.SPAM else 0)
    return pairs, np.array(labels, dtype=np.int64)


def _train_base(
    base: str,
    network: SignedBipartiteNetwork,
    split: TrainTestSplit,
    settings: RunSettings,
    seed: int,
    cache: dict[str, FactorModel],
    cell: str,
) -> FactorModel:
    if base in cache:
        return cache[base]
    if base == "mrle":
        cfg = _with_seed(settings.mrle, derive_seed(seed, f"mrle:{cell}"))
        model = train_mrle(cfg, network, split)
    elif base == "mrle-non":
        cfg = _with_seed(settings.mrle, derive_seed(seed, f"mrle-non:{cell}"))
        cfg = MrleConfig(**{**asdict(cfg), "use_non": False})
        model = train_mrle(cfg, network, split)
    elif base == "mrle+au":
        spr_model = _train_base("spr", network, split, settings, seed, cache, cell)
        ranked = rank_held_out(spr_model, split, OperatorKind.IP_NEG)
        k = math.floor(settings.au_fraction * len(split.held_out))
        augmented = augment_with_auxiliary(split, [(r[0], r[1]) for r in ranked], k)
        cfg = _with_seed(settings.mrle, derive_seed(seed, f"mrle+au:{cell}"))
        model = train_mrle(cfg, network, augmented)
        cache["mrle+au/split"] = augmented  # classifier trains on what it saw
    elif base == "spr":
        cfg = _with_seed(settings.spr, derive_seed(seed, f"spr:{cell}"))
        model = train_spr(cfg, network, split)
    else:
        raise SignedLfmError(f"unknown trainer base {base!r}")
    cache[base] = model
    return model


def _with_seed(cfg, seed):
    data = asdict(cfg)
    data["seed"] = seed
    return type(cfg)(**data)


def edge_feature_matrix(
    models: Sequence[FactorModel],
    operator: OperatorKind,
    pairs: list[tuple[int, int]],
) -> np.ndarray:
    """Operator features per edge; multiple models concatenate columnwise."""
    mats = [operator_features(operator, m, pairs) for m in models]
    return np.hstack(mats) if len(mats) > 1 else mats[0]


def suspicion_scores(
    models: Sequence[FactorModel],
    operator: OperatorKind,
    split: TrainTestSplit,
    eval_pairs: list[tuple[int, int]],
    settings: RunSettings,
) -> np.ndarray:
    """Per-edge suspicion for the evaluation pairs.

    Inner-product operators rank directly (normal-side products are
    negated so that high always means suspicious); the vector operators
    train a logistic classifier on the split's visible edges, spam
    features first, both halves in sorted edge order.
    """
    if operator is OperatorKind.IP_NEG:
        return edge_feature_matrix(models, operator, eval_pairs).sum(axis=1)
    if operator is OperatorKind.IP_POS:
        return -edge_feature_matrix(models, operator, eval_pairs).sum(axis=1)
    train_pairs = sorted(split.train_spam) + sorted(split.train_normal)
    train_labels = np.array(
        [1] * len(split.train_spam) + [0] * len(split.train_normal)
    )
    clf = train_classifier(
        edge_feature_matrix(models, operator, train_pairs),
        train_labels,
        l2=settings.clf_l2,
        learning_rate=settings.clf_learning_rate,
        epochs=settings.clf_epochs,
    )
    return clf.predict_many(edge_feature_matrix(models, operator, eval_pairs))


def method_scores(
    method: MethodSpec,
    network: SignedBipartiteNetwork,
    split: TrainTestSplit,
    eval_pairs: list[tuple[int, int]],
    settings: RunSettings,
    seed: int,
    cache: dict,
    cell: str,
) -> np.ndarray:
    """Train whatever the method needs, then score the evaluation pairs."""
    bases = ("mrle", "spr") if method.trainer == "mrle-spr" else (method.trainer,)
    models = [
        _train_base(b, network, split, settings, seed, cache, cell) for b in bases
    ]
    train_split = cache.get("mrle+au/split", split) \
        if method.trainer == "mrle+au" else split
    return suspicion_scores(models, method.operator, train_split, eval_pairs, settings)


def default_policy(
    operator: OperatorKind, split: TrainTestSplit, n_eval: int
) -> DecisionPolicy:
    """Threshold 0.5 for classifier probabilities; for raw inner-product
    rankings, a top-k cut at the known (training-label) spam prevalence."""
    if operator in (OperatorKind.IP_NEG, OperatorKind.IP_POS):
        known = len(split.train_spam) + len(split.train_normal)
        prevalence = len(split.train_spam) / known if known else 0.0
        return TopK(min(n_eval, round(prevalence * n_eval)))
    return Threshold(0.5)


def _evaluate_cell(
    protocol_name: str,
    setting: float,
    seed: int,
    network: SignedBipartiteNetwork,
    split: TrainTestSplit,
    eval_pairs: list[tuple[int, int]],
    eval_labels: np.ndarray,
    methods: Sequence[MethodSpec],
    settings: RunSettings,
    metrics: tuple[str, ...],
    precision_ks: tuple[int, ...],
    cell: str,
) -> list[ReportRow]:
    rows = []
    cache: dict = {}
    for method in methods:
        scores = method_scores(
            method, network, split, eval_pairs, settings, seed, cache, cell
        )
        for metric in metrics:
            if metric == "auc":
                value = auc(scores, eval_labels)
            elif metric == "f_measure":
                policy = settings.policy or default_policy(
                    method.operator, split, len(eval_pairs)
                )
                value = f_measure(decide(scores, policy), eval_labels)
            else:
                raise SignedLfmError(f"unknown metric {metric!r}")
            rows.append(
                ReportRow(protocol_name, setting, method.name, metric, value, seed)
            )
        if precision_ks:
            order = np.argsort(-scores, kind="stable")
            ranked = [eval_pairs[i] for i in order]
            label_map = dict(zip(eval_pairs, (int(v) for v in eval_labels)))
            for k in precision_ks:
                value = precision_at_k(ranked, label_map, min(k, len(ranked)))
                rows.append(
                    ReportRow(
                        protocol_name, setting, method.name, f"p@{k}", value, seed
                    )
                )
    return rows


def run_experiment(
    protocol: Protocol,
    network: SignedBipartiteNetwork,
    methods: Sequence[MethodSpec] = DEFAULT_METHODS,
    seeds: Sequence[int] = (0,),
    settings: RunSettings = RunSettings(),
) -> EvaluationReport:
    """Run every (setting, seed, method) cell of one protocol."""
    rows: list[ReportRow] = []
    if isinstance(protocol, LabelSweep):
        for fraction in protocol.fractions:
            for seed in seeds:
                cell = f"{fraction!r}"
                split = make_split(
                    network, fraction, balance=True,
                    seed=derive_seed(seed, f"split:{cell}"),
                )
                eval_pairs, eval_labels = labeled_edges(network, split.held_out)
                rows.extend(
                    _evaluate_cell(
                        protocol.name, fraction, seed, network, split,
                        eval_pairs, eval_labels, methods, settings,
                        protocol.metrics, protocol.precision_ks, cell,
                    )
                )
    elif isinstance(protocol, Imbalance):
        for fraction in protocol.fractions:
            for seed in seeds:
                cell = f"imb:{fraction!r}"
                split, eval_pairs, eval_labels = _imbalance_cell(
                    network, fraction, protocol.test_normal_per_spam, seed, cell
                )
                rows.extend(
                    _evaluate_cell(
                        protocol.name, fraction, seed, network, split,
                        eval_pairs, eval_labels, methods, settings,
                        ("f_measure",), (), cell,
                    )
                )
    elif isinstance(protocol, Incompleteness):
        for degree in protocol.degrees:
            for seed in seeds:
                reduced = drop_edges(network, degree, derive_seed(seed, f"drop:{degree!r}"))
                cell = f"{protocol.label_fraction!r}"
                split = make_split(
                    reduced, protocol.label_fraction, balance=True,
                    seed=derive_seed(seed, f"split:{cell}"),
                )
                eval_pairs, eval_labels = labeled_edges(reduced, split.held_out)
                rows.extend(
                    _evaluate_cell(
                        protocol.name, degree, seed, reduced, split,
                        eval_pairs, eval_labels, methods, settings,
                        ("f_measure",), (), cell,
                    )
                )
    else:
        raise SignedLfmError(f"unknown protocol {protocol!r}")
    snapshot = {
        "protocol": asdict(protocol) | {"name": protocol.name},
        "methods": [m.name for m in methods],
        "seeds": list(seeds),
        "mrle": asdict(settings.mrle),
        "spr": asdict(settings.spr),
        "classifier": {
            "l2": settings.clf_l2,
            "learning_rate": settings.clf_learning_rate,
            "epochs": settings.clf_epochs,
        },
        "au_fraction": settings.au_fraction,
    }
    return EvaluationReport(protocol.name, rows, snapshot)


def _imbalance_cell(network, fraction, normals_per_spam, seed, cell):
    """Training split with a pinned normal budget, plus a 1:10 test set."""
    spam_keys = [
        (e.user, e.target) for e in network.edges if e.label is EdgeLabel.SPAM
    ]
    normal_keys = [
        (e.user, e.target) for e in network.edges if e.label is EdgeLabel.NORMAL
    ]
    if not spam_keys or not normal_keys:
        raise ProtocolError("imbalance protocol needs both classes")
    rng = np.random.default_rng(derive_seed(seed, f"split:{cell}"))
    n_spam = math.ceil(fraction * len(spam_keys))
    n_normal_budget = math.ceil(0.5 * len(spam_keys))
    if len(normal_keys) < n_normal_budget:
        raise ProtocolError(
            f"need {n_normal_budget} training normals, have {len(normal_keys)}"
        )
    spam_pick = rng.choice(len(spam_keys), size=n_spam, replace=False)
    normal_pick = rng.choice(len(normal_keys), size=n_normal_budget, replace=False)
    train_spam = frozenset(spam_keys[i] for i in spam_pick)
    train_normal = frozenset(normal_keys[i] for i in normal_pick)
    held_out = frozenset(
        (e.user, e.target)
        for e in network.edges
        if (e.user, e.target) not in train_spam
        and (e.user, e.target) not in train_normal
    )
    split = TrainTestSplit(train_spam, train_normal, held_out, seed)
    test_spam = sorted(set(spam_keys) - train_spam)
    free_normals = sorted(set(normal_keys) - train_normal)
    n_test_normal = normals_per_spam * len(test_spam)
    if len(free_normals) < n_test_normal:
        raise ProtocolError(
            f"imbalanced test set needs {n_test_normal} normals, "
            f"only {len(free_normals)} are unused"
        )
    rng_test = np.random.default_rng(derive_seed(seed, f"test:{cell}"))
    normal_pick = rng_test.choice(len(free_normals), size=n_test_normal, replace=False)
    test_normal = [free_normals[i] for i in normal_pick]
    eval_pairs = sorted(test_spam) + sorted(test_normal)
    eval_labels = np.array([1] * len(test_spam) + [0] * len(test_normal))
    return split, eval_pairs, eval_labels
