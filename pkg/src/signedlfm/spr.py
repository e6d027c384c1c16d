"""Pairwise trainer: signed pairwise ranking over two levels.

For each user, targets are ordered separately at the spam level and at the
normal level.  A training-visible edge of the level's label outranks both
oppositely-labeled and non-linked targets.  Held-out ("?") edges join the
ranking only through column evidence: when the target has strictly more
than ``xi`` training-visible links of the level's label, the entry ranks
above null and weak-evidence entries (but is never compared against
training-visible entries).  Optimization is stochastic gradient descent on
the log-sigmoid of raw inner-product differences, L2-regularized.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import Iterator, NamedTuple, TextIO

import numpy as np

from .errors import DivergenceError, NoPairsError, SignedLfmError
from .factors import FactorModel, init_model
from .graph import (
    EdgeLabel,
    SignedBipartiteNetwork,
    TrainTestSplit,
    evidence_counts,
)
from .operators import OperatorKind
from .seeding import derive_seed


@dataclass(frozen=True)
class SprConfig:
    alpha: float = 0.005          # SGD learning rate
    lambda_pos: float = 0.01
    lambda_neg: float = 0.01
    xi: int = 2                   # evidence threshold for "?" entries
    iterations: int | None = None  # None = 200 x (visible training edges)
    p0: float = 0.01
    d_pos: int = 30
    d_neg: int = 30
    init_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise SignedLfmError("alpha must be >= 0")
        if self.lambda_pos < 0 or self.lambda_neg < 0:
            raise SignedLfmError("regularization must be >= 0")
        if self.xi < 0:
            raise SignedLfmError("xi must be >= 0")
        if self.iterations is not None and self.iterations < 0:
            raise SignedLfmError("iterations must be >= 0")

    def lam(self, level: EdgeLabel) -> float:
        return self.lambda_neg if level is EdgeLabel.SPAM else self.lambda_pos

    def resolve_iterations(self, split: TrainTestSplit) -> int:
        if self.iterations is not None:
            return self.iterations
        return 200 * (len(split.train_spam) + len(split.train_normal))


class TargetClass:
    HIGHER = "higher"
    AUX_HIGHER = "aux_higher"
    LOWER = "lower"
    INCOMPARABLE = "incomparable"


class RankingTriple(NamedTuple):
    user: int
    higher: int
    lower: int
    level: EdgeLabel


def target_class(
    network: SignedBipartiteNetwork,
    split: TrainTestSplit,
    user: int,
    target: int,
    level: EdgeLabel,
    xi: int,
) -> str:
    """Rank class of ``target`` relative to ``user`` at the given level."""
    visible = split.visible_label(user, target)
    if visible is level:
        return TargetClass.HIGHER
    if visible is not None:
        return TargetClass.LOWER
    if not network.has_edge(user, target):
        return TargetClass.LOWER
    # held-out entry: admit it only on column evidence
    count = sum(
        1
        for u, _ in network.target_adjacency[target]
        if split.visible_label(u, target) is level
    )
    return TargetClass.AUX_HIGHER if count > xi else TargetClass.INCOMPARABLE


class RankingPairSource:
    """Per-user comparable target pairs at one level.

    Emitted relations: known-higher over lower, aux-higher over lower, and
    aux-higher over weak-evidence held-out entries.  "Lower" covers both
    oppositely-labeled training edges and non-linked targets; the latter
    are never materialized — they are addressed through the complement of
    the user's sorted link list, so sampling stays O(degree) even when the
    target space is large.
    """

    def __init__(
        self,
        level: EdgeLabel,
        num_targets: int,
        higher: list[np.ndarray],
        aux: list[np.ndarray],
        incomparable: list[np.ndarray],
        lower_known: list[np.ndarray],
        linked_sorted: list[np.ndarray],
    ):
        self.level = level
        self.num_targets = num_targets
        self.higher = higher
        self.aux = aux
        self.incomparable = incomparable
        self.lower_known = lower_known
        self.linked_sorted = linked_sorted
        self.num_users = len(higher)
        self._top = [
            np.concatenate([higher[u], aux[u]]) for u in range(self.num_users)
        ]
        self._pair_counts = np.array(
            [self.pair_count(u) for u in range(self.num_users)], dtype=np.int64
        )
        self.users_with_pairs = np.flatnonzero(self._pair_counts > 0)

    def lower_count(self, u: int) -> int:
        nulls = self.num_targets - self.linked_sorted[u].size
        return self.lower_known[u].size + nulls

    def pair_count(self, u: int) -> int:
        top = self.higher[u].size + self.aux[u].size
        return top * self.lower_count(u) + self.aux[u].size * self.incomparable[u].size

    @property
    def total_pairs(self) -> int:
        return int(self._pair_counts.sum())

    def _kth_null(self, u: int, k: int) -> int:
        # k-th target id absent from the user's sorted link list
        val = k
        for linked in self.linked_sorted[u]:
            if linked <= val:
                val += 1
            else:
                break
        return int(val)

    def _lower_at(self, u: int, idx: int) -> int:
        known = self.lower_known[u]
        if idx < known.size:
            return int(known[idx])
        return self._kth_null(u, idx - known.size)

    def iter_pairs(self, u: int) -> Iterator[tuple[int, int]]:
        """All (higher, lower) pairs of user u, in sampling index order."""
        lowers = [self._lower_at(u, k) for k in range(self.lower_count(u))]
        for i in self._top[u]:
            for j in lowers:
                yield int(i), j
        for i in self.aux[u]:
            for j in self.incomparable[u]:
                yield int(i), int(j)

    def sample_pair(self, u: int, rng: np.random.Generator) -> tuple[int, int]:
        count = int(self._pair_counts[u])
        if count == 0:
            raise NoPairsError(f"user {u} has no ranking pairs")
        idx = int(rng.integers(count))
        top = self._top[u]
        block = top.size * self.lower_count(u)
        if idx < block:
            hi, lo = divmod(idx, self.lower_count(u))
            return int(top[hi]), self._lower_at(u, lo)
        idx -= block
        a, i = divmod(idx, self.incomparable[u].size)
        return int(self.aux[u][a]), int(self.incomparable[u][i])


def build_ranking_pairs(
    network: SignedBipartiteNetwork,
    split: TrainTestSplit,
    level: EdgeLabel,
    xi: int,
) -> RankingPairSource:
    """Classify every user's targets and assemble the pair source."""
    if xi < 0:
        raise SignedLfmError("xi must be >= 0")
    counts = evidence_counts(network, split, level)
    higher, aux, incomp, lower_known, linked_sorted = [], [], [], [], []
    for u in range(network.num_users):
        hi, au, inc, low, linked = [], [], [], [], []
        for t, _ in network.user_adjacency[u]:
            linked.append(t)
            visible = split.visible_label(u, t)
            if visible is level:
                hi.append(t)
            elif visible is not None:
                low.append(t)
            elif counts[t] > xi:
                au.append(t)
            else:
                inc.append(t)
        arr = lambda xs: np.array(sorted(xs), dtype=np.int64)
        higher.append(arr(hi))
        aux.append(arr(au))
        incomp.append(arr(inc))
        lower_known.append(arr(low))
        linked_sorted.append(arr(linked))
    return RankingPairSource(
        level, network.num_targets, higher, aux, incomp, lower_known, linked_sorted
    )


def sample_triple(
    source: RankingPairSource, rng: np.random.Generator
) -> RankingTriple:
    """Uniform user (among users owning pairs), then uniform pair of that
    user."""
    if source.users_with_pairs.size == 0:
        raise NoPairsError(f"no ranking pairs at level {source.level.value}")
    u = int(source.users_with_pairs[rng.integers(source.users_with_pairs.size)])
    i, j = source.sample_pair(u, rng)
    return RankingTriple(u, i, j, source.level)


def _level_matrices(model: FactorModel, level: EdgeLabel):
    if level is EdgeLabel.SPAM:
        return model.w_neg, model.h_neg
    return model.w_pos, model.h_pos


def triple_objective(
    model: FactorModel, triple: RankingTriple, config: SprConfig
) -> float:
    """Per-triple maximization target restricted to the three touched rows.

    ``ln sigmoid(x)`` for the raw inner-product difference, minus half the
    level's lambda times the squared norms of the three rows; with the
    half, :func:`sgd_step` is exactly one descent step on the negation.
    """
    w, h = _level_matrices(model, triple.level)
    wu, hi, hj = w[triple.user], h[triple.higher], h[triple.lower]
    xhat = float(wu @ (hi - hj))
    lam = config.lam(triple.level)
    reg = 0.5 * lam * (float(wu @ wu) + float(hi @ hi) + float(hj @ hj))
    return -math.log1p(math.exp(-xhat)) - reg if xhat >= 0 \
        else xhat - math.log1p(math.exp(xhat)) - reg


def sgd_step(model: FactorModel, triple: RankingTriple, config: SprConfig) -> None:
    """One in-place SGD update of the three rows the triple touches.

    Only the level's matrices change; the opposite level is untouched.
    All three updates read the pre-step row values.
    """
    w, h = _level_matrices(model, triple.level)
    u, i, j = triple.user, triple.higher, triple.lower
    wu = w[u].copy()
    hi = h[i].copy()
    hj = h[j].copy()
    xhat = float(wu @ (hi - hj))
    if xhat >= 0:  # sigmoid(-xhat) without overflow on either side
        e = math.exp(-xhat)
        g = e / (1.0 + e)
    else:
        g = 1.0 / (1.0 + math.exp(xhat))
    lam = config.lam(triple.level)
    alpha = config.alpha
    w[u] = wu - alpha * (g * (hj - hi) + lam * wu)
    h[i] = hi - alpha * (-g * wu + lam * hi)
    h[j] = hj - alpha * (g * wu + lam * hj)


def spr_training_run(
    config: SprConfig,
    network: SignedBipartiteNetwork,
    split: TrainTestSplit,
) -> Iterator[tuple[int, RankingTriple | None, FactorModel]]:
    """Lazy training loop yielding (step, triple, live model) per slot.

    Slots alternate normal, spam, normal, ...  Each level consumes its own
    RNG stream, so a run truncated after N slots matches a longer run's
    first N slots exactly.  A level with no pairs warns once and its slots
    become no-ops (that side stays at initialization).
    """
    model = init_model(
        network.num_users, network.num_targets,
        config.d_pos, config.d_neg, config.p0,
        scale=config.init_scale, seed=derive_seed(config.seed, "spr/init"),
    )
    sources = {
        EdgeLabel.NORMAL: build_ranking_pairs(network, split, EdgeLabel.NORMAL, config.xi),
        EdgeLabel.SPAM: build_ranking_pairs(network, split, EdgeLabel.SPAM, config.xi),
    }
    rngs = {
        level: np.random.default_rng(derive_seed(config.seed, f"spr/{level.value}"))
        for level in sources
    }
    for level, source in sources.items():
        if source.total_pairs == 0:
            warnings.warn(
                f"no ranking pairs at level {level.value}; "
                "those factors stay at initialization",
                stacklevel=2,
            )
    iterations = config.resolve_iterations(split)
    for step in range(iterations):
        level = EdgeLabel.NORMAL if step % 2 == 0 else EdgeLabel.SPAM
        if sources[level].total_pairs == 0:
            yield step, None, model
            continue
        triple = sample_triple(sources[level], rngs[level])
        sgd_step(model, triple, config)
        w, h = _level_matrices(model, level)
        if not (
            np.isfinite(w[triple.user]).all()
            and np.isfinite(h[triple.higher]).all()
            and np.isfinite(h[triple.lower]).all()
        ):
            raise DivergenceError(f"non-finite factor at step {step}")
        yield step, triple, model


def train_spr(
    config: SprConfig,
    network: SignedBipartiteNetwork,
    split: TrainTestSplit,
    log_stream: TextIO | None = None,
) -> FactorModel:
    """Run the full SGD schedule and return the trained model.

    The optional log gets one line per ~5% of the schedule with the mean
    per-triple ranking loss over that chunk (epoch/loss/elapsed_ms).
    """
    model = None
    iterations = config.resolve_iterations(split)
    log_every = max(1, iterations // 20)
    chunk_losses: list[float] = []
    chunk_index = 0
    started = time.perf_counter()
    for step, triple, model in spr_training_run(config, network, split):
        if log_stream is not None and triple is not None:
            w, h = _level_matrices(model, triple.level)
            xhat = float(w[triple.user] @ (h[triple.higher] - h[triple.lower]))
            chunk_losses.append(np.logaddexp(0.0, -xhat))
        if log_stream is not None and (step + 1) % log_every == 0:
            elapsed_ms = int(round((time.perf_counter() - started) * 1000))
            loss = float(np.mean(chunk_losses)) if chunk_losses else float("nan")
            log_stream.write(f"{chunk_index}\t{loss!r}\t{elapsed_ms}\n")
            chunk_losses.clear()
            chunk_index += 1
            started = time.perf_counter()
    if model is None:  # zero iterations: nothing yielded
        model = init_model(
            network.num_users, network.num_targets,
            config.d_pos, config.d_neg, config.p0,
            scale=config.init_scale, seed=derive_seed(config.seed, "spr/init"),
        )
    return model


def rank_held_out(
    model: FactorModel,
    split: TrainTestSplit,
    kind: OperatorKind = OperatorKind.IP_NEG,
) -> list[tuple[int, int, float]]:
    """Held-out edges in descending raw inner-product order.

    For the spam-side product high ranks are suspicious; for the
    normal-side product consumers read suspicion from the bottom of the
    list.  Ties break by (user, target) so the order is total.
    """
    if kind not in (OperatorKind.IP_NEG, OperatorKind.IP_POS):
        raise SignedLfmError(f"rank_held_out needs an inner-product kind, got {kind}")
    score = model.raw_neg if kind is OperatorKind.IP_NEG else model.raw_pos
    scored = [(u, t, score(u, t)) for u, t in sorted(split.held_out)]
    scored.sort(key=lambda row: (-row[2], row[0], row[1]))
    return scored


def write_pair_dump(source: RankingPairSource, stream: TextIO) -> None:
    """Exhaustive `level user higher lower` dump, for debugging small nets."""
    for u in range(source.num_users):
        for i, j in source.iter_pairs(u):
            stream.write(f"{source.level.value}\t{u}\t{i}\t{j}\n")
