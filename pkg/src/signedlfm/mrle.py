"""Pointwise trainer: multi-relational likelihood estimation.

Minimizes the negative log-likelihood of three relation kinds over the
training-visible edges: a normal edge wants a high normal signal and a low
spam signal, a spam edge the opposite, and a sampled non-linked pair wants
both signals low.  Held-out edges belong to none of the three sets — they
exist in the network, so they are also never eligible as non-linked pairs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .errors import DivergenceError, SignedLfmError
from .factors import (
    FactorModel,
    activation_array,
    init_model,
    log_activation,
    log_one_minus_activation,
)
from .graph import SignedBipartiteNetwork, TrainTestSplit
from .seeding import derive_seed


@dataclass(frozen=True)
class MrleConfig:
    n: int = 20                  # non-linked samples per entity per epoch
    learning_rate: float = 0.005
    epochs: int = 2000
    p0: float = 0.01
    d_pos: int = 30
    d_neg: int = 30
    init_scale: float = 0.1
    seed: int = 0
    use_non: bool = True         # False = ablation without null relations

    def __post_init__(self):
        if self.n < 0:
            raise SignedLfmError(f"n must be >= 0, got {self.n}")
        if self.learning_rate < 0:
            raise SignedLfmError("learning_rate must be >= 0")
        if self.epochs < 0:
            raise SignedLfmError("epochs must be >= 0")
        if not (0.0 < self.p0 < 1.0):
            raise SignedLfmError(f"p0 must be in (0, 1), got {self.p0}")

    @property
    def effective_n(self) -> int:
        return self.n if self.use_non else 0


class RelationSets:
    """Normal, spam, and non-linked pairs with per-entity index views.

    ``user_nor[u]`` is the array of targets normally linked to user u, and
    so on for the other five views; the pair lists and the views enumerate
    the same multisets.
    """

    def __init__(
        self,
        num_users: int,
        num_targets: int,
        nor: list[tuple[int, int]],
        sp: list[tuple[int, int]],
        non: list[tuple[int, int]],
    ):
        if set(nor) & set(sp):
            raise SignedLfmError("normal and spam relation sets overlap")
        self.nor = tuple(nor)
        self.sp = tuple(sp)
        self.non = tuple(non)
        self.user_nor = _group(nor, num_users, by_user=True)
        self.user_sp = _group(sp, num_users, by_user=True)
        self.user_non = _group(non, num_users, by_user=True)
        self.target_nor = _group(nor, num_targets, by_user=False)
        self.target_sp = _group(sp, num_targets, by_user=False)
        self.target_non = _group(non, num_targets, by_user=False)

    @classmethod
    def from_split(
        cls,
        network: SignedBipartiteNetwork,
        split: TrainTestSplit,
        non: list[tuple[int, int]] = (),
    ) -> "RelationSets":
        for u, t in non:
            if network.has_edge(u, t):
                raise SignedLfmError(
                    f"non-linked pair ({u}, {t}) has an edge in the network"
                )
        return cls(
            network.num_users,
            network.num_targets,
            sorted(split.train_normal),
            sorted(split.train_spam),
            sorted(set(non)),
        )


def _group(pairs, count, by_user):
    buckets: list[list[int]] = [[] for _ in range(count)]
    for u, t in pairs:
        if by_user:
            buckets[u].append(t)
        else:
            buckets[t].append(u)
    return tuple(np.array(sorted(b), dtype=np.int64) for b in buckets)


def mrle_objective(model: FactorModel, relations: RelationSets) -> float:
    """Negative log-likelihood over the three relation sets.

    Log terms are evaluated in a saturation-safe form, and the final sum
    uses ``math.fsum`` so the value is independent of edge enumeration
    order (exact under entity relabeling).
    """
    terms: list[np.ndarray] = []
    for pairs, want_pos, want_neg in (
        (relations.nor, True, False),
        (relations.sp, False, True),
        (relations.non, False, False),
    ):
        if not pairs:
            continue
        us = np.fromiter((u for u, _ in pairs), dtype=np.int64, count=len(pairs))
        ts = np.fromiter((t for _, t in pairs), dtype=np.int64, count=len(pairs))
        x_pos = np.einsum("ij,ij->i", model.w_pos[us], model.h_pos[ts])
        x_neg = np.einsum("ij,ij->i", model.w_neg[us], model.h_neg[ts])
        lp = log_activation(x_pos, model.p0) if want_pos \
            else log_one_minus_activation(x_pos, model.p0)
        ln = log_activation(x_neg, model.p0) if want_neg \
            else log_one_minus_activation(x_neg, model.p0)
        terms.append(-(lp + ln))
    if not terms:
        return 0.0
    return math.fsum(np.concatenate(terms).tolist())


def mrle_user_gradient(
    model: FactorModel, u: int, relations: RelationSets
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the objective with respect to user u's two vectors.

    Normal links pull the normal signal up, spam and non-linked pairs push
    it down; the spam side mirrors this with the roles of the labels
    swapped.
    """
    return _entity_gradient(
        pos_vec=model.w_pos[u], neg_vec=model.w_neg[u],
        pos_mat=model.h_pos, neg_mat=model.h_neg,
        attract=relations.user_nor[u], repel=relations.user_sp[u],
        absent=relations.user_non[u], p0=model.p0,
    )


def mrle_target_gradient(
    model: FactorModel, t: int, relations: RelationSets
) -> tuple[np.ndarray, np.ndarray]:
    """Mirror of :func:`mrle_user_gradient` for target t."""
    return _entity_gradient(
        pos_vec=model.h_pos[t], neg_vec=model.h_neg[t],
        pos_mat=model.w_pos, neg_mat=model.w_neg,
        attract=relations.target_nor[t], repel=relations.target_sp[t],
        absent=relations.target_non[t], p0=model.p0,
    )


def _entity_gradient(pos_vec, neg_vec, pos_mat, neg_mat, attract, repel, absent, p0):
    # attract = normally-linked counterparts (raise F+), repel = spam-linked
    # (raise F-), absent = sampled non pairs (lower both).
    g_pos = np.zeros_like(pos_vec)
    g_neg = np.zeros_like(neg_vec)
    if attract.size:
        rows = pos_mat[attract]
        f = activation_array(rows @ pos_vec, p0)
        g_pos -= (1.0 - f) @ rows
        rows_n = neg_mat[attract]
        f_n = activation_array(rows_n @ neg_vec, p0)
        g_neg += f_n @ rows_n
    if repel.size:
        rows = pos_mat[repel]
        f = activation_array(rows @ pos_vec, p0)
        g_pos += f @ rows
        rows_n = neg_mat[repel]
        f_n = activation_array(rows_n @ neg_vec, p0)
        g_neg -= (1.0 - f_n) @ rows_n
    if absent.size:
        rows = pos_mat[absent]
        f = activation_array(rows @ pos_vec, p0)
        g_pos += f @ rows
        rows_n = neg_mat[absent]
        f_n = activation_array(rows_n @ neg_vec, p0)
        g_neg += f_n @ rows_n
    return g_pos, g_neg


def sample_non_linked(
    network: SignedBipartiteNetwork,
    entity: int,
    n: int,
    rng: np.random.Generator,
    side: str = "user",
) -> np.ndarray:
    """Up to n counterpart ids with no edge (of any kind) to ``entity``.

    Held-out edges are real edges, so their endpoints are ineligible.
    Uniform without replacement; all eligible ids if fewer than n exist.
    """
    if n < 0:
        raise SignedLfmError("n must be >= 0")
    if side == "user":
        linked = np.fromiter(
            (t for t, _ in network.user_adjacency[entity]), dtype=np.int64
        )
        pool = network.num_targets
    elif side == "target":
        linked = np.fromiter(
            (u for u, _ in network.target_adjacency[entity]), dtype=np.int64
        )
        pool = network.num_users
    else:
        raise SignedLfmError(f"side must be 'user' or 'target', got {side!r}")
    eligible = np.setdiff1d(np.arange(pool, dtype=np.int64), linked)
    if n == 0 or eligible.size == 0:
        return eligible[:0]
    if eligible.size <= n:
        return eligible
    return np.sort(rng.choice(eligible, size=n, replace=False))


def sample_non_pairs(
    network: SignedBipartiteNetwork, n: int, rng: np.random.Generator
) -> list[tuple[int, int]]:
    """One round of non-linked sampling: n targets per user, n users per
    target, deduplicated into a single pair set."""
    pairs: set[tuple[int, int]] = set()
    for u in range(network.num_users):
        for t in sample_non_linked(network, u, n, rng, side="user"):
            pairs.add((u, int(t)))
    for t in range(network.num_targets):
        for u in sample_non_linked(network, t, n, rng, side="target"):
            pairs.add((int(u), t))
    return sorted(pairs)


def train_mrle(
    config: MrleConfig,
    network: SignedBipartiteNetwork,
    split: TrainTestSplit,
    log_stream: TextIO | None = None,
) -> FactorModel:
    """Alternating per-entity gradient sweeps over users then targets.

    Non-linked pairs are resampled each epoch; the logged loss is computed
    against a non-linked sample that is fixed up front, so the log line
    series is comparable across epochs (format: epoch/loss/elapsed_ms,
    tab-separated).
    """
    model = init_model(
        network.num_users, network.num_targets,
        config.d_pos, config.d_neg, config.p0,
        scale=config.init_scale, seed=derive_seed(config.seed, "mrle/init"),
    )
    n = config.effective_n
    rng_epoch = np.random.default_rng(derive_seed(config.seed, "mrle/non"))
    rng_val = np.random.default_rng(derive_seed(config.seed, "mrle/validation-non"))
    validation = RelationSets.from_split(
        network, split, sample_non_pairs(network, n, rng_val) if n else []
    )
    lr = config.learning_rate
    for epoch in range(config.epochs):
        started = time.perf_counter()
        non = sample_non_pairs(network, n, rng_epoch) if n else []
        relations = RelationSets.from_split(network, split, non)
        for u in range(network.num_users):
            g_pos, g_neg = mrle_user_gradient(model, u, relations)
            model.w_pos[u] -= lr * g_pos
            model.w_neg[u] -= lr * g_neg
        for t in range(network.num_targets):
            g_pos, g_neg = mrle_target_gradient(model, t, relations)
            model.h_pos[t] -= lr * g_pos
            model.h_neg[t] -= lr * g_neg
        loss = mrle_objective(model, validation)
        if not math.isfinite(loss):
            raise DivergenceError(
                f"non-finite training loss at epoch {epoch}", epoch=epoch
            )
        if log_stream is not None:
            elapsed_ms = int(round((time.perf_counter() - started) * 1000))
            log_stream.write(f"{epoch}\t{loss!r}\t{elapsed_ms}\n")
    return model


def augment_with_auxiliary(
    split: TrainTestSplit,
    ranked_edges: list[tuple[int, int]],
    k: int,
) -> TrainTestSplit:
    """Move the k top-ranked held-out edges into the visible spam set.

    ``ranked_edges`` is a descending suspicion ranking of held-out edges
    (spam-side inner product).  The promoted edges keep no memory of their
    true label — that is the point of the augmentation.
    """
    if not (0 <= k <= len(split.held_out)):
        raise SignedLfmError(
            f"k must be in [0, {len(split.held_out)}], got {k}"
        )
    promoted = ranked_edges[:k]
    if any(edge not in split.held_out for edge in promoted):
        raise SignedLfmError("ranked edge is not held out")
    return TrainTestSplit(
        train_spam=split.train_spam | frozenset(promoted),
        train_normal=split.train_normal,
        held_out=split.held_out - frozenset(promoted),
        seed=split.seed,
    )
