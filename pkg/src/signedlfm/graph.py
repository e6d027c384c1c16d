"""Signed bipartite user-target networks and train/test splits.

A network holds users, targets and labeled edges.  Edge labels are binary
(normal / spam); an edge parsed from the ``unknown`` token carries no label
and can only ever live in the held-out part of a split.  Entity ids are
dense 0-based integers, assigned per class in first-appearance order, with
a bijective mapping to the external name tokens from the input file.

Networks and splits are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import (
    DuplicateEdgeError,
    InsufficientNormalError,
    ParseError,
    SignedLfmError,
)


class EdgeLabel(enum.Enum):
    NORMAL = "normal"
    SPAM = "spam"


# Label token written for edges that were never labeled.
UNKNOWN_TOKEN = "unknown"


class Edge(NamedTuple):
    user: int
    target: int
    label: EdgeLabel | None  # None = unlabeled ("unknown" in the file format)


@dataclass(frozen=True)
class SignedBipartiteNetwork:
    """Immutable signed bipartite network with adjacency views.

    ``user_adjacency[u]`` lists ``(target, label)`` for every edge of user
    ``u``; ``target_adjacency[t]`` mirrors it.  Both enumerate exactly the
    edge tuple, in edge order.
    """

    user_names: tuple[str, ...]
    target_names: tuple[str, ...]
    edges: tuple[Edge, ...]
    user_adjacency: tuple[tuple[tuple[int, EdgeLabel | None], ...], ...] = field(repr=False)
    target_adjacency: tuple[tuple[tuple[int, EdgeLabel | None], ...], ...] = field(repr=False)

    @property
    def num_users(self) -> int:
        return len(self.user_names)

    @property
    def num_targets(self) -> int:
        return len(self.target_names)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def label_of(self, user: int, target: int) -> EdgeLabel | None:
        """True label of edge (user, target); raises KeyError if absent."""
        for t, label in self.user_adjacency[user]:
            if t == target:
                return label
        raise KeyError((user, target))

    def has_edge(self, user: int, target: int) -> bool:
        return any(t == target for t, _ in self.user_adjacency[user])

    def linked_targets(self, user: int) -> tuple[int, ...]:
        return tuple(t for t, _ in self.user_adjacency[user])

    def linked_users(self, target: int) -> tuple[int, ...]:
        return tuple(u for u, _ in self.target_adjacency[target])


def build_network(
    user_names: Iterable[str],
    target_names: Iterable[str],
    edges: Iterable[Edge],
) -> SignedBipartiteNetwork:
    """Assemble a network, checking index bounds and rejecting duplicates."""
    users = tuple(user_names)
    targets = tuple(target_names)
    edge_tuple = tuple(edges)
    seen: set[tuple[int, int]] = set()
    user_adj: list[list[tuple[int, EdgeLabel | None]]] = [[] for _ in users]
    target_adj: list[list[tuple[int, EdgeLabel | None]]] = [[] for _ in targets]
    for e in edge_tuple:
        if not (0 <= e.user < len(users) and 0 <= e.target < len(targets)):
            raise SignedLfmError(f"edge {e} references an out-of-range entity")
        key = (e.user, e.target)
        if key in seen:
            raise DuplicateEdgeError(
                f"duplicate edge ({users[e.user]}, {targets[e.target]})"
            )
        seen.add(key)
        user_adj[e.user].append((e.target, e.label))
        target_adj[e.target].append((e.user, e.label))
    return SignedBipartiteNetwork(
        user_names=users,
        target_names=targets,
        edges=edge_tuple,
        user_adjacency=tuple(tuple(a) for a in user_adj),
        target_adjacency=tuple(tuple(a) for a in target_adj),
    )


_LABEL_TOKENS = {
    "normal": EdgeLabel.NORMAL,
    "spam": EdgeLabel.SPAM,
    UNKNOWN_TOKEN: None,
}


def _label_token(label: EdgeLabel | None) -> str:
    return UNKNOWN_TOKEN if label is None else label.value


def _iter_data_lines(lines: Iterable[str]) -> Iterator[tuple[int, str]]:
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield line_no, line


def parse_edge_list(lines: Iterable[str]) -> SignedBipartiteNetwork:
    """Parse ``user<TAB>target<TAB>label`` lines into a network.

    Blank lines and '#' comments are skipped.  Ids are assigned densely in
    first-appearance order, separately for users and targets.
    """
    network, split_fields = _parse_lines(lines, allow_split_field=False)
    assert split_fields is None
    return network


def parse_edge_list_with_split(
    lines: Iterable[str], seed: int = 0
) -> tuple[SignedBipartiteNetwork, "TrainTestSplit"]:
    """Parse the 4-field variant ``user<TAB>target<TAB>label<TAB>{train|test}``.

    ``train`` edges become training-visible under their label; ``test`` edges
    (and every ``unknown`` edge) are held out.
    """
    network, memberships = _parse_lines(lines, allow_split_field=True)
    assert memberships is not None
    train_spam, train_normal, held_out = set(), set(), set()
    for edge, member in zip(network.edges, memberships):
        key = (edge.user, edge.target)
        if member == "train":
            if edge.label is EdgeLabel.SPAM:
                train_spam.add(key)
            elif edge.label is EdgeLabel.NORMAL:
                train_normal.add(key)
            else:
                raise SignedLfmError(
                    f"edge {network.user_names[edge.user]}/"
                    f"{network.target_names[edge.target]} is unlabeled and "
                    "cannot be marked train"
                )
        else:
            held_out.add(key)
    split = TrainTestSplit(
        train_spam=frozenset(train_spam),
        train_normal=frozenset(train_normal),
        held_out=frozenset(held_out),
        seed=seed,
    )
    split.validate(network)
    return network, split


def _parse_lines(lines, allow_split_field):
    user_ids: dict[str, int] = {}
    target_ids: dict[str, int] = {}
    edges: list[Edge] = []
    memberships: list[str] | None = [] if allow_split_field else None
    seen: set[tuple[int, int]] = set()
    for line_no, line in _iter_data_lines(lines):
        fields = line.split("\t")
        expected = 4 if allow_split_field else 3
        if len(fields) != expected:
            raise ParseError(
                line_no, f"expected {expected} tab-separated fields, got {len(fields)}"
            )
        user_tok, target_tok, label_tok = fields[0], fields[1], fields[2]
        if label_tok not in _LABEL_TOKENS:
            raise ParseError(line_no, f"unknown label token {label_tok!r}")
        if allow_split_field:
            if fields[3] not in ("train", "test"):
                raise ParseError(line_no, f"unknown split token {fields[3]!r}")
            memberships.append(fields[3])
        u = user_ids.setdefault(user_tok, len(user_ids))
        t = target_ids.setdefault(target_tok, len(target_ids))
        if (u, t) in seen:
            raise DuplicateEdgeError(
                f"line {line_no}: duplicate edge ({user_tok}, {target_tok})"
            )
        seen.add((u, t))
        edges.append(Edge(u, t, _LABEL_TOKENS[label_tok]))
    network = build_network(user_ids, target_ids, edges)
    return network, memberships


def to_edge_lines(network: SignedBipartiteNetwork) -> list[str]:
    """Serialize back to edge-list lines (inverse of parse, up to order)."""
    return [
        f"{network.user_names[e.user]}\t{network.target_names[e.target]}\t"
        f"{_label_token(e.label)}"
        for e in network.edges
    ]


def to_split_lines(network: SignedBipartiteNetwork, split: "TrainTestSplit") -> list[str]:
    """Serialize network + split in the 4-field edge-list variant."""
    out = []
    for e in network.edges:
        member = "train" if split.is_training_visible(e.user, e.target) else "test"
        out.append(
            f"{network.user_names[e.user]}\t{network.target_names[e.target]}\t"
            f"{_label_token(e.label)}\t{member}"
        )
    return out


@dataclass(frozen=True)
class TrainTestSplit:
    """Partition of a network's edges into training-visible and held-out.

    ``train_spam`` / ``train_normal`` hold (user, target) keys of edges whose
    label is visible to the learners; ``held_out`` edges read as "?" during
    training.  The three sets partition the network's edge set.
    """

    train_spam: frozenset[tuple[int, int]]
    train_normal: frozenset[tuple[int, int]]
    held_out: frozenset[tuple[int, int]]
    seed: int

    def is_training_visible(self, user: int, target: int) -> bool:
        key = (user, target)
        return key in self.train_spam or key in self.train_normal

    def visible_label(self, user: int, target: int) -> EdgeLabel | None:
        """Label as seen by a learner: None for held-out or absent edges."""
        key = (user, target)
        if key in self.train_spam:
            return EdgeLabel.SPAM
        if key in self.train_normal:
            return EdgeLabel.NORMAL
        return None

    def validate(self, network: SignedBipartiteNetwork) -> None:
        all_keys = {(e.user, e.target) for e in network.edges}
        parts = (self.train_spam, self.train_normal, self.held_out)
        if self.train_spam & self.train_normal or self.train_spam & self.held_out \
                or self.train_normal & self.held_out:
            raise SignedLfmError("split parts are not disjoint")
        if set().union(*parts) != all_keys:
            raise SignedLfmError("split parts do not cover the edge set")
        labels = {(e.user, e.target): e.label for e in network.edges}
        if any(labels[k] is not EdgeLabel.SPAM for k in self.train_spam):
            raise SignedLfmError("train_spam contains a non-spam edge")
        if any(labels[k] is not EdgeLabel.NORMAL for k in self.train_normal):
            raise SignedLfmError("train_normal contains a non-normal edge")


def make_split(
    network: SignedBipartiteNetwork,
    label_fraction: float,
    balance: bool,
    seed: int,
) -> TrainTestSplit:
    """Sample a training-visible subset of the labeled edges.

    ``ceil(label_fraction * |spam|)`` spam edges become visible; with
    ``balance`` the same count of normal edges is drawn, otherwise the same
    fraction of them.  Everything else (including unlabeled edges) is held
    out.  Deterministic given ``seed``.
    """
    if not (0.0 < label_fraction <= 1.0):
        raise SignedLfmError(f"label_fraction must be in (0, 1], got {label_fraction}")
    spam_keys = [(e.user, e.target) for e in network.edges if e.label is EdgeLabel.SPAM]
    normal_keys = [(e.user, e.target) for e in network.edges if e.label is EdgeLabel.NORMAL]
    if not spam_keys or not normal_keys:
        raise SignedLfmError("make_split needs at least one spam and one normal edge")
    rng = np.random.default_rng(seed)
    n_spam = math.ceil(label_fraction * len(spam_keys))
    spam_pick = rng.choice(len(spam_keys), size=n_spam, replace=False)
    if balance:
        n_normal = n_spam
        if len(normal_keys) < n_normal:
            raise InsufficientNormalError(
                f"balanced split needs {n_normal} normal edges, "
                f"only {len(normal_keys)} exist"
            )
    else:
        n_normal = math.ceil(label_fraction * len(normal_keys))
    normal_pick = rng.choice(len(normal_keys), size=n_normal, replace=False)
    train_spam = frozenset(spam_keys[i] for i in spam_pick)
    train_normal = frozenset(normal_keys[i] for i in normal_pick)
    held_out = frozenset(
        (e.user, e.target)
        for e in network.edges
        if (e.user, e.target) not in train_spam and (e.user, e.target) not in train_normal
    )
    return TrainTestSplit(train_spam, train_normal, held_out, seed)


def evidence_count(
    network: SignedBipartiteNetwork,
    split: TrainTestSplit,
    target: int,
    level: EdgeLabel,
) -> int:
    """Training-visible edges of the given label incident to ``target``.

    Held-out edges never count, whatever their true label.
    """
    if not (0 <= target < network.num_targets):
        raise SignedLfmError(f"target {target} out of range")
    visible = split.train_spam if level is EdgeLabel.SPAM else split.train_normal
    return sum(1 for u, _ in network.target_adjacency[target] if (u, target) in visible)


def evidence_counts(
    network: SignedBipartiteNetwork, split: TrainTestSplit, level: EdgeLabel
) -> np.ndarray:
    """Per-target evidence counts for one label, as an int array."""
    counts = np.zeros(network.num_targets, dtype=np.int64)
    visible = split.train_spam if level is EdgeLabel.SPAM else split.train_normal
    for _, t in visible:
        counts[t] += 1
    return counts


def drop_edges(
    network: SignedBipartiteNetwork, fraction: float, seed: int
) -> SignedBipartiteNetwork:
    """Remove ``floor(fraction * |edges|)`` uniformly chosen edges.

    Entity id spaces are preserved, so isolated nodes may remain.
    Deterministic given ``seed``.
    """
    if not (0.0 <= fraction < 1.0):
        raise SignedLfmError(f"drop fraction must be in [0, 1), got {fraction}")
    n_drop = math.floor(fraction * network.num_edges)
    if n_drop == 0:
        return network
    rng = np.random.default_rng(seed)
    dropped = set(rng.choice(network.num_edges, size=n_drop, replace=False).tolist())
    kept = [e for i, e in enumerate(network.edges) if i not in dropped]
    return build_network(network.user_names, network.target_names, kept)
