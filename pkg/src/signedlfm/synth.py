"""Planted spam-campaign generator for desk-scale benchmarks.

Spammers mostly hit malicious targets (labeled spam) but disguise a
fraction of their actions as normal edges onto legitimate targets; benign
users mostly act on legitimate targets, with an occasional normal-labeled
edge onto a malicious one.  Every edge is labeled, so the generated
networks carry full ground truth for evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PoolExhaustedError, SignedLfmError
from .graph import Edge, EdgeLabel, SignedBipartiteNetwork, build_network

USER_ROLES = ("benign", "spammer")
TARGET_ROLES = ("legit", "malicious")


@dataclass(frozen=True)
class SynthParams:
    num_benign_users: int = 100
    num_spammers: int = 20
    num_legit_targets: int = 80
    num_malicious_targets: int = 20
    edges_per_user: int = 10
    disguise_rate: float = 0.1    # spammer edge lands on a legit target
    camouflage_rate: float = 0.05  # benign edge lands on a malicious target
    seed: int = 0

    def __post_init__(self):
        counts = (
            self.num_benign_users, self.num_spammers,
            self.num_legit_targets, self.num_malicious_targets,
            self.edges_per_user,
        )
        if any(c < 0 for c in counts):
            raise SignedLfmError("counts must be >= 0")
        for rate in (self.disguise_rate, self.camouflage_rate):
            if not (0.0 <= rate <= 1.0):
                raise SignedLfmError(f"rates must be in [0, 1], got {rate}")

    @property
    def num_users(self) -> int:
        return self.num_benign_users + self.num_spammers

    @property
    def num_targets(self) -> int:
        return self.num_legit_targets + self.num_malicious_targets


@dataclass(frozen=True)
class GroundTruth:
    user_roles: tuple[str, ...]    # "benign" | "spammer" per user id
    target_roles: tuple[str, ...]  # "legit" | "malicious" per target id


def generate(params: SynthParams) -> tuple[SignedBipartiteNetwork, GroundTruth]:
    """Draw one planted network; deterministic given ``params.seed``.

    Each user receives exactly ``edges_per_user`` distinct targets: a
    per-edge coin decides the target class, then that many targets are
    drawn without replacement from the class pool (so duplicates cannot
    arise).  A coin run exceeding its pool raises rather than silently
    redistributing.
    """
    rng = np.random.default_rng(params.seed)
    legit = np.arange(params.num_legit_targets)
    malicious = params.num_legit_targets + np.arange(params.num_malicious_targets)
    user_roles = tuple(
        "benign" if u < params.num_benign_users else "spammer"
        for u in range(params.num_users)
    )
    target_roles = tuple(
        "legit" if t < params.num_legit_targets else "malicious"
        for t in range(params.num_targets)
    )
    edges: list[Edge] = []
    for u in range(params.num_users):
        spamming = user_roles[u] == "spammer"
        off_rate = params.disguise_rate if spamming else params.camouflage_rate
        n_off = int(np.sum(rng.random(params.edges_per_user) < off_rate))
        n_main = params.edges_per_user - n_off
        main_pool, off_pool = (malicious, legit) if spamming else (legit, malicious)
        if n_main > main_pool.size or n_off > off_pool.size:
            raise PoolExhaustedError(
                f"user {u} needs {n_main}+{n_off} targets, pools hold "
                f"{main_pool.size}+{off_pool.size}"
            )
        picked_main = rng.choice(main_pool, size=n_main, replace=False)
        picked_off = rng.choice(off_pool, size=n_off, replace=False)
        for t in picked_main:
            label = EdgeLabel.SPAM if spamming else EdgeLabel.NORMAL
            edges.append(Edge(u, int(t), label))
        for t in picked_off:
            # disguise and camouflage both look like normal activity
            edges.append(Edge(u, int(t), EdgeLabel.NORMAL))
    network = build_network(
        tuple(f"u{u}" for u in range(params.num_users)),
        tuple(f"t{t}" for t in range(params.num_targets)),
        edges,
    )
    return network, GroundTruth(user_roles, target_roles)


def roles_to_lines(network: SignedBipartiteNetwork, truth: GroundTruth) -> list[str]:
    """Serialize ground truth as `entity_token<TAB>role` lines."""
    lines = [
        f"{name}\t{role}" for name, role in zip(network.user_names, truth.user_roles)
    ]
    lines.extend(
        f"{name}\t{role}"
        for name, role in zip(network.target_names, truth.target_roles)
    )
    return lines
