"""Signed factor matrices, the warped-sigmoid activation, and edge scoring.

Every user and target carries two latent vectors: one accumulating normal
indications, one accumulating spam indications.  An edge's normal/spam
signals are the activated inner products of the matching vectors.  The
activation ``p0 * e^x / (1 + p0 * (e^x - 1))`` is a sigmoid warped so that
a zero inner product maps to the prior ``p0`` instead of 0.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, SignedLfmError


def activation(x: float, p0: float) -> float:
    """Warped sigmoid mapping 0 to ``p0``; strictly increasing.

    Evaluated as ``1 / (1 + ((1-p0)/p0) * e^-x)`` for x > 0, which is
    algebraically identical but never overflows; ties to exactly 0.0/1.0
    only at float saturation.  The direct form handles x <= 0 (no
    overflow there) and returns exactly p0 at x = 0.
    """
    if x > 0:
        return 1.0 / (1.0 + ((1.0 - p0) / p0) * math.exp(-x))
    e = math.exp(x)
    return p0 * e / (1.0 + p0 * (e - 1.0))


def activation_array(x: np.ndarray, p0: float) -> np.ndarray:
    """Vectorized :func:`activation`."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x > 0
    c = (1.0 - p0) / p0
    out[pos] = 1.0 / (1.0 + c * np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = p0 * e / (1.0 + p0 * (e - 1.0))
    return out


def log_activation(x: np.ndarray, p0: float) -> np.ndarray:
    """log f(x), stable for large |x|: ``-logaddexp(0, log c - x)``."""
    logc = math.log1p(-p0) - math.log(p0)
    return -np.logaddexp(0.0, logc - np.asarray(x, dtype=np.float64))


def log_one_minus_activation(x: np.ndarray, p0: float) -> np.ndarray:
    """log (1 - f(x)), stable for large |x|."""
    logc = math.log1p(-p0) - math.log(p0)
    z = logc - np.asarray(x, dtype=np.float64)
    return z - np.logaddexp(0.0, z)


@dataclass(frozen=True)
class EdgeScore:
    f_pos: float
    f_neg: float


@dataclass
class FactorModel:
    """Four factor matrices plus the activation prior.

    ``w_pos``/``w_neg`` are user matrices (num_users x d_pos / d_neg),
    ``h_pos``/``h_neg`` the target matrices.  Trainers mutate the rows in
    place; after training the model is read-only by convention.
    """

    w_pos: np.ndarray
    w_neg: np.ndarray
    h_pos: np.ndarray
    h_neg: np.ndarray
    p0: float

    @property
    def num_users(self) -> int:
        return self.w_pos.shape[0]

    @property
    def num_targets(self) -> int:
        return self.h_pos.shape[0]

    @property
    def d_pos(self) -> int:
        return self.w_pos.shape[1]

    @property
    def d_neg(self) -> int:
        return self.w_neg.shape[1]

    def raw_pos(self, u: int, t: int) -> float:
        """Inner product of the normal-side vectors, no activation."""
        return float(self.w_pos[u] @ self.h_pos[t])

    def raw_neg(self, u: int, t: int) -> float:
        """Inner product of the spam-side vectors, no activation."""
        return float(self.w_neg[u] @ self.h_neg[t])

    def copy(self) -> "FactorModel":
        return FactorModel(
            self.w_pos.copy(), self.w_neg.copy(),
            self.h_pos.copy(), self.h_neg.copy(), self.p0,
        )

    def check_finite(self) -> bool:
        return all(
            np.all(np.isfinite(m))
            for m in (self.w_pos, self.w_neg, self.h_pos, self.h_neg)
        )


def edge_scores(model: FactorModel, u: int, t: int) -> EdgeScore:
    """Activated normal and spam signals of edge (u, t)."""
    return EdgeScore(
        f_pos=activation(model.raw_pos(u, t), model.p0),
        f_neg=activation(model.raw_neg(u, t), model.p0),
    )


def init_model(
    num_users: int,
    num_targets: int,
    d_pos: int,
    d_neg: int,
    p0: float,
    scale: float = 0.1,
    seed: int = 0,
) -> FactorModel:
    """Fresh model with entries i.i.d. uniform on (-scale, scale).

    Small entries keep initial inner products near zero, so initial edge
    scores sit near the prior p0.
    """
    if d_pos < 1 or d_neg < 1:
        raise SignedLfmError("factor dimensions must be >= 1")
    if not (0.0 < p0 < 1.0):
        raise SignedLfmError(f"p0 must be in (0, 1), got {p0}")
    if scale <= 0:
        raise SignedLfmError(f"init scale must be > 0, got {scale}")
    rng = np.random.default_rng(seed)
    shape = lambda rows, d: rng.uniform(-scale, scale, size=(rows, d))
    return FactorModel(
        w_pos=shape(num_users, d_pos),
        w_neg=shape(num_users, d_neg),
        h_pos=shape(num_targets, d_pos),
        h_neg=shape(num_targets, d_neg),
        p0=p0,
    )


# ---------------------------------------------------------------------------
# model file format: header line, then one row per line
#   lfm-factors v1 users=<n> targets=<m> dpos=<d+> dneg=<d-> p0=<p0>
#   {U|T}<TAB>{+|-}<TAB>index<TAB>v1 v2 ... vd

_FORMAT_NAME = "lfm-factors"
_FORMAT_VERSION = "v1"


def model_to_lines(model: FactorModel) -> list[str]:
    lines = [
        f"{_FORMAT_NAME} {_FORMAT_VERSION} users={model.num_users} "
        f"targets={model.num_targets} dpos={model.d_pos} dneg={model.d_neg} "
        f"p0={model.p0!r}"
    ]
    for tag, sign, matrix in (
        ("U", "+", model.w_pos),
        ("U", "-", model.w_neg),
        ("T", "+", model.h_pos),
        ("T", "-", model.h_neg),
    ):
        for idx, row in enumerate(matrix):
            values = " ".join(repr(float(v)) for v in row)
            lines.append(f"{tag}\t{sign}\t{idx}\t{values}")
    return lines


def save_model(model: FactorModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(model_to_lines(model)) + "\n")


def model_from_lines(lines) -> FactorModel:
    it = enumerate(lines, start=1)
    try:
        line_no, header = next(it)
    except StopIteration:
        raise ParseError(1, "empty model file") from None
    parts = header.split()
    if len(parts) != 7 or parts[0] != _FORMAT_NAME or parts[1] != _FORMAT_VERSION:
        raise ParseError(line_no, f"bad model header: {header!r}")
    try:
        meta = dict(p.split("=", 1) for p in parts[2:])
        num_users = int(meta["users"])
        num_targets = int(meta["targets"])
        d_pos = int(meta["dpos"])
        d_neg = int(meta["dneg"])
        p0 = float(meta["p0"])
    except (KeyError, ValueError) as exc:
        raise ParseError(line_no, f"bad model header fields: {exc}") from None
    matrices = {
        ("U", "+"): np.full((num_users, d_pos), np.nan),
        ("U", "-"): np.full((num_users, d_neg), np.nan),
        ("T", "+"): np.full((num_targets, d_pos), np.nan),
        ("T", "-"): np.full((num_targets, d_neg), np.nan),
    }
    for line_no, raw in it:
        line = raw.rstrip("\n")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParseError(line_no, "expected 4 tab-separated fields")
        tag, sign, idx_s, values = fields
        if (tag, sign) not in matrices:
            raise ParseError(line_no, f"bad row kind {tag}/{sign}")
        matrix = matrices[(tag, sign)]
        try:
            idx = int(idx_s)
            row = np.array([float(v) for v in values.split()], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(line_no, str(exc)) from None
        if not (0 <= idx < matrix.shape[0]) or row.shape[0] != matrix.shape[1]:
            raise ParseError(line_no, "row index or width out of range")
        matrix[idx] = row
    for key, matrix in matrices.items():
        if np.isnan(matrix).any():
            raise ParseError(0, f"model file missing rows for {key[0]}{key[1]}")
    return FactorModel(
        w_pos=matrices[("U", "+")],
        w_neg=matrices[("U", "-")],
        h_pos=matrices[("T", "+")],
        h_neg=matrices[("T", "-")],
        p0=p0,
    )


def load_model(path: str) -> FactorModel:
    with open(path, "r", encoding="utf-8") as f:
        return model_from_lines(f)
