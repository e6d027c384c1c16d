"""Combination operators turning an edge's four factor vectors into features.

Five strategies: elementwise average of the concatenated user/target
vectors, full concatenation, spam-minus-normal subtraction, and the two
raw inner products (spam side, normal side).  The first three feed a
classifier; the inner products are ranking scores on their own.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import DimensionError
from .factors import FactorModel


class OperatorKind(enum.Enum):
    AVG = "avg"
    CON = "con"
    SUB = "sub"
    IP_NEG = "ipneg"
    IP_POS = "ippos"


def output_dim(kind: OperatorKind, d_pos: int, d_neg: int) -> int:
    if kind is OperatorKind.AVG:
        return d_pos + d_neg
    if kind is OperatorKind.CON:
        return 2 * (d_pos + d_neg)
    if kind is OperatorKind.SUB:
        return 2 * d_pos
    return 1


def _require_equal_dims(kind: OperatorKind, model: FactorModel) -> None:
    if model.d_pos != model.d_neg:
        raise DimensionError(
            f"{kind.value} operator needs d_pos == d_neg, "
            f"got {model.d_pos} != {model.d_neg}"
        )


def apply_operator(kind: OperatorKind, model: FactorModel, u: int, t: int) -> np.ndarray:
    """Feature vector for edge (u, t) under the given operator.

    Subtraction is spam-side minus normal-side so larger values lean spam.
    """
    if kind is OperatorKind.AVG:
        _require_equal_dims(kind, model)
        w = np.concatenate([model.w_pos[u], model.w_neg[u]])
        h = np.concatenate([model.h_pos[t], model.h_neg[t]])
        return 0.5 * (w + h)
    if kind is OperatorKind.CON:
        return np.concatenate(
            [model.w_pos[u], model.w_neg[u], model.h_pos[t], model.h_neg[t]]
        )
    if kind is OperatorKind.SUB:
        _require_equal_dims(kind, model)
        return np.concatenate(
            [model.w_neg[u] - model.w_pos[u], model.h_neg[t] - model.h_pos[t]]
        )
    if kind is OperatorKind.IP_NEG:
        return np.array([model.raw_neg(u, t)])
    if kind is OperatorKind.IP_POS:
        return np.array([model.raw_pos(u, t)])
    raise DimensionError(f"unknown operator {kind!r}")


def operator_features(
    kind: OperatorKind, model: FactorModel, edges: list[tuple[int, int]]
) -> np.ndarray:
    """Stacked feature matrix for a batch of (user, target) pairs."""
    us = np.fromiter((u for u, _ in edges), dtype=np.int64, count=len(edges))
    ts = np.fromiter((t for _, t in edges), dtype=np.int64, count=len(edges))
    if kind is OperatorKind.AVG:
        _require_equal_dims(kind, model)
        w = np.hstack([model.w_pos[us], model.w_neg[us]])
        h = np.hstack([model.h_pos[ts], model.h_neg[ts]])
        return 0.5 * (w + h)
    if kind is OperatorKind.CON:
        return np.hstack(
            [model.w_pos[us], model.w_neg[us], model.h_pos[ts], model.h_neg[ts]]
        )
    if kind is OperatorKind.SUB:
        _require_equal_dims(kind, model)
        return np.hstack(
            [model.w_neg[us] - model.w_pos[us], model.h_neg[ts] - model.h_pos[ts]]
        )
    if kind is OperatorKind.IP_NEG:
        return np.einsum("ij,ij->i", model.w_neg[us], model.h_neg[ts])[:, None]
    if kind is OperatorKind.IP_POS:
        return np.einsum("ij,ij->i", model.w_pos[us], model.h_pos[ts])[:, None]
    raise DimensionError(f"unknown operator {kind!r}")
