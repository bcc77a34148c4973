"""Richardson extrapolation with known, possibly non-integer, error orders."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Extrapolation:
    value: np.ndarray
    #: distance between the chosen entry and its predecessor on the diagonal
    error: float
    #: the full tableau, ``table[j][k]`` eliminates ``j`` error terms
    table: list[list[np.ndarray]]


def richardson(
    values: Sequence[np.ndarray], steps: Sequence[float], orders: Sequence[float]
) -> Extrapolation:
    r"""Extrapolate :math:`Q(h) = L + c_1 h^{\gamma_1} + c_2 h^{\gamma_2} + \cdots`
    to :math:`h = 0`.

    Column ``j`` of the tableau removes the term of order ``orders[j - 1]``.
    The returned value is the diagonal entry that changed least from the
    previous diagonal entry, which guards against amplified roundoff in the
    deepest columns.
    """
    values = [np.asarray(v) for v in values]
    steps = np.asarray(steps, dtype=np.float64)
    if len(values) != steps.size or steps.size < 2:
        raise ValueError("need at least two values with matching steps")

    q = steps[1:] / steps[:-1]
    if not np.allclose(q, q[0], rtol=1.0e-10):
        raise ValueError("steps must form a geometric sequence")

    table = [values]
    for gamma_j in orders[: steps.size - 1]:
        r = q[0] ** gamma_j
        prev = table[-1]
        table.append([(prev[k] - r * prev[k - 1]) / (1.0 - r) for k in range(1, len(prev))])

    diagonal = [col[-1] for col in table]
    best = diagonal[-1]
    best_err = np.inf
    for j in range(1, len(diagonal)):
        err = float(np.linalg.norm(np.atleast_1d(diagonal[j] - diagonal[j - 1])))
        if err < best_err:
            best, best_err = diagonal[j], err

    return Extrapolation(best, best_err, table)
