"""Hidden assignment matrices: multinomial sampling and the closed-form mode.

Each row of an assignment matrix ``H`` is a Multinomial(2, Q_i) draw, so a
point joins one group (a single entry equal to 2) or two groups (two
entries equal to 1). ``H[i, j] >= 1`` is the only thing downstream code
looks at.
"""
from __future__ import annotations

import numpy as np

EVENTS = 2
_REL_TOL = 1e-12


class InvalidProbabilityError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


def check_probability_matrix(Q, atol: float = 1e-9) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[1] < 1:
        raise InvalidProbabilityError(f"expected an n x K matrix, got shape {Q.shape}")
    bad = ~np.all(np.isfinite(Q) & (Q >= -atol) & (Q <= 1 + atol), axis=1)
    bad |= np.abs(Q.sum(axis=1) - 1.0) > atol
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise InvalidProbabilityError(f"not a probability vector: {Q[i].tolist()}", i)
    return Q


def check_assignment_matrix(H) -> np.ndarray:
    H = np.asarray(H)
    if H.ndim != 2:
        raise ValueError(f"expected an n x K matrix, got shape {H.shape}")
    if np.any((H < 0) | (H > EVENTS)) or np.any(H.sum(axis=1) != EVENTS):
        i = int(np.flatnonzero(np.any((H < 0) | (H > EVENTS), axis=1) | (H.sum(axis=1) != EVENTS))[0])
        raise ValueError(f"row {i} is not a valid assignment: {H[i].tolist()}")
    return H


def sample_assignment(Q, rng) -> np.ndarray:
    """Draw ``H`` with rows independently distributed as Multinomial(2, Q_i).

    ``rng`` is a :class:`numpy.random.Generator` or an integer seed. Each of
    the two events of a row is an independent categorical draw by inverse
    CDF, which is exactly the multinomial law for two events.
    """
    Q = check_probability_matrix(Q)
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n, K = Q.shape
    cdf = np.cumsum(np.clip(Q, 0.0, None), axis=1)
    cdf /= cdf[:, -1:]
    H = np.zeros((n, K), dtype=np.int64)
    u = rng.random((n, EVENTS))
    rows = np.arange(n)
    for e in range(EVENTS):
        # category = number of cdf entries <= u; zero-probability columns
        # form plateaus and are never selected
        j = np.minimum((cdf <= u[:, e:e + 1]).sum(axis=1), K - 1)
        np.add.at(H, (rows, j), 1)
    return H


def top_two(Q) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the largest and second largest entry per row (lowest index wins ties)."""
    Q = np.asarray(Q, dtype=float)
    first = np.argmax(Q, axis=1)
    masked = Q.copy()
    masked[np.arange(Q.shape[0]), first] = -np.inf
    second = np.argmax(masked, axis=1)
    return first, second


def mode_assignment(Q) -> np.ndarray:
    """Row-wise mode of Multinomial(2, Q_i).

    With q* >= q** the two largest probabilities, the two-group outcome has
    probability 2 q* q** and the best single-group outcome (q*)^2. So the
    point goes to group i* alone (value 2) when q*/2 > q**, otherwise to
    both i* and i** (value 1 each). Equality resolves to the two-group row.
    """
    Q = check_probability_matrix(Q)
    n, K = Q.shape
    H = np.zeros((n, K), dtype=np.int64)
    if K == 1:
        H[:, 0] = EVENTS
        return H
    first, second = top_two(Q)
    rows = np.arange(n)
    half_top = 0.5 * Q[rows, first]
    runner = Q[rows, second]
    single = (half_top - runner) > _REL_TOL * np.maximum(half_top, runner)
    H[rows[single], first[single]] = 2
    pair = ~single
    H[rows[pair], first[pair]] = 1
    H[rows[pair], second[pair]] = 1
    return H


def assigned_groups(H, i: int) -> set:
    H = np.asarray(H)
    if not 0 <= i < H.shape[0]:
        raise IndexError(f"point index {i} out of range for {H.shape[0]} rows")
    return {int(j) for j in np.flatnonzero(H[i] >= 1)}


def group_members(H) -> list:
    """For each group j, the sorted point ids with ``H[i, j] >= 1``."""
    H = np.asarray(H)
    return [np.flatnonzero(H[:, j] >= 1) for j in range(H.shape[1])]
