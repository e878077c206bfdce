"""Instance/permutation data model and exact makespan semantics.

A flow-shop instance is an m x n matrix of processing times: entry (i, j)
is the time job j spends on machine i. A solution is a permutation of the
job indices; all machines process jobs in that single order. Completion
times follow the classic non-preemptive recurrence

    C[i][t] = max(C[i-1][t], C[i][t-1]) + x[i][perm[t]]

with out-of-range terms treated as zero, and the makespan is C[m-1][n-1].
Everything downstream (heuristics, the exact model, the learned policy)
treats these functions as ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "Instance",
    "validate_permutation",
    "completion_times",
    "makespan",
    "makespan_batch",
    "front_advance",
    "gap_percent",
]


@dataclass(frozen=True)
class Instance:
    """An m-machine, n-job instance with non-negative processing times.

    ``times`` has shape (m, n): row = machine, column = job. Zeros are
    allowed (jobs may skip machines). ``name`` and ``meta`` are free-form
    provenance carried through generation/parsing.
    """

    times: np.ndarray
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        if times.ndim != 2 or times.shape[0] < 1 or times.shape[1] < 1:
            raise ValidationError(f"processing times must be a 2-D matrix, got shape {times.shape}")
        if not np.isfinite(times).all():
            raise ValidationError("processing times must be finite")
        if (times < 0).any():
            raise ValidationError("processing times must be non-negative")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    @property
    def m(self) -> int:
        """Number of machines (rows)."""
        return self.times.shape[0]

    @property
    def n(self) -> int:
        """Number of jobs (columns)."""
        return self.times.shape[1]

    def job(self, j: int) -> np.ndarray:
        """Processing-time column of job ``j`` (length m)."""
        return self.times[:, j]


def validate_permutation(perm, n: int) -> np.ndarray:
    """Check that ``perm`` is a bijection on [0, n) and return it as an int array."""
    arr = np.asarray(perm)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise ValidationError(f"permutation must have length {n}, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.issubdtype(arr.dtype, np.number) or not (arr == np.floor(arr)).all():
            raise ValidationError("permutation entries must be integers")
        arr = arr.astype(np.int64)
    seen = np.zeros(n, dtype=bool)
    for v in arr:
        if v < 0 or v >= n:
            raise ValidationError(f"job index {v} out of range [0, {n})")
        if seen[v]:
            raise ValidationError(f"duplicate job index {v} in permutation")
        seen[v] = True
    return arr.astype(np.int64)


def completion_times(inst: Instance, perm) -> np.ndarray:
    """Full m x n completion-time matrix of ``perm``, column t = t-th scheduled job.

    The returned matrix is nondecreasing along rows and columns and its
    bottom-right entry is the makespan.
    """
    order = validate_permutation(perm, inst.n)
    x = inst.times[:, order]
    m, n = x.shape
    c = np.zeros((m, n))
    for t in range(n):
        up = 0.0
        for i in range(m):
            left = c[i, t - 1] if t > 0 else 0.0
            up = max(up, left) + x[i, t]
            c[i, t] = up
    return c


def makespan(inst: Instance, perm) -> float:
    """Makespan of ``perm``; O(m) memory via a rolling machine front."""
    order = validate_permutation(perm, inst.n)
    front = np.zeros(inst.m)
    times = inst.times
    for j in order:
        col = times[:, j]
        acc = 0.0
        for i in range(inst.m):
            acc = max(acc, front[i]) + col[i]
            front[i] = acc
    return float(front[-1])


def makespan_batch(inst: Instance, perms: np.ndarray) -> np.ndarray:
    """Makespans of many permutations at once.

    ``perms`` has shape (P, n), one permutation per row; rows are not
    validated (callers generate them). Vectorized over P so enumeration
    and random search stay cheap.
    """
    perms = np.asarray(perms)
    p, n = perms.shape
    if n != inst.n:
        raise ValidationError(f"permutations have {n} columns, instance has {inst.n} jobs")
    front = np.zeros((p, inst.m))
    times = inst.times
    for t in range(n):
        cols = times[:, perms[:, t]]  # (m, P)
        acc = np.zeros(p)
        for i in range(inst.m):
            acc = np.maximum(acc, front[:, i]) + cols[i]
            front[:, i] = acc
    return front[:, -1]


def front_advance(inst: Instance, front: np.ndarray, job: int) -> np.ndarray:
    """Machine-completion front after appending one more job.

    Folding this over a permutation from a zero front reproduces the last
    column of :func:`completion_times`; NEH insertion and decoding-time
    evaluation rely on the incremental form.
    """
    if not 0 <= job < inst.n:
        raise ValidationError(f"job index {job} out of range [0, {inst.n})")
    front = np.asarray(front, dtype=np.float64)
    if front.shape != (inst.m,):
        raise ValidationError(f"front must have length {inst.m}, got shape {front.shape}")
    col = inst.times[:, job]
    out = np.empty(inst.m)
    acc = 0.0
    for i in range(inst.m):
        acc = max(acc, front[i]) + col[i]
        out[i] = acc
    return out


def gap_percent(value: float, expert_value: float) -> float:
    """Percentage excess of ``value`` over ``expert_value``.

    Negative when the method beats the expert. Undefined for a zero
    expert makespan.
    """
    if expert_value <= 0:
        raise ValidationError("gap is undefined for a non-positive expert makespan")
    return 100.0 * (value - expert_value) / expert_value
