"""Finite distributions and the information quantities built on them.

All logarithms are natural, so every rate is in nats. The convention
``0 * log 0 = 0`` is applied throughout; values below :data:`ZERO_FLOOR`
are treated as exact zeros before any logarithm is taken.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateMarginalError,
    InfiniteDivergenceError,
    InvalidInputError,
)

ZERO_FLOOR = 1e-300
SUM_TOL = 1e-12
MARGINAL_TOL = 1e-9


def _xlogy(x, y):
    """``x * log(y)`` with ``0 * log(anything) = 0``."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.zeros(x.shape)
    mask = x > ZERO_FLOOR
    out[mask] = x[mask] * np.log(y[mask])
    return out


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability vector over a finite alphabet.

    Entries are nonnegative and sum to one within ``1e-12``. The stored
    array is read-only; ``np.asarray(dist)`` returns it without a copy.
    """

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float).ravel()
        if probs.size == 0:
            raise InvalidInputError("distribution must have at least one entry")
        if not np.all(np.isfinite(probs)):
            raise InvalidInputError("distribution has non-finite entries")
        if np.any(probs < 0):
            raise InvalidInputError(f"distribution has negative entries: min={probs.min()!r}")
        total = float(np.sum(probs))
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidInputError(f"distribution sums to {total!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.probs
        return self.probs.astype(dtype)

    def __len__(self):
        return self.probs.size

    def __iter__(self):
        return iter(self.probs)


def as_probs(dist, name="distribution"):
    """Return ``dist`` as a validated 1-D float array."""
    if isinstance(dist, DiscreteDistribution):
        return dist.probs
    try:
        return DiscreteDistribution(dist).probs
    except InvalidInputError as exc:
        raise InvalidInputError(f"{name}: {exc}") from None


def validate_cost_matrix(cost, shape=None, name="cost"):
    """Check that ``cost`` is a finite nonnegative 2-D array and return it."""
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {cost.shape}")
    if shape is not None and cost.shape != tuple(shape):
        raise InvalidInputError(f"{name} has shape {cost.shape}, expected {tuple(shape)}")
    if not np.all(np.isfinite(cost)):
        raise InvalidInputError(f"{name} has non-finite entries")
    if np.any(cost < 0):
        raise InvalidInputError(f"{name} has negative entries")
    return cost


def validate_transition(w, tol=MARGINAL_TOL):
    """Check that ``w`` is a row-stochastic matrix (each row a distribution)."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2:
        raise InvalidInputError(f"transition matrix must be 2-D, got shape {w.shape}")
    if np.any(w < 0):
        raise InvalidInputError("transition matrix has negative entries")
    err = np.max(np.abs(w.sum(axis=1) - 1.0))
    if err > tol:
        raise InvalidInputError(f"transition rows do not sum to 1 (max error {err:.3g})")
    return w


def validate_plan(plan, p, r, tol=MARGINAL_TOL):
    """Check that ``plan`` is a coupling of ``p`` (rows) and ``r`` (columns)."""
    plan = np.asarray(plan, dtype=float)
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)
    if plan.shape != (p.size, r.size):
        raise InvalidInputError(f"plan has shape {plan.shape}, expected {(p.size, r.size)}")
    if np.any(plan < 0):
        raise InvalidInputError("plan has negative entries")
    err = max(np.max(np.abs(plan.sum(axis=1) - p)), np.max(np.abs(plan.sum(axis=0) - r)))
    if err > tol:
        raise InvalidInputError(f"plan marginals are off by {err:.3g}")
    return plan


def mutual_information(w, p, r):
    """Mutual information of the channel ``w`` driven by ``p``, in nats.

    Computes ``sum_ij p_i w_ij (log w_ij - log r_j)``. ``r`` is taken as
    given rather than recomputed from ``w``, which is what an iterative
    solver needs while the column constraint is still being enforced.

    Parameters
    ----------
    w : array-like, shape (M, N)
        Transition matrix, rows summing to one.
    p : array-like, shape (M,)
        Source distribution.
    r : array-like, shape (N,)
        Reconstruction distribution.

    Returns
    -------
    float
    """
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)
    if w.ndim != 2 or w.shape != (p.size, r.size):
        raise InvalidInputError(
            f"shape mismatch: w {w.shape}, p ({p.size},), r ({r.size},)"
        )
    joint = p[:, None] * w
    column_mass = joint.sum(axis=0)
    bad = (r <= ZERO_FLOOR) & (column_mass > ZERO_FLOOR)
    if np.any(bad):
        raise DegenerateMarginalError(
            f"r vanishes on columns {np.flatnonzero(bad).tolist()} that carry mass"
        )
    safe_r = np.where(r > ZERO_FLOOR, r, 1.0)
    return float(np.sum(_xlogy(joint, w)) - np.sum(_xlogy(joint, safe_r[None, :])))


def kl_divergence(p, r):
    """``KL(p || r)`` in nats.

    Raises
    ------
    InfiniteDivergenceError
        If some ``p_i > 0`` meets ``r_i = 0``.
    """
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)
    if p.shape != r.shape or p.ndim != 1:
        raise InvalidInputError(f"shape mismatch: p {p.shape}, r {r.shape}")
    bad = (p > ZERO_FLOOR) & (r <= ZERO_FLOOR)
    if np.any(bad):
        raise InfiniteDivergenceError(
            f"r vanishes where p is positive (indices {np.flatnonzero(bad).tolist()})"
        )
    safe_r = np.where(r > ZERO_FLOOR, r, 1.0)
    return float(np.sum(_xlogy(p, p)) - np.sum(_xlogy(p, safe_r)))


def expected_cost(plan_or_w, cost, weight=None):
    """Average cost of a coupling.

    With ``weight`` given, ``plan_or_w`` is a transition matrix and row
    ``i`` is weighted by ``weight[i]``; otherwise the entries are used
    as joint masses directly.
    """
    mass = np.asarray(plan_or_w, dtype=float)
    cost = np.asarray(cost, dtype=float)
    if mass.ndim != 2 or mass.shape != cost.shape:
        raise InvalidInputError(f"shape mismatch: coupling {mass.shape}, cost {cost.shape}")
    if weight is not None:
        weight = np.asarray(weight, dtype=float)
        if weight.shape != (mass.shape[0],):
            raise InvalidInputError(
                f"weight has shape {weight.shape}, expected ({mass.shape[0]},)"
            )
        mass = weight[:, None] * mass
    return float(np.sum(mass * cost))


def entropy_of_plan(plan):
    """``sum_ij plan_ij log plan_ij`` (a negated Shannon entropy, so <= 0 for
    probability plans). This is the regularizer added with weight epsilon."""
    plan = np.asarray(plan, dtype=float)
    if plan.ndim != 2:
        raise InvalidInputError(f"plan must be 2-D, got shape {plan.shape}")
    if np.any(plan < 0):
        raise InvalidInputError("plan has negative entries")
    return float(np.sum(_xlogy(plan, plan)))


def binary_entropy(x):
    """Binary entropy in nats."""
    x = float(x)
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -(x * np.log(x) + (1.0 - x) * np.log1p(-x))


def entropy(p):
    """Shannon entropy of a probability vector in nats."""
    p = np.asarray(p, dtype=float)
    return float(-np.sum(_xlogy(p, p)))


def nats_to_bits(x):
    return x / np.log(2.0)
