"""Perception constraints between the source and reconstruction marginals.

Two kinds are supported:

``"ot"``
    optimal-transport cost ``min_Pi <Pi, c>`` over couplings of ``p`` and
    ``r``. With ``c = (x - x')^2`` this is the *squared* Wasserstein-2
    distance, and the threshold bounds that squared value. With the
    indicator cost ``1[i != j]`` it is the total variation distance.
``"kl"``
    ``KL(p || r)``, which needs no transport plan.

The evaluation routines here are exact (linear programming or 1-D
monotone matching) and never touch the Sinkhorn machinery, so they can be
used to check the solver.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .core import as_probs, kl_divergence, validate_cost_matrix
from .errors import InvalidInputError, InvalidParameterError, SourceFormatError

KINDS = ("ot", "kl")


@dataclass(frozen=True)
class PerceptionSpec:
    """A perception constraint ``d(p, r) <= threshold``.

    Parameters
    ----------
    kind : {"ot", "kl"}
    threshold : float
        Bound ``P``; for the squared-distance cost it is a bound on W2**2.
    cost : ndarray of shape (M, N), optional
        Ground cost, required iff ``kind == "ot"``.
    name : str
        Label used in reports (``"w2"``, ``"tv"``, ``"kl"``, ``"custom"``).
    src_support, rec_support : ndarray, optional
        Scalar alphabets behind a squared-distance cost; when both are set
        :func:`evaluate_perception` uses exact 1-D monotone matching.
    """

    kind: str
    threshold: float
    cost: np.ndarray = None
    name: str = "custom"
    src_support: np.ndarray = None
    rec_support: np.ndarray = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"perception kind must be one of {KINDS}, got {self.kind!r}")
        threshold = float(self.threshold)
        if not threshold >= 0:
            raise InvalidParameterError(f"perception threshold must be >= 0, got {threshold!r}")
        object.__setattr__(self, "threshold", threshold)
        if self.kind == "ot":
            if self.cost is None:
                raise InvalidInputError("OT perception needs a cost matrix")
            object.__setattr__(self, "cost", validate_cost_matrix(self.cost))
        elif self.cost is not None:
            raise InvalidInputError("KL perception takes no cost matrix")

    def with_threshold(self, threshold):
        """Copy of this spec with another bound."""
        return PerceptionSpec(
            self.kind, threshold, self.cost, self.name, self.src_support, self.rec_support
        )


def ot_cost_squared_distance(src_support, rec_support):
    """``c_ij = (x_i - y_j)^2``."""
    x = np.asarray(src_support, dtype=float).ravel()
    y = np.asarray(rec_support, dtype=float).ravel()
    if x.size == 0 or y.size == 0:
        raise InvalidInputError("supports must be nonempty")
    return (x[:, None] - y[None, :]) ** 2


def ot_cost_indicator(M, N=None):
    """``c_ij = 1[i != j]`` on aligned alphabets; its OT value is the TV distance."""
    N = M if N is None else N
    if M != N:
        raise InvalidParameterError(f"indicator cost needs aligned alphabets, got {M}x{N}")
    if M < 1:
        raise InvalidParameterError("alphabet must be nonempty")
    return 1.0 - np.eye(M)


def w2_perception(src_support, rec_support, threshold):
    """Squared-W2 perception between scalar alphabets."""
    src = np.asarray(src_support, dtype=float)
    rec = np.asarray(rec_support, dtype=float)
    return PerceptionSpec(
        "ot", threshold, ot_cost_squared_distance(src, rec), "w2", src, rec
    )


def tv_perception(n, threshold):
    return PerceptionSpec("ot", threshold, ot_cost_indicator(n), "tv")


def kl_perception(threshold):
    return PerceptionSpec("kl", threshold, None, "kl")


def exact_ot_cost(p, r, cost):
    """Exact OT value ``min_Pi <Pi, cost>`` by linear programming (HiGHS).

    Returns
    -------
    value : float
    plan : ndarray of shape (M, N)
    """
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)
    cost = validate_cost_matrix(cost, (p.size, r.size))
    M, N = cost.shape
    # equality constraints: row sums (M of them) then column sums (N)
    rows = np.kron(np.eye(M), np.ones((1, N)))
    cols = np.kron(np.ones((1, M)), np.eye(N))
    A_eq = np.vstack([rows, cols])
    b_eq = np.concatenate([p, r])
    # one equation is redundant when the masses match; drop the last column sum
    res = linprog(
        cost.ravel(), A_eq=A_eq[:-1], b_eq=b_eq[:-1], bounds=(0, None), method="highs"
    )
    if res.status != 0:
        raise InvalidInputError(f"transport LP failed: {res.message}")
    plan = np.clip(res.x.reshape(M, N), 0.0, None)
    return float(np.sum(plan * cost)), plan


def monotone_ot_1d(x, p, y, r, ground=lambda t: t * t):
    """Exact OT between measures on the real line for a convex ground cost.

    The optimal plan matches quantiles (north-west corner rule on sorted
    supports); ``ground`` maps the displacement ``x - y`` to a cost.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)
    if x.shape != p.shape or y.shape != r.shape:
        raise InvalidInputError("support and weight lengths differ")
    ix, iy = np.argsort(x, kind="stable"), np.argsort(y, kind="stable")
    x, p, y, r = x[ix], p[ix].copy(), y[iy], r[iy].copy()
    i = j = 0
    total = 0.0
    while i < x.size and j < y.size:
        m = min(p[i], r[j])
        total += m * ground(x[i] - y[j])
        p[i] -= m
        r[j] -= m
        if p[i] <= r[j]:
            i += 1
        else:
            j += 1
    return float(total)


def evaluate_perception(spec, p, r):
    """Exact value of the perception measure between ``p`` and ``r``.

    The Sinkhorn plan carried by the solver is not consulted: OT values are
    recomputed from scratch (1-D matching for W2 specs with supports,
    total variation for the indicator cost, an LP otherwise).
    """
    p = as_probs(p, "p")
    r = as_probs(r, "r")
    if spec.kind == "kl":
        return kl_divergence(p, r)
    if spec.cost.shape != (p.size, r.size):
        raise InvalidInputError(f"cost has shape {spec.cost.shape}, expected {(p.size, r.size)}")
    if spec.name == "w2" and spec.src_support is not None and spec.rec_support is not None:
        return monotone_ot_1d(spec.src_support, p, spec.rec_support, r)
    if spec.cost.shape[0] == spec.cost.shape[1] and np.array_equal(
        spec.cost, ot_cost_indicator(spec.cost.shape[0])
    ):
        return 0.5 * float(np.abs(p - r).sum())
    value, _ = exact_ot_cost(p, r, spec.cost)
    return value


def load_cost_matrix(path):
    """Read a whitespace-separated matrix, one row per line."""
    rows = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SourceFormatError(f"cannot read cost file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([float(f) for f in line.split()])
        except ValueError:
            raise SourceFormatError(f"{path}:{lineno}: not a number in {line!r}") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise SourceFormatError(f"{path}: expected a rectangular matrix")
    try:
        return validate_cost_matrix(np.array(rows), name=str(path))
    except InvalidInputError as exc:
        raise SourceFormatError(str(exc)) from None


def dump_cost_matrix(cost, path):
    cost = np.asarray(cost, dtype=float)
    lines = [" ".join(repr(v) for v in row) for row in cost.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")
