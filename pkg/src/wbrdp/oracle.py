"""Reference values for checking the solver.

Two closed forms (binary source with Hamming distortion and TV perception,
and the continuous Gaussian with squared error and W2 perception) and a
brute-force convex solve of the unregularized barycenter program. Nothing
here touches the Sinkhorn iteration.
"""

import math
import warnings
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .core import binary_entropy, kl_divergence, mutual_information
from .errors import InfeasibleProblemError, InvalidParameterError

METHODS = ("closed-form-binary-TV", "closed-form-gaussian-W2", "brute-force")
WITNESS_TOL = 1e-8


@dataclass
class OracleResult:
    """Reference rate (nats) with optional witnesses.

    ``max_violation`` is the largest violation of the marginal,
    distortion and perception constraints measured at the witnesses after
    cleanup; it is ``0.0`` for the closed forms, which carry none.
    """

    rate: float
    method: str
    w: np.ndarray = None
    r: np.ndarray = None
    plan: np.ndarray = None
    max_violation: float = 0.0
    status: str = "optimal"


def closed_form_binary_tv(p, D, P):
    """Rate-distortion-perception function of a Bernoulli(p) source.

    Hamming distortion, TV perception bound ``P``; ``P = inf`` gives the
    classical ``H(p) - H(D)``. Values are in nats.

    The minimizing reconstruction sits at TV distance exactly ``P`` from
    the source once the perception bound binds, which happens for
    ``D`` between ``P / (1 - 2(p - P))`` and ``p + (p - P)(1 - 2p)``
    (with ``p`` folded into ``(0, 1/2]``). In that band the optimal joint
    law has cell masses ``(D+P)/2, (D-P)/2, p-(D+P)/2, 1-p-(D-P)/2``.
    """
    p, D, P = float(p), float(D), float(P)
    if not 0.0 < p < 1.0:
        raise InvalidParameterError(f"p must lie in (0, 1), got {p!r}")
    if D < 0 or P < 0 or math.isnan(D) or math.isnan(P):
        raise InvalidParameterError(f"D and P must be >= 0, got D={D!r}, P={P!r}")
    p = min(p, 1.0 - p)
    if P >= p:
        return binary_entropy(p) - binary_entropy(D) if D < p else 0.0
    low = P / (1.0 - 2.0 * (p - P))
    high = p + (p - P) * (1.0 - 2.0 * p)
    if D < low:
        return binary_entropy(p) - binary_entropy(D)
    if D >= high:
        return 0.0
    cells = np.array([(D + P) / 2, (D - P) / 2, p - (D + P) / 2, 1 - p - (D - P) / 2])
    cells = cells[cells > 0]
    return float(binary_entropy(p) + binary_entropy(p - P) + np.sum(cells * np.log(cells)))


def closed_form_gaussian_w2(sigma, D, P):
    """Gaussian ``N(0, sigma^2)`` with squared error and a W2 perception bound.

    ``P`` bounds the *squared* W2 distance, matching the linear cost
    constraint the solver enforces. Let ``s = max(sigma - sqrt(P), 0)``,
    the smallest admissible reconstruction standard deviation:

    * ``D >= sigma^2 + s^2``: rate 0;
    * the perception bound is slack when the classical optimum
      ``sigma - sqrt(sigma^2 - D) <= sqrt(P)``: rate ``log(sigma^2 / D) / 2``;
    * otherwise the reconstruction has standard deviation ``s`` and the
      rate is ``-log(1 - rho^2) / 2`` with
      ``rho = (sigma^2 + s^2 - D) / (2 sigma s)``.
    """
    sigma, D, P = float(sigma), float(D), float(P)
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma!r}")
    if not D > 0:
        raise InvalidParameterError(f"D must be positive, got {D!r}")
    if not P >= 0:
        raise InvalidParameterError(f"P must be >= 0, got {P!r}")
    root_p = math.sqrt(P)
    s = max(sigma - root_p, 0.0)
    var = sigma * sigma
    if D >= var + s * s:
        return 0.0
    if sigma - math.sqrt(max(var - D, 0.0)) <= root_p:
        return 0.5 * math.log(var / D)
    rho = (var + s * s - D) / (2.0 * sigma * s)
    return -0.5 * math.log1p(-rho * rho)


def _solve(problem_cp):
    # "optimal_inaccurate" is accepted; the witnesses are re-checked afterwards
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return _solve_quiet(problem_cp)


def _solve_quiet(problem_cp):
    try:
        problem_cp.solve(
            solver="CLARABEL",
            tol_gap_abs=1e-12,
            tol_gap_rel=1e-12,
            tol_feas=1e-12,
            max_iter=500,
        )
    except cp.error.SolverError:
        problem_cp.solve(solver="CLARABEL")
    return problem_cp.status


def brute_force_wbm_rdp(problem):
    """Exact (unregularized) optimum of the barycenter program at small scale.

    Variables are the joint law ``pi = diag(p) w``, the reconstruction
    ``r`` and, for OT perception, the plan ``Pi``. The objective
    ``sum pi log(pi / (p r^T))`` is the mutual information, which is
    jointly convex in ``(pi, r)``; the problem is handed to an interior-point
    conic solver. Witnesses are then cleaned (``w`` row-normalized, ``r``
    recomputed as ``p w``) and every constraint is re-measured.

    Parameters
    ----------
    problem : RdpProblem
        ``epsilon``, ``max_iter`` and ``tol`` are ignored.

    Returns
    -------
    OracleResult

    Raises
    ------
    InfeasibleProblemError
        If the conic solver certifies infeasibility.
    """
    p = problem.p
    d = problem.distortion
    M, N = d.shape
    joint = cp.Variable((M, N), nonneg=True)
    r = cp.Variable(N, nonneg=True)
    constraints = [
        cp.sum(joint, axis=1) == p,
        cp.sum(joint, axis=0) == r,
        cp.sum(cp.multiply(joint, d)) <= problem.D,
    ]
    plan = None
    if problem.mode == "ot":
        plan = cp.Variable((M, N), nonneg=True)
        constraints += [
            cp.sum(plan, axis=1) == p,
            cp.sum(plan, axis=0) == r,
            cp.sum(cp.multiply(plan, problem.cost)) <= problem.P,
        ]
    elif problem.mode == "kl":
        live = p > 0
        neg_entropy = float(np.sum(p[live] * np.log(p[live])))
        constraints.append(neg_entropy - p[live] @ cp.log(r[live]) <= problem.P)
    product = cp.reshape(p, (M, 1), order="F") @ cp.reshape(r, (1, N), order="F")
    objective = cp.Minimize(cp.sum(cp.rel_entr(joint, product)))
    status = _solve(cp.Problem(objective, constraints))
    if status in ("infeasible", "infeasible_inaccurate"):
        raise InfeasibleProblemError("brute-force solve reports an infeasible instance", math.nan)
    if joint.value is None:
        raise ArithmeticError(f"brute-force solve failed with status {status!r}")

    pi = np.clip(joint.value, 0.0, None)
    rows = pi.sum(axis=1)
    w = np.full((M, N), 1.0 / N)
    live = rows > 0
    w[live] = pi[live] / rows[live, None]
    r_val = p @ w
    plan_val = None if plan is None else np.clip(plan.value, 0.0, None)

    violations = [
        abs(float(np.sum(r_val)) - 1.0),
        max(float(np.sum(p[:, None] * w * d)) - problem.D, 0.0),
    ]
    if plan_val is not None:
        violations += [
            float(np.max(np.abs(plan_val.sum(axis=1) - p))),
            float(np.max(np.abs(plan_val.sum(axis=0) - r_val))),
            max(float(np.sum(plan_val * problem.cost)) - problem.P, 0.0),
        ]
    elif problem.mode == "kl":
        violations.append(max(kl_divergence(p, r_val) - problem.P, 0.0))
    return OracleResult(
        rate=mutual_information(w, p, r_val),
        method="brute-force",
        w=w,
        r=r_val,
        plan=plan_val,
        max_violation=max(violations),
        status=status,
    )
