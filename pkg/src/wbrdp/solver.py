"""Improved alternating Sinkhorn solver for rate-distortion-perception functions.

The rate-distortion-perception function of a finite source is computed
through its Wasserstein-barycenter reformulation: the reconstruction
marginal ``r`` is coupled to the source ``p`` twice, by the channel
``diag(p) w`` and by a transport plan ``Pi`` whose cost carries the
perception bound. With an entropy term ``eps * sum Pi log Pi`` added, every
block of the Lagrangian has a closed-form update, and one outer iteration
is

1. ``w``-block: one Sinkhorn sweep on the distortion kernel
   ``K = exp(-lam d)``, then a scalar root-find for ``lam``;
2. ``Pi``-block: one Sinkhorn sweep on ``M = exp(-gamma c / eps)``, then a
   scalar root-find for ``gamma``;
3. ``r``-block: a scalar root-find for the normalizer ``eta`` followed by
   ``r_j = q_j / (eta - beta_j - tau_j)``, where ``q`` is the output
   marginal of the channel.

There are no inner Sinkhorn loops. Convergence is monitored with seven L1
KKT residuals and their root mean square.

The KL-perception variant replaces blocks 2 and 3 by a joint solve for
``(gamma, eta)``; the plain rate-distortion mode skips block 2.
"""

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import linprog

from .core import (
    as_probs,
    entropy_of_plan,
    expected_cost,
    kl_divergence,
    mutual_information,
    nats_to_bits,
    validate_cost_matrix,
)
from .errors import (
    DegenerateStateError,
    InfeasibleProblemError,
    InvalidInputError,
    InvalidParameterError,
    NumericalStabilityError,
)
from .perception import PerceptionSpec, exact_ot_cost
from .roots import safeguarded_newton
from .sources import SourceSpec

EXP_LIMIT = 700.0
DEFAULT_EPSILON = 1e-2
DEFAULT_MAX_ITER = 1000
DEFAULT_TOL = 1e-10
FEASIBILITY_SLACK = 1e-9


@dataclass(frozen=True)
class RdpProblem:
    """One instance of the (regularized) rate-distortion-perception problem.

    Parameters
    ----------
    source : SourceSpec
    distortion : ndarray of shape (M, N)
        Per-letter distortion ``d_ij``.
    D : float
        Distortion bound.
    perception : PerceptionSpec or None
        ``None`` gives the plain rate-distortion problem.
    rec_support : array-like of shape (N,), optional
        Reconstruction alphabet; defaults to the source alphabet.
    epsilon : float
        Weight of the plan entropy term. Only used with OT perception.
    max_iter : int
    tol : float
        Target for the RMS of the KKT residuals.
    """

    source: SourceSpec
    distortion: np.ndarray
    D: float
    perception: PerceptionSpec = None
    rec_support: np.ndarray = None
    epsilon: float = DEFAULT_EPSILON
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        rec = self.source.support if self.rec_support is None else self.rec_support
        rec = np.array(rec, dtype=float).ravel()
        object.__setattr__(self, "rec_support", rec)
        M, N = len(self.source), rec.size
        object.__setattr__(
            self, "distortion", validate_cost_matrix(self.distortion, (M, N), "distortion")
        )
        D = float(self.D)
        if not D >= 0:
            raise InvalidParameterError(f"D must be >= 0, got {D!r}")
        object.__setattr__(self, "D", D)
        if not self.epsilon > 0:
            raise InvalidParameterError(f"epsilon must be positive, got {self.epsilon!r}")
        if not self.tol > 0:
            raise InvalidParameterError(f"tol must be positive, got {self.tol!r}")
        if int(self.max_iter) < 1:
            raise InvalidParameterError(f"max_iter must be >= 1, got {self.max_iter!r}")
        spec = self.perception
        if spec is not None:
            if spec.kind == "ot" and spec.cost.shape != (M, N):
                raise InvalidInputError(
                    f"perception cost has shape {spec.cost.shape}, expected {(M, N)}"
                )
            if spec.kind == "kl" and M != N:
                raise InvalidInputError("KL perception needs aligned alphabets (M == N)")

    @classmethod
    def from_arrays(cls, p, distortion, D, cost=None, P=None, kind="ot", **kwargs):
        """Build a problem from bare arrays, with index alphabets ``0..M-1``.

        ``P=None`` drops the perception constraint.
        """
        p = as_probs(p, "p")
        source = SourceSpec(np.arange(p.size, dtype=float), p)
        distortion = np.asarray(distortion, dtype=float)
        if P is None:
            perception = None
        elif kind == "kl":
            perception = PerceptionSpec("kl", P, None, "kl")
        else:
            perception = PerceptionSpec("ot", P, cost, "custom")
        kwargs.setdefault("rec_support", np.arange(distortion.shape[1], dtype=float))
        return cls(source, distortion, D, perception, **kwargs)

    @property
    def p(self):
        return self.source.probs

    @property
    def mode(self):
        """``"ot"``, ``"kl"`` or ``"rd"``."""
        return "rd" if self.perception is None else self.perception.kind

    @property
    def P(self):
        return math.inf if self.perception is None else self.perception.threshold

    @property
    def cost(self):
        return None if self.perception is None else self.perception.cost

    def with_bounds(self, D=None, P=None):
        """Copy with new thresholds (``P`` only applies when a perception spec is set)."""
        perception = self.perception
        if P is not None and perception is not None:
            perception = perception.with_threshold(P)
        return RdpProblem(
            self.source,
            self.distortion,
            self.D if D is None else D,
            perception,
            self.rec_support,
            self.epsilon,
            self.max_iter,
            self.tol,
        )

    @cached_property
    def _min_positive_distortion(self):
        positive = self.distortion[self.distortion > 0]
        return float(positive.min()) if positive.size else 0.0

    @cached_property
    def _min_positive_cost(self):
        if self.cost is None:
            return 0.0
        positive = self.cost[self.cost > 0]
        return float(positive.min()) if positive.size else 0.0


@dataclass
class SolverState:
    """Scalings, multipliers and kernels carried between iterations.

    ``phi, psi`` scale the distortion kernel ``K``; ``xi, varphi`` scale the
    perception kernel ``Mmat``. The Lagrange multipliers of the row and
    column constraints are recovered as ``beta = -log psi - 1/2`` and
    ``tau = -eps (log varphi + 1/2)``.
    """

    phi: np.ndarray
    psi: np.ndarray
    xi: np.ndarray
    varphi: np.ndarray
    lam: float
    gamma: float
    eta: float
    r: np.ndarray
    K: np.ndarray
    Mmat: np.ndarray
    w: np.ndarray

    @property
    def beta(self):
        with np.errstate(divide="ignore"):
            return -np.log(self.psi) - 0.5

    def tau(self, epsilon):
        with np.errstate(divide="ignore"):
            return -epsilon * (np.log(self.varphi) + 0.5)

    @property
    def plan(self):
        return self.xi[:, None] * self.Mmat * self.varphi[None, :]

    def channel(self):
        """``w_ij = phi_i K_ij psi_j r_j`` from the current scalings and ``r``."""
        return self.phi[:, None] * self.K * (self.psi * self.r)[None, :]


RESIDUAL_FIELDS = ("r_psi", "r_phi", "r_lambda", "r_eta", "r_varphi", "r_xi", "r_gamma")


@dataclass(frozen=True)
class ResidualReport:
    """L1 residuals of the seven KKT conditions and their RMS (``overall``)."""

    r_psi: float
    r_phi: float
    r_lambda: float
    r_eta: float
    r_varphi: float
    r_xi: float
    r_gamma: float

    @property
    def components(self):
        return np.array([getattr(self, name) for name in RESIDUAL_FIELDS])

    @property
    def overall(self):
        squares = sum(getattr(self, name) ** 2 for name in RESIDUAL_FIELDS)
        return math.sqrt(squares / len(RESIDUAL_FIELDS))


@dataclass
class RdpSolution:
    """Result of a solve.

    ``rate`` is the mutual information of ``(w, p, r)`` in nats and excludes
    the entropy term; ``objective`` includes it (they coincide without an
    OT plan). ``perception_achieved`` is the constraint value actually
    enforced: ``<Pi, c>`` for OT perception, ``KL(p || r)`` for KL, and
    ``None`` without perception.
    """

    rate: float
    w: np.ndarray
    r: np.ndarray
    plan: np.ndarray
    distortion_achieved: float
    perception_achieved: float
    iterations: int
    converged: bool
    objective: float
    lam: float
    gamma: float
    eta: float
    mode: str
    residual_trace: list = field(default_factory=list)

    @property
    def rate_bits(self):
        return nats_to_bits(self.rate)

    @property
    def final_residual(self):
        return self.residual_trace[-1][1] if self.residual_trace else None


def _kernel(scale, cost, min_positive, what):
    # A kernel whose smallest positive-cost entry underflows has lost every
    # transport direction except the zero-cost pattern; that is a breakdown.
    if math.isinf(scale):
        return (cost == 0).astype(float)
    exponent = scale * min_positive
    if exponent > EXP_LIMIT:
        raise NumericalStabilityError(
            f"{what} kernel underflows: exponent {exponent:.4g} exceeds {EXP_LIMIT:g}; "
            "increase epsilon or loosen the thresholds"
        )
    return np.exp(-scale * cost)


def _scaling(numerator, denominator, what):
    if (denominator > 0).all():
        out = numerator / denominator
    else:
        needed = numerator > 0
        if (denominator[needed] <= 0).any():
            raise DegenerateStateError(f"zero denominator in the {what} update")
        out = np.zeros_like(denominator)
        out[needed] = numerator[needed] / denominator[needed]
    if not np.isfinite(out).all():
        raise NumericalStabilityError(f"{what} scaling overflowed")
    return out


def _solve_multiplier(coef, rate, target, previous, what):
    """Root of ``sum(coef * exp(-x * rate)) - target`` on ``x >= 0``.

    Returns 0 when the constraint is slack at ``x = 0`` and ``inf`` when the
    bound is zero (the limit kernel keeps only zero-cost entries).
    """
    keep = (coef > 0) & (rate > 0)
    coef, rate = coef[keep], rate[keep]
    f0 = float(coef.sum()) - target
    if f0 <= 0.0:
        return 0.0
    if target == 0.0:
        return math.inf

    def f(x):
        terms = coef * np.exp(-x * rate)
        return float(terms.sum()) - target, -float(terms @ rate)

    x0 = previous if 0.0 < previous < math.inf else 1.0
    hi = max(x0, 1.0)
    while f(hi)[0] > 0.0:
        hi *= 2.0
        if hi > 1e300:
            raise NumericalStabilityError(f"cannot bracket the {what} multiplier")
    return safeguarded_newton(f, 0.0, hi, x0=x0)


def solve_lambda(state, problem):
    """Distortion multiplier: root of
    ``F(lam) = sum_ij d_ij p_i phi_i exp(-lam d_ij) psi_j r_j - D``."""
    d = problem.distortion
    coef = d * np.outer(state.phi * problem.p, state.psi * state.r)
    return _solve_multiplier(coef.ravel(), d.ravel(), problem.D, state.lam, "distortion")


def solve_gamma(state, problem):
    """Perception multiplier: root of
    ``G(gamma) = sum_ij c_ij xi_i exp(-gamma c_ij / eps) varphi_j - P``."""
    c = problem.cost
    coef = c * np.outer(state.xi, state.varphi)
    scaled = (c / problem.epsilon).ravel()
    return _solve_multiplier(coef.ravel(), scaled, problem.P, state.gamma, "perception")


def update_w_block(state, problem):
    """One Sinkhorn sweep for ``psi`` then ``phi``, the ``lam`` update, and
    the refreshed kernel and channel. Mutates and returns ``state``."""
    p = problem.p
    ones_n = np.ones_like(state.psi)
    state.psi = _scaling(ones_n, state.K.T @ (state.phi * p), "psi")
    state.phi = _scaling(np.ones_like(state.phi), state.K @ (state.psi * state.r), "phi")
    state.lam = solve_lambda(state, problem)
    state.K = _kernel(state.lam, problem.distortion, problem._min_positive_distortion, "distortion")
    state.w = state.channel()
    return state


def update_plan_block(state, problem):
    """One Sinkhorn sweep for ``varphi`` then ``xi``, the ``gamma`` update and
    the refreshed perception kernel. Mutates and returns ``state``."""
    state.varphi = _scaling(state.r, state.Mmat.T @ state.xi, "varphi")
    state.xi = _scaling(problem.p, state.Mmat @ state.varphi, "xi")
    state.gamma = solve_gamma(state, problem)
    state.Mmat = _kernel(
        state.gamma / problem.epsilon, problem.cost, problem._min_positive_cost, "perception"
    )
    return state


def _barycenter_step(mass, offsets):
    """Solve ``sum_j mass_j / (eta - offsets_j) = 1`` on
    ``eta > max offsets`` and return ``(eta, mass / (eta - offsets))``.

    Entries with zero mass are left out and get ``r_j = 0``.
    """
    support = mass > 0
    if not support.any():
        raise DegenerateStateError("all reconstruction masses vanished")
    m = mass[support]
    a = offsets[support]
    if not np.isfinite(a).all():
        raise NumericalStabilityError("non-finite dual offsets in the r update")
    top = float(a.max())
    gaps = top - a

    # u = eta - top; the sum decreases from +inf to -1 on u > 0
    def h(u):
        inv = 1.0 / (u + gaps)
        terms = m * inv
        return float(terms.sum()) - 1.0, -float(terms @ inv)

    lo = float(m[a.argmax()])
    hi = max(float(m.sum()), lo)
    u = safeguarded_newton(h, lo, hi, x0=1.0)
    r = np.zeros_like(mass)
    r[support] = m / (u + gaps)
    return top + u, r


def update_r_block(state, problem):
    """Update ``eta`` and ``r`` from the current channel and duals.

    ``tau`` is taken as zero in the rate-distortion mode.
    """
    offsets = state.beta
    if problem.mode == "ot":
        offsets = offsets + state.tau(problem.epsilon)
    mass = problem.p @ state.w
    state.eta, state.r = _barycenter_step(mass, offsets)
    return state


def update_r_block_kl(state, problem):
    """Joint ``(gamma, eta)`` solve for KL perception.

    For fixed ``gamma`` the inner problem is the barycenter step with
    masses ``gamma p + q``; the outer equation is
    ``sum_j p_j log r_j(gamma) = sum_j p_j log p_j - P``, whose left side
    is nondecreasing in ``gamma``.
    """
    p = problem.p
    beta = state.beta
    mass = p @ state.w
    positive = p > 0
    target = float(np.sum(p[positive] * np.log(p[positive]))) - problem.P

    def at(g):
        eta, r = _barycenter_step(g * p + mass, beta)
        return eta, r

    def g_value(r):
        with np.errstate(divide="ignore"):
            return float(np.sum(p[positive] * np.log(r[positive]))) - target

    eta0, r0 = at(0.0)
    if g_value(r0) >= 0.0:
        state.gamma, state.eta, state.r = 0.0, eta0, r0
        return state
    if problem.P == 0.0:
        state.gamma, state.eta, state.r = math.inf, math.inf, p.copy()
        return state

    def G(g):
        eta, r = at(g)
        a = np.zeros_like(r)
        s = g * p + mass
        live = s > 0
        a[live] = r[live] / s[live]
        slope_eta = np.dot(a, p) / np.dot(a, r)
        rp = r[positive]
        deriv = np.sum(a[positive] * p[positive] ** 2 / rp) - slope_eta * np.dot(a, p)
        return g_value(r), float(deriv)

    x0 = state.gamma if 0.0 < state.gamma < math.inf else 1.0
    lo, hi = 0.0, max(x0, 1e-3)
    while G(hi)[0] < 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise NumericalStabilityError("cannot bracket the KL multiplier")
    state.gamma = safeguarded_newton(G, lo, hi, x0=min(max(x0, lo), hi))
    state.eta, state.r = at(state.gamma)
    return state


def kkt_residuals(state, problem):
    """Seven L1 residuals of the KKT system at ``state``.

    Evaluated after an outer iteration, with the channel rebuilt from the
    latest ``r``:

    * ``r_psi``  column condition ``sum_j |psi_j sum_i K_ij phi_i p_i - 1|``
    * ``r_phi``  row condition ``sum_i |phi_i sum_j K_ij psi_j r_j - 1|``
    * ``r_lambda``  distortion complementary slackness (``|F|`` if
      ``lam > 0``, otherwise the violation ``max(F, 0)``)
    * ``r_eta``  stationarity in ``r``: ``sum_j |q_j / (eta - a_j) - r_j|``
    * ``r_varphi``, ``r_xi``  plan marginals
    * ``r_gamma``  perception complementary slackness

    Components that do not apply to the current mode are zero.
    """
    p, r = problem.p, state.r
    K = state.K
    r_psi = float(np.abs(state.psi * (K.T @ (state.phi * p)) - 1.0).sum())
    r_phi = float(np.abs(state.phi * (K @ (state.psi * r)) - 1.0).sum())
    w = state.channel()
    joint = p[:, None] * w
    F = float((joint * problem.distortion).sum()) - problem.D
    r_lambda = abs(F) if state.lam > 0 else max(F, 0.0)
    mass = joint.sum(axis=0)
    r_varphi = r_xi = r_gamma = 0.0
    offsets = state.beta
    numer = mass
    if problem.mode == "ot":
        Mm = state.Mmat
        r_varphi = float(np.abs(state.varphi * (Mm.T @ state.xi) - r).sum())
        r_xi = float(np.abs(state.xi * (Mm @ state.varphi) - p).sum())
        G = float((state.plan * problem.cost).sum()) - problem.P
        r_gamma = abs(G) if state.gamma > 0 else max(G, 0.0)
        offsets = offsets + state.tau(problem.epsilon)
    elif problem.mode == "kl":
        G = kl_divergence(p, r) - problem.P if (r[p > 0] > 0).all() else math.inf
        r_gamma = abs(G) if state.gamma > 0 else max(G, 0.0)
        numer = state.gamma * p + mass if math.isfinite(state.gamma) else None
    if numer is None:
        r_eta = float(np.abs(r - p).sum())
    else:
        live = numer > 0
        with np.errstate(invalid="ignore"):
            implied = numer[live] / (state.eta - offsets[live])
        r_eta = float(np.abs(implied - r[live]).sum() + r[~live].sum())
    return ResidualReport(r_psi, r_phi, r_lambda, r_eta, r_varphi, r_xi, r_gamma)


def init_state(problem):
    """Unit scalings, ``lam = gamma = 1`` and uniform ``r``.

    The rate-distortion mode starts (and stays) at ``gamma = 0``.
    """
    M, N = problem.distortion.shape
    gamma = 0.0 if problem.mode == "rd" else 1.0
    K = _kernel(1.0, problem.distortion, problem._min_positive_distortion, "distortion")
    if problem.mode == "ot":
        Mmat = _kernel(
            gamma / problem.epsilon, problem.cost, problem._min_positive_cost, "perception"
        )
    else:
        Mmat = np.ones((M, N))
    r = np.full(N, 1.0 / N)
    state = SolverState(
        phi=np.ones(M),
        psi=np.ones(N),
        xi=np.ones(M),
        varphi=np.ones(N),
        lam=1.0,
        gamma=gamma,
        eta=math.nan,
        r=r,
        K=K,
        Mmat=Mmat,
        w=None,
    )
    state.w = state.channel()
    return state


def _joint_lp(problem):
    # variables: channel joint pi (M*N), plan Pi (M*N), reconstruction r (N);
    # minimize <pi, d> subject to both couplings having marginals (p, r)
    # and <Pi, c> <= P
    p, d = problem.p, problem.distortion
    M, N = d.shape
    n = M * N
    size = 2 * n + N
    rows = np.kron(np.eye(M), np.ones((1, N)))
    cols = np.kron(np.ones((1, M)), np.eye(N))
    A_eq = np.zeros((2 * (M + N), size))
    b_eq = np.zeros(2 * (M + N))
    for k, offset in enumerate((0, n)):
        base = k * (M + N)
        A_eq[base:base + M, offset:offset + n] = rows
        b_eq[base:base + M] = p
        A_eq[base + M:base + M + N, offset:offset + n] = cols
        A_eq[base + M:base + M + N, -N:] = -np.eye(N)
    A_ub = np.zeros((1, size))
    A_ub[0, n:2 * n] = problem.cost.ravel()
    objective = np.zeros(size)
    objective[:n] = d.ravel()
    return linprog(
        objective,
        A_ub=A_ub,
        b_ub=[problem.P],
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
    )


def minimal_distortion(problem):
    """Smallest average distortion compatible with the perception bound.

    Exact for OT perception (a linear program over channel, plan and
    ``r``). For KL perception the value with ``r = p`` is returned, which is
    an upper bound. Without perception it is ``sum_i p_i min_j d_ij``.
    """
    p, d = problem.p, problem.distortion
    if problem.mode == "rd":
        return float(np.dot(p, d.min(axis=1)))
    if problem.mode == "ot":
        res = _joint_lp(problem)
        return float(res.fun) if res.status == 0 else math.inf
    return exact_ot_cost(p, p, d)[0]


def check_feasibility(problem):
    """Raise :class:`InfeasibleProblemError` when no channel meets both bounds."""
    p, d = problem.p, problem.distortion
    floor = float(np.dot(p, d.min(axis=1)))
    if problem.D < floor - FEASIBILITY_SLACK:
        raise InfeasibleProblemError(
            f"D={problem.D:.6g} is below the smallest achievable distortion {floor:.6g}", floor
        )
    if problem.mode == "rd":
        return
    if problem.mode == "ot":
        d_min = minimal_distortion(problem)
        if problem.D < d_min - FEASIBILITY_SLACK:
            raise InfeasibleProblemError(
                f"D={problem.D:.6g} is below the smallest distortion {d_min:.6g} "
                f"compatible with P={problem.P:.6g}",
                d_min,
            )
        return
    if problem.P == 0.0:
        d_min = minimal_distortion(problem)
        if problem.D < d_min - FEASIBILITY_SLACK:
            raise InfeasibleProblemError(
                f"P=0 pins r = p, which needs D >= {d_min:.6g}", d_min
            )


def _finish(state, problem, iterations, converged, trace):
    p = problem.p
    r = state.r
    w = state.channel()
    rate = mutual_information(w, p, r)
    distortion = expected_cost(w, problem.distortion, p)
    plan = None
    objective = rate
    if problem.mode == "ot":
        plan = state.plan
        perception = expected_cost(plan, problem.cost)
        objective = rate + problem.epsilon * entropy_of_plan(plan)
    elif problem.mode == "kl":
        perception = kl_divergence(p, r)
    else:
        perception = None
    return RdpSolution(
        rate=rate,
        w=w,
        r=r,
        plan=plan,
        distortion_achieved=distortion,
        perception_achieved=perception,
        iterations=iterations,
        converged=converged,
        objective=objective,
        lam=state.lam,
        gamma=state.gamma,
        eta=state.eta,
        mode=problem.mode,
        residual_trace=trace,
    )


def _iterate(problem, check=True):
    if check:
        check_feasibility(problem)
    state = init_state(problem)
    mode = problem.mode
    trace = []
    converged = False
    iteration = 0
    for iteration in range(1, int(problem.max_iter) + 1):
        update_w_block(state, problem)
        if mode == "ot":
            update_plan_block(state, problem)
        if mode == "kl":
            update_r_block_kl(state, problem)
        else:
            update_r_block(state, problem)
        report = kkt_residuals(state, problem)
        trace.append((iteration, report))
        if not math.isfinite(report.overall):
            raise NumericalStabilityError(f"residuals became non-finite at iteration {iteration}")
        if report.overall <= problem.tol:
            converged = True
            break
    return _finish(state, problem, iteration, converged, trace)


def solve(problem, check=True):
    """Solve ``problem`` with the improved alternating Sinkhorn iteration.

    Dispatches on the perception kind: OT costs use the three-block loop,
    KL perception uses :func:`solve_kl_variant`, and ``perception=None``
    uses :func:`solve_rd`.

    Parameters
    ----------
    problem : RdpProblem
    check : bool
        Run the feasibility pre-pass (a small LP) first.

    Returns
    -------
    RdpSolution

    Raises
    ------
    InfeasibleProblemError
        If the bounds cannot be met together.
    NumericalStabilityError
        If a kernel underflows or a scaling overflows; typically the
        regularization is too small for the cost scale.
    """
    return _iterate(problem, check)


def solve_kl_variant(problem, check=True):
    """Solve with KL perception: no transport plan, joint ``(gamma, eta)`` step."""
    if problem.mode != "kl":
        raise InvalidInputError("solve_kl_variant needs a KL perception spec")
    return _iterate(problem, check)


def solve_rd(problem, check=True):
    """Classical rate-distortion function: the same loop without the plan block."""
    if problem.mode != "rd":
        problem = RdpProblem(
            problem.source,
            problem.distortion,
            problem.D,
            None,
            problem.rec_support,
            problem.epsilon,
            problem.max_iter,
            problem.tol,
        )
    return _iterate(problem, check)


def write_trace_csv(trace, path):
    """Write a residual trace as CSV (``iter`` plus the seven residuals and ``overall``)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("iter",) + RESIDUAL_FIELDS + ("overall",))
        for iteration, report in trace:
            values = [getattr(report, name) for name in RESIDUAL_FIELDS] + [report.overall]
            writer.writerow([iteration] + [f"{v:.16e}" for v in values])
