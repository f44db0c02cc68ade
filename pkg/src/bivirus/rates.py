"""Infection/recovery rate models, their Jacobians, and model validators.

Built-in models mirror the three standard cases: linear rates, logarithmic
infection with linear recovery, and logarithmic infection with polynomial
recovery. All built-ins evaluate through the shared numerical kernels so the
integrator's fast path and the Python-level API agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.stats import qmc

from . import kernels
from .errors import BivirusError, DomainError
from .graph import Graph

STATE_SLACK = 1e-9
SIGN_TOL = 1e-7
FD_STEP_FIRST = 1e-6
# Second-difference roundoff scales like eps * |f| / h^2; h = 1e-3 keeps it
# near 1e-9, far below the 1e-7 sign tolerance (1e-4 would not).
FD_STEP_SECOND = 1e-3

A3_NOTE = ("A3 row-dominance is checked as sum_{j!=i} |J_Q[i,j]| < J_Q[i,i] "
           "(off-diagonals are nonpositive, so the stated sum is interpreted "
           "as a magnitude sum)")


def _validated_state(state, n: int, slack: float = STATE_SLACK) -> np.ndarray:
    x = np.asarray(state, dtype=np.float64)
    if x.shape != (n,):
        raise DomainError(f"state must have shape ({n},), got {x.shape}")
    if np.min(x) < -slack or np.max(x) > 1.0 + slack:
        raise DomainError("state outside [0,1]^n beyond slack")
    return np.clip(x, 0.0, 1.0)


class RateModel:
    """Common behaviour for the built-in rate models."""

    is_infection: bool
    kind: str

    @property
    def n(self) -> int:
        raise NotImplementedError

    def evaluate(self, state) -> np.ndarray:
        """Per-node rates (per unit time) at a state in [0,1]^n."""
        raise NotImplementedError

    def jacobian(self, state) -> np.ndarray:
        """Analytic n x n Jacobian of the rate vector field."""
        raise NotImplementedError


@dataclass(frozen=True)
class LinearInfection(RateModel):
    """f_i(x) = beta * sum_j a_ij x_j."""

    graph: Graph
    beta: float
    is_infection = True
    local_only = False
    kind = "LinearInfection"
    kernel_code = kernels.INFECT_LINEAR

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def kernel_param(self) -> float:
        return float(self.beta)

    def evaluate(self, state):
        x = _validated_state(state, self.n)
        return kernels.infection_rate(self.kernel_code, self.kernel_param,
                                      self.graph.adjacency, x)

    def jacobian(self, state):
        x = _validated_state(state, self.n)
        return kernels.infection_jacobian(self.kernel_code, self.kernel_param,
                                          self.graph.adjacency, x)


@dataclass(frozen=True)
class LogInfection(RateModel):
    """f_i(x) = sum_j a_ij ln(1 + alpha x_j), saturating in neighbor load."""

    graph: Graph
    alpha: float
    is_infection = True
    local_only = False
    kind = "LogInfection"
    kernel_code = kernels.INFECT_LOG

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def kernel_param(self) -> float:
        return float(self.alpha)

    def evaluate(self, state):
        x = _validated_state(state, self.n)
        return kernels.infection_rate(self.kernel_code, self.kernel_param,
                                      self.graph.adjacency, x)

    def jacobian(self, state):
        x = _validated_state(state, self.n)
        return kernels.infection_jacobian(self.kernel_code, self.kernel_param,
                                          self.graph.adjacency, x)


@dataclass(frozen=True)
class LinearRecovery(RateModel):
    """q_i(x) = delta * x_i, constant failure rate."""

    size: int
    delta: float
    is_infection = False
    local_only = True
    kind = "LinearRecovery"
    kernel_code = kernels.RECOVER_LINEAR

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.size < 1:
            raise ValueError("size must be positive")

    @property
    def n(self) -> int:
        return self.size

    @property
    def kernel_param(self) -> float:
        return float(self.delta)

    def evaluate(self, state):
        x = _validated_state(state, self.n)
        return kernels.recovery_rate(self.kernel_code, self.kernel_param, x)

    def jacobian_diagonal(self, state):
        x = _validated_state(state, self.n)
        return kernels.recovery_jacobian_diag(self.kernel_code,
                                              self.kernel_param, x)

    def jacobian(self, state):
        return np.diag(self.jacobian_diagonal(state))


@dataclass(frozen=True)
class PolyRecovery(RateModel):
    """q_i(x) = (1 + x_i)^k - 1, convex in the local infection level."""

    size: int
    k: float
    is_infection = False
    local_only = True
    kind = "PolyRecovery"
    kernel_code = kernels.RECOVER_POLY

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.size < 1:
            raise ValueError("size must be positive")

    @property
    def n(self) -> int:
        return self.size

    @property
    def kernel_param(self) -> float:
        return float(self.k)

    def evaluate(self, state):
        x = _validated_state(state, self.n)
        return kernels.recovery_rate(self.kernel_code, self.kernel_param, x)

    def jacobian_diagonal(self, state):
        x = _validated_state(state, self.n)
        return kernels.recovery_jacobian_diag(self.kernel_code,
                                              self.kernel_param, x)

    def jacobian(self, state):
        return np.diag(self.jacobian_diagonal(state))


@dataclass(frozen=True)
class Witness:
    """One measured violation of a model assumption."""

    check: str
    point: np.ndarray = dataclass_field(repr=False)
    index: tuple
    value: float


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of sampling the rate-model assumptions A1..A5.

    ``passed`` maps each check id (A1..A5 plus the monotone-Jacobian
    consequence C2C3) to a boolean; every failed check carries at least one
    witness. Violations are data, not exceptions, so callers can print them.
    """

    passed: dict
    witnesses: tuple
    notes: tuple = ()

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())

    def summary(self) -> str:
        parts = [f"{k}={'pass' if v else 'FAIL'}"
                 for k, v in sorted(self.passed.items())]
        return " ".join(parts)


@dataclass(frozen=True)
class DFRReport:
    """Minimum margin of x q'(x) - q(x) over a grid in (0,1]."""

    satisfied: bool
    min_margin: float
    argmin: float


def _sample_points(n: int, samples: int, seed: int, margin: float) -> np.ndarray:
    sampler = qmc.Sobol(d=n, scramble=True, seed=seed)
    pts = sampler.random(samples)
    return margin + pts * (1.0 - 2.0 * margin)


def _fd_second(fn, x, j, k, h):
    """Central second difference of a vector field wrt coordinates j and k."""
    if j == k:
        ej = np.zeros_like(x)
        ej[j] = h
        return (fn(x + ej) - 2.0 * fn(x) + fn(x - ej)) / (h * h)
    ej = np.zeros_like(x)
    ek = np.zeros_like(x)
    ej[j] = h
    ek[k] = h
    return (fn(x + ej + ek) - fn(x + ej - ek)
            - fn(x - ej + ek) + fn(x - ej - ek)) / (4.0 * h * h)


def fd_jacobian(fn, x, h: float = FD_STEP_FIRST) -> np.ndarray:
    """Central-difference Jacobian oracle, independent of analytic paths."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    jac = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        jac[:, j] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return jac


MAX_WITNESSES = 200


def check_assumptions(infection: RateModel, recovery: RateModel,
                      samples: int = 64, seed: int = 2023) -> AssumptionReport:
    """Sample the assumptions A1..A5 plus the monotone-Jacobian consequence.

    A1 is evaluated exactly at zero; A2/A3 from the sign patterns of the
    analytic Jacobians at quasi-random points; A4/A5 from central second
    finite differences at the same points; the consequence check compares
    Jacobians at ordered pairs u <= w. All sign tests use tolerance 1e-7.
    """
    if not infection.is_infection:
        raise ValueError("first argument must be an infection model")
    if recovery.is_infection:
        raise ValueError("second argument must be a recovery model")
    n = infection.n
    if recovery.n != n:
        raise ValueError("models must share the node count")
    adj = infection.graph.adjacency

    passed = {key: True for key in ("A1", "A2", "A3", "A4", "A5", "C2C3")}
    witnesses: list[Witness] = []

    def record(check, point, index, value):
        passed[check] = False
        if len(witnesses) < MAX_WITNESSES:
            witnesses.append(Witness(check, np.array(point), index, float(value)))

    zero = np.zeros(n)
    for model, tag in ((infection, "F"), (recovery, "Q")):
        val = model.evaluate(zero)
        bad = np.nonzero(val != 0.0)[0]
        if bad.size:
            record("A1", zero, (tag, int(bad[0])), val[bad[0]])

    h2 = FD_STEP_SECOND
    margin = 4.0 * h2
    points = _sample_points(n, samples, seed, margin)
    rng = np.random.default_rng(seed)

    for p_idx in range(points.shape[0]):
        x = points[p_idx]

        jf = infection.jacobian(x)
        edge = adj > 0
        for i, j in np.argwhere(edge & (jf <= SIGN_TOL)):
            record("A2", x, (int(i), int(j)), jf[i, j])
        for i, j in np.argwhere(~edge & (np.abs(jf) > SIGN_TOL)):
            record("A2", x, (int(i), int(j)), jf[i, j])

        jq = recovery.jacobian(x)
        for i in range(n):
            if jq[i, i] <= SIGN_TOL:
                record("A3", x, (i, i), jq[i, i])
            off = np.abs(jq[i]).sum() - abs(jq[i, i])
            if off >= jq[i, i] + SIGN_TOL:
                record("A3", x, (i, "row-sum"), off - jq[i, i])
        offdiag = jq - np.diag(np.diag(jq))
        bad = np.argwhere(offdiag > SIGN_TOL)
        for i, j in bad:
            record("A3", x, (int(i), int(j)), jq[i, j])

        # A4: concavity of every f_i; A5: q_i convex in x_i, concave across.
        for j in range(n):
            for k in range(j, n):
                hess_f = _fd_second(infection.evaluate, x, j, k, h2)
                bad = np.nonzero(hess_f > SIGN_TOL)[0]
                if bad.size:
                    record("A4", x, (int(bad[0]), j, k), hess_f[bad[0]])
                hess_q = _fd_second(recovery.evaluate, x, j, k, h2)
                for i in range(n):
                    if i == j == k:
                        if hess_q[i] < -SIGN_TOL:
                            record("A5", x, (i, j, k), hess_q[i])
                    elif i != j and i != k:
                        if hess_q[i] > SIGN_TOL:
                            record("A5", x, (i, j, k), hess_q[i])

        # Monotone-Jacobian consequence of (A2)-(A5): for u <= w,
        # J_F(u) >= J_F(w) and J_Q(u) <= J_Q(w) entrywise.
        w = x + rng.uniform(0.0, 1.0, size=n) * (1.0 - margin - x)
        jf_w = infection.jacobian(w)
        drop = jf_w - jf
        bad = np.argwhere(drop > SIGN_TOL)
        for i, j in bad:
            record("C2C3", x, (int(i), int(j)), drop[i, j])
        jq_w = recovery.jacobian(w)
        rise = jq - jq_w
        bad = np.argwhere(rise > SIGN_TOL)
        for i, j in bad:
            record("C2C3", x, (int(i), int(j)), rise[i, j])

    return AssumptionReport(passed=passed, witnesses=tuple(witnesses),
                            notes=(A3_NOTE,))


def check_dfr(recovery: RateModel, samples: int = 1000,
              tol: float = 1e-12) -> DFRReport:
    """Margin of the decreasing-failure-rate condition on a grid in (0,1].

    The condition x q'(x) - q(x) >= 0 is defined only for recovery rates that
    depend on the local state alone (diagonal Jacobian); anything else raises.
    """
    if recovery.is_infection:
        raise ValueError("DFR condition applies to recovery models")
    n = recovery.n
    probe = np.full(n, 0.5)
    jac = recovery.jacobian(probe)
    offmax = np.max(np.abs(jac - np.diag(np.diag(jac))))
    if offmax > 1e-12 or not getattr(recovery, "local_only", False):
        raise DomainError(
            "recovery rate couples neighboring nodes; the DFR condition is "
            "undefined for non-diagonal recovery Jacobians")

    min_margin = np.inf
    argmin = np.nan
    for k in range(1, samples + 1):
        xval = k / samples
        state = np.full(n, xval)
        q = recovery.evaluate(state)
        qp = np.diag(recovery.jacobian(state))
        margin = xval * qp - q
        local_min = float(np.min(margin))
        if local_min < min_margin:
            min_margin = local_min
            argmin = xval
    return DFRReport(satisfied=bool(min_margin >= -tol),
                     min_margin=float(min_margin), argmin=float(argmin))


_CASE_ALIASES = {"case1": "linear"}


def parse_rate_pair(spec: str, graph: Graph):
    """Build an (infection, recovery) pair from a CLI model string.

    Formats: ``linear:beta=..,delta=..``, ``case2:alpha=..,delta=..``,
    ``case3:alpha=..[,k=..]`` (k defaults to 2).
    """
    name, _, arg_text = spec.partition(":")
    name = _CASE_ALIASES.get(name.strip().lower(), name.strip().lower())
    params = {}
    if arg_text.strip():
        for chunk in arg_text.split(","):
            key, eq, value = chunk.partition("=")
            if not eq:
                raise BivirusError(f"malformed rate parameter {chunk!r}")
            try:
                params[key.strip()] = float(value)
            except ValueError as exc:
                raise BivirusError(f"non-numeric rate parameter {chunk!r}") from exc

    def take(key, default=None):
        if key in params:
            return params.pop(key)
        if default is None:
            raise BivirusError(f"rate model {name!r} requires parameter {key!r}")
        return default

    if name == "linear":
        pair = (LinearInfection(graph, take("beta")),
                LinearRecovery(graph.n, take("delta")))
    elif name == "case2":
        pair = (LogInfection(graph, take("alpha")),
                LinearRecovery(graph.n, take("delta")))
    elif name == "case3":
        pair = (LogInfection(graph, take("alpha")),
                PolyRecovery(graph.n, take("k", 2.0)))
    else:
        raise BivirusError(
            f"unknown rate model {name!r} (expected linear, case2 or case3)")
    if params:
        raise BivirusError(
            f"unexpected parameters for {name!r}: {sorted(params)}")
    return pair
