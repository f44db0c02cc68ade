"""Two-virus vector field assembly, trajectory integration, fixed points.

The state space is D = {(x, y) in [0,1]^{2N} : x + y <= 1}; the integrator
keeps trajectories inside D by rejecting steps that leave it and clamping
accepted states. Setting the second virus to zero reduces the field exactly
to the single-virus system, which is how fixed points are computed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import kernels
from .errors import BivirusError, DomainError
from .graph import Graph
from .rates import RateModel, _validated_state

STATE_SLACK = 1e-9
DEFAULT_T_MAX = 1e4
DEFAULT_CONV_TOL = 1e-10
DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12
DEFAULT_MAX_STEPS = 1_000_000


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class StateD:
    """A point (x, y) of the invariant set D, validated within 1e-9 slack."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if x.shape != y.shape or x.ndim != 1:
            raise DomainError("x and y must be 1-d vectors of equal length")
        if (np.min(x) < -STATE_SLACK or np.min(y) < -STATE_SLACK
                or np.max(x + y) > 1.0 + STATE_SLACK):
            raise DomainError("state outside D beyond slack")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))

    @classmethod
    def zeros(cls, n: int) -> "StateD":
        return cls(np.zeros(n), np.zeros(n))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def clamped(self) -> "StateD":
        """Exact projection onto D (snaps slack-sized violations)."""
        xc, yc = kernels.clamp_to_domain(self.x.copy(), self.y.copy())
        return StateD(xc, yc)

    def avg(self) -> tuple[float, float]:
        """(avgX, avgY) = mean infection level per virus."""
        return float(self.x.mean()), float(self.y.mean())


class TerminalReason(enum.Enum):
    CONVERGED = "converged"
    MAX_TIME = "max_time"
    STEP_FAILURE = "step_failure"


_STATUS_TO_REASON = {
    kernels.STATUS_CONVERGED: TerminalReason.CONVERGED,
    kernels.STATUS_MAX_TIME: TerminalReason.MAX_TIME,
    kernels.STATUS_STEP_FAILURE: TerminalReason.STEP_FAILURE,
    kernels.STATUS_STEP_BUDGET: TerminalReason.STEP_FAILURE,
}


@dataclass(frozen=True)
class BiVirusSystem:
    """Two overlaid graphs plus a rate-model pair for each virus.

    Virus 1 spreads with ``infection1`` on ``graph_a`` and recovers with
    ``recovery1``; virus 2 uses ``infection2`` on ``graph_b`` and
    ``recovery2``. Construction validates structure and the zero-rate
    condition; the sampled assumption checks run in the classifier.
    """

    graph_a: Graph
    graph_b: Graph
    infection1: RateModel
    recovery1: RateModel
    infection2: RateModel
    recovery2: RateModel

    def __post_init__(self):
        if self.graph_a.n != self.graph_b.n:
            raise BivirusError("both graphs must share the node count")
        for model, want_infection, g in (
                (self.infection1, True, self.graph_a),
                (self.recovery1, False, None),
                (self.infection2, True, self.graph_b),
                (self.recovery2, False, None)):
            if model.is_infection != want_infection:
                raise BivirusError("rate models supplied in the wrong slots")
            if model.n != self.graph_a.n:
                raise BivirusError("rate model size mismatch")
            if not hasattr(model, "kernel_code"):
                raise BivirusError("rate models must be built-in kinds")
            if g is not None and model.graph is not g:
                raise BivirusError("infection model not bound to its graph")
        zero = np.zeros(self.n)
        for model in (self.infection1, self.recovery1,
                      self.infection2, self.recovery2):
            if np.any(model.evaluate(zero) != 0.0):
                raise BivirusError(f"{model.kind} violates zero-rate condition")

    @property
    def n(self) -> int:
        return self.graph_a.n

    def packed(self) -> tuple:
        """Raw (adjacency, code, param) bundle consumed by the kernels."""
        return (self.graph_a.adjacency, self.graph_b.adjacency,
                self.infection1.kernel_code, self.infection1.kernel_param,
                self.recovery1.kernel_code, self.recovery1.kernel_param,
                self.infection2.kernel_code, self.infection2.kernel_param,
                self.recovery2.kernel_code, self.recovery2.kernel_param)


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped states produced by the integrator.

    All stored states lie in D; times are strictly increasing. ``residual``
    is the max-norm of the vector field at the final state.
    """

    times: np.ndarray = dataclass_field(repr=False)
    xs: np.ndarray = dataclass_field(repr=False)
    ys: np.ndarray = dataclass_field(repr=False)
    terminal_reason: TerminalReason
    residual: float

    def __post_init__(self):
        object.__setattr__(self, "times", _frozen(self.times))
        object.__setattr__(self, "xs", _frozen(self.xs))
        object.__setattr__(self, "ys", _frozen(self.ys))

    def __len__(self) -> int:
        return self.times.shape[0]

    def state(self, i: int) -> StateD:
        return StateD(self.xs[i], self.ys[i])

    @property
    def final(self) -> StateD:
        return self.state(len(self) - 1)

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    def avg_series(self) -> tuple[np.ndarray, np.ndarray]:
        return self.xs.mean(axis=1), self.ys.mean(axis=1)


def bivirus_field(sys: BiVirusSystem, state: StateD):
    """(dx/dt, dy/dt) of the competing-virus system at a state of D."""
    x = _validated_state(state.x, sys.n)
    y = _validated_state(state.y, sys.n)
    if np.max(x + y) > 1.0 + STATE_SLACK:
        raise DomainError("state outside D beyond slack")
    return kernels.bivirus_rhs(*sys.packed(), x, y)


def bivirus_jacobian(sys: BiVirusSystem, state: StateD) -> np.ndarray:
    """Analytic 2n x 2n Jacobian of the field, in block form.

    With s = 1 - x - y: top-left diag(s) J_G(x) - diag(G(x)) - J_R(x),
    top-right -diag(G(x)), bottom-left -diag(H(y)), bottom-right
    diag(s) J_H(y) - diag(H(y)) - J_S(y).
    """
    x = _validated_state(state.x, sys.n)
    y = _validated_state(state.y, sys.n)
    if np.max(x + y) > 1.0 + STATE_SLACK:
        raise DomainError("state outside D beyond slack")
    s = 1.0 - x - y
    g = sys.infection1.evaluate(x)
    h = sys.infection2.evaluate(y)
    jg = sys.infection1.jacobian(x)
    jh = sys.infection2.jacobian(y)
    jr = sys.recovery1.jacobian(x)
    js = sys.recovery2.jacobian(y)
    top_left = s[:, None] * jg - np.diag(g) - jr
    bottom_right = s[:, None] * jh - np.diag(h) - js
    return np.block([[top_left, -np.diag(g)],
                     [-np.diag(h), bottom_right]])


def integrate(sys: BiVirusSystem, s0: StateD, t_max: float = DEFAULT_T_MAX,
              conv_tol: float = DEFAULT_CONV_TOL, rtol: float = DEFAULT_RTOL,
              atol: float = DEFAULT_ATOL,
              max_steps: int = DEFAULT_MAX_STEPS) -> Trajectory:
    """Integrate the system from s0 with adaptive RKF45 error control.

    Stops early with CONVERGED once the field max-norm drops below
    ``conv_tol`` (0 disables early stopping); otherwise runs to ``t_max``.
    Returns STEP_FAILURE when the step size underflows.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if conv_tol < 0:
        raise ValueError("conv_tol must be nonnegative")
    if s0.n != sys.n:
        raise DomainError("initial state size mismatch")
    times, xs, ys, status, resid = kernels.rkf45_bivirus(
        *sys.packed(), s0.x.copy(), s0.y.copy(),
        float(t_max), float(conv_tol), float(rtol), float(atol),
        int(max_steps))
    return Trajectory(times=times, xs=xs, ys=ys,
                      terminal_reason=_STATUS_TO_REASON[int(status)],
                      residual=float(resid))


def single_virus_field(infection: RateModel, recovery: RateModel, x):
    """diag(1 - x) F(x) - Q(x) for one virus alone."""
    x = _validated_state(x, infection.n)
    return (1.0 - x) * infection.evaluate(x) - recovery.evaluate(x)


def single_virus_jacobian(infection: RateModel, recovery: RateModel,
                          x) -> np.ndarray:
    """diag(1 - x) J_F(x) - diag(F(x)) - J_Q(x)."""
    x = _validated_state(x, infection.n)
    return ((1.0 - x)[:, None] * infection.jacobian(x)
            - np.diag(infection.evaluate(x)) - recovery.jacobian(x))


@dataclass(frozen=True)
class FixedPointResult:
    """Single-virus fixed point with the Newton polish outcome.

    ``threshold`` is the dominant eigenvalue of J_F(0) - J_Q(0); the fixed
    point is the zero vector whenever it is nonpositive. ``newton_ok`` is
    False when the polish diverged and the integration endpoint is returned
    instead.
    """

    x: np.ndarray
    threshold: float
    residual: float
    newton_ok: bool


def _mirror_system(infection: RateModel, recovery: RateModel) -> tuple:
    """Kernel bundle that runs one virus as both (y stays identically 0)."""
    adj = infection.graph.adjacency
    return (adj, adj,
            infection.kernel_code, infection.kernel_param,
            recovery.kernel_code, recovery.kernel_param,
            infection.kernel_code, infection.kernel_param,
            recovery.kernel_code, recovery.kernel_param)


def single_virus_fixed_point(infection: RateModel, recovery: RateModel,
                             tol: float = DEFAULT_CONV_TOL,
                             t_max: float = DEFAULT_T_MAX) -> FixedPointResult:
    """Globally attractive fixed point of the single-virus system.

    When the zero-state threshold eigenvalue is positive, integrates from
    0.99 * ones until the field norm drops below ``tol``, then polishes with
    damped Newton iterations to machine precision. Otherwise returns the
    zero vector.
    """
    from .graph import pf_eigen

    n = infection.n
    zero = np.zeros(n)
    j0 = infection.jacobian(zero) - recovery.jacobian(zero)
    threshold = pf_eigen(j0).value
    if threshold <= 0.0:
        return FixedPointResult(x=_frozen(zero), threshold=threshold,
                                residual=0.0, newton_ok=True)

    x0 = np.full(n, 0.99)
    _, xs, _, _, _ = kernels.rkf45_bivirus(
        *_mirror_system(infection, recovery), x0, np.zeros(n),
        float(t_max), float(tol), DEFAULT_RTOL, DEFAULT_ATOL,
        DEFAULT_MAX_STEPS)
    x_integrated = np.array(xs[-1])

    x = x_integrated.copy()
    fval = single_virus_field(infection, recovery, x)
    fnorm = float(np.max(np.abs(fval)))
    for _ in range(50):
        if fnorm <= 1e-14:
            break
        jac = single_virus_jacobian(infection, recovery, x)
        try:
            delta = np.linalg.solve(jac, -fval)
        except np.linalg.LinAlgError:
            break
        damping = 1.0
        improved = False
        while damping >= 1.0 / 64.0:
            trial = np.clip(x + damping * delta, 1e-15, 1.0 - 1e-15)
            ftrial = single_virus_field(infection, recovery, trial)
            fnorm_trial = float(np.max(np.abs(ftrial)))
            if fnorm_trial < fnorm:
                x = trial
                fval = ftrial
                fnorm = fnorm_trial
                improved = True
                break
            damping *= 0.5
        if not improved:
            break

    newton_ok = fnorm <= 1e-12
    if not newton_ok:
        x = x_integrated
        fnorm = float(np.max(np.abs(
            single_virus_field(infection, recovery, x))))
    return FixedPointResult(x=_frozen(x), threshold=threshold,
                            residual=fnorm, newton_ok=newton_ok)


def write_trajectory_csv(traj: Trajectory, fp) -> None:
    """Rows "t,x_0..x_{n-1},y_0..y_{n-1}", one per accepted step."""
    n = traj.xs.shape[1]
    header = ",".join(["t"] + [f"x_{i}" for i in range(n)]
                      + [f"y_{i}" for i in range(n)])
    fp.write(header + "\n")
    for i in range(len(traj)):
        row = [repr(float(traj.times[i]))]
        row += [repr(float(v)) for v in traj.xs[i]]
        row += [repr(float(v)) for v in traj.ys[i]]
        fp.write(",".join(row) + "\n")


def summary_row(traj: Trajectory) -> tuple[float, float, float, str]:
    """(t_final, avgX, avgY, terminal_reason) for the summary CSV."""
    avg_x, avg_y = traj.final.avg()
    return (traj.t_final, avg_x, avg_y, traj.terminal_reason.value)


def write_summary_csv(rows, fp) -> None:
    fp.write("t_final,avgX,avgY,terminal_reason\n")
    for t_final, avg_x, avg_y, reason in rows:
        fp.write(f"{float(t_final)!r},{float(avg_x)!r},"
                 f"{float(avg_y)!r},{reason}\n")
