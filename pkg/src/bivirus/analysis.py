"""Threshold eigenvalues, outcome classification, and coexistence brackets.

The global outcome of the competing-virus system is decided by four
eigenvalues: the zero-state thresholds of each virus alone and the pair
lambda(U), lambda(V) with U = diag(1 - y*) J_G(0) - J_R(0) and
V = diag(1 - x*) J_H(0) - J_S(0), where x*, y* are the single-virus fixed
points. Sign combinations map onto the trichotomy of outcomes; near-zero
eigenvalues are reported as Boundary instead of forcing a tie-break.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .dynamics import (BiVirusSystem, StateD, TerminalReason, Trajectory,
                       bivirus_field, bivirus_jacobian, integrate,
                       single_virus_fixed_point, single_virus_jacobian)
from .errors import AssumptionError, BracketError
from .graph import pattern_strongly_connected, pf_eigen
from .rates import check_assumptions

CLASSIFY_EPS = 1e-8
KAMKE_TOL = 1e-9
ORDER_SLACK = 1e-9


class Outcome(enum.Enum):
    VIRUS_FREE = "VirusFree"
    VIRUS1_WINS = "Virus1Wins"
    VIRUS2_WINS = "Virus2Wins"
    COEXISTENCE = "Coexistence"
    BOUNDARY = "Boundary"

    @property
    def label(self) -> str:
        return self.value


# Southeast cone order on D: (x, y) precedes (x', y') when x <= x', y >= y'.

def southeast_le(a: StateD, b: StateD, slack: float = 0.0) -> bool:
    return bool(np.all(a.x <= b.x + slack) and np.all(a.y >= b.y - slack))


def southeast_lt(a: StateD, b: StateD, slack: float = 0.0) -> bool:
    if not southeast_le(a, b, slack):
        return False
    return not (np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y))


def southeast_ll(a: StateD, b: StateD, slack: float = 0.0) -> bool:
    """Strict componentwise ordering (interior of the cone)."""
    return bool(np.all(a.x < b.x + slack) and np.all(a.y > b.y - slack))


@dataclass(frozen=True)
class TrichotomyVerdict:
    """Classification outcome with its decisive eigenvalues and fixed points."""

    outcome: Outcome
    lambda_u: float
    lambda_v: float
    lambda_g0: float
    lambda_h0: float
    x_star: np.ndarray = dataclass_field(repr=False)
    y_star: np.ndarray = dataclass_field(repr=False)


def _zero_jacobians(sys: BiVirusSystem):
    zero = np.zeros(sys.n)
    jg0 = sys.infection1.jacobian(zero)
    jr0 = sys.recovery1.jacobian(zero)
    jh0 = sys.infection2.jacobian(zero)
    js0 = sys.recovery2.jacobian(zero)
    return jg0, jr0, jh0, js0


def classify(sys: BiVirusSystem, eps: float = CLASSIFY_EPS,
             verify_assumptions: bool = True, samples: int = 16,
             seed: int = 2023) -> TrichotomyVerdict:
    """Classify the global outcome from spectral threshold conditions.

    Computes the single-virus fixed points, forms U and V, and maps the
    eigenvalue signs onto the trichotomy. Any decisive eigenvalue within
    ``eps`` of zero yields Boundary. With ``verify_assumptions`` the sampled
    model checks run first and raise AssumptionError on failure.
    """
    if verify_assumptions:
        for infection, recovery in ((sys.infection1, sys.recovery1),
                                    (sys.infection2, sys.recovery2)):
            report = check_assumptions(infection, recovery,
                                       samples=samples, seed=seed)
            if not report.all_passed:
                raise AssumptionError(
                    f"rate models violate assumptions: {report.summary()}",
                    report=report)

    jg0, jr0, jh0, js0 = _zero_jacobians(sys)
    lambda_g0 = pf_eigen(jg0 - jr0).value
    lambda_h0 = pf_eigen(jh0 - js0).value

    n = sys.n
    if lambda_g0 > eps:
        x_star = single_virus_fixed_point(sys.infection1, sys.recovery1).x
    else:
        x_star = np.zeros(n)
    if lambda_h0 > eps:
        y_star = single_virus_fixed_point(sys.infection2, sys.recovery2).x
    else:
        y_star = np.zeros(n)

    # With y* = 0 the scaling matrix is the identity and lambda_u collapses
    # to lambda_g0 (same for the other side); no special-casing needed.
    mat_u = (1.0 - y_star)[:, None] * jg0 - jr0
    mat_v = (1.0 - x_star)[:, None] * jh0 - js0
    lambda_u = pf_eigen(mat_u).value
    lambda_v = pf_eigen(mat_v).value

    decisive = (lambda_g0, lambda_h0, lambda_u, lambda_v)
    if any(abs(v) <= eps for v in decisive):
        outcome = Outcome.BOUNDARY
    elif lambda_g0 < 0.0 and lambda_h0 < 0.0:
        outcome = Outcome.VIRUS_FREE
    elif lambda_u > 0.0 and lambda_v < 0.0:
        outcome = Outcome.VIRUS1_WINS
    elif lambda_u < 0.0 and lambda_v > 0.0:
        outcome = Outcome.VIRUS2_WINS
    elif lambda_u > 0.0 and lambda_v > 0.0:
        outcome = Outcome.COEXISTENCE
    else:
        # lambda_u < 0 and lambda_v < 0 with a positive solo threshold is
        # impossible in exact arithmetic; treat as numerically indeterminate.
        outcome = Outcome.BOUNDARY

    return TrichotomyVerdict(outcome=outcome, lambda_u=float(lambda_u),
                             lambda_v=float(lambda_v),
                             lambda_g0=float(lambda_g0),
                             lambda_h0=float(lambda_h0),
                             x_star=x_star, y_star=y_star)


@dataclass(frozen=True)
class KamkeReport:
    """Sign-pattern check of the Jacobian over sampled points of D."""

    passed: bool
    samples: int
    violations: tuple
    irreducible_failures: tuple


def sample_domain_points(n: int, samples: int, rng,
                         interior: bool = False) -> list[StateD]:
    """Random points of D; ``interior`` keeps all coordinates strictly inside."""
    points = []
    for _ in range(samples):
        if interior:
            split = rng.uniform(0.1, 0.9, size=n)
            total = rng.uniform(0.1, 0.9, size=n)
            x = split * total
            y = (1.0 - split) * total
        else:
            x = rng.uniform(0.0, 1.0, size=n)
            y = rng.uniform(0.0, 1.0, size=n)
            s = x + y
            shrink = rng.uniform(0.3, 1.0, size=n)
            scale = np.where(s > 1.0, shrink / s, 1.0)
            x = x * scale
            y = y * scale
        points.append(StateD(x, y))
    return points


def check_kamke(sys: BiVirusSystem, samples: int = 50, seed: int = 7,
                tol: float = KAMKE_TOL, interior: bool = False) -> KamkeReport:
    """Verify the cooperative sign structure of the Jacobian on D.

    Off-diagonal entries of the diagonal blocks must be >= -tol and all
    entries of the off-diagonal blocks <= tol; at interior points the
    Jacobian nonzero pattern must additionally be irreducible. With
    ``interior`` the sampling avoids the boundary of D entirely.
    """
    n = sys.n
    rng = np.random.default_rng(seed)
    points = sample_domain_points(n, samples, rng, interior=interior)
    violations = []
    irreducible_failures = []
    off_mask = ~np.eye(n, dtype=bool)
    for idx, state in enumerate(points):
        jac = bivirus_jacobian(sys, state)
        tl = jac[:n, :n]
        br = jac[n:, n:]
        tr = jac[:n, n:]
        bl = jac[n:, :n]
        for block, name in ((tl, "top-left"), (br, "bottom-right")):
            bad = np.argwhere(off_mask & (block < -tol))
            for i, j in bad:
                violations.append((idx, name, (int(i), int(j)),
                                   float(block[i, j])))
        for block, name in ((tr, "top-right"), (bl, "bottom-left")):
            bad = np.argwhere(block > tol)
            for i, j in bad:
                violations.append((idx, name, (int(i), int(j)),
                                   float(block[i, j])))
        is_interior = (np.min(state.x) > 0.0 and np.min(state.y) > 0.0
                       and np.max(state.x + state.y) < 1.0)
        if is_interior and not pattern_strongly_connected(jac):
            irreducible_failures.append(idx)
    return KamkeReport(passed=not violations and not irreducible_failures,
                       samples=samples, violations=tuple(violations),
                       irreducible_failures=tuple(irreducible_failures))


@dataclass(frozen=True)
class MonotoneReport:
    """Flow-order preservation check over sampled ordered pairs."""

    passed: bool
    pairs: int
    violations: tuple


def check_monotone_flow(sys: BiVirusSystem, pairs: int = 100,
                        t_checks=(1.0, 5.0, 25.0), seed: int = 11,
                        slack: float = ORDER_SLACK, rtol: float = 1e-9,
                        atol: float = 1e-12) -> MonotoneReport:
    """Integrate sampled ordered pairs and verify the order is preserved.

    Draws pairs s <=_K s' in D and checks phi_t(s) <=_K phi_t(s') at each
    checkpoint within ``slack``. Tighten rtol/atol to sharpen the check.
    """
    n = sys.n
    rng = np.random.default_rng(seed)
    checks = sorted(float(t) for t in t_checks)
    violations = []
    for p_idx in range(pairs):
        lo = sample_domain_points(n, 1, rng)[0]
        # Raise x toward the free capacity and shrink y: moves up in <=_K
        # while keeping x + y <= 1.
        bump = rng.uniform(0.0, 1.0, size=n)
        keep = rng.uniform(0.0, 1.0, size=n)
        hi = StateD(lo.x + bump * (1.0 - lo.x - lo.y), lo.y * keep)
        cur_lo, cur_hi = lo, hi
        t_prev = 0.0
        for t in checks:
            span = t - t_prev
            traj_lo = integrate(sys, cur_lo, t_max=span, conv_tol=0.0,
                                rtol=rtol, atol=atol)
            traj_hi = integrate(sys, cur_hi, t_max=span, conv_tol=0.0,
                                rtol=rtol, atol=atol)
            cur_lo = traj_lo.final
            cur_hi = traj_hi.final
            t_prev = t
            if not southeast_le(cur_lo, cur_hi, slack=slack):
                gap_x = float(np.max(cur_lo.x - cur_hi.x))
                gap_y = float(np.max(cur_hi.y - cur_lo.y))
                violations.append((p_idx, t, max(gap_x, gap_y)))
    return MonotoneReport(passed=not violations, pairs=pairs,
                          violations=tuple(violations))


@dataclass(frozen=True)
class CoexistenceBracket:
    """Order interval [(lower), (upper)] containing the coexistence set.

    ``lower`` is reached from a perturbation off (0, y*); ``upper`` from
    (x*, 0). ``eigvec_u``/``eigvec_v`` is the unstable eigenvector pair at
    (0, y*): u strictly positive, v strictly negative.
    """

    lower: StateD
    upper: StateD
    eigvec_u: np.ndarray = dataclass_field(repr=False)
    eigvec_v: np.ndarray = dataclass_field(repr=False)


def _escape_vector(lam_u: float, u: np.ndarray, single_jac: np.ndarray,
                   coupling: np.ndarray) -> np.ndarray:
    """Solve (lam_u I - J) v = -coupling * u; v must come out negative."""
    mat = lam_u * np.eye(single_jac.shape[0]) - single_jac
    rhs = -(coupling * u)
    try:
        v = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise BracketError(
            "shifted Jacobian is singular (threshold eigenvalue coincides "
            "with a single-virus mode); reduce the classification eps or "
            "move parameters off the boundary") from exc
    resid = np.max(np.abs(mat @ v - rhs))
    scale = max(1.0, float(np.max(np.abs(rhs))))
    if resid > 1e-8 * scale:
        raise BracketError(
            "shifted Jacobian is nearly singular; reduce the classification "
            "eps or move parameters off the boundary")
    if not np.all(v < 0.0):
        raise BracketError("escape direction is not strictly negative")
    return v


def _monotone_trajectory(traj: Trajectory, increasing: bool,
                         slack: float) -> bool:
    dx = np.diff(traj.xs, axis=0)
    dy = np.diff(traj.ys, axis=0)
    if increasing:  # up in <=_K: x rises, y falls
        return bool(np.all(dx >= -slack) and np.all(dy <= slack))
    return bool(np.all(dx <= slack) and np.all(dy >= -slack))


def _field_norm(sys: BiVirusSystem, state: StateD) -> float:
    dx, dy = bivirus_field(sys, state)
    return float(max(np.max(np.abs(dx)), np.max(np.abs(dy))))


def _polish_fixed_point(sys: BiVirusSystem, state: StateD) -> StateD:
    """Damped Newton on the full field; falls back to the input on failure.

    The integrator bottoms out near rtol * |state|; a couple of Newton steps
    land on the fixed point to machine precision. Non-isolated equilibria
    (singular Jacobian) keep the integration endpoint.
    """
    n = state.n
    z = np.concatenate([state.x, state.y])
    best = state
    best_norm = _field_norm(sys, state)
    for _ in range(25):
        if best_norm <= 1e-14:
            break
        cur = StateD(z[:n], z[n:])
        dx, dy = bivirus_field(sys, cur)
        f = np.concatenate([dx, dy])
        try:
            step = np.linalg.solve(bivirus_jacobian(sys, cur), -f)
        except np.linalg.LinAlgError:
            break
        damping = 1.0
        improved = False
        while damping >= 1.0 / 64.0:
            trial = z + damping * step
            trial_state = StateD(np.clip(trial[:n], 0.0, 1.0),
                                 np.clip(trial[n:], 0.0, 1.0)).clamped()
            trial_norm = _field_norm(sys, trial_state)
            if trial_norm < best_norm:
                z = np.concatenate([trial_state.x, trial_state.y])
                best = trial_state
                best_norm = trial_norm
                improved = True
                break
            damping *= 0.5
        if not improved:
            break
    return best


def bracket_coexistence(sys: BiVirusSystem, verdict: TrichotomyVerdict,
                        r: float = 1e-4, conv_tol: float = 1e-9,
                        t_max: float | None = None) -> CoexistenceBracket:
    """Bracket the coexistence fixed points from both unstable equilibria.

    Perturbs (0, y*) along its unstable eigenvector (u, v) scaled by ``r``
    and integrates to the lower fixed point; symmetrically from (x*, 0) for
    the upper one. Both trajectories must be monotone in the southeast order
    and both endpoints must be fixed points bracketed strictly between
    (0, y*) and (x*, 0).
    """
    if verdict.outcome is not Outcome.COEXISTENCE:
        raise BracketError("bracket construction requires a Coexistence verdict")
    if not 0.0 < r <= 1e-3:
        raise BracketError("perturbation radius r must lie in (0, 1e-3]")
    if t_max is None:
        # escape from the saddle and contraction onto the coexistence set
        # both slow down like the decisive eigenvalues
        slowest = max(min(abs(verdict.lambda_u), abs(verdict.lambda_v)), 1e-4)
        t_max = max(1e4, 200.0 + 60.0 / slowest)

    x_star = np.asarray(verdict.x_star, dtype=np.float64)
    y_star = np.asarray(verdict.y_star, dtype=np.float64)
    jg0, jr0, jh0, js0 = _zero_jacobians(sys)

    # Lower endpoint: unstable direction at (0, y*).
    mat_u = (1.0 - y_star)[:, None] * jg0 - jr0
    spec_u = pf_eigen(mat_u)
    u = np.array(spec_u.vector)
    jac_y = single_virus_jacobian(sys.infection2, sys.recovery2, y_star)
    v = _escape_vector(spec_u.value, u, jac_y, sys.infection2.evaluate(y_star))
    start_lower = StateD(np.clip(r * u, 0.0, 1.0),
                         np.clip(y_star + r * v, 0.0, 1.0)).clamped()
    traj_lower = integrate(sys, start_lower, t_max=t_max, conv_tol=conv_tol,
                           rtol=1e-11, atol=1e-14)
    if traj_lower.terminal_reason is not TerminalReason.CONVERGED:
        raise BracketError("lower trajectory did not converge to a fixed point")
    if not _monotone_trajectory(traj_lower, increasing=True, slack=ORDER_SLACK):
        raise BracketError(
            "lower trajectory is not monotone in the southeast order; this "
            "signals a Boundary-case verdict or a bug")
    lower = _polish_fixed_point(sys, traj_lower.final)

    # Upper endpoint: symmetric construction at (x*, 0).
    mat_v = (1.0 - x_star)[:, None] * jh0 - js0
    spec_v = pf_eigen(mat_v)
    w = np.array(spec_v.vector)
    jac_x = single_virus_jacobian(sys.infection1, sys.recovery1, x_star)
    v2 = _escape_vector(spec_v.value, w, jac_x, sys.infection1.evaluate(x_star))
    start_upper = StateD(np.clip(x_star + r * v2, 0.0, 1.0),
                         np.clip(r * w, 0.0, 1.0)).clamped()
    traj_upper = integrate(sys, start_upper, t_max=t_max, conv_tol=conv_tol,
                           rtol=1e-11, atol=1e-14)
    if traj_upper.terminal_reason is not TerminalReason.CONVERGED:
        raise BracketError("upper trajectory did not converge to a fixed point")
    if not _monotone_trajectory(traj_upper, increasing=False, slack=ORDER_SLACK):
        raise BracketError(
            "upper trajectory is not monotone in the southeast order; this "
            "signals a Boundary-case verdict or a bug")
    upper = _polish_fixed_point(sys, traj_upper.final)

    for endpoint, name in ((lower, "lower"), (upper, "upper")):
        resid = _field_norm(sys, endpoint)
        if resid >= 1e-8:
            raise BracketError(f"{name} endpoint is not a fixed point "
                               f"(field residual {resid:.3e})")

    corner_lo = StateD(np.zeros(sys.n), y_star)
    corner_hi = StateD(x_star, np.zeros(sys.n))
    if not (southeast_ll(corner_lo, lower, slack=ORDER_SLACK)
            and southeast_le(lower, upper, slack=ORDER_SLACK)
            and southeast_ll(upper, corner_hi, slack=ORDER_SLACK)):
        raise BracketError("bracket ordering invariant failed")

    return CoexistenceBracket(lower=lower, upper=upper,
                              eigvec_u=u, eigvec_v=v)


@dataclass(frozen=True)
class AgreementReport:
    """Outcome of checking a verdict against long-run integration."""

    passed: bool
    outcome: Outcome
    details: tuple


def _long_run_horizon(verdict: TrichotomyVerdict, t_cap: float = 2e5) -> float:
    """Integration horizon scaled to the slowest decisive decay rate."""
    rates = [abs(v) for v in (verdict.lambda_u, verdict.lambda_v,
                              verdict.lambda_g0, verdict.lambda_h0)]
    slowest = max(min(rates), 1e-4)
    return float(min(t_cap, 200.0 + 25.0 / slowest))


def verify_against_simulation(sys: BiVirusSystem, verdict: TrichotomyVerdict,
                              starts: int = 5, seed: int = 99,
                              conv_tol: float = 1e-11) -> AgreementReport:
    """Check a non-Boundary verdict against integration from random starts.

    Contract: VirusFree endpoints have both averages below 1e-5; a winning
    virus matches avg(x*) within 1e-5 while the loser's average is below
    1e-5; coexistence endpoints keep both averages above 1e-3 and lie inside
    the bracket (southeast order, 1e-6 slack).
    """
    if verdict.outcome is Outcome.BOUNDARY:
        raise ValueError("agreement contract is defined for non-Boundary verdicts")
    rng = np.random.default_rng(seed)
    t_max = _long_run_horizon(verdict)
    bracket = None
    if verdict.outcome is Outcome.COEXISTENCE:
        bracket = bracket_coexistence(sys, verdict)

    details = []
    passed = True
    for idx, start in enumerate(sample_domain_points(sys.n, starts, rng,
                                                     interior=True)):
        traj = integrate(sys, start, t_max=t_max, conv_tol=conv_tol)
        avg_x, avg_y = traj.final.avg()
        if verdict.outcome is Outcome.VIRUS_FREE:
            ok = avg_x < 1e-5 and avg_y < 1e-5
        elif verdict.outcome is Outcome.VIRUS1_WINS:
            ok = avg_y < 1e-5 and abs(avg_x - verdict.x_star.mean()) < 1e-5
        elif verdict.outcome is Outcome.VIRUS2_WINS:
            ok = avg_x < 1e-5 and abs(avg_y - verdict.y_star.mean()) < 1e-5
        else:
            inside = (southeast_le(bracket.lower, traj.final, slack=1e-6)
                      and southeast_le(traj.final, bracket.upper, slack=1e-6))
            ok = avg_x > 1e-3 and avg_y > 1e-3 and inside
        passed = passed and ok
        details.append((idx, ok, avg_x, avg_y, traj.terminal_reason.value))
    return AgreementReport(passed=passed, outcome=verdict.outcome,
                           details=tuple(details))


def write_verdict_csv(verdict: TrichotomyVerdict, fp) -> None:
    """Row "outcome,lambda_g0,lambda_h0,lambda_u,lambda_v,avg_xstar,avg_ystar"."""
    fp.write("outcome,lambda_g0,lambda_h0,lambda_u,lambda_v,"
             "avg_xstar,avg_ystar\n")
    fp.write(",".join([
        verdict.outcome.label,
        repr(float(verdict.lambda_g0)), repr(float(verdict.lambda_h0)),
        repr(float(verdict.lambda_u)), repr(float(verdict.lambda_v)),
        repr(float(verdict.x_star.mean())), repr(float(verdict.y_star.mean())),
    ]) + "\n")


def write_bracket_csv(bracket: CoexistenceBracket,
                      verdict: TrichotomyVerdict, fp) -> None:
    """Per-node bracket endpoints alongside the single-virus fixed points."""
    fp.write("node,lower_x,lower_y,upper_x,upper_y,x_star,y_star,u,v\n")
    for i in range(bracket.lower.n):
        fp.write(",".join([str(i)] + [repr(float(val)) for val in (
            bracket.lower.x[i], bracket.lower.y[i],
            bracket.upper.x[i], bracket.upper.y[i],
            verdict.x_star[i], verdict.y_star[i],
            bracket.eigvec_u[i], bracket.eigvec_v[i])]) + "\n")
