"""Map the (tau1, tau2) plane into regions R1-R6 and extract threshold curves.

Only linear rates are swept: tau is a linear-rate concept, and with delta
normalized to 1 the outcome depends on (beta, delta) only through tau. Cells
are independent classifications evaluated in parallel; output ordering is
deterministic regardless of the worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .analysis import CLASSIFY_EPS, Outcome, TrichotomyVerdict, classify
from .dynamics import BiVirusSystem, single_virus_fixed_point
from .errors import SweepError
from .graph import Graph, pf_eigen
from .rates import LinearInfection, LinearRecovery

REGION_LABELS = ("R1", "R2", "R3", "R4", "R5", "R6", "Boundary")


def thread_count(cells: int) -> int:
    """Worker count for parallel cells, capped by BIVIRUS_THREADS."""
    cap = os.environ.get("BIVIRUS_THREADS", "").strip()
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(limit, cells))


def linear_system(graph_a: Graph, graph_b: Graph, tau1: float,
                  tau2: float) -> BiVirusSystem:
    """Linear-rate system with delta = 1, beta = tau for each virus."""
    return BiVirusSystem(
        graph_a=graph_a, graph_b=graph_b,
        infection1=LinearInfection(graph_a, tau1),
        recovery1=LinearRecovery(graph_a.n, 1.0),
        infection2=LinearInfection(graph_b, tau2),
        recovery2=LinearRecovery(graph_b.n, 1.0))


def region_label(verdict: TrichotomyVerdict, eps: float = CLASSIFY_EPS) -> str:
    """Map a verdict onto the R1-R6 partition of the parameter plane."""
    outcome = verdict.outcome
    if outcome is Outcome.BOUNDARY:
        return "Boundary"
    if outcome is Outcome.VIRUS_FREE:
        return "R1"
    if outcome is Outcome.VIRUS1_WINS:
        return "R2" if verdict.lambda_h0 <= -eps else "R5"
    if outcome is Outcome.VIRUS2_WINS:
        return "R3" if verdict.lambda_g0 <= -eps else "R4"
    return "R6"


@dataclass(frozen=True)
class RegionGrid:
    """Classified (tau1, tau2) grid with per-cell eigenvalues."""

    tau1_axis: np.ndarray = dataclass_field(repr=False)
    tau2_axis: np.ndarray = dataclass_field(repr=False)
    labels: np.ndarray = dataclass_field(repr=False)  # [i1, i2] -> str
    lambda_g0: np.ndarray = dataclass_field(repr=False)
    lambda_h0: np.ndarray = dataclass_field(repr=False)
    lambda_u: np.ndarray = dataclass_field(repr=False)
    lambda_v: np.ndarray = dataclass_field(repr=False)

    def cell(self, i1: int, i2: int) -> str:
        return str(self.labels[i1, i2])


def sweep_linear(graph_a: Graph, graph_b: Graph, tau1_range, tau2_range,
                 grid: tuple[int, int] = (12, 12),
                 eps: float = CLASSIFY_EPS) -> RegionGrid:
    """Classify every cell of the (tau1, tau2) grid into R1-R6/Boundary."""
    n1, n2 = grid
    if n1 < 2 or n2 < 2:
        raise SweepError("grid needs at least 2 points per axis")
    lo1, hi1 = map(float, tau1_range)
    lo2, hi2 = map(float, tau2_range)
    if lo1 <= 0 or lo2 <= 0 or hi1 <= lo1 or hi2 <= lo2:
        raise SweepError("tau ranges must be positive and increasing")
    tau1_axis = np.linspace(lo1, hi1, n1)
    tau2_axis = np.linspace(lo2, hi2, n2)

    cells = [(i1, i2) for i1 in range(n1) for i2 in range(n2)]

    def solve(cell):
        i1, i2 = cell
        sys = linear_system(graph_a, graph_b, tau1_axis[i1], tau2_axis[i2])
        # Linear rates satisfy the model assumptions identically; skip the
        # sampled re-check per cell.
        return classify(sys, eps=eps, verify_assumptions=False)

    with ThreadPoolExecutor(max_workers=thread_count(len(cells))) as pool:
        verdicts = list(pool.map(solve, cells))

    labels = np.empty((n1, n2), dtype=object)
    lam_g0 = np.empty((n1, n2))
    lam_h0 = np.empty((n1, n2))
    lam_u = np.empty((n1, n2))
    lam_v = np.empty((n1, n2))
    for (i1, i2), verdict in zip(cells, verdicts):
        labels[i1, i2] = region_label(verdict, eps=eps)
        lam_g0[i1, i2] = verdict.lambda_g0
        lam_h0[i1, i2] = verdict.lambda_h0
        lam_u[i1, i2] = verdict.lambda_u
        lam_v[i1, i2] = verdict.lambda_v
    return RegionGrid(tau1_axis=tau1_axis, tau2_axis=tau2_axis, labels=labels,
                      lambda_g0=lam_g0, lambda_h0=lam_h0,
                      lambda_u=lam_u, lambda_v=lam_v)


def default_tau_range(graph: Graph) -> tuple[float, float]:
    """[0.5/lambda, 4/lambda]: spans both sides of the solo threshold."""
    lam = pf_eigen(graph.adjacency).value
    return 0.5 / lam, 4.0 / lam


def _scaled_spectral_radius(graph_self: Graph, graph_other: Graph,
                            tau_other: float) -> float:
    """lambda(diag(1 - z*) A_self) where z* is the other virus's solo profile."""
    if tau_other <= 0:
        raise SweepError("tau must be positive")
    infection = LinearInfection(graph_other, tau_other)
    recovery = LinearRecovery(graph_other.n, 1.0)
    z_star = single_virus_fixed_point(infection, recovery).x
    scaled = (1.0 - z_star)[:, None] * graph_self.adjacency
    return pf_eigen(scaled).value


def threshold_curves(graph_a: Graph, graph_b: Graph, tau2_axis,
                     tol: float = 1e-8):
    """Per-tau2 threshold pair (tau1_blue, tau1_red).

    The blue curve is tau1 = 1 / lambda(diag(1 - y*(tau2)) A) directly; the
    red curve inverts tau2 * lambda(diag(1 - x*(tau1)) B) = 1 for tau1 by
    bisection. Entries are NaN below tau2 = 1/lambda(B) where the relation
    has no solution.
    """
    lam_a = pf_eigen(graph_a.adjacency).value
    lam_b = pf_eigen(graph_b.adjacency).value
    rows = []
    for tau2 in np.asarray(tau2_axis, dtype=np.float64):
        if tau2 * lam_b <= 1.0 + 1e-12:
            blue = 1.0 / lam_a
        else:
            blue = 1.0 / _scaled_spectral_radius(graph_a, graph_b, tau2)

        def red_gap(tau1, tau2=tau2):
            return tau2 * _scaled_spectral_radius(graph_b, graph_a, tau1) - 1.0

        if tau2 * lam_b < 1.0 - 1e-12:
            red = float("nan")
        elif abs(tau2 * lam_b - 1.0) <= 1e-12:
            red = 1.0 / lam_a
        else:
            lo = 1.0 / lam_a
            hi = 2.0 / lam_a
            doublings = 0
            while red_gap(hi) > 0.0:
                hi *= 2.0
                doublings += 1
                if doublings > 60:
                    raise SweepError(
                        f"red-curve bisection bracket failure at tau2={tau2}: "
                        f"gap still positive on [{lo}, {hi}]")
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if red_gap(mid) > 0.0:
                    lo = mid
                else:
                    hi = mid
            red = 0.5 * (lo + hi)
        rows.append((float(tau2), float(blue), float(red)))
    return rows


def write_region_csv(grid: RegionGrid, fp) -> None:
    """Rows "tau1,tau2,region,lambda_g0,lambda_h0,lambda_u,lambda_v"."""
    fp.write("tau1,tau2,region,lambda_g0,lambda_h0,lambda_u,lambda_v\n")
    for i1, tau1 in enumerate(grid.tau1_axis):
        for i2, tau2 in enumerate(grid.tau2_axis):
            fp.write(",".join([
                repr(float(tau1)), repr(float(tau2)), grid.cell(i1, i2),
                repr(float(grid.lambda_g0[i1, i2])),
                repr(float(grid.lambda_h0[i1, i2])),
                repr(float(grid.lambda_u[i1, i2])),
                repr(float(grid.lambda_v[i1, i2])),
            ]) + "\n")


def write_curves_csv(rows, fp) -> None:
    """Rows "tau2,tau1_blue,tau1_red"."""
    fp.write("tau2,tau1_blue,tau1_red\n")
    for tau2, blue, red in rows:
        fp.write(f"{float(tau2)!r},{float(blue)!r},{float(red)!r}\n")
