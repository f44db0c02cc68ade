"""Render phase portraits, region maps, and threshold curves from CSVs.

Input files follow the simulator's documented schemas; nothing else is read.
Rendering is a pure function of the CSV bytes: timestamps are disabled, so
re-rendering identical inputs produces identical PNGs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.patches as mpatches  # noqa: E402
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

PNG_METADATA = {"Software": "bivirus-plots"}

REGION_COLORS = {
    "R1": "#e8e8e8",
    "R2": "#9ecae1",
    "R3": "#fdae6b",
    "R4": "#fb6a4a",
    "R5": "#3182bd",
    "R6": "#74c476",
    "Boundary": "#636363",
}

ARROW_FRACTIONS = (0.10, 0.40, 0.70)


class SchemaError(Exception):
    """A CSV does not match its documented schema."""


@dataclass
class PlotSpec:
    kind: str  # phase | region | curves
    out_path: str
    trajectory_paths: list = field(default_factory=list)
    regions_path: str | None = None
    curves_path: str | None = None
    title: str | None = None
    xlim: tuple | None = None
    ylim: tuple | None = None


def _read_csv(path, required_prefix):
    """Rows of a CSV whose header must start with the given columns."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = list(reader)
    missing = [col for col in required_prefix
               if col not in header[:len(required_prefix)]]
    if missing:
        raise SchemaError(
            f"{path}: header {header[:len(required_prefix)]} does not match "
            f"expected columns {list(required_prefix)} (missing {missing})")
    return header, rows


def _read_trajectory(path):
    header, rows = _read_csv(path, ("t",))
    n_cols = len(header)
    if n_cols < 3 or (n_cols - 1) % 2 != 0:
        raise SchemaError(f"{path}: expected t plus paired x_i/y_i columns, "
                          f"got {n_cols} columns")
    n = (n_cols - 1) // 2
    expected = ["t"] + [f"x_{i}" for i in range(n)] + [f"y_{i}" for i in range(n)]
    if header != expected:
        raise SchemaError(f"{path}: header mismatch, expected {expected[:4]}"
                          f"... got {header[:4]}...")
    data = np.array([[float(v) for v in row] for row in rows])
    if data.size == 0:
        raise SchemaError(f"{path}: no data rows")
    avg_x = data[:, 1:n + 1].mean(axis=1)
    avg_y = data[:, n + 1:].mean(axis=1)
    return data[:, 0], avg_x, avg_y


def _arrow_positions(avg_x, avg_y):
    """Points at fixed arc-length fractions plus the local direction."""
    dx = np.diff(avg_x)
    dy = np.diff(avg_y)
    seg = np.hypot(dx, dy)
    total = seg.sum()
    if total <= 0:
        return []
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    out = []
    for frac in ARROW_FRACTIONS:
        target = frac * total
        idx = int(np.searchsorted(cum, target, side="right") - 1)
        idx = min(idx, len(seg) - 1)
        if seg[idx] == 0:
            continue
        t = (target - cum[idx]) / seg[idx]
        px = avg_x[idx] + t * dx[idx]
        py = avg_y[idx] + t * dy[idx]
        norm = seg[idx]
        out.append((px, py, dx[idx] / norm, dy[idx] / norm))
    return out


def render_phase(spec: PlotSpec) -> None:
    fig, ax = plt.subplots(figsize=(6, 6))
    for path in spec.trajectory_paths:
        _, avg_x, avg_y = _read_trajectory(path)
        ax.plot(avg_x, avg_y, lw=1.2)
        ax.plot(avg_x[0], avg_y[0], marker=".", color="0.4", ms=6)
        ax.plot(avg_x[-1], avg_y[-1], marker="o", color="black", ms=6)
        for px, py, ux, uy in _arrow_positions(avg_x, avg_y):
            ax.annotate("", xy=(px + 0.012 * ux, py + 0.012 * uy),
                        xytext=(px, py),
                        arrowprops=dict(arrowstyle="-|>", color="red", lw=1.4))
    # feasibility boundary avgX + avgY = 1 of the state space
    ax.plot([0.0, 1.0], [1.0, 0.0], ls=":", color="black", lw=1.0)
    ax.set_xlabel("avg X")
    ax.set_ylabel("avg Y")
    ax.set_xlim(spec.xlim if spec.xlim else (0.0, 1.0))
    ax.set_ylim(spec.ylim if spec.ylim else (0.0, 1.0))
    if spec.title:
        ax.set_title(spec.title)
    _save(fig, spec.out_path)


def _read_regions(path):
    _, rows = _read_csv(path, ("tau1", "tau2", "region"))
    tau1 = sorted({float(r[0]) for r in rows})
    tau2 = sorted({float(r[1]) for r in rows})
    index1 = {v: i for i, v in enumerate(tau1)}
    index2 = {v: i for i, v in enumerate(tau2)}
    labels = np.full((len(tau1), len(tau2)), "", dtype=object)
    for row in rows:
        label = row[2]
        if label not in REGION_COLORS:
            raise SchemaError(f"{path}: unknown region label {label!r}")
        labels[index1[float(row[0])], index2[float(row[1])]] = label
    if np.any(labels == ""):
        raise SchemaError(f"{path}: region grid has holes")
    return np.array(tau1), np.array(tau2), labels


def _cell_edges(axis):
    axis = np.asarray(axis)
    if len(axis) == 1:
        half = max(abs(axis[0]) * 0.05, 1e-3)
        return np.array([axis[0] - half, axis[0] + half])
    mids = 0.5 * (axis[1:] + axis[:-1])
    first = axis[0] - (mids[0] - axis[0])
    last = axis[-1] + (axis[-1] - mids[-1])
    return np.concatenate([[first], mids, [last]])


def render_region(spec: PlotSpec) -> None:
    tau1, tau2, labels = _read_regions(spec.regions_path)
    order = list(REGION_COLORS)
    codes = np.vectorize(order.index)(labels)
    cmap = matplotlib.colors.ListedColormap([REGION_COLORS[k] for k in order])
    fig, ax = plt.subplots(figsize=(6.5, 5.5))
    ax.pcolormesh(_cell_edges(tau1), _cell_edges(tau2), codes.T,
                  cmap=cmap, vmin=-0.5, vmax=len(order) - 0.5)
    if spec.curves_path:
        rows = _read_curves(spec.curves_path)
        _plot_curves(ax, rows)
    present = [k for k in order if np.any(labels == k)]
    ax.legend(handles=[mpatches.Patch(color=REGION_COLORS[k], label=k)
                       for k in present],
              loc="upper left", fontsize=8, framealpha=0.9)
    ax.set_xlabel("tau1")
    ax.set_ylabel("tau2")
    if spec.title:
        ax.set_title(spec.title)
    _save(fig, spec.out_path)


def _read_curves(path):
    _, rows = _read_csv(path, ("tau2", "tau1_blue", "tau1_red"))
    return [(float(r[0]), float(r[1]), float(r[2])) for r in rows]


def _plot_curves(ax, rows):
    tau2 = np.array([r[0] for r in rows])
    blue = np.array([r[1] for r in rows])
    red = np.array([r[2] for r in rows])
    ax.plot(blue, tau2, color="blue", lw=1.6, label="virus 1 threshold")
    ax.plot(red, tau2, color="red", lw=1.6, label="virus 2 threshold")


def render_curves(spec: PlotSpec) -> None:
    rows = _read_curves(spec.curves_path)
    fig, ax = plt.subplots(figsize=(6, 5))
    _plot_curves(ax, rows)
    ax.set_xlabel("tau1")
    ax.set_ylabel("tau2")
    ax.legend(fontsize=9)
    if spec.title:
        ax.set_title(spec.title)
    _save(fig, spec.out_path)


def _save(fig, out_path: str) -> None:
    fig.savefig(out_path, dpi=120, format="png", metadata=dict(PNG_METADATA))
    plt.close(fig)


def render(spec: PlotSpec) -> None:
    """Dispatch on the plot kind; writes the PNG at spec.out_path."""
    if spec.kind == "phase":
        if not spec.trajectory_paths:
            raise SchemaError("phase plot needs at least one trajectory CSV")
        render_phase(spec)
    elif spec.kind == "region":
        if not spec.regions_path:
            raise SchemaError("region plot needs a regions CSV")
        render_region(spec)
    elif spec.kind == "curves":
        if not spec.curves_path:
            raise SchemaError("curves plot needs a curves CSV")
        render_curves(spec)
    else:
        raise SchemaError(f"unknown plot kind {spec.kind!r}")
