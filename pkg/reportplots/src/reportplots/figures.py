"""Figure construction and rendering.

All figures are static matplotlib compositions on the Agg backend with a
fixed size and dpi, so rerendering fixed inputs is byte-stable for a
fixed matplotlib version. render() is the single entry point; it
dispatches on FigureSpec.kind and writes the image.
"""
from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .readers import SchemaError, read_convergence, read_field, read_path, read_report, read_trajectory

KINDS = ("period_evolution", "trajectory_overlay", "convergence", "report_summary")

_DPI = 150
_POINT_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: input artifact paths, figure kind, output image path."""

    inputs: tuple
    kind: str
    output: str

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        if not self.inputs:
            raise SchemaError("figure needs at least one input artifact")


def period_evolution_figure(trajectory_csv):
    """One full period of the points, one panel per instant.

    Five panels in 2D (punctual, four extended instants, punctual again),
    three in 1D. Uses the first complete period in the file.
    """
    times, points, mean = read_trajectory(trajectory_csv)
    n_points = points.shape[1]
    period = {2: 2, 4: 4}.get(n_points)
    if period is None:
        raise SchemaError(f"trajectory has {n_points} points; expected 2 or 4")
    if times.size < period + 1:
        raise SchemaError("trajectory shorter than one period")

    r = points.real
    rbar = mean.real
    dim = r.shape[2]
    panels = period + 1
    fig, axes = plt.subplots(1, panels, figsize=(3.0 * panels, 3.2), dpi=_DPI)
    span = np.abs(r[: period + 1] - rbar[: period + 1, None, :]).max() * 1.6 + 1e-12
    for n, ax in enumerate(axes):
        punctual = n % period == 0
        cx = rbar[n]
        for j in range(n_points):
            x = r[n, j, 0]
            y = r[n, j, 1] if dim == 2 else 0.0
            ax.plot([x], [y], "o", color=_POINT_COLORS[j % 4], ms=7,
                    label=f"point {j}" if n == 0 else None)
        my = cx[1] if dim == 2 else 0.0
        ax.plot([cx[0]], [my], "k+", ms=10, mew=1.5)
        ax.set_xlim(cx[0] - span, cx[0] + span)
        ax.set_ylim(my - span, my + span)
        ax.set_aspect("equal")
        ax.set_title(f"t = {n}ε — " + ("punctual" if punctual else "in extension"),
                     fontsize=9)
        ax.tick_params(labelsize=7)
    axes[0].legend(fontsize=7, loc="lower left")
    fig.suptitle(f"{n_points}-point cycle over one period", fontsize=11)
    fig.tight_layout()
    return fig


def trajectory_overlay_figure(field_csv, path_csv):
    """Bohm path drawn over the density of the wave field."""
    field = read_field(field_csv)
    t, pos, _ = read_path(path_csv)
    if field["dim"] == 2:
        if pos.shape[1] != 2:
            raise SchemaError("2D field needs a 2D path to overlay")
        fig, ax = plt.subplots(figsize=(6.0, 5.0), dpi=_DPI)
        im = ax.pcolormesh(field["x"], field["y"], field["rho"].T,
                           shading="auto", cmap="viridis")
        fig.colorbar(im, ax=ax, label="ρ")
        ax.plot(pos[:, 0], pos[:, 1], "w-", lw=1.5, label="path")
        ax.plot(pos[0, 0], pos[0, 1], "wo", ms=5)
        ax.plot(pos[-1, 0], pos[-1, 1], "w^", ms=6)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.legend(fontsize=8, loc="upper right")
    else:
        if pos.shape[1] != 1:
            raise SchemaError("1D field needs a 1D path to overlay")
        fig, (ax_rho, ax_path) = plt.subplots(
            2, 1, figsize=(6.0, 5.0), dpi=_DPI, sharex=True,
            gridspec_kw={"height_ratios": [1, 2]})
        ax_rho.fill_between(field["x"], field["rho"], color="#1f77b4", alpha=0.35)
        ax_rho.plot(field["x"], field["rho"], color="#1f77b4", lw=1.0)
        ax_rho.set_ylabel("ρ")
        ax_path.plot(pos[:, 0], t, "k-", lw=1.5)
        ax_path.plot(pos[0, 0], t[0], "ko", ms=5)
        ax_path.plot(pos[-1, 0], t[-1], "k^", ms=6)
        ax_path.set_xlabel("x")
        ax_path.set_ylabel("t")
        lo = min(pos.min(), np.quantile(field["x"], 0.25))
        hi = max(pos.max(), np.quantile(field["x"], 0.75))
        pad = 0.1 * (hi - lo)
        ax_path.set_xlim(lo - pad, hi + pad)
    fig.suptitle("trajectory over density", fontsize=11)
    fig.tight_layout()
    return fig


def convergence_figure(convergence_csv):
    """Log-log error against step size with the fitted slope annotated."""
    eps, err = read_convergence(convergence_csv)
    if (err <= 0).any() or (eps <= 0).any():
        raise SchemaError("convergence data must be positive for a log-log fit")
    slope, intercept = np.polyfit(np.log(eps), np.log(err), 1)
    fig, ax = plt.subplots(figsize=(5.0, 4.0), dpi=_DPI)
    ax.loglog(eps, err, "o", color="#1f77b4", ms=6)
    fit = np.exp(intercept) * eps ** slope
    ax.loglog(eps, fit, "-", color="#d62728", lw=1.2)
    ax.annotate(f"slope {slope:.2f}", xy=(eps[len(eps) // 2], fit[len(eps) // 2]),
                xytext=(8, -12), textcoords="offset points", fontsize=10,
                color="#d62728")
    ax.set_xlabel("ε")
    ax.set_ylabel("error")
    ax.set_title("convergence", fontsize=11)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    return fig


def report_summary_figure(report_json):
    """Pass/fail table of a run report."""
    report = read_report(report_json)
    checks = report["checks"]
    if not checks:
        raise SchemaError(f"report has no checks: {report_json}")
    fig, ax = plt.subplots(figsize=(8.0, 0.6 + 0.4 * len(checks)), dpi=_DPI)
    ax.axis("off")
    title = f"{report['scenario']}: " + ("all checks passed" if report["passed"]
                                         else "FAILURES present")
    ax.set_title(title, fontsize=11, loc="left")
    for i, check in enumerate(checks):
        y = 1.0 - (i + 1) / (len(checks) + 1)
        ok = bool(check["passed"])
        ax.text(0.0, y, "PASS" if ok else "FAIL", fontsize=10, family="monospace",
                color="#2ca02c" if ok else "#d62728", transform=ax.transAxes)
        ax.text(0.09, y, check["id"], fontsize=10, family="monospace",
                transform=ax.transAxes)
        ax.text(0.45, y,
                f"measured {check['measured']:.6g}   expected {check['expected']:.6g}"
                f"   tol {check['tolerance']:.2g}",
                fontsize=9, family="monospace", transform=ax.transAxes)
    return fig


def render(spec: FigureSpec) -> str:
    """Draw the figure and write it to spec.output. Returns the path."""
    if spec.kind == "period_evolution":
        fig = period_evolution_figure(*_expect(spec, 1))
    elif spec.kind == "trajectory_overlay":
        fig = trajectory_overlay_figure(*_expect(spec, 2))
    elif spec.kind == "convergence":
        fig = convergence_figure(*_expect(spec, 1))
    else:
        fig = report_summary_figure(*_expect(spec, 1))
    try:
        fig.savefig(spec.output, dpi=_DPI, metadata={"Software": "reportplots"})
    finally:
        plt.close(fig)
    return spec.output


def _expect(spec: FigureSpec, count: int) -> tuple:
    if len(spec.inputs) != count:
        raise SchemaError(f"{spec.kind} takes exactly {count} input(s), "
                          f"got {len(spec.inputs)}")
    return tuple(spec.inputs)
