"""Reduce trajectories to summary statistics and plot-ready tables.

All functions here are pure; summary assembly is a deterministic fold over
immutable inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cnf import Formula, clause_ratio
from .anneal import Trajectory
from .ising import Hamiltonian
from .satcore import BackboneReport

__all__ = [
    "InstanceSummary",
    "CorrelationMatrix",
    "BetaFit",
    "BinnedCurves",
    "DegenerateSeriesError",
    "tail_mean",
    "pearson",
    "correlation_matrix",
    "aggregate",
    "binned_curves",
    "fit_beta",
    "fit_beta_trajectory",
    "build_summary",
    "summary_csv",
    "read_summary_csv",
    "SUMMARY_FILENAME",
    "format_aggregate_table",
    "format_correlation_table",
]

SUMMARY_FILENAME = "paper_quickpub_summary.csv"
_FLOAT_FMT = ".17g"


class DegenerateSeriesError(ValueError):
    """A statistic is undefined because a series has zero variance."""


def tail_mean(series: Sequence[float], fraction: float = 0.2) -> float:
    """Mean of the final ceil(fraction * len) elements (at least one)."""
    values = list(series)
    if not values:
        raise ValueError("tail mean of an empty series")
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    k = max(1, math.ceil(fraction * len(values)))
    tail = values[-k:]
    return math.fsum(tail) / len(tail)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation with population normalization on both sides."""
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise ValueError("need at least two points")
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    dx = [v - mean_x for v in xs]
    dy = [v - mean_y for v in ys]
    var_x = math.fsum(d * d for d in dx) / n
    var_y = math.fsum(d * d for d in dy) / n
    if var_x == 0 or var_y == 0:
        raise DegenerateSeriesError("correlation undefined for a constant series")
    cov = math.fsum(a * b for a, b in zip(dx, dy)) / n
    rho = cov / math.sqrt(var_x * var_y)
    return max(-1.0, min(1.0, rho))


@dataclass(frozen=True)
class InstanceSummary:
    """One pipeline row: final observables of a single (instance, seed) run."""

    instance: str
    seed: int
    sat: bool
    alpha_ratio: float
    final_energy_h: float
    final_energy_logic: float
    final_abs_magnetization: float
    backbone_capped: int | None
    backbone_exact: int | None
    backbone_exact_flag: bool
    mean_slack: float | None
    beta: float | None
    beta_r2: float | None
    t0: float
    alpha: float
    steps: int


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple[str, str, str]
    values: tuple[tuple[float, ...], ...]
    degenerate: tuple[str, ...]


def correlation_matrix(
    summaries: Sequence[InstanceSummary],
    energy_column: str = "final_energy_logic",
    backbone_column: str = "backbone_capped",
) -> CorrelationMatrix:
    """Pairwise Pearson matrix over (final energy, final |M|, backbone size).

    Rows missing a backbone (UNSAT instances) are dropped. Degenerate
    (constant) columns yield NaN entries and are listed in ``degenerate``.
    """
    if len(summaries) < 3:
        raise ValueError("need at least three summaries")
    rows = [
        (
            float(getattr(s, energy_column)),
            float(s.final_abs_magnetization),
            getattr(s, backbone_column),
        )
        for s in summaries
    ]
    rows = [(e, m, float(b)) for e, m, b in rows if b is not None]
    if len(rows) < 3:
        raise ValueError("fewer than three complete rows")
    labels = ("E_final", "|M_final|", "Backbone")
    columns = list(zip(*rows))
    degenerate: list[str] = []
    matrix = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    for i in range(3):
        for j in range(i + 1, 3):
            try:
                rho = pearson(columns[i], columns[j])
            except DegenerateSeriesError:
                rho = math.nan
                for k in (i, j):
                    if _is_constant(columns[k]) and labels[k] not in degenerate:
                        degenerate.append(labels[k])
            matrix[i][j] = matrix[j][i] = rho
    return CorrelationMatrix(labels, tuple(tuple(row) for row in matrix), tuple(degenerate))


def _is_constant(values: Sequence[float]) -> bool:
    return len(set(values)) <= 1


_AGGREGATE_COLUMNS = (
    "alpha_ratio",
    "final_energy_h",
    "final_energy_logic",
    "final_abs_magnetization",
    "backbone_capped",
    "backbone_exact",
    "mean_slack",
    "beta",
    "beta_r2",
)


def aggregate(summaries: Sequence[InstanceSummary]) -> dict[str, tuple[float, float]]:
    """Mean and sample (n-1) standard deviation per numeric column.

    Missing values (None) are dropped per column; columns with fewer than
    two remaining values are omitted from the result.
    """
    if len(summaries) < 2:
        raise ValueError("need at least two summaries to aggregate")
    out: dict[str, tuple[float, float]] = {}
    for column in _AGGREGATE_COLUMNS:
        values = [float(getattr(s, column)) for s in summaries if getattr(s, column) is not None]
        if len(values) < 2:
            continue
        n = len(values)
        mean = math.fsum(values) / n
        var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
        out[column] = (mean, math.sqrt(var))
    return out


@dataclass(frozen=True)
class BinnedCurves:
    """Temperature-binned means of energy and |M| pooled over trajectories."""

    bin_t: np.ndarray
    mean_energy: np.ndarray
    mean_abs_magnetization: np.ndarray
    counts: np.ndarray

    def to_csv(self) -> str:
        lines = ["bin_T,mean_E,mean_absM,count"]
        for b in range(len(self.bin_t)):
            count = int(self.counts[b])
            if count:
                e_text = format(float(self.mean_energy[b]), _FLOAT_FMT)
                m_text = format(float(self.mean_abs_magnetization[b]), _FLOAT_FMT)
            else:
                e_text = m_text = ""
            lines.append(
                f"{format(float(self.bin_t[b]), _FLOAT_FMT)},{e_text},{m_text},{count}"
            )
        return "\n".join(lines) + "\n"


def binned_curves(trajectories: Sequence[Trajectory], bins: int = 60) -> BinnedCurves:
    """Pool trajectory points into geometric temperature bins.

    The binned energy is the unsatisfied-clause count (the logical energy
    column); bin centers are geometric midpoints of the bin edges.
    """
    if not trajectories:
        raise ValueError("need at least one trajectory")
    if bins < 1:
        raise ValueError("need at least one bin")
    temps = np.concatenate([t.temperatures for t in trajectories])
    energies = np.concatenate([t.energy_logic.astype(np.float64) for t in trajectories])
    abs_m = np.concatenate([np.abs(t.magnetization) for t in trajectories])
    t_min = float(temps.min())
    t_max = float(temps.max())
    if t_min == t_max:
        return BinnedCurves(
            bin_t=np.array([t_min]),
            mean_energy=np.array([energies.mean()]),
            mean_abs_magnetization=np.array([abs_m.mean()]),
            counts=np.array([len(temps)]),
        )
    edges = np.geomspace(t_min, t_max, bins + 1)
    centers = np.sqrt(edges[:-1] * edges[1:])
    which = np.clip(np.searchsorted(edges, temps, side="right") - 1, 0, bins - 1)
    counts = np.bincount(which, minlength=bins)
    sum_e = np.bincount(which, weights=energies, minlength=bins)
    sum_m = np.bincount(which, weights=abs_m, minlength=bins)
    with np.errstate(invalid="ignore"):
        mean_e = np.where(counts > 0, sum_e / np.maximum(counts, 1), np.nan)
        mean_m = np.where(counts > 0, sum_m / np.maximum(counts, 1), np.nan)
    return BinnedCurves(centers, mean_e, mean_m, counts)


@dataclass(frozen=True)
class BetaFit:
    """Power-law fit |M| ~ T^(-beta) over a temperature window."""

    beta: float
    window: tuple[float, float]
    r_squared: float
    n_points: int


def fit_beta(
    temperatures: Sequence[float],
    abs_magnetization: Sequence[float],
    window: tuple[float, float] = (0.05, 1.0),
) -> BetaFit:
    """Least-squares slope of log|M| vs log T; beta is the negated slope.

    Points outside the window or with |M| = 0 are excluded; fewer than three
    usable points is an error. The fit is invariant under rescaling |M|
    (the amplitude only shifts the intercept).
    """
    lo, hi = window
    if not 0 < lo < hi:
        raise ValueError("fit window must satisfy 0 < lo < hi")
    ts = np.asarray(temperatures, dtype=np.float64)
    ms = np.asarray(abs_magnetization, dtype=np.float64)
    if ts.shape != ms.shape:
        raise ValueError("temperature and magnetization series differ in length")
    usable = (ts >= lo) & (ts <= hi) & (ms > 0) & np.isfinite(ms)
    if int(usable.sum()) < 3:
        raise ValueError("fewer than three usable points in the fit window")
    x = np.log(ts[usable])
    y = np.log(ms[usable])
    x_mean = x.mean()
    y_mean = y.mean()
    var_x = float(np.sum((x - x_mean) ** 2))
    if var_x == 0:
        raise ValueError("all usable points share one temperature")
    slope = float(np.sum((x - x_mean) * (y - y_mean))) / var_x
    residuals = y - (y_mean + slope * (x - x_mean))
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - y_mean) ** 2))
    r_squared = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return BetaFit(-slope, (lo, hi), r_squared, int(usable.sum()))


def fit_beta_trajectory(
    traj: Trajectory, window: tuple[float, float] = (0.05, 1.0)
) -> BetaFit:
    return fit_beta(traj.temperatures, np.abs(traj.magnetization), window)


def build_summary(
    f: Formula,
    H: Hamiltonian,
    traj: Trajectory,
    *,
    sat: bool,
    backbone_capped: BackboneReport | None = None,
    backbone_exact: BackboneReport | None = None,
    mean_slack: float | None = None,
    beta_fit: BetaFit | None = None,
    tail_fraction: float = 0.2,
) -> InstanceSummary:
    """Assemble one summary row from the per-instance pipeline outputs.

    Tail statistics average the last 20% of trajectory points; the |M|
    statistic averages per-step |M_t| (absolute value first) so symmetric
    ordered states do not cancel.
    """
    labels = {name for name in (f.source_name, H.source, traj.instance) if name}
    if len(labels) > 1:
        raise ValueError(f"instance labels disagree: {sorted(labels)}")
    return InstanceSummary(
        instance=f.source_name,
        seed=traj.seed,
        sat=sat,
        alpha_ratio=clause_ratio(f),
        final_energy_h=tail_mean(traj.energy_h, tail_fraction),
        final_energy_logic=tail_mean(traj.energy_logic, tail_fraction),
        final_abs_magnetization=tail_mean(np.abs(traj.magnetization), tail_fraction),
        backbone_capped=backbone_capped.size if backbone_capped else None,
        backbone_exact=backbone_exact.size if backbone_exact else None,
        backbone_exact_flag=bool(backbone_exact and backbone_exact.exact),
        mean_slack=mean_slack,
        beta=beta_fit.beta if beta_fit else None,
        beta_r2=beta_fit.r_squared if beta_fit else None,
        t0=traj.schedule.t0,
        alpha=traj.schedule.alpha,
        steps=traj.schedule.steps,
    )


_SUMMARY_COLUMNS = (
    "instance",
    "seed",
    "sat",
    "alpha_ratio",
    "final_energy_h",
    "final_energy_logic",
    "final_abs_M",
    "backbone_capped",
    "backbone_exact",
    "backbone_exact_flag",
    "mean_slack",
    "beta",
    "beta_r2",
    "t0",
    "alpha",
    "steps",
)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, _FLOAT_FMT)
    return str(value)


def summary_csv(summaries: Sequence[InstanceSummary]) -> str:
    lines = [",".join(_SUMMARY_COLUMNS)]
    for s in summaries:
        lines.append(
            ",".join(
                (
                    s.instance,
                    str(s.seed),
                    _cell(s.sat),
                    _cell(s.alpha_ratio),
                    _cell(s.final_energy_h),
                    _cell(s.final_energy_logic),
                    _cell(s.final_abs_magnetization),
                    _cell(s.backbone_capped),
                    _cell(s.backbone_exact),
                    _cell(s.backbone_exact_flag),
                    _cell(s.mean_slack),
                    _cell(s.beta),
                    _cell(s.beta_r2),
                    _cell(s.t0),
                    _cell(s.alpha),
                    _cell(s.steps),
                )
            )
        )
    return "\n".join(lines) + "\n"


def read_summary_csv(text: str) -> list[InstanceSummary]:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != ",".join(_SUMMARY_COLUMNS):
        raise ValueError("unrecognized summary CSV header")
    out: list[InstanceSummary] = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(_SUMMARY_COLUMNS):
            raise ValueError(f"malformed summary row {line!r}")
        row = dict(zip(_SUMMARY_COLUMNS, parts))
        out.append(
            InstanceSummary(
                instance=row["instance"],
                seed=int(row["seed"]),
                sat=row["sat"] == "true",
                alpha_ratio=float(row["alpha_ratio"]),
                final_energy_h=float(row["final_energy_h"]),
                final_energy_logic=float(row["final_energy_logic"]),
                final_abs_magnetization=float(row["final_abs_M"]),
                backbone_capped=int(row["backbone_capped"]) if row["backbone_capped"] else None,
                backbone_exact=int(row["backbone_exact"]) if row["backbone_exact"] else None,
                backbone_exact_flag=row["backbone_exact_flag"] == "true",
                mean_slack=float(row["mean_slack"]) if row["mean_slack"] else None,
                beta=float(row["beta"]) if row["beta"] else None,
                beta_r2=float(row["beta_r2"]) if row["beta_r2"] else None,
                t0=float(row["t0"]),
                alpha=float(row["alpha"]),
                steps=int(row["steps"]),
            )
        )
    return out


_TABLE_ROWS = (
    ("final_energy", "Final Energy <E_f>", "Residual clause tension"),
    ("final_abs_magnetization", "Final Magnetization <|M_f|>", "Near-complete ordering"),
    ("backbone", "Backbone Size <b>", "Moderate rigidity"),
)


def format_aggregate_table(
    agg: dict[str, tuple[float, float]],
    energy_column: str = "final_energy_logic",
    backbone_column: str = "backbone_capped",
) -> str:
    """Aggregate statistics in the three-row observable/mean/sd layout."""
    column_map = {
        "final_energy": energy_column,
        "final_abs_magnetization": "final_abs_magnetization",
        "backbone": backbone_column,
    }
    lines = [f"{'Observable':<30} {'Mean':>10} {'Std. Dev.':>10}  Interpretation"]
    lines.append("-" * len(lines[0]))
    for key, label, interpretation in _TABLE_ROWS:
        column = column_map[key]
        if column in agg:
            mean, sd = agg[column]
            lines.append(f"{label:<30} {mean:>10.3f} {sd:>10.3f}  {interpretation}")
        else:
            lines.append(f"{label:<30} {'n/a':>10} {'n/a':>10}  {interpretation}")
    return "\n".join(lines) + "\n"


def format_correlation_table(cm: CorrelationMatrix) -> str:
    width = max(len(label) for label in cm.labels) + 2
    header = " " * width + "".join(f"{label:>{width}}" for label in cm.labels)
    lines = [header]
    for i, label in enumerate(cm.labels):
        cells = "".join(
            f"{'n/a':>{width}}" if math.isnan(cm.values[i][j]) else f"{cm.values[i][j]:>+{width}.3f}"
            for j in range(3)
        )
        lines.append(f"{label:<{width}}" + cells)
    if cm.degenerate:
        lines.append(f"degenerate columns: {', '.join(cm.degenerate)}")
    return "\n".join(lines) + "\n"
