"""Posterior summaries, model scoring, and selection of the community count."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .ingest import BinaryNetwork
from .sbm import (
    ChainTrace,
    CommunityAssignment,
    EdgeProbabilityMatrix,
    SamplerConfig,
    derive_seed,
    gibbs_run,
)


@dataclass(eq=False)
class FitSummary:
    """Point estimates and score for one fitted chain."""

    omega_hat: EdgeProbabilityMatrix
    z_map: CommunityAssignment
    map_log_joint: float
    bic: float
    k: int
    nu: int
    labels: tuple[str, ...]
    config: SamplerConfig

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "nu": self.nu,
            "bic": self.bic,
            "map_log_joint": self.map_log_joint,
            "labels": list(self.labels),
            "z_map": self.z_map.labels.tolist(),
            "omega_hat": self.omega_hat.values.tolist(),
            "config": {
                "k": self.config.k,
                "f": self.config.f,
                "iterations": self.config.iterations,
                "seed": self.config.seed,
                "a_omega": self.config.a_omega,
                "b_omega": self.config.b_omega,
                "e": list(self.config.e) if self.config.e is not None else None,
            },
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


@dataclass(eq=False)
class KSelection:
    """BIC curve over a grid of community counts and the chosen value."""

    grid: tuple[int, ...]
    bic_curve: list[tuple[int, float]]
    chosen_k: int
    method: str
    fit_summaries: tuple[FitSummary, ...] = ()

    def __post_init__(self):
        if self.chosen_k not in self.grid:
            raise ValidationError("chosen_k must come from the grid")

    def chosen_fit(self) -> FitSummary:
        for summary in self.fit_summaries:
            if summary.k == self.chosen_k:
                return summary
        raise ValidationError("no fit summary stored for the chosen k")

    def to_dict(self) -> dict:
        return {
            "grid": list(self.grid),
            "bic_curve": [[k, b] for k, b in self.bic_curve],
            "chosen_k": self.chosen_k,
            "method": self.method,
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def write_curve_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "bic"])
            for k, b in self.bic_curve:
                writer.writerow([k, format(b, ".17g")])


def posterior_mean_omega(trace: ChainTrace) -> EdgeProbabilityMatrix:
    """Elementwise mean of the retained edge-probability samples."""
    if trace.n_retained == 0:
        raise ValueError("trace has no retained samples")
    return EdgeProbabilityMatrix(values=trace.omega_samples.mean(axis=0))


def map_labels(trace: ChainTrace) -> tuple[CommunityAssignment, float]:
    """The retained assignment with maximal log joint (earliest on ties)."""
    if trace.n_retained == 0:
        raise ValueError("trace has no retained samples")
    idx = int(np.argmax(trace.log_joint))
    assignment = CommunityAssignment(labels=trace.z_samples[idx].copy(), k=trace.config.k)
    return assignment, float(trace.log_joint[idx])


def bic(map_log_joint: float, k: int, p: int) -> float:
    """``nu * log(p) - 2 * map_log_joint`` with ``nu = 1 + k(k+1)/2``."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    if p < 1:
        raise ValidationError("p must be >= 1")
    nu = 1 + k * (k + 1) // 2
    return float(nu * np.log(p) - 2.0 * map_log_joint)


def summarize(trace: ChainTrace) -> FitSummary:
    """Build point estimates and the BIC score from one trace."""
    z_map, best = map_labels(trace)
    k = trace.config.k
    return FitSummary(
        omega_hat=posterior_mean_omega(trace),
        z_map=z_map,
        map_log_joint=best,
        bic=bic(best, k, z_map.p),
        k=k,
        nu=1 + k * (k + 1) // 2,
        labels=trace.labels,
        config=trace.config,
    )


def _fit_one(args) -> FitSummary:
    """Best-of-``restarts`` fit for a single ``k`` (highest MAP log joint)."""
    g, q, base_cfg, k, restarts = args
    best = None
    for r in range(restarts):
        cfg = replace(base_cfg, k=k, seed=derive_seed(base_cfg.seed, k, r), e=None)
        summary = summarize(gibbs_run(g, q, cfg))
        if best is None or summary.map_log_joint > best.map_log_joint:
            best = summary
    return best


def elbow_index(grid, bics) -> int:
    """Index of the point furthest below the chord joining the curve's ends.

    This is where a declining BIC curve visibly flattens. Curves that never
    dip below the chord (or grids shorter than 3) fall back to the minimum.
    """
    bics = np.asarray(bics, dtype=np.float64)
    if bics.size < 3:
        return int(np.argmin(bics))
    x = np.asarray(grid, dtype=np.float64)
    slope = (bics[-1] - bics[0]) / (x[-1] - x[0])
    gaps = bics[0] + slope * (x - x[0]) - bics
    if gaps.max() <= 0:
        return int(np.argmin(bics))
    return int(np.argmax(gaps))


def select_k(
    g: BinaryNetwork,
    q: BinaryNetwork | None,
    base_cfg: SamplerConfig,
    grid,
    method: str = "min_bic",
    workers: int = 1,
    restarts: int = 1,
) -> KSelection:
    """Fit chains per candidate ``k`` and choose by BIC.

    ``restarts`` independent chains run per grid point (streams derived from
    the base seed via :func:`taxsbm.sbm.derive_seed` keyed by ``(k, chain)``)
    and the best MAP log joint defines that point's BIC, so the result is
    deterministic given the base seed, grid, and restart count. ``method``
    is ``min_bic`` or ``elbow`` (furthest point below the curve's end-to-end
    chord).
    """
    grid = tuple(int(k) for k in grid)
    if not grid:
        raise ValidationError("grid must be non-empty")
    if list(grid) != sorted(set(grid)):
        raise ValidationError("grid must be ascending without duplicates")
    if grid[-1] > g.p:
        raise ValidationError(f"grid value {grid[-1]} exceeds the {g.p}-node network")
    if method not in ("min_bic", "elbow"):
        raise ValidationError("method must be 'min_bic' or 'elbow'")
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    tasks = [(g, q, base_cfg, k, restarts) for k in grid]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_fit_one, tasks))
    else:
        summaries = [_fit_one(task) for task in tasks]
    curve = [(k, s.bic) for k, s in zip(grid, summaries)]
    bics = [b for _, b in curve]
    if method == "elbow":
        chosen = grid[elbow_index(grid, bics)]
    else:
        chosen = grid[int(np.argmin(bics))]
    return KSelection(
        grid=grid,
        bic_curve=curve,
        chosen_k=chosen,
        method=method,
        fit_summaries=tuple(summaries),
    )
