"""Relative abundances and the modified centered-log-ratio transform.

The transform maps each non-zero composition entry to the log of its ratio
against the geometric mean of the row's non-zero entries, leaving zeros
untouched. In ``robust`` mode the non-zero log-ratios of each row are
centered at zero; in ``shifted`` mode each row is lifted by
``1 + |min log-ratio|`` so every transformed non-zero value is at least 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .ingest import AbundanceMatrix

MODES = ("robust", "shifted")


@dataclass(eq=False)
class CompositionMatrix:
    """Row-normalized relative abundances; each row sums to 1."""

    samples: tuple[str, ...]
    taxa: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        self.samples = tuple(self.samples)
        self.taxa = tuple(self.taxa)
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.samples), len(self.taxa)):
            raise ValidationError(
                f"values shape {values.shape} does not match labels"
            )
        if (values < 0).any():
            raise ValidationError("compositions must be nonnegative")
        if not np.allclose(values.sum(axis=1), 1.0, rtol=0, atol=1e-12):
            raise ValidationError("composition rows must sum to 1")
        self.values = values


@dataclass(eq=False)
class TransformedMatrix:
    """Log-ratio transformed values with the zero pattern of the source.

    ``shifts`` holds the per-row shift applied in ``shifted`` mode
    (all zeros in ``robust`` mode).
    """

    samples: tuple[str, ...]
    taxa: tuple[str, ...]
    values: np.ndarray
    shift_mode: str
    shifts: np.ndarray

    def __post_init__(self):
        if self.shift_mode not in MODES:
            raise ValidationError(f"shift_mode must be one of {MODES}")
        self.samples = tuple(self.samples)
        self.taxa = tuple(self.taxa)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.shifts = np.asarray(self.shifts, dtype=np.float64)


def relative_abundance(counts: AbundanceMatrix) -> CompositionMatrix:
    """Normalize each sample's counts to proportions."""
    totals = counts.counts.sum(axis=1)
    values = counts.counts / totals[:, None]
    return CompositionMatrix(samples=counts.samples, taxa=counts.taxa, values=values)


def geometric_mean_nonzero(row) -> float:
    """Geometric mean of a vector's non-zero entries, computed in log space."""
    row = np.asarray(row, dtype=np.float64)
    if (row < 0).any():
        raise ValidationError("composition entries must be nonnegative")
    nonzero = row[row > 0]
    if nonzero.size == 0:
        raise ValueError("geometric mean undefined for an all-zero row")
    return float(np.exp(np.mean(np.log(nonzero))))


def mclr(comp: CompositionMatrix, mode: str = "shifted") -> TransformedMatrix:
    """Apply the modified centered-log-ratio transform row by row.

    Zeros stay exactly zero. Note that in ``robust`` mode a non-zero entry
    equal to its row's geometric mean also maps to 0; ``shifted`` mode keeps
    the zero pattern exact because non-zero outputs are >= 1.
    """
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}")
    x = comp.values
    nonzero = x > 0
    with np.errstate(divide="ignore"):
        logs = np.where(nonzero, np.log(np.where(nonzero, x, 1.0)), 0.0)
    counts = nonzero.sum(axis=1)
    if (counts == 0).any():
        raise ValidationError("rows without non-zero entries cannot be transformed")
    row_mean = logs.sum(axis=1) / counts
    ratios = np.where(nonzero, logs - row_mean[:, None], 0.0)
    if mode == "robust":
        values = ratios
        shifts = np.zeros(len(comp.samples))
    else:
        row_min = np.where(nonzero, ratios, np.inf).min(axis=1)
        # (ratio - min) + 1 pins the per-row minimum at exactly 1.0
        values = np.where(nonzero, ratios - row_min[:, None] + 1.0, 0.0)
        shifts = 1.0 + np.abs(row_min)
    return TransformedMatrix(
        samples=comp.samples,
        taxa=comp.taxa,
        values=values,
        shift_mode=mode,
        shifts=shifts,
    )
