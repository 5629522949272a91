"""Co-occurrence network estimation and taxonomy tree adjacency.

The co-occurrence graph connects taxa whose rank correlation is significant
after Benjamini-Hochberg adjustment at level ``alpha``; the tree adjacency
connects taxa that share a parent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import UndefinedCorrelationError, ValidationError
from .ingest import BinaryNetwork, TaxonomyMap
from .transform import TransformedMatrix


@dataclass(eq=False)
class PairCorrelation:
    taxon_a: str
    taxon_b: str
    rho: float | None
    p_value: float | None
    adjusted_p: float | None
    edge: bool

    @property
    def defined(self) -> bool:
        return self.rho is not None


@dataclass(eq=False)
class CorrelationResult:
    """One entry per unordered taxon pair, in index order (a before b)."""

    pairs: list[PairCorrelation]

    @property
    def n_edges(self) -> int:
        return sum(p.edge for p in self.pairs)

    @property
    def n_tested(self) -> int:
        return sum(p.defined for p in self.pairs)


def spearman_rho(a, b) -> float:
    """Spearman correlation: Pearson correlation of mid-ranks."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("inputs must be 1-d vectors of equal length")
    if a.size < 3:
        raise ValidationError("need at least 3 observations")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise UndefinedCorrelationError("correlation undefined for a constant vector")
    ra = stats.rankdata(a)
    rb = stats.rankdata(b)
    rho = float(np.corrcoef(ra, rb)[0, 1])
    return float(np.clip(rho, -1.0, 1.0))


def spearman_pvalue(rho: float, n: int) -> float:
    """Two-sided p-value for rho=0 via the t approximation with n-2 df."""
    if n < 3:
        raise ValidationError("need at least 3 observations")
    if abs(rho) > 1 + 1e-12:
        raise ValidationError("|rho| must be <= 1")
    if abs(rho) >= 1.0:
        return 0.0
    t = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
    return float(min(1.0, 2.0 * stats.t.sf(abs(t), df=n - 2)))


def bh_adjust(p_values) -> np.ndarray:
    """Benjamini-Hochberg step-up adjustment, preserving input order."""
    p = np.asarray(p_values, dtype=np.float64)
    if p.size == 0:
        return p.copy()
    if (p < 0).any() or (p > 1).any():
        raise ValidationError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    ranked = p[order] * m / np.arange(1, m + 1)
    adjusted = np.minimum.accumulate(ranked[::-1])[::-1]
    adjusted = np.minimum(adjusted, 1.0)
    out = np.empty_like(adjusted)
    out[order] = adjusted
    return out


def build_cooccurrence(
    v: TransformedMatrix, alpha: float = 0.05
) -> tuple[BinaryNetwork, CorrelationResult]:
    """Estimate the binary co-occurrence network from transformed abundances.

    An edge is placed where the BH-adjusted p-value of the pair's Spearman
    correlation is strictly below ``alpha``. Pairs involving a constant
    column are undefined: they are excluded from the BH family and never
    become edges.
    """
    values = v.values
    n, p = values.shape
    if p < 2:
        raise ValidationError("need at least 2 taxa")
    if n < 3:
        raise ValidationError("need at least 3 samples")
    if not 0.0 <= alpha < 1.0:
        raise ValidationError("alpha must lie in [0, 1)")

    defined_col = values.max(axis=0) > values.min(axis=0)
    ranks = stats.rankdata(values, axis=0)
    # constant columns have zero rank variance; their correlations come out NaN
    # and are masked below
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.corrcoef(ranks, rowvar=False)
    rho = np.clip(rho, -1.0, 1.0)

    iu, ju = np.triu_indices(p, k=1)
    pair_defined = defined_col[iu] & defined_col[ju]
    pair_rho = rho[iu, ju]

    with np.errstate(divide="ignore", invalid="ignore"):
        t = pair_rho * np.sqrt((n - 2) / np.maximum(1.0 - pair_rho**2, 0.0))
        pvals = np.where(
            np.abs(pair_rho) >= 1.0,
            0.0,
            np.minimum(1.0, 2.0 * stats.t.sf(np.abs(t), df=n - 2)),
        )

    adjusted = np.full(pvals.shape, np.nan)
    if pair_defined.any():
        adjusted[pair_defined] = bh_adjust(pvals[pair_defined])
    edge = pair_defined & (adjusted < alpha)

    adj = np.zeros((p, p), np.int8)
    adj[iu[edge], ju[edge]] = 1
    adj[ju[edge], iu[edge]] = 1
    net = BinaryNetwork(labels=v.taxa, adjacency=adj)

    pairs = []
    for idx in range(iu.size):
        a, b = iu[idx], ju[idx]
        if pair_defined[idx]:
            pairs.append(
                PairCorrelation(
                    taxon_a=v.taxa[a],
                    taxon_b=v.taxa[b],
                    rho=float(pair_rho[idx]),
                    p_value=float(pvals[idx]),
                    adjusted_p=float(adjusted[idx]),
                    edge=bool(edge[idx]),
                )
            )
        else:
            pairs.append(
                PairCorrelation(
                    taxon_a=v.taxa[a],
                    taxon_b=v.taxa[b],
                    rho=None,
                    p_value=None,
                    adjusted_p=None,
                    edge=False,
                )
            )
    return net, CorrelationResult(pairs=pairs)


def build_tree_adjacency(tax: TaxonomyMap, taxa) -> BinaryNetwork:
    """Connect taxa that share a parent; zero diagonal."""
    taxa = tuple(taxa)
    parents = tax.parents(taxa)
    _, codes = np.unique(parents, return_inverse=True)
    adj = (codes[:, None] == codes[None, :]).astype(np.int8)
    np.fill_diagonal(adj, 0)
    return BinaryNetwork(labels=taxa, adjacency=adj)


def write_correlations(result: CorrelationResult, path) -> None:
    """Write ``taxon_a,taxon_b,rho,p,adjusted_p,edge``; undefined cells empty."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["taxon_a", "taxon_b", "rho", "p", "adjusted_p", "edge"])
        for pair in result.pairs:
            if pair.defined:
                writer.writerow(
                    [
                        pair.taxon_a,
                        pair.taxon_b,
                        format(pair.rho, ".17g"),
                        format(pair.p_value, ".17g"),
                        format(pair.adjusted_p, ".17g"),
                        int(pair.edge),
                    ]
                )
            else:
                writer.writerow([pair.taxon_a, pair.taxon_b, "", "", "", 0])
