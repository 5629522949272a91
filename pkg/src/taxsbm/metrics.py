"""Evaluation metrics: adjusted Rand index, nodal strength, Shannon diversity."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .ingest import BinaryNetwork


def _pair_counts(z1: np.ndarray, z2: np.ndarray) -> tuple[int, int, int, int]:
    """Counts of unordered pairs (same/same, same/diff, diff/same, diff/diff)."""
    _, c1 = np.unique(z1, return_inverse=True)
    _, c2 = np.unique(z2, return_inverse=True)
    k1 = c1.max() + 1
    k2 = c2.max() + 1
    contingency = np.bincount(c1 * k2 + c2, minlength=k1 * k2).reshape(k1, k2)

    def pairs(x):
        return int((x.astype(np.int64) * (x.astype(np.int64) - 1) // 2).sum())

    a = pairs(contingency)
    same1 = pairs(contingency.sum(axis=1))
    same2 = pairs(contingency.sum(axis=0))
    total = z1.size * (z1.size - 1) // 2
    b = same1 - a
    c = same2 - a
    d = total - a - b - c
    return a, b, c, d


def ari(z1, z2) -> float:
    """Adjusted Rand index between two label vectors.

    Invariant to relabeling of either input; 1 for identical partitions.
    Degenerate comparisons where the index is 0/0 (e.g. both partitions
    trivial) return 1 by convention.
    """
    z1 = np.asarray(z1)
    z2 = np.asarray(z2)
    if z1.shape != z2.shape or z1.ndim != 1:
        raise ValueError("label vectors must be 1-d and of equal length")
    if z1.size < 2:
        raise ValueError("need at least 2 items")
    a, b, c, d = _pair_counts(z1, z2)
    total = a + b + c + d
    cross = (a + b) * (a + c) + (c + d) * (b + d)
    denominator = total * total - cross
    if denominator == 0:
        return 1.0
    return (total * (a + d) - cross) / denominator


def nodal_strength(g: BinaryNetwork) -> np.ndarray:
    """Per-node degree (edge-weight sum of a binary network)."""
    return g.adjacency.sum(axis=1).astype(np.int64)


def genus_community_strength(g: BinaryNetwork, z, tau) -> list[tuple[int, object, int]]:
    """Total nodal strength per (community, genus) pair with at least one taxon.

    Rows are sorted by community then genus.
    """
    z = np.asarray(z)
    tau = np.asarray(tau)
    if not (len(z) == len(tau) == g.p):
        raise ValueError("z, tau, and network size must agree")
    degrees = nodal_strength(g)
    totals: dict[tuple[int, object], int] = {}
    for j in range(g.p):
        key = (int(z[j]), tau[j].item() if hasattr(tau[j], "item") else tau[j])
        totals[key] = totals.get(key, 0) + int(degrees[j])
    return [(k, genus, totals[(k, genus)]) for k, genus in sorted(totals, key=lambda t: (t[0], str(t[1])))]


def shannon(z, tau, k: int) -> float:
    """Shannon diversity of genus proportions within community ``k`` (natural log)."""
    z = np.asarray(z)
    tau = np.asarray(tau)
    members = tau[z == k]
    if members.size == 0:
        raise ValueError(f"community {k} is empty")
    _, counts = np.unique(members, return_counts=True)
    w = counts / counts.sum()
    return float(-(w * np.log(w)).sum())


def write_ari_table(rows, path) -> None:
    """Write ``scenario,strength,k,replicate,f,ari`` rows."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "strength", "k", "replicate", "f", "ari"])
        for row in rows:
            writer.writerow(
                [
                    row["scenario"],
                    row["strength"],
                    row["k"],
                    row["replicate"],
                    format(float(row["f"]), "g"),
                    format(float(row["ari"]), ".17g"),
                ]
            )


def write_nodal_strength(g: BinaryNetwork, path) -> None:
    degrees = nodal_strength(g)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["taxon", "strength"])
        for name, d in zip(g.labels, degrees):
            writer.writerow([name, int(d)])


def write_genus_strength(rows, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["community", "genus", "strength"])
        for community, genus, strength in rows:
            writer.writerow([community, genus, strength])


def write_shannon(rows, path) -> None:
    """Write ``f,community,shannon`` rows (one per community per model)."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["f", "community", "shannon"])
        for row in rows:
            writer.writerow(
                [format(float(row["f"]), "g"), row["community"], format(float(row["shannon"]), ".17g")]
            )
