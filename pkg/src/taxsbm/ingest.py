"""Reading and validating count matrices, taxonomy maps, and networks.

File formats (all CSV with a header row):

* abundance:  first column ``sample_id``, one column per taxon, integer cells
* taxonomy:   ``taxon,parent``, one row per taxon
* edge list:  ``source,target,weight``, undirected, each pair listed once
* adjacency:  ``label,<labels...>`` header, one row per label, 0/1 cells
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CoverageError, ParseError, ValidationError

log = logging.getLogger(__name__)


@dataclass(eq=False)
class AbundanceMatrix:
    """Count matrix with n samples as rows and p taxa as columns."""

    samples: tuple[str, ...]
    taxa: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        self.samples = tuple(self.samples)
        self.taxa = tuple(self.taxa)
        counts = np.asarray(self.counts)
        if counts.dtype.kind == "f":
            if not np.all(counts == np.floor(counts)):
                raise ValidationError("counts must be integers")
        counts = counts.astype(np.int64)
        if counts.shape != (len(self.samples), len(self.taxa)):
            raise ValidationError(
                f"counts shape {counts.shape} does not match "
                f"{len(self.samples)} samples x {len(self.taxa)} taxa"
            )
        if (counts < 0).any():
            raise ValidationError("counts must be nonnegative")
        if len(set(self.taxa)) != len(self.taxa):
            raise ValidationError("duplicate taxon identifiers")
        if len(set(self.samples)) != len(self.samples):
            raise ValidationError("duplicate sample identifiers")
        empty = np.flatnonzero(counts.sum(axis=1) == 0)
        if empty.size:
            names = ", ".join(self.samples[i] for i in empty[:5])
            raise ValidationError(
                f"samples with no positive counts cannot be normalized: {names}"
            )
        self.counts = counts

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def n_taxa(self) -> int:
        return len(self.taxa)

    def filter_rare_taxa(self, min_nonzero: int) -> "AbundanceMatrix":
        """Keep only taxa with at least ``min_nonzero`` non-zero counts.

        Column order is preserved. Idempotent for a fixed threshold.
        """
        if min_nonzero < 0:
            raise ValidationError("min_nonzero must be >= 0")
        nonzero = (self.counts > 0).sum(axis=0)
        keep = np.flatnonzero(nonzero >= min_nonzero)
        if keep.size == 0:
            raise ValidationError(
                f"no taxa have >= {min_nonzero} non-zero counts; nothing to analyze"
            )
        if keep.size == self.n_taxa:
            return self
        return AbundanceMatrix(
            samples=self.samples,
            taxa=tuple(self.taxa[i] for i in keep),
            counts=self.counts[:, keep],
        )


@dataclass(eq=False)
class TaxonomyMap:
    """Maps each taxon identifier to its parent label (e.g. genus)."""

    entries: dict[str, str]

    def parent(self, taxon: str) -> str:
        try:
            return self.entries[taxon]
        except KeyError:
            raise CoverageError([taxon]) from None

    def parents(self, taxa) -> list[str]:
        missing = [t for t in taxa if t not in self.entries]
        if missing:
            raise CoverageError(missing)
        return [self.entries[t] for t in taxa]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(eq=False)
class BinaryNetwork:
    """Symmetric 0/1 adjacency matrix with zero diagonal and node labels."""

    labels: tuple[str, ...]
    adjacency: np.ndarray

    def __post_init__(self):
        self.labels = tuple(self.labels)
        adj = np.asarray(self.adjacency)
        p = len(self.labels)
        if adj.shape != (p, p):
            raise ValidationError(f"adjacency shape {adj.shape} does not match {p} labels")
        if not np.isin(adj, (0, 1)).all():
            raise ValidationError("adjacency entries must be 0 or 1")
        adj = adj.astype(np.int8)
        if (adj != adj.T).any():
            raise ValidationError("adjacency must be symmetric")
        if np.diagonal(adj).any():
            raise ValidationError("adjacency diagonal must be zero")
        if len(set(self.labels)) != p:
            raise ValidationError("duplicate node labels")
        self.adjacency = adj

    @property
    def p(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum()) // 2

    @classmethod
    def empty(cls, labels) -> "BinaryNetwork":
        labels = tuple(labels)
        return cls(labels=labels, adjacency=np.zeros((len(labels), len(labels)), np.int8))


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        rows = [row for row in reader if row]
    return header, rows


def load_abundance(path, min_nonzero: int = 0) -> AbundanceMatrix:
    """Load an abundance CSV, then drop taxa with < ``min_nonzero`` non-zero counts."""
    header, rows = _read_rows(path)
    if not header or header[0] != "sample_id":
        raise ParseError(f"{path}: first column must be 'sample_id', got {header[:1]}")
    taxa = header[1:]
    if not taxa:
        raise ParseError(f"{path}: no taxon columns")
    samples = []
    counts = np.zeros((len(rows), len(taxa)), dtype=np.int64)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} cells, got {len(row)}", row=i + 1
            )
        samples.append(row[0])
        for j, cell in enumerate(row[1:]):
            try:
                value = int(cell)
            except ValueError:
                raise ValidationError(
                    f"row {i + 1}: count for taxon '{taxa[j]}' is not an integer: '{cell}'"
                ) from None
            if value < 0:
                raise ValidationError(
                    f"row {i + 1}: negative count for taxon '{taxa[j]}': {value}"
                )
            counts[i, j] = value
    matrix = AbundanceMatrix(samples=tuple(samples), taxa=tuple(taxa), counts=counts)
    return matrix.filter_rare_taxa(min_nonzero)


def load_taxonomy(path, taxa) -> TaxonomyMap:
    """Load a ``taxon,parent`` CSV covering (at least) the given taxa.

    Taxa present in the file but not in ``taxa`` are ignored; taxa missing
    from the file raise :class:`CoverageError`.
    """
    header, rows = _read_rows(path)
    if [h.strip() for h in header[:2]] != ["taxon", "parent"]:
        raise ParseError(f"{path}: header must be 'taxon,parent', got {header}")
    entries: dict[str, str] = {}
    for i, row in enumerate(rows):
        if len(row) < 2:
            raise ParseError("expected 2 cells", row=i + 1)
        taxon, parent = row[0], row[1]
        if taxon in entries:
            raise ValidationError(f"row {i + 1}: duplicate taxon '{taxon}'")
        entries[taxon] = parent
    required = list(taxa)
    missing = [t for t in required if t not in entries]
    if missing:
        raise CoverageError(missing)
    return TaxonomyMap(entries={t: entries[t] for t in required})


def load_network(
    path, threshold: float = 0.0, labels=None
) -> tuple[BinaryNetwork, BinaryNetwork]:
    """Load a weighted edge list and binarize it two ways.

    Returns ``(b, q)`` where ``b`` has an edge wherever any listed weight is
    positive and ``q`` keeps only edges with weight strictly greater than
    ``threshold``. Self-loop rows are dropped (logged as a warning count).
    When ``labels`` is given, it fixes the node universe and unknown nodes
    are an error; otherwise nodes appear in first-appearance order.
    """
    if threshold < 0:
        raise ValidationError("threshold must be >= 0")
    header, rows = _read_rows(path)
    if [h.strip() for h in header[:3]] != ["source", "target", "weight"]:
        raise ParseError(f"{path}: header must be 'source,target,weight', got {header}")
    known = None if labels is None else set(labels)
    order: list[str] = [] if labels is None else list(labels)
    seen = set(order)
    edges: list[tuple[str, str, float]] = []
    self_loops = 0
    for i, row in enumerate(rows):
        if len(row) != 3:
            raise ParseError("expected 3 cells", row=i + 1)
        a, b, w = row[0], row[1], row[2]
        try:
            weight = float(w)
        except ValueError:
            raise ValidationError(f"row {i + 1}: weight is not a number: '{w}'") from None
        if a == b:
            self_loops += 1
            continue
        for node in (a, b):
            if known is not None:
                if node not in known:
                    raise ValidationError(f"row {i + 1}: unknown node '{node}'")
            elif node not in seen:
                seen.add(node)
                order.append(node)
        edges.append((a, b, weight))
    if self_loops:
        log.warning("dropped %d self-loop rows from %s", self_loops, path)
    index = {name: i for i, name in enumerate(order)}
    p = len(order)
    adj_b = np.zeros((p, p), np.int8)
    adj_q = np.zeros((p, p), np.int8)
    for a, b, weight in edges:
        i, j = index[a], index[b]
        if weight > 0:
            adj_b[i, j] = adj_b[j, i] = 1
        if weight > threshold:
            adj_q[i, j] = adj_q[j, i] = 1
    labels_out = tuple(order)
    return (
        BinaryNetwork(labels=labels_out, adjacency=adj_b),
        BinaryNetwork(labels=labels_out, adjacency=adj_q),
    )


def write_adjacency(net: BinaryNetwork, path) -> None:
    """Write a dense 0/1 adjacency CSV (``label`` column plus one per node)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", *net.labels])
        for i, name in enumerate(net.labels):
            writer.writerow([name, *net.adjacency[i].tolist()])


def read_adjacency(path) -> BinaryNetwork:
    """Read a dense adjacency CSV written by :func:`write_adjacency`."""
    header, rows = _read_rows(path)
    if not header or header[0] != "label":
        raise ParseError(f"{path}: first column must be 'label', got {header[:1]}")
    labels = header[1:]
    if len(rows) != len(labels):
        raise ParseError(f"{path}: expected {len(labels)} rows, got {len(rows)}")
    adj = np.zeros((len(labels), len(labels)), np.int8)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, got {len(row)}", row=i + 1)
        if row[0] != labels[i]:
            raise ParseError(f"row label '{row[0]}' does not match header order", row=i + 1)
        for j, cell in enumerate(row[1:]):
            if cell not in ("0", "1"):
                raise ValidationError(f"row {i + 1}: adjacency cell must be 0 or 1, got '{cell}'")
            adj[i, j] = int(cell)
    return BinaryNetwork(labels=tuple(labels), adjacency=adj)


def write_sample_matrix(samples, taxa, values: np.ndarray, path) -> None:
    """Write an n x p real matrix in the abundance layout (``sample_id`` first)."""
    values = np.asarray(values)
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", *taxa])
        for name, row in zip(samples, values):
            writer.writerow([name, *(format(v, ".17g") for v in row)])
