"""Bayesian stochastic block model with a tree-coupled label prior.

Model state and the two-step Gibbs sampler. Given a binary graph ``g`` and a
tree adjacency ``q``, the sampler alternates

1. block edge probabilities: ``omega_kk' | z ~ Beta(M + a, N - M + b)`` where
   ``M``/``N`` count observed/possible edges per block pair, and
2. a full sweep of community labels, each drawn from its full conditional;
   the label prior rewards agreement with same-parent neighbors at coupling
   strength ``f`` on top of per-community log base-rates ``e_k``.

Reproducibility contract
------------------------
All randomness flows from one ``numpy.random.Generator`` (PCG64, i.e.
``numpy.random.default_rng(seed)``). Per iteration the draw order is fixed:
the upper-triangle beta draws (row-major, diagonal included) followed by one
uniform per taxon for the label sweep; initialization draws one uniform label
per taxon before the loop. Independent streams for multi-run workflows come
from :func:`derive_seed`, which feeds ``numpy.random.SeedSequence`` with a
spawn key. Same seed, same inputs: bit-identical traces.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit
from scipy.special import betaln

from .errors import ValidationError
from .ingest import BinaryNetwork

_LOG_FLOOR = -745.0  # log of the smallest positive double; guards degenerate omega


def derive_seed(base_seed: int, *key: int) -> int:
    """Derive an independent child seed from a base seed and an integer key."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(eq=False)
class CommunityAssignment:
    """Labels ``z`` with ``z_j`` in ``1..k``."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValidationError("labels must be a vector")
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if labels.size and (labels.min() < 1 or labels.max() > self.k):
            raise ValidationError(f"labels must lie in 1..{self.k}")
        self.labels = labels

    @property
    def p(self) -> int:
        return self.labels.size

    def sizes(self) -> np.ndarray:
        """Community sizes ``n_k`` (length ``k``)."""
        return np.bincount(self.labels - 1, minlength=self.k)


@dataclass(eq=False)
class EdgeProbabilityMatrix:
    """Symmetric ``k x k`` matrix of within/between edge probabilities."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValidationError("edge probabilities must be a square matrix")
        if not np.allclose(values, values.T, rtol=0, atol=0):
            raise ValidationError("edge probabilities must be symmetric")
        if (values < 0).any() or (values > 1).any():
            raise ValidationError("edge probabilities must lie in [0, 1]")
        self.values = values

    @property
    def k(self) -> int:
        return self.values.shape[0]


@dataclass(eq=False)
class BlockCounts:
    """Observed (``M``) and possible (``N``) edge counts per block pair."""

    observed: np.ndarray
    possible: np.ndarray

    def __post_init__(self):
        self.observed = np.asarray(self.observed, dtype=np.int64)
        self.possible = np.asarray(self.possible, dtype=np.int64)
        if self.observed.shape != self.possible.shape:
            raise ValidationError("observed and possible shapes must match")
        if (self.observed < 0).any() or (self.observed > self.possible).any():
            raise ValidationError("need 0 <= observed <= possible")


@dataclass(frozen=True)
class SamplerConfig:
    """Fixed hyperparameters and run length for one chain.

    ``e`` defaults to ``log(1/k)`` for every community (a flat label prior);
    ``f = 0`` disables the tree coupling entirely, reducing the model to the
    standard block model.
    """

    k: int
    f: float = 0.0
    iterations: int = 1000
    seed: int = 0
    a_omega: float = 1.0
    b_omega: float = 1.0
    e: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.f < 0:
            raise ValidationError("f must be >= 0")
        if self.iterations < 2 or self.iterations % 2 != 0:
            raise ValidationError("iterations must be even and >= 2")
        if self.a_omega <= 0 or self.b_omega <= 0:
            raise ValidationError("beta hyperparameters must be > 0")
        if self.e is not None and len(self.e) != self.k:
            raise ValidationError(f"e must have length k={self.k}")

    @property
    def burn_in(self) -> int:
        return self.iterations // 2

    def log_base_rates(self) -> np.ndarray:
        if self.e is None:
            return np.full(self.k, -np.log(self.k))
        return np.asarray(self.e, dtype=np.float64)


@dataclass(eq=False)
class ChainTrace:
    """Post-burn-in samples of ``(z, omega)`` and the unnormalized log joint."""

    z_samples: np.ndarray
    omega_samples: np.ndarray
    log_joint: np.ndarray
    config: SamplerConfig
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not (
            len(self.z_samples) == len(self.omega_samples) == len(self.log_joint)
        ):
            raise ValidationError("trace arrays must have equal length")
        if not np.isfinite(self.log_joint).all():
            raise ValidationError("log joint values must be finite")

    @property
    def n_retained(self) -> int:
        return len(self.log_joint)


@njit(cache=True)
def _sweep(z, n, M, logw, log1mw, e, f, g_indptr, g_indices, q_indptr, q_indices, uniforms):
    """One in-place Gibbs sweep over all sites, ascending index order.

    ``z`` holds 0-based labels; ``n`` community sizes; ``M`` the symmetric
    observed-edge count matrix. All three are updated incrementally as each
    site is resampled.
    """
    p = z.shape[0]
    k = n.shape[0]
    r = np.zeros(k, np.int64)
    t = np.zeros(k, np.int64)
    work = np.empty(k, np.float64)
    for j in range(p):
        a = z[j]
        for m in range(k):
            r[m] = 0
        for idx in range(g_indptr[j], g_indptr[j + 1]):
            r[z[g_indices[idx]]] += 1
        # detach site j from the counts
        n[a] -= 1
        for m in range(k):
            M[a, m] -= r[m]
            M[m, a] -= r[m]
        M[a, a] += r[a]
        if f > 0.0:
            for m in range(k):
                t[m] = 0
            for idx in range(q_indptr[j], q_indptr[j + 1]):
                t[z[q_indices[idx]]] += 1
        best = -np.inf
        for c in range(k):
            s = e[c]
            for m in range(k):
                s += r[m] * logw[c, m] + (n[m] - r[m]) * log1mw[c, m]
            if f > 0.0:
                s += f * t[c]
            work[c] = s
            if s > best:
                best = s
        total = 0.0
        for c in range(k):
            work[c] = np.exp(work[c] - best)
            total += work[c]
        u = uniforms[j] * total
        b = k - 1
        acc = 0.0
        for c in range(k):
            acc += work[c]
            if u < acc:
                b = c
                break
        z[j] = b
        n[b] += 1
        for m in range(k):
            M[b, m] += r[m]
            M[m, b] += r[m]
        M[b, b] -= r[b]


def _neighbor_csr(adjacency: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = adjacency.shape[0]
    indptr = np.zeros(p + 1, dtype=np.int64)
    chunks = []
    for j in range(p):
        nbrs = np.flatnonzero(adjacency[j]).astype(np.int64)
        indptr[j + 1] = indptr[j] + nbrs.size
        chunks.append(nbrs)
    indices = np.concatenate(chunks) if chunks else np.zeros(0, np.int64)
    return indptr, indices


def _observed_counts(adjacency: np.ndarray, z0: np.ndarray, k: int) -> np.ndarray:
    onehot = np.zeros((z0.size, k), dtype=np.float64)
    onehot[np.arange(z0.size), z0] = 1.0
    full = onehot.T @ adjacency.astype(np.float64) @ onehot
    M = np.rint(full).astype(np.int64)
    np.fill_diagonal(M, np.diagonal(M) // 2)
    return M


def _possible_counts(n: np.ndarray) -> np.ndarray:
    N = np.outer(n, n)
    np.fill_diagonal(N, n * (n - 1) // 2)
    return N


def _clamped_logs(omega: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    with np.errstate(divide="ignore"):
        logw = np.log(omega)
        log1mw = np.log1p(-omega)
    return np.maximum(logw, _LOG_FLOOR), np.maximum(log1mw, _LOG_FLOOR)


def edge_counts(g: BinaryNetwork, z: CommunityAssignment) -> BlockCounts:
    """Observed and possible edge counts per block pair, from scratch."""
    if z.p != g.p:
        raise ValidationError("assignment length must match network size")
    z0 = z.labels - 1
    M = _observed_counts(g.adjacency, z0, z.k)
    N = _possible_counts(z.sizes())
    return BlockCounts(observed=M, possible=N)


def log_likelihood(
    g: BinaryNetwork, z: CommunityAssignment, omega: EdgeProbabilityMatrix
) -> float:
    """Bernoulli block log-likelihood of the graph.

    Degenerate probabilities are handled as limits: a block with
    ``omega in {0, 1}`` contributes 0 when the counts agree with certainty
    and ``-inf`` otherwise.
    """
    counts = edge_counts(g, z)
    iu = np.triu_indices(z.k)
    M = counts.observed[iu].astype(np.float64)
    N = counts.possible[iu].astype(np.float64)
    w = omega.values[iu]
    total = 0.0
    for m, n_pairs, p_edge in zip(M, N, w):
        if n_pairs == 0:
            continue
        if p_edge <= 0.0:
            if m > 0:
                return float("-inf")
            continue
        if p_edge >= 1.0:
            if m < n_pairs:
                return float("-inf")
            continue
        total += m * np.log(p_edge) + (n_pairs - m) * np.log1p(-p_edge)
    return float(total)


def mrf_log_prior_term(
    j: int, k: int, z: CommunityAssignment, q: BinaryNetwork, cfg: SamplerConfig
) -> float:
    """Unnormalized log prior for site ``j`` (0-based) taking label ``k`` (1-based)."""
    if not 0 <= j < z.p:
        raise ValidationError(f"site index {j} out of range")
    if not 1 <= k <= cfg.k:
        raise ValidationError(f"label {k} out of range 1..{cfg.k}")
    e = cfg.log_base_rates()
    neighbors = np.flatnonzero(q.adjacency[j])
    agree = int((z.labels[neighbors] == k).sum())
    return float(e[k - 1] + cfg.f * agree)


def _draw_omega(
    M: np.ndarray, N: np.ndarray, cfg: SamplerConfig, rng: np.random.Generator
) -> np.ndarray:
    k = M.shape[0]
    iu = np.triu_indices(k)
    draws = rng.beta(M[iu] + cfg.a_omega, N[iu] - M[iu] + cfg.b_omega)
    omega = np.zeros((k, k))
    omega[iu] = draws
    omega.T[iu] = draws
    return omega


def sample_omega(
    counts: BlockCounts, cfg: SamplerConfig, rng: np.random.Generator
) -> EdgeProbabilityMatrix:
    """Draw each block probability from its conjugate beta full conditional."""
    values = _draw_omega(counts.observed, counts.possible, cfg, rng)
    return EdgeProbabilityMatrix(values=values)


def sample_z(
    g: BinaryNetwork,
    q: BinaryNetwork | None,
    omega: EdgeProbabilityMatrix,
    z: CommunityAssignment,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> CommunityAssignment:
    """One full-conditional sweep over all sites; returns the new assignment.

    Sites are visited in ascending index order and block counts are updated
    incrementally between sites. ``q=None`` behaves as an edgeless tree.
    """
    if z.p != g.p:
        raise ValidationError("assignment length must match network size")
    z0 = (z.labels - 1).copy()
    n = z.sizes().astype(np.int64)
    M = _observed_counts(g.adjacency, z0, cfg.k)
    logw, log1mw = _clamped_logs(omega.values)
    gp, gi = _neighbor_csr(g.adjacency)
    if q is None or cfg.f == 0.0:
        qp, qi = np.zeros(g.p + 1, np.int64), np.zeros(0, np.int64)
    else:
        if q.p != g.p:
            raise ValidationError("tree and graph must share the node universe")
        qp, qi = _neighbor_csr(q.adjacency)
    uniforms = rng.random(g.p)
    _sweep(z0, n, M, logw, log1mw, cfg.log_base_rates(), float(cfg.f), gp, gi, qp, qi, uniforms)
    return CommunityAssignment(labels=z0 + 1, k=cfg.k)


def _log_joint_terms(
    M: np.ndarray,
    n: np.ndarray,
    logw: np.ndarray,
    log1mw: np.ndarray,
    q_agree: int,
    cfg: SamplerConfig,
) -> float:
    k = cfg.k
    iu = np.triu_indices(k)
    N = _possible_counts(n)
    loglik = float(
        (M[iu] * logw[iu] + (N[iu] - M[iu]) * log1mw[iu]).sum()
    )
    prior_z = float(cfg.log_base_rates() @ n) + cfg.f * q_agree
    a, b = cfg.a_omega, cfg.b_omega
    prior_w = float(
        ((a - 1.0) * logw[iu] + (b - 1.0) * log1mw[iu]).sum() - len(iu[0]) * betaln(a, b)
    )
    return loglik + prior_z + prior_w


def _tree_edge_list(q: BinaryNetwork | None) -> tuple[np.ndarray, np.ndarray]:
    if q is None:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    qa, qb = np.nonzero(np.triu(q.adjacency, 1))
    return qa.astype(np.int64), qb.astype(np.int64)


def log_joint(
    g: BinaryNetwork,
    q: BinaryNetwork | None,
    z: CommunityAssignment,
    omega: EdgeProbabilityMatrix,
    cfg: SamplerConfig,
) -> float:
    """Unnormalized log joint of ``(z, omega)``: likelihood plus both priors.

    This is the quantity recorded per retained iteration of a chain; log
    terms are floored at the smallest representable log so the result stays
    finite for degenerate probabilities.
    """
    counts = edge_counts(g, z)
    logw, log1mw = _clamped_logs(omega.values)
    qa, qb = _tree_edge_list(q)
    agree = int(np.count_nonzero(z.labels[qa] == z.labels[qb])) if qa.size else 0
    return _log_joint_terms(counts.observed, z.sizes(), logw, log1mw, agree, cfg)


def gibbs_run(
    g: BinaryNetwork, q: BinaryNetwork | None, cfg: SamplerConfig
) -> ChainTrace:
    """Run the two-step Gibbs sampler and keep the second half of the chain.

    Labels initialize uniformly at random. Each iteration draws the block
    probabilities given the current labels, then sweeps all labels given the
    new probabilities; the final ``iterations/2`` states are retained along
    with their unnormalized log joint. Deterministic given ``cfg.seed``.

    During burn-in the tree coupling ramps linearly from 0 to ``cfg.f``,
    reaching full strength at the last burn-in sweep; every retained sweep
    uses ``cfg.f`` exactly, so the retained chain targets the stated joint.
    Without the ramp, same-parent cliques coalesce onto arbitrary labels
    while the block probabilities are still uninformative, and a clique that
    lands on another community's label cannot escape by single-site moves
    (each move abandons roughly ``f`` times the clique size in prior
    reward). The ramp lets the graph shape the blocks first.
    """
    p = g.p
    k = cfg.k
    if q is not None and cfg.f > 0.0:
        if q.labels != g.labels:
            raise ValidationError("graph and tree must share the same node universe")
    rng = np.random.default_rng(cfg.seed)
    z0 = rng.integers(0, k, size=p).astype(np.int64)
    n = np.bincount(z0, minlength=k).astype(np.int64)
    M = _observed_counts(g.adjacency, z0, k)
    gp, gi = _neighbor_csr(g.adjacency)
    if q is None or cfg.f == 0.0:
        qp, qi = np.zeros(p + 1, np.int64), np.zeros(0, np.int64)
    else:
        qp, qi = _neighbor_csr(q.adjacency)
    qa, qb = _tree_edge_list(q) if cfg.f > 0.0 else (np.zeros(0, np.int64),) * 2
    e = cfg.log_base_rates()
    f = float(cfg.f)
    total_iter = cfg.iterations
    burn = cfg.burn_in
    retained = total_iter - burn
    z_samples = np.empty((retained, p), dtype=np.int64)
    omega_samples = np.empty((retained, k, k), dtype=np.float64)
    joint = np.empty(retained, dtype=np.float64)
    for t in range(1, total_iter + 1):
        N = _possible_counts(n)
        omega = _draw_omega(M, N, cfg, rng)
        logw, log1mw = _clamped_logs(omega)
        uniforms = rng.random(p)
        f_t = f * min(1.0, t / burn)
        _sweep(z0, n, M, logw, log1mw, e, f_t, gp, gi, qp, qi, uniforms)
        if t > burn:
            idx = t - burn - 1
            z_samples[idx] = z0 + 1
            omega_samples[idx] = omega
            agree = int(np.count_nonzero(z0[qa] == z0[qb])) if qa.size else 0
            joint[idx] = _log_joint_terms(M, n, logw, log1mw, agree, cfg)
    return ChainTrace(
        z_samples=z_samples,
        omega_samples=omega_samples,
        log_joint=joint,
        config=cfg,
        labels=g.labels,
    )


def write_trace(trace: ChainTrace, out_dir) -> None:
    """Persist a trace as three CSVs: labels, flattened omega, log joint."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k = trace.config.k
    iu = np.triu_indices(k)
    with (out / "trace_z.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trace.labels or [f"node_{i}" for i in range(trace.z_samples.shape[1])])
        for row in trace.z_samples:
            writer.writerow(row.tolist())
    with (out / "trace_omega.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"w_{i + 1}_{j + 1}" for i, j in zip(*iu)])
        for omega in trace.omega_samples:
            writer.writerow([format(v, ".17g") for v in omega[iu]])
    with (out / "trace_logjoint.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["log_joint"])
        for v in trace.log_joint:
            writer.writerow([format(v, ".17g")])
