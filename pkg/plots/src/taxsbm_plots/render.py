"""Render figures from taxsbm CSV/JSON artifacts.

Four figure kinds, each reading the documented output schemas:

* ``elbow``       bic_curve.csv (``k,bic``)
* ``ari_box``     ari.csv (``scenario,strength,k,replicate,f,ari``)
* ``heatmap``     adjacency CSV plus fit.json (community-ordered network)
* ``genus_bars``  genus_strength.csv (``community,genus,strength``)

Invoked as ``taxsbm-plot --input <files...> --kind <kind> --output <image>``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

KINDS = ("elbow", "ari_box", "heatmap", "genus_bars")


class SchemaError(ValueError):
    """Input file does not match the expected schema."""


@dataclass(frozen=True)
class PlotJob:
    inputs: tuple[str, ...]
    kind: str
    output: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"kind must be one of {KINDS}, got '{self.kind}'")
        if not self.inputs:
            raise SchemaError("at least one input file is required")


def _read_csv(path, expected_header):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(
                f"{path}: empty file, expected header {','.join(expected_header)}"
            ) from None
        if [h.strip() for h in header[: len(expected_header)]] != list(expected_header):
            raise SchemaError(
                f"{path}: expected header {','.join(expected_header)}, got {','.join(header)}"
            )
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def render_elbow(inputs, output):
    rows = _read_csv(inputs[0], ("k", "bic"))
    ks = np.array([int(r[0]) for r in rows])
    bics = np.array([float(r[1]) for r in rows])
    marked = ks[int(np.argmin(bics))]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, bics, marker="o", color="tab:blue")
    ax.axvline(marked, color="tab:red", linestyle="--", label=f"K = {marked}")
    ax.set_xlabel("number of communities K")
    ax.set_ylabel("BIC")
    ax.set_xticks(ks)
    ax.legend()
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)


def render_ari_box(inputs, output):
    rows = _read_csv(inputs[0], ("scenario", "strength", "k", "replicate", "f", "ari"))
    groups: dict[tuple[str, str], list[float]] = {}
    for row in rows:
        key = (row[0], row[4])
        groups.setdefault(key, []).append(float(row[5]))
    scenarios = sorted({k[0] for k in groups})
    f_values = sorted({k[1] for k in groups}, key=float)
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(scenarios) * len(f_values)), 4))
    width = 0.8 / len(f_values)
    colors = plt.cm.tab10(np.linspace(0, 1, 10))
    for fi, f in enumerate(f_values):
        data = [groups.get((s, f), []) for s in scenarios]
        positions = [i + (fi - (len(f_values) - 1) / 2) * width for i in range(len(scenarios))]
        boxes = ax.boxplot(
            data, positions=positions, widths=width * 0.9, patch_artist=True
        )
        for patch in boxes["boxes"]:
            patch.set_facecolor(colors[fi % 10])
            patch.set_alpha(0.7)
    ax.set_xticks(range(len(scenarios)))
    ax.set_xticklabels(scenarios, rotation=30, ha="right")
    ax.set_ylabel("adjusted Rand index")
    handles = [
        plt.Line2D([], [], color=colors[i % 10], marker="s", linestyle="", label=f"f={f}")
        for i, f in enumerate(f_values)
    ]
    ax.legend(handles=handles)
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)


def block_order(z, omega_hat, adjacency):
    """Node ordering for the community heatmap.

    Communities are placed in ascending within-community edge probability
    (``omega_hat`` diagonal); inside a community, nodes sort by descending
    within-community degree, index as tie-break.
    """
    z = np.asarray(z)
    omega_hat = np.asarray(omega_hat)
    adjacency = np.asarray(adjacency)
    communities = sorted(set(z.tolist()), key=lambda k: omega_hat[k - 1, k - 1])
    order = []
    for k in communities:
        members = np.flatnonzero(z == k)
        within_degree = adjacency[np.ix_(members, members)].sum(axis=1)
        ranked = members[np.lexsort((members, -within_degree))]
        order.extend(ranked.tolist())
    return np.array(order, dtype=int)


def _read_adjacency(path):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected 'label,<labels...>'") from None
        if not header or header[0] != "label":
            raise SchemaError(f"{path}: expected 'label' as the first column")
        labels = header[1:]
        rows = [row for row in reader if row]
    if len(rows) != len(labels):
        raise SchemaError(f"{path}: expected {len(labels)} rows, got {len(rows)}")
    adj = np.array([[int(cell) for cell in row[1:]] for row in rows], dtype=np.int8)
    return labels, adj


def render_heatmap(inputs, output):
    if len(inputs) < 2:
        raise SchemaError("heatmap needs two inputs: adjacency CSV and fit JSON")
    labels, adj = _read_adjacency(inputs[0])
    fit = json.loads(Path(inputs[1]).read_text())
    for key in ("z_map", "omega_hat", "labels"):
        if key not in fit:
            raise SchemaError(f"{inputs[1]}: fit JSON missing '{key}'")
    if list(fit["labels"]) != list(labels):
        raise SchemaError("fit labels do not match the adjacency labels")
    z = np.asarray(fit["z_map"])
    omega_hat = np.asarray(fit["omega_hat"])
    order = block_order(z, omega_hat, adj)
    reordered = adj[np.ix_(order, order)]
    boundaries = np.flatnonzero(np.diff(z[order])) + 0.5
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.imshow(reordered, cmap="Greys", interpolation="nearest")
    for b in boundaries:
        ax.axhline(b, color="tab:red", linewidth=0.6)
        ax.axvline(b, color="tab:red", linewidth=0.6)
    ax.set_xticks([])
    ax.set_yticks([])
    ax.set_xlabel("taxa (grouped by community, ascending within-community probability)")
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)


def render_genus_bars(inputs, output):
    rows = _read_csv(inputs[0], ("community", "genus", "strength"))
    per_community: dict[str, list[tuple[str, int]]] = {}
    for community, genus, strength in rows:
        per_community.setdefault(community, []).append((genus, int(strength)))
    communities = sorted(per_community, key=lambda c: int(c) if c.isdigit() else c)
    fig, axes = plt.subplots(
        1, len(communities), figsize=(3 * len(communities), 4), squeeze=False
    )
    for ax, community in zip(axes[0], communities):
        entries = sorted(per_community[community], key=lambda e: -e[1])
        names = [e[0] for e in entries]
        values = [e[1] for e in entries]
        ax.bar(range(len(values)), values, color="tab:blue")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=90, fontsize=7)
        ax.set_title(f"community {community}")
    axes[0][0].set_ylabel("nodal strength")
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)


_RENDERERS = {
    "elbow": render_elbow,
    "ari_box": render_ari_box,
    "heatmap": render_heatmap,
    "genus_bars": render_genus_bars,
}


def render(job: PlotJob) -> Path:
    """Render one figure; returns the output path."""
    for path in job.inputs:
        if not Path(path).exists():
            raise FileNotFoundError(path)
    out = Path(job.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    _RENDERERS[job.kind](job.inputs, out)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="taxsbm-plot", description=__doc__)
    parser.add_argument("--input", required=True, nargs="+", help="input file(s)")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--output", required=True, help="image file to write")
    args = parser.parse_args(argv)
    try:
        render(PlotJob(inputs=tuple(args.input), kind=args.kind, output=args.output))
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
