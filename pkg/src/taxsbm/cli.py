"""Command-line pipeline driver.

Subcommands: ``network`` (counts -> co-occurrence graph), ``fit`` (Gibbs run
on a graph), ``select-k`` (BIC over a grid), ``simulate`` (synthetic suite),
``metrics`` (score fits against truth). Every run writes ``manifest.json``
with the effective parameters. Exit codes: 0 success, 1 runtime failure,
2 usage or validation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import TaxsbmError, ValidationError
from .inference import select_k, summarize
from .ingest import (
    load_abundance,
    load_network,
    load_taxonomy,
    read_adjacency,
    write_adjacency,
    write_sample_matrix,
)
from .metrics import (
    ari,
    genus_community_strength,
    nodal_strength,
    shannon,
    write_ari_table,
    write_genus_strength,
    write_nodal_strength,
    write_shannon,
)
from .network import build_cooccurrence, build_tree_adjacency, write_correlations
from .sbm import SamplerConfig, gibbs_run, write_trace
from .simgen import default_suite, generate_dataset, write_dataset
from .transform import mclr, relative_abundance

VERSION = "0.1.0"


def _write_manifest(out_dir: Path, command: str, params: dict) -> None:
    manifest = {"command": command, "version": VERSION, "parameters": params}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_tree(args, g):
    """Build Q from --taxonomy or --tree; None when neither is given."""
    if getattr(args, "taxonomy", None):
        taxonomy = load_taxonomy(args.taxonomy, g.labels)
        return build_tree_adjacency(taxonomy, g.labels), taxonomy
    if getattr(args, "tree", None):
        q = read_adjacency(args.tree)
        if q.labels != g.labels:
            raise ValidationError("tree adjacency labels do not match the network")
        return q, None
    return None, None


def cmd_network(args) -> int:
    out = _out_dir(args)
    counts = load_abundance(args.abundance, min_nonzero=args.min_nonzero)
    comp = relative_abundance(counts)
    transformed = mclr(comp, mode=args.mclr_mode)
    g, correlations = build_cooccurrence(transformed, alpha=args.alpha)
    write_sample_matrix(transformed.samples, transformed.taxa, transformed.values, out / "transformed.csv")
    write_correlations(correlations, out / "correlations.csv")
    write_adjacency(g, out / "network_g.csv")
    if args.taxonomy:
        taxonomy = load_taxonomy(args.taxonomy, counts.taxa)
        write_adjacency(build_tree_adjacency(taxonomy, counts.taxa), out / "tree_q.csv")
    _write_manifest(out, "network", {
        "abundance": args.abundance,
        "taxonomy": args.taxonomy,
        "min_nonzero": args.min_nonzero,
        "mclr_mode": args.mclr_mode,
        "alpha": args.alpha,
        "out": str(out),
    })
    print(f"network: {g.p} taxa, {g.n_edges} edges "
          f"({correlations.n_tested} pairs tested, alpha={args.alpha})")
    return 0


def _sampler_config(args) -> SamplerConfig:
    return SamplerConfig(
        k=args.k,
        f=args.f,
        iterations=args.iterations,
        seed=args.seed,
        a_omega=args.a_omega,
        b_omega=args.b_omega,
    )


def _fit_metric_outputs(out, g, summary, taxonomy) -> None:
    write_nodal_strength(g, out / "nodal_strength.csv")
    if taxonomy is not None:
        tau = np.array(taxonomy.parents(g.labels))
        z = summary.z_map.labels
        write_genus_strength(genus_community_strength(g, z, tau), out / "genus_strength.csv")
        rows = [
            {"f": summary.config.f, "community": k, "shannon": shannon(z, tau, k)}
            for k in sorted(set(z.tolist()))
        ]
        write_shannon(rows, out / "shannon.csv")


def cmd_fit(args) -> int:
    out = _out_dir(args)
    g = read_adjacency(args.network)
    q, taxonomy = _load_tree(args, g)
    if args.f > 0 and q is None:
        raise ValidationError("f > 0 requires --taxonomy or --tree")
    cfg = _sampler_config(args)
    trace = gibbs_run(g, q, cfg)
    summary = summarize(trace)
    write_trace(trace, out)
    summary.write_json(out / "fit.json")
    _fit_metric_outputs(out, g, summary, taxonomy)
    _write_manifest(out, "fit", {
        "network": args.network,
        "taxonomy": args.taxonomy,
        "tree": args.tree,
        "k": args.k,
        "f": args.f,
        "iterations": args.iterations,
        "seed": args.seed,
        "a_omega": args.a_omega,
        "b_omega": args.b_omega,
        "out": str(out),
    })
    print(f"fit: k={summary.k} bic={summary.bic:.3f} map_log_joint={summary.map_log_joint:.3f}")
    return 0


def _parse_grid(text: str) -> list[int]:
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok]


def cmd_select_k(args) -> int:
    out = _out_dir(args)
    g = read_adjacency(args.network)
    q, _ = _load_tree(args, g)
    if args.f > 0 and q is None:
        raise ValidationError("f > 0 requires --taxonomy or --tree")
    grid = _parse_grid(args.grid)
    base = SamplerConfig(
        k=max(grid),
        f=args.f,
        iterations=args.iterations,
        seed=args.seed,
        a_omega=args.a_omega,
        b_omega=args.b_omega,
    )
    method = args.method.replace("-", "_")
    selection = select_k(
        g, q, base, grid, method=method, workers=args.threads, restarts=args.restarts
    )
    selection.write_curve_csv(out / "bic_curve.csv")
    selection.write_json(out / "selection.json")
    selection.chosen_fit().write_json(out / "fit.json")
    _write_manifest(out, "select-k", {
        "network": args.network,
        "taxonomy": args.taxonomy,
        "tree": args.tree,
        "grid": grid,
        "method": method,
        "restarts": args.restarts,
        "f": args.f,
        "iterations": args.iterations,
        "seed": args.seed,
        "a_omega": args.a_omega,
        "b_omega": args.b_omega,
        "threads": args.threads,
        "out": str(out),
    })
    print(f"select-k: chosen k={selection.chosen_k} ({method}) over grid {grid[0]}..{grid[-1]}")
    return 0


def _generate_one(task):
    spec, rep = task
    return generate_dataset(spec, rep)


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    specs = default_suite(replicates=args.replicates, seed=args.seed)
    tasks = [(spec, rep) for spec in specs for rep in range(spec.replicates)]
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            datasets = list(pool.map(_generate_one, tasks))
    else:
        datasets = [_generate_one(task) for task in tasks]
    index = []
    for ds in datasets:
        rel = Path(ds.scenario.name) / f"rep_{ds.replicate:03d}"
        write_dataset(ds, out / rel)
        index.append({
            "scenario": ds.scenario.name,
            "replicate": ds.replicate,
            "path": str(rel),
            "achieved_strength_ari": ds.achieved_strength_ari,
        })
    (out / "index.json").write_text(json.dumps(index, indent=2) + "\n")
    _write_manifest(out, "simulate", {
        "replicates": args.replicates,
        "seed": args.seed,
        "threads": args.threads,
        "out": str(out),
    })
    print(f"simulate: wrote {len(datasets)} datasets under {out}")
    return 0


def _read_truth(path) -> tuple[list[str], dict[str, int], dict[str, str]]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header[:3]] != ["taxon", "community", "genus"]:
            raise ValidationError(f"{path}: header must be 'taxon,community,genus'")
        taxa, communities, genera = [], {}, {}
        for row in reader:
            if not row:
                continue
            taxa.append(row[0])
            communities[row[0]] = int(row[1])
            genera[row[0]] = row[2]
    return taxa, communities, genera


def cmd_metrics(args) -> int:
    out = _out_dir(args)
    taxa, communities, genera = _read_truth(args.truth)
    rows = []
    for rep, fit_path in enumerate(args.fit):
        fit = json.loads(Path(fit_path).read_text())
        labels = fit["labels"]
        missing = [t for t in labels if t not in communities]
        if missing:
            raise ValidationError(f"truth file lacks taxa from {fit_path}: {missing[:5]}")
        truth = np.array([communities[t] for t in labels])
        estimate = np.array(fit["z_map"])
        rows.append({
            "scenario": Path(fit_path).stem,
            "strength": "",
            "k": fit["k"],
            "replicate": rep,
            "f": fit["config"]["f"],
            "ari": ari(truth, estimate),
        })
        print(f"metrics: {fit_path} ari={rows[-1]['ari']:.4f}")
    write_ari_table(rows, out / "ari.csv")
    if args.network:
        g = read_adjacency(args.network)
        write_nodal_strength(g, out / "nodal_strength.csv")
        fit = json.loads(Path(args.fit[0]).read_text())
        if tuple(fit["labels"]) == g.labels:
            z = np.array(fit["z_map"])
            tau = np.array([genera[t] for t in g.labels])
            write_genus_strength(genus_community_strength(g, z, tau), out / "genus_strength.csv")
            rows = [
                {"f": fit["config"]["f"], "community": k, "shannon": shannon(z, tau, k)}
                for k in sorted(set(z.tolist()))
            ]
            write_shannon(rows, out / "shannon.csv")
    _write_manifest(out, "metrics", {
        "truth": args.truth,
        "fit": list(args.fit),
        "network": args.network,
        "out": str(out),
    })
    return 0


def _add_sampler_flags(parser, default_f=1.0):
    parser.add_argument("--f", type=float, default=default_f, help="tree coupling strength")
    parser.add_argument("--iterations", type=int, default=1000, help="total Gibbs iterations")
    parser.add_argument("--seed", type=int, default=42, help="PRNG seed")
    parser.add_argument("--a-omega", dest="a_omega", type=float, default=1.0)
    parser.add_argument("--b-omega", dest="b_omega", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="taxsbm", description=__doc__)
    parser.add_argument("--version", action="version", version=VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    p_net = sub.add_parser("network", help="estimate a co-occurrence network from counts")
    p_net.add_argument("--abundance", required=True)
    p_net.add_argument("--taxonomy")
    p_net.add_argument("--out", required=True)
    p_net.add_argument("--alpha", type=float, default=0.05)
    p_net.add_argument("--min-nonzero", dest="min_nonzero", type=int, default=7)
    p_net.add_argument("--mclr-mode", dest="mclr_mode", choices=("shifted", "robust"), default="shifted")
    p_net.set_defaults(func=cmd_network)

    p_fit = sub.add_parser("fit", help="fit the block model on a network")
    p_fit.add_argument("--network", required=True, help="dense adjacency CSV for the graph")
    p_fit.add_argument("--taxonomy", help="taxon,parent CSV for the tree prior")
    p_fit.add_argument("--tree", help="dense adjacency CSV for the tree prior")
    p_fit.add_argument("--k", type=int, required=True)
    p_fit.add_argument("--out", required=True)
    _add_sampler_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_sel = sub.add_parser("select-k", help="choose the community count by BIC")
    p_sel.add_argument("--network", required=True)
    p_sel.add_argument("--taxonomy")
    p_sel.add_argument("--tree")
    p_sel.add_argument("--grid", default="2:12", help="K grid, e.g. 2:12 or 2,4,8")
    p_sel.add_argument("--method", choices=("min-bic", "elbow"), default="min-bic")
    p_sel.add_argument("--restarts", type=int, default=1, help="chains per grid point")
    p_sel.add_argument("--threads", type=int, default=1)
    p_sel.add_argument("--out", required=True)
    _add_sampler_flags(p_sel)
    p_sel.set_defaults(func=cmd_select_k)

    p_sim = sub.add_parser("simulate", help="generate the synthetic scenario suite")
    p_sim.add_argument("--replicates", type=int, default=50)
    p_sim.add_argument("--seed", type=int, default=42)
    p_sim.add_argument("--threads", type=int, default=1)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_met = sub.add_parser("metrics", help="score fits against a truth table")
    p_met.add_argument("--truth", required=True)
    p_met.add_argument("--fit", required=True, nargs="+")
    p_met.add_argument("--network")
    p_met.add_argument("--out", required=True)
    p_met.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TaxsbmError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - unexpected failure path
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
