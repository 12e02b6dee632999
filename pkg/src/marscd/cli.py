"""Command-line interface: ``marscd <subcommand> ...``.

Subcommands: ingest, simulate, detect, align, eval, bench {exp1,exp2}, food.
The environment variable ``MARSCD_SEED`` overrides any configured seed.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import io
from .align import consensus_align
from .bench import ALL_METHODS, GLOBAL, ExperimentConfig, generate, monte_carlo
from .detect import mars_cd_all
from .evaluation import misclustering, nmi, nmi_heatmap
from .mars import EmbeddingCache

log = logging.getLogger("marscd")


class CliError(Exception):
    """User-facing error; reported without a traceback, exit code 2."""


def _seed(value: int) -> int:
    env = os.environ.get("MARSCD_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"MARSCD_SEED must be an integer, got {env!r}") from None
    return value


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise CliError(f"input file not found: {p}")
    return p


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "layer"


def _label_path(out: Path, l: int, name: str) -> Path:
    return out / "labels" / f"{l:03d}_{_safe(name)}.csv"


def _write_layer_labels(out: Path, labels, node_names, layer_names) -> list[Path]:
    (out / "labels").mkdir(parents=True, exist_ok=True)
    paths = []
    for l, lab in enumerate(labels):
        p = _label_path(out, l, layer_names[l])
        io.write_labels(p, lab, node_names)
        paths.append(p)
    io.write_rows(out / "layers.csv", ["index", "layer", "file"],
                  [(l, layer_names[l], p.name) for l, p in enumerate(paths)])
    return paths


def _label_files(items: list[str]) -> list[Path]:
    files: list[Path] = []
    for item in items:
        p = _existing(item)
        files.extend(sorted(p.glob("*.csv")) if p.is_dir() else [p])
    if not files:
        raise CliError("no label files given")
    return files


def _load_labels(items):
    names, labs = None, []
    for f in _label_files(items):
        nm, lab = io.read_labels(f)
        if names is not None and nm != names:
            raise CliError(f"{f}: node list differs from the first label file")
        names = nm
        labs.append(lab)
    return names, labs


# -- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> None:
    net, nodes, layers = io.ingest(_existing(args.input), args.format,
                                   _existing(args.nodes) if args.nodes else None)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_edge_list(out / "edges.csv", net, nodes, layers, nodes_path=out / "nodes.csv")
    summary = {
        "n": net.n,
        "L": net.L,
        "layers": layers,
        "edges": [int(len(e)) for e in net.edges],
        "mean_degree": [float(d.mean()) for d in net.degrees],
    }
    io.write_json(out / "summary.json", summary)
    print(f"n={net.n} L={net.L} -> {out}")


def _config_from_args(args) -> ExperimentConfig:
    d = {}
    if args.config:
        d = json.loads(_existing(args.config).read_text(encoding="utf-8"))
    for key in ("kind", "n", "p", "K", "L", "q1", "sigma_M", "dense_frac", "reps"):
        v = getattr(args, key, None)
        if v is not None:
            d[key] = v
    d["seed"] = _seed(d.get("seed", args.seed if args.seed is not None else 0))
    return ExperimentConfig.from_dict(d)


def cmd_simulate(args) -> None:
    cfg = _config_from_args(args)
    net, truth, global_truth = generate(cfg, cfg.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    nodes = [str(i) for i in range(net.n)]
    layers = [str(l) for l in range(net.L)]
    io.write_edge_list(out / "edges.csv", net, nodes, layers, nodes_path=out / "nodes.csv")
    _write_layer_labels(out, truth, nodes, layers)
    if global_truth is not None:
        io.write_labels(out / "global_labels.csv", global_truth, nodes)
    io.write_json(out / "config.json", cfg.to_dict())
    print(f"simulated {cfg.kind}: n={net.n} L={net.L} -> {out}")


def _detect(net, nodes, layers, out: Path, K: int, khat: int, tau_mult: float, seed: int,
            do_align: bool, threads: int, restarts: int) -> dict:
    if net.L < 2:
        raise CliError("detection needs at least two layers")
    if net.n < K:
        raise CliError(f"K={K} exceeds the node count {net.n}")
    if khat < 1 or khat > net.n:
        raise CliError(f"khat must lie in [1, {net.n}]")
    tau = tau_mult * math.log(net.n)
    cache = EmbeddingCache(net.dense_layers(), khat, tau)
    results = mars_cd_all(None, K, seed=seed, cache=cache, restarts=restarts, threads=threads)
    out.mkdir(parents=True, exist_ok=True)
    labels = [r.labels for r in results]
    _write_layer_labels(out, labels, nodes, layers)
    config = {"K": K, "khat": khat, "tau": tau, "tau_mult": tau_mult, "seed": seed,
              "restarts": restarts, "n": net.n, "L": net.L}
    io.write_json(out / "detection.json", {
        "config": config,
        "layers": layers,
        "results": [r.to_dict() for r in results],
    })
    io.write_matrix(out / "nmi_heatmap.csv", nmi_heatmap(labels), layers)
    if do_align:
        al = consensus_align(labels, K=K)
        payload = al.to_dict()
        payload["config"] = config
        io.write_json(out / "alignment.json", payload)
        io.write_labels(out / "global_labels.csv", al.global_labels, nodes)
    return {"labels": labels, "config": config}


def cmd_detect(args) -> None:
    net, nodes, layers = io.ingest(_existing(args.input), args.format,
                                   _existing(args.nodes) if args.nodes else None)
    khat = args.khat if args.khat is not None else args.k
    _detect(net, nodes, layers, Path(args.out), args.k, khat, args.tau_mult, _seed(args.seed),
            args.align, args.threads, args.restarts)
    print(f"detected {net.L} layers (K={args.k}, khat={khat}) -> {args.out}")


def cmd_align(args) -> None:
    nodes, labs = _load_labels(args.labels)
    K = args.k if args.k is not None else int(max(l.max() for l in labs)) + 1
    al = consensus_align(labs, K=K, eta=args.eta, eps=args.eps, T_max=args.max_iters, method=args.method)
    io.write_json(args.out, al.to_dict())
    if args.H:
        with open(args.H, "w", newline="", encoding="utf-8") as fh:
            fh.write("node_id," + ",".join(str(k) for k in range(K)) + "\n")
            for name, row in zip(nodes, al.H):
                fh.write(name + "," + ",".join(repr(float(x)) for x in row) + "\n")
    if args.global_labels:
        io.write_labels(args.global_labels, al.global_labels, nodes)
    print(f"aligned {len(labs)} layers in {al.iterations} iterations -> {args.out}")


def cmd_eval(args) -> None:
    names_e, est = _load_labels(args.est)
    names_t, truth = _load_labels(args.truth)
    if len(est) != len(truth):
        raise CliError(f"{len(est)} estimated vs {len(truth)} true labelings")
    if names_e != names_t:
        raise CliError("estimated and true label files list different nodes")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [(l, misclustering(e, t), nmi(e, t)) for l, (e, t) in enumerate(zip(est, truth))]
    io.write_rows(out / "metrics.csv", ["layer", "misclustering", "nmi"], rows)
    io.write_matrix(out / "nmi_heatmap.csv", nmi_heatmap(est))
    print(f"mean misclustering {np.mean([r[1] for r in rows]):.4f} -> {out}")


def _parse_grid(text: str, cast):
    """``"5,12"`` or ``"5:12"`` (inclusive integer range) or ``"0.1:0.5:0.2"``."""
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        lo, hi = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1.0
        vals = np.arange(lo, hi + step / 2, step)
        return [cast(round(v, 10)) for v in vals]
    return [cast(x) for x in text.split(",") if x.strip()]


TABLE_ORDER = ("SPEC", "SCORE", "MARS-CD(K)", "MARS-CD(K-1)", "MARS-CD(K+2)")


def cmd_bench(args) -> None:
    kind = args.kind
    param_name = "L" if kind == "exp1" else "q1"
    grid = _parse_grid(args.L if kind == "exp1" else args.q1, int if kind == "exp1" else float)
    if not grid:
        raise CliError("empty sweep range")
    if kind == "exp1" and min(grid) < 2:
        raise CliError("exp1 needs L >= 2")
    if kind == "exp2" and not all(0 <= q <= 1 for q in grid):
        raise CliError("q1 values must lie in [0, 1]")
    base = {"kind": kind, "n": args.n, "K": args.K, "reps": args.reps,
            "seed": _seed(args.seed), "restarts": args.restarts}
    if args.methods:
        base["methods"] = args.methods.split(",")
    if kind == "exp2":
        base["L"] = args.layers
        if args.theta_range:
            base["theta_range"] = [float(x) for x in args.theta_range.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    long_rows, rep_rows, table = [], [], []
    for value in grid:
        cfg = ExperimentConfig.from_dict({**base, param_name: value})
        log.info("running %s %s=%s (%d reps)", kind, param_name, value, cfg.reps)
        report = monte_carlo(cfg, threads=args.threads)
        for m, layer, mean, se in report.summary():
            long_rows.append((m, value, layer, mean, se))
        for rep, layer, m, err in report.rows:
            rep_rows.append((value, rep, layer, m, err))
        methods = [m for m in TABLE_ORDER if m in report.methods()]
        if kind == "exp1":
            table.append([value] + [report.mean(m) for m in methods])
        else:
            table.append([value] + [_mean_or_nan(report.errors(m, GLOBAL)) for m in methods])
    io.write_rows(out / f"bench_{kind}.csv", ["method", "param", "layer", "mean", "se"], long_rows)
    io.write_rows(out / f"bench_{kind}_reps.csv", ["param", "rep", "layer", "method", "error"], rep_rows)
    io.write_rows(out / f"bench_{kind}_table.csv", [param_name] + methods, table)
    io.write_json(out / f"bench_{kind}_config.json", {**base, "grid": grid})
    print(f"bench {kind} over {param_name}={grid} -> {out}")


def _mean_or_nan(x):
    return float(np.mean(x)) if len(x) else float("nan")


def cmd_food(args) -> None:
    edges = io.read_edge_list(_existing(args.input), args.format)
    net, nodes, layers = io.food_preprocess(edges, args.weight_min, args.lcc_min, union=args.union)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_edge_list(out / "network.csv", net, nodes, layers, nodes_path=out / "nodes.csv")
    io.write_json(out / "preprocess.json", {"n": net.n, "L": net.L, "layers": layers,
                                           "weight_min": args.weight_min, "lcc_min": args.lcc_min,
                                           "union": args.union})
    print(f"preprocessed: n={net.n} L={net.L}")
    _detect(net, nodes, layers, out, args.k, args.khat, args.tau_mult, _seed(args.seed),
            args.align, args.threads, args.restarts)
    print(f"food pipeline -> {out}")


# -- parser ------------------------------------------------------------------


def _add_detect_opts(p, k_default=None, khat_default=None):
    p.add_argument("--k", type=int, default=k_default, required=k_default is None, help="number of communities K")
    p.add_argument("--khat", type=int, default=khat_default, help="embedding width per auxiliary layer (default K)")
    p.add_argument("--tau-mult", type=float, default=10.0, help="tau = c * log(n)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=20, help="k-means restarts")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--align", action="store_true", help="also run consensus label alignment")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marscd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a layered edge list")
    p.add_argument("input")
    p.add_argument("--format", choices=["csv", "tsv"])
    p.add_argument("--nodes", help="node table (header node_id) fixing node order")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("simulate", help="draw a network from an experiment config")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--kind", choices=["exp1", "exp2", "custom"])
    for name, typ in (("n", int), ("p", int), ("K", int), ("L", int), ("q1", float),
                      ("sigma_M", float), ("dense_frac", float)):
        p.add_argument(f"--{name}", type=typ, dest=name)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate, reps=None)

    p = sub.add_parser("detect", help="MARS-CD on every layer of an edge list")
    p.add_argument("input")
    p.add_argument("--format", choices=["csv", "tsv"])
    p.add_argument("--nodes")
    p.add_argument("--out", required=True)
    _add_detect_opts(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("align", help="consensus label alignment of layer labelings")
    p.add_argument("labels", nargs="+", help="label CSV files or directories of them")
    p.add_argument("--k", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--method", choices=["procrustes", "assignment"], default="procrustes")
    p.add_argument("--out", required=True, help="alignment JSON")
    p.add_argument("--H", help="optional consensus matrix CSV")
    p.add_argument("--global-labels", help="optional global labels CSV")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("eval", help="misclustering and NMI of estimated labels")
    p.add_argument("--est", nargs="+", required=True)
    p.add_argument("--truth", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="Monte-Carlo benchmark sweeps")
    p.add_argument("kind", choices=["exp1", "exp2"])
    p.add_argument("--L", default="5:12", help="exp1 layer counts, e.g. 5,12 or 5:12")
    p.add_argument("--q1", default="0:0.5:0.1", help="exp2 transition rates, e.g. 0.1,0.3")
    p.add_argument("--layers", type=int, default=4, help="exp2 layer count")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--methods", help=f"comma list from {','.join(ALL_METHODS)}")
    p.add_argument("--theta-range", help="exp2: 'lo,hi' degree range for all communities")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("food", help="food-trade preprocessing + MARS-CD + NMI heatmap")
    p.add_argument("input")
    p.add_argument("--format", choices=["csv", "tsv"])
    p.add_argument("--weight-min", type=float, default=8.0)
    p.add_argument("--lcc-min", type=int, default=150)
    p.add_argument("--union", action="store_true", help="merge giant components by union instead of intersection")
    p.add_argument("--out", required=True)
    _add_detect_opts(p, k_default=3, khat_default=6)
    p.set_defaults(func=cmd_food)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (CliError, FileNotFoundError, ValueError) as exc:
        print(f"marscd: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
