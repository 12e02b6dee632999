"""Edge-list ingestion, food-trade preprocessing and result writers.

Edge lists are CSV or TSV files with a header ``layer,src,dst[,weight]``.
Nodes and layers are indexed by order of first appearance (``src`` before
``dst`` within a row) unless a node table is supplied.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .model import MultilayerNetwork


class IngestError(ValueError):
    """Malformed or empty input file."""


@dataclass
class LayeredEdgeList:
    """Weighted undirected edges, one record per (layer, i, j) with ``i < j``."""

    layer_names: list[str]
    node_names: list[str]
    layer: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    @property
    def n(self) -> int:
        return len(self.node_names)

    @property
    def L(self) -> int:
        return len(self.layer_names)

    def to_network(self) -> MultilayerNetwork:
        edges = tuple(
            np.column_stack([self.src[self.layer == l], self.dst[self.layer == l]])
            for l in range(self.L)
        )
        return MultilayerNetwork(self.n, edges)


def _delimiter(path: Path, fmt: str | None) -> str:
    if fmt is None:
        fmt = "tsv" if path.suffix.lower() in {".tsv", ".tab"} else "csv"
    if fmt not in {"csv", "tsv"}:
        raise ValueError(f"unknown format {fmt!r}")
    return "\t" if fmt == "tsv" else ","


def read_node_table(path) -> list[str]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=_delimiter(path, None))
        header = next(reader, None)
        if header is None or header[0].strip() != "node_id":
            raise IngestError(f"{path}: expected header 'node_id'")
        return [row[0] for row in reader if row]


def read_edge_list(path, fmt: str | None = None, nodes: Sequence[str] | None = None) -> LayeredEdgeList:
    """Parse a layered edge list, dropping self-loops.

    Duplicate undirected edges within a layer collapse to one record with
    the largest weight.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    node_idx: dict[str, int] = {}
    if nodes is not None:
        node_idx = {name: i for i, name in enumerate(nodes)}
    layer_idx: dict[str, int] = {}
    best: dict[tuple[int, int, int], float] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=_delimiter(path, fmt))
        header = next(reader, None)
        if header is None:
            raise IngestError(f"{path}: empty file")
        header = [h.strip().lower() for h in header]
        if header[:3] != ["layer", "src", "dst"] or len(header) > 4 or (len(header) == 4 and header[3] != "weight"):
            raise IngestError(f"{path}:1: expected header layer,src,dst[,weight], got {','.join(header)}")
        weighted = len(header) == 4
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise IngestError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            lname, a, b = (c.strip() for c in row[:3])
            if not lname or not a or not b:
                raise IngestError(f"{path}:{lineno}: empty field")
            try:
                w = float(row[3]) if weighted else 1.0
            except ValueError:
                raise IngestError(f"{path}:{lineno}: weight {row[3]!r} is not a number") from None
            if not np.isfinite(w):
                raise IngestError(f"{path}:{lineno}: non-finite weight")
            l = layer_idx.setdefault(lname, len(layer_idx))
            for name in (a, b):
                if name not in node_idx:
                    if nodes is not None:
                        raise IngestError(f"{path}:{lineno}: node {name!r} missing from node table")
                    node_idx[name] = len(node_idx)
            i, j = node_idx[a], node_idx[b]
            if i == j:
                continue
            key = (l, min(i, j), max(i, j))
            if key not in best or w > best[key]:
                best[key] = w
    if not best and not layer_idx:
        raise IngestError(f"{path}: no edges")
    keys = sorted(best)
    arr = np.array(keys, dtype=np.int64).reshape(-1, 3)
    return LayeredEdgeList(
        layer_names=list(layer_idx),
        node_names=list(node_idx),
        layer=arr[:, 0],
        src=arr[:, 1],
        dst=arr[:, 2],
        weight=np.array([best[k] for k in keys], dtype=float),
    )


def ingest(path, fmt: str | None = None, nodes_path=None):
    """Read an edge list into ``(network, node_names, layer_names)``."""
    nodes = read_node_table(nodes_path) if nodes_path is not None else None
    el = read_edge_list(path, fmt, nodes)
    return el.to_network(), el.node_names, el.layer_names


def largest_component(n: int, edges: np.ndarray) -> np.ndarray:
    """Sorted node indices of the largest connected component (smallest-index component on ties)."""
    if edges.size == 0:
        return np.array([0], dtype=np.int64) if n else np.zeros(0, dtype=np.int64)
    G = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    _, comp = connected_components(G, directed=False)
    sizes = np.bincount(comp)
    return np.flatnonzero(comp == np.argmax(sizes))


def food_filter(
    edges: LayeredEdgeList,
    weight_min: float = 8.0,
    lcc_min: int = 150,
    union: bool = False,
) -> LayeredEdgeList:
    """Threshold weights, drop layers with small giant components, and merge node sets.

    The shared node set is the intersection of the surviving layers'
    largest-component node sets (or their union with ``union=True``),
    renumbered in original index order. Weights of kept edges are retained.
    """
    keep = edges.weight >= weight_min
    n = edges.n
    comps, layers = [], []
    for l in range(edges.L):
        sel = keep & (edges.layer == l)
        e = np.column_stack([edges.src[sel], edges.dst[sel]])
        lcc = largest_component(n, e)
        if lcc.size >= lcc_min and e.size:
            comps.append(lcc)
            layers.append(l)
    if not layers:
        raise ValueError("no layers survive preprocessing")
    nodes = comps[0]
    for c in comps[1:]:
        nodes = np.union1d(nodes, c) if union else np.intersect1d(nodes, c)
    if nodes.size == 0:
        raise ValueError("surviving layers share no nodes")
    new_id = np.full(n, -1, dtype=np.int64)
    new_id[nodes] = np.arange(nodes.size)
    new_layer = np.full(edges.L, -1, dtype=np.int64)
    new_layer[layers] = np.arange(len(layers))
    sel = keep & (new_layer[edges.layer] >= 0) & (new_id[edges.src] >= 0) & (new_id[edges.dst] >= 0)
    return LayeredEdgeList(
        layer_names=[edges.layer_names[l] for l in layers],
        node_names=[edges.node_names[i] for i in nodes],
        layer=new_layer[edges.layer[sel]],
        src=new_id[edges.src[sel]],
        dst=new_id[edges.dst[sel]],
        weight=edges.weight[sel],
    )


def food_preprocess(
    edges: LayeredEdgeList,
    weight_min: float = 8.0,
    lcc_min: int = 150,
    union: bool = False,
):
    """:func:`food_filter` followed by conversion to ``(network, node_names, layer_names)``."""
    el = food_filter(edges, weight_min, lcc_min, union)
    return el.to_network(), el.node_names, el.layer_names


def write_edge_list(path, net: MultilayerNetwork, node_names=None, layer_names=None, nodes_path=None) -> None:
    """Write ``layer,src,dst`` rows; optionally also the node table."""
    node_names = node_names or [str(i) for i in range(net.n)]
    layer_names = layer_names or [str(l) for l in range(net.L)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["layer", "src", "dst"])
        for l in range(net.L):
            for i, j in net.edges[l]:
                w.writerow([layer_names[l], node_names[i], node_names[j]])
    if nodes_path is not None:
        write_node_table(nodes_path, node_names)


def write_node_table(path, node_names) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id"])
        for name in node_names:
            w.writerow([name])


def write_labels(path, labels, node_names=None) -> None:
    labels = np.asarray(labels)
    node_names = node_names or [str(i) for i in range(labels.size)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "label"])
        for name, lab in zip(node_names, labels):
            w.writerow([name, int(lab)])


def read_labels(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["node_id", "label"]:
            raise IngestError(f"{path}:1: expected header node_id,label")
        names, labs = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise IngestError(f"{path}:{lineno}: expected 2 fields")
            names.append(row[0])
            try:
                labs.append(int(row[1]))
            except ValueError:
                raise IngestError(f"{path}:{lineno}: label {row[1]!r} is not an integer") from None
    return names, np.array(labs, dtype=np.int64)


def write_matrix(path, M: np.ndarray, names=None) -> None:
    """Square matrix as CSV with a header row (and a leading name column)."""
    M = np.asarray(M)
    names = names or [str(i) for i in range(M.shape[0])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + list(names))
        for name, row in zip(names, M):
            w.writerow([name] + [repr(float(x)) for x in row])


def read_matrix(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    names = rows[0][1:]
    return names, np.array([[float(x) for x in r[1:]] for r in rows[1:]])


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_rows(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x
