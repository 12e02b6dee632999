"""Monte-Carlo benchmark harness for the two simulation designs."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .align import consensus_align
from .detect import baseline_score, baseline_spec, mars_cd_layer
from .evaluation import misclustering, nmi_heatmap
from .linalg import eig_symmetric_topk
from .mars import EmbeddingCache
from .model import DcsbmParams, derive_seed, make_exp1_network, make_exp2_params, sample_mdcsbm

ALL_METHODS = ("SPEC", "SCORE", "MARS-CD(K-1)", "MARS-CD(K)", "MARS-CD(K+2)")
GLOBAL = "global"  # pseudo-layer for alignment error against global labels


@dataclass
class ExperimentConfig:
    """Simulation + method settings for one benchmark cell.

    ``kind`` selects the generator: ``exp1`` (covariate-induced),
    ``exp2`` (Multi-DCSBM) or ``custom`` (Multi-DCSBM from ``params``).
    ``theta_range`` overrides every community's degree range in ``exp2``.
    """

    kind: str = "exp1"
    n: int = 1000
    p: int = 20
    K: int = 4
    L: int = 5
    q1: float = 0.1
    sigma_M: float = 5.0
    dense_frac: float = 0.08
    theta_range: tuple[float, float] | None = None
    params: dict | None = None
    khat: int | None = None
    tau_mult: float = 10.0
    seed: int = 0
    restarts: int = 20
    reps: int = 1
    methods: tuple[str, ...] = ALL_METHODS
    align: bool | None = None

    def __post_init__(self):
        self.methods = tuple(self.methods)
        if self.theta_range is not None:
            self.theta_range = tuple(self.theta_range)
        self.validate()

    def validate(self) -> None:
        if self.kind not in {"exp1", "exp2", "custom"}:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.kind == "custom" and self.params is None:
            raise ValueError("custom experiments need 'params'")
        if self.n < 2 or self.K < 1 or self.n < self.K:
            raise ValueError(f"invalid n={self.n}, K={self.K}")
        if self.L < 2:
            raise ValueError("need at least two layers")
        if not 0 <= self.q1 <= 1:
            raise ValueError("q1 must lie in [0, 1]")
        if self.kind == "exp1" and (self.p < 1 or not 0 < self.dense_frac < 1):
            raise ValueError("exp1 needs p >= 1 and dense_frac in (0, 1)")
        if self.tau_mult <= 0:
            raise ValueError("tau_mult must be positive")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")

    @property
    def do_align(self) -> bool:
        return self.kind != "exp1" if self.align is None else self.align

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        if self.theta_range is not None:
            d["theta_range"] = list(self.theta_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)


def method_khat(method: str, K: int) -> int | None:
    if not method.startswith("MARS-CD"):
        return None
    off = method[len("MARS-CD(K"):-1]
    return K + (int(off) if off else 0)


def generate(config: ExperimentConfig, seed: int):
    """One simulated network with its layer labels and global labels."""
    c = config
    if c.kind == "exp1":
        net, labels = make_exp1_network(c.n, c.p, c.K, c.L, c.q1, c.sigma_M, c.dense_frac, seed)
        return net, labels.labels, labels.global_labels
    if c.kind == "exp2":
        params = make_exp2_params(c.n, c.K, c.L, c.q1, seed)
        if c.theta_range is not None:
            rng = np.random.default_rng(derive_seed(seed, 3))
            params = DcsbmParams(
                rng.uniform(*c.theta_range, size=params.theta.shape),
                params.B, params.labels, params.q1, params.global_labels,
            )
    else:
        params = DcsbmParams.from_dict(c.params)
    net = sample_mdcsbm(params, derive_seed(seed, 4))
    return net, params.labels.labels, params.global_labels


def run_rep(config: ExperimentConfig, rep: int) -> dict:
    """Run every configured method on replicate ``rep``.

    Returns ``{"rows": [...], "nmi": matrix or None}`` where each row is
    ``(rep, layer, method, error)``.
    """
    c = config
    seed = derive_seed(c.seed, rep)
    net, truth, global_truth = generate(c, seed)
    L, n, K = net.L, net.n, c.K
    layers = net.dense_layers()
    khats = [method_khat(m, K) for m in c.methods]
    khats = [k for k in khats if k is not None and k >= 1]
    kmax = min(n, max([K] + khats))
    eigs = [eig_symmetric_topk(A, kmax) for A in layers]
    tau = c.tau_mult * math.log(n)
    rows, nmi = [], None
    for method in c.methods:
        khat = method_khat(method, K)
        if khat is not None and khat < 1:
            continue
        if khat is None:
            fn = baseline_spec if method == "SPEC" else baseline_score
            est = [
                fn(layers[l], K, seed=derive_seed(seed, l), eigs=(eigs[l][0][:K], eigs[l][1][:, :K]),
                   restarts=c.restarts)
                for l in range(L)
            ]
        else:
            if c.khat is not None and method == "MARS-CD(K)":
                khat = c.khat
            cache = EmbeddingCache(layers, khat, tau, eigs=eigs if khat <= kmax else None)
            est = [
                mars_cd_layer(None, l, K, seed=derive_seed(seed, l), cache=cache, restarts=c.restarts).labels
                for l in range(L)
            ]
            if method == "MARS-CD(K)":
                nmi = nmi_heatmap(est)
            if c.do_align and global_truth is not None:
                al = consensus_align(est, K=K)
                rows.append((rep, GLOBAL, method, misclustering(al.global_labels, global_truth, K)))
        for l in range(L):
            rows.append((rep, l, method, misclustering(est[l], truth[l], K)))
    return {"rows": rows, "nmi": nmi}


@dataclass
class MetricReport:
    """Per-replicate errors plus aggregated means and standard errors."""

    config: ExperimentConfig
    reps: int
    seed: int
    rows: list = field(repr=False)
    nmi: np.ndarray | None = field(default=None, repr=False)

    def errors(self, method: str, layer) -> np.ndarray:
        """Errors of ``method`` on ``layer`` ordered by replicate."""
        vals = sorted((r[0], r[3]) for r in self.rows if r[2] == method and r[1] == layer)
        return np.array([v for _, v in vals])

    def per_rep_mean(self, method: str) -> np.ndarray:
        """Average over layers (excluding the global pseudo-layer) per replicate."""
        by_rep: dict[int, list[float]] = {}
        for rep, layer, m, err in self.rows:
            if m == method and layer != GLOBAL:
                by_rep.setdefault(rep, []).append(err)
        return np.array([np.mean(by_rep[r]) for r in sorted(by_rep)])

    def methods(self) -> list[str]:
        return [m for m in ALL_METHODS if any(r[2] == m for r in self.rows)]

    def layers(self) -> list:
        seen = []
        for r in self.rows:
            if r[1] not in seen:
                seen.append(r[1])
        return [l for l in seen if l != GLOBAL] + ([GLOBAL] if GLOBAL in seen else [])

    @staticmethod
    def _mean_se(x: np.ndarray) -> tuple[float, float]:
        if x.size == 0:
            return float("nan"), float("nan")
        se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
        return float(np.mean(x)), se

    def summary(self) -> list[tuple]:
        """Rows ``(method, layer, mean, se)``; layer ``"all"`` is the per-layer average."""
        out = []
        for m in self.methods():
            for layer in self.layers():
                x = self.errors(m, layer)
                if x.size:
                    out.append((m, layer, *self._mean_se(x)))
            out.append((m, "all", *self._mean_se(self.per_rep_mean(m))))
        return out

    def mean(self, method: str, layer="all") -> float:
        x = self.per_rep_mean(method) if layer == "all" else self.errors(method, layer)
        return self._mean_se(x)[0]


def monte_carlo(config: ExperimentConfig, reps: int | None = None, seed: int | None = None,
                threads: int = 1) -> MetricReport:
    """Run ``reps`` replicates with seeds derived from ``(seed, rep)``.

    The report does not depend on ``threads``: replicates are independent and
    aggregated in replicate order.
    """
    config.validate()
    reps = config.reps if reps is None else reps
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if seed is not None and seed != config.seed:
        config = ExperimentConfig.from_dict({**config.to_dict(), "seed": seed})
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            outs = list(ex.map(lambda r: run_rep(config, r), range(reps)))
    else:
        outs = [run_rep(config, r) for r in range(reps)]
    rows = [row for o in outs for row in o["rows"]]
    mats = [o["nmi"] for o in outs if o["nmi"] is not None]
    nmi = np.mean(mats, axis=0) if mats else None
    return MetricReport(config, reps, config.seed, rows, nmi)
