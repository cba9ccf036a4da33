"""Predictor network: GCN encoder, measurement MLP and row-wise feed-forward head.

Everything is plain numpy with a hand-written backward pass. A batch packs
several observed graphs into one block-diagonal normalised adjacency, so
training and acting share the same code path.

Shapes for the default widths (``C`` input channels, ``N`` stacked nodes,
``B`` graphs, ``Q`` queried frontier rows)::

    X (N, C) -> GCN -> Z (N, 64)
    context_b = [mean_{v in visited_b} Z_v, Z_{current_b}, MLP(m_b)]    (B, 192)
    phi_q     = [Z_{node_q}, context_{graph_q}]                          (Q, 256)
    out_q     = W2 relu(W1 phi_q + c1) + c2                              (Q, 8)
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

CHECKPOINT_VERSION = 1


class NumericError(FloatingPointError):
    pass


@dataclass(frozen=True)
class Architecture:
    in_dim: int = 6
    gcn: tuple[int, int] = (32, 64)
    mlp: tuple[int, int] = (64, 64)
    rff_hidden: int = 128
    out_dim: int = 8
    meas_dim: int = 1

    @property
    def rff_in(self) -> int:
        return 3 * self.gcn[1] + self.mlp[1]

    def shapes(self) -> dict[str, tuple[int, ...]]:
        g1, g2 = self.gcn
        m1, m2 = self.mlp
        return {
            "gcn_w1": (self.in_dim, g1), "gcn_b1": (g1,),
            "gcn_w2": (g1, g2), "gcn_b2": (g2,),
            "mlp_w1": (self.meas_dim, m1), "mlp_b1": (m1,),
            "mlp_w2": (m1, m2), "mlp_b2": (m2,),
            "rff_w1": (self.rff_in, self.rff_hidden), "rff_b1": (self.rff_hidden,),
            "rff_w2": (self.rff_hidden, self.out_dim), "rff_b2": (self.out_dim,),
        }


def preset(name: str, in_dim: int) -> Architecture:
    """``generated``: the base widths; ``road``: hidden widths doubled."""
    if name == "generated":
        return Architecture(in_dim=in_dim)
    if name == "road":
        return Architecture(in_dim=in_dim, gcn=(64, 128), mlp=(128, 128), rff_hidden=256)
    raise ValueError(f"unknown architecture preset {name!r}")


@dataclass
class Network:
    arch: Architecture
    params: dict[str, np.ndarray]
    preset: str = "custom"
    version: int = field(default=0, compare=False)

    @property
    def dtype(self):
        return self.params["gcn_w1"].dtype

    def copy(self) -> "Network":
        return Network(self.arch, {k: v.copy() for k, v in self.params.items()}, self.preset, self.version)


def init_network(arch: Architecture, seed: int = 0, dtype=np.float32, preset_name: str = "custom") -> Network:
    """Fan-in scaled uniform init, ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))`` for weights and biases."""
    rng = np.random.default_rng(seed)
    params = {}
    fan_in = None
    for name, shape in arch.shapes().items():
        if len(shape) == 2:
            fan_in = shape[0]
        bound = 1.0 / np.sqrt(fan_in)
        params[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
    return Network(arch, params, preset_name)


# --- inputs -------------------------------------------------------------------

@dataclass
class Observation:
    """One observed graph as the network sees it (local node ids)."""

    num_nodes: int
    edges: np.ndarray  # (k, 2) int, undirected, no duplicates
    features: np.ndarray  # (num_nodes, C)
    measurement: float
    current: int
    visited: np.ndarray  # local ids


DENSE_LIMIT = 512  # batches up to this many nodes use a dense adjacency


def _adjacency_coo(num_nodes: int, edges) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    loop = np.arange(num_nodes)
    rows = np.concatenate([edges[:, 0], edges[:, 1], loop])
    cols = np.concatenate([edges[:, 1], edges[:, 0], loop])
    deg = np.bincount(rows, minlength=num_nodes).astype(np.float64)
    return rows, cols, 1.0 / np.sqrt(deg[rows] * deg[cols])


def normalized_adjacency(num_nodes: int, edges, dtype=np.float32) -> sp.csr_matrix:
    """``D^-1/2 (A + I) D^-1/2`` as a sparse matrix."""
    rows, cols, vals = _adjacency_coo(num_nodes, edges)
    return sp.csr_matrix((vals.astype(dtype), (rows, cols)), shape=(num_nodes, num_nodes))


@dataclass
class Batch:
    adj: np.ndarray | sp.csr_matrix  # (N, N) block diagonal, symmetric
    x: np.ndarray  # (N, C)
    pool: np.ndarray  # (B, N) rows average the visited nodes of each graph
    current: np.ndarray  # (B,) global rows
    m: np.ndarray  # (B, meas_dim)
    q_rows: np.ndarray  # (Q,) global rows of queried nodes
    q_graph: np.ndarray  # (Q,) graph index of each query


def make_batch(observations: Sequence[Observation], queries: Sequence[Sequence[int]], dtype=np.float32) -> Batch:
    """Pack observations; ``queries[b]`` lists the local nodes whose predictions are wanted."""
    if len(observations) != len(queries):
        raise ValueError("one query list per observation is required")
    offsets = np.cumsum([0] + [o.num_nodes for o in observations])
    n_total = int(offsets[-1])
    width = observations[0].features.shape[1]
    rows, cols, vals = [], [], []
    pool = np.zeros((len(observations), n_total), dtype=dtype)
    xs, cur, m, q_rows, q_graph = [], [], [], [], []
    for b, o in enumerate(observations):
        if o.features.shape != (o.num_nodes, width):
            raise ValueError(f"observation {b}: features shape {o.features.shape} does not match "
                             f"({o.num_nodes}, {width})")
        visited = np.asarray(o.visited, dtype=np.int64)
        if visited.size == 0:
            raise ValueError(f"observation {b}: mean pooling needs at least one visited node")
        off = int(offsets[b])
        r, c, v = _adjacency_coo(o.num_nodes, o.edges)
        rows.append(r + off)
        cols.append(c + off)
        vals.append(v)
        pool[b, visited + off] = 1.0 / visited.size
        xs.append(o.features)
        cur.append(o.current + off)
        m.append(np.atleast_1d(o.measurement))
        q = np.asarray(queries[b], dtype=np.int64)
        if q.size and (q.min() < 0 or q.max() >= o.num_nodes):
            raise ValueError(f"observation {b}: query out of range")
        q_rows.append(q + off)
        q_graph.append(np.full(q.size, b))
    rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals).astype(dtype)
    if n_total <= DENSE_LIMIT:
        adj = np.zeros((n_total, n_total), dtype=dtype)
        adj[rows, cols] = vals
    else:
        adj = sp.csr_matrix((vals, (rows, cols)), shape=(n_total, n_total), dtype=dtype)
    return Batch(adj, np.concatenate(xs).astype(dtype, copy=False), pool, np.array(cur, dtype=np.int64),
                 np.array(m, dtype=dtype), np.concatenate(q_rows), np.concatenate(q_graph))


# --- forward / backward -------------------------------------------------------------

def _relu(a: np.ndarray) -> np.ndarray:
    return np.maximum(a, 0)


def mean_pool(z: np.ndarray) -> np.ndarray:
    if len(z) == 0:
        raise ValueError("cannot pool an empty set")
    return z.mean(axis=0)


def gcn_forward(adj, x: np.ndarray, params: dict) -> tuple[np.ndarray, tuple]:
    """Two propagation layers ``relu(A H W + b)``; returns embeddings and the cache."""
    if adj.shape[0] != x.shape[0]:
        raise ValueError("adjacency and feature rows disagree")
    if x.shape[1] != params["gcn_w1"].shape[0]:
        raise ValueError(f"expected {params['gcn_w1'].shape[0]} input channels, got {x.shape[1]}")
    p1 = adj @ (x @ params["gcn_w1"]) + params["gcn_b1"]
    h1 = _relu(p1)
    p2 = adj @ (h1 @ params["gcn_w2"]) + params["gcn_b2"]
    return _relu(p2), (p1, h1, p2)


@dataclass
class Trace:
    version: int
    batch: Batch
    gcn: tuple
    z: np.ndarray
    q1: np.ndarray
    h_m: np.ndarray
    q2: np.ndarray
    phi: np.ndarray
    r1: np.ndarray
    h_r: np.ndarray


def forward(net: Network, batch: Batch) -> tuple[np.ndarray, Trace]:
    """Predictions for every queried row, shape ``(Q, out_dim)``."""
    p = net.params
    z, cache = gcn_forward(batch.adj, batch.x, p)
    z_pool = batch.pool @ z
    z_cur = z[batch.current]
    q1 = batch.m @ p["mlp_w1"] + p["mlp_b1"]
    h_m = _relu(q1)
    q2 = h_m @ p["mlp_w2"] + p["mlp_b2"]
    z_m = _relu(q2)
    ctx = np.concatenate([z_pool, z_cur, z_m], axis=1)
    phi = np.concatenate([z[batch.q_rows], ctx[batch.q_graph]], axis=1)
    r1 = phi @ p["rff_w1"] + p["rff_b1"]
    h_r = _relu(r1)
    out = h_r @ p["rff_w2"] + p["rff_b2"]
    return out, Trace(net.version, batch, cache, z, q1, h_m, q2, phi, r1, h_r)


def backward(net: Network, trace: Trace, d_out: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every parameter, given ``dL/d out``."""
    if trace.version != net.version:
        raise ValueError("stale trace: parameters changed since the forward pass")
    p, b = net.params, trace.batch
    g = {}
    d_out = np.asarray(d_out, dtype=net.dtype)

    g["rff_w2"] = trace.h_r.T @ d_out
    g["rff_b2"] = d_out.sum(axis=0)
    d_r1 = (d_out @ p["rff_w2"].T) * (trace.r1 > 0)
    g["rff_w1"] = trace.phi.T @ d_r1
    g["rff_b1"] = d_r1.sum(axis=0)
    d_phi = d_r1 @ p["rff_w1"].T

    width = trace.z.shape[1]
    d_z = np.zeros_like(trace.z)
    np.add.at(d_z, b.q_rows, d_phi[:, :width])
    d_ctx = np.zeros((b.current.size, d_phi.shape[1] - width), dtype=d_phi.dtype)
    np.add.at(d_ctx, b.q_graph, d_phi[:, width:])
    d_z += b.pool.T @ d_ctx[:, :width]
    np.add.at(d_z, b.current, d_ctx[:, width:2 * width])
    d_zm = d_ctx[:, 2 * width:]

    d_q2 = d_zm * (trace.q2 > 0)
    g["mlp_w2"] = trace.h_m.T @ d_q2
    g["mlp_b2"] = d_q2.sum(axis=0)
    d_q1 = (d_q2 @ p["mlp_w2"].T) * (trace.q1 > 0)
    g["mlp_w1"] = b.m.T @ d_q1
    g["mlp_b1"] = d_q1.sum(axis=0)

    # the normalised adjacency is symmetric, so A^T = A
    p1, h1, p2 = trace.gcn
    d_p2 = d_z * (p2 > 0)
    g["gcn_b2"] = d_p2.sum(axis=0)
    a_dp2 = b.adj @ d_p2
    g["gcn_w2"] = h1.T @ a_dp2
    d_p1 = (a_dp2 @ p["gcn_w2"].T) * (p1 > 0)
    g["gcn_b1"] = d_p1.sum(axis=0)
    g["gcn_w1"] = b.x.T @ (b.adj @ d_p1)
    return {k: np.asarray(v, dtype=net.dtype).reshape(p[k].shape) for k, v in g.items()}


def predict(net: Network, obs: Observation, nodes: Sequence[int]) -> np.ndarray:
    """Prediction rows for ``nodes`` of a single observation."""
    out, _ = forward(net, make_batch([obs], [nodes], net.dtype))
    return out


# --- optimisation -----------------------------------------------------------------

class Adam:
    def __init__(self, net: Network, lr: float = 1e-4, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in net.params.items()}
        self.v = {k: np.zeros_like(v) for k, v in net.params.items()}
        self.t = 0

    def step(self, net: Network, grads: dict[str, np.ndarray]) -> None:
        """Bias-corrected Adam update of ``net`` in place."""
        for k, gk in grads.items():
            if gk.shape != net.params[k].shape:
                raise ValueError(f"gradient shape mismatch for {k}")
            if not np.all(np.isfinite(gk)):
                raise NumericError(f"non-finite gradient for {k}")
        self.t += 1
        c1 = 1 - self.beta1 ** self.t
        c2 = 1 - self.beta2 ** self.t
        for k, gk in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * gk
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * gk * gk
            step = self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
            net.params[k] = (net.params[k] - step).astype(net.params[k].dtype)
        net.version += 1


# --- checkpoints -------------------------------------------------------------------

def save_checkpoint(path, net: Network, extra: dict | None = None) -> None:
    """Write an ``.npz`` container; ``extra`` holds JSON-serialisable settings."""
    meta = {"version": CHECKPOINT_VERSION, "preset": net.preset, "arch": asdict(net.arch),
            "extra": extra or {}}
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
                 **net.params)


def load_checkpoint(path, with_extra: bool = False):
    with np.load(Path(path), allow_pickle=False) as data:
        meta = json.loads(data["__meta__"].tobytes().decode())
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        a = meta["arch"]
        arch = Architecture(a["in_dim"], tuple(a["gcn"]), tuple(a["mlp"]), a["rff_hidden"],
                            a["out_dim"], a["meas_dim"])
        params = {k: data[k].copy() for k in arch.shapes()}
    for k, shape in arch.shapes().items():
        if params[k].shape != shape:
            raise ValueError(f"checkpoint parameter {k} has shape {params[k].shape}, expected {shape}")
    net = Network(arch, params, meta["preset"])
    return (net, meta.get("extra", {})) if with_extra else net
