"""Procedural graph families, road-network ingestion and train/test splits.

Family parameter ranges are chosen so node/edge counts land inside the
envelopes of the reference data sets:

=========  ===========================================  ===========  ============
family     construction                                 |V|          |E|
=========  ===========================================  ===========  ============
barabasi   preferential attachment, 4 edges per node    100..199     384..780
ladder     ladder with 100..199 rungs                   200..398     298..595
tree       balanced r-ary trees from a fixed shape list 121..1365    |V|-1
grid       rows x cols lattice, sides 8..17             64..289      112..544
caveman    connected caveman, 2..4 cliques of 30..79    60..316      870..12324
maze       perfect maze on a 7..11 x 7..11 cell lattice 97..255      96..268
           (cells and passages are nodes) + 0..14 loops
=========  ===========================================  ===========  ============

Node ids are randomly permuted (seeded). The natural construction orders
(row-major lattices, breadth-first trees) would otherwise make id-based tie
breaking sweep the graph in a systematically favourable order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from .graph import Graph, is_connected, largest_component

FAMILIES = ("barabasi", "ladder", "tree", "grid", "caveman", "maze")

# (branching, height): 121, 1365, 364, 1093, 1023 and 341 nodes
TREE_SHAPES = ((3, 4), (4, 5), (3, 5), (3, 6), (2, 9), (4, 4))

# Reference data set sizes (train + test).
FAMILY_SIZES = {"barabasi": 500, "ladder": 100, "tree": 6, "grid": 100, "caveman": 150, "maze": 500}


class GraphFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class GraphSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    shuffle: bool = True  # random dense relabelling, so id tie-breaks carry no structure


@dataclass
class GeoGraph:
    graph: Graph
    coords: np.ndarray  # (num_nodes, 2)

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        if len(self.coords) != self.graph.num_nodes:
            raise ValueError("coords length must equal num_nodes")

    def subgraph(self, nodes) -> "GeoGraph":
        g, kept = self.graph.subgraph(nodes)
        return GeoGraph(g, self.coords[kept])


@dataclass
class Dataset:
    train: list[Graph]
    test: list[Graph]
    test_sources: list[list[int]]
    name: str = ""

    def eval_pairs(self) -> list[tuple[int, int]]:
        """Fixed ``(test graph index, source)`` evaluation pairs."""
        return [(i, s) for i, sources in enumerate(self.test_sources) for s in sources]


def _from_nx(g: nx.Graph) -> Graph:
    g = nx.convert_node_labels_to_integers(g, ordering="sorted")
    return Graph.from_edges(g.number_of_nodes(), g.edges())


def _maze(cols: int, rows: int, loops: int, rng: np.random.Generator) -> Graph:
    # Cells sit at even pixel coordinates, passages between them at odd ones.
    visited = np.zeros((rows, cols), dtype=bool)
    passages: set[tuple[int, int]] = set()
    stack = [(0, 0)]
    visited[0, 0] = True
    while stack:
        r, c = stack[-1]
        options = [(r + dr, c + dc) for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1))
                   if 0 <= r + dr < rows and 0 <= c + dc < cols and not visited[r + dr, c + dc]]
        if not options:
            stack.pop()
            continue
        nr, nc = options[int(rng.integers(len(options)))]
        visited[nr, nc] = True
        passages.add((r + nr, c + nc))  # doubled midpoint
        stack.append((nr, nc))

    walls = sorted({(r + nr, c + nc)
                    for r in range(rows) for c in range(cols)
                    for nr, nc in ((r + 1, c), (r, c + 1)) if nr < rows and nc < cols} - passages)
    for i in rng.choice(len(walls), size=min(loops, len(walls)), replace=False):
        passages.add(walls[int(i)])

    pixels = sorted({(2 * r, 2 * c) for r in range(rows) for c in range(cols)} | passages)
    index = {p: i for i, p in enumerate(pixels)}
    edges = []
    for (y, x) in passages:
        if y % 2:  # vertical passage
            edges += [(index[(y, x)], index[(y - 1, x)]), (index[(y, x)], index[(y + 1, x)])]
        else:
            edges += [(index[(y, x)], index[(y, x - 1)]), (index[(y, x)], index[(y, x + 1)])]
    return Graph.from_edges(len(pixels), edges)


def sample_spec(family: str, rng: np.random.Generator, index: int = 0) -> GraphSpec:
    """Draw family parameters from the documented ranges."""
    seed = int(rng.integers(2**31))
    if family == "barabasi":
        params = {"n": int(rng.integers(100, 200)), "m": 4}
    elif family == "ladder":
        params = {"rungs": int(rng.integers(100, 200))}
    elif family == "tree":
        b, h = TREE_SHAPES[index % len(TREE_SHAPES)]
        params = {"branching": b, "height": h}
    elif family == "grid":
        params = {"rows": int(rng.integers(8, 18)), "cols": int(rng.integers(8, 18))}
    elif family == "caveman":
        params = {"cliques": int(rng.integers(2, 5)), "clique_size": int(rng.integers(30, 80))}
    elif family == "maze":
        params = {"cols": int(rng.integers(7, 12)), "rows": int(rng.integers(7, 12)),
                  "loops": int(rng.integers(0, 15))}
    else:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    return GraphSpec(family, params, seed)


def generate(spec: GraphSpec) -> Graph:
    """Build one connected graph; deterministic in ``spec``."""
    p = spec.params
    try:
        if spec.family == "barabasi":
            if not 1 <= p["m"] < p["n"]:
                raise ValueError("barabasi needs 1 <= m < n")
            g = _from_nx(nx.barabasi_albert_graph(p["n"], p["m"], seed=spec.seed))
        elif spec.family == "ladder":
            if p["rungs"] < 1:
                raise ValueError("ladder needs at least one rung")
            g = _from_nx(nx.ladder_graph(p["rungs"]))
        elif spec.family == "tree":
            if p["branching"] < 1 or p["height"] < 0:
                raise ValueError("tree needs branching >= 1 and height >= 0")
            g = _from_nx(nx.balanced_tree(p["branching"], p["height"]))
        elif spec.family == "grid":
            if p["rows"] < 1 or p["cols"] < 1:
                raise ValueError("grid sides must be positive")
            g = _from_nx(nx.grid_2d_graph(p["rows"], p["cols"]))
        elif spec.family == "caveman":
            if p["cliques"] < 2 or p["clique_size"] < 2:
                raise ValueError("caveman needs >= 2 cliques of size >= 2")
            g = _from_nx(nx.connected_caveman_graph(p["cliques"], p["clique_size"]))
        elif spec.family == "maze":
            if p["rows"] < 1 or p["cols"] < 1 or p["loops"] < 0:
                raise ValueError("maze needs positive sides and non-negative loops")
            g = _maze(p["cols"], p["rows"], p["loops"], np.random.default_rng(spec.seed))
        else:
            raise ValueError(f"unknown family {spec.family!r}; expected one of {FAMILIES}")
    except KeyError as exc:
        raise ValueError(f"missing parameter {exc.args[0]!r} for family {spec.family!r}") from None
    assert is_connected(g), spec
    if spec.shuffle:
        g = g.relabel(np.random.default_rng([spec.seed, 1]).permutation(g.num_nodes))
    return g


def generate_family(family: str, count: int | None = None, seed: int = 0) -> list[Graph]:
    count = FAMILY_SIZES[family] if count is None else count
    rng = np.random.default_rng(seed)
    return [generate(sample_spec(family, rng, i)) for i in range(count)]


# --- files -------------------------------------------------------------------

def read_graph_file(path) -> tuple[Graph, np.ndarray | None]:
    """Parse ``N id [x y]`` / ``E u v`` lines.

    Ids are arbitrary tokens relabelled densely in order of first ``N`` line.
    Edges are symmetrised, duplicates and self-loops dropped. Coordinates are
    returned only if every node has them.
    """
    index: dict[str, int] = {}
    coords: list[tuple[float, float] | None] = []
    edges = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            kind = parts[0]
            if kind == "N" and len(parts) in (2, 4):
                if parts[1] in index:
                    raise GraphFormatError(f"duplicate node {parts[1]!r}", lineno)
                index[parts[1]] = len(index)
                if len(parts) == 4:
                    try:
                        coords.append((float(parts[2]), float(parts[3])))
                    except ValueError:
                        raise GraphFormatError("bad coordinate", lineno) from None
                else:
                    coords.append(None)
            elif kind == "E" and len(parts) == 3:
                try:
                    edges.append((index[parts[1]], index[parts[2]]))
                except KeyError as exc:
                    raise GraphFormatError(f"edge references unknown node {exc.args[0]!r}", lineno) from None
            else:
                raise GraphFormatError(f"malformed line {raw.strip()!r}", lineno)
    if not index:
        raise GraphFormatError(f"{path}: graph is empty")
    g = Graph.from_edges(len(index), edges)
    xy = np.array(coords, dtype=float) if all(c is not None for c in coords) else None
    return g, xy


def write_graph_file(path, graph: Graph, coords=None) -> None:
    with open(path, "w") as fh:
        for v in range(graph.num_nodes):
            if coords is None:
                fh.write(f"N {v}\n")
            else:
                fh.write(f"N {v} {float(coords[v][0])!r} {float(coords[v][1])!r}\n")
        for u, v in graph.edges():
            fh.write(f"E {u} {v}\n")


def load_geo_graph(path) -> GeoGraph:
    """Load a road network, keeping its largest connected component."""
    g, xy = read_graph_file(path)
    if xy is None:
        raise GraphFormatError(f"{path}: road networks need coordinates on every N line")
    geo = GeoGraph(g, xy)
    return geo.subgraph(largest_component(g))


def diagonal_split(geo: GeoGraph) -> tuple[GeoGraph, GeoGraph]:
    """Cut along the bounding-box diagonal; returns ``(train, test)``.

    The side of each point is the sign of its cross product with the diagonal
    from the lower-left to the upper-right corner. Points exactly on the
    diagonal go to the positive side if they lie in its first half, else to the
    negative side. Cross edges are dropped and each side keeps its largest
    component; the larger side is the training graph.
    """
    xy = geo.coords
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    d = hi - lo
    rel = xy - lo
    cross = d[0] * rel[:, 1] - d[1] * rel[:, 0]
    scale = max(float(np.abs(d).max()), 1e-300)
    on_line = np.abs(cross) <= 1e-12 * scale * scale
    if on_line.all():
        raise ValueError("degenerate bounding box: all points are collinear with the diagonal")
    along = rel @ d / max(float(d @ d), 1e-300)
    positive = np.where(on_line, along < 0.5, cross > 0)

    sides = []
    for mask in (positive, ~positive):
        nodes = np.flatnonzero(mask).tolist()
        if not nodes:
            raise ValueError("diagonal split leaves one side empty")
        side = geo.subgraph(nodes)
        sides.append(side.subgraph(largest_component(side.graph)))
    sides.sort(key=lambda s: -s.graph.num_nodes)
    return sides[0], sides[1]


# --- data sets -----------------------------------------------------------------

def _test_count(n: int, ratio: float) -> int:
    return min(max(math.ceil(n * ratio - 1e-9), 1), n - 1)


def make_dataset(graphs: list[Graph], test_ratio: float = 0.2, n_eval: int = 50, seed: int = 0,
                 name: str = "") -> Dataset:
    """Shuffle-split ``graphs`` and fix ``n_eval`` evaluation sources on the test part."""
    if not 0 < test_ratio < 1:
        raise ValueError("test_ratio must lie in (0, 1)")
    if len(graphs) < 2:
        raise ValueError("need at least two graphs to split")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(graphs))
    n_test = _test_count(len(graphs), test_ratio)
    test = [graphs[i] for i in order[:n_test]]
    train = [graphs[i] for i in order[n_test:]]
    return Dataset(train, test, fix_sources(test, n_eval, rng), name)


def fix_sources(test: list[Graph], n_eval: int, rng: np.random.Generator) -> list[list[int]]:
    sources: list[list[int]] = [[] for _ in test]
    if len(test) >= n_eval:
        for i in sorted(rng.choice(len(test), size=n_eval, replace=False)):
            sources[i].append(int(rng.integers(test[i].num_nodes)))
    else:
        offsets = np.cumsum([0] + [g.num_nodes for g in test])
        total = int(offsets[-1])
        picks = rng.choice(total, size=n_eval, replace=n_eval > total)
        for p in np.sort(picks):
            i = int(np.searchsorted(offsets, p, side="right") - 1)
            sources[i].append(int(p - offsets[i]))
    return sources


def road_dataset(geo: GeoGraph, n_eval: int = 50, seed: int = 0, name: str = "") -> Dataset:
    train, test = diagonal_split(geo)
    rng = np.random.default_rng(seed)
    return Dataset([train.graph], [test.graph], fix_sources([test.graph], n_eval, rng), name)


MANIFEST = "manifest.txt"


def save_dataset(ds: Dataset, directory) -> Path:
    """Write graphs plus a line-oriented manifest (``train``/``test``/``eval`` lines)."""
    directory = Path(directory)
    (directory / "graphs").mkdir(parents=True, exist_ok=True)
    lines = ["# graphexplore dataset v1"]
    if ds.name:
        lines.append(f"name {ds.name}")
    for split, graphs in (("train", ds.train), ("test", ds.test)):
        for i, g in enumerate(graphs):
            rel = f"graphs/{split}_{i:04d}.graph"
            write_graph_file(directory / rel, g)
            lines.append(f"{split} {rel}")
    lines += [f"eval {i} {s}" for i, s in ds.eval_pairs()]
    (directory / MANIFEST).write_text("\n".join(lines) + "\n")
    return directory / MANIFEST


def load_dataset(directory) -> Dataset:
    directory = Path(directory)
    path = directory / MANIFEST if directory.is_dir() else directory
    directory = path.parent
    name, train, test, pairs = "", [], [], []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "name" and len(parts) == 2:
            name = parts[1]
        elif parts[0] in ("train", "test") and len(parts) == 2:
            (train if parts[0] == "train" else test).append(read_graph_file(directory / parts[1])[0])
        elif parts[0] == "eval" and len(parts) == 3:
            pairs.append((int(parts[1]), int(parts[2])))
        else:
            raise GraphFormatError(f"malformed manifest line {raw.strip()!r}", lineno)
    sources: list[list[int]] = [[] for _ in test]
    for i, s in pairs:
        if not (0 <= i < len(test) and 0 <= s < test[i].num_nodes):
            raise GraphFormatError(f"eval pair ({i}, {s}) out of range")
        sources[i].append(s)
    return Dataset(train, test, sources, name or directory.name)
