"""Citation-network ingestion (LINQS plain-text format), feature scaling,
stratified label sampling, and an optional binary graph cache.

Loaders are pure; every returned Graph is immutable. Network access is out
of scope: file paths are supplied by the caller (see scripts/fetch_cora.sh).
"""

import hashlib
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sparse import CsrMatrix, Graph, build_graph

FEATURE_MODES = ("none", "row_normalize")

# loader self-checks: (nodes, feature dim, classes)
KNOWN_DATASETS = {
    "cora": (2708, 1433, 7),
    "citeseer": (3312, 3703, 6),
}


@dataclass(frozen=True)
class DatasetSource:
    """Paths to one dataset's .content and .cites files."""

    content_path: Path
    cites_path: Path
    name: str


@dataclass(frozen=True)
class SplitSpec:
    """Label budget per class, test-set size, and the sampling seed."""

    labels_per_class: int
    test_size: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.labels_per_class < 1:
            raise ValueError("labels_per_class must be >= 1")
        if self.test_size < 1:
            raise ValueError("test_size must be >= 1")


def resolve_dataset(dataset: str, data_dir: str) -> DatasetSource:
    """Map a dataset argument (known name or directory path) to file paths.

    Known names look under ``<data_dir>/<name>/<name>.content``; anything
    else is treated as a directory containing exactly one ``*.content``.
    """
    if dataset.lower() in KNOWN_DATASETS:
        name = dataset.lower()
        base = Path(data_dir) / name
        content, cites = base / f"{name}.content", base / f"{name}.cites"
    else:
        base = Path(dataset)
        matches = sorted(base.glob("*.content")) if base.is_dir() else []
        if len(matches) != 1:
            raise ValueError(
                f"dataset {dataset!r} is not a known name and is not a "
                f"directory with exactly one .content file")
        content = matches[0]
        cites = content.with_suffix(".cites")
        name = content.stem
    for path in (content, cites):
        if not path.is_file():
            raise ValueError(
                f"dataset file not found: {path} "
                f"(fetch the data or point --data-dir at it)")
    return DatasetSource(content, cites, name)


def load_linqs(src: DatasetSource) -> Graph:
    """Parse .content/.cites files into a Graph.

    String node ids become dense indices in file order; class names map to
    0..k-1 in lexicographic order; citation edges are symmetrized and any
    referencing an unknown id are dropped with a single count warning.
    """
    ids, rows, names = [], [], []
    n_cols = None
    with open(src.content_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if n_cols is None:
                n_cols = len(fields)
                if n_cols < 3:
                    raise ValueError(
                        f"{src.content_path}:{lineno}: expected "
                        f"`id w_1..w_C class`, got {n_cols} columns")
            if len(fields) != n_cols:
                raise ValueError(
                    f"{src.content_path}:{lineno}: expected {n_cols} "
                    f"columns, got {len(fields)}")
            ids.append(fields[0])
            rows.append(np.array(fields[1:-1], dtype=np.float64))
            names.append(fields[-1])
    if n_cols is None:
        raise ValueError(f"{src.content_path}: empty .content file")

    index = {node_id: i for i, node_id in enumerate(ids)}
    if len(index) != len(ids):
        raise ValueError(f"{src.content_path}: duplicate node ids")
    class_names = sorted(set(names))
    class_index = {c: i for i, c in enumerate(class_names)}
    features = np.stack(rows)
    labels = np.array([class_index[c] for c in names], dtype=np.int64)

    edges, dropped = [], 0
    with open(src.cites_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 2:
                raise ValueError(
                    f"{src.cites_path}:{lineno}: expected `cited citing`, "
                    f"got {len(fields)} columns")
            cited, citing = fields
            if cited in index and citing in index:
                edges.append((index[cited], index[citing]))
            else:
                dropped += 1
    if dropped:
        warnings.warn(
            f"{src.name}: dropped {dropped} citation(s) referencing "
            f"unknown node ids", stacklevel=2)

    graph = build_graph(edges, features, labels)
    expected = KNOWN_DATASETS.get(src.name)
    if expected is not None:
        got = (graph.num_nodes, features.shape[1], graph.num_classes)
        if got != expected:
            raise ValueError(
                f"{src.name}: loaded (nodes, features, classes)={got}, "
                f"expected {expected}; dataset files look corrupted")
    return graph


def preprocess_features(g: Graph, mode: str = "row_normalize") -> Graph:
    """Feature scaling. row_normalize divides each row by its L1 norm
    (zero rows untouched); none returns the graph unchanged."""
    if mode not in FEATURE_MODES:
        raise ValueError(f"unknown feature mode {mode!r}; "
                         f"expected one of {FEATURE_MODES}")
    if mode == "none":
        return g
    norms = np.abs(g.features).sum(axis=1, keepdims=True)
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return Graph(g.adjacency, g.features * scale, g.labels,
                 g.num_classes, g.num_edges)


def stratified_split(g: Graph, spec: SplitSpec):
    """Sample ``labels_per_class`` train ids uniformly per class, then
    ``test_size`` test ids from the remaining labeled nodes. Disjoint,
    deterministic given the seed."""
    labeled = np.flatnonzero(g.labels >= 0)
    needed = spec.labels_per_class * g.num_classes + spec.test_size
    if needed > labeled.size:
        raise ValueError(
            f"split needs {needed} labeled nodes, graph has {labeled.size}")
    rng = np.random.default_rng(spec.seed)
    picks = []
    for c in range(g.num_classes):
        members = np.flatnonzero(g.labels == c)
        if members.size < spec.labels_per_class:
            raise ValueError(
                f"class {c} has {members.size} nodes, "
                f"need {spec.labels_per_class}")
        picks.append(rng.choice(members, size=spec.labels_per_class,
                                replace=False))
    train_ids = np.sort(np.concatenate(picks))
    remaining = np.setdiff1d(labeled, train_ids, assume_unique=True)
    if remaining.size < spec.test_size:
        raise ValueError(
            f"only {remaining.size} nodes left for a test set of "
            f"{spec.test_size}")
    test_ids = np.sort(rng.choice(remaining, size=spec.test_size,
                                  replace=False))
    return train_ids, test_ids


def _file_digest(path: Path, h) -> None:
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)


def content_hash(src: DatasetSource) -> str:
    """Hex digest of both dataset files; keys the binary cache."""
    h = hashlib.sha256()
    _file_digest(src.content_path, h)
    _file_digest(src.cites_path, h)
    return h.hexdigest()


def save_graph_cache(g: Graph, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(
        path,
        row_offsets=g.adjacency.row_offsets,
        col_indices=g.adjacency.col_indices,
        values=g.adjacency.values,
        features=g.features,
        labels=g.labels,
        meta=np.array([g.adjacency.n_rows, g.adjacency.n_cols,
                       g.num_classes, g.num_edges], dtype=np.int64))


def load_graph_cache(path: Path) -> Graph:
    with np.load(path) as data:
        n_rows, n_cols, num_classes, num_edges = (int(v) for v in data["meta"])
        adjacency = CsrMatrix(n_rows, n_cols,
                              data["row_offsets"], data["col_indices"],
                              data["values"])
        return Graph(adjacency, data["features"], data["labels"],
                     num_classes, num_edges)


def load_dataset(dataset: str, data_dir: str = "data",
                 features: str = "row_normalize",
                 use_cache: bool = True) -> Graph:
    """Resolve, load (through the cache when possible), and preprocess."""
    src = resolve_dataset(dataset, data_dir)
    graph = None
    if use_cache:
        cache = Path(data_dir) / ".cache" / (
            f"{src.name}-{content_hash(src)[:16]}.npz")
        if cache.is_file():
            graph = load_graph_cache(cache)
    if graph is None:
        graph = load_linqs(src)
        if use_cache:
            save_graph_cache(graph, cache)
    return preprocess_features(graph, features)
