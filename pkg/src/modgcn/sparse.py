"""Sparse graph core: CSR matrices, graph construction, filter supports,
and the lazily-applied modularity operator.

Dense matrices throughout the package are float64 numpy arrays in row-major
order. CSR index arrays are int64.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels

UNLABELED = -1


@dataclass(frozen=True)
class CsrMatrix:
    """Compressed-sparse-row real matrix in canonical form.

    Canonical means: row_offsets is non-decreasing with row_offsets[0] = 0
    and row_offsets[-1] = nnz, column indices are strictly increasing within
    each row, and no explicit zeros are stored.
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return len(self.values)

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals) -> "CsrMatrix":
        """Build a canonical CSR matrix from coordinate triplets.

        Duplicate coordinates are summed; entries that are exactly zero
        after summation are dropped.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if len(rows) and (rows.min() < 0 or rows.max() >= n_rows):
            raise ValueError("row index out of range")
        if len(cols) and (cols.min() < 0 or cols.max() >= n_cols):
            raise ValueError("column index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            new_group = np.empty(len(rows), dtype=bool)
            new_group[0] = True
            new_group[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            group_ids = np.cumsum(new_group) - 1
            vals = np.bincount(group_ids, weights=vals)
            rows, cols = rows[new_group], cols[new_group]
        keep = vals != 0.0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        offsets = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n_rows), out=offsets[1:])
        return cls(n_rows, n_cols, offsets, cols, vals)

    @classmethod
    def from_dense(cls, arr) -> "CsrMatrix":
        arr = np.asarray(arr, dtype=np.float64)
        rows, cols = np.nonzero(arr)
        return cls.from_coo(arr.shape[0], arr.shape[1], rows, cols, arr[rows, cols])

    @classmethod
    def identity(cls, n) -> "CsrMatrix":
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        rows = np.repeat(np.arange(self.n_rows), np.diff(self.row_offsets))
        out[rows, self.col_indices] = self.values
        return out

    def transpose(self) -> "CsrMatrix":
        rows = np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_offsets))
        return CsrMatrix.from_coo(self.n_cols, self.n_rows, self.col_indices, rows, self.values)

    def scaled(self, c: float) -> "CsrMatrix":
        if c == 0.0:
            return CsrMatrix.from_coo(self.n_rows, self.n_cols, [], [], [])
        return CsrMatrix(self.n_rows, self.n_cols, self.row_offsets,
                         self.col_indices, self.values * c)

    def dot(self, x: np.ndarray) -> np.ndarray:
        """self @ x for dense x of shape (n_cols, p) or (n_cols,)."""
        if x.ndim == 1:
            return self.dot(x[:, None])[:, 0]
        return kernels.csr_dense_matmul(self.n_rows, self.n_cols, self.row_offsets,
                                        self.col_indices, self.values, x)

    def tdot(self, x: np.ndarray) -> np.ndarray:
        """self.T @ x for dense x of shape (n_rows, p) or (n_rows,)."""
        if x.ndim == 1:
            return self.tdot(x[:, None])[:, 0]
        return kernels.csr_dense_matmul_t(self.n_rows, self.n_cols, self.row_offsets,
                                          self.col_indices, self.values, x)

    def validate(self) -> None:
        """Raise ValueError if any canonical-form invariant is violated."""
        off, cols, vals = self.row_offsets, self.col_indices, self.values
        if len(off) != self.n_rows + 1 or off[0] != 0 or off[-1] != len(vals):
            raise ValueError("row_offsets inconsistent with stored entries")
        if np.any(np.diff(off) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        if len(cols) != len(vals):
            raise ValueError("col_indices and values length mismatch")
        for i in range(self.n_rows):
            row_cols = cols[off[i]:off[i + 1]]
            if len(row_cols) and np.any(np.diff(row_cols) <= 0):
                raise ValueError(f"column indices not strictly increasing in row {i}")
        if np.any(vals == 0.0):
            raise ValueError("explicit zero stored")


def sparse_add(a: CsrMatrix, b: CsrMatrix, ca: float = 1.0, cb: float = 1.0) -> CsrMatrix:
    """ca*a + cb*b as a canonical CSR matrix (exact zeros dropped)."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} + {b.shape}")
    rows_a = np.repeat(np.arange(a.n_rows, dtype=np.int64), np.diff(a.row_offsets))
    rows_b = np.repeat(np.arange(b.n_rows, dtype=np.int64), np.diff(b.row_offsets))
    return CsrMatrix.from_coo(
        a.n_rows, a.n_cols,
        np.concatenate([rows_a, rows_b]),
        np.concatenate([a.col_indices, b.col_indices]),
        np.concatenate([ca * a.values, cb * b.values]),
    )


def sparse_matmul(a: CsrMatrix, b: CsrMatrix) -> CsrMatrix:
    """a @ b as a canonical CSR matrix (row-by-row merge).

    Used for precomputing Chebyshev supports; not a training-time hot path.
    """
    if a.n_cols != b.n_rows:
        raise ValueError(f"shape mismatch: {a.shape} @ {b.shape}")
    out_rows, out_cols, out_vals = [], [], []
    bo, bc, bv = b.row_offsets, b.col_indices, b.values
    for i in range(a.n_rows):
        lo, hi = a.row_offsets[i], a.row_offsets[i + 1]
        if lo == hi:
            continue
        cols_i = np.concatenate([bc[bo[j]:bo[j + 1]] for j in a.col_indices[lo:hi]])
        if len(cols_i) == 0:
            continue
        vals_i = np.concatenate([
            v * bv[bo[j]:bo[j + 1]]
            for j, v in zip(a.col_indices[lo:hi], a.values[lo:hi])
        ])
        uniq, inverse = np.unique(cols_i, return_inverse=True)
        summed = np.bincount(inverse, weights=vals_i)
        keep = summed != 0.0
        out_cols.append(uniq[keep])
        out_vals.append(summed[keep])
        out_rows.append(np.full(int(keep.sum()), i, dtype=np.int64))
    if not out_rows:
        return CsrMatrix.from_coo(a.n_rows, b.n_cols, [], [], [])
    return CsrMatrix.from_coo(
        a.n_rows, b.n_cols,
        np.concatenate(out_rows), np.concatenate(out_cols), np.concatenate(out_vals),
    )


@dataclass(frozen=True)
class Graph:
    """Undirected attributed graph.

    adjacency is symmetric, binary, zero-diagonal CSR; features is a dense
    (n, C) float64 array; labels holds class ids in 0..num_classes-1 with
    UNLABELED (-1) for nodes without a label.
    """

    adjacency: CsrMatrix
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    num_edges: int

    @property
    def num_nodes(self) -> int:
        return self.adjacency.n_rows


@dataclass(frozen=True)
class DegreeVector:
    """Unweighted node degrees k_i; sum(degrees) == 2 * num_edges."""

    degrees: np.ndarray


def build_graph(edge_list, features, labels) -> Graph:
    """Assemble a Graph from an undirected edge list.

    Self-loops are dropped, duplicate edges (in either orientation) are
    deduplicated, and the adjacency is symmetrized.
    """
    features = np.ascontiguousarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    n = features.shape[0]
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != n:
        raise ValueError(f"label list length {len(labels)} != node count {n}")
    edges = np.asarray(list(edge_list), dtype=np.int64).reshape(-1, 2)
    if len(edges) and (edges.min() < 0 or edges.max() >= n):
        raise ValueError("node id out of range in edge list")
    edges = edges[edges[:, 0] != edges[:, 1]]  # drop self-loops
    both = np.concatenate([edges, edges[:, ::-1]])
    adjacency = CsrMatrix.from_coo(n, n, both[:, 0], both[:, 1], np.ones(len(both)))
    # duplicates were summed during canonicalization; reset to binary
    adjacency = CsrMatrix(n, n, adjacency.row_offsets, adjacency.col_indices,
                          np.ones(adjacency.nnz))
    num_classes = int(labels.max()) + 1 if np.any(labels != UNLABELED) else 0
    return Graph(adjacency, features, labels, num_classes, adjacency.nnz // 2)


def degree_vector(g: Graph) -> DegreeVector:
    return DegreeVector(np.diff(g.adjacency.row_offsets).astype(np.float64))


def gcn_support(g: Graph) -> CsrMatrix:
    """Self-loop-augmented symmetric normalization Dt^{-1/2}(A+I)Dt^{-1/2}."""
    a_tilde = sparse_add(g.adjacency, CsrMatrix.identity(g.num_nodes))
    d_tilde = degree_vector(g).degrees + 1.0
    return _scale_sym(a_tilde, 1.0 / np.sqrt(d_tilde))


def normalized_laplacian(g: Graph) -> CsrMatrix:
    """I - D^{-1/2} A D^{-1/2}; rows of isolated nodes reduce to the identity."""
    d = degree_vector(g).degrees
    s = np.zeros_like(d)
    nz = d > 0
    s[nz] = 1.0 / np.sqrt(d[nz])
    return sparse_add(_scale_sym(g.adjacency, s), CsrMatrix.identity(g.num_nodes), ca=-1.0)


def _scale_sym(m: CsrMatrix, s: np.ndarray) -> CsrMatrix:
    """Entrywise s_i * m_ij * s_j."""
    rows = np.repeat(np.arange(m.n_rows), np.diff(m.row_offsets))
    return CsrMatrix(m.n_rows, m.n_cols, m.row_offsets, m.col_indices,
                     m.values * s[rows] * s[m.col_indices])


def _check_modularity_args(g: Graph, h: np.ndarray) -> np.ndarray:
    if g.num_edges == 0:
        raise ValueError("empty graph: modularity undefined when e = 0")
    h = np.asarray(h, dtype=np.float64)
    if h.ndim == 1:
        h = h[:, None]
    if h.shape[0] != g.num_nodes:
        raise ValueError(f"assignment matrix has {h.shape[0]} rows, expected {g.num_nodes}")
    return h


def modularity_apply(g: Graph, degrees: DegreeVector, h: np.ndarray) -> np.ndarray:
    """B @ H for the modularity matrix B = A - k k^T / 2e, applied lazily.

    The dense B is never formed: cost is O(nnz(A) * p + n * p).
    """
    h = _check_modularity_args(g, h)
    k = degrees.degrees
    two_e = 2.0 * g.num_edges
    return g.adjacency.dot(h) - np.outer(k, k @ h) / two_e


def modularity_trace(g: Graph, degrees: DegreeVector, h: np.ndarray) -> float:
    """Raw partition score tr(H^T B H)."""
    h = _check_modularity_args(g, h)
    return float(np.sum(h * modularity_apply(g, degrees, h)))


def modularity_score(g: Graph, degrees: DegreeVector, h: np.ndarray) -> float:
    """Normalized modularity Q = tr(H^T B H) / 2e."""
    return modularity_trace(g, degrees, h) / (2.0 * g.num_edges)
