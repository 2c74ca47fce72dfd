"""CSR matmul kernels with a compiled core and a NumPy fallback.

The backend is chosen once at import time: the Cython extension if it was
built, else the pure-NumPy implementation. ``MODGCN_KERNELS=py|cy`` in the
environment forces a choice; :func:`set_backend` exists for tests and
benchmarks. Both backends produce deterministic results for a fixed input.
"""

import os

import numpy as np

from . import _csr_np

try:
    from . import _csr_cy
except ImportError:
    _csr_cy = None

_BACKENDS = {"numpy": _csr_np}
if _csr_cy is not None:
    _BACKENDS["cython"] = _csr_cy

_ALIASES = {"py": "numpy", "cy": "cython", "auto": None}


def available_backends():
    return sorted(_BACKENDS)


def set_backend(name):
    """Select the kernel backend ('numpy' or 'cython'). Returns the old name."""
    global _active, _active_name
    name = _ALIASES.get(name, name)
    if name is None:
        name = "cython" if _csr_cy is not None else "numpy"
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; available: {available_backends()}")
    old = _active_name
    _active_name = name
    _active = _BACKENDS[name]
    return old


def backend_name():
    return _active_name


_active_name = None
_active = None
set_backend(os.environ.get("MODGCN_KERNELS", "auto"))


def _as_dense(x, width_src):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"dense operand must be 2-D, got shape {x.shape}")
    return x


def csr_dense_matmul(n_rows, n_cols, indptr, indices, data, x):
    """A @ x where A is (n_rows, n_cols) CSR and x is dense (n_cols, p)."""
    x = _as_dense(x, n_cols)
    if x.shape[0] != n_cols:
        raise ValueError(f"shape mismatch: ({n_rows}, {n_cols}) @ {x.shape}")
    out = np.zeros((n_rows, x.shape[1]))
    _active.spmm(indptr, indices, data, x, out)
    return out


def csr_dense_matmul_t(n_rows, n_cols, indptr, indices, data, x):
    """A.T @ x where A is (n_rows, n_cols) CSR and x is dense (n_rows, p)."""
    x = _as_dense(x, n_rows)
    if x.shape[0] != n_rows:
        raise ValueError(f"shape mismatch: ({n_cols}, {n_rows}) @ {x.shape}")
    out = np.zeros((n_cols, x.shape[1]))
    _active.spmm_t(indptr, indices, data, x, out)
    return out
