"""Compare the compiled CSR kernels against the NumPy fallback.

Times A @ X and A.T @ X on random sparse matrices across a size sweep,
then one full training epoch per backend. Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --sizes 1000,5000 --repeats 20
"""

import argparse
import time

import numpy as np

from modgcn import kernels
from modgcn.harness import Split, train_once
from modgcn.model import ModelSpec
from modgcn.sparse import CsrMatrix, build_graph


def random_csr(rng: np.random.Generator, n: int, density: float) -> CsrMatrix:
    nnz = max(1, int(n * n * density))
    rows = rng.integers(0, n, size=nnz)
    cols = rng.integers(0, n, size=nnz)
    return CsrMatrix.from_coo(n, n, rows, cols, rng.standard_normal(nnz))


def time_call(fn, repeats: int) -> float:
    fn()  # warm up
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_spmm(sizes, density, width, repeats, backends):
    rng = np.random.default_rng(0)
    print(f"\nspmm / spmm_t, density={density}, width={width}, "
          f"best of {repeats}")
    print(f"{'n':>7} {'op':>7} " + " ".join(f"{b:>12}" for b in backends)
          + "  speedup")
    for n in sizes:
        m = random_csr(rng, n, density)
        x = rng.standard_normal((n, width))
        for op, fn in (("A@X", lambda: m.dot(x)),
                       ("A.T@X", lambda: m.tdot(x))):
            times = []
            for backend in backends:
                kernels.set_backend(backend)
                times.append(time_call(fn, repeats))
            # fallback time over compiled time: > 1 means the build pays off
            ratio = times[0] / times[-1] if len(times) > 1 else 1.0
            cells = " ".join(f"{t * 1e3:>10.3f}ms" for t in times)
            print(f"{n:>7} {op:>7} {cells}  {ratio:>6.2f}x")


def bench_epoch(n, repeats, backends):
    rng = np.random.default_rng(1)
    edges = [(int(rng.integers(0, n)), int(rng.integers(0, n)))
             for _ in range(8 * n)]
    labels = np.arange(n) % 4
    graph = build_graph(edges, rng.standard_normal((n, 32)), labels)
    spec = ModelSpec(encoder="chebnet", variant="mod", alpha=0.3,
                     hidden_dim=16, epochs=5, lr=0.01, seed=0)
    split = Split(np.arange(0, 8 * 4), np.arange(8 * 4, n),
                  labels_per_class=8, seed=0)
    print(f"\n5-epoch training run, n={n} nodes, best of {repeats}")
    for backend in backends:
        kernels.set_backend(backend)
        t = time_call(lambda: train_once(spec, graph, split), repeats)
        print(f"{backend:>10}: {t * 1e3:.1f}ms")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--sizes", default="500,2000,8000",
                        help="comma-separated matrix sizes")
    parser.add_argument("--density", type=float, default=0.002)
    parser.add_argument("--width", type=int, default=16,
                        help="dense operand column count")
    parser.add_argument("--repeats", type=int, default=10)
    args = parser.parse_args(argv)

    backends = ["numpy"]  # fallback first, compiled last
    if "cython" in kernels.available_backends():
        backends.append("cython")
    print(f"available backends: {', '.join(backends)}")
    if len(backends) == 1:
        print("compiled extension not built; timing the fallback only")
    sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]
    original = kernels.backend_name()
    try:
        bench_spmm(sizes, args.density, args.width, args.repeats, backends)
        bench_epoch(2000, max(3, args.repeats // 3), backends)
    finally:
        kernels.set_backend(original)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
