"""Experiment harness: seeded training runs over a (model, label budget,
run index) matrix, paired splits across models, and the CSV/Markdown
emitters for the result tables.

Determinism contract: every run is fully determined by its split seed and
model spec; worker scheduling cannot change any number in the outputs.
"""

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from configparser import ConfigParser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datasets import SplitSpec, load_dataset, stratified_split
from .ica import IcaConfig, ica_train_predict
from .model import ModelSpec, build_model, build_supports
from .objectives import LabelMask, LossReport, objective_for
from .optim import AdamState, adam_step
from .sparse import CsrMatrix, Graph

logger = logging.getLogger(__name__)

MODEL_ORDER = ("ica", "gcn", "chebnet", "gcn-mod", "chebnet-mod",
               "gcn-aux", "chebnet-aux")
DEFAULT_BUDGETS = (5, 8, 11, 14, 17, 20)
DEFAULT_ALPHA_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))
RESULTS_HEADER = ("model", "variant", "alpha", "labels_per_class",
                  "run_index", "split_seed", "accuracy", "epochs")
LOG_HEADER = ("epoch", "total", "supervised", "modularity_term",
              "train_acc", "test_acc")
EMBEDDING_LAYERS = ("hidden", "output", "aux")

# below this density the feature matrix goes through the sparse kernels
SPARSE_FEATURE_DENSITY = 0.25


@dataclass(frozen=True)
class Split:
    """One train/test split plus the bookkeeping that identifies it."""

    train_ids: np.ndarray
    test_ids: np.ndarray
    labels_per_class: int
    seed: int
    run_index: int = 0


@dataclass(frozen=True)
class RunResult:
    model_name: str
    variant: str
    alpha: float
    labels_per_class: int
    run_index: int
    split_seed: int
    test_accuracy: float  # nan when failed
    epochs_run: int
    final_losses: LossReport | None = None
    failed: bool = False
    note: str = ""


@dataclass(frozen=True)
class AggregateResult:
    model_name: str
    labels_per_class: int
    mean_accuracy: float
    standard_error: float
    n_runs: int
    n_failed: int = 0


@dataclass(frozen=True)
class SweepResult:
    model_name: str
    labels_per_class: int
    best_alpha: float
    # (alpha, mean accuracy, standard error) per grid point
    curve: tuple


@dataclass(frozen=True)
class MatrixConfig:
    """Declarative description of one experiment matrix."""

    dataset: str = "cora"
    data_dir: str = "data"
    features: str = "row_normalize"
    models: tuple = MODEL_ORDER
    budgets: tuple = DEFAULT_BUDGETS
    n_runs: int = 20
    base_seed: int = 0
    test_size: int = 1000
    epochs: int = 100
    lr: float = 0.01
    hidden_dim: int = 16
    cheb_order: int = 2
    alpha: float = 0.1
    alpha_overrides: tuple = ()  # ((model_name, alpha), ...)
    out_dir: str = "results"
    jobs: int = 1
    ica: IcaConfig = field(default_factory=IcaConfig)

    def __post_init__(self):
        for name in self.models:
            if name not in MODEL_ORDER:
                raise ValueError(f"unknown model {name!r}; "
                                 f"expected one of {MODEL_ORDER}")
        if self.n_runs < 1 or self.jobs < 1:
            raise ValueError("n_runs and jobs must be >= 1")

    def alpha_for(self, model_name: str) -> float:
        for name, value in self.alpha_overrides:
            if name == model_name:
                return value
        return self.alpha


def load_matrix_config(path) -> MatrixConfig:
    """Parse an INI experiment config; see README for the schema."""
    parser = ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file not found: {path}")
    if not parser.has_section("experiment"):
        raise ValueError(f"{path}: missing [experiment] section")
    exp = parser["experiment"]

    def split_list(raw):
        return tuple(tok.strip() for tok in raw.split(",") if tok.strip())

    kwargs = {}
    for key in ("dataset", "data_dir", "features", "out_dir"):
        if key in exp:
            kwargs[key] = exp[key]
    for key in ("n_runs", "base_seed", "test_size", "epochs",
                "hidden_dim", "cheb_order", "jobs"):
        if key in exp:
            kwargs[key] = exp.getint(key)
    for key in ("lr", "alpha"):
        if key in exp:
            kwargs[key] = exp.getfloat(key)
    if "models" in exp:
        kwargs["models"] = split_list(exp["models"])
    if "budgets" in exp:
        kwargs["budgets"] = tuple(int(b) for b in split_list(exp["budgets"]))
    if parser.has_section("alpha"):
        kwargs["alpha_overrides"] = tuple(
            (name, float(value)) for name, value in parser.items("alpha"))
    if parser.has_section("ica"):
        ica = parser["ica"]
        kwargs["ica"] = IcaConfig(
            max_iters=ica.getint("max_iters", IcaConfig.max_iters),
            epochs=ica.getint("epochs", IcaConfig.epochs),
            lr=ica.getfloat("lr", IcaConfig.lr),
            l2=ica.getfloat("l2", IcaConfig.l2))
    return MatrixConfig(**kwargs)


def split_seed_for(base_seed: int, budget: int, run_index: int) -> int:
    """Split seeds depend only on (base seed, budget, run index), so every
    model at the same run index sees the same train/test ids."""
    return base_seed * 1_000_000 + budget * 1_000 + run_index


def make_split(graph: Graph, labels_per_class: int, test_size: int,
               seed: int, run_index: int = 0) -> Split:
    train_ids, test_ids = stratified_split(
        graph, SplitSpec(labels_per_class, test_size, seed))
    return Split(train_ids, test_ids, labels_per_class, seed, run_index)


def model_spec_for(model_name: str, config: MatrixConfig, seed: int,
                   alpha: float | None = None) -> ModelSpec:
    if model_name == "ica" or model_name not in MODEL_ORDER:
        raise ValueError(f"no model spec for {model_name!r}")
    encoder, _, suffix = model_name.partition("-")
    variant = suffix or "plain"
    if alpha is None:
        alpha = config.alpha_for(model_name) if variant != "plain" else 0.0
    return ModelSpec(encoder=encoder, cheb_order=config.cheb_order,
                     variant=variant, hidden_dim=config.hidden_dim,
                     alpha=alpha, epochs=config.epochs, lr=config.lr,
                     seed=seed)


def training_features(graph: Graph):
    """Dense or CSR feature matrix, whichever suits the density."""
    feats = graph.features
    nnz = np.count_nonzero(feats)
    if feats.size and nnz / feats.size < SPARSE_FEATURE_DENSITY:
        return CsrMatrix.from_dense(feats)
    return feats


def accuracy_of(probs: np.ndarray, labels: np.ndarray,
                ids: np.ndarray) -> float:
    """Fraction of ``ids`` whose argmax row (ties to the lowest class
    index) matches the true label."""
    preds = np.argmax(probs[ids], axis=1)
    return float(np.mean(preds == labels[ids]))


def train_once(spec: ModelSpec, graph: Graph, split: Split,
               log_path=None, supports=None, lambda_max=None,
               features=None, model=None) -> RunResult:
    """Full-batch training for spec.epochs with no early stopping.

    The training log holds epochs+1 rows; row e is the state after e
    optimizer steps, so row 0 is the initialization and the last row is
    the final model. A non-finite loss or gradient aborts the run, which
    is recorded as failed. Pass ``model`` to keep the trained weights;
    it is updated in place."""
    mask = LabelMask.from_graph(graph, split.train_ids)
    if model is None:
        model = build_model(spec, graph, supports=supports,
                            lambda_max=lambda_max)
    x = training_features(graph) if features is None else features
    params = model.params()
    state = AdamState.create(params, lr=spec.lr)

    rows = []
    report = None
    failed, note = False, ""
    epochs_run = 0
    for epoch in range(spec.epochs + 1):
        report, grads, fwd = objective_for(model, graph, mask, features=x)
        if not math.isfinite(report.total):
            failed, note = True, f"non-finite loss at epoch {epoch}"
            break
        rows.append((epoch, report.total, report.supervised,
                     report.modularity_term,
                     accuracy_of(fwd.output, graph.labels, split.train_ids),
                     accuracy_of(fwd.output, graph.labels, split.test_ids)))
        epochs_run = epoch
        if epoch == spec.epochs:
            break
        try:
            adam_step(state, params, grads)
        except ValueError as exc:
            failed, note = True, f"epoch {epoch}: {exc}"
            break

    if log_path is not None:
        _write_csv(log_path, LOG_HEADER, rows)
    if failed:
        logger.warning("run failed (%s, seed %d): %s",
                       spec.model_name, split.seed, note)
        return RunResult(spec.model_name, spec.variant, spec.effective_alpha,
                         split.labels_per_class, split.run_index, split.seed,
                         float("nan"), epochs_run, report, True, note)
    return RunResult(spec.model_name, spec.variant, spec.effective_alpha,
                     split.labels_per_class, split.run_index, split.seed,
                     rows[-1][5], epochs_run, report)


def run_ica_once(graph: Graph, split: Split, cfg: IcaConfig,
                 seed: int) -> RunResult:
    try:
        result = ica_train_predict(graph, split.train_ids, split.test_ids,
                                   cfg, seed=seed)
    except ValueError as exc:
        return RunResult("ica", "plain", 0.0, split.labels_per_class,
                         split.run_index, split.seed, float("nan"), 0,
                         None, True, str(exc))
    acc = float(np.mean(result.predicted == graph.labels[split.test_ids]))
    return RunResult("ica", "plain", 0.0, split.labels_per_class,
                     split.run_index, split.seed, acc, result.iterations)


class SupportCache:
    """Per-graph cache of filter supports, keyed by encoder settings."""

    def __init__(self, graph: Graph):
        self.graph = graph
        self._cache = {}
        self._features = None

    def features(self):
        if self._features is None:
            self._features = training_features(self.graph)
        return self._features

    def supports_for(self, spec: ModelSpec):
        key = (spec.encoder, spec.cheb_order)
        if key not in self._cache:
            self._cache[key] = build_supports(spec, self.graph)
        return self._cache[key]


def execute_job(graph: Graph, config: MatrixConfig, cache: SupportCache,
                model_name: str, budget: int, run_index: int,
                alpha: float | None = None) -> RunResult:
    seed = split_seed_for(config.base_seed, budget, run_index)
    split = make_split(graph, budget, config.test_size, seed, run_index)
    if model_name == "ica":
        return run_ica_once(graph, split, config.ica, seed)
    spec = model_spec_for(model_name, config, seed, alpha=alpha)
    return train_once(spec, graph, split,
                      supports=cache.supports_for(spec),
                      features=cache.features())


_WORKER = {}


def _worker_init(graph, config):
    _WORKER["graph"] = graph
    _WORKER["config"] = config
    _WORKER["cache"] = SupportCache(graph)


def _worker_run(job):
    model_name, budget, run_index, alpha = job
    return execute_job(_WORKER["graph"], _WORKER["config"],
                       _WORKER["cache"], model_name, budget, run_index,
                       alpha=alpha)


def _run_jobs(graph: Graph, config: MatrixConfig, jobs) -> list:
    """Run (model, budget, run_index, alpha) jobs, serially or on a
    process pool; results come back in job order either way."""
    if config.jobs == 1:
        cache = SupportCache(graph)
        return [execute_job(graph, config, cache, *job[:3], alpha=job[3])
                for job in jobs]
    with ProcessPoolExecutor(max_workers=config.jobs,
                             initializer=_worker_init,
                             initargs=(graph, config)) as pool:
        return list(pool.map(_worker_run, jobs, chunksize=1))


def run_matrix(config: MatrixConfig, graph: Graph | None = None):
    """Train every configured model at every budget for n_runs paired
    splits. Returns (runs, aggregates) and writes results.csv plus
    summary.md under config.out_dir."""
    if graph is None:
        graph = load_dataset(config.dataset, config.data_dir,
                             config.features)
    jobs = [(model, budget, run, None)
            for model in config.models
            for budget in config.budgets
            for run in range(config.n_runs)]
    runs = _run_jobs(graph, config, jobs)
    aggregates = aggregate(runs, model_order=config.models)
    out = Path(config.out_dir)
    write_results_csv(out / "results.csv", runs)
    write_summary_md(out / "summary.md", config, aggregates)
    return runs, aggregates


def aggregate(runs, model_order=MODEL_ORDER) -> list:
    """Mean accuracy and standard error per (model, budget); failed runs
    are excluded with their count noted."""
    groups = {}
    for r in runs:
        groups.setdefault((r.model_name, r.labels_per_class), []).append(r)
    order = {name: i for i, name in enumerate(model_order)}
    results = []
    for key in sorted(groups, key=lambda k: (order.get(k[0], 99), k[1])):
        model_name, budget = key
        accs = np.array([r.test_accuracy for r in groups[key] if not r.failed])
        n_failed = sum(1 for r in groups[key] if r.failed)
        if accs.size == 0:
            results.append(AggregateResult(model_name, budget, float("nan"),
                                           float("nan"), 0, n_failed))
            continue
        se = float(np.std(accs, ddof=1) / np.sqrt(accs.size)) \
            if accs.size > 1 else 0.0
        results.append(AggregateResult(model_name, budget,
                                       float(np.mean(accs)), se,
                                       int(accs.size), n_failed))
    return results


def alpha_sweep(config: MatrixConfig, grid=DEFAULT_ALPHA_GRID,
                graph: Graph | None = None):
    """Grid-search alpha for every non-plain model in the config.

    Selects the alpha maximizing mean test accuracy (ties to the lowest
    alpha) per (model, budget) and reports the full curve. Returns
    (sweep_results, runs)."""
    grid = tuple(grid)
    if not grid:
        raise ValueError("alpha sweep needs a non-empty grid")
    if graph is None:
        graph = load_dataset(config.dataset, config.data_dir,
                             config.features)
    models = [m for m in config.models
              if m != "ica" and ("-mod" in m or "-aux" in m)]
    if not models:
        raise ValueError("no mod/aux model in config.models to sweep")
    jobs = [(model, budget, run, alpha)
            for model in models
            for budget in config.budgets
            for alpha in grid
            for run in range(config.n_runs)]
    runs = _run_jobs(graph, config, jobs)
    by_cell = {}
    for r in runs:
        by_cell.setdefault(
            (r.model_name, r.labels_per_class, r.alpha), []).append(r)
    sweeps = []
    for model in models:
        for budget in config.budgets:
            curve = []
            for alpha in grid:
                cell = [r for r in by_cell.get((model, budget, alpha), ())
                        if not r.failed]
                accs = np.array([r.test_accuracy for r in cell])
                mean = float(np.mean(accs)) if accs.size else float("nan")
                se = float(np.std(accs, ddof=1) / np.sqrt(accs.size)) \
                    if accs.size > 1 else 0.0
                curve.append((alpha, mean, se))
            finite = [(mean, alpha) for alpha, mean, _ in curve
                      if math.isfinite(mean)]
            if not finite:
                raise ValueError(f"every sweep run failed for {model} "
                                 f"@{budget} labels/class")
            best_mean = max(mean for mean, _ in finite)
            best_alpha = min(alpha for mean, alpha in finite
                             if mean == best_mean)
            sweeps.append(SweepResult(model, budget, best_alpha,
                                      tuple(curve)))
    return sweeps, runs


def export_embeddings(model, graph: Graph, layer: str, path,
                      features=None) -> None:
    """Write one node per row: node_id, true_label, then the requested
    layer's coordinates. Projection to 2-D is out of scope."""
    if layer not in EMBEDDING_LAYERS:
        raise ValueError(f"unknown embedding layer {layer!r}; "
                         f"expected one of {EMBEDDING_LAYERS}")
    x = training_features(graph) if features is None else features
    fwd = model.forward(x)
    if layer == "hidden":
        emb = fwd.hidden
    elif layer == "output":
        emb = fwd.output
    else:
        if fwd.aux_out is None:
            raise ValueError("model has no auxiliary head")
        emb = fwd.aux_out
    header = ["node_id", "true_label"]
    header += [f"e{j}" for j in range(emb.shape[1])]
    rows = [(i, int(graph.labels[i]), *(repr(float(v)) for v in emb[i]))
            for i in range(graph.num_nodes)]
    _write_csv(path, header, rows, delimiter="\t")


def write_results_csv(path, runs) -> None:
    """Fixed schema; floats in repr form so aggregates recompute exactly."""
    rows = [(r.model_name, r.variant, repr(float(r.alpha)),
             r.labels_per_class, r.run_index, r.split_seed,
             repr(float(r.test_accuracy)), r.epochs_run)
            for r in runs]
    _write_csv(path, RESULTS_HEADER, rows)


def read_results_csv(path) -> list:
    """Rebuild RunResults (sans loss reports) from a results.csv."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            acc = float(row["accuracy"])
            out.append(RunResult(
                row["model"], row["variant"], float(row["alpha"]),
                int(row["labels_per_class"]), int(row["run_index"]),
                int(row["split_seed"]), acc, int(row["epochs"]),
                failed=not math.isfinite(acc)))
    return out


def write_summary_md(path, config: MatrixConfig, aggregates) -> None:
    """Markdown table: one model per row, one label budget per column,
    mean accuracy with standard error in each cell."""
    budgets = sorted({a.labels_per_class for a in aggregates})
    by_model = {}
    for a in aggregates:
        by_model.setdefault(a.model_name, {})[a.labels_per_class] = a
    lines = [f"# Accuracy on {config.dataset} "
             f"({config.n_runs} runs per cell, mean +/- standard error)",
             ""]
    header = "| model | " + " | ".join(str(b) for b in budgets) + " |"
    rule = "|---" * (len(budgets) + 1) + "|"
    lines += [header, rule]
    order = {name: i for i, name in enumerate(config.models)}
    for model in sorted(by_model, key=lambda m: order.get(m, 99)):
        cells = []
        for b in budgets:
            agg = by_model[model].get(b)
            if agg is None or agg.n_runs == 0:
                cells.append("failed" if agg else "-")
                continue
            cell = f"{agg.mean_accuracy:.3f} +/- {agg.standard_error:.3f}"
            if agg.n_failed:
                cell += f" (n={agg.n_runs})"
            cells.append(cell)
        lines.append(f"| {model} | " + " | ".join(cells) + " |")
    lines.append("")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines))


def write_sweep_csv(path, sweeps) -> None:
    rows = []
    for s in sweeps:
        for alpha, mean, se in s.curve:
            rows.append((s.model_name, s.labels_per_class,
                         repr(float(alpha)), repr(float(mean)),
                         repr(float(se)),
                         repr(float(s.best_alpha))))
    _write_csv(path, ("model", "labels_per_class", "alpha",
                      "mean_accuracy", "standard_error", "best_alpha"),
               rows)


def _write_csv(path, header, rows, delimiter=",") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(header)
        writer.writerows(rows)
