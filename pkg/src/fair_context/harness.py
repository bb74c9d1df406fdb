"""End-to-end evaluation pipelines with seed x fold aggregation.

The protocol for one run seed: hold out a stratified fraction of the data
(the group-attribute side never sees fold-test rows), optionally split that
holdout 50/50 into classifier-training and conformal-calibration halves,
then cross-validate the remaining rows. Per fold, the demonstration set is
built from fold-train rows by the configured method, transformed and capped,
and handed to the in-context predictor to score the fold-test rows.

Everything is a deterministic function of (dataset, config): per-cell seeds
derive from the base seed via the streams in :mod:`fair_context.tabular`,
so runs are reproducible across machines and degrees of parallelism.
"""

from __future__ import annotations

import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace

import numpy as np

from . import correlation
from .adapter_client import ExternalPredictor
from .conformal import calibrate, split_sensitive_holdout
from .errors import DegenerateStratumWarning, EmptyInput, PipelineError, UsageError
from .metrics import compute_report
from .predictors import (
    InContextPredictor,
    KnnPredictor,
    LogRegIclPredictor,
    fit_group_classifier,
    threshold_labels,
)
from .selection import SelectionResult, cap_random, select_all, select_balanced, select_uncertain
from .tabular import (
    STREAM_CONFORMAL_SPLIT,
    STREAM_HOLDOUT,
    STREAM_KFOLD,
    Dataset,
    SplitPlan,
    holdout_split,
    kfold,
)

logger = logging.getLogger(__name__)

METHODS = ("vanilla", "balanced", "cr_s1", "cr_s2", "uncertain_lr", "uncertain_strong")
CR_METHODS = ("cr_s1", "cr_s2")
UNCERTAIN_METHODS = ("uncertain_lr", "uncertain_strong")
DEFAULT_EPSILON = 0.05
DEFAULT_ALPHA = 1.0
DEFAULT_MAX_CONTEXT = 10_000


@dataclass(frozen=True)
class RunConfig:
    method: str
    epsilon: float | None = None     # uncertainty coverage knob, uncertain_* only
    alpha: float | None = None       # correlation-removal strength, cr_* only
    predictor: str = "knn"           # knn | logreg | external:<command>
    n_folds: int = 5
    n_seeds: int = 10
    holdout_fraction: float = 0.2
    max_context: int = DEFAULT_MAX_CONTEXT
    base_seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise UsageError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.epsilon is not None and self.method not in UNCERTAIN_METHODS:
            raise UsageError(f"epsilon only applies to uncertain methods, not {self.method}")
        if self.alpha is not None and self.method not in CR_METHODS:
            raise UsageError(f"alpha only applies to correlation-remover methods, not {self.method}")
        if self.method in UNCERTAIN_METHODS and self.epsilon is None:
            object.__setattr__(self, "epsilon", DEFAULT_EPSILON)
        if self.method in CR_METHODS and self.alpha is None:
            object.__setattr__(self, "alpha", DEFAULT_ALPHA)
        if self.epsilon is not None and not 0.0 < self.epsilon < 1.0:
            raise UsageError("epsilon must be in (0, 1)")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise UsageError("alpha must be in [0, 1]")
        if self.n_seeds < 1 or self.n_folds < 2:
            raise UsageError("need n_seeds >= 1 and n_folds >= 2")
        if self.max_context < 1:
            raise UsageError("max_context must be >= 1")

    @property
    def plan(self) -> SplitPlan:
        return SplitPlan(self.holdout_fraction, self.n_folds, self.base_seed)

    def to_dict(self) -> dict:
        return {
            "method": self.method, "epsilon": self.epsilon, "alpha": self.alpha,
            "predictor": self.predictor, "n_folds": self.n_folds, "n_seeds": self.n_seeds,
            "holdout_fraction": self.holdout_fraction, "max_context": self.max_context,
            "base_seed": self.base_seed,
        }


@dataclass(frozen=True)
class EvalRecord:
    """One (seed, fold, method, params) cell.

    ``wall_time_ms`` is diagnostic only and never serialized, keeping record
    files byte-reproducible.
    """

    seed_index: int
    fold_index: int
    method: str
    epsilon: float | None
    alpha: float | None
    context_size: int
    accuracy: float
    f1: float
    dp: float | None
    eop: float | None
    eod: float | None
    undefined_flags: tuple[str, ...] = ()
    wall_time_ms: float = 0.0

    def values_equal(self, other: "EvalRecord") -> bool:
        """Outcome fields match exactly (labels and timing aside)."""
        return (self.seed_index, self.fold_index, self.context_size,
                self.accuracy, self.f1, self.dp, self.eop, self.eod,
                self.undefined_flags) == (
                other.seed_index, other.fold_index, other.context_size,
                other.accuracy, other.f1, other.dp, other.eop, other.eod,
                other.undefined_flags)


@dataclass(frozen=True)
class ParetoPoint:
    accuracy: float
    unfairness: float
    config: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AblationRecord:
    requested_size: int
    record: EvalRecord

    @property
    def achieved_size(self) -> int:
        return self.record.context_size

    @property
    def shortfall(self) -> bool:
        return self.record.context_size < self.requested_size


@dataclass(frozen=True)
class SweepResult:
    records: list
    failures: list          # dicts: {"method", "value", "error"}
    grid: list              # (method, value) pairs as given


def build_predictor(spec: str, pool_size: int = 1) -> InContextPredictor:
    if spec == "knn":
        return KnnPredictor()
    if spec == "logreg":
        return LogRegIclPredictor()
    if spec.startswith("external:"):
        command = spec[len("external:"):]
        if not command.strip():
            raise UsageError("external predictor needs a command: external:<command>")
        return ExternalPredictor(command, pool_size=pool_size)
    raise UsageError(f"unknown predictor {spec!r}; use knn, logreg or external:<command>")


@contextmanager
def _predictor_scope(cfg: RunConfig, predictor: InContextPredictor | None, jobs: int):
    if predictor is not None:
        yield predictor
        return
    built = build_predictor(cfg.predictor, pool_size=jobs)
    try:
        yield built
    finally:
        if hasattr(built, "close"):
            built.close()


def _op_seed(cell_seed: int, op_index: int) -> int:
    # distinct deterministic streams for the stochastic ops inside one cell
    return int(np.random.SeedSequence((cell_seed, op_index)).generate_state(1, np.uint64)[0])


def _run_seed(ds: Dataset, cfg: RunConfig, predictor: InContextPredictor,
              seed_index: int, inspect=None) -> list[EvalRecord]:
    plan = cfg.plan
    fold_index = None
    try:
        main, hold = holdout_split(ds, cfg.holdout_fraction,
                                   plan.stream(seed_index, STREAM_HOLDOUT))
        conformal_model = None
        if cfg.method in UNCERTAIN_METHODS:
            proper, calib = split_sensitive_holdout(
                hold, plan.stream(seed_index, STREAM_CONFORMAL_SPLIT))
            kind = "logreg" if cfg.method == "uncertain_lr" else "strong"
            strong = predictor if isinstance(predictor, ExternalPredictor) else None
            clf = fit_group_classifier(kind, proper.features, proper.sensitive, strong)
            conformal_model = calibrate(clf, calib.features, calib.sensitive, cfg.epsilon)

        records = []
        folds = kfold(main, cfg.n_folds, plan.stream(seed_index, STREAM_KFOLD))
        for fold_index, (train_idx, test_idx) in enumerate(folds):
            started = time.perf_counter()
            fold_train = main.subset(train_idx)
            fold_test = main.subset(test_idx)
            cell = plan.stream(seed_index, fold_index)

            if cfg.method == "balanced":
                sel = select_balanced(fold_train, None, _op_seed(cell, 0))
                counts = np.bincount(fold_train.sensitive[sel.indices], minlength=2)
                assert counts[0] == counts[1], "balanced selection produced unequal groups"
            elif cfg.method in UNCERTAIN_METHODS:
                sel = select_uncertain(fold_train, conformal_model)
            else:
                sel = select_all(fold_train)

            demo = fold_train.subset(sel.indices)
            if cfg.method in CR_METHODS:
                mode = "s1" if cfg.method == "cr_s1" else "s2"
                cr_model = correlation.fit(demo, cfg.alpha, mode)
                demo, fold_test = correlation.apply_mode(cr_model, demo, fold_test)

            capped = cap_random(sel, cfg.max_context, _op_seed(cell, 1))
            if capped.size != sel.size:
                keep = np.searchsorted(sel.indices, capped.indices)
                demo = demo.subset(keep)
            if inspect is not None:
                inspect(seed_index, fold_index, capped, demo)

            probs = predictor.predict_proba(demo.features, demo.target, fold_test.features)
            pred = threshold_labels(probs)
            report = compute_report(pred, fold_test.target, fold_test.sensitive)
            records.append(EvalRecord(
                seed_index=seed_index,
                fold_index=fold_index,
                method=cfg.method,
                epsilon=cfg.epsilon,
                alpha=cfg.alpha,
                context_size=capped.size,
                accuracy=report.accuracy,
                f1=report.f1,
                dp=report.dp,
                eop=report.eop,
                eod=report.eod,
                undefined_flags=tuple(sorted(report.undefined_flags)),
                wall_time_ms=(time.perf_counter() - started) * 1e3,
            ))
        return records
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(seed_index, fold_index, exc) from exc


def run_pipeline(ds: Dataset, cfg: RunConfig, predictor: InContextPredictor | None = None,
                 jobs: int = 1, inspect=None) -> list[EvalRecord]:
    """Run the full seed x fold protocol; returns records sorted by cell.

    ``jobs`` > 1 evaluates run seeds concurrently; results are identical to a
    serial run because every cell draws from its own derived seed stream.
    ``inspect(seed, fold, selection, demo)`` is called per cell when given.
    """
    with _predictor_scope(cfg, predictor, jobs) as pred:
        if jobs <= 1 or cfg.n_seeds == 1:
            per_seed = [_run_seed(ds, cfg, pred, i, inspect) for i in range(cfg.n_seeds)]
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_run_seed, ds, cfg, pred, i, inspect)
                           for i in range(cfg.n_seeds)]
                per_seed = [f.result() for f in futures]
    records = [rec for chunk in per_seed for rec in chunk]
    records.sort(key=lambda r: (r.seed_index, r.fold_index))
    return records


# --- sweeps and Pareto fronts --------------------------------------------------

def _grid_config(base_cfg: RunConfig, method: str, value: float | None) -> RunConfig:
    kwargs = {"method": method, "epsilon": None, "alpha": None}
    if method in UNCERTAIN_METHODS:
        kwargs["epsilon"] = value
    elif method in CR_METHODS:
        kwargs["alpha"] = value
    return replace(base_cfg, **kwargs)


def sweep(ds: Dataset, base_cfg: RunConfig, grid: list,
          predictor: InContextPredictor | None = None, jobs: int = 1,
          inspect=None) -> SweepResult:
    """Run the pipeline per (method, knob value) grid point.

    Failed points are recorded and skipped; the surviving records carry their
    grid point in (method, epsilon, alpha).
    """
    if not grid:
        raise EmptyInput("empty sweep grid")
    records, failures = [], []
    for method, value in grid:
        cfg = _grid_config(base_cfg, method, value)
        try:
            records.extend(run_pipeline(ds, cfg, predictor, jobs, inspect=inspect))
        except PipelineError as exc:
            logger.warning("grid point (%s, %s) failed: %s", method, value, exc)
            failures.append({"method": method, "value": value, "error": str(exc)})
    return SweepResult(records=records, failures=failures, grid=list(grid))


def pareto_front(points: list[ParetoPoint]) -> list[ParetoPoint]:
    """Maximal points under (maximize accuracy, minimize unfairness).

    Exact duplicates on both coordinates keep their first representative;
    output is ordered by descending accuracy.
    """
    if not points:
        raise EmptyInput("no points to rank")
    seen, unique = set(), []
    for p in points:
        key = (p.accuracy, p.unfairness)
        if key in seen:
            continue
        seen.add(key)
        unique.append(p)
    if len(unique) < len(points):
        logger.info("pareto_front: dropped %d duplicate points", len(points) - len(unique))

    def dominated(p: ParetoPoint) -> bool:
        return any(
            q.accuracy >= p.accuracy and q.unfairness <= p.unfairness
            and (q.accuracy > p.accuracy or q.unfairness < p.unfairness)
            for q in unique)

    front = [p for p in unique if not dominated(p)]
    return sorted(front, key=lambda p: -p.accuracy)


def sweep_pareto_points(records: list[EvalRecord], unfairness: str = "dp") -> list[ParetoPoint]:
    """Collapse records to one (mean accuracy, mean unfairness) point per grid cell."""
    if unfairness not in ("dp", "eop", "eod"):
        raise UsageError(f"unknown unfairness axis {unfairness!r}")
    points = []
    for (method, eps, alpha), group in _grouped(records):
        accs = [r.accuracy for r in group]
        unf = [getattr(r, unfairness) for r in group if getattr(r, unfairness) is not None]
        if not unf:
            continue
        points.append(ParetoPoint(
            accuracy=float(np.mean(accs)),
            unfairness=float(np.mean(unf)),
            config={"method": method, "epsilon": eps, "alpha": alpha},
        ))
    return points


# --- reconstruction probe -------------------------------------------------------

def probe_dataset(ds: Dataset) -> Dataset:
    """Flip the task: the target column joins the features and the group
    label becomes what gets predicted (and what interventions key on)."""
    name = "target"
    while name in ds.feature_names:
        name += "_"
    features = np.column_stack([ds.features, ds.target.astype(np.float64)])
    return Dataset(features=features, sensitive=ds.sensitive, target=ds.sensitive,
                   feature_names=ds.feature_names + (name,), row_ids=ds.row_ids)


def reconstruction_probe(ds: Dataset, cfg: RunConfig,
                         predictor: InContextPredictor | None = None,
                         jobs: int = 1) -> tuple[float, float]:
    """Seed/fold-averaged (accuracy, f1) of recovering the group label after
    the configured intervention."""
    with warnings.catch_warnings():
        # target == group label in the probe, so half the strata are
        # structurally empty; silence that specific warning
        warnings.simplefilter("ignore", DegenerateStratumWarning)
        records = run_pipeline(probe_dataset(ds), cfg, predictor, jobs)
    return (float(np.mean([r.accuracy for r in records])),
            float(np.mean([r.f1 for r in records])))


# --- context-size ablation -------------------------------------------------------

def context_size_ablation(ds: Dataset, sizes: list[int], methods: list[str],
                          cfg: RunConfig, predictor: InContextPredictor | None = None,
                          jobs: int = 1) -> list[AblationRecord]:
    """Re-run the pipeline with the context capped at each requested size.

    The cap applies after method selection; shortfalls (selection smaller
    than the requested size) are flagged on the record, not failed.
    """
    if not sizes or any(s < 1 for s in sizes):
        raise UsageError("sizes must be positive")
    if list(sizes) != sorted(sizes):
        raise UsageError("sizes must be ascending")
    out = []
    for method in methods:
        for size in sizes:
            cell_cfg = _grid_config(cfg, method, cfg.epsilon if method in UNCERTAIN_METHODS
                                    else (cfg.alpha if method in CR_METHODS else None))
            cell_cfg = replace(cell_cfg, max_context=size)
            for rec in run_pipeline(ds, cell_cfg, predictor, jobs):
                out.append(AblationRecord(requested_size=size, record=rec))
    return out


# --- aggregation -----------------------------------------------------------------

SUMMARY_METRICS = ("accuracy", "f1", "dp", "eop", "eod", "context_size")


@dataclass(frozen=True)
class SummaryRow:
    method: str
    epsilon: float | None
    alpha: float | None
    metric: str
    mean: float | None      # None when every cell was undefined
    std: float | None
    n_cells: int
    n_undefined: int


def _grouped(records: list[EvalRecord]):
    keys = sorted({(r.method, r.epsilon, r.alpha) for r in records},
                  key=lambda k: (k[0], k[1] if k[1] is not None else -1.0,
                                 k[2] if k[2] is not None else -1.0))
    for key in keys:
        yield key, [r for r in records
                    if (r.method, r.epsilon, r.alpha) == key]


def aggregate(records: list[EvalRecord]) -> list[SummaryRow]:
    """Mean and population std per (method, params, metric).

    Cells whose metric was undefined are excluded from that metric's moments
    and counted in ``n_undefined``. Values stay in natural units; the x100
    fairness scaling is applied by the renderers only.
    """
    if not records:
        raise EmptyInput("no records to aggregate")
    rows = []
    for (method, eps, alpha), group in _grouped(records):
        for metric in SUMMARY_METRICS:
            values = [getattr(r, metric) for r in group]
            defined = [v for v in values if v is not None]
            rows.append(SummaryRow(
                method=method, epsilon=eps, alpha=alpha, metric=metric,
                mean=float(np.mean(defined)) if defined else None,
                std=float(np.std(defined)) if defined else None,
                n_cells=len(group),
                n_undefined=len(values) - len(defined),
            ))
    return rows
