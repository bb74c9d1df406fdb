"""Serialization of records, summaries, Pareto tables and run manifests.

File outputs are byte-reproducible for identical inputs: fixed key order,
floats rendered by ``repr``, no timestamps. Fairness values are stored in
natural units; only the human-facing console table scales them by 100
(column headers say which).
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from . import __version__
from .harness import AblationRecord, EvalRecord, ParetoPoint, RunConfig, SummaryRow, aggregate
from .tabular import STREAM_HOLDOUT, Dataset

RECORD_SCHEMA = "fair-context/record/v1"
MANIFEST_SCHEMA = "fair-context/manifest/v1"
FAIRNESS_METRICS = ("dp", "eop", "eod")


def record_to_json(rec: EvalRecord) -> str:
    # wall_time_ms intentionally left out: timing would break byte determinism
    return json.dumps({
        "schema": RECORD_SCHEMA,
        "seed_index": rec.seed_index,
        "fold_index": rec.fold_index,
        "method": rec.method,
        "epsilon": rec.epsilon,
        "alpha": rec.alpha,
        "context_size": rec.context_size,
        "accuracy": rec.accuracy,
        "f1": rec.f1,
        "dp": rec.dp,
        "eop": rec.eop,
        "eod": rec.eod,
        "undefined_flags": list(rec.undefined_flags),
    })


def record_from_json(line: str) -> EvalRecord:
    doc = json.loads(line)
    if doc.get("schema") != RECORD_SCHEMA:
        raise ValueError(f"unsupported record schema {doc.get('schema')!r}")
    return EvalRecord(
        seed_index=doc["seed_index"], fold_index=doc["fold_index"],
        method=doc["method"], epsilon=doc["epsilon"], alpha=doc["alpha"],
        context_size=doc["context_size"], accuracy=doc["accuracy"], f1=doc["f1"],
        dp=doc["dp"], eop=doc["eop"], eod=doc["eod"],
        undefined_flags=tuple(doc["undefined_flags"]),
    )


def write_records_jsonl(records: list[EvalRecord], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(record_to_json(rec) + "\n")


def read_records_jsonl(path) -> list[EvalRecord]:
    with Path(path).open(encoding="utf-8") as fh:
        return [record_from_json(line) for line in fh if line.strip()]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_summary_csv(rows: list[SummaryRow], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "epsilon", "alpha", "metric",
                         "mean", "std", "n_cells", "n_undefined"])
        for row in rows:
            writer.writerow([row.method, _cell(row.epsilon), _cell(row.alpha), row.metric,
                             _cell(row.mean), _cell(row.std), row.n_cells, row.n_undefined])


def write_pareto_csv(points: list[ParetoPoint], front: list[ParetoPoint], path,
                     unfairness: str) -> None:
    on_front = {(p.accuracy, p.unfairness) for p in front}
    flagged = set()
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "epsilon", "alpha", "accuracy",
                         f"unfairness_{unfairness}", "on_front"])
        for p in points:
            key = (p.accuracy, p.unfairness)
            is_front = key in on_front and key not in flagged
            if is_front:
                flagged.add(key)   # duplicates keep a single representative
            writer.writerow([p.config.get("method", ""), _cell(p.config.get("epsilon")),
                             _cell(p.config.get("alpha")), repr(p.accuracy),
                             repr(p.unfairness), str(is_front).lower()])


def write_ablation_csv(rows: list[AblationRecord], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "requested_size", "achieved_size", "shortfall",
                         "seed_index", "fold_index", "accuracy", "f1",
                         "dp", "eop", "eod"])
        for row in rows:
            r = row.record
            writer.writerow([r.method, row.requested_size, row.achieved_size,
                             str(row.shortfall).lower(), r.seed_index, r.fold_index,
                             _cell(r.accuracy), _cell(r.f1),
                             _cell(r.dp), _cell(r.eop), _cell(r.eod)])


def write_reconstruction_csv(rows: list[tuple[str, float, float]], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "accuracy", "f1"])
        for method, acc, f1 in rows:
            writer.writerow([method, repr(acc), repr(f1)])


def write_manifest(path, cfg: RunConfig, ds: Dataset, grid=None, extra=None) -> None:
    plan = cfg.plan
    doc = {
        "schema": MANIFEST_SCHEMA,
        "version": __version__,
        "config": cfg.to_dict(),
        "dataset": {
            "n_rows": ds.n,
            "n_features": ds.m_z,
            "content_hash": ds.content_hash(),
        },
        "seeds": {
            "base_seed": cfg.base_seed,
            "holdout_streams": [plan.stream(i, STREAM_HOLDOUT) for i in range(cfg.n_seeds)],
        },
    }
    if grid is not None:
        doc["grid"] = [[method, value] for method, value in grid]
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def render_summary_table(rows: list[SummaryRow]) -> str:
    """Console table; fairness columns are scaled x100 (said in the header)."""
    out = io.StringIO()
    header = f"{'method':<18} {'epsilon':>8} {'alpha':>6} {'metric':>12} " \
             f"{'mean':>10} {'std':>10} {'cells':>6} {'undef':>6}"
    out.write(header + "\n")
    out.write("-" * len(header) + "\n")
    for row in rows:
        scale = 100.0 if row.metric in FAIRNESS_METRICS else 1.0
        label = f"{row.metric} x100" if row.metric in FAIRNESS_METRICS else row.metric
        mean = "undefined" if row.mean is None else f"{row.mean * scale:.3f}"
        std = "" if row.std is None else f"{row.std * scale:.3f}"
        eps = "" if row.epsilon is None else f"{row.epsilon:g}"
        alpha = "" if row.alpha is None else f"{row.alpha:g}"
        out.write(f"{row.method:<18} {eps:>8} {alpha:>6} {label:>12} "
                  f"{mean:>10} {std:>10} {row.n_cells:>6} {row.n_undefined:>6}\n")
    return out.getvalue()


def summarize(records: list[EvalRecord]) -> str:
    return render_summary_table(aggregate(records))
