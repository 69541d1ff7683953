"""Comparison tables over record files: incumbent quality percentiles across
seeds on a common time grid, plus offline re-validation of incumbents."""

from __future__ import annotations

import numpy as np

from .benchmarks import EvaluationError
from .strategies import ExperimentRecord

MISSING = "NA"


def incumbent_quality_at(record: ExperimentRecord, t: float) -> float | None:
    """Quality of the last incumbent announced at or before time t.

    Prefers the offline-validated true loss when present, otherwise the
    model-predicted incumbent loss. None when no incumbent exists yet.
    """
    value = None
    for row in record.rows:
        if row["elapsed_seconds"] > t:
            break
        if row.get("incumbent") is None:
            continue
        v = row.get("true_loss", row.get("predicted_incumbent_loss"))
        if v is not None:
            value = float(v)
    return value


def default_grid(records: list[ExperimentRecord], n_points: int = 30) -> np.ndarray:
    """Log-spaced grid spanning the elapsed range observed across records."""
    starts = [r.rows[0]["elapsed_seconds"] for r in records if r.rows]
    ends = [r.rows[-1]["elapsed_seconds"] for r in records if r.rows]
    if not starts:
        raise ValueError("no non-empty records to build a grid from")
    lo = max(min(starts), 1e-9)
    hi = max(max(ends), lo * (1 + 1e-9))
    return np.geomspace(lo, hi, n_points)


def build_report(
    records: list[ExperimentRecord], grid=None, n_points: int = 30
) -> list[dict]:
    """Per-strategy median/q25/q75 incumbent quality at each grid time.

    Rows are ordered by strategy name then time, so the output depends only on
    record contents, never on input file ordering.
    """
    if not records:
        raise ValueError("need at least one record")
    grid = default_grid(records, n_points) if grid is None else np.asarray(grid, float)
    by_strategy: dict[str, list[ExperimentRecord]] = {}
    for r in records:
        by_strategy.setdefault(r.strategy, []).append(r)
    out = []
    for strategy in sorted(by_strategy):
        group = by_strategy[strategy]
        for t in grid:
            vals = [incumbent_quality_at(r, float(t)) for r in group]
            vals = [v for v in vals if v is not None]
            if vals:
                q50, q25, q75 = np.percentile(vals, [50, 25, 75])
                row = dict(median=float(q50), q25=float(q25), q75=float(q75))
            else:
                row = dict(median=MISSING, q25=MISSING, q75=MISSING)
            out.append(dict(strategy=strategy, time=float(t), **row))
    return out


def report_csv(rows: list[dict]) -> str:
    lines = ["strategy,time,median,q25,q75"]
    for r in rows:
        cells = [r["strategy"], f"{r['time']:.9g}"]
        for k in ("median", "q25", "q75"):
            v = r[k]
            cells.append(v if isinstance(v, str) else f"{v:.9g}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def offline_validate(
    record: ExperimentRecord, objective, validation_seed: int = 10**6
) -> ExperimentRecord:
    """Re-evaluate every logged incumbent on the full dataset and append the
    measured loss as true_loss; failed evaluations mark the row invalid."""
    rows = []
    for row in record.rows:
        row = dict(row)
        if row.get("incumbent") is not None:
            try:
                res = objective(
                    np.asarray(row["incumbent"], float), 1.0, validation_seed
                )
                row["true_loss"] = float(res.loss)
            except EvaluationError:
                row["true_loss"] = None
                row["validation_failed"] = True
        rows.append(row)
    return ExperimentRecord(strategy=record.strategy, seed=record.seed, rows=rows)
