"""Evaluation protocol: error metrics and repeated cross-validation.

The default protocol is a rotating-pair split of k folds: split j tests
folds {j, (j+1) mod k} and trains on the remaining k-2, giving k
iterations per repetition and putting every sample in exactly two test
splits per repetition. Paired method comparisons reuse identical fold
assignments through a shared seed.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import json

import numpy as np

from .cpxr import CpxrConfig, CpxrError, train_cpxr
from .data import Dataset, assign_folds, select_columns
from .hydrology import LOG_TARGETS, ModelConfig
from .linreg import fit_local


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class MetricSet:
    """RMSE plus (when defined) RMSLE and the squared Pearson correlation."""

    rmse: float
    rmsle: float | None = None
    r2: float | None = None

    def to_dict(self) -> dict:
        return {"rmse": self.rmse, "rmsle": self.rmsle, "r2": self.r2}

    @classmethod
    def from_dict(cls, d: dict) -> "MetricSet":
        return cls(rmse=d["rmse"], rmsle=d.get("rmsle"), r2=d.get("r2"))


def metrics(predicted, observed, log_space: bool = False, r2_mode: str = "pearson") -> MetricSet:
    """Error metrics over parallel prediction/observation vectors.

    log_space marks values that already live in natural-log space, where
    the plain RMSE doubles as the RMSLE. Otherwise the RMSLE is computed
    over the logs when every value is positive and omitted when not.
    r2_mode 'pearson' is the squared correlation; 'determination' gives
    1 - SSE/SST. Either is None when its denominator has no variance.
    """
    p = np.asarray(predicted, dtype=float)
    o = np.asarray(observed, dtype=float)
    if p.shape != o.shape or p.ndim != 1:
        raise EvaluationError(f"shape mismatch: {p.shape} vs {o.shape}")
    if len(p) < 2:
        raise EvaluationError(f"need at least 2 values, got {len(p)}")
    if r2_mode not in ("pearson", "determination"):
        raise EvaluationError(f"unknown r2_mode {r2_mode!r}")
    rmse = float(np.sqrt(np.mean((p - o) ** 2)))
    if log_space:
        rmsle = rmse
    elif np.all(p > 0) and np.all(o > 0):
        rmsle = float(np.sqrt(np.mean((np.log(p) - np.log(o)) ** 2)))
    else:
        rmsle = None
    r2 = None
    sse = float(((o - p) ** 2).sum())
    sst = float(((o - o.mean()) ** 2).sum())
    if r2_mode == "determination":
        if sst > 0:
            r2 = 1.0 - sse / sst
    else:
        vp = float(((p - p.mean()) ** 2).sum())
        if sst > 0 and vp > 0:
            cov = float(((p - p.mean()) * (o - o.mean())).sum())
            r2 = cov * cov / (vp * sst)
    return MetricSet(rmse=rmse, rmsle=rmsle, r2=r2)


@dataclass
class IterationRecord:
    """Metrics of one (repetition, split) iteration."""

    repetition: int
    split: int
    n_train: int
    n_test: int
    test_ids: list[str]
    degraded: bool
    train: dict[str, MetricSet]
    test: dict[str, MetricSet]
    predictions: list | None = None  # (id, target, observed, predicted) rows

    def to_dict(self) -> dict:
        return {
            "repetition": self.repetition,
            "split": self.split,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "test_ids": list(self.test_ids),
            "degraded": self.degraded,
            "train": {t: m.to_dict() for t, m in self.train.items()},
            "test": {t: m.to_dict() for t, m in self.test.items()},
            "predictions": self.predictions,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IterationRecord":
        return cls(
            repetition=d["repetition"],
            split=d["split"],
            n_train=d["n_train"],
            n_test=d["n_test"],
            test_ids=list(d["test_ids"]),
            degraded=d["degraded"],
            train={t: MetricSet.from_dict(m) for t, m in d["train"].items()},
            test={t: MetricSet.from_dict(m) for t, m in d["test"].items()},
            predictions=d.get("predictions"),
        )


@dataclass
class EvaluationReport:
    """All per-iteration records of one method under one configuration."""

    config_id: str
    method: str
    seed: int
    repetitions: int
    k: int
    cv_scheme: str
    target_names: list[str]
    records: list[IterationRecord] = field(default_factory=list)

    @property
    def iteration_count(self) -> int:
        return len(self.records)

    def summary(self, split: str = "test") -> dict[str, MetricSet]:
        """Per-target metrics averaged over iterations; r2 and rmsle are
        averaged over the iterations where they are defined."""
        if split not in ("train", "test"):
            raise EvaluationError(f"split must be 'train' or 'test', got {split!r}")
        out = {}
        for t in self.target_names:
            sets = [getattr(rec, split)[t] for rec in self.records]
            rmse = float(np.mean([m.rmse for m in sets]))
            rmsles = [m.rmsle for m in sets if m.rmsle is not None]
            r2s = [m.r2 for m in sets if m.r2 is not None]
            out[t] = MetricSet(
                rmse=rmse,
                rmsle=float(np.mean(rmsles)) if rmsles else None,
                r2=float(np.mean(r2s)) if r2s else None,
            )
        return out

    def to_dict(self) -> dict:
        return {
            "config_id": self.config_id,
            "method": self.method,
            "seed": self.seed,
            "repetitions": self.repetitions,
            "k": self.k,
            "cv_scheme": self.cv_scheme,
            "target_names": list(self.target_names),
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        return cls(
            config_id=d["config_id"],
            method=d["method"],
            seed=d["seed"],
            repetitions=d["repetitions"],
            k=d["k"],
            cv_scheme=d["cv_scheme"],
            target_names=list(d["target_names"]),
            records=[IterationRecord.from_dict(r) for r in d["records"]],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvaluationReport":
        return cls.from_dict(json.loads(text))


def _splits_for(k: int, scheme: str):
    if scheme == "paired":
        if k < 3:
            raise EvaluationError("rotating-pair validation needs at least 3 folds")
        return [(j, ((j, (j + 1) % k))) for j in range(k)]
    if scheme == "classic":
        return [(j, (j,)) for j in range(k)]
    raise EvaluationError(f"unknown cv scheme {scheme!r}")


def _fit_method(method, X_tr, y_tr, names, cpxr_config):
    """Fit one target with the requested method; returns (model, degraded)."""
    if method == "mlr":
        return fit_local(X_tr, y_tr, feature_names=names), False
    if method == "cpxr":
        try:
            return train_cpxr(X_tr, y_tr, names, config=cpxr_config), False
        except CpxrError:
            return fit_local(X_tr, y_tr, feature_names=names), True
    raise EvaluationError(f"unknown method {method!r}; expected 'mlr' or 'cpxr'")


def _run_repetition(args):
    (rep, ids, X, targets, names, k, scheme, seed, method, cpxr_config,
     collect_predictions) = args
    folds = assign_folds(ids, k, seed ^ rep, repetition=rep)
    row_of = {sid: i for i, sid in enumerate(ids)}
    records = []
    for split_id, test_folds in _splits_for(k, scheme):
        test_ids = sorted(
            (sid for sid, f in folds.fold_of_sample.items() if f in test_folds),
            key=lambda s: row_of[s],
        )
        test_idx = np.array([row_of[s] for s in test_ids], dtype=int)
        train_mask = np.ones(len(ids), dtype=bool)
        train_mask[test_idx] = False
        train_idx = np.flatnonzero(train_mask)
        if set(train_idx) & set(test_idx):
            raise EvaluationError("train/test leakage in fold assignment")
        X_tr, X_te = X[train_idx], X[test_idx]
        degraded = False
        train_metrics, test_metrics = {}, {}
        rows = [] if collect_predictions else None
        for t, y in targets.items():
            y_tr, y_te = y[train_idx], y[test_idx]
            model, fell_back = _fit_method(method, X_tr, y_tr, names, cpxr_config)
            degraded = degraded or fell_back
            log_space = t in LOG_TARGETS
            pred_tr = model.predict_matrix(X_tr, names)
            pred_te = model.predict_matrix(X_te, names)
            train_metrics[t] = metrics(pred_tr, y_tr, log_space=log_space)
            test_metrics[t] = metrics(pred_te, y_te, log_space=log_space)
            if rows is not None:
                rows.extend(
                    [test_ids[i], t, float(y_te[i]), float(pred_te[i])]
                    for i in range(len(test_ids))
                )
        records.append(
            IterationRecord(
                repetition=rep,
                split=split_id,
                n_train=len(train_idx),
                n_test=len(test_idx),
                test_ids=list(test_ids),
                degraded=degraded,
                train=train_metrics,
                test=test_metrics,
                predictions=rows,
            )
        )
    return records


def cross_validate(
    dataset: Dataset,
    config: ModelConfig,
    method: str = "mlr",
    repetitions: int = 10,
    seed: int = 0,
    k: int = 10,
    cv_scheme: str = "paired",
    cpxr_config: CpxrConfig = CpxrConfig(),
    jobs: int = 1,
    collect_predictions: bool = False,
) -> EvaluationReport:
    """Repeated k-fold cross-validation of one method on one configuration.

    Repetition r draws folds with seed XOR r, so runs sharing a seed share
    fold assignments across methods. Iterations whose training set cannot
    support the pattern trainer fall back to the baseline regression and
    are flagged degraded rather than failing.
    """
    if repetitions < 1:
        raise EvaluationError(f"repetitions must be positive, got {repetitions}")
    selection = select_columns(dataset, config)
    _splits_for(k, cv_scheme)  # validate early
    payloads = [
        (rep, selection.ids, selection.X, selection.targets, selection.feature_names,
         k, cv_scheme, seed, method, cpxr_config, collect_predictions)
        for rep in range(repetitions)
    ]
    if jobs > 1 and repetitions > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_repetition, payloads))
    else:
        chunks = [_run_repetition(p) for p in payloads]
    records = [rec for chunk in chunks for rec in chunk]
    return EvaluationReport(
        config_id=config.id,
        method=method,
        seed=seed,
        repetitions=repetitions,
        k=k,
        cv_scheme=cv_scheme,
        target_names=list(selection.targets),
        records=records,
    )


@dataclass
class ComparisonRow:
    target: str
    metric: str
    value_a: float
    value_b: float
    pct_change: float  # positive: b improves on a


@dataclass
class ComparisonTable:
    method_a: str
    method_b: str
    split: str
    rows: list[ComparisonRow]

    def __str__(self) -> str:
        head = f"{'target':<12} {'metric':<6} {self.method_a:>12} {self.method_b:>12} {'change %':>9}"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            lines.append(
                f"{r.target:<12} {r.metric:<6} {r.value_a:>12.4f} {r.value_b:>12.4f} {r.pct_change:>8.1f}%"
            )
        return "\n".join(lines)

    def to_csv_text(self) -> str:
        lines = ["target,metric," + f"{self.method_a},{self.method_b},pct_change"]
        for r in self.rows:
            lines.append(
                f"{r.target},{r.metric},{r.value_a!r},{r.value_b!r},{r.pct_change!r}"
            )
        return "\n".join(lines) + "\n"


def compare(report_a: EvaluationReport, report_b: EvaluationReport, split: str = "test") -> ComparisonTable:
    """Per-target relative change of report_b versus report_a.

    Positive percentages mean report_b's method lowered the error. The two
    reports must cover the same configuration and targets; pair them from
    runs sharing a seed to keep fold assignments identical.
    """
    if report_a.config_id != report_b.config_id:
        raise EvaluationError(
            f"config mismatch: {report_a.config_id!r} vs {report_b.config_id!r}"
        )
    if report_a.target_names != report_b.target_names:
        raise EvaluationError("target mismatch between reports")
    sum_a = report_a.summary(split)
    sum_b = report_b.summary(split)
    rows = []
    for t in report_a.target_names:
        use_log = t in LOG_TARGETS
        metric = "rmsle" if use_log else "rmse"
        a = sum_a[t].rmsle if use_log else sum_a[t].rmse
        b = sum_b[t].rmsle if use_log else sum_b[t].rmse
        if a is None or b is None:
            continue
        pct = 0.0 if a == 0 else 100.0 * (a - b) / a
        rows.append(ComparisonRow(target=t, metric=metric, value_a=a, value_b=b, pct_change=pct))
    return ComparisonTable(
        method_a=report_a.method, method_b=report_b.method, split=split, rows=rows
    )
