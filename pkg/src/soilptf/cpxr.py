"""Contrast-pattern aided regression.

Training: fit a baseline multiple linear regression, split the samples
into large-error and small-error classes at a cumulative-error fraction,
mine contrast patterns of the large-error class over MDL-discretized
features, fit a local linear model on each pattern's matching samples,
then pick a small pattern set by greedy forward selection plus swap
passes. Prediction for a sample matching patterns p_i is the weighted
mean sum(w_i * f_i(x)) / sum(w_i); a sample matching none uses the
default model.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import json

import numpy as np

from .discretize import DiscretizationScheme, build_scheme
from .linreg import LinearModel, fit_local
from .patterns import (
    ContrastStats,
    Pattern,
    _mine_masks,
    _pattern_order_key,
    filter_similar_masks,
    matches,
)


class CpxrError(ValueError):
    pass


@dataclass(frozen=True)
class CpxrConfig:
    """Hyperparameters of the trainer; defaults follow the package-wide
    documented values."""

    rho: float = 0.45              # cumulative |residual| fraction forming the LE class
    min_support_le: float = 0.02   # minimum LE support of a mined pattern
    min_count_le: int = 2          # absolute LE match floor
    min_growth: float = 2.0
    max_len: int = 4               # items per pattern
    jaccard_max: float = 0.9       # similarity filter threshold
    min_reduction: float = 0.05    # required local error reduction vs baseline
    max_k: int = 7                 # patterns kept in the final model
    max_passes: int = 20           # swap-pass limit
    max_depth: int = 3             # discretization recursion depth
    weight_floor: float = 1e-6
    min_train: int = 30

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise CpxrError(f"rho must be in (0, 1), got {self.rho}")
        if self.max_k < 1 or self.max_passes < 1 or self.max_len < 1:
            raise CpxrError("max_k, max_passes and max_len must be positive")

    @classmethod
    def from_mapping(cls, overrides: dict) -> "CpxrConfig":
        unknown = set(overrides) - set(cls.__dataclass_fields__)
        if unknown:
            raise CpxrError(f"unknown hyperparameters: {sorted(unknown)}")
        return replace(cls(), **overrides)


@dataclass(frozen=True)
class ErrorSplit:
    """Large-error / small-error partition of sample ids."""

    le_ids: tuple
    se_ids: tuple
    total_abs_error: float
    cum_fraction: float

    def __post_init__(self):
        if set(self.le_ids) & set(self.se_ids):
            raise CpxrError("error classes overlap")


def split_le_se(residuals_by_id: dict, rho: float = 0.45) -> ErrorSplit:
    """Partition ids by descending |residual| at cumulative fraction rho.

    The large-error class is the minimal prefix of the sorted ids whose
    cumulative absolute residual reaches rho of the total; ties on
    |residual| put the larger id last. All-zero residuals give an empty
    large-error class.
    """
    if not 0 < rho < 1:
        raise CpxrError(f"rho must be in (0, 1), got {rho}")
    order = sorted(residuals_by_id, key=lambda i: (-abs(residuals_by_id[i]), i))
    total = float(sum(abs(residuals_by_id[i]) for i in order))
    if total == 0.0:
        return ErrorSplit(le_ids=(), se_ids=tuple(order), total_abs_error=0.0, cum_fraction=0.0)
    cum = 0.0
    le = []
    for i in order:
        if cum >= rho * total:
            break
        cum += abs(residuals_by_id[i])
        le.append(i)
    in_le = set(le)
    se = [i for i in order if i not in in_le]
    return ErrorSplit(
        le_ids=tuple(le),
        se_ids=tuple(se),
        total_abs_error=total,
        cum_fraction=cum / total,
    )


def local_weight(baseline_abs_error: float, local_abs_error: float, floor: float = 1e-6) -> float:
    """Weight of a local model: its relative error reduction on the
    pattern's matching samples, floored at a small positive value."""
    if baseline_abs_error < 0 or local_abs_error < 0:
        raise CpxrError("absolute errors cannot be negative")
    if baseline_abs_error == 0.0:
        return floor
    return max(floor, (baseline_abs_error - local_abs_error) / baseline_abs_error)


@dataclass
class PatternLocal:
    """One (pattern, local model, weight) entry of a fitted model."""

    pattern: Pattern
    model: LinearModel
    weight: float

    def __post_init__(self):
        if not self.weight > 0:
            raise CpxrError(f"pattern weight must be positive, got {self.weight}")


@dataclass
class PxrModel:
    """Pattern-aided regression model: local models behind contrast
    patterns plus a default model for unmatched samples."""

    pairs: list[PatternLocal]
    default_model: LinearModel
    baseline: LinearModel
    scheme: DiscretizationScheme
    feature_names: list[str]
    train_rmse: float = float("nan")
    baseline_rmse: float = float("nan")
    trace: list[float] = field(default_factory=list)

    def __post_init__(self):
        texts = [str(p.pattern) for p in self.pairs]
        if len(set(texts)) != len(texts):
            raise CpxrError("duplicate patterns in model")

    @property
    def k(self) -> int:
        return len(self.pairs)

    def predict(self, x) -> float:
        return pxr_predict(self, x)

    def predict_matrix(self, X: np.ndarray, feature_names) -> np.ndarray:
        from .patterns import pattern_mask

        X = np.asarray(X, dtype=float)
        default = self.default_model.predict_matrix(X, feature_names)
        if not self.pairs:
            return default
        num = np.zeros(len(X))
        den = np.zeros(len(X))
        for pair in self.pairs:
            m = pattern_mask(pair.pattern, X, feature_names)
            num += pair.weight * m * pair.model.predict_matrix(X, feature_names)
            den += pair.weight * m
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), default)

    def to_dict(self) -> dict:
        return {
            "kind": "pxr",
            "feature_names": list(self.feature_names),
            "pairs": [
                {
                    "pattern": p.pattern.to_dict(),
                    "model": p.model.to_dict(),
                    "weight": p.weight,
                }
                for p in self.pairs
            ],
            "default_model": self.default_model.to_dict(),
            "baseline": self.baseline.to_dict(),
            "scheme": self.scheme.to_dict(),
            "train_rmse": self.train_rmse,
            "baseline_rmse": self.baseline_rmse,
            "trace": list(self.trace),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PxrModel":
        return cls(
            pairs=[
                PatternLocal(
                    pattern=Pattern.from_dict(p["pattern"]),
                    model=LinearModel.from_dict(p["model"]),
                    weight=p["weight"],
                )
                for p in d["pairs"]
            ],
            default_model=LinearModel.from_dict(d["default_model"]),
            baseline=LinearModel.from_dict(d["baseline"]),
            scheme=DiscretizationScheme.from_dict(d["scheme"]),
            feature_names=list(d["feature_names"]),
            train_rmse=d["train_rmse"],
            baseline_rmse=d["baseline_rmse"],
            trace=list(d["trace"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PxrModel":
        return cls.from_dict(json.loads(text))


def pxr_predict(model: PxrModel, x) -> float:
    """Weighted-mean prediction over the patterns matching one sample."""
    num = 0.0
    den = 0.0
    for pair in model.pairs:
        if matches(pair.pattern, x):
            num += pair.weight * pair.model.predict(x)
            den += pair.weight
    if den > 0:
        return num / den
    return model.default_model.predict(x)


@dataclass
class _Candidate:
    pattern: Pattern
    stats: ContrastStats
    model: LinearModel
    weight: float
    mask: np.ndarray         # rows of the training set the pattern matches
    predictions: np.ndarray  # local-model predictions on every training row


def _set_error(cands, idx_list, y, default_pred):
    if not idx_list:
        return float(np.abs(y - default_pred).sum())
    num = np.zeros(len(y))
    den = np.zeros(len(y))
    for i in idx_list:
        num += cands[i].weight * cands[i].mask * cands[i].predictions
        den += cands[i].weight * cands[i].mask
    pred = np.where(den > 0, num / np.where(den > 0, den, 1.0), default_pred)
    return float(np.abs(y - pred).sum())


def _optimize(cands, y, default_pred, config: CpxrConfig):
    """Greedy forward selection then swap passes on total absolute error."""
    chosen: list[int] = []
    err = _set_error(cands, chosen, y, default_pred)
    trace = [err]

    def batch_errors(base_idx, pool):
        num = np.zeros(len(y))
        den = np.zeros(len(y))
        for i in base_idx:
            num += cands[i].weight * cands[i].mask * cands[i].predictions
            den += cands[i].weight * cands[i].mask
        errs = np.empty(len(pool))
        for row, c in enumerate(pool):
            num_c = num + cands[c].weight * cands[c].mask * cands[c].predictions
            den_c = den + cands[c].weight * cands[c].mask
            pred = np.where(den_c > 0, num_c / np.where(den_c > 0, den_c, 1.0), default_pred)
            errs[row] = np.abs(y - pred).sum()
        return errs

    while len(chosen) < config.max_k:
        pool = [i for i in range(len(cands)) if i not in chosen]
        if not pool:
            break
        errs = batch_errors(chosen, pool)
        best = int(np.argmin(errs))
        if errs[best] < err:
            chosen.append(pool[best])
            err = float(errs[best])
            trace.append(err)
        else:
            break

    for _ in range(config.max_passes):
        swapped = False
        for pos in range(len(chosen)):
            others = chosen[:pos] + chosen[pos + 1 :]
            pool = [i for i in range(len(cands)) if i not in chosen]
            if not pool:
                break
            errs = batch_errors(others, pool)
            best = int(np.argmin(errs))
            if errs[best] < err:
                chosen[pos] = pool[best]
                err = float(errs[best])
                trace.append(err)
                swapped = True
        if not swapped:
            break

    for a, b in zip(trace, trace[1:]):
        if not b < a:
            raise CpxrError(f"optimizer accepted a non-improving move: {a} -> {b}")
    return chosen, err, trace


def optimize_pattern_set(candidates, X, y, feature_names, baseline: LinearModel,
                         config: CpxrConfig = CpxrConfig()):
    """Select up to max_k of the candidate (pattern, model, weight) entries.

    Scoring uses the weighted-mean prediction rule with the baseline as
    the default model. Returns (chosen entries, objective trace); the
    trace is strictly decreasing by construction.
    """
    from .patterns import pattern_mask

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    default_pred = baseline.predict_matrix(X, feature_names)
    cands = [
        _Candidate(
            pattern=c.pattern,
            stats=None,
            model=c.model,
            weight=c.weight,
            mask=pattern_mask(c.pattern, X, feature_names),
            predictions=c.model.predict_matrix(X, feature_names),
        )
        for c in candidates
    ]
    chosen, _, trace = _optimize(cands, y, default_pred, config)
    return [candidates[i] for i in chosen], trace


def train_cpxr(X, y, feature_names, config: CpxrConfig = CpxrConfig(),
               categorical=()) -> PxrModel:
    """Fit a pattern-aided regression model on a design matrix.

    The result never predicts the training data worse (in RMSE) than the
    baseline regression: if the optimized pattern set loses to the
    baseline after the default-model refit, the empty set is returned.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    names = list(feature_names)
    n, p = X.shape
    if n < config.min_train:
        raise CpxrError(f"need at least {config.min_train} training rows, got {n}")

    baseline = _fit_global(X, y, names)
    base_pred = baseline.predict_matrix(X, names)
    r0 = y - base_pred
    baseline_rmse = float(np.sqrt(np.mean(r0**2)))

    def finalize(pairs, default, err_trace):
        if pairs:
            model = PxrModel(
                pairs=pairs, default_model=default, baseline=baseline, scheme=scheme,
                feature_names=names, baseline_rmse=baseline_rmse, trace=err_trace,
            )
            pred = model.predict_matrix(X, names)
            model.train_rmse = float(np.sqrt(np.mean((y - pred) ** 2)))
            if model.train_rmse <= baseline_rmse:
                return model
        return PxrModel(
            pairs=[], default_model=baseline, baseline=baseline, scheme=scheme,
            feature_names=names, train_rmse=baseline_rmse, baseline_rmse=baseline_rmse,
            trace=err_trace,
        )

    scheme = DiscretizationScheme()
    split = split_le_se({i: float(r0[i]) for i in range(n)}, config.rho)
    if not split.le_ids:
        return finalize([], baseline, [float(np.abs(r0).sum())])

    le_rows = np.zeros(n, dtype=bool)
    le_rows[list(split.le_ids)] = True
    labels = le_rows.astype(int)
    scheme = build_scheme(X, labels, names, categorical=categorical, max_depth=config.max_depth)

    items = scheme.alphabet()
    if not items:
        return finalize([], baseline, [float(np.abs(r0).sum())])
    col = {name: j for j, name in enumerate(names)}
    item_masks = np.array([it.covers_array(X[:, col[it.feature]]) for it in items])
    mined = _mine_masks(
        items,
        item_masks[:, le_rows],
        item_masks[:, ~le_rows],
        config.min_support_le,
        config.min_growth,
        config.max_len,
        config.min_count_le,
    )
    if not mined:
        return finalize([], baseline, [float(np.abs(r0).sum())])

    item_index = {it: j for j, it in enumerate(items)}
    full_masks = np.array(
        [np.logical_and.reduce(item_masks[[item_index[it] for it in pat.items]])
         for pat, _ in mined]
    )
    order_keys = [_pattern_order_key(pat, st) for pat, st in mined]
    kept = filter_similar_masks(order_keys, full_masks, config.jaccard_max)

    min_rows = max(p + 2, 10)
    candidates: list[_Candidate] = []
    for i in kept:
        mask = full_masks[i]
        if int(mask.sum()) < min_rows:
            continue
        e0 = float(np.abs(r0[mask]).sum())
        if e0 <= 0.0:
            continue
        local = fit_local(X[mask], y[mask], feature_names=names)
        local_pred = local.predict_matrix(X, names)
        ei = float(np.abs(y[mask] - local_pred[mask]).sum())
        if (e0 - ei) / e0 < config.min_reduction:
            continue
        pattern, stats = mined[i]
        candidates.append(
            _Candidate(
                pattern=pattern,
                stats=stats,
                model=local,
                weight=local_weight(e0, ei, config.weight_floor),
                mask=mask,
                predictions=local_pred,
            )
        )
    if not candidates:
        return finalize([], baseline, [float(np.abs(r0).sum())])

    chosen_idx, _, trace = _optimize(candidates, y, base_pred, config)
    chosen = [candidates[i] for i in chosen_idx]

    default = baseline
    if chosen:
        matched = np.logical_or.reduce([c.mask for c in chosen])
        unmatched = ~matched
        if int(unmatched.sum()) >= min_rows:
            default = fit_local(X[unmatched], y[unmatched], feature_names=names)
    pairs = [PatternLocal(pattern=c.pattern, model=c.model, weight=c.weight) for c in chosen]
    return finalize(pairs, default, trace)


def _fit_global(X, y, names) -> LinearModel:
    # the baseline regression gets the same ridge fallback local fits use
    return fit_local(X, y, feature_names=names)
