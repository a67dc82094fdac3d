"""Contrast patterns over discretized features.

A pattern is a conjunction of items, each either a half-open interval
condition on a numeric feature or an equality condition on a categorical
one, with at most one item per feature. Contrast patterns are those much
more frequent in the large-error class than in the small-error class.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

INF = float("inf")


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class Item:
    """One condition: lo <= feature < hi, or feature == value."""

    feature: str
    lo: float = -INF
    hi: float = INF
    value: float | None = None

    def __post_init__(self):
        if self.value is None and not self.lo < self.hi:
            raise PatternError(f"empty interval [{self.lo}, {self.hi}) on {self.feature!r}")

    @property
    def is_equality(self) -> bool:
        return self.value is not None

    def covers(self, x: float) -> bool:
        if self.value is not None:
            return x == self.value
        return self.lo <= x < self.hi

    def covers_array(self, col: np.ndarray) -> np.ndarray:
        if self.value is not None:
            return col == self.value
        return (col >= self.lo) & (col < self.hi)

    def sort_key(self):
        return (self.feature, self.is_equality, self.lo, self.hi,
                0.0 if self.value is None else self.value)

    def __str__(self) -> str:
        if self.value is not None:
            return f"{self.feature} = {self.value:g}"
        if self.lo == -INF and self.hi == INF:
            return f"{self.feature} any"
        if self.lo == -INF:
            return f"{self.feature} < {self.hi:g}"
        if self.hi == INF:
            return f"{self.feature} >= {self.lo:g}"
        return f"{self.lo:g} <= {self.feature} < {self.hi:g}"

    def to_dict(self) -> dict:
        if self.value is not None:
            return {"feature": self.feature, "value": self.value}
        return {
            "feature": self.feature,
            "lo": None if self.lo == -INF else self.lo,
            "hi": None if self.hi == INF else self.hi,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Item":
        if "value" in d:
            return cls(feature=d["feature"], value=d["value"])
        lo = -INF if d.get("lo") is None else d["lo"]
        hi = INF if d.get("hi") is None else d["hi"]
        return cls(feature=d["feature"], lo=lo, hi=hi)


@dataclass(frozen=True)
class Pattern:
    """Conjunction of items, at most one per feature."""

    items: tuple[Item, ...]

    def __post_init__(self):
        if not self.items:
            raise PatternError("pattern needs at least one item")
        feats = [it.feature for it in self.items]
        if len(set(feats)) != len(feats):
            raise PatternError(f"more than one item on a feature: {feats}")
        ordered = tuple(sorted(self.items, key=Item.sort_key))
        object.__setattr__(self, "items", ordered)

    def __len__(self) -> int:
        return len(self.items)

    @property
    def features(self) -> tuple[str, ...]:
        return tuple(it.feature for it in self.items)

    def __str__(self) -> str:
        return " & ".join(str(it) for it in self.items)

    def to_dict(self) -> list:
        return [it.to_dict() for it in self.items]

    @classmethod
    def from_dict(cls, items: list) -> "Pattern":
        return cls(tuple(Item.from_dict(d) for d in items))


def matches(pattern: Pattern, sample) -> bool:
    """True when every pattern item covers the sample's feature value.

    The sample may be a Sample or a plain mapping; a missing or None value
    under a pattern feature is an error.
    """
    for it in pattern.items:
        if hasattr(sample, "value"):
            x = sample.value(it.feature)
        else:
            try:
                x = sample[it.feature]
            except KeyError:
                raise PatternError(f"sample lacks feature {it.feature!r}") from None
        if x is None:
            raise PatternError(f"sample has no value for feature {it.feature!r}")
        if not it.covers(x):
            return False
    return True


def matching_dataset(pattern: Pattern, dataset) -> set[str]:
    """Ids of the samples in a dataset that the pattern matches."""
    return {s.id for s in dataset.samples if matches(pattern, s)}


def pattern_mask(pattern: Pattern, X: np.ndarray, feature_names) -> np.ndarray:
    """Boolean row mask of the pattern over a design matrix."""
    idx = {name: j for j, name in enumerate(feature_names)}
    mask = np.ones(len(X), dtype=bool)
    for it in pattern.items:
        if it.feature not in idx:
            raise PatternError(f"design matrix lacks feature {it.feature!r}")
        mask &= it.covers_array(X[:, idx[it.feature]])
    return mask


@dataclass(frozen=True)
class ContrastStats:
    """Supports on the two error classes and their ratio."""

    support_le: float
    support_se: float
    count_le: int
    count_se: int

    @property
    def growth(self) -> float:
        if self.support_se == 0.0:
            return INF
        return self.support_le / self.support_se


def _pattern_order_key(pattern: Pattern, stats: ContrastStats):
    # descending growth, then descending support_le, then shorter, then text
    return (-stats.growth, -stats.support_le, len(pattern), str(pattern))


def mine_contrast_patterns(
    le,
    se,
    scheme,
    min_support_le: float = 0.02,
    min_growth: float = 2.0,
    max_len: int = 4,
    min_count_le: int = 2,
) -> list[tuple[Pattern, ContrastStats]]:
    """Enumerate all contrast patterns of the large-error class.

    Level-wise search over the scheme's item alphabet; a pattern survives
    when its large-error support is at least min_support_le (and at least
    min_count_le samples), its growth rate is at least min_growth and it
    has at most max_len items. Support is anti-monotone, so candidates are
    pruned on it alone; growth is checked at emission.
    """
    if len(le) == 0:
        raise PatternError("large-error class is empty")
    if min_support_le <= 0 or min_growth <= 0 or max_len < 1:
        raise PatternError("mining thresholds must be positive")
    le_ids = set(le.ids())
    se_ids = set(se.ids())
    if le_ids & se_ids:
        raise PatternError(f"error classes overlap: {sorted(le_ids & se_ids)}")

    items = scheme.alphabet()
    if not items:
        return []  # no discriminative items, nothing to enumerate
    feats = sorted({it.feature for it in items})
    col = {name: j for j, name in enumerate(feats)}
    X_le = _value_matrix(le, feats)
    X_se = _value_matrix(se, feats)
    masks_le = np.array([it.covers_array(X_le[:, col[it.feature]]) for it in items])
    masks_se = np.array([it.covers_array(X_se[:, col[it.feature]]) for it in items])
    found = _mine_masks(items, masks_le, masks_se, min_support_le, min_growth, max_len, min_count_le)
    return sorted(found, key=lambda pair: _pattern_order_key(*pair))


def _value_matrix(dataset, feature_names) -> np.ndarray:
    rows = []
    for s in dataset.samples:
        vals = [s.value(c) for c in feature_names]
        if any(v is None for v in vals):
            raise PatternError(f"sample {s.id!r} missing a discretized feature")
        rows.append(vals)
    return np.array(rows, dtype=float)


def _mine_masks(
    items: list[Item],
    masks_le: np.ndarray,
    masks_se: np.ndarray,
    min_support_le: float,
    min_growth: float,
    max_len: int,
    min_count_le: int,
) -> list[tuple[Pattern, ContrastStats]]:
    """Core level-wise miner over precomputed per-item row masks."""
    n_le = masks_le.shape[1]
    n_se = masks_se.shape[1]
    min_cnt = max(min_count_le, math.ceil(min_support_le * n_le))

    def stats_for(mask_le, mask_se) -> ContrastStats:
        c_le = int(mask_le.sum())
        c_se = int(mask_se.sum())
        return ContrastStats(
            support_le=c_le / n_le,
            support_se=c_se / n_se if n_se else 0.0,
            count_le=c_le,
            count_se=c_se,
        )

    results = []
    # frontier entries: (last item index, item indices tuple, mask_le, mask_se)
    frontier = []
    for j, it in enumerate(items):
        m_le = masks_le[j]
        if int(m_le.sum()) < min_cnt:
            continue
        frontier.append(((j,), m_le, masks_se[j]))
    _emit(results, items, frontier, stats_for, min_growth)

    for _level in range(2, max_len + 1):
        nxt = []
        for idxs, m_le, m_se in frontier:
            used = {items[j].feature for j in idxs}
            for j in range(idxs[-1] + 1, len(items)):
                if items[j].feature in used:
                    continue
                ext_le = m_le & masks_le[j]
                if int(ext_le.sum()) < min_cnt:
                    continue
                nxt.append((idxs + (j,), ext_le, m_se & masks_se[j]))
        _emit(results, items, nxt, stats_for, min_growth)
        frontier = nxt
        if not frontier:
            break
    return results


def _emit(results, items, frontier, stats_for, min_growth):
    for idxs, m_le, m_se in frontier:
        st = stats_for(m_le, m_se)
        if st.growth >= min_growth:
            results.append((Pattern(tuple(items[j] for j in idxs)), st))


def filter_similar(
    candidates: list[tuple[Pattern, ContrastStats]],
    dataset,
    jaccard_max: float = 0.9,
) -> list[tuple[Pattern, ContrastStats]]:
    """Drop patterns whose matching dataset nearly duplicates a kept one.

    Greedy scan in descending (growth, support_le, shorter, text) order;
    a candidate is dropped when the Jaccard similarity of its matching
    dataset with any kept pattern's exceeds jaccard_max.
    """
    ordered = sorted(candidates, key=lambda pair: _pattern_order_key(*pair))
    kept: list[tuple[Pattern, ContrastStats]] = []
    kept_sets: list[set[str]] = []
    for pattern, st in ordered:
        mds = matching_dataset(pattern, dataset)
        if any(_jaccard(mds, other) > jaccard_max for other in kept_sets):
            continue
        kept.append((pattern, st))
        kept_sets.append(mds)
    return kept


def filter_similar_masks(order_keys, masks: np.ndarray, jaccard_max: float) -> list[int]:
    """Mask-based variant of filter_similar; returns kept indices.

    order_keys must sort ascending into the same scan order filter_similar
    uses; masks holds one boolean row per candidate.
    """
    ranked = sorted(range(len(order_keys)), key=lambda i: order_keys[i])
    kept: list[int] = []
    for i in ranked:
        m = masks[i]
        ok = True
        for j in kept:
            inter = int((m & masks[j]).sum())
            union = int((m | masks[j]).sum())
            if (1.0 if union == 0 else inter / union) > jaccard_max:
                ok = False
                break
        if ok:
            kept.append(i)
    return kept


def _jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)
