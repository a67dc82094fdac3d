"""Entropy/MDL discretization of numeric features against a binary labeling.

Recursive binary splitting: candidate cuts are midpoints between adjacent
distinct values whose surrounding label sets differ; a split is kept only
when its information gain clears the minimum-description-length threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import json
import math

import numpy as np

from .patterns import Item

# Recursion depth cap; at most 2**MAX_DEPTH bins per feature.
MAX_DEPTH = 3


class DiscretizeError(ValueError):
    pass


@dataclass(frozen=True)
class CutPoints:
    """Strictly increasing cut positions for one numeric feature."""

    feature: str
    cuts: tuple[float, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.cuts, self.cuts[1:])):
            raise DiscretizeError(f"cuts not strictly increasing: {self.cuts}")


@dataclass
class DiscretizationScheme:
    """Per-feature cut points plus pass-through categorical features."""

    cuts: dict[str, tuple[float, ...]] = field(default_factory=dict)
    categorical: dict[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        overlap = set(self.cuts) & set(self.categorical)
        if overlap:
            raise DiscretizeError(f"features both numeric and categorical: {sorted(overlap)}")

    @property
    def features(self) -> list[str]:
        return sorted(self.cuts) + sorted(self.categorical)

    def interval_item(self, feature: str, x: float) -> Item:
        """The unique interval (or equality) item of a feature covering x."""
        if feature in self.categorical:
            return Item(feature=feature, value=x)
        if feature not in self.cuts:
            raise DiscretizeError(f"feature {feature!r} absent from scheme")
        cuts = self.cuts[feature]
        lo, hi = -math.inf, math.inf
        for c in cuts:
            if x < c:
                hi = c
                break
            lo = c
        return Item(feature=feature, lo=lo, hi=hi)

    def items_for(self, sample) -> frozenset[Item]:
        out = []
        for feature in self.features:
            x = sample.value(feature) if hasattr(sample, "value") else sample[feature]
            if x is None:
                raise DiscretizeError(f"missing value for feature {feature!r}")
            out.append(self.interval_item(feature, x))
        return frozenset(out)

    def alphabet(self) -> list[Item]:
        """All discriminative items: interval items per cut feature plus
        equality items per categorical feature. Features without cuts
        contribute nothing (their single item covers every value)."""
        items = []
        for feature in sorted(self.cuts):
            cuts = self.cuts[feature]
            if not cuts:
                continue
            edges = (-math.inf, *cuts, math.inf)
            items.extend(
                Item(feature=feature, lo=lo, hi=hi) for lo, hi in zip(edges, edges[1:])
            )
        for feature in sorted(self.categorical):
            items.extend(Item(feature=feature, value=v) for v in self.categorical[feature])
        return items

    def to_dict(self) -> dict:
        doc = {f: list(c) for f, c in sorted(self.cuts.items())}
        doc.update({f: {"values": list(v)} for f, v in sorted(self.categorical.items())})
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "DiscretizationScheme":
        cuts, cat = {}, {}
        for f, spec in doc.items():
            if isinstance(spec, dict):
                cat[f] = tuple(spec["values"])
            else:
                cuts[f] = tuple(spec)
        return cls(cuts=cuts, categorical=cat)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DiscretizationScheme":
        return cls.from_dict(json.loads(text))


def _entropy(counts: np.ndarray) -> float:
    """Shannon entropy in bits of a class-count vector."""
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _mdl_accepts(n: int, whole: np.ndarray, left: np.ndarray, right: np.ndarray) -> bool:
    h = _entropy(whole)
    h1 = _entropy(left)
    h2 = _entropy(right)
    gain = h - (left.sum() / n) * h1 - (right.sum() / n) * h2
    c = int((whole > 0).sum())
    c1 = int((left > 0).sum())
    c2 = int((right > 0).sum())
    delta = math.log2(3**c - 2) - (c * h - c1 * h1 - c2 * h2)
    return gain > (math.log2(n - 1) + delta) / n


def mdl_discretize(values, labels, feature: str = "", max_depth: int = MAX_DEPTH) -> CutPoints:
    """Split a value axis recursively while the MDL criterion holds.

    values are one numeric column, labels the parallel class assignment
    (any hashable labels; here large-error vs small-error). Returns cut
    positions strictly inside the observed range; degenerate input
    (fewer than 2 rows, constant values, one class) yields no cuts.
    """
    vals = np.asarray(values, dtype=float)
    labs = np.asarray(labels)
    if vals.shape != labs.shape or vals.ndim != 1:
        raise DiscretizeError(f"values/labels shape mismatch: {vals.shape} vs {labs.shape}")
    if np.isnan(vals).any():
        raise DiscretizeError("values contain NaN")
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    labs = labs[order]
    classes, class_idx = np.unique(labs, return_inverse=True)
    k = len(classes)
    cuts: list[float] = []
    if len(vals) >= 2 and k >= 2:
        _split_segment(vals, class_idx, k, 0, len(vals), 0, max_depth, cuts)
    return CutPoints(feature=feature, cuts=tuple(sorted(cuts)))


def _split_segment(vals, class_idx, k, start, stop, depth, max_depth, cuts):
    if depth >= max_depth or stop - start < 2:
        return
    n = stop - start
    # Per-distinct-value class counts inside the segment.
    groups: list[tuple[float, np.ndarray]] = []
    g_start = start
    for i in range(start + 1, stop + 1):
        if i == stop or vals[i] != vals[g_start]:
            counts = np.bincount(class_idx[g_start:i], minlength=k)
            groups.append((vals[g_start], counts))
            g_start = i
    if len(groups) < 2:
        return
    whole = np.bincount(class_idx[start:stop], minlength=k)

    best = None  # (weighted entropy, cut value, left counts)
    left = np.zeros(k, dtype=int)
    for (v_a, counts_a), (v_b, counts_b) in zip(groups, groups[1:]):
        left = left + counts_a
        merged = (counts_a > 0) | (counts_b > 0)
        if merged.sum() < 2:
            continue  # both neighbors pure in the same class: not a boundary
        right = whole - left
        w = (left.sum() * _entropy(left) + right.sum() * _entropy(right)) / n
        if best is None or w < best[0]:
            best = (w, (v_a + v_b) / 2.0, left.copy())
    if best is None:
        return
    _, cut, left_counts = best
    if not _mdl_accepts(n, whole, left_counts, whole - left_counts):
        return
    cuts.append(cut)
    mid = start + int(left_counts.sum())
    _split_segment(vals, class_idx, k, start, mid, depth + 1, max_depth, cuts)
    _split_segment(vals, class_idx, k, mid, stop, depth + 1, max_depth, cuts)


def build_scheme(
    X,
    labels,
    feature_names,
    categorical=(),
    max_depth: int = MAX_DEPTH,
) -> DiscretizationScheme:
    """Discretize every numeric column of a design matrix against labels."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(feature_names):
        raise DiscretizeError(f"matrix shape {X.shape} does not fit {len(feature_names)} features")
    cat = set(categorical)
    unknown = cat - set(feature_names)
    if unknown:
        raise DiscretizeError(f"categorical features not in matrix: {sorted(unknown)}")
    cuts, cats = {}, {}
    for j, name in enumerate(feature_names):
        if name in cat:
            cats[name] = tuple(sorted(set(X[:, j].tolist())))
        else:
            cuts[name] = mdl_discretize(X[:, j], labels, feature=name, max_depth=max_depth).cuts
    return DiscretizationScheme(cuts=cuts, categorical=cats)


def itemize(scheme: DiscretizationScheme, sample) -> frozenset[Item]:
    """Map one sample onto its item set under the scheme (one item per feature)."""
    return scheme.items_for(sample)
