"""Preprocessing of spectra and heuristic choice of anchor subjects.

Feature-1 anchors are the curves with the most prominent interior peak;
feature-2 anchors are the curves closest to a straight line inside a band.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .model import FEATURE1, FEATURE2, FREE, Dataset


def log_transform(values) -> np.ndarray:
    """``log(y + 1)`` elementwise; negative input is rejected."""
    y = np.asarray(values, dtype=float)
    if np.any(y < 0):
        raise ValueError("log_transform needs non-negative values")
    return np.log1p(y)


def peak_prominence(y) -> float:
    """Prominence of the most prominent interior local maximum of ``y``.

    The base of a peak is the higher of the lowest points on either side
    before the curve climbs above the peak again. A curve without an
    interior local maximum scores 0.
    """
    y = np.asarray(y, dtype=float)
    peaks, props = find_peaks(y, prominence=0.0)
    if peaks.size == 0:
        return 0.0
    return float(props["prominences"].max())


def band_linear_rss(t, y, band) -> float:
    """Residual sum of squares of a straight-line fit inside ``band``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    lo, hi = band
    m = (t >= lo) & (t <= hi)
    if m.sum() < 3:
        raise ValueError(f"need at least 3 points inside band [{lo}, {hi}], got {m.sum()}")
    X = np.column_stack([np.ones(m.sum()), t[m]])
    coef = np.linalg.lstsq(X, y[m], rcond=None)[0]
    r = y[m] - X @ coef
    return float(r @ r)


def _rank(scores: dict, descending: bool) -> list:
    # ties broken by subject id
    sign = -1.0 if descending else 1.0
    return sorted(scores, key=lambda s: (sign * scores[s], s))


def select_peak_labels(data: Dataset, count: int) -> list:
    """Ids of the ``count`` subjects with the most prominent peak."""
    if count < 0:
        raise ValueError("count must be non-negative")
    scores = {sid: peak_prominence(y) for sid, y in zip(data.subject_ids, data.values)}
    return _rank(scores, descending=True)[:count]


def select_noise_labels(data: Dataset, count: int, band) -> list:
    """Ids of the ``count`` subjects best described by a line inside ``band``."""
    if count < 0:
        raise ValueError("count must be non-negative")
    lo, hi = band
    if lo < data.t_flat.min() or hi > data.t_flat.max() or not lo < hi:
        raise ValueError(f"band [{lo}, {hi}] must lie inside the observed domain")
    scores = {
        sid: band_linear_rss(t, y, band)
        for sid, t, y in zip(data.subject_ids, data.times, data.values)
    }
    return _rank(scores, descending=False)[:count]


@dataclass
class LabelPlan:
    """Disjoint anchor sets plus the scores they were chosen from."""

    feature1_ids: list
    feature2_ids: list
    method: dict = field(default_factory=dict)

    def __post_init__(self):
        overlap = set(self.feature1_ids) & set(self.feature2_ids)
        if overlap:
            raise ValueError(f"subjects labelled for both features: {sorted(overlap)}")

    def labels_for(self, data: Dataset) -> np.ndarray:
        known = set(data.subject_ids)
        missing = (set(self.feature1_ids) | set(self.feature2_ids)) - known
        if missing:
            raise KeyError(f"unknown subject ids: {sorted(missing)}")
        lab = np.full(data.n_subjects, FREE)
        pos = {s: k for k, s in enumerate(data.subject_ids)}
        for s in self.feature1_ids:
            lab[pos[s]] = FEATURE1
        for s in self.feature2_ids:
            lab[pos[s]] = FEATURE2
        return lab

    @property
    def n_labelled(self) -> int:
        return len(self.feature1_ids) + len(self.feature2_ids)


def plan_labels(data: Dataset, n_peak: int, n_noise: int, band) -> LabelPlan:
    """Peak anchors first; noise anchors skip anything already taken."""
    peak = select_peak_labels(data, n_peak)
    taken = set(peak)
    noise = [s for s in select_noise_labels(data, data.n_subjects, band) if s not in taken][:n_noise]
    method = {
        "peak_prominence": {s: peak_prominence(y) for s, y in zip(data.subject_ids, data.values)},
        "band_rss": {s: band_linear_rss(t, y, band) for s, t, y in zip(data.subject_ids, data.times, data.values)},
        "labelled_fraction": (len(peak) + len(noise)) / data.n_subjects,
    }
    return LabelPlan(feature1_ids=peak, feature2_ids=noise, method=method)
