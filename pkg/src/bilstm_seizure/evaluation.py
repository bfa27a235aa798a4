"""Confusion counts, ROC curves and trapezoidal AUC.

Label 1 (preictal) is the positive class and an example is predicted
positive when ``score >= threshold``. The ROC sweep places one point per
distinct score, so tied examples move together and the trapezoidal area
equals the Mann-Whitney statistic with ties counted as one half.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class UndefinedAUCError(ValueError):
    """Raised when only one class is present, so the ROC curve does not exist."""


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def tpr(self) -> float:
        pos = self.tp + self.fn
        return self.tp / pos if pos else float("nan")

    @property
    def fpr(self) -> float:
        neg = self.fp + self.tn
        return self.fp / neg if neg else float("nan")


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # thresholds[0] is +inf, the (0, 0) point

    def points(self) -> list[tuple[float, float]]:
        return [(float(f), float(t)) for f, t in zip(self.fpr, self.tpr)]


def _check(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.size != y.size:
        raise ValueError(f"{s.size} scores but {y.size} labels")
    if s.size == 0:
        raise ValueError("no scores given")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return s, y.astype(int)


def confusion_at_threshold(scores, labels, threshold: float) -> ConfusionCounts:
    s, y = _check(scores, labels)
    pred = s >= threshold
    return ConfusionCounts(
        tp=int(np.sum(pred & (y == 1))),
        fp=int(np.sum(pred & (y == 0))),
        fn=int(np.sum(~pred & (y == 1))),
        tn=int(np.sum(~pred & (y == 0))),
    )


def roc_curve(scores, labels) -> RocCurve:
    s, y = _check(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError("AUC undefined: scores cover only one class")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    # last index of every run of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(y)[ends]
    fp = (ends + 1) - tp
    return RocCurve(
        fpr=np.r_[0.0, fp / n_neg],
        tpr=np.r_[0.0, tp / n_pos],
        thresholds=np.r_[np.inf, s[ends]],
    )


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve."""
    f, t = curve.fpr, curve.tpr
    return float(np.sum(np.diff(f) * (t[1:] + t[:-1]) / 2.0))


def roc_auc(scores, labels) -> float:
    return auc(roc_curve(scores, labels))


def write_roc_csv(curve: RocCurve, path: str | os.PathLike) -> float:
    area = auc(curve)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("threshold,fpr,tpr\n")
        for thr, f, t in zip(curve.thresholds, curve.fpr, curve.tpr):
            fh.write(f"{_fmt(thr)},{_fmt(f)},{_fmt(t)}\n")
        fh.write(f"# auc={_fmt(area)}\n")
    return area


def read_roc_csv(path: str | os.PathLike) -> tuple[RocCurve, float | None]:
    rows = []
    area = None
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "threshold,fpr,tpr":
            raise ValueError(f"{path}: unexpected header {header!r}")
        for line in fh:
            line = line.strip()
            if line.startswith("# auc="):
                area = float(line[len("# auc="):])
            elif line:
                rows.append([float(v) for v in line.split(",")])
    arr = np.array(rows)
    return RocCurve(fpr=arr[:, 1], tpr=arr[:, 2], thresholds=arr[:, 0]), area


def _fmt(v: float) -> str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def write_roc_svg(curve: RocCurve, path: str | os.PathLike, size: int = 400, title: str | None = None) -> None:
    """Plot the curve on the unit square with the chance diagonal."""
    pad = 40
    span = size - 2 * pad

    def xy(f: float, t: float) -> str:
        return f"{pad + f * span:.2f},{pad + (1 - t) * span:.2f}"

    pts = " ".join(xy(f, t) for f, t in zip(curve.fpr, curve.tpr))
    label = title or f"AUC = {auc(curve):.4f}"
    ticks = []
    for k in range(6):
        v = k / 5
        x, y0 = pad + v * span, pad + span
        ticks.append(f'<text x="{x:.1f}" y="{y0 + 16:.1f}" font-size="10" text-anchor="middle">{v:.1f}</text>')
        ticks.append(f'<text x="{pad - 6:.1f}" y="{pad + (1 - v) * span + 3:.1f}" font-size="10" text-anchor="end">{v:.1f}</text>')
    svg = f"""<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">
<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="white" stroke="black"/>
<line x1="{pad}" y1="{pad + span}" x2="{pad + span}" y2="{pad}" stroke="gray" stroke-dasharray="4,4"/>
<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>
{chr(10).join(ticks)}
<text x="{size / 2}" y="{size - 6}" font-size="12" text-anchor="middle">False positive rate</text>
<text x="12" y="{size / 2}" font-size="12" text-anchor="middle" transform="rotate(-90 12 {size / 2})">True positive rate</text>
<text x="{size / 2}" y="{pad - 12}" font-size="13" text-anchor="middle">{label}</text>
</svg>
"""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)


def describe(scores: Sequence[float], labels: Sequence[int], threshold: float = 0.5) -> dict:
    """AUC plus confusion counts at ``threshold``, as a plain dict."""
    cc = confusion_at_threshold(scores, labels, threshold)
    return {
        "auc": roc_auc(scores, labels),
        "threshold": threshold,
        "tp": cc.tp,
        "fp": cc.fp,
        "fn": cc.fn,
        "tn": cc.tn,
        "tpr": cc.tpr,
        "fpr": cc.fpr,
    }
