"""Ground-truth scoring: completeness, correctness and quality.

Counting follows the determination rules literally: FN counts ground-truth
points with no model point within the radius, FP counts model points with no
ground-truth point within the radius, and TP is taken on the ground-truth
side as ``GT - FN``, so TP + FN always equals GT.  A strict one-to-one
mode is available for comparison studies.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .geometry import EPS
from .spatial_index import PointIndex

RULES_AS_STATED = "rules-as-stated"
ONE_TO_ONE = "one-to-one"
MATCHING_MODES = (RULES_AS_STATED, ONE_TO_ONE)


@dataclass(frozen=True)
class MatchReport:
    gt: int
    m: int
    tp: int
    fn: int
    fp: int
    completeness_pct: float
    correctness_pct: float
    quality_pct: float
    radius_ft: float = 30.0
    matching_mode: str = RULES_AS_STATED

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


@dataclass(frozen=True)
class MatchCounts:
    gt: int
    m: int
    tp: int
    fn: int
    fp: int


def _xy(points):
    pts = [getattr(p, "pos", p) for p in points]
    return (np.array([p[0] for p in pts], dtype=np.float64),
            np.array([p[1] for p in pts], dtype=np.float64))


def _unmatched(query, ref, radius):
    if len(query[0]) == 0:
        return 0
    if len(ref[0]) == 0:
        return len(query[0])
    index = PointIndex(enumerate(zip(*ref)))
    _, dist = index.nearest_many(*query)
    return int(np.count_nonzero(dist > radius + EPS))


def _one_to_one(gt, m, radius):
    """Greedy closest-pair matching; each point used at most once."""
    if len(gt[0]) == 0 or len(m[0]) == 0:
        return 0
    index = PointIndex(enumerate(zip(*m)))
    pairs = []
    for g, (x, y) in enumerate(zip(*gt)):
        for j, d in index.query_within((x, y), radius + EPS):
            pairs.append((d, g, j))
    pairs.sort()
    used_g, used_m = set(), set()
    for _, g, j in pairs:
        if g not in used_g and j not in used_m:
            used_g.add(g)
            used_m.add(j)
    return len(used_g)


def match_points(gt: Sequence, model: Sequence, eval_radius: float = 30.0,
                 mode: str = RULES_AS_STATED) -> MatchCounts:
    if eval_radius <= 0:
        raise ValueError("eval_radius must be positive")
    g, m = _xy(gt), _xy(model)
    if mode == RULES_AS_STATED:
        fn = _unmatched(g, m, eval_radius)
        fp = _unmatched(m, g, eval_radius)
        return MatchCounts(len(g[0]), len(m[0]), len(g[0]) - fn, fn, fp)
    if mode == ONE_TO_ONE:
        tp = _one_to_one(g, m, eval_radius)
        return MatchCounts(len(g[0]), len(m[0]), tp, len(g[0]) - tp, len(m[0]) - tp)
    raise ValueError(f"unknown matching mode {mode!r}")


def compute_metrics(counts: MatchCounts = None, *, gt=None, m=None, fn=None, fp=None,
                    radius_ft: float = 30.0,
                    matching_mode: str = RULES_AS_STATED) -> MatchReport:
    """Percentages rounded to 0.01.

    Takes a :class:`MatchCounts` or the raw ``gt``, ``m``, ``fn``, ``fp``.
    """
    if counts is not None:
        gt, m, fn, fp = counts.gt, counts.m, counts.fn, counts.fp
    if None in (gt, m, fn, fp):
        raise TypeError("compute_metrics needs counts or all of gt, m, fn, fp")
    if gt <= 0 or m <= 0:
        raise ValueError("ground truth and model counts must both be positive")
    if not 0 <= fn <= gt or not 0 <= fp <= m:
        raise ValueError("FN must lie in [0, GT] and FP in [0, M]")
    return MatchReport(
        gt=gt, m=m, tp=gt - fn, fn=fn, fp=fp,
        completeness_pct=round((gt - fn) / gt * 100.0, 2),
        correctness_pct=round((m - fp) / m * 100.0, 2),
        quality_pct=round((gt - fn) / (gt + fp) * 100.0, 2),
        radius_ft=float(radius_ft),
        matching_mode=matching_mode,
    )


def evaluate(gt, model, eval_radius: float = 30.0, mode: str = RULES_AS_STATED) -> MatchReport:
    return compute_metrics(match_points(gt, model, eval_radius, mode), radius_ft=eval_radius,
                           matching_mode=mode)
