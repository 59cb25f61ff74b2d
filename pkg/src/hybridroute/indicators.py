"""Exact hypervolume for small maximisation fronts."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def nondominated(points: Sequence[Sequence[float]]) -> list[tuple[float, ...]]:
    """Unique points not dominated by any other (maximisation)."""
    if len(points) == 0:
        return []
    arr = np.unique(np.asarray(points, dtype=float), axis=0)
    ge = (arr[:, None, :] >= arr[None, :, :]).all(axis=2)
    gt = (arr[:, None, :] > arr[None, :, :]).any(axis=2)
    dominated = (ge & gt).any(axis=0)
    return [tuple(map(float, row)) for row in arr[~dominated]]


def _hv2(pts: np.ndarray, ref: np.ndarray) -> float:
    order = np.lexsort((-pts[:, 1], -pts[:, 0]))
    p = pts[order]
    area = 0.0
    best_y = ref[1]
    for i in range(len(p)):
        best_y = max(best_y, p[i, 1])
        nxt = p[i + 1, 0] if i + 1 < len(p) else ref[0]
        area += (p[i, 0] - nxt) * (best_y - ref[1])
    return area


def _hv(pts: np.ndarray, ref: np.ndarray) -> float:
    n, d = pts.shape
    if n == 0:
        return 0.0
    if d == 1:
        return float(pts[:, 0].max() - ref[0])
    if d == 2:
        return _hv2(pts, ref)
    order = np.argsort(-pts[:, -1], kind="stable")
    p = pts[order]
    total = 0.0
    for i in range(n):
        lower = p[i + 1, -1] if i + 1 < n else ref[-1]
        depth = p[i, -1] - lower
        if depth <= 0:
            continue
        sub = np.asarray(nondominated(p[: i + 1, :-1]))
        total += depth * _hv(sub, ref[:-1])
    return total


def hypervolume(front: Sequence[Sequence[float]], ref: Sequence[float]) -> float:
    """Measure of the region dominated by ``front`` and bounded below by ``ref``.

    Points are in maximisation orientation; any point not strictly better
    than ``ref`` in every coordinate is clipped out. An empty front gives 0.
    """
    if len(front) == 0:
        return 0.0
    r = np.asarray(ref, dtype=float)
    pts = np.asarray([tuple(p.maximize_form()) if hasattr(p, "maximize_form") else tuple(p) for p in front],
                     dtype=float)
    pts = pts[(pts > r).all(axis=1)]
    if len(pts) == 0:
        return 0.0
    pts = np.asarray(nondominated(pts))
    return float(_hv(pts, r))
