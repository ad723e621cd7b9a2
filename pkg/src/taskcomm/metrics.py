"""Measurement kernel: fidelity metrics and Pareto-dominance analysis.

Pareto points are plain float sequences under a "higher is better"
orientation; callers negate bitrate (and state error) before comparing.
"""

import math

import numpy as np

PSNR_CEILING_DB = 100.0


def mse(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(a, b, peak: float = 1.0, ceiling: float = PSNR_CEILING_DB) -> float:
    """10*log10(peak^2 / MSE); exact match clamps to `ceiling` dB."""
    if peak <= 0:
        raise ValueError("peak must be positive")
    err = mse(a, b)
    if err == 0.0:
        return ceiling
    return min(10.0 * math.log10(peak * peak / err), ceiling)


def perplexity(usage_histogram) -> float:
    """2**H(p) of the normalized selection frequencies, 0*log0 = 0."""
    hist = np.asarray(usage_histogram, dtype=np.float64)
    if hist.ndim != 1 or np.any(hist < 0):
        raise ValueError("usage histogram must be 1-D with non-negative entries")
    total = hist.sum()
    if total <= 0:
        raise ValueError("usage histogram is all zero")
    p = hist / total
    nz = p[p > 0]
    entropy = -float(np.sum(nz * np.log2(nz)))
    return float(2.0 ** entropy)


def pareto_dominates(a, b) -> bool:
    """True iff a is >= b everywhere and > b somewhere (higher is better)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 1:
        raise ValueError(f"points must share dimension >= 1: {a.shape} vs {b.shape}")
    return bool(np.all(a >= b) and np.any(a > b))


def pareto_front(points) -> list:
    """Maximal subset under pareto_dominates, preserving input order.

    A point is kept unless some other point strictly dominates it; equal
    duplicates are incomparable and all kept.
    """
    pts = [np.asarray(p, dtype=np.float64) for p in points]
    if not pts:
        raise ValueError("pareto_front requires at least one point")
    keep = []
    for i, p in enumerate(pts):
        dominated = False
        for j, q in enumerate(pts):
            if i != j and np.all(q >= p) and np.any(q > p):
                dominated = True
                break
        if not dominated:
            keep.append(points[i])
    return keep


def scheme_dominates(xs, ys) -> bool:
    """Every point of ys is strictly dominated by some point of xs."""
    return all(any(pareto_dominates(x, y) for x in xs) for y in ys)


def scheme_pareto_improves(xs, ys) -> bool:
    """Scheme-level advantage: xs strictly dominates somewhere and concedes nowhere.

    True iff some x-point strictly dominates some y-point while no y-point
    strictly dominates any x-point. This is the relation under which the
    reference trade-off curves reproduce their published orderings; the
    all-points relation above is stricter and fails whenever both schemes
    share an extreme point.
    """
    forward = any(pareto_dominates(x, y) for x in xs for y in ys)
    backward = any(pareto_dominates(y, x) for y in ys for x in xs)
    return forward and not backward
