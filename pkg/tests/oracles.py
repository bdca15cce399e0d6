"""Independent evaluators used to cross-check the inference engine.

Membership functions are re-expressed as breakpoint tables fed to np.interp,
and the centroid is recomputed by dense Riemann sampling, so none of the
engine's own piecewise-linear code is on this path.
"""

from __future__ import annotations

import numpy as np


def interp_breaks(mf) -> tuple[np.ndarray, np.ndarray]:
    if mf.shape == "tri":
        a, b, c = mf.params
        pts = [(a, 0.0), (b, 1.0), (c, 0.0)]
    else:
        a, b, c, d = mf.params
        pts = [(a, 0.0), (b, 1.0), (c, 1.0), (d, 0.0)]
    xs: list[float] = []
    ys: list[float] = []
    for x, y in pts:
        if xs and x == xs[-1]:
            # shoulder corner: the plateau value wins at the shared breakpoint
            ys[-1] = max(ys[-1], y)
            continue
        xs.append(x)
        ys.append(y)
    return np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)


def mf_eval(mf, x: float) -> float:
    xs, ys = interp_breaks(mf)
    return float(np.interp(x, xs, ys))


def riemann_centroid(shape, samples: int = 10001) -> float:
    """Centroid of an aggregated output shape by uniform sampling."""
    lo, hi = shape.variable.universe
    ys = np.linspace(lo, hi, samples)
    mu = np.zeros_like(ys)
    for alpha, (_, mf) in zip(shape.heights, shape.variable.terms):
        if alpha <= 0.0:
            continue
        xs, fs = interp_breaks(mf)
        mu = np.maximum(mu, np.minimum(alpha, np.interp(ys, xs, fs)))
    total = float(mu.sum())
    if total == 0.0:
        raise ZeroDivisionError("shape is identically zero")
    return float((ys * mu).sum() / total)
