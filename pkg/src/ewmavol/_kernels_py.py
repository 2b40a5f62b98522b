"""Pure numpy kernels; reference fallback for the compiled ``_kernels`` module.

Both modules consume the same prepared arrays (see ``_backend``):

cross : (M, P) float64
    Upper-triangle cross-products of each return row.
weights : (L, Nmax + 1) float64
    ``weights[l, n] = lambda_l ** n``.
norms : (L, Nmax + 1) float64
    ``(1 - lambda_l) / (1 - lambda_l ** n)``.

Lag sums run oldest to newest and the per-anchor squared error is
accumulated pair by pair in row-major order, matching the compiled kernels.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

NAME = "python"

# Fixed so that results do not depend on the thread count.
CHUNK = 512


def weighted_sum(cross, origin, weights):
    """``sum_{k=n-1..0} weights[k] * cross[origin - k]`` for ``n = len(weights)``."""
    cross = np.asarray(cross, dtype=float)
    acc = np.zeros(cross.shape[1])
    for k in range(len(weights) - 1, -1, -1):
        acc += weights[k] * cross[origin - k]
    return acc


def _chunk_losses(cross, anchors, horizon, weights, nlags, norms):
    n_pairs = cross.shape[1]
    realized = np.zeros((len(anchors), n_pairs))
    for k in range(1, horizon + 1):
        realized += cross[anchors + k]

    out = np.empty((len(anchors), len(nlags)))
    acc = np.empty_like(realized)
    for l, n_full in enumerate(nlags):
        n_eff = np.minimum(n_full, anchors + 1)
        acc[:] = 0.0
        for k in range(n_full - 1, -1, -1):
            rows = anchors - k
            wk = weights[l, k]
            if rows[0] >= 0:
                acc += wk * cross[rows]
            else:
                ok = rows >= 0
                acc[ok] += wk * cross[rows[ok]]
        scale = horizon * 1.0
        forecast = scale * (norms[l, n_eff][:, None] * acc)
        diff = forecast - realized
        se = np.zeros(len(anchors))
        for p in range(n_pairs):
            se += diff[:, p] * diff[:, p]
        out[:, l] = se
    return out


def loss_surface(cross, anchors, horizon, weights, nlags, norms, nthreads=1):
    """Squared-error surface, shape (len(anchors), len(nlags))."""
    cross = np.ascontiguousarray(cross, dtype=float)
    anchors = np.asarray(anchors, dtype=np.intp)
    nlags = np.asarray(nlags, dtype=np.intp)
    out = np.empty((len(anchors), len(nlags)))
    starts = range(0, len(anchors), CHUNK)

    def run(start):
        sl = slice(start, start + CHUNK)
        out[sl] = _chunk_losses(cross, anchors[sl], int(horizon), weights, nlags, norms)

    if nthreads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            list(pool.map(run, starts))
    else:
        for start in starts:
            run(start)
    return out
