"""Numpy/scipy implementations of the per-pixel kernels.

This is the fallback backend used when the compiled extension is not
available (or when ``VIDSIEVE_PURE_PYTHON=1``). Both backends implement the
same four functions with identical semantics; the arithmetic is written with
matching operation order so results agree bit for bit.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def subtract_and_update(
    background: np.ndarray,
    frame: np.ndarray,
    threshold: float,
    learning_rate: float,
) -> np.ndarray:
    """Foreground mask plus in-place running-average background update.

    A pixel is active when the largest per-channel absolute difference to the
    background exceeds ``threshold``. Only inactive pixels blend the new frame
    into the background, so objects that stop moving stay foreground.
    """
    diff = np.abs(frame.astype(np.float64) - background).max(axis=2)
    mask = (diff > threshold).astype(np.uint8)
    inactive = mask == 0
    blended = (1.0 - learning_rate) * background + learning_rate * frame.astype(np.float64)
    background[inactive] = blended[inactive]
    return mask


def update_persistence(mask: np.ndarray, accumulator: np.ndarray) -> None:
    """Count consecutive active frames per pixel; inactivity resets to 0."""
    np.multiply(accumulator + 1, mask, out=accumulator, casting="unsafe")


def label_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected component labels, 1..count, numbered by first pixel in
    row-major scan order. Background is 0."""
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    labels = labels.astype(np.int32)
    if count:
        labels = _canonical_relabel(labels, count)
    return labels, count


def _canonical_relabel(labels: np.ndarray, count: int) -> np.ndarray:
    flat = labels.ravel()
    nz = np.flatnonzero(flat)
    uniq, first_idx = np.unique(flat[nz], return_index=True)
    rank = np.empty(len(uniq), dtype=np.int32)
    rank[np.argsort(first_idx, kind="stable")] = np.arange(1, len(uniq) + 1)
    remap = np.zeros(count + 1, dtype=np.int32)
    remap[uniq] = rank
    return remap[labels]


def horn_schunck_iterate(
    ix: np.ndarray,
    iy: np.ndarray,
    it: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    alpha2: float,
    iterations: int,
) -> None:
    """Jacobi relaxation of the optical-flow update equations, in place.

    Neighbor averages weight the 4-neighborhood by 1/6 and the diagonals by
    1/12, with edge replication at the borders.
    """
    sixth = 1.0 / 6.0
    twelfth = 1.0 / 12.0
    den = alpha2 + ix * ix + iy * iy
    for _ in range(iterations):
        up = np.pad(u, 1, mode="edge")
        vp = np.pad(v, 1, mode="edge")
        ubar = (
            up[:-2, 1:-1] + up[2:, 1:-1] + up[1:-1, :-2] + up[1:-1, 2:]
        ) * sixth + (
            up[:-2, :-2] + up[:-2, 2:] + up[2:, :-2] + up[2:, 2:]
        ) * twelfth
        vbar = (
            vp[:-2, 1:-1] + vp[2:, 1:-1] + vp[1:-1, :-2] + vp[1:-1, 2:]
        ) * sixth + (
            vp[:-2, :-2] + vp[:-2, 2:] + vp[2:, :-2] + vp[2:, 2:]
        ) * twelfth
        t = (ix * ubar + iy * vbar + it) / den
        u[...] = ubar - ix * t
        v[...] = vbar - iy * t
