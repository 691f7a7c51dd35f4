"""Independent reference implementations used to cross-check the engine.

Everything here is deliberately written the slow, obvious way (recursion,
exhaustive enumeration, closed forms) and shares no code with the package.
"""

from __future__ import annotations

import math

import numpy as np


def flood_fill_components(mask: np.ndarray) -> list[set[tuple[int, int]]]:
    """8-connected components by explicit flood fill, ordered by their first
    pixel in row-major scan order."""
    h, w = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    components = []
    for i in range(h):
        for j in range(w):
            if not mask[i, j] or seen[i, j]:
                continue
            stack = [(i, j)]
            seen[i, j] = True
            comp = set()
            while stack:
                y, x = stack.pop()
                comp.add((y, x))
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        ny, nx = y + dy, x + dx
                        if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            stack.append((ny, nx))
            components.append(comp)
    return components


def greedy_assignment(costs: np.ndarray, gate: float) -> list[tuple[int, int]]:
    """Brute-force restatement of the textual rule: smallest remaining cost
    first, both endpoints removed, ties to the smaller row then column."""
    costs = np.asarray(costs, dtype=float)
    remaining = [
        (costs[i, j], i, j)
        for i in range(costs.shape[0])
        for j in range(costs.shape[1])
        if costs[i, j] <= gate
    ]
    pairs = []
    rows, cols = set(), set()
    while remaining:
        remaining.sort(key=lambda t: (t[0], t[1], t[2]))
        cost, i, j = remaining.pop(0)
        pairs.append((i, j))
        rows.add(i)
        cols.add(j)
        remaining = [t for t in remaining if t[1] not in rows and t[2] not in cols]
    return pairs


def enumerate_alignments(
    m: np.ndarray,
    match: float,
    continuation: float,
    unmatched_document: float,
    skipped_component: float,
    phi: np.ndarray | None = None,
    track_bonus: float = 0.0,
):
    """Exhaustive enumeration of every monotone path through the match
    matrix.

    Returns (best value, list of best paths); a path is a list of
    (document, component, move) where move is one of start/diag/vert/horz.
    Matched cells may only be entered diagonally or vertically, unmatched
    cells vertically or horizontally; each cell may carry the same-track
    bonus relative to its diagonal neighbor.
    """
    docs, comps = m.shape

    def cell_bonus(t, a):
        if (
            phi is not None
            and m[t, a]
            and t > 0
            and a > 0
            and phi[t, a] >= 0
            and phi[t, a] == phi[t - 1, a - 1]
        ):
            return track_bonus
        return 0.0

    best = 0.0
    best_paths: list[list[tuple[int, int, str]]] = []

    def record(value, path):
        nonlocal best, best_paths
        if value > best + 1e-9:
            best = value
            best_paths = [list(path)]
        elif abs(value - best) <= 1e-9 and value > 1e-9:
            best_paths.append(list(path))

    def extend(t, a, value, path):
        record(value, path)
        for nt, na, move in ((t + 1, a + 1, "diag"), (t + 1, a, "vert"), (t, a + 1, "horz")):
            if nt >= docs or na >= comps:
                continue
            if m[nt, na]:
                if move == "diag":
                    charge = match
                elif move == "vert":
                    charge = continuation
                else:
                    continue
            else:
                if move == "vert":
                    charge = unmatched_document
                elif move == "horz":
                    charge = skipped_component
                else:
                    continue
            path.append((nt, na, move))
            extend(nt, na, value + charge + cell_bonus(nt, na), path)
            path.pop()

    for t in range(docs):
        for a in range(comps):
            if m[t, a]:
                start_value = max(match, continuation)
            else:
                start_value = max(unmatched_document, skipped_component)
            extend(t, a, start_value + cell_bonus(t, a), [(t, a, "start")])
    return best, best_paths


def path_distortions(path, m):
    """Distortion multiset of an enumerated path under the glossary naming:
    insertions are unmatched documents inside the match, deletions skipped
    components, continuations repeated components."""
    counts = {"insertions": 0, "deletions": 0, "continuations": 0}
    for t, a, move in path:
        if move == "vert" and m[t, a]:
            counts["continuations"] += 1
        elif move == "vert":
            counts["insertions"] += 1
        elif move == "horz":
            counts["deletions"] += 1
    return counts


def sorted_median(values):
    """Median by explicit sort (reference for the blob-size rule)."""
    s = sorted(values)
    n = len(s)
    if n == 0:
        return 0.0
    if n % 2:
        return float(s[n // 2])
    return (s[n // 2 - 1] + s[n // 2]) / 2.0


def gaussian_collision_probability(distance: float, width: float) -> float:
    """Closed-form p-stable collision probability via the error function."""
    if distance <= 0:
        return 1.0
    r = width / distance
    return (
        math.erf(r / math.sqrt(2.0))
        - (2.0 / (math.sqrt(2.0 * math.pi) * r)) * (1.0 - math.exp(-(r * r) / 2.0))
    )


def rgb_to_hsl_reference(r: int, g: int, b: int) -> tuple[float, float, float]:
    """Scalar RGB -> HSL, the long way."""
    rf, gf, bf = r / 255.0, g / 255.0, b / 255.0
    cmax, cmin = max(rf, gf, bf), min(rf, gf, bf)
    delta = cmax - cmin
    lum = (cmax + cmin) / 2.0
    if delta == 0:
        return 0.0, 0.0, lum
    sat = delta / (1.0 - abs(2.0 * lum - 1.0))
    if cmax == rf:
        hue = ((gf - bf) / delta) % 6.0
    elif cmax == gf:
        hue = (bf - rf) / delta + 2.0
    else:
        hue = (rf - gf) / delta + 4.0
    return (hue * 60.0) % 360.0, sat, lum
