"""Maximum-weight bipartite matching and the per-beam-vector UE assignment."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ValidationError
from .instance import Instance, Selection

OFF = -1  # beam-vector symbol for a silent AP


def _min_cost_assignment(cost: np.ndarray) -> np.ndarray:
    """Kuhn-Munkres with potentials for n <= m; returns column of each row.

    O(n^2 m).  The inner column scan is vectorized with numpy; rows are
    inserted in index order and ties go to the lowest column, so the result
    is a deterministic function of the matrix.
    """
    n, m = cost.shape
    inf = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.int64)  # p[j] = row (1-based) matched to column j
    way = np.zeros(m + 1, dtype=np.int64)
    c = np.zeros((n + 1, m + 1))
    c[1:, 1:] = cost
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = c[i0] - u[i0] - v
            free = ~used
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            masked = np.where(free, minv, inf)
            masked[0] = inf
            j1 = int(np.argmin(masked))
            delta = masked[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    col_of_row = np.full(n, -1, dtype=np.int64)
    for j in range(1, m + 1):
        if p[j] != 0:
            col_of_row[p[j] - 1] = j - 1
    return col_of_row


def max_weight_matching(weights) -> list[tuple[int, int]]:
    """Maximum-weight matching of a nonnegative (rows x cols) matrix.

    Returns (row, col) pairs sorted by row.  Zero-weight pairs are dropped, so
    the matching need not be perfect.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
        raise ValidationError(f"weight matrix must be 2-D and non-empty, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValidationError("weights must be finite and >= 0")
    transpose = w.shape[0] > w.shape[1]
    mat = w.T if transpose else w
    cols = _min_cost_assignment(-mat)
    pairs = [(i, int(j)) for i, j in enumerate(cols) if mat[i, j] > 0]
    if transpose:
        pairs = sorted((j, i) for i, j in pairs)
    return pairs


def matching_weight(weights, pairs) -> float:
    w = np.asarray(weights, dtype=float)
    return float(sum(w[i, j] for i, j in pairs))


def assignment_weights(instance: Instance, beam_vector: Sequence[int]) -> np.ndarray:
    """Edge weights (n_aps x n_ues) for a fixed beam vector.

    Entry (a, u) is the weighted rate of u served by a on beam b_a with every
    other non-silent AP interfering on its own beam.  Silent APs get an all-zero
    row; pairs below the RSS threshold are clamped to 0.
    """
    if len(beam_vector) != instance.n_aps:
        raise ValidationError(f"beam vector has length {len(beam_vector)}, expected {instance.n_aps}")
    b = np.asarray(beam_vector, dtype=np.int64)
    if np.any((b < OFF) | (b >= instance.n_beams)):
        raise ValidationError(f"beam index out of range in {list(beam_vector)}")
    on = np.flatnonzero(b != OFF)
    w = np.zeros((instance.n_aps, instance.n_ues))
    if on.size == 0:
        return w
    # rx[a_idx, u] = power at u from AP on[a_idx] using its beam
    rx = instance.s[b[on], :, on]
    total = rx.sum(axis=0)
    signal = rx
    interference = total[None, :] - rx
    rate = instance.bandwidth * np.log2(1.0 + signal / (instance.noise_power + interference))
    rate *= instance.weights[None, :]
    rate[signal < instance.rss_threshold] = 0.0
    w[on] = rate
    return w


def optimal_ue_assignment(instance: Instance, beam_vector: Sequence[int]):
    """Best UE per AP for a fixed beam vector.

    Returns ``(ue_vector, r_b)`` where ``ue_vector[a]`` is a UE index or None
    and ``r_b`` is the matching weight (every non-silent AP interferes, even if
    left unmatched).
    """
    w = assignment_weights(instance, beam_vector)
    ues: list = [None] * instance.n_aps
    if not np.any(w > 0):
        return tuple(ues), 0.0
    pairs = max_weight_matching(w)
    for a, u in pairs:
        ues[a] = u
    return tuple(ues), matching_weight(w, pairs)


def selection_for_beams(instance: Instance, beam_vector: Sequence[int]) -> tuple[Selection, float]:
    """Selection induced by a beam vector and its optimal UE vector, plus R_b."""
    ues, r_b = optimal_ue_assignment(instance, beam_vector)
    entries = [None if (u is None or b == OFF) else (int(b), u) for b, u in zip(beam_vector, ues)]
    return Selection(tuple(entries)), r_b
