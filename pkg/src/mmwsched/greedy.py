"""Greedy joint UE and beam selection.

Every AP serves a UE on the best beam for that (AP, UE) pair, so a link is fully
described by the pair.  ``ngub1`` picks pairs one at a time by their rate given
the links already chosen, then polishes with round-robin UE swaps.  ``ngub2``
repeats the one-at-a-time pass over random AP orders and keeps the best pass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .instance import Instance, Selection


@dataclass
class GreedyParams:
    improvement_rounds: Optional[int] = None  # default 3 * n_aps
    j_runs: Optional[int] = None  # default max(10, n_aps**2)
    seed: int = 0
    min_round_gain: Optional[float] = None  # optional second stopping rule

    def __post_init__(self):
        if self.improvement_rounds is not None and self.improvement_rounds < 0:
            raise ValidationError("improvement_rounds must be >= 0")
        if self.j_runs is not None and self.j_runs < 1:
            raise ValidationError("j_runs must be >= 1")

    def rounds_for(self, instance: Instance) -> int:
        return 3 * instance.n_aps if self.improvement_rounds is None else self.improvement_rounds

    def runs_for(self, instance: Instance) -> int:
        return max(10, instance.n_aps ** 2) if self.j_runs is None else self.j_runs


class _PairModel:
    """Per-pair best-beam powers.

    sig[a, u]     power at u from a on u's best beam (0 where ineligible)
    leak[a, u, v] power at v from a when a beams toward u
    """

    def __init__(self, instance: Instance):
        s = instance.s
        self.instance = instance
        self.best = instance.best_beams().T  # (a, u)
        n_aps, n_ues = instance.n_aps, instance.n_ues
        a_idx = np.arange(n_aps)[:, None]
        u_idx = np.arange(n_ues)[None, :]
        self.sig = s[self.best, u_idx, a_idx]
        # leak[a, u, v] = s[best[a, u], v, a]
        self.leak = s[self.best[:, :, None], np.arange(n_ues)[None, None, :], a_idx[:, :, None]]
        self.eligible = self.sig >= instance.rss_threshold
        self.coef = instance.weights * instance.bandwidth  # per UE

    def rate(self, signal, interference, ues):
        return self.coef[ues] * np.log2(1.0 + signal / (self.instance.noise_power + interference))

    def selection(self, ue_of_ap: Sequence) -> Selection:
        return Selection(tuple(None if u is None else (int(self.best[a, u]), int(u))
                               for a, u in enumerate(ue_of_ap)))

    def total(self, ue_of_ap: Sequence) -> float:
        links = [(a, u) for a, u in enumerate(ue_of_ap) if u is not None]
        if not links:
            return 0.0
        aps = np.array([a for a, _ in links])
        ues = np.array([u for _, u in links])
        m = self.leak[aps[None, :], ues[None, :], ues[:, None]]
        sig = np.diag(m)
        return float(self.rate(sig, m.sum(axis=1) - sig, ues).sum())


def _initial_pass(model: _PairModel, order: Optional[Sequence[int]]):
    """One-at-a-time selection; free AP choice when ``order`` is None."""
    inst = model.instance
    n_aps, n_ues = inst.n_aps, inst.n_ues
    ue_of_ap: list = [None] * n_aps
    interference = np.zeros(n_ues)
    free_ap = np.ones(n_aps, dtype=bool)
    free_ue = np.ones(n_ues, dtype=bool)
    chosen_order = []
    ap_queue = list(order) if order is not None else None
    while free_ap.any() and free_ue.any():
        if ap_queue is None:
            vals = model.rate(model.sig, interference[None, :], np.arange(n_ues)[None, :])
            ok = model.eligible & free_ap[:, None] & free_ue[None, :]
            if not ok.any():
                break
            vals = np.where(ok, vals, -np.inf)
            a, u = np.unravel_index(int(np.argmax(vals)), vals.shape)  # lowest AP, then UE
        else:
            if not ap_queue:
                break
            a = ap_queue.pop(0)
            if not free_ap[a]:
                continue
            ok = model.eligible[a] & free_ue
            free_ap[a] = False
            if not ok.any():
                continue
            vals = np.where(ok, model.rate(model.sig[a], interference, np.arange(n_ues)), -np.inf)
            u = int(np.argmax(vals))
        a, u = int(a), int(u)
        ue_of_ap[a] = u
        free_ap[a] = False
        free_ue[u] = False
        interference += model.leak[a, u]
        chosen_order.append(a)
    return ue_of_ap, chosen_order


def ngub1_initial(instance: Instance) -> tuple[Selection, list[int]]:
    """Phase-1 selection and the order in which APs were picked."""
    model = _PairModel(instance)
    ue_of_ap, order = _initial_pass(model, None)
    return model.selection(ue_of_ap), order


def _improve(model: _PairModel, ue_of_ap: list, rounds: int, min_round_gain, history):
    inst = model.instance
    n_aps = inst.n_aps
    current = model.total(ue_of_ap)
    if history is not None:
        history.append(current)
    for _ in range(rounds):
        start = current
        changed = False
        for a in range(n_aps):
            taken = {u for u in ue_of_ap if u is not None}
            cands = [u for u in range(inst.n_ues) if u not in taken and model.eligible[a, u]]
            best_u, best_val = ue_of_ap[a], current
            for u in cands:
                trial = list(ue_of_ap)
                trial[a] = u
                val = model.total(trial)
                if val > best_val + 1e-12 * max(1.0, abs(best_val)):
                    best_u, best_val = u, val
            if best_u != ue_of_ap[a]:
                ue_of_ap[a] = best_u
                current = best_val
                changed = True
        if history is not None:
            history.append(current)
        if not changed:
            break
        if min_round_gain is not None and current - start < min_round_gain:
            break
    return ue_of_ap


def ngub1(instance: Instance, params: Optional[GreedyParams] = None,
          history: Optional[list] = None) -> Selection:
    """Greedy pair selection followed by round-robin strict-improvement swaps.

    If ``history`` is a list, the total rate after phase 1 and after each
    improvement round is appended to it.
    """
    params = params or GreedyParams()
    model = _PairModel(instance)
    ue_of_ap, _ = _initial_pass(model, None)
    ue_of_ap = _improve(model, ue_of_ap, params.rounds_for(instance), params.min_round_gain, history)
    return model.selection(ue_of_ap)


def ngub2_pass(instance: Instance, order: Sequence[int]) -> Selection:
    """One pass: APs in ``order``, each takes its best remaining UE."""
    if sorted(order) != list(range(instance.n_aps)):
        raise ValidationError("order must be a permutation of the APs")
    model = _PairModel(instance)
    ue_of_ap, _ = _initial_pass(model, list(order))
    return model.selection(ue_of_ap)


def ngub2(instance: Instance, params: Optional[GreedyParams] = None,
          rates: Optional[list] = None) -> Selection:
    """Best of J passes over uniformly random AP orders.

    Orders are drawn one after another from the seeded generator, so the first
    J passes of a larger J are the same passes.
    """
    params = params or GreedyParams()
    rng = np.random.default_rng(params.seed)
    model = _PairModel(instance)
    best_sel, best_val = None, -math.inf
    for _ in range(params.runs_for(instance)):
        order = [int(a) for a in rng.permutation(instance.n_aps)]
        ue_of_ap, _ = _initial_pass(model, order)
        val = model.total(ue_of_ap)
        if rates is not None:
            rates.append(val)
        if val > best_val:
            best_sel, best_val = ue_of_ap, val
    return model.selection(best_sel)
