"""Metropolis search over beam vectors with the matching oracle as evaluator.

State space: one beam per AP (optionally the OFF symbol).  A proposal redraws
the beam of one uniformly chosen AP uniformly from its choices (the current beam
included).  Uphill moves are always taken, downhill ones with probability
exp(alpha * delta).  The rate difference in the exponent is divided by the
bandwidth so alpha has the same meaning whatever unit B carries.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CapacityError, ValidationError
from .exhaustive import beam_space
from .instance import Instance, Selection
from .matching import optimal_ue_assignment, selection_for_beams

SCHEDULES = ("log", "linear", "constant")


def annealing_value(schedule: str, base: float, i: int) -> float:
    """Inverse temperature at iteration i >= 1."""
    if schedule == "log":
        return base * math.log1p(i)
    if schedule == "linear":
        return base * i
    if schedule == "constant":
        return base
    raise ValidationError(f"unknown schedule {schedule!r}; choose from {SCHEDULES}")


@dataclass
class McmcParams:
    max_iters: int = 5000
    alpha0: float = 1.0
    schedule: str = "log"
    seed: int = 0
    allow_off: bool = True
    record_trace: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if self.alpha0 < 0:
            raise ValidationError("alpha0 must be >= 0")
        if self.schedule not in SCHEDULES:
            raise ValidationError(f"unknown schedule {self.schedule!r}")

    def alpha(self, i: int) -> float:
        return annealing_value(self.schedule, self.alpha0, i)


@dataclass
class McmcTrace:
    iteration: list = field(default_factory=list)
    beams: list = field(default_factory=list)
    rate: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    alpha: list = field(default_factory=list)

    def __len__(self):
        return len(self.iteration)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "R", "accepted", "alpha", "beams"])
        for row in zip(self.iteration, self.rate, self.accepted, self.alpha, self.beams):
            i, r, acc, a, b = row
            w.writerow([i, f"{r:.17g}", int(acc), f"{a:.17g}", " ".join(map(str, b))])


class _RateCache:
    """Exact R_b memo keyed by the beam vector."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.values: dict[tuple, float] = {}

    def __call__(self, b: tuple) -> float:
        r = self.values.get(b)
        if r is None:
            r = optimal_ue_assignment(self.instance, b)[1]
            self.values[b] = r
        return r


def mcmc_select(instance: Instance, params: Optional[McmcParams] = None):
    """Run the chain for ``max_iters`` steps and return (selection, trace).

    The output is the last state's beam vector with its optimal UE vector.
    """
    params = params or McmcParams()
    rng = np.random.default_rng(params.seed)
    choices = np.array(beam_space(instance, params.allow_off))
    n_aps = instance.n_aps
    rate_of = _RateCache(instance)
    scale = 1.0 / instance.bandwidth

    b = list(choices[rng.integers(len(choices), size=n_aps)])
    cur = tuple(int(x) for x in b)
    r_cur = rate_of(cur)

    n = params.max_iters
    positions = rng.integers(n_aps, size=n)
    draws = choices[rng.integers(len(choices), size=n)]
    uniforms = rng.random(n)
    trace = McmcTrace()
    for i in range(1, n + 1):
        alpha = params.alpha(i)
        b = list(cur)
        b[positions[i - 1]] = int(draws[i - 1])
        prop = tuple(b)
        r_prop = rate_of(prop)
        delta = r_prop - r_cur
        if delta > 0:
            p = 1.0
        else:
            p = math.exp(alpha * delta * scale)
        assert 0.0 <= p <= 1.0
        accepted = delta > 0 or uniforms[i - 1] < p
        if accepted:
            cur, r_cur = prop, r_prop
        if params.record_trace:
            trace.iteration.append(i)
            trace.beams.append(cur)
            trace.rate.append(r_cur)
            trace.accepted.append(bool(accepted))
            trace.alpha.append(alpha)
    sel, _ = selection_for_beams(instance, cur)
    return sel, trace


def enumerate_beam_vectors(instance: Instance, allow_off: bool = True, cap: int = 4096) -> list[tuple]:
    size = len(beam_space(instance, allow_off)) ** instance.n_aps
    if size > cap:
        raise CapacityError(f"beam space has {size} vectors, cap is {cap}")
    return list(itertools.product(beam_space(instance, allow_off), repeat=instance.n_aps))


def transition_matrix(instance: Instance, alpha: float, cap: int = 4096, allow_off: bool = True):
    """Exact one-step kernel of the chain at fixed alpha.

    Returns ``(P, states)``.  Off-diagonal entries between vectors differing in
    one AP are 1/(c*N_A) for uphill moves and exp(alpha*delta)/(c*N_A) for
    downhill ones, where c is the number of beam choices per AP; the diagonal
    takes the remaining mass so every row sums to 1.
    """
    states = enumerate_beam_vectors(instance, allow_off, cap)
    index = {s: k for k, s in enumerate(states)}
    rates = np.array([optimal_ue_assignment(instance, s)[1] for s in states])
    choices = beam_space(instance, allow_off)
    q = 1.0 / (len(choices) * instance.n_aps)
    scale = 1.0 / instance.bandwidth
    P = np.zeros((len(states), len(states)))
    for k, s in enumerate(states):
        for a in range(instance.n_aps):
            for c in choices:
                if c == s[a]:
                    continue
                t = s[:a] + (c,) + s[a + 1:]
                j = index[t]
                delta = rates[j] - rates[k]
                P[k, j] = q if delta > 0 else q * math.exp(alpha * delta * scale)
        P[k, k] = 1.0 - P[k].sum()
    return P, states


def stationary_distribution(instance: Instance, alpha: float, cap: int = 4096, allow_off: bool = True):
    """pi(b) proportional to exp(alpha * R_b); returns ``(pi, states)``."""
    states = enumerate_beam_vectors(instance, allow_off, cap)
    rates = np.array([optimal_ue_assignment(instance, s)[1] for s in states])
    x = alpha * rates / instance.bandwidth
    x -= x.max()
    pi = np.exp(x)
    return pi / pi.sum(), states
