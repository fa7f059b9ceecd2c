"""Ground-truth optimum by enumerating every beam vector."""
from __future__ import annotations

import itertools

from .errors import CapacityError
from .instance import Instance, Selection, weighted_sum_rate
from .matching import OFF, selection_for_beams

DEFAULT_CAP = 10**6


def beam_space(instance: Instance, allow_off: bool = True) -> list[int]:
    """Per-AP beam choices in enumeration order (OFF first when allowed)."""
    return ([OFF] if allow_off else []) + list(range(instance.n_beams))


def beam_space_size(instance: Instance, allow_off: bool = True) -> int:
    return len(beam_space(instance, allow_off)) ** instance.n_aps


def exhaustive_select(instance: Instance, cap: int = DEFAULT_CAP,
                      allow_off: bool = True) -> tuple[Selection, float]:
    """Return the lexicographically smallest optimal selection and its rate R*.

    Silent APs are enumerated explicitly (the OFF beam), so instances where
    silence beats interference are solved exactly.
    """
    size = beam_space_size(instance, allow_off)
    if size > cap:
        raise CapacityError(f"beam space has {size} vectors, cap is {cap}")
    best_sel, best_r = Selection.empty(instance.n_aps), 0.0
    found = False
    for b in itertools.product(beam_space(instance, allow_off), repeat=instance.n_aps):
        sel, r_b = selection_for_beams(instance, b)
        if not found or r_b > best_r:
            best_sel, best_r, found = sel, r_b, True
    # the induced selection drops clamped edges and can only gain rate
    return best_sel, max(best_r, weighted_sum_rate(instance, best_sel))
