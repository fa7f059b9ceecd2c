import itertools
import math

import numpy as np
import pytest

from mmwsched.errors import ValidationError
from mmwsched.exhaustive import exhaustive_select
from mmwsched.greedy import GreedyParams, ngub1, ngub1_initial, ngub2, ngub2_pass
from mmwsched.instance import Instance, RssTensor, random_instance, weighted_sum_rate

from conftest import make_instance


def interference_free(rng, n_aps, n_ues, n_beams):
    """Each UE is heard by one AP only, so links never interfere."""
    s = np.zeros((n_beams, n_ues, n_aps))
    home = rng.integers(n_aps, size=n_ues)
    for u, a in enumerate(home):
        s[:, u, a] = rng.uniform(1.0, 100.0, size=n_beams)
    return make_instance(s, weights=rng.uniform(0.5, 1.5, n_ues))


def test_single_ap_picks_best_ue(rng):
    for _ in range(50):
        inst = random_instance(rng, 1, 5, 3)
        best = inst.s.max(axis=0)[:, 0]
        target = np.argmax(inst.weights * np.log2(1 + best / inst.noise_power))
        hist = []
        sel = ngub1(inst, history=hist)
        assert sel.entries[0] == (int(np.argmax(inst.s[:, target, 0])), int(target))
        assert len(set(hist)) == 1


def test_interference_free_is_optimal(rng):
    for _ in range(50):
        inst = interference_free(rng, 3, 4, 3)
        sel0, _ = ngub1_initial(inst)
        _, r_star = exhaustive_select(inst)
        assert weighted_sum_rate(inst, sel0) == pytest.approx(r_star, rel=1e-12)


def test_interference_free_orders_tie(rng):
    # with one home AP per UE and enough UEs per AP every order yields the same total
    s = np.zeros((2, 6, 3))
    for u in range(6):
        s[:, u, u % 3] = rng.uniform(1.0, 100.0, size=2)
    inst = make_instance(s)
    rates = []
    ngub2(inst, GreedyParams(j_runs=20), rates=rates)
    assert max(rates) - min(rates) < 1e-12


def test_one_swap_fixes_phase_one():
    s = np.array([[[6.0, 2.0], [11.0, 7.0], [1.0, 9.0]]])
    inst = make_instance(s)
    sel0, _ = ngub1_initial(inst)
    sel = ngub1(inst)
    _, r_star = exhaustive_select(inst)
    assert sel0.entries == ((0, 1), (0, 2))
    assert weighted_sum_rate(inst, sel0) < r_star - 0.3
    assert sel.entries == ((0, 0), (0, 2))
    assert weighted_sum_rate(inst, sel) == pytest.approx(r_star, rel=1e-12)


def test_phase_two_never_decreases(rng):
    for _ in range(100):
        inst = random_instance(rng, 4, 7, 3)
        hist = []
        sel = ngub1(inst, history=hist)
        assert all(b >= a for a, b in zip(hist, hist[1:]))
        assert hist[-1] == pytest.approx(weighted_sum_rate(inst, sel), rel=1e-12)
        sel0, _ = ngub1_initial(inst)
        assert hist[0] == pytest.approx(weighted_sum_rate(inst, sel0), rel=1e-12)


def test_outputs_are_valid(rng):
    for _ in range(100):
        inst = random_instance(rng, int(rng.integers(1, 6)), int(rng.integers(1, 6)), 3)
        for sel in (ngub1(inst), ngub2(inst, GreedyParams(seed=1))):
            sel.validate(inst)
            assert len(sel.active()) == min(inst.n_aps, inst.n_ues)


def test_ngub2_single_run_in_ngub1_order_matches_phase_one(rng):
    for _ in range(50):
        inst = random_instance(rng, 4, 6, 3)
        sel0, order = ngub1_initial(inst)
        rest = [a for a in range(4) if a not in order]
        assert ngub2_pass(inst, order + rest) == sel0


def test_ngub2_over_all_orders(rng):
    for _ in range(30):
        inst = random_instance(rng, 3, 4, 2)
        best = max(weighted_sum_rate(inst, ngub2_pass(inst, list(p))) for p in itertools.permutations(range(3)))
        rates = []
        sel = ngub2(inst, GreedyParams(j_runs=200, seed=0), rates=rates)
        assert weighted_sum_rate(inst, sel) == pytest.approx(best, rel=1e-12)


def test_ngub2_monotone_in_runs(rng):
    inst = random_instance(rng, 6, 10, 4)
    vals = [weighted_sum_rate(inst, ngub2(inst, GreedyParams(j_runs=j, seed=4))) for j in (1, 2, 5, 10, 40)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_threshold_leaves_ap_empty():
    s = np.array([[[5.0, 0.5], [4.0, 0.2]]])
    inst = Instance(RssTensor(s), np.ones(2), 1.0, rss_threshold=1.0)
    for sel in (ngub1(inst), ngub2(inst)):
        assert sel.entries[1] is None and sel.entries[0] is not None


def test_tie_break_lowest_ap_then_ue():
    inst = make_instance(np.full((1, 2, 2), 1.0))
    _, order = ngub1_initial(inst)
    sel0, _ = ngub1_initial(inst)
    assert order[0] == 0 and sel0.entries[0] == (0, 0)


def test_bad_params(rng):
    with pytest.raises(ValidationError):
        GreedyParams(improvement_rounds=-1)
    with pytest.raises(ValidationError):
        GreedyParams(j_runs=0)
    with pytest.raises(ValidationError):
        ngub2_pass(random_instance(rng, 2, 2, 2), [0, 0])


def test_defaults(rng):
    inst = random_instance(rng, 5, 6, 2)
    p = GreedyParams()
    assert p.rounds_for(inst) == 15 and p.runs_for(inst) == 25
    assert GreedyParams().runs_for(random_instance(rng, 2, 2, 2)) == 10
