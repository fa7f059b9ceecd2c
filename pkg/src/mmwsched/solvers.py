"""Uniform entry point over every selection algorithm."""
from __future__ import annotations

from typing import Any, Optional

from .errors import ValidationError
from .exhaustive import DEFAULT_CAP, exhaustive_select
from .greedy import GreedyParams, ngub1, ngub2
from .instance import Instance, Selection
from .lig import DEFAULT_UTILITY_CAP, LigParams, build_game, lig_select
from .mcmc import McmcParams, mcmc_select

ALGORITHMS = ("exhaustive", "mcmc", "lig", "ngub1", "ngub2")

# option name -> default, per algorithm
OPTIONS: dict[str, dict[str, Any]] = {
    "exhaustive": {"cap": DEFAULT_CAP, "allow_off": True},
    "mcmc": {"max_iters": 5000, "alpha0": 1.0, "schedule": "log", "allow_off": True},
    "lig": {"max_iters": 5000, "beta0": 1.0, "schedule": "log", "stop_epsilon": None,
            "s_t": None, "i_th": None, "utility_cap": DEFAULT_UTILITY_CAP, "dynamics": "concurrent"},
    "ngub1": {"improvement_rounds": None, "min_round_gain": None},
    "ngub2": {"j_runs": None},
}


def resolve_options(algorithm: str, options: Optional[dict] = None) -> dict:
    if algorithm not in ALGORITHMS:
        raise ValidationError(f"unknown algorithm {algorithm!r}; choose from {list(ALGORITHMS)}")
    options = dict(options or {})
    unknown = set(options) - set(OPTIONS[algorithm])
    if unknown:
        raise ValidationError(f"unknown option(s) for {algorithm}: {sorted(unknown)}")
    merged = dict(OPTIONS[algorithm])
    merged.update(options)
    return merged


def run_algorithm(instance: Instance, algorithm: str, options: Optional[dict] = None,
                  seed: int = 0) -> Selection:
    opt = resolve_options(algorithm, options)
    if algorithm == "exhaustive":
        return exhaustive_select(instance, cap=opt["cap"], allow_off=opt["allow_off"])[0]
    if algorithm == "mcmc":
        params = McmcParams(max_iters=opt["max_iters"], alpha0=opt["alpha0"], schedule=opt["schedule"],
                            seed=seed, allow_off=opt["allow_off"], record_trace=False)
        return mcmc_select(instance, params)[0]
    if algorithm == "lig":
        game = build_game(instance, opt["s_t"], opt["i_th"], utility_cap=opt["utility_cap"])
        params = LigParams(max_iters=opt["max_iters"], beta0=opt["beta0"], schedule=opt["schedule"],
                           seed=seed, stop_epsilon=opt["stop_epsilon"], dynamics=opt["dynamics"])
        return lig_select(game, params)[1]
    if algorithm == "ngub1":
        params = GreedyParams(improvement_rounds=opt["improvement_rounds"],
                              min_round_gain=opt["min_round_gain"], seed=seed)
        return ngub1(instance, params)
    params = GreedyParams(j_runs=opt["j_runs"], seed=seed)
    return ngub2(instance, params)
