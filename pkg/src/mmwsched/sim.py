"""Slot/schedule simulation: mobility -> channel -> selection -> throughput metrics.

Per run: place the AP grid and UEs.  Per slot: move UEs, draw a fresh RSS tensor.
Per schedule within the slot: set weights, select, and credit every served UE
its (unweighted) rate.  A schedule is the unit of time, so throughputs are
average rates in bits/s.
"""
from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .channel import PRESETS, MobilityState, generate_rss, make_topology, preset, random_walk_step
from .errors import CapacityError, ValidationError
from .instance import Instance, jain_fairness_index, ue_rates, weighted_sum_rate
from .solvers import resolve_options, run_algorithm

SCHEMA = "mmwsched-sim/1"
WEIGHT_POLICIES = ("uniform", "inverse-throughput")
THREADS_ENV = "MMWSCHED_THREADS"


@dataclass
class SimConfig:
    seed: int
    scenario: str = "UMi"
    carrier_ghz: float = 28.0
    n_aps: int = 4
    n_ues: int = 10
    algorithm: str = "ngub1"
    slots: int = 2000
    schedules_per_slot: int = 1
    runs: int = 20
    weight_policy: str = "uniform"
    ue_speed: float = 1.0
    rss_threshold: float = 0.0
    fairness_offset_bits: float = 1.0
    scenario_overrides: dict = field(default_factory=dict)
    algorithm_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")
        for name in ("n_aps", "n_ues", "slots", "schedules_per_slot", "runs"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v!r}")
        if self.weight_policy not in WEIGHT_POLICIES:
            raise ValidationError(f"weight_policy must be one of {WEIGHT_POLICIES}")
        if self.ue_speed < 0:
            raise ValidationError("ue_speed must be >= 0")
        if self.scenario not in PRESETS:
            raise ValidationError(f"unknown scenario {self.scenario!r}; choose from {sorted(PRESETS)}")
        resolve_options(self.algorithm, self.algorithm_params)
        self.make_scenario()

    def make_scenario(self):
        try:
            return preset(self.scenario, self.carrier_ghz, **self.scenario_overrides)
        except TypeError as exc:
            raise ValidationError(f"bad scenario override: {exc}") from None

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        if not isinstance(d, dict):
            raise ValidationError("config must be an object")
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config field(s): {sorted(unknown)}")
        if "seed" not in d:
            raise ValidationError("config needs a seed")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "SimConfig":
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_dict(d)


@dataclass
class RunResult:
    ue_throughput: np.ndarray  # tau_i^u, shape (n_ues,)
    schedule_rates: np.ndarray  # weighted sum rate of every schedule, shape (slots, K)
    seconds: float

    @property
    def per_user(self) -> float:
        return float(self.ue_throughput.mean())


@dataclass
class SimReport:
    config: SimConfig
    runs: list  # RunResult per run
    mu_u: np.ndarray
    sigma_u: np.ndarray
    mu: float
    sigma: float
    jfi: float
    wall_clock_s: float

    def summary(self) -> dict:
        return {
            "schema": SCHEMA,
            "algorithm": self.config.algorithm,
            "runs": len(self.runs),
            "per_user_throughput_mean": self.mu,
            "per_user_throughput_sd": self.sigma,
            "jfi": self.jfi,
        }

    def summary_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# schema={SCHEMA}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["run", "per_user_throughput", "jfi", "mean_schedule_rate"])
        for i, r in enumerate(self.runs):
            w.writerow([i, f"{r.per_user:.17g}", f"{_jfi_or_nan(r.ue_throughput):.17g}",
                        f"{float(r.schedule_rates.mean()):.17g}"])
        return buf.getvalue()

    def per_ue_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# schema={SCHEMA}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["ue", "mu", "sigma"])
        for u, (m, s) in enumerate(zip(self.mu_u, self.sigma_u)):
            w.writerow([u, f"{m:.17g}", f"{s:.17g}"])
        return buf.getvalue()

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(self.summary_csv())
        (out / "per_ue.csv").write_text(self.per_ue_csv())


def _jfi_or_nan(x) -> float:
    try:
        return jain_fairness_index(x)
    except ValidationError:
        return float("nan")


def schedule_weights(policy: str, cumulative_bits: np.ndarray, offset: float) -> np.ndarray:
    """Uniform, or proportional to 1/(offset + bits delivered so far), normalised to mean 1."""
    if policy == "uniform":
        return np.ones_like(cumulative_bits)
    w = 1.0 / (offset + cumulative_bits)
    return w / w.mean()


def simulate_run(config: SimConfig, seed_seq: np.random.SeedSequence) -> RunResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed_seq)
    scenario = config.make_scenario()
    topo = make_topology(scenario, config.n_aps, config.n_ues, rng)
    mobility = MobilityState(topo.ue_positions, config.ue_speed)
    noise = scenario.noise_power
    K = config.schedules_per_slot
    served = np.zeros(config.n_ues)
    sched_rates = np.zeros((config.slots, K))
    for t in range(config.slots):
        mobility = random_walk_step(mobility, topo.arena_m, rng)
        rss = generate_rss(scenario, topo.with_ues(mobility.positions), rng)
        for k in range(K):
            w = schedule_weights(config.weight_policy, served, config.fairness_offset_bits)
            inst = Instance(rss, w, noise, scenario.bandwidth_hz, config.rss_threshold)
            algo_seed = int(rng.integers(2**63))
            try:
                sel = run_algorithm(inst, config.algorithm, config.algorithm_params, algo_seed)
            except CapacityError as exc:
                raise CapacityError(f"slot {t}, schedule {k}: {exc}") from exc
            sched_rates[t, k] = weighted_sum_rate(inst, sel)
            served += ue_rates(inst, sel)
    return RunResult(served / (K * config.slots), sched_rates, time.perf_counter() - start)


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def run_simulation(config: SimConfig, threads: Optional[int] = None) -> SimReport:
    start = time.perf_counter()
    seeds = np.random.SeedSequence(config.seed).spawn(config.runs)
    threads = _threads() if threads is None else threads
    if threads > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=min(threads, config.runs)) as pool:
            runs = list(pool.map(simulate_run, [config] * config.runs, seeds))
    else:
        runs = [simulate_run(config, s) for s in seeds]
    tau_u = np.array([r.ue_throughput for r in runs])  # (runs, n_ues)
    tau = tau_u.mean(axis=1)
    mu_u = tau_u.mean(axis=0)
    sigma_u = np.sqrt(((tau_u - mu_u) ** 2).mean(axis=0))
    mu = float(tau.mean())
    sigma = float(np.sqrt(((tau - mu) ** 2).mean()))
    return SimReport(config, runs, mu_u, sigma_u, mu, sigma, _jfi_or_nan(mu_u),
                     time.perf_counter() - start)
