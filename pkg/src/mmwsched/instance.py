"""Scheduling instance, selections, and the weighted-sum-rate objective.

Powers are linear watts everywhere inside the package.  Instance files carry
powers in dBm; ``dbm_to_watts`` / ``watts_to_dbm`` are the only conversion
points.  A zero-power entry is written as ``null`` in the file.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InstanceFormatError, ValidationError

Entry = Optional[tuple[int, int]]  # (beam, ue) or None for an idle AP


def dbm_to_watts(dbm):
    """10^((dBm - 30) / 10); ``None`` maps to 0 W."""
    if dbm is None:
        return 0.0
    return 10.0 ** ((float(dbm) - 30.0) / 10.0)


def watts_to_dbm(watts):
    if watts == 0.0:
        return None
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class RssTensor:
    """Received powers ``s[b, u, a]`` in watts (beam, UE, AP)."""

    s: np.ndarray

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        if s.ndim != 3:
            raise ValidationError(f"RSS tensor must be 3-D, got shape {s.shape}")
        if min(s.shape) <= 0:
            raise ValidationError(f"RSS tensor dimensions must be positive, got {s.shape}")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise ValidationError("RSS entries must be finite and >= 0")
        s.setflags(write=False)
        object.__setattr__(self, "s", s)

    @property
    def n_beams(self) -> int:
        return self.s.shape[0]

    @property
    def n_ues(self) -> int:
        return self.s.shape[1]

    @property
    def n_aps(self) -> int:
        return self.s.shape[2]


@dataclass(frozen=True)
class Instance:
    rss: RssTensor
    weights: np.ndarray
    noise_power: float
    bandwidth: float = 1.0
    rss_threshold: float = 0.0

    def __post_init__(self):
        if not isinstance(self.rss, RssTensor):
            object.__setattr__(self, "rss", RssTensor(self.rss))
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != self.rss.n_ues:
            raise ValidationError(
                f"weights has length {w.shape[0]}, expected n_ues={self.rss.n_ues}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("weights must be finite and >= 0")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if not (self.noise_power > 0 and math.isfinite(self.noise_power)):
            raise ValidationError("noise_power must be > 0")
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ValidationError("bandwidth must be > 0")
        if not (self.rss_threshold >= 0):
            raise ValidationError("rss_threshold must be >= 0")

    @property
    def s(self) -> np.ndarray:
        return self.rss.s

    @property
    def n_aps(self) -> int:
        return self.rss.n_aps

    @property
    def n_ues(self) -> int:
        return self.rss.n_ues

    @property
    def n_beams(self) -> int:
        return self.rss.n_beams

    def with_weights(self, weights) -> "Instance":
        return Instance(self.rss, weights, self.noise_power, self.bandwidth, self.rss_threshold)

    def best_beams(self) -> np.ndarray:
        """Per (ue, ap) index of the strongest beam; shape (n_ues, n_aps)."""
        return np.argmax(self.s, axis=0)

    def best_rss(self) -> np.ndarray:
        return np.max(self.s, axis=0)


@dataclass(frozen=True)
class Selection:
    """Per-AP optional (beam, ue) assignment."""

    entries: tuple[Entry, ...]

    def __post_init__(self):
        entries = []
        for e in self.entries:
            if e is None:
                entries.append(None)
            else:
                b, u = e
                entries.append((int(b), int(u)))
        object.__setattr__(self, "entries", tuple(entries))
        ues = [e[1] for e in self.entries if e is not None]
        if len(ues) != len(set(ues)):
            raise ValidationError(f"UE served by more than one AP: {self.entries}")

    @classmethod
    def empty(cls, n_aps: int) -> "Selection":
        return cls((None,) * n_aps)

    @classmethod
    def from_vectors(cls, beams: Sequence, ues: Sequence) -> "Selection":
        """Build from per-AP beam and UE vectors; ``None``/negative entries mean idle."""
        entries = []
        for b, u in zip(beams, ues):
            if b is None or u is None or b < 0 or u < 0:
                entries.append(None)
            else:
                entries.append((b, u))
        return cls(tuple(entries))

    @property
    def n_aps(self) -> int:
        return len(self.entries)

    def active(self) -> list[tuple[int, int, int]]:
        """List of (ap, beam, ue) for the non-empty entries."""
        return [(a, e[0], e[1]) for a, e in enumerate(self.entries) if e is not None]

    def validate(self, instance: Instance) -> None:
        if len(self.entries) != instance.n_aps:
            raise ValidationError(
                f"selection has {len(self.entries)} entries, instance has {instance.n_aps} APs")
        for a, b, u in self.active():
            if not (0 <= b < instance.n_beams):
                raise ValidationError(f"beam {b} out of range at AP {a}")
            if not (0 <= u < instance.n_ues):
                raise ValidationError(f"UE {u} out of range at AP {a}")

    def to_dict(self) -> dict:
        return {"entries": [None if e is None else {"beam": e[0], "ue": e[1]} for e in self.entries]}


def link_rates(instance: Instance, selection: Selection, weighted: bool = True) -> np.ndarray:
    """Per-AP rate B*log2(1+SINR) (times w_u if ``weighted``); idle APs get 0."""
    selection.validate(instance)
    out = np.zeros(instance.n_aps)
    act = selection.active()
    if not act:
        return out
    aps = np.array([t[0] for t in act])
    beams = np.array([t[1] for t in act])
    ues = np.array([t[2] for t in act])
    # m[i, j] = power at UE of link i from the AP/beam of link j
    m = instance.s[beams[None, :], ues[:, None], aps[None, :]]
    signal = np.diag(m)
    interference = m.sum(axis=1) - signal
    r = instance.bandwidth * np.log2(1.0 + signal / (instance.noise_power + interference))
    if weighted:
        r = r * instance.weights[ues]
    out[aps] = r
    return out


def ue_rates(instance: Instance, selection: Selection) -> np.ndarray:
    """Unweighted rate of every UE (0 for unserved UEs)."""
    per_ap = link_rates(instance, selection, weighted=False)
    out = np.zeros(instance.n_ues)
    for a, _, u in selection.active():
        out[u] = per_ap[a]
    return out


def weighted_sum_rate(instance: Instance, selection: Selection) -> float:
    """Sum over active APs of w_u * B * log2(1 + S / (N0 + interference from other active APs))."""
    return float(link_rates(instance, selection).sum())


def rate_given_vectors(instance: Instance, beam_vector: Sequence[int], ue_vector: Sequence[int]) -> float:
    """Weighted sum rate with every AP active, AP ``a`` serving ``ue_vector[a]`` on ``beam_vector[a]``."""
    if len(beam_vector) != instance.n_aps or len(ue_vector) != instance.n_aps:
        raise ValidationError("beam and UE vectors must have length n_aps")
    if instance.n_ues < instance.n_aps:
        raise ValidationError("an injective UE vector needs n_ues >= n_aps")
    if len(set(int(u) for u in ue_vector)) != len(ue_vector):
        raise ValidationError(f"UE vector is not injective: {list(ue_vector)}")
    if any(b is None or b < 0 for b in beam_vector) or any(u is None or u < 0 for u in ue_vector):
        raise ValidationError("all APs must be active")
    return weighted_sum_rate(instance, Selection(tuple(zip(beam_vector, ue_vector))))


def jain_fairness_index(throughputs: Iterable[float]) -> float:
    x = np.asarray(list(throughputs), dtype=float)
    if x.size == 0:
        raise ValidationError("JFI of an empty vector is undefined")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValidationError("throughputs must be finite and >= 0")
    top = float(x.max())
    if top == 0.0:
        raise ValidationError("JFI is undefined when every throughput is zero")
    x = x / top  # avoids underflow of the sum of squares
    return float(x.sum() ** 2 / (x.size * np.dot(x, x)))


# ---- serialization ---------------------------------------------------------

def instance_to_dict(instance: Instance) -> dict:
    flat = instance.s.reshape(-1)  # row-major over (b, u, a)
    return {
        "n_aps": instance.n_aps,
        "n_ues": instance.n_ues,
        "n_beams": instance.n_beams,
        "noise_dbm": watts_to_dbm(instance.noise_power),
        "bandwidth_hz": instance.bandwidth,
        "rss_threshold_dbm": watts_to_dbm(instance.rss_threshold),
        "weights": [float(w) for w in instance.weights],
        "rss_dbm": [watts_to_dbm(float(x)) for x in flat],
    }


def _count(d: dict, key: str) -> int:
    v = d.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
        raise InstanceFormatError(f"{key} must be a positive integer, got {v!r}")
    return v


def instance_from_dict(d: dict) -> Instance:
    if not isinstance(d, dict):
        raise InstanceFormatError("instance document must be an object")
    n_aps, n_ues, n_beams = _count(d, "n_aps"), _count(d, "n_ues"), _count(d, "n_beams")
    for key in ("noise_dbm", "weights", "rss_dbm"):
        if key not in d:
            raise InstanceFormatError(f"missing field {key!r}")
    rss = d["rss_dbm"]
    if not isinstance(rss, list) or len(rss) != n_aps * n_ues * n_beams:
        got = len(rss) if isinstance(rss, list) else type(rss).__name__
        raise InstanceFormatError(
            f"rss_dbm has {got} entries, expected n_beams*n_ues*n_aps = {n_aps * n_ues * n_beams}")
    if d["noise_dbm"] is None:
        raise InstanceFormatError("noise_dbm must be a number")
    try:
        s = np.array([dbm_to_watts(x) for x in rss], dtype=float).reshape(n_beams, n_ues, n_aps)
        return Instance(
            RssTensor(s),
            weights=d["weights"],
            noise_power=dbm_to_watts(d["noise_dbm"]),
            bandwidth=float(d.get("bandwidth_hz", 1.0)),
            rss_threshold=dbm_to_watts(d.get("rss_threshold_dbm")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(str(exc)) from exc


def save_instance(instance: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=1) + "\n")


def load_instance(path) -> Instance:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(d)


def random_instance(rng: np.random.Generator, n_aps: int, n_ues: int, n_beams: int,
                    snr_db: tuple[float, float] = (-10.0, 30.0),
                    weight_range: tuple[float, float] = (0.5, 1.5),
                    noise_power: float = 1.0, bandwidth: float = 1.0,
                    rss_threshold: float = 0.0) -> Instance:
    """I.i.d. test instance: every S[b,u,a]/N0 log-uniform over ``snr_db``, weights uniform."""
    lo, hi = snr_db
    s = noise_power * 10.0 ** (rng.uniform(lo, hi, size=(n_beams, n_ues, n_aps)) / 10.0)
    w = rng.uniform(*weight_range, size=n_ues)
    return Instance(RssTensor(s), w, noise_power, bandwidth, rss_threshold)
