"""Simplified mmWave channel: AP grid, 36 sector beams, log-distance path loss
with lognormal shadowing and random blockage, and random-walk UEs.

Beams: 12 azimuth sectors (centres every 30 degrees) x 3 downtilt tiers
(-10, -30, -50 degrees), each with a flat 20 x 20 degree main lobe and a
constant side lobe 20 dB below it.  The peak gain is set so the whole pattern
integrates to that of an isotropic antenna.  A scenario may ask for a different beam
count, in which case the codebook is that many azimuth sectors of equal width
with no elevation selectivity (used for small test networks).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .instance import RssTensor, dbm_to_watts

SPEED_OF_LIGHT = 299_792_458.0
BEAMWIDTH_DEG = 20.0
N_AZIMUTH = 12
ELEVATION_TIERS_DEG = (-10.0, -30.0, -50.0)
SIDELOBE_DB = -20.0
SIDELOBE = 10.0 ** (SIDELOBE_DB / 10.0)


def _peak_gain(main_solid_angle: float) -> float:
    """Peak gain that makes main lobe plus side lobe floor radiate like an isotropic antenna."""
    return 4.0 * math.pi / (main_solid_angle + SIDELOBE * (4.0 * math.pi - main_solid_angle))


MAX_GAIN = _peak_gain(math.radians(BEAMWIDTH_DEG) ** 2)

# kind -> (grid edge m, path-loss exponent, shadowing sigma dB, AP height m)
PRESETS = {
    "InH": (50.0, 2.0, 3.0, 3.0),
    "UMi": (100.0, 2.1, 4.0, 10.0),
    "UMa": (200.0, 2.8, 6.0, 25.0),
    "RMa": (500.0, 2.3, 5.0, 35.0),
}
CARRIERS_GHZ = (28.0, 60.0, 73.0)


@dataclass(frozen=True)
class Scenario:
    kind: str = "UMi"
    grid_edge_m: float = 100.0
    carrier_ghz: float = 28.0
    tx_power_dbm: float = 30.0
    pl_exponent: float = 2.1
    shadowing_db: float = 4.0
    blockage_prob: float = 0.1
    blockage_loss_db: float = 20.0
    ap_height_m: float = 10.0
    ue_height_m: float = 1.5
    bandwidth_hz: float = 1e9
    noise_figure_db: float = 7.0
    n_beams: int = 36

    def __post_init__(self):
        if self.n_beams < 1:
            raise ValidationError("n_beams must be >= 1")
        if self.grid_edge_m <= 0 or self.carrier_ghz <= 0 or self.bandwidth_hz <= 0:
            raise ValidationError("grid edge, carrier and bandwidth must be > 0")
        if self.pl_exponent <= 0 or self.shadowing_db < 0:
            raise ValidationError("path-loss exponent must be > 0 and shadowing sigma >= 0")
        if not 0 <= self.blockage_prob <= 1:
            raise ValidationError("blockage_prob must be in [0, 1]")

    @property
    def tx_power(self) -> float:
        return dbm_to_watts(self.tx_power_dbm)

    @property
    def noise_power(self) -> float:
        """Thermal noise over the bandwidth plus the receiver noise figure, watts."""
        return dbm_to_watts(-174.0 + 10.0 * math.log10(self.bandwidth_hz) + self.noise_figure_db)


def preset(kind: str, carrier_ghz: float = 28.0, **overrides) -> Scenario:
    if kind not in PRESETS:
        raise ValidationError(f"unknown scenario {kind!r}; choose from {sorted(PRESETS)}")
    edge, gamma, sigma, height = PRESETS[kind]
    base = Scenario(kind=kind, grid_edge_m=edge, carrier_ghz=carrier_ghz, pl_exponent=gamma,
                    shadowing_db=sigma, ap_height_m=height)
    return replace(base, **overrides) if overrides else base


def path_gain(distance_m, scenario: Scenario):
    """Free-space gain at 1 m times d^-gamma; distances below 1 m are clamped."""
    d = np.maximum(np.asarray(distance_m, dtype=float), 1.0)
    wavelength = SPEED_OF_LIGHT / (scenario.carrier_ghz * 1e9)
    ref = (wavelength / (4.0 * math.pi)) ** 2
    return ref * d ** (-scenario.pl_exponent)


def beam_directions() -> np.ndarray:
    """(36, 2) array of (azimuth, elevation) beam centres in degrees."""
    az = np.arange(N_AZIMUTH) * (360.0 / N_AZIMUTH)
    return np.array([(a, e) for e in ELEVATION_TIERS_DEG for a in az])


def beam_gain(azimuth_deg, elevation_deg, n_beams: int = 36) -> np.ndarray:
    """Linear gain of every beam toward each direction; shape (n_beams, *direction shape)."""
    az = np.asarray(azimuth_deg, dtype=float)[None, ...]
    el = np.asarray(elevation_deg, dtype=float)[None, ...]
    shape = (-1,) + (1,) * (az.ndim - 1)
    if n_beams == len(ELEVATION_TIERS_DEG) * N_AZIMUTH:
        beams = beam_directions()
        half = BEAMWIDTH_DEG / 2.0
        d_az = (az - beams[:, 0].reshape(shape) + 180.0) % 360.0 - 180.0
        d_el = el - beams[:, 1].reshape(shape)
        main = (np.abs(d_az) <= half) & (np.abs(d_el) <= half)
        peak = MAX_GAIN
    else:
        width = 360.0 / n_beams
        centres = np.arange(n_beams) * width
        d_az = (az - centres.reshape(shape) + 180.0) % 360.0 - 180.0
        main = np.abs(d_az) <= width / 2.0
        main = main & np.ones_like(el, dtype=bool)
        peak = _peak_gain(2.0 * math.radians(width))  # full elevation span
    return np.where(main, peak, peak * SIDELOBE)


@dataclass(frozen=True)
class Topology:
    ap_positions: np.ndarray  # (n_aps, 2) metres
    ue_positions: np.ndarray  # (n_ues, 2) metres
    arena_m: float

    @property
    def n_aps(self) -> int:
        return self.ap_positions.shape[0]

    @property
    def n_ues(self) -> int:
        return self.ue_positions.shape[0]

    def with_ues(self, ue_positions) -> "Topology":
        return Topology(self.ap_positions, np.asarray(ue_positions, dtype=float), self.arena_m)


def grid_positions(n_aps: int, arena_m: float) -> np.ndarray:
    """Cell centres of a k x k grid over the arena, k = ceil(sqrt(n_aps)); the first
    n_aps cells in row-major order are used (the full grid for perfect squares)."""
    if n_aps < 1:
        raise ValidationError("n_aps must be >= 1")
    k = math.isqrt(n_aps)
    if k * k < n_aps:
        k += 1
    c = (np.arange(k) + 0.5) * arena_m / k
    xx, yy = np.meshgrid(c, c, indexing="xy")
    return np.column_stack([xx.ravel(), yy.ravel()])[:n_aps]


def make_topology(scenario: Scenario, n_aps: int, n_ues: int, rng: np.random.Generator) -> Topology:
    if n_ues < 1:
        raise ValidationError("n_ues must be >= 1")
    edge = scenario.grid_edge_m
    return Topology(grid_positions(n_aps, edge), rng.uniform(0.0, edge, size=(n_ues, 2)), edge)


def link_geometry(scenario: Scenario, topology: Topology):
    """3-D distance, azimuth and elevation (degrees) from every AP to every UE; shape (n_ues, n_aps)."""
    delta = topology.ue_positions[:, None, :] - topology.ap_positions[None, :, :]
    horiz = np.hypot(delta[..., 0], delta[..., 1])
    dh = scenario.ue_height_m - scenario.ap_height_m
    dist = np.hypot(horiz, dh)
    azimuth = np.degrees(np.arctan2(delta[..., 1], delta[..., 0])) % 360.0
    elevation = np.degrees(np.arctan2(dh, horiz))
    return dist, azimuth, elevation


def generate_rss(scenario: Scenario, topology: Topology, rng: np.random.Generator,
                 shadowing: bool = True, blockage: bool = True) -> RssTensor:
    """tx power x beam gain x path gain x shadowing x blockage, per (beam, UE, AP)."""
    dist, az, el = link_geometry(scenario, topology)
    gain = beam_gain(az, el, scenario.n_beams)  # (n_beams, n_ues, n_aps)
    link = scenario.tx_power * path_gain(dist, scenario)
    if shadowing and scenario.shadowing_db > 0:
        link = link * 10.0 ** (rng.normal(0.0, scenario.shadowing_db, size=link.shape) / 10.0)
    if blockage and scenario.blockage_prob > 0:
        blocked = rng.random(link.shape) < scenario.blockage_prob
        link = np.where(blocked, link * 10.0 ** (-scenario.blockage_loss_db / 10.0), link)
    return RssTensor(gain * link[None, :, :])


@dataclass(frozen=True)
class MobilityState:
    positions: np.ndarray  # (n_ues, 2)
    speed: float = 1.0  # metres per slot


def reflect(x, arena_m: float):
    """Fold coordinates back into [0, arena] as if bouncing off the walls."""
    y = np.mod(x, 2.0 * arena_m)
    return np.where(y > arena_m, 2.0 * arena_m - y, y)


def random_walk_step(mobility: MobilityState, arena_m: float, rng: np.random.Generator) -> MobilityState:
    """Every UE moves ``speed`` metres in a uniformly random direction."""
    n = mobility.positions.shape[0]
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    step = mobility.speed * np.column_stack([np.cos(theta), np.sin(theta)])
    return MobilityState(reflect(mobility.positions + step, arena_m), mobility.speed)
