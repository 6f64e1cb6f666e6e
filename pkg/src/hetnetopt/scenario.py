"""Network model: domain types, propagation, and scenario generation.

A :class:`Scenario` is the immutable problem instance: base stations
(macro cells and low-power nodes), user equipments with rate demands, a
linear channel-gain matrix, and the resource grid (number of resource
units and their bandwidth).  Scenarios are either generated procedurally
from a :class:`ScenarioConfig` (hexagonal macro layout, COST-231-Hata
path loss, log-normal shadowing) or loaded from JSON.

Generation is a pure function of the config: the RNG is numpy's PCG64
(`numpy.random.default_rng`) seeded with ``rng_seed``, so the same config
yields a bit-identical scenario on every run and platform.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from enum import Enum
from pathlib import Path

import numpy as np

LN2 = math.log(2.0)

# COST-231-Hata validity range (MHz)
COST231_FREQ_MIN_MHZ = 1500.0
COST231_FREQ_MAX_MHZ = 2000.0

# Distances below this are clamped before entering the path-loss formula.
MIN_PATHLOSS_DISTANCE_M = 10.0


class CellKind(str, Enum):
    MACRO = "macro"
    LPN = "lpn"


@dataclass(frozen=True)
class Cell:
    """One base station: a macro cell or a low-power node (LPN).

    ``power_limit`` and ``pilot_power`` are in mW per resource unit; the
    pilot power is fixed and used only for association decisions.
    """

    id: int
    kind: CellKind
    position: tuple[float, float]
    antenna_height: float
    power_limit: float
    pilot_power: float

    def __post_init__(self):
        if self.power_limit <= 0:
            raise ValueError(f"cell {self.id}: power_limit must be > 0")
        if self.pilot_power <= 0:
            raise ValueError(f"cell {self.id}: pilot_power must be > 0")
        if self.antenna_height <= 0:
            raise ValueError(f"cell {self.id}: antenna_height must be > 0")


@dataclass(frozen=True)
class UserEquipment:
    """One UE with a strictly positive downlink rate demand in bit/s."""

    id: int
    position: tuple[float, float]
    demand: float

    def __post_init__(self):
        if self.demand <= 0:
            raise ValueError(f"ue {self.id}: demand must be > 0")


class Scenario:
    """Immutable problem instance shared by all solver and search code.

    Parameters
    ----------
    cells : list of Cell, macros first, ids contiguous from 0.
    ues : list of UserEquipment, ids contiguous from 0.
    gain : (n_cells, n_ues) array of linear power gains (path loss and
        shadowing combined; dimensionless).
    noise_power : noise power per resource unit, mW.
    num_resource_units : resource units per cell (M).
    resource_bandwidth : bandwidth of one resource unit, Hz (B).
    """

    def __init__(self, cells, ues, gain, noise_power, num_resource_units,
                 resource_bandwidth):
        cells = tuple(cells)
        ues = tuple(ues)
        gain = np.asarray(gain, dtype=np.float64)
        if [c.id for c in cells] != list(range(len(cells))):
            raise ValueError("cell ids must be contiguous from 0")
        if [u.id for u in ues] != list(range(len(ues))):
            raise ValueError("ue ids must be contiguous from 0")
        macro_seen_after_lpn = False
        for prev, cur in zip(cells, cells[1:]):
            if prev.kind is CellKind.LPN and cur.kind is CellKind.MACRO:
                macro_seen_after_lpn = True
        if macro_seen_after_lpn:
            raise ValueError("cells must be ordered macros first, then LPNs")
        if gain.shape != (len(cells), len(ues)):
            raise ValueError(
                f"gain matrix shape {gain.shape} does not match "
                f"{len(cells)} cells x {len(ues)} ues")
        if np.any(gain < 0):
            raise ValueError("gain entries must be >= 0")
        if len(ues) and np.any(gain.max(axis=0) <= 0):
            raise ValueError("every UE needs positive gain to at least one cell")
        if noise_power <= 0:
            raise ValueError("noise_power must be > 0")
        if num_resource_units < 1:
            raise ValueError("num_resource_units must be >= 1")
        if resource_bandwidth <= 0:
            raise ValueError("resource_bandwidth must be > 0")
        gain.setflags(write=False)
        self.cells = cells
        self.ues = ues
        self.gain = gain
        self.noise_power = float(noise_power)
        self.num_resource_units = int(num_resource_units)
        self.resource_bandwidth = float(resource_bandwidth)

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    @property
    def num_ues(self) -> int:
        return len(self.ues)

    @property
    def macro_ids(self) -> list[int]:
        return [c.id for c in self.cells if c.kind is CellKind.MACRO]

    @property
    def lpn_ids(self) -> list[int]:
        return [c.id for c in self.cells if c.kind is CellKind.LPN]

    @property
    def num_lpns(self) -> int:
        return len(self.lpn_ids)

    def power_limits(self) -> np.ndarray:
        return np.array([c.power_limit for c in self.cells])

    def demands(self) -> np.ndarray:
        return np.array([u.demand for u in self.ues])

    def demand_nats_normalized(self) -> np.ndarray:
        """Per-UE demand converted to nat/s and normalized by M*B.

        This is the ``R_j`` entering the load function: a cell serving UE j
        at SINR s spends a load share R_j / ln(1 + s).
        """
        mb = self.num_resource_units * self.resource_bandwidth
        return self.demands() * (LN2 / mb)

    def with_demand(self, demand: float) -> "Scenario":
        """Copy of this scenario with every UE demand replaced.

        Layout, gains and noise are shared; only the demand changes, which
        is all a sweep over demand values needs.
        """
        ues = tuple(UserEquipment(u.id, u.position, float(demand))
                    for u in self.ues)
        return Scenario(self.cells, ues, self.gain, self.noise_power,
                        self.num_resource_units, self.resource_bandwidth)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (self.cells == other.cells and self.ues == other.ues
                and self.gain.shape == other.gain.shape
                and np.array_equal(self.gain, other.gain)
                and self.noise_power == other.noise_power
                and self.num_resource_units == other.num_resource_units
                and self.resource_bandwidth == other.resource_bandwidth)

    # --- JSON (schema documented in README) ---

    def to_dict(self) -> dict:
        return {
            "cells": [
                {"id": c.id, "kind": c.kind.value,
                 "position": list(c.position),
                 "antenna_height": c.antenna_height,
                 "power_limit": c.power_limit,
                 "pilot_power": c.pilot_power}
                for c in self.cells
            ],
            "ues": [
                {"id": u.id, "position": list(u.position), "demand": u.demand}
                for u in self.ues
            ],
            "gain": [list(row) for row in self.gain],
            "noise_power": self.noise_power,
            "num_resource_units": self.num_resource_units,
            "resource_bandwidth": self.resource_bandwidth,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        cells = [Cell(int(c["id"]), CellKind(c["kind"]),
                      tuple(float(x) for x in c["position"]),
                      float(c["antenna_height"]), float(c["power_limit"]),
                      float(c["pilot_power"]))
                 for c in d["cells"]]
        ues = [UserEquipment(int(u["id"]),
                             tuple(float(x) for x in u["position"]),
                             float(u["demand"]))
               for u in d["ues"]]
        return cls(cells, ues, np.array(d["gain"], dtype=np.float64),
                   float(d["noise_power"]), int(d["num_resource_units"]),
                   float(d["resource_bandwidth"]))

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def from_json(cls, path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class ScenarioConfig:
    """Knobs for procedural scenario generation.

    Defaults follow the reference setup: 7 hexagonal macro sites, 2 LPNs
    and 30 UEs dropped uniformly per site, 2 GHz carrier, 8 dB log-normal
    shadowing, 200/50 mW per-resource-unit power limits, 4.5 MHz of
    180 kHz resource units (M = 25), -174 dBm/Hz noise density.  Pilot
    powers default to the power limits.  The seed fully determines the
    generated scenario.
    """

    num_macro_sites: int = 7
    lpns_per_site: int = 2
    ues_per_site: int = 30
    inter_site_distance_m: float = 500.0
    carrier_frequency_mhz: float = 2000.0
    shadowing_stddev_db: float = 8.0
    macro_power_limit_mw: float = 200.0
    lpn_power_limit_mw: float = 50.0
    macro_pilot_mw: float | None = None      # None -> power limit
    lpn_pilot_mw: float | None = None        # None -> power limit
    macro_height_m: float = 30.0
    lpn_height_m: float = 10.0
    ue_height_m: float = 1.5
    demand_bps: float = 300e3
    cell_bandwidth_hz: float = 4.5e6
    resource_bandwidth_hz: float = 180e3
    noise_psd_dbm_per_hz: float = -174.0
    rng_seed: int = 1

    def validate(self) -> None:
        positive = {
            "num_macro_sites": self.num_macro_sites,
            "inter_site_distance_m": self.inter_site_distance_m,
            "carrier_frequency_mhz": self.carrier_frequency_mhz,
            "macro_power_limit_mw": self.macro_power_limit_mw,
            "lpn_power_limit_mw": self.lpn_power_limit_mw,
            "macro_height_m": self.macro_height_m,
            "lpn_height_m": self.lpn_height_m,
            "ue_height_m": self.ue_height_m,
            "demand_bps": self.demand_bps,
            "cell_bandwidth_hz": self.cell_bandwidth_hz,
            "resource_bandwidth_hz": self.resource_bandwidth_hz,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be > 0, got {value}")
        if self.lpns_per_site < 0 or self.ues_per_site < 0:
            raise ValueError("per-site counts must be >= 0")
        if self.shadowing_stddev_db < 0:
            raise ValueError("shadowing_stddev_db must be >= 0")
        if not (COST231_FREQ_MIN_MHZ <= self.carrier_frequency_mhz
                <= COST231_FREQ_MAX_MHZ):
            raise ValueError(
                f"carrier_frequency_mhz={self.carrier_frequency_mhz} outside "
                f"the COST-231-Hata validity range "
                f"[{COST231_FREQ_MIN_MHZ}, {COST231_FREQ_MAX_MHZ}] MHz")
        m = self.cell_bandwidth_hz / self.resource_bandwidth_hz
        if abs(m - round(m)) > 1e-9 or round(m) < 1:
            raise ValueError(
                "cell_bandwidth_hz must be a positive integer multiple of "
                f"resource_bandwidth_hz (got ratio {m})")

    @property
    def num_resource_units(self) -> int:
        return int(round(self.cell_bandwidth_hz / self.resource_bandwidth_hz))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        """Load from a TOML or JSON file (chosen by extension)."""
        path = Path(path)
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            data = tomllib.loads(path.read_text())
        else:
            data = json.loads(path.read_text())
        return cls.from_dict(data)


def path_loss_db(distance_m: float, frequency_mhz: float,
                 base_height_m: float, ue_height_m: float = 1.5) -> float:
    """COST-231-Hata path loss, urban medium-city variant (C_m = 0), in dB.

    Distances below 10 m are clamped to 10 m to stay inside the model's
    validity range.
    """
    d_km = max(distance_m, MIN_PATHLOSS_DISTANCE_M) / 1000.0
    log_f = math.log10(frequency_mhz)
    log_hb = math.log10(base_height_m)
    a_hm = (1.1 * log_f - 0.7) * ue_height_m - (1.56 * log_f - 0.8)
    return (46.3 + 33.9 * log_f - 13.82 * log_hb - a_hm
            + (44.9 - 6.55 * log_hb) * math.log10(d_km))


def linear_gain(path_loss_db_value: float, shadow_db: float = 0.0) -> float:
    """Linear power gain for a combined path-loss + shadowing budget in dB."""
    return 10.0 ** (-(path_loss_db_value + shadow_db) / 10.0)


def noise_per_resource_unit(psd_dbm_per_hz: float, bandwidth_hz: float) -> float:
    """Noise power in mW over one resource unit of the given bandwidth."""
    return 10.0 ** ((psd_dbm_per_hz + 10.0 * math.log10(bandwidth_hz)) / 10.0)


def _hexagon_vertices(center: np.ndarray, circumradius: float) -> np.ndarray:
    # Pointy-top hexagon: vertices at 30 + k*60 degrees, so that neighbor
    # sites placed at k*60 degrees and distance ISD tile exactly.
    angles = np.deg2rad(30.0 + 60.0 * np.arange(6))
    return center + circumradius * np.stack(
        [np.cos(angles), np.sin(angles)], axis=1)


def _point_in_hexagon(p: np.ndarray, center: np.ndarray,
                      circumradius: float) -> bool:
    # Convexity test against the 6 edges.
    v = _hexagon_vertices(center, circumradius)
    for k in range(6):
        a, b = v[k], v[(k + 1) % 6]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if cross < 0:
            return False
    return True


def _uniform_in_hexagon(rng: np.random.Generator, center: np.ndarray,
                        circumradius: float) -> np.ndarray:
    # Rejection sampling from the bounding square; acceptance ~0.65.
    while True:
        p = center + rng.uniform(-circumradius, circumradius, size=2)
        if _point_in_hexagon(p, center, circumradius):
            return p


def site_centers(num_sites: int, isd: float) -> np.ndarray:
    """Centers of a hexagonal flower: one center site plus rings of 6.

    Supports 1 (center only) up to 7 (center + full first ring) sites,
    which covers the reference layout; larger counts continue onto the
    second ring.
    """
    offsets = [np.zeros(2)]
    ring = 1
    while len(offsets) < num_sites:
        # Walk the ring-th hexagonal ring corner to corner.
        corner_angles = np.deg2rad(60.0 * np.arange(6))
        corners = ring * isd * np.stack(
            [np.cos(corner_angles), np.sin(corner_angles)], axis=1)
        for k in range(6):
            a, b = corners[k], corners[(k + 1) % 6]
            for step in range(ring):
                offsets.append(a + (b - a) * (step / ring))
        ring += 1
    return np.array(offsets[:num_sites])


def generate_scenario(config: ScenarioConfig) -> Scenario:
    """Generate the hexagonal-layout scenario described by ``config``.

    One macro per site center; ``lpns_per_site`` LPNs and ``ues_per_site``
    UEs dropped uniformly inside each site's hexagon.  Gains combine
    COST-231-Hata path loss with i.i.d. log-normal shadowing per
    (cell, UE) link.  Deterministic given ``config.rng_seed``.
    """
    config.validate()
    rng = np.random.default_rng(config.rng_seed)
    isd = config.inter_site_distance_m
    hex_radius = isd / math.sqrt(3.0)
    centers = site_centers(config.num_macro_sites, isd)

    macro_pilot = (config.macro_pilot_mw if config.macro_pilot_mw is not None
                   else config.macro_power_limit_mw)
    lpn_pilot = (config.lpn_pilot_mw if config.lpn_pilot_mw is not None
                 else config.lpn_power_limit_mw)

    cells: list[Cell] = []
    for s, c in enumerate(centers):
        cells.append(Cell(
            id=s, kind=CellKind.MACRO, position=(float(c[0]), float(c[1])),
            antenna_height=config.macro_height_m,
            power_limit=config.macro_power_limit_mw, pilot_power=macro_pilot))
    next_id = len(centers)
    for c in centers:
        for _ in range(config.lpns_per_site):
            p = _uniform_in_hexagon(rng, c, hex_radius)
            cells.append(Cell(
                id=next_id, kind=CellKind.LPN,
                position=(float(p[0]), float(p[1])),
                antenna_height=config.lpn_height_m,
                power_limit=config.lpn_power_limit_mw, pilot_power=lpn_pilot))
            next_id += 1

    ues: list[UserEquipment] = []
    for c in centers:
        for _ in range(config.ues_per_site):
            p = _uniform_in_hexagon(rng, c, hex_radius)
            ues.append(UserEquipment(
                id=len(ues), position=(float(p[0]), float(p[1])),
                demand=config.demand_bps))

    n, j = len(cells), len(ues)
    gain = np.empty((n, j), dtype=np.float64)
    shadow = rng.normal(0.0, config.shadowing_stddev_db, size=(n, j))
    for i, cell in enumerate(cells):
        for u, ue in enumerate(ues):
            d = math.hypot(cell.position[0] - ue.position[0],
                           cell.position[1] - ue.position[1])
            pl = path_loss_db(d, config.carrier_frequency_mhz,
                              cell.antenna_height, config.ue_height_m)
            gain[i, u] = linear_gain(pl, shadow[i, u])

    noise = noise_per_resource_unit(config.noise_psd_dbm_per_hz,
                                    config.resource_bandwidth_hz)
    return Scenario(cells, ues, gain, noise, config.num_resource_units,
                    config.resource_bandwidth_hz)
