"""Cell selection with biased pilot measurements.

UEs associate to the cell with the strongest received pilot power in dBm,
where each low-power node (LPN) adds a configurable bias ("range offset")
in dB to its own measurement.  Macros never carry an offset.  An offset
of -inf mutes the LPN: it is excluded from the candidate set entirely.
Ties go to the lowest cell id, so association is deterministic.

Offsets live on a shared discrete level set (strictly increasing dB
values, possibly starting at -inf); an :class:`OffsetVector` stores one
level index per LPN.  The JSON form writes -inf as ``null``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scenario import Scenario

# 0..10 dB in 1 dB steps; the usual search space for the offset optimizer.
DEFAULT_LEVELS = tuple(float(v) for v in range(11))


@dataclass(frozen=True)
class OffsetVector:
    """Per-LPN range offsets as indices into a shared level set.

    ``levels`` must be strictly increasing; ``-inf`` is allowed only as
    the first level and means "LPN switched off".  ``indices[k]`` is the
    level of the k-th LPN in scenario order.
    """

    levels: tuple[float, ...]
    indices: tuple[int, ...]

    def __post_init__(self):
        if not self.levels:
            raise ValueError("levels must be non-empty")
        for a, b in zip(self.levels, self.levels[1:]):
            if not a < b:
                raise ValueError("levels must be strictly increasing")
        if any(math.isinf(v) and v > 0 for v in self.levels):
            raise ValueError("+inf is not a valid offset level")
        for idx in self.indices:
            if not 0 <= idx < len(self.levels):
                raise ValueError(f"level index {idx} out of range")

    @property
    def num_lpns(self) -> int:
        return len(self.indices)

    @property
    def values(self) -> tuple[float, ...]:
        """Offsets in dB, one per LPN."""
        return tuple(self.levels[i] for i in self.indices)

    def with_index(self, pos: int, idx: int) -> "OffsetVector":
        new = list(self.indices)
        new[pos] = idx
        return OffsetVector(self.levels, tuple(new))

    def to_dict(self) -> dict:
        return {
            "levels": [None if math.isinf(v) else v for v in self.levels],
            "indices": list(self.indices),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OffsetVector":
        levels = tuple(-math.inf if v is None else float(v)
                       for v in d["levels"])
        return cls(levels, tuple(int(i) for i in d["indices"]))

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def from_json(cls, path) -> "OffsetVector":
        return cls.from_dict(json.loads(Path(path).read_text()))


def all_zero(levels: tuple[float, ...], num_lpns: int) -> OffsetVector:
    """Every LPN at 0 dB, i.e. plain strongest-pilot association.

    If the level set has no exact 0.0 entry the lowest level is used
    instead.
    """
    try:
        idx = levels.index(0.0)
    except ValueError:
        idx = 0
    return OffsetVector(tuple(levels), (idx,) * num_lpns)


def all_max(levels: tuple[float, ...], num_lpns: int) -> OffsetVector:
    """Every LPN at the largest available offset."""
    return OffsetVector(tuple(levels), (len(levels) - 1,) * num_lpns)


def associate(scenario: Scenario, offsets: OffsetVector | None = None,
              lpn_enabled: bool = True) -> np.ndarray:
    """Serving cell per UE under biased strongest-pilot selection.

    Returns an int64 array ``serving`` with ``serving[j]`` the id of the
    cell serving UE j.  ``offsets`` may be None for unbiased selection
    (all LPNs at 0 dB).  With ``lpn_enabled=False`` only macros compete,
    regardless of offsets.
    """
    lpn_ids = scenario.lpn_ids
    if offsets is not None and offsets.num_lpns != len(lpn_ids):
        raise ValueError(
            f"offset vector has {offsets.num_lpns} entries for "
            f"{len(lpn_ids)} LPNs")

    pilots = np.array([c.pilot_power for c in scenario.cells])
    with np.errstate(divide="ignore"):
        rx_dbm = 10.0 * np.log10(pilots[:, None] * scenario.gain)
    if lpn_ids:
        if not lpn_enabled:
            rx_dbm[lpn_ids, :] = -np.inf
        elif offsets is not None:
            rx_dbm[lpn_ids, :] += np.array(offsets.values)[:, None]

    # argmax keeps the first maximum, which is the lowest cell id on ties
    serving = np.argmax(rx_dbm, axis=0).astype(np.int64)
    best = rx_dbm[serving, np.arange(scenario.num_ues)]
    if np.any(np.isneginf(best)):
        j = int(np.flatnonzero(np.isneginf(best))[0])
        raise ValueError(
            f"ue {j}: no enabled cell with positive received pilot")
    return serving


def served_by(serving: np.ndarray, num_cells: int) -> list[np.ndarray]:
    """UE ids served by each cell, in ascending order per cell."""
    return [np.flatnonzero(serving == i) for i in range(num_cells)]


def active_cells(serving: np.ndarray, num_cells: int) -> list[int]:
    """Cells that serve at least one UE."""
    present = np.unique(serving)
    return [int(i) for i in present if 0 <= i < num_cells]
