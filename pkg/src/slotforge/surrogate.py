"""Analytic forward model: slot geometry -> reflection-coefficient spectrum.

The antenna response is modelled as a superposition of Lorentzian notches,
one per resonant mode. Slot modes track the slot perimeter, cavity modes are
fixed by the cavity footprint, and the slot angle trades notch depth between
the two families. Every constant lives in this file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

C0 = 299_792_458.0  # m/s

FLOOR_DB = -40.0

SLOT_DEPTH_DB = 25.0
CAVITY_DEPTH_DB = 12.0
CAVITY_Q = 120.0
SLOT_HARMONICS = 5
CAVITY_ORDERS = (1, 2, 3)
FREQ_PULL = 0.02
# modes centred above stop + this margin contribute nothing useful
DISCARD_MARGIN_GHZ = 0.5


class GeometryError(ValueError):
    """Raised when a geometry or grid violates its invariants."""


@dataclass(frozen=True)
class FixedGeometry:
    length_mm: float = 140.0
    width_mm: float = 120.0
    face_thickness_mm: float = 2.5
    cavity_height_mm: float = 16.3
    s2_mm: float = 49.0
    sw2_mm: float = 6.0
    feed_inner_mm: float = 2.65
    feed_outer_mm: float = 9.91
    feed_eps_r: float = 2.5

    def __post_init__(self) -> None:
        for name, value in self.__dict__.items():
            if not (math.isfinite(value) and value > 0):
                raise GeometryError(f"{name} must be positive, got {value}")
        if self.feed_inner_mm >= self.feed_outer_mm:
            raise GeometryError("feed inner diameter must be below outer diameter")


@dataclass(frozen=True)
class SlotGeometry:
    s1_mm: float
    sw1_mm: float
    theta_deg: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.s1_mm, self.sw1_mm, self.theta_deg)):
            raise GeometryError(f"non-finite slot geometry {self}")
        if self.s1_mm <= 0 or self.sw1_mm <= 0:
            raise GeometryError(f"slot dimensions must be positive: {self}")
        if not 0.0 <= self.theta_deg <= 90.0:
            raise GeometryError(f"slot angle must lie in [0, 90] deg: {self}")
        # sw1 < s1 is deliberately not enforced: the dataset grid includes
        # short, wide slots (e.g. 25 mm x 45 mm at 10 deg)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.s1_mm, self.sw1_mm, self.theta_deg)


@dataclass(frozen=True)
class FrequencyGrid:
    start_ghz: float = 1.0
    stop_ghz: float = 8.0
    n_points: int = 1001

    def __post_init__(self) -> None:
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise GeometryError(f"n_points must be an integer >= 2, got {self.n_points}")
        if not self.start_ghz < self.stop_ghz:
            raise GeometryError("start_ghz must be below stop_ghz")

    @property
    def step_ghz(self) -> float:
        return (self.stop_ghz - self.start_ghz) / (self.n_points - 1)

    def frequencies(self) -> np.ndarray:
        i = np.arange(self.n_points, dtype=np.float64)
        return self.start_ghz + i * (self.stop_ghz - self.start_ghz) / (self.n_points - 1)

    def to_dict(self) -> dict:
        return {"start_ghz": self.start_ghz, "stop_ghz": self.stop_ghz, "n_points": self.n_points}

    @classmethod
    def from_dict(cls, d: dict) -> FrequencyGrid:
        return cls(float(d["start_ghz"]), float(d["stop_ghz"]), int(d["n_points"]))


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: FrequencyGrid
    s11_db: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.s11_db, dtype=np.float64)
        if s.shape != (self.grid.n_points,):
            raise GeometryError(
                f"spectrum has {s.size} points, grid expects {self.grid.n_points}"
            )
        if not np.all(np.isfinite(s)):
            raise GeometryError("spectrum contains non-finite values")
        if s.min() < FLOOR_DB or s.max() > 0.0:
            raise GeometryError("spectrum values must lie in [-40, 0] dB")
        object.__setattr__(self, "s11_db", s)

    @property
    def freqs_ghz(self) -> np.ndarray:
        return self.grid.frequencies()


@dataclass(frozen=True)
class Mode:
    kind: Literal["slot", "cavity"]
    center_ghz: float
    depth_db: float
    q: float

    @property
    def bandwidth_ghz(self) -> float:
        return self.center_ghz / self.q


def enumerate_modes(
    geom: SlotGeometry,
    fixed: FixedGeometry = FixedGeometry(),
    grid: FrequencyGrid = FrequencyGrid(),
) -> list[Mode]:
    """Slot modes (k = 1..5) followed by cavity modes in ascending frequency."""
    theta = math.radians(geom.theta_deg)
    sin2 = math.sin(theta) ** 2
    cos2 = math.cos(theta) ** 2
    cutoff = grid.stop_ghz + DISCARD_MARGIN_GHZ

    perimeter_m = 2.0 * (geom.s1_mm + geom.sw1_mm) * 1e-3
    f_slot = C0 / perimeter_m * (1.0 + FREQ_PULL * sin2) / 1e9
    slot_depth = SLOT_DEPTH_DB * (0.15 + 0.85 * cos2)
    slot_q = min(max(8.0 * geom.s1_mm / geom.sw1_mm, 5.0), 400.0)
    modes = [
        Mode("slot", k * f_slot, slot_depth, slot_q)
        for k in range(1, SLOT_HARMONICS + 1)
        if k * f_slot <= cutoff
    ]

    a_m = fixed.length_mm * 1e-3
    b_m = fixed.width_mm * 1e-3
    cavity_depth = CAVITY_DEPTH_DB * (0.15 + 0.85 * sin2)
    cavity = sorted(
        (C0 / 2.0 * math.sqrt((m / a_m) ** 2 + (n / b_m) ** 2) / 1e9, m, n)
        for m in CAVITY_ORDERS
        for n in CAVITY_ORDERS
    )
    modes.extend(
        Mode("cavity", f, cavity_depth, CAVITY_Q) for f, _, _ in cavity if f <= cutoff
    )
    return modes


def lorentzian_sum(freqs: np.ndarray, modes: list[Mode]) -> np.ndarray:
    total = np.zeros_like(freqs, dtype=np.float64)
    for mode in modes:
        u = 2.0 * (freqs - mode.center_ghz) / mode.bandwidth_ghz
        total += mode.depth_db / (1.0 + u * u)
    return total


def forward_spectrum(
    geom: SlotGeometry,
    fixed: FixedGeometry = FixedGeometry(),
    grid: FrequencyGrid = FrequencyGrid(),
) -> Spectrum:
    freqs = grid.frequencies()
    total = lorentzian_sum(freqs, enumerate_modes(geom, fixed, grid))
    return Spectrum(grid, np.maximum(FLOOR_DB, -total))


def vswr(spectrum: Spectrum) -> np.ndarray:
    """Per-point VSWR; a 0 dB point maps to ``inf``."""
    gamma = 10.0 ** (spectrum.s11_db / 20.0)
    with np.errstate(divide="ignore"):
        out = (1.0 + gamma) / (1.0 - gamma)
    out[gamma >= 1.0] = np.inf
    return out


def slot_feasible(
    geom: SlotGeometry, fixed: FixedGeometry = FixedGeometry(), margin_mm: float = 5.0
) -> bool:
    """Whether the rotated slot's bounding box fits the radiating face with margin."""
    theta = math.radians(geom.theta_deg)
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    along_length = geom.s1_mm * c + geom.sw1_mm * s
    along_width = geom.s1_mm * s + geom.sw1_mm * c
    return (
        along_length <= fixed.length_mm - 2.0 * margin_mm
        and along_width <= fixed.width_mm - 2.0 * margin_mm
    )
