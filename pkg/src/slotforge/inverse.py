"""Resonance targets -> ideal spectrum -> predicted geometry -> re-simulated check."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pipeline import TrainedPipeline, predict_dims
from .surrogate import (
    FLOOR_DB,
    FixedGeometry,
    FrequencyGrid,
    SlotGeometry,
    Spectrum,
    forward_spectrum,
)

TARGET_DEPTH_DB = 25.0
BANDWIDTH_LEVEL_DB = -10.0
MATCH_TOL_GHZ = 0.1


class TargetError(ValueError):
    """Invalid or mutually inconsistent resonance targets."""


@dataclass(frozen=True)
class ResonanceTarget:
    center_ghz: float
    upper_ghz: float
    lower_ghz: float

    def __post_init__(self) -> None:
        if not self.lower_ghz < self.center_ghz < self.upper_ghz:
            raise TargetError(
                f"target needs lower < center < upper, got lower={self.lower_ghz}, "
                f"center={self.center_ghz}, upper={self.upper_ghz}"
            )

    @property
    def bandwidth_ghz(self) -> float:
        return self.upper_ghz - self.lower_ghz

    @property
    def half_width_ghz(self) -> float:
        return 0.5 * self.bandwidth_ghz


@dataclass(frozen=True)
class Resonance:
    center_ghz: float
    depth_db: float
    bw10_ghz: float
    lower_ghz: float
    upper_ghz: float
    index: int


def validate_targets(targets: list[ResonanceTarget], grid: FrequencyGrid) -> None:
    if not targets:
        raise TargetError("at least one resonance target is required")
    for t in targets:
        if t.lower_ghz < grid.start_ghz or t.upper_ghz > grid.stop_ghz:
            raise TargetError(f"target {t} extends beyond the {grid.start_ghz}-{grid.stop_ghz} GHz grid")
    ordered = sorted(targets, key=lambda t: t.center_ghz)
    for a, b in zip(ordered, ordered[1:]):
        if a.upper_ghz >= b.lower_ghz:
            raise TargetError(f"-10 dB intervals of {a} and {b} overlap")


def synth_target_spectrum(targets: list[ResonanceTarget], grid: FrequencyGrid = FrequencyGrid()) -> Spectrum:
    """Sum of 25 dB Lorentzian notches crossing -10 dB at each target's band edges.

    Asymmetric targets use their mean half-width.
    """
    validate_targets(targets, grid)
    freqs = grid.frequencies()
    shape = math.sqrt(TARGET_DEPTH_DB / -BANDWIDTH_LEVEL_DB - 1.0)
    total = np.zeros_like(freqs)
    for t in targets:
        gamma = t.half_width_ghz / shape
        u = (freqs - t.center_ghz) / gamma
        total += TARGET_DEPTH_DB / (1.0 + u * u)
    return Spectrum(grid, np.maximum(FLOOR_DB, -total))


def _crossing(f, s, a: int, b: int, level: float) -> float:
    """Frequency between grid points a and b where s crosses ``level``."""
    if s[b] == s[a]:
        return f[a]
    t = (level - s[a]) / (s[b] - s[a])
    return f[a] + t * (f[b] - f[a])


def find_resonances(spectrum: Spectrum, threshold_db: float = BANDWIDTH_LEVEL_DB) -> list[Resonance]:
    """Local minima below ``threshold_db``, ascending in frequency.

    A run of equal values counts once, at its lowest index. Minima touching
    either end of the grid are ignored.
    """
    s = spectrum.s11_db
    f = spectrum.freqs_ghz
    n = s.size
    step = spectrum.grid.step_ghz
    found = []
    i = 1
    while i < n - 1:
        j = i
        while j + 1 < n and s[j + 1] == s[i]:
            j += 1
        if j < n - 1 and s[i] < threshold_db and s[i - 1] > s[i] and s[j + 1] > s[i]:
            denom = s[i - 1] - 2.0 * s[i] + s[i + 1]
            offset = 0.0 if denom == 0.0 else 0.5 * (s[i - 1] - s[i + 1]) / denom
            center = f[i] + offset * step

            lo = i
            while lo > 0 and s[lo] < threshold_db:
                lo -= 1
            lower = _crossing(f, s, lo, lo + 1, threshold_db) if s[lo] >= threshold_db else f[0]
            hi = j
            while hi < n - 1 and s[hi] < threshold_db:
                hi += 1
            upper = _crossing(f, s, hi - 1, hi, threshold_db) if s[hi] >= threshold_db else f[-1]
            found.append(Resonance(float(center), float(s[i]), float(upper - lower), float(lower), float(upper), i))
        i = j + 1
    return found


@dataclass
class TargetMatch:
    target: ResonanceTarget
    nearest: Resonance | None
    center_delta_ghz: float | None
    bandwidth_delta_ghz: float | None
    matched: bool


@dataclass
class RoundtripReport:
    targets: list[ResonanceTarget]
    target_spectrum: Spectrum
    predicted_raw: np.ndarray
    predicted_rounded: np.ndarray
    achieved_spectrum: Spectrum
    achieved_resonances: list[Resonance]
    matches: list[TargetMatch]

    def to_dict(self) -> dict:
        def res(r: Resonance | None):
            if r is None:
                return None
            return {
                "center_ghz": r.center_ghz,
                "depth_db": r.depth_db,
                "bw10_ghz": r.bw10_ghz,
                "lower_ghz": r.lower_ghz,
                "upper_ghz": r.upper_ghz,
            }

        return {
            "predicted": {
                "raw": dict(zip(("s1_mm", "sw1_mm", "theta_deg"), map(float, self.predicted_raw))),
                "rounded": dict(zip(("s1_mm", "sw1_mm", "theta_deg"), map(int, self.predicted_rounded))),
            },
            "achieved_resonances": [res(r) for r in self.achieved_resonances],
            "targets": [
                {
                    "center_ghz": m.target.center_ghz,
                    "upper_ghz": m.target.upper_ghz,
                    "lower_ghz": m.target.lower_ghz,
                    "bandwidth_ghz": m.target.bandwidth_ghz,
                    "nearest": res(m.nearest),
                    "center_delta_ghz": m.center_delta_ghz,
                    "bandwidth_delta_ghz": m.bandwidth_delta_ghz,
                    "matched": m.matched,
                }
                for m in self.matches
            ],
            "n_matched": sum(m.matched for m in self.matches),
        }


def match_targets(targets: list[ResonanceTarget], achieved: list[Resonance]) -> list[TargetMatch]:
    out = []
    for t in targets:
        if not achieved:
            out.append(TargetMatch(t, None, None, None, False))
            continue
        best = min(achieved, key=lambda r: abs(r.center_ghz - t.center_ghz))
        dc = best.center_ghz - t.center_ghz
        out.append(TargetMatch(t, best, dc, best.bw10_ghz - t.bandwidth_ghz, abs(dc) <= MATCH_TOL_GHZ))
    return out


def roundtrip(
    pipeline: TrainedPipeline,
    targets: list[ResonanceTarget],
    fixed: FixedGeometry = FixedGeometry(),
) -> RoundtripReport:
    target_spec = synth_target_spectrum(targets, pipeline.grid)
    raw, rounded = predict_dims(pipeline, target_spec)
    geom = SlotGeometry(*(float(v) for v in rounded))
    achieved = forward_spectrum(geom, fixed, pipeline.grid)
    resonances = find_resonances(achieved)
    return RoundtripReport(
        targets, target_spec, raw, rounded, achieved, resonances, match_targets(targets, resonances)
    )


def read_targets_csv(path: str | Path) -> list[ResonanceTarget]:
    """Parse ``center_ghz,upper_ghz,lower_ghz`` rows; ``#`` starts a comment.

    Every bad row is reported in a single TargetError.
    """
    targets, problems = [], []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        lines = [(n, ln.split("#", 1)[0].strip()) for n, ln in enumerate(fh, 1)]
    rows = [(n, ln) for n, ln in lines if ln]
    if rows and rows[0][1].replace(" ", "").lower() == "center_ghz,upper_ghz,lower_ghz":
        rows = rows[1:]
    for lineno, text in rows:
        cells = next(csv.reader([text]))
        try:
            if len(cells) != 3:
                raise TargetError(f"expected 3 columns, got {len(cells)}")
            targets.append(ResonanceTarget(*(float(c) for c in cells)))
        except (TargetError, ValueError) as exc:
            problems.append(f"line {lineno}: {exc}")
    if problems:
        raise TargetError("invalid target rows:\n  " + "\n  ".join(problems))
    if not targets:
        raise TargetError(f"{path}: no target rows")
    return targets
