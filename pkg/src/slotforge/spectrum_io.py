"""Spectrum files: two-column CSV and magnitude-only Touchstone v1 ``.s1p``."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .surrogate import FrequencyGrid, Spectrum

CSV_HEADER = ("freq_ghz", "s11_db")
TOUCHSTONE_OPTION = "# GHz S DB R 50"

# 9 significant digits on a GHz axis
GRID_MATCH_TOL_GHZ = 1e-6


class SpectrumFileError(ValueError):
    """File does not follow the spectrum schema."""


class GridMismatch(ValueError):
    """File frequencies do not coincide with the expected grid."""


def write_spectrum_csv(spectrum: Spectrum, path: str | Path) -> Path:
    return write_columns_csv(spectrum.freqs_ghz, spectrum.s11_db, path)


def write_columns_csv(freqs, values, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for f, v in zip(freqs, values):
            w.writerow([f"{f:.9g}", f"{v:.9g}"])
    return path


def write_touchstone(spectrum: Spectrum, path: str | Path) -> Path:
    path = Path(path)
    lines = ["! S11 magnitude in dB; phase not modelled", TOUCHSTONE_OPTION]
    lines += [f"{f:.9g} {v:.9g} 0.0" for f, v in zip(spectrum.freqs_ghz, spectrum.s11_db)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_spectrum_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise SpectrumFileError(f"{path}: expected header 'freq_ghz,s11_db'")
        try:
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
        except (ValueError, IndexError) as exc:
            raise SpectrumFileError(f"{path}: malformed row ({exc})") from None
    if not rows:
        raise SpectrumFileError(f"{path}: no data rows")
    data = np.array(rows)
    return data[:, 0], data[:, 1]


_FREQ_SCALE_TO_GHZ = {"hz": 1e-9, "khz": 1e-6, "mhz": 1e-3, "ghz": 1.0}


def read_touchstone(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a one-port Touchstone file in DB format, returning (GHz, dB)."""
    path = Path(path)
    scale = None
    freqs, mags = [], []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            opts = line[1:].lower().split()
            unit = next((o for o in opts if o in _FREQ_SCALE_TO_GHZ), "ghz")
            if "s" not in opts or "db" not in opts:
                raise SpectrumFileError(f"{path}:{lineno}: only 'S DB' one-port data is supported")
            scale = _FREQ_SCALE_TO_GHZ[unit]
            continue
        if scale is None:
            raise SpectrumFileError(f"{path}:{lineno}: data before option line")
        tokens = line.split()
        if len(tokens) != 3:
            raise SpectrumFileError(f"{path}:{lineno}: expected 3 columns, got {len(tokens)}")
        try:
            freqs.append(float(tokens[0]) * scale)
            mags.append(float(tokens[1]))
        except ValueError:
            raise SpectrumFileError(f"{path}:{lineno}: non-numeric value") from None
    if not freqs:
        raise SpectrumFileError(f"{path}: no data rows")
    return np.array(freqs), np.array(mags)


def read_spectrum_file(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Dispatch on extension: ``.s1p`` is Touchstone, anything else CSV."""
    path = Path(path)
    if path.suffix.lower() == ".s1p":
        return read_touchstone(path)
    return read_spectrum_csv(path)


def on_grid(freqs: np.ndarray, values: np.ndarray, grid: FrequencyGrid) -> Spectrum:
    """Wrap file columns as a Spectrum after checking they sit on ``grid``."""
    if freqs.shape[0] != grid.n_points:
        raise GridMismatch(f"file has {freqs.shape[0]} points, grid expects {grid.n_points}")
    if np.max(np.abs(freqs - grid.frequencies())) > GRID_MATCH_TOL_GHZ:
        raise GridMismatch(
            f"file frequencies do not match the {grid.start_ghz}-{grid.stop_ghz} GHz grid"
        )
    return Spectrum(grid, values)


def load_spectrum(path: str | Path, grid: FrequencyGrid) -> Spectrum:
    freqs, values = read_spectrum_file(path)
    return on_grid(freqs, values, grid)
