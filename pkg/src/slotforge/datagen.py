"""Parameter-grid enumeration, dataset assembly/persistence and the seeded split."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .surrogate import (
    FixedGeometry,
    FrequencyGrid,
    SlotGeometry,
    forward_spectrum,
    slot_feasible,
)

log = logging.getLogger(__name__)

TARGET_COLUMNS = ("s1_mm", "sw1_mm", "theta_deg")
MASK64 = (1 << 64) - 1


class DatasetError(ValueError):
    """Dataset content or file schema is invalid."""


@dataclass(frozen=True)
class GridRow:
    theta_deg: int
    s1_min_mm: int
    s1_max_mm: int
    s1_step_mm: int
    sw1_min_mm: int
    sw1_max_mm: int
    sw1_step_mm: int

    def __post_init__(self) -> None:
        if self.s1_min_mm > self.s1_max_mm or self.sw1_min_mm > self.sw1_max_mm:
            raise DatasetError(f"grid row has min > max: {self}")
        if self.s1_step_mm < 1 or self.sw1_step_mm < 1:
            raise DatasetError(f"grid row steps must be >= 1: {self}")

    def s1_values(self) -> range:
        return range(self.s1_min_mm, self.s1_max_mm + 1, self.s1_step_mm)

    def sw1_values(self) -> range:
        return range(self.sw1_min_mm, self.sw1_max_mm + 1, self.sw1_step_mm)

    @property
    def size(self) -> int:
        return len(self.s1_values()) * len(self.sw1_values())

    def coarsened(self, factor: int) -> GridRow:
        return replace(
            self,
            s1_step_mm=self.s1_step_mm * factor,
            sw1_step_mm=self.sw1_step_mm * factor,
        )

    def to_list(self) -> list[int]:
        return [
            self.theta_deg,
            self.s1_min_mm,
            self.s1_max_mm,
            self.s1_step_mm,
            self.sw1_min_mm,
            self.sw1_max_mm,
            self.sw1_step_mm,
        ]

    @classmethod
    def parse(cls, text: str) -> GridRow:
        """Parse ``theta:s1min:s1max:s1step:sw1min:sw1max:sw1step``."""
        parts = text.split(":")
        if len(parts) != 7:
            raise DatasetError(f"grid row needs 7 colon-separated integers, got {text!r}")
        try:
            return cls(*(int(p) for p in parts))
        except ValueError as exc:
            raise DatasetError(f"bad grid row {text!r}: {exc}") from None


@dataclass(frozen=True)
class GridSpec:
    rows: tuple[GridRow, ...]
    apply_feasibility: bool = False
    feasibility_margin_mm: float = 5.0

    def __post_init__(self) -> None:
        if not self.rows:
            raise DatasetError("grid spec needs at least one row")
        thetas = [r.theta_deg for r in self.rows]
        if len(set(thetas)) != len(thetas):
            raise DatasetError(f"grid rows must have distinct angles, got {thetas}")

    def coarsened(self, factor: int = 2) -> GridSpec:
        return replace(self, rows=tuple(r.coarsened(factor) for r in self.rows))

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_list() for r in self.rows],
            "apply_feasibility": self.apply_feasibility,
            "feasibility_margin_mm": self.feasibility_margin_mm,
        }

    @classmethod
    def from_dict(cls, d: dict) -> GridSpec:
        return cls(
            rows=tuple(GridRow(*map(int, r)) for r in d["rows"]),
            apply_feasibility=bool(d.get("apply_feasibility", False)),
            feasibility_margin_mm=float(d.get("feasibility_margin_mm", 5.0)),
        )


# (theta, S1 min/max/step, Sw1 min/max/step, reference sample count)
DEFAULT_ROWS = (
    (0, 30, 130, 3, 5, 30, 2, 476),
    (10, 25, 125, 3, 5, 45, 3, 476),
    (20, 25, 120, 3, 5, 37, 3, 396),
    (30, 25, 120, 3, 5, 35, 3, 363),
    (40, 25, 110, 3, 5, 33, 3, 290),
    (50, 25, 110, 3, 5, 30, 3, 261),
    (60, 25, 100, 3, 5, 33, 3, 260),
    (70, 25, 100, 3, 5, 35, 3, 286),
    (80, 25, 100, 3, 5, 60, 3, 494),
    (90, 30, 130, 3, 5, 30, 2, 476),
)
REFERENCE_COUNTS = {row[:7]: row[7] for row in DEFAULT_ROWS}


def default_grid() -> GridSpec:
    return GridSpec(rows=tuple(GridRow(*row[:7]) for row in DEFAULT_ROWS))


def enumerate_geometries(
    spec: GridSpec, fixed: FixedGeometry = FixedGeometry()
) -> list[SlotGeometry]:
    """Row by row, S1-major then Sw1, over inclusive arithmetic progressions."""
    out = []
    for row in spec.rows:
        for s1 in row.s1_values():
            for sw1 in row.sw1_values():
                geom = SlotGeometry(float(s1), float(sw1), float(row.theta_deg))
                if spec.apply_feasibility and not slot_feasible(
                    geom, fixed, spec.feasibility_margin_mm
                ):
                    continue
                out.append(geom)
    return out


def row_count_report(spec: GridSpec, fixed: FixedGeometry = FixedGeometry()) -> list[dict]:
    """Generated sample count per row, next to the reference count for unmodified default rows."""
    report = []
    for row in spec.rows:
        n = len(enumerate_geometries(replace(spec, rows=(row,)), fixed))
        report.append(
            {
                "theta_deg": row.theta_deg,
                "generated": n,
                "reference": REFERENCE_COUNTS.get(tuple(row.to_list())),
            }
        )
    return report


@dataclass
class DatasetTable:
    grid: FrequencyGrid
    features: np.ndarray  # (n, n_points), dB
    targets: np.ndarray  # (n, 3): S1 mm, Sw1 mm, theta deg
    row_ids: np.ndarray  # (n,) int64
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        self.row_ids = np.asarray(self.row_ids, dtype=np.int64)
        n = self.row_ids.shape[0]
        if self.features.shape != (n, self.grid.n_points):
            raise DatasetError(
                f"features shape {self.features.shape} does not match "
                f"{n} rows x {self.grid.n_points} grid points"
            )
        if self.targets.shape != (n, 3):
            raise DatasetError(f"targets shape {self.targets.shape}, expected ({n}, 3)")

    def __len__(self) -> int:
        return self.row_ids.shape[0]

    def subset(self, idx) -> DatasetTable:
        idx = np.asarray(idx, dtype=np.int64)
        return DatasetTable(
            self.grid, self.features[idx], self.targets[idx], self.row_ids[idx], dict(self.meta)
        )


def generate_dataset(
    spec: GridSpec,
    grid: FrequencyGrid = FrequencyGrid(),
    fixed: FixedGeometry = FixedGeometry(),
) -> DatasetTable:
    geoms = enumerate_geometries(spec, fixed)
    if not geoms:
        raise DatasetError("grid spec enumerates no geometries")
    features = np.empty((len(geoms), grid.n_points))
    for i, g in enumerate(geoms):
        features[i] = forward_spectrum(g, fixed, grid).s11_db
    targets = np.array([g.as_tuple() for g in geoms], dtype=np.float64)
    for entry in row_count_report(spec, fixed):
        if entry["reference"] is not None and entry["reference"] != entry["generated"]:
            log.info(
                "theta=%d: generated %d samples, reference count %d",
                entry["theta_deg"],
                entry["generated"],
                entry["reference"],
            )
    meta = {"spec": spec.to_dict(), "generator_version": __version__}
    return DatasetTable(grid, features, targets, np.arange(len(geoms)), meta)


# --- split -----------------------------------------------------------------


def splitmix64(state: int) -> tuple[int, int]:
    """One step of splitmix64: returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def shuffled_indices(n: int, seed: int) -> list[int]:
    perm = list(range(n))
    state = seed & MASK64
    for i in range(n - 1, 0, -1):
        state, z = splitmix64(state)
        j = z % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def test_size(n: int, test_fraction: float) -> int:
    # guard against e.g. 0.7 * 10 = 7.000000000000001
    return math.ceil(round(n * test_fraction, 9))


def split_indices(n: int, test_fraction: float = 0.2, seed: int = 42) -> tuple[np.ndarray, np.ndarray]:
    """Positions of the train and test rows, each in ascending order."""
    if not 0.0 < test_fraction < 1.0:
        raise DatasetError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if n < 2:
        raise DatasetError(f"need at least 2 rows to split, got {n}")
    perm = shuffled_indices(n, seed)
    k = test_size(n, test_fraction)
    train, test = sorted(perm[: n - k]), sorted(perm[n - k :])
    return np.array(train, dtype=np.int64), np.array(test, dtype=np.int64)


def train_test_split(
    table: DatasetTable, test_fraction: float = 0.2, seed: int = 42
) -> tuple[DatasetTable, DatasetTable]:
    train, test = split_indices(len(table), test_fraction, seed)
    return table.subset(train), table.subset(test)


# --- persistence -----------------------------------------------------------


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def feature_columns(n_points: int) -> list[str]:
    width = max(4, len(str(n_points)))
    return [f"f_{i:0{width}d}" for i in range(1, n_points + 1)]


def _fmt_target(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def write_dataset_csv(table: DatasetTable, path: str | Path) -> Path:
    """Write the dataset CSV plus its JSON sidecar (``<name>.json``)."""
    path = Path(path)
    header = ["row_id", *TARGET_COLUMNS, *feature_columns(table.grid.n_points)]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for rid, tgt, feat in zip(table.row_ids, table.targets, table.features):
            w.writerow([int(rid), *(_fmt_target(v) for v in tgt), *(f"{v:.6f}" for v in feat)])
    sidecar = {
        "grid": table.grid.to_dict(),
        "spec": table.meta.get("spec"),
        "generator_version": table.meta.get("generator_version", __version__),
        "n_samples": len(table),
    }
    _sidecar_path(path).write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
    return path


def read_dataset_csv(path: str | Path, grid: FrequencyGrid | None = None) -> DatasetTable:
    """Read a dataset CSV; the grid comes from the sidecar unless given."""
    path = Path(path)
    meta: dict = {}
    sidecar = _sidecar_path(path)
    if grid is None:
        if sidecar.exists():
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
            grid = FrequencyGrid.from_dict(meta["grid"])
        else:
            grid = FrequencyGrid()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        expected = ["row_id", *TARGET_COLUMNS, *feature_columns(grid.n_points)]
        if header != expected:
            raise DatasetError(
                f"{path}: header does not match the dataset schema for {grid.n_points} points"
            )
        rows = list(reader)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    try:
        data = np.array(rows, dtype=np.float64)
    except ValueError as exc:
        raise DatasetError(f"{path}: malformed row ({exc})") from None
    if data.shape[1] != len(expected):
        raise DatasetError(f"{path}: ragged rows")
    table_meta = {k: meta[k] for k in ("spec", "generator_version") if k in meta}
    return DatasetTable(grid, data[:, 4:], data[:, 1:4], data[:, 0].astype(np.int64), table_meta)


def write_dataset_binary(table: DatasetTable, path: str | Path) -> Path:
    """Little-endian float64 cache ``[row_id, targets..., features...]`` per row."""
    path = Path(path)
    block = np.column_stack([table.row_ids.astype(np.float64), table.targets, table.features])
    block.astype("<f8").tofile(path)
    sidecar = {
        "grid": table.grid.to_dict(),
        "spec": table.meta.get("spec"),
        "generator_version": table.meta.get("generator_version", __version__),
        "n_samples": len(table),
        "n_columns": block.shape[1],
    }
    _sidecar_path(path).write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
    return path


def read_dataset_binary(path: str | Path) -> DatasetTable:
    path = Path(path)
    meta = json.loads(_sidecar_path(path).read_text(encoding="utf-8"))
    grid = FrequencyGrid.from_dict(meta["grid"])
    block = np.fromfile(path, dtype="<f8").reshape(meta["n_samples"], meta["n_columns"])
    return DatasetTable(
        grid,
        block[:, 4:],
        block[:, 1:4],
        block[:, 0].astype(np.int64),
        {k: meta[k] for k in ("spec", "generator_version") if k in meta},
    )
