"""slotforge command line: generate, train, evaluate, predict, synth, roundtrip, export-touchstone.

Exit codes: 0 success, 2 I/O failure, 3 schema mismatch, 4 shape/grid mismatch,
5 validation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .datagen import (
    DatasetError,
    GridRow,
    GridSpec,
    default_grid,
    generate_dataset,
    read_dataset_csv,
    row_count_report,
    train_test_split,
    write_dataset_binary,
    write_dataset_csv,
)
from .inverse import TargetError, read_targets_csv, roundtrip, synth_target_spectrum
from .lasso import LassoConfig
from .pipeline import (
    GridMismatchError,
    ModelFormatError,
    PipelineError,
    evaluate,
    load_pipeline,
    predict_dims,
    save_pipeline,
    train,
    write_eval_report,
)
from .plot import write_line_chart
from .preprocess import PreprocessError
from .spectrum_io import (
    GridMismatch,
    SpectrumFileError,
    load_spectrum,
    write_columns_csv,
    write_spectrum_csv,
    write_touchstone,
)
from .surrogate import (
    FixedGeometry,
    FrequencyGrid,
    GeometryError,
    SlotGeometry,
    Spectrum,
    forward_spectrum,
)

EXIT_OK, EXIT_IO, EXIT_SCHEMA, EXIT_GRID, EXIT_VALIDATION = 0, 2, 3, 4, 5

log = logging.getLogger("slotforge")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    start_ghz: float = 1.0
    stop_ghz: float = 8.0
    n_points: int = 1001
    rows: list[str] = field(default_factory=list)  # empty -> default parameter grid
    coarsen: int = 1
    apply_feasibility: bool = False
    feasibility_margin_mm: float = 5.0
    seed: int = 42
    test_fraction: float = 0.2
    pca_d: int = 150
    alpha: float = 0.01
    tol: float = 1e-6
    max_iter: int = 10_000
    out_dir: str = "."

    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.start_ghz, self.stop_ghz, self.n_points)

    def grid_spec(self) -> GridSpec:
        if self.rows:
            spec = GridSpec(tuple(GridRow.parse(r) for r in self.rows))
        else:
            spec = default_grid()
        if self.coarsen != 1:
            spec = spec.coarsened(self.coarsen)
        return GridSpec(spec.rows, self.apply_feasibility, self.feasibility_margin_mm)

    def lasso(self) -> LassoConfig:
        return LassoConfig(alpha=self.alpha, tol=self.tol, max_iter=self.max_iter)

    def validate(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise CliError(f"test_fraction must lie in (0, 1), got {self.test_fraction}", EXIT_VALIDATION)
        if self.pca_d < 0:
            raise CliError(f"pca_d must be >= 0, got {self.pca_d}", EXIT_VALIDATION)
        if self.coarsen < 1:
            raise CliError(f"coarsen must be >= 1, got {self.coarsen}", EXIT_VALIDATION)
        if not 0 <= self.seed < 2**64:
            raise CliError(f"seed must be an unsigned 64-bit integer, got {self.seed}", EXIT_VALIDATION)


_CONFIG_FIELDS = {f.name for f in fields(RunConfig)}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults < config file < SLOTFORGE_SEED < command-line flags."""
    values: dict[str, Any] = {}
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise CliError(f"cannot read config {args.config}: {exc}", EXIT_IO) from None
        except json.JSONDecodeError as exc:
            raise CliError(f"config {args.config} is not valid JSON: {exc}", EXIT_SCHEMA) from None
        if not isinstance(loaded, dict):
            raise CliError("config file must hold a JSON object", EXIT_SCHEMA)
        unknown = set(loaded) - _CONFIG_FIELDS
        if unknown:
            raise CliError(f"unknown config fields: {sorted(unknown)}", EXIT_SCHEMA)
        values.update(loaded)
    env_seed = os.environ.get("SLOTFORGE_SEED")
    if env_seed is not None:
        try:
            values["seed"] = int(env_seed, 0)
        except ValueError:
            raise CliError(f"SLOTFORGE_SEED is not an integer: {env_seed!r}", EXIT_VALIDATION) from None
    for name in _CONFIG_FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise CliError(f"bad configuration: {exc}", EXIT_SCHEMA) from None
    cfg.validate()
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.out_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {path}: {exc}", EXIT_IO) from None
    return path


# --- commands --------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    spec = cfg.grid_spec()
    out = _out_dir(cfg)
    table = generate_dataset(spec, cfg.grid())
    for entry in row_count_report(spec):
        ref = "" if entry["reference"] is None else f" (reference {entry['reference']})"
        log.info("theta=%3d deg: %d samples%s", entry["theta_deg"], entry["generated"], ref)
    path = write_dataset_csv(table, out / args.name)
    if args.binary:
        write_dataset_binary(table, path.with_suffix(".bin"))
    print(f"{len(table)} samples -> {path}")
    return EXIT_OK


def _load_dataset(path: str, grid: FrequencyGrid | None = None):
    try:
        return read_dataset_csv(path, grid)
    except OSError as exc:
        raise CliError(f"cannot read dataset {path}: {exc}", EXIT_IO) from None
    except DatasetError as exc:
        raise CliError(str(exc), EXIT_SCHEMA) from None


def _load_model(path: str):
    try:
        return load_pipeline(path)
    except OSError as exc:
        raise CliError(f"cannot read model {path}: {exc}", EXIT_IO) from None
    except ModelFormatError as exc:
        raise CliError(str(exc), EXIT_SCHEMA) from None


def _headline(name: str, report) -> str:
    r2 = "n/a" if report.r2_uniform_mean is None else f"{report.r2_uniform_mean:.4f}"
    return f"{name}: R2={r2} MSE={report.mse_overall:.4f} (n={report.n_samples})"


def cmd_train(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    data = _load_dataset(args.dataset)
    out = _out_dir(cfg)
    train_set, test_set = train_test_split(data, cfg.test_fraction, cfg.seed)
    pca_d = min(cfg.pca_d, len(train_set) - 2)
    if pca_d != cfg.pca_d:
        log.info("pca_d reduced from %d to %d for %d training rows", cfg.pca_d, pca_d, len(train_set))
    try:
        pipe = train(train_set, cfg.lasso(), pca_d)
    except (PipelineError, PreprocessError) as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None
    if not all(pipe.model.converged):
        log.warning("lasso did not converge for every target: sweeps=%s", pipe.model.sweeps_used)
    save_pipeline(pipe, out / "model.slotforge.json")
    for name, part in (("train", train_set), ("test", test_set)):
        report = evaluate(pipe, part)
        write_eval_report(report, out / f"{name}_report.csv", out / f"{name}_report.json")
        print(_headline(name, report))
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    pipe = _load_model(args.model)
    data = _load_dataset(args.dataset)
    try:
        report = evaluate(pipe, data)
    except GridMismatchError as exc:
        raise CliError(str(exc), EXIT_GRID) from None
    cfg = resolve_config(args)
    out = _out_dir(cfg)
    write_eval_report(report, out / f"{args.name}.csv", out / f"{args.name}.json")
    print(_headline(args.name, report))
    return EXIT_OK


def _load_spectrum(path: str, grid: FrequencyGrid):
    try:
        return load_spectrum(path, grid)
    except OSError as exc:
        raise CliError(f"cannot read spectrum {path}: {exc}", EXIT_IO) from None
    except SpectrumFileError as exc:
        raise CliError(str(exc), EXIT_SCHEMA) from None
    except GridMismatch as exc:
        raise CliError(str(exc), EXIT_GRID) from None
    except GeometryError as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None


def cmd_predict(args: argparse.Namespace) -> int:
    pipe = _load_model(args.model)
    spectrum = _load_spectrum(args.spectrum, pipe.grid)
    raw, rounded = predict_dims(pipe, spectrum)
    names = ("s1_mm", "sw1_mm", "theta_deg")
    payload = {
        "raw": dict(zip(names, map(float, raw))),
        "rounded": dict(zip(names, map(int, rounded))),
    }
    print("raw:     S1=%.3f mm  Sw1=%.3f mm  theta=%.3f deg" % tuple(raw))
    print("rounded: S1=%d mm  Sw1=%d mm  theta=%d deg" % tuple(rounded))
    if args.out:
        try:
            Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc}", EXIT_IO) from None
    return EXIT_OK


def _read_targets(path: str):
    try:
        return read_targets_csv(path)
    except OSError as exc:
        raise CliError(f"cannot read targets {path}: {exc}", EXIT_IO) from None
    except TargetError as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    targets = _read_targets(args.targets)
    try:
        spectrum = synth_target_spectrum(targets, cfg.grid())
    except TargetError as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None
    out = Path(args.out)
    if out.suffix.lower() == ".s1p":
        write_touchstone(spectrum, out)
    else:
        write_spectrum_csv(spectrum, out)
    print(f"{len(targets)} target(s) -> {out}")
    return EXIT_OK


def cmd_roundtrip(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    pipe = _load_model(args.model)
    targets = _read_targets(args.targets)
    try:
        report = roundtrip(pipe, targets, FixedGeometry())
    except TargetError as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None
    out = _out_dir(cfg)
    (out / "roundtrip.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    freqs = report.target_spectrum.freqs_ghz
    write_columns_csv(freqs, report.target_spectrum.s11_db, out / "target_spectrum.csv")
    write_columns_csv(freqs, report.achieved_spectrum.s11_db, out / "achieved_spectrum.csv")
    write_line_chart(
        out / "roundtrip.svg",
        freqs,
        [("target", report.target_spectrum.s11_db), ("achieved", report.achieved_spectrum.s11_db)],
        title="Target vs re-simulated reflection coefficient",
    )
    d = report.to_dict()
    print("predicted (rounded): S1=%d mm  Sw1=%d mm  theta=%d deg" % tuple(report.predicted_rounded))
    for t in d["targets"]:
        delta = "none" if t["center_delta_ghz"] is None else f"{t['center_delta_ghz']:+.4f} GHz"
        print(f"  target {t['center_ghz']:.4f} GHz: nearest delta {delta} matched={t['matched']}")
    print(f"{d['n_matched']}/{len(targets)} targets matched")
    return EXIT_OK


def cmd_export_touchstone(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    if args.dataset is not None:
        data = _load_dataset(args.dataset)
        hits = [i for i, rid in enumerate(data.row_ids) if rid == args.row_id]
        if not hits:
            raise CliError(f"row_id {args.row_id} not in {args.dataset}", EXIT_VALIDATION)
        spectrum = Spectrum(data.grid, data.features[hits[0]])
    else:
        try:
            geom = SlotGeometry(*args.geometry)
        except GeometryError as exc:
            raise CliError(str(exc), EXIT_VALIDATION) from None
        spectrum = forward_spectrum(geom, FixedGeometry(), cfg.grid())
    out = Path(args.out)
    if out.suffix.lower() == ".csv":
        write_spectrum_csv(spectrum, out)
    else:
        write_touchstone(spectrum, out)
    print(f"spectrum -> {out}")
    return EXIT_OK


# --- parser ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors are validation failures
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration; flags override its fields")
    p.add_argument("--out-dir", dest="out_dir", help="output directory (default: .)")


def _add_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--start-ghz", dest="start_ghz", type=float, help="grid start (default 1.0)")
    p.add_argument("--stop-ghz", dest="stop_ghz", type=float, help="grid stop (default 8.0)")
    p.add_argument("--n-points", dest="n_points", type=int, help="grid points (default 1001)")


def _add_training(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="split seed (default 42; env SLOTFORGE_SEED)")
    p.add_argument("--test-fraction", dest="test_fraction", type=float, help="test share (default 0.2)")
    p.add_argument("--pca-d", dest="pca_d", type=int, help="PCA components (default 150)")
    p.add_argument("--alpha", type=float, help="Lasso penalty (default 0.01)")
    p.add_argument("--tol", type=float, help="max weight change per sweep to stop (default 1e-6)")
    p.add_argument("--max-iter", dest="max_iter", type=int, help="max coordinate sweeps (default 10000)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slotforge", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="enumerate the parameter grid and write a dataset CSV")
    _add_common(p)
    _add_grid(p)
    p.add_argument(
        "--rows",
        action="append",
        metavar="T:S1MIN:S1MAX:S1STEP:SW1MIN:SW1MAX:SW1STEP",
        help="grid row override (repeatable); default is the full ten-angle table",
    )
    p.add_argument("--coarsen", type=int, help="multiply every step size by this factor (default 1)")
    p.add_argument("--apply-feasibility", dest="apply_feasibility", action="store_const", const=True,
                   help="drop slots that do not fit the face (default off)")
    p.add_argument("--feasibility-margin-mm", dest="feasibility_margin_mm", type=float,
                   help="edge margin for --apply-feasibility (default 5.0)")
    p.add_argument("--name", default="dataset.csv", help="dataset file name (default dataset.csv)")
    p.add_argument("--binary", action="store_true", help="also write a float64 .bin cache")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="split, train and evaluate; writes model.slotforge.json")
    _add_common(p)
    _add_training(p)
    p.add_argument("--dataset", required=True, help="dataset CSV from 'generate'")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a model on a dataset")
    _add_common(p)
    p.add_argument("--model", required=True, help="model file from 'train'")
    p.add_argument("--dataset", required=True, help="dataset CSV to score")
    p.add_argument("--name", default="eval_report", help="report file stem (default eval_report)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="predict slot dimensions from a spectrum (.csv or .s1p)")
    p.add_argument("--model", required=True, help="model file from 'train'")
    p.add_argument("--spectrum", required=True, help="freq_ghz,s11_db CSV or one-port .s1p on the model grid")
    p.add_argument("--out", help="write the prediction as JSON here (default: print only)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="write an idealized spectrum for resonance targets")
    _add_common(p)
    _add_grid(p)
    p.add_argument("--targets", required=True, help="CSV center_ghz,upper_ghz,lower_ghz")
    p.add_argument("--out", required=True, help="output .csv or .s1p")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("roundtrip", help="targets -> prediction -> re-simulation report")
    _add_common(p)
    p.add_argument("--model", required=True, help="model file from 'train'")
    p.add_argument("--targets", required=True, help="CSV center_ghz,upper_ghz,lower_ghz")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("export-touchstone", help="export a dataset row or a geometry as .s1p (or .csv)")
    _add_common(p)
    _add_grid(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", help="dataset CSV; pick the row with --row-id")
    src.add_argument("--geometry", nargs=3, type=float, metavar=("S1", "SW1", "THETA"),
                     help="simulate this slot geometry")
    p.add_argument("--row-id", dest="row_id", type=int, default=0, help="dataset row id (default 0)")
    p.add_argument("--out", required=True, help="output .s1p (or .csv)")
    p.set_defaults(func=cmd_export_touchstone)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except CliError as exc:
        print(f"slotforge: {exc}", file=sys.stderr)
        return exc.code
    except (DatasetError, GeometryError, TargetError) as exc:
        print(f"slotforge: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"slotforge: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
