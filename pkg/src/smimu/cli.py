"""
Command-line entry point.

::

    smimu simulate --simulate car_turns --duration 300 --out data/car
    smimu run --mode smimu --simulate static --duration 60 --seed 7
    smimu run --config run.yaml --manifest data/car/manifest.yaml
    smimu compare --modes single_imu,gf_baseline,smimu --simulate script.yaml
    smimu compare --suite --duration 300
    smimu eval --run out
    smimu plot --run out

Settings come from an optional YAML config file, then CLI flags. The output
directory is taken from ``--out``, else ``$SMIMU_OUTPUT_DIR``, else the
config. Exit status: 0 on success, 2 for configuration or input errors, 3
for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import yaml

from .dataset import align_truth, read_truth_csv
from .evaluation import rmse, write_json, write_rmse_csv
from .exceptions import DatasetError, EmptyPairing, NumericalError, SmimuError
from .pipeline import (
    MODES,
    RunConfig,
    compare,
    load_solution,
    prepare_input,
    run,
    score,
    simulate_dataset,
)
from .scenarios import MIXED_SUITE

OUTPUT_ENV = "SMIMU_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("smimu")


def _add_run_options(p: argparse.ArgumentParser, with_mode: bool = True) -> None:
    p.add_argument("--config", type=Path, help="YAML run configuration")
    if with_mode:
        p.add_argument("--mode", choices=MODES)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--simulate", help="scenario name or YAML motion profile")
    src.add_argument("--manifest", help="dataset manifest (YAML)")
    p.add_argument("--duration", type=float)
    p.add_argument("--rate", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--array", choices=("cube", "octahedron", "planar"))
    p.add_argument("--radius", type=float, help="array radius [m]")
    p.add_argument("--sigma-f", type=float, help="accelerometer noise [m/s^2]")
    p.add_argument("--alpha-c", type=float, help="gate critical value")
    p.add_argument("--g-e", type=float, help="gravity magnitude [m/s^2]")
    p.add_argument("--accel-threshold", type=float, help="zero-acceleration threshold [m/s^2]")
    p.add_argument("--initial-p", type=float, help="initial attitude variance [rad^2]")
    p.add_argument("--name", help="trajectory label in reports")
    p.add_argument("--no-plots", action="store_true")
    p.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="any other config field; VALUE is parsed as YAML",
    )
    p.add_argument("--out", type=Path, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smimu", description="Gyro-free attitude estimation for symmetric IMU arrays."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a dataset (IMU CSVs, truth, manifest)")
    _add_run_options(p, with_mode=False)

    p = sub.add_parser("run", help="estimate attitude for one mode")
    _add_run_options(p)

    p = sub.add_parser("compare", help="run several modes on the same input")
    _add_run_options(p, with_mode=False)
    p.add_argument("--modes", default=",".join(MODES), help="comma-separated modes")
    p.add_argument("--suite", action="store_true", help="run the built-in mixed-dynamics suite")
    p.add_argument("--scenarios", help="comma-separated scenario names")
    p.add_argument("--baseline", default="gf_baseline", choices=MODES)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("eval", help="score a solution file against ground truth")
    p.add_argument("--run", type=Path, help="run directory (solution.csv + config.json)")
    p.add_argument("--solution", type=Path)
    p.add_argument("--truth", type=Path, help="truth CSV (t, roll, pitch, yaw)")
    p.add_argument("--mode", choices=MODES, default="")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("plot", help="draw the figures of a run directory")
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--out", type=Path)
    return parser


def _parse_set(items: list[str]) -> dict:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise SmimuError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.replace("-", "_")] = yaml.safe_load(value)
    return out


def _output_dir(args, cfg_value: str | None = None) -> str | None:
    if getattr(args, "out", None) is not None:
        return str(args.out)
    if os.environ.get(OUTPUT_ENV):
        return os.environ[OUTPUT_ENV]
    return cfg_value


def config_from_args(args) -> RunConfig:
    """Merge the config file (if any) with the CLI flags."""
    overrides = _parse_set(args.set)
    for key in ("mode", "simulate", "duration", "rate", "seed", "alpha_c", "g_e",
                "accel_threshold", "initial_p", "name"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if args.manifest is not None:
        overrides["manifest"] = str(Path(args.manifest).resolve())
    if args.no_plots:
        overrides["plots"] = False
    cfg = RunConfig.from_file(args.config, **overrides) if args.config else RunConfig.from_mapping(overrides)
    array = dict(cfg.array) if isinstance(cfg.array, dict) else {"type": cfg.array}
    if args.array is not None:
        array = {k: v for k, v in array.items() if k in ("radius", "sigma_f")}
        array["type"] = args.array
    if args.radius is not None:
        array["radius"] = args.radius
    if args.sigma_f is not None:
        array["sigma_f"] = args.sigma_f
    cfg = cfg.replace(array=array)
    out = _output_dir(args, cfg.output_dir)
    return cfg.replace(output_dir=out) if out else cfg


def _cmd_simulate(args) -> int:
    cfg = config_from_args(args)
    path = simulate_dataset(cfg)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = config_from_args(args)
    res = run(cfg)
    if res.rmse is not None:
        r = res.rmse
        print(f"{cfg.mode}: roll {r.roll:.4f} pitch {r.pitch:.4f} yaw {r.yaw:.4f} deg RMSE over {r.n} epochs")
    if res.detection is not None:
        print(f"rotation detection accuracy {res.detection.accuracy:.4f}")
    print(f"artifacts in {cfg.output_dir}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = config_from_args(args)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    if args.suite or args.scenarios:
        names = MIXED_SUITE if args.suite else [s.strip() for s in args.scenarios.split(",")]
        bases = [cfg.replace(simulate=n, manifest=None, name=n) for n in names]
    else:
        bases = [cfg]
    configs = [b.replace(mode=m) for b in bases for m in modes]
    table = compare(configs, cfg.output_dir, args.baseline, workers=args.workers)
    print(f"{'trajectory':16s} {'mode':12s} {'roll':>8s} {'pitch':>8s} {'yaw':>9s}  delta vs {table.baseline_mode}")
    for r in table.rows:
        delta = "" if r.delta_abs is None else f"{r.delta_abs:+.4f} ({r.delta_rel:+.1f}%)"
        print(f"{r.trajectory:16s} {r.label:12s} {r.roll:8.4f} {r.pitch:8.4f} {r.yaw:9.4f}  {delta}")
    print(f"comparison in {cfg.output_dir}")
    return EXIT_OK


def _load_run_config(run_dir: Path) -> RunConfig:
    path = run_dir / "config.json"
    if not path.is_file():
        raise DatasetError(f"no config.json in {run_dir}")
    with open(path) as fh:
        return RunConfig.from_mapping(json.load(fh))


def _cmd_eval(args) -> int:
    if args.run is not None:
        cfg = _load_run_config(args.run)
        res = load_solution(args.run / "solution.csv", cfg.mode)
        score(res, prepare_input(cfg), cfg.rotation_threshold)
        report, detection = res.rmse, res.detection
        out = Path(_output_dir(args) or args.run)
    elif args.solution is not None and args.truth is not None:
        res = load_solution(args.solution, args.mode)
        aligned = align_truth((res.t, res.euler_deg), read_truth_csv(args.truth))
        report, detection = rmse(aligned, label=args.mode), None
        out = Path(_output_dir(args) or args.solution.parent)
    else:
        raise SmimuError("eval needs --run DIR, or --solution and --truth")
    if report is None:
        raise EmptyPairing("the run has no ground truth")
    out.mkdir(parents=True, exist_ok=True)
    write_rmse_csv(out / "rmse.csv", [report])
    write_json(out / "rmse.json", report)
    print(f"roll {report.roll:.4f} pitch {report.pitch:.4f} yaw {report.yaw:.4f} deg RMSE over {report.n} epochs")
    if detection is not None:
        write_json(out / "detection.json", detection)
        print(f"rotation detection accuracy {detection.accuracy:.4f}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    from .plotting import plot_run

    cfg = _load_run_config(args.run)
    res = load_solution(args.run / "solution.csv", cfg.mode)
    res.input = prepare_input(cfg)
    out = Path(_output_dir(args) or args.run)
    out.mkdir(parents=True, exist_ok=True)
    for path in plot_run(res, out):
        print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "run": _cmd_run,
    "compare": _cmd_compare,
    "eval": _cmd_eval,
    "plot": _cmd_plot,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return _COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SmimuError, OSError, yaml.YAMLError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
