"""Command-line front end.

Subcommands: gen-data, train, infer, baseline, sweep, bench-runtime.
Every flag may also be given in a TOML file passed with ``--config``
(keys are flag names with dashes or underscores; a table named after the
subcommand overrides top-level keys). Command-line flags override the file.

Exit status: 0 on success, 1 on usage or configuration errors, 2 on
runtime failures such as I/O errors or training divergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import baselines, experiments, neural, training
from .config import ConfigError, Scene, SystemConfig

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("majam")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _add_system(p):
    g = p.add_argument_group("system")
    g.add_argument("--elements", type=int, default=8, help="number of antenna elements N")
    g.add_argument("--jammers", type=int, default=3, help="number of jammers K")
    g.add_argument("--region", type=float, default=7.0, help="region size L in wavelengths")
    g.add_argument("--min-spacing", type=float, default=0.5, help="d_min in wavelengths")
    g.add_argument("--noise", type=float, default=0.1, help="noise power")


def _add_training(p, preset="paper"):
    g = p.add_argument_group("training")
    g.add_argument("--preset", choices=["paper", "desk"], default=preset,
                   help="paper: SGD lr 1e-3, angle features; desk: Adam 1e-3, relative features")
    g.add_argument("--dataset-size", type=int, default=None)
    g.add_argument("--batch", type=int, default=None)
    g.add_argument("--lr", type=float, default=None)
    g.add_argument("--epochs", type=int, default=None)
    g.add_argument("--featurization", choices=[f.value for f in training.Featurization],
                   default=None)
    g.add_argument("--optimizer", choices=["sgd", "adam"], default=None)
    g.add_argument("--momentum", type=float, default=None)
    g.add_argument("--lr-schedule", choices=["constant", "cosine"], default=None)
    g.add_argument("--hidden", type=int, default=None)
    g.add_argument("--depth", type=int, default=None)
    g.add_argument("--clip-norm", type=float, default=None)
    g.add_argument("--eval-size", type=int, default=None)
    g.add_argument("--fixed-source-angle", type=float, default=None)


def _add_ao(p):
    g = p.add_argument_group("alternating optimization")
    g.add_argument("--grid-points", type=int, default=200)
    g.add_argument("--max-sweeps", type=int, default=50)
    g.add_argument("--tolerance", type=float, default=1e-6)


def build_parser():
    parser = _Parser(prog="majam", description="Movable-antenna anti-jamming simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", type=Path, help="TOML file with flag defaults")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("gen-data", help="write a CSV of random scenes")
    common(p)
    p.add_argument("--jammers", type=int, default=3)
    p.add_argument("--size", type=int, default=100_000)
    p.add_argument("--fixed-source-angle", type=float, default=None)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("train", help="train the positioning network")
    common(p)
    _add_system(p)
    _add_training(p)
    p.add_argument("--data", type=Path, help="scene CSV (default: generate from --seed)")
    p.add_argument("--out", type=Path, required=True, help="model JSON path")
    p.add_argument("--history", type=Path, help="history CSV (default: <out>.history.csv)")

    p = sub.add_parser("infer", help="layouts and SINR from a trained model")
    common(p)
    _add_system(p)
    p.add_argument("--model", type=Path, required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scene", type=_float_list, help="comma-separated angles, source first")
    src.add_argument("--data", type=Path, help="scene CSV")
    p.add_argument("--out", type=Path, help="results CSV (default: stdout)")

    p = sub.add_parser("baseline", help="run AO, FPV or RPB on a scene file")
    common(p)
    _add_system(p)
    _add_ao(p)
    p.add_argument("--scheme", choices=["ao", "fpv", "rpb"], required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scene", type=_float_list)
    src.add_argument("--data", type=Path)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("sweep", help="SINR versus N, L or K for every scheme")
    common(p)
    _add_system(p)
    _add_training(p, preset="desk")
    _add_ao(p)
    p.add_argument("--variable", choices=[v.value for v in experiments.SweepVariable],
                   required=True)
    p.add_argument("--values", type=_float_list, default=None)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--schemes", default=",".join(experiments.SCHEMES))
    p.add_argument("--model", type=Path, help="use this model instead of retraining per point")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("bench-runtime", help="per-scene runtime of each scheme")
    common(p)
    _add_system(p)
    _add_ao(p)
    p.add_argument("--elements-list", type=_int_list, default=[8])
    p.add_argument("--jammers-list", type=_int_list, default=[1, 2, 3, 4, 5, 6])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--schemes", default=",".join(experiments.SCHEMES))
    p.add_argument("--model", type=Path)
    p.add_argument("--out", type=Path, required=True)
    return parser


def _config_defaults(path: Path, command: str) -> dict:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"{path}: {exc}") from None
    flat = {k: v for k, v in doc.items() if not isinstance(v, dict)}
    flat.update(doc.get(command, {}))
    return {k.replace("-", "_"): v for k, v in flat.items()}


def _subparsers(parser):
    return parser._subparsers._group_actions[0].choices


def parse_args(argv=None):
    parser = build_parser()
    # First pass with required flags relaxed: a config file may supply them.
    relaxed = []
    for sub in _subparsers(parser).values():
        for item in [*sub._actions, *sub._mutually_exclusive_groups]:
            if item.required:
                relaxed.append(item)
                item.required = False
    args = parser.parse_args(argv)
    for item in relaxed:
        item.required = True
    if args.config is None:
        return parser.parse_args(argv)
    try:
        defaults = _config_defaults(args.config, args.command)
    except UsageError as exc:
        parser.exit(1, f"majam: error: {exc}\n")
    sub = _subparsers(parser)[args.command]
    actions = {a.dest: a for a in sub._actions}
    unknown = sorted(set(defaults) - set(actions))
    if unknown:
        parser.exit(1, f"majam: error: unknown config keys {unknown}\n")
    converted = {}
    for key, value in defaults.items():
        action = actions[key]
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        if isinstance(value, str) and action.type is not None:
            try:
                value = action.type(value)
            except (TypeError, ValueError) as exc:
                parser.exit(1, f"majam: error: config key {key}: {exc}\n")
        converted[key] = value
    # file values become defaults, so explicit flags still win
    for action in sub._actions:
        if action.dest in converted:
            action.required = False
    for group in sub._mutually_exclusive_groups:
        if any(a.dest in converted for a in group._group_actions):
            group.required = False
    sub.set_defaults(**converted)
    return parser.parse_args(argv)


def _system(args, **changes) -> SystemConfig:
    values = dict(
        num_elements=args.elements,
        num_jammers=args.jammers,
        region_size=args.region,
        min_spacing=args.min_spacing,
        noise_power=args.noise,
    )
    values.update(changes)
    return SystemConfig(**values)


_TRAIN_FLAGS = {
    "dataset_size": "dataset_size",
    "batch": "batch_size",
    "lr": "learning_rate",
    "epochs": "epochs",
    "featurization": "featurization",
    "optimizer": "optimizer",
    "momentum": "momentum",
    "lr_schedule": "lr_schedule",
    "hidden": "hidden",
    "depth": "depth",
    "clip_norm": "clip_norm",
    "eval_size": "eval_size",
    "fixed_source_angle": "fixed_source_angle",
}


def _train_overrides(args) -> dict:
    return {
        field: getattr(args, flag)
        for flag, field in _TRAIN_FLAGS.items()
        if getattr(args, flag) is not None
    }


def _train_config(args, system) -> training.TrainConfig:
    overrides = _train_overrides(args)
    if args.preset == "desk":
        return training.TrainConfig.desk(system=system, seed=args.seed, **overrides)
    return training.TrainConfig(system=system, seed=args.seed, **overrides)


def _scenes(args) -> np.ndarray:
    if args.scene is not None:
        return training.scenes_to_angles([Scene.from_angles(args.scene)])
    return training.read_scenes_csv(args.data)


def _write_table(rows, fields, out):
    if out is None:
        import csv

        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([experiments._fmt(r[f]) for f in fields])
    else:
        experiments.write_rows(rows, fields, out)


def cmd_gen_data(args):
    if args.size < 0:
        raise ConfigError("--size must be >= 0")
    if args.jammers < 0:
        raise ConfigError("--jammers must be >= 0")
    rng = np.random.default_rng([args.seed, 1])
    angles = training.sample_angles(args.size, args.jammers, rng, args.fixed_source_angle)
    training.write_scenes_csv(angles, args.out)
    log.info("wrote %d scenes to %s", args.size, args.out)


def cmd_train(args):
    angles = None
    if args.data is not None:
        angles = training.read_scenes_csv(args.data)
        args.jammers = angles.shape[1] - 1
        if args.dataset_size is None:
            args.dataset_size = len(angles)
    system = _system(args)
    cfg = _train_config(args, system)
    if angles is not None:
        angles = angles[: cfg.dataset_size]
    history_path = args.history or args.out.with_name(args.out.name + ".history.csv")
    try:
        params, history = training.train(cfg, angles)
    except training.TrainingError as exc:
        if exc.history is not None:
            exc.history.write_csv(history_path)
            print(f"partial history written to {history_path}", file=sys.stderr)
        raise
    neural.save_model(params, args.out)
    history.write_csv(history_path)
    _, eta = training.infer_batch(params, training.heldout_angles(cfg), system)
    print(f"held-out mean SINR: {np.mean(10 * np.log10(eta)):.4f} dB "
          f"({len(eta)} scenes, linear mean {eta.mean():.4f})")


def _model_system(args, params, num_jammers):
    meta = params.meta
    return _system(
        args,
        num_elements=params.output_dim + 1,
        num_jammers=num_jammers,
        region_size=meta.get("region_size", args.region),
        min_spacing=meta.get("min_spacing", args.min_spacing),
        noise_power=meta.get("noise_power", args.noise),
    )


def cmd_infer(args):
    params = neural.load_model(args.model)
    angles = _scenes(args)
    system = _model_system(args, params, angles.shape[1] - 1)
    rows = []
    for i, row in enumerate(angles):
        layout, _, eta = training.infer(params, Scene.from_angles(row), system)
        rows.append({"scene": i, "sinr": eta, "sinr_db": 10 * np.log10(eta),
                     "positions": " ".join(repr(float(x)) for x in layout)})
    _write_table(rows, ["scene", "sinr", "sinr_db", "positions"], args.out)


def cmd_baseline(args):
    angles = _scenes(args)
    system = _system(args, num_jammers=angles.shape[1] - 1)
    ao_cfg = baselines.AoConfig(args.grid_points, args.max_sweeps, args.tolerance)
    rows = []
    for i, row in enumerate(angles):
        scene = Scene.from_angles(row)
        if args.scheme == "ao":
            layout, _, eta, _, _ = baselines.ao(scene, system, ao_cfg)
        elif args.scheme == "fpv":
            layout, _, eta = baselines.fpv(scene, system)
        else:
            layout, _, eta = baselines.rpb(scene, system, np.random.default_rng([args.seed, 13, i]))
        rows.append({"scene": i, "sinr": eta, "sinr_db": 10 * np.log10(eta),
                     "positions": " ".join(repr(float(x)) for x in layout)})
    _write_table(rows, ["scene", "sinr", "sinr_db", "positions"], args.out)


def _schemes(text):
    schemes = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = set(schemes) - set(experiments.SCHEMES)
    if bad:
        raise ConfigError(f"unknown schemes {sorted(bad)}")
    return schemes


def cmd_sweep(args):
    variable = experiments.SweepVariable(args.variable)
    values = args.values or experiments.DEFAULT_VALUES[variable]
    if variable is not experiments.SweepVariable.REGION_SIZE:
        values = [int(v) for v in values]
    overrides = _train_overrides(args)
    if args.preset == "paper":
        base = training.TrainConfig()
        overrides = {
            "featurization": base.featurization, "optimizer": base.optimizer,
            "learning_rate": base.learning_rate, **overrides,
        }
    spec = experiments.SweepSpec(
        variable=variable,
        values=values,
        trials=args.trials,
        schemes=_schemes(args.schemes),
        seed=args.seed,
        system=_system(args),
        ao_config=baselines.AoConfig(args.grid_points, args.max_sweeps, args.tolerance),
        train_overrides=overrides,
        model=neural.load_model(args.model) if args.model else None,
    )
    rows = experiments.run_sweep(spec, progress=lambda r: log.info("%s", r))
    experiments.write_rows(rows, experiments.SWEEP_FIELDS, args.out)


def cmd_bench_runtime(args):
    rows = experiments.benchmark_runtime(
        elements=args.elements_list,
        jammers=args.jammers_list,
        trials=args.trials,
        seed=args.seed,
        system=_system(args),
        model=neural.load_model(args.model) if args.model else None,
        ao_config=baselines.AoConfig(args.grid_points, args.max_sweeps, args.tolerance),
        schemes=_schemes(args.schemes),
    )
    experiments.write_rows(rows, experiments.BENCH_FIELDS, args.out)


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "infer": cmd_infer,
    "baseline": cmd_baseline,
    "sweep": cmd_sweep,
    "bench-runtime": cmd_bench_runtime,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        COMMANDS[args.command](args)
    except (ConfigError, neural.ModelFormatError, ValueError) as exc:
        print(f"majam {args.command}: error: {exc}", file=sys.stderr)
        return 1 if isinstance(exc, ConfigError) else 2
    except (OSError, training.TrainingError, np.linalg.LinAlgError) as exc:
        print(f"majam {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
