"""Paired-scene sweeps and runtime benchmarks over the four schemes."""

from __future__ import annotations

import csv
import enum
import gc
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines, neural, training
from .config import ConfigError, Scene, SystemConfig

SCHEMES = ("learned", "ao", "fpv", "rpb")


class SweepVariable(str, enum.Enum):
    NUM_ELEMENTS = "num-elements"
    REGION_SIZE = "region-size"
    NUM_JAMMERS = "num-jammers"


DEFAULT_VALUES = {
    SweepVariable.NUM_ELEMENTS: [4, 6, 8, 10, 12],
    SweepVariable.REGION_SIZE: [3.5, 5.0, 7.0, 10.0, 14.0],
    SweepVariable.NUM_JAMMERS: [1, 2, 3, 4, 5, 6],
}

SWEEP_FIELDS = ["variable_value", "scheme", "mean_sinr_db", "std_sinr_db", "mean_runtime_ms"]
BENCH_FIELDS = ["scheme", "N", "K", "mean_ms", "p95_ms"]


@dataclass
class SweepSpec:
    variable: SweepVariable
    values: list = field(default_factory=list)
    trials: int = 200
    schemes: tuple = SCHEMES
    seed: int = 0
    system: SystemConfig = field(default_factory=SystemConfig)
    ao_config: baselines.AoConfig = field(default_factory=baselines.AoConfig)
    train_overrides: dict = field(default_factory=dict)
    model: neural.MlpParams | None = None

    def __post_init__(self):
        self.variable = SweepVariable(self.variable)
        if not self.values:
            self.values = list(DEFAULT_VALUES[self.variable])
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ConfigError(f"unknown schemes {sorted(unknown)}")

    def system_at(self, value) -> SystemConfig:
        if self.variable is SweepVariable.NUM_ELEMENTS:
            return replace(self.system, num_elements=int(value))
        if self.variable is SweepVariable.REGION_SIZE:
            return replace(self.system, region_size=float(value))
        return replace(self.system, num_jammers=int(value))


@dataclass
class SchemeResult:
    sinr: np.ndarray  # linear, one per scene
    runtime_ms: np.ndarray

    @property
    def sinr_db(self):
        return 10.0 * np.log10(self.sinr)


def sweep_angles(spec: SweepSpec) -> np.ndarray:
    """Master scene list shared by every point and scheme of a sweep.

    For a jammer-count sweep each point uses the first ``K`` jammer columns,
    so the scenes are nested across points.
    """
    k = spec.system.num_jammers
    if spec.variable is SweepVariable.NUM_JAMMERS:
        k = max(int(v) for v in spec.values)
    rng = np.random.default_rng([spec.seed, 11])
    return training.sample_angles(spec.trials, k, rng)


def _timed(fn, *args):
    # like timeit: keep the collector from landing inside a sub-millisecond call
    enabled = gc.isenabled()
    gc.disable()
    try:
        t0 = time.perf_counter()
        out = fn(*args)
        elapsed = time.perf_counter() - t0
    finally:
        if enabled:
            gc.enable()
    return out, elapsed * 1e3


def run_scheme(scheme, angles, system, *, model=None, ao_config=None, seed=0) -> SchemeResult:
    """Evaluate one scheme scene by scene, timing each scene.

    For the learned scheme an untimed warm-up call precedes the loop so
    that first-call costs do not land on scene 0.
    """
    if scheme == "learned" and len(angles):
        training.infer(model, Scene.from_angles(angles[0]), system)
    sinr, ms = [], []
    for i, row in enumerate(angles):
        scene = Scene.from_angles(row)
        if scheme == "learned":
            (_, _, eta), t = _timed(training.infer, model, scene, system)
        elif scheme == "ao":
            res, t = _timed(baselines.ao, scene, system, ao_config)
            eta = res.sinr
        elif scheme == "fpv":
            (_, _, eta), t = _timed(baselines.fpv, scene, system)
        elif scheme == "rpb":
            # per-scene stream: the same random strategy across sweep points
            rng = np.random.default_rng([seed, 13, i])
            (_, _, eta), t = _timed(baselines.rpb, scene, system, rng)
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        sinr.append(eta)
        ms.append(t)
    return SchemeResult(np.array(sinr), np.array(ms))


def train_for(system: SystemConfig, seed: int, **overrides):
    cfg = training.TrainConfig.desk(system=system, seed=seed, **overrides)
    params, _ = training.train(cfg)
    return params


def run_sweep(spec: SweepSpec, progress=None) -> list[dict]:
    """One row per (value, scheme); schemes infeasible at a point get empty fields."""
    master = sweep_angles(spec)
    rows = []
    for value in spec.values:
        system = spec.system_at(value)
        angles = master[:, : system.num_jammers + 1]
        model = None
        if "learned" in spec.schemes:
            model = spec.model
            if model is not None:
                training.check_compatible(
                    model, system, system.num_jammers, training.model_featurization(model)
                )
            else:
                model = train_for(system, spec.seed, **spec.train_overrides)
        for scheme in spec.schemes:
            row = {"variable_value": value, "scheme": scheme}
            if scheme == "fpv" and not baselines.fpv_feasible(system):
                row.update(mean_sinr_db="", std_sinr_db="", mean_runtime_ms="", mean_sinr="")
            else:
                res = run_scheme(
                    scheme, angles, system, model=model, ao_config=spec.ao_config,
                    seed=spec.seed,
                )
                db = res.sinr_db
                row.update(
                    mean_sinr_db=float(db.mean()),
                    std_sinr_db=float(db.std()),
                    mean_runtime_ms=float(res.runtime_ms.mean()),
                    mean_sinr=float(res.sinr.mean()),  # linear; not part of the CSV
                )
            rows.append(row)
            if progress:
                progress(row)
    return rows


def _time_scene(scheme, scene, system, net, ao_config, rng, repeats) -> float:
    """Wall-clock milliseconds for one scene (FPV/RPB: ``repeats`` runs)."""
    if scheme == "learned":
        return _timed(training.infer, net, scene, system)[1]
    if scheme == "ao":
        return _timed(baselines.ao, scene, system, ao_config)[1]
    fn = baselines.fpv if scheme == "fpv" else baselines.rpb
    args = (scene, system) if scheme == "fpv" else (scene, system, rng)

    def run():
        for _ in range(repeats):
            fn(*args)

    return _timed(run)[1]


def benchmark_runtime(
    elements=(8,), jammers=(1, 2, 3, 4, 5, 6), trials=100, seed=0, system=None,
    model=None, ao_config=None, schemes=SCHEMES, repeats=100,
) -> list[dict]:
    """Per-scene wall-clock times; FPV and RPB are timed over ``repeats`` runs.

    For the learned scheme, ``model`` is used where its dimensions fit;
    elsewhere an untrained network of the same architecture stands in, since
    inference cost does not depend on the weights.

    Scenes are nested across K (one master list per N, first K jammers), as
    in the jammer sweep. Measurements are interleaved: the scene loop is
    outermost, so slow phases of the machine spread over every (scheme, K)
    cell instead of biasing whichever cell happened to run at that moment.
    """
    base = system or SystemConfig()
    rows = []
    for n in elements:
        rng = np.random.default_rng([seed, 17, n])
        master = training.sample_angles(trials, max(int(k) for k in jammers), rng)
        systems, nets = {}, {}
        for k in jammers:
            sys_nk = replace(base, num_elements=int(n), num_jammers=int(k))
            systems[k] = sys_nk
            net = model
            mode = training.Featurization.RELATIVE
            if net is not None:
                mode = training.model_featurization(net)
                try:
                    training.check_compatible(net, sys_nk, k, mode)
                except ConfigError:
                    net = None
            if net is None:
                cfg = training.TrainConfig.desk(system=sys_nk, seed=seed, featurization=mode)
                net = training.build_network(cfg)
            nets[k] = net
        cells = [
            (scheme, k) for k in jammers for scheme in schemes
            if not (scheme == "fpv" and not baselines.fpv_feasible(systems[k]))
        ]
        times = {cell: [] for cell in cells}
        if trials and "learned" in schemes:
            for k in jammers:  # untimed warm-up
                training.infer(nets[k], Scene.from_angles(master[0, : int(k) + 1]), systems[k])
        for i, row in enumerate(master):
            for scheme, k in cells:
                scene = Scene.from_angles(row[: int(k) + 1])
                rng_i = np.random.default_rng([seed, 13, i])
                times[scheme, k].append(_time_scene(
                    scheme, scene, systems[k], nets[k], ao_config, rng_i, repeats))
        for scheme, k in cells:
            t = np.array(times[scheme, k])
            rows.append({
                "scheme": scheme,
                "N": n,
                "K": k,
                "mean_ms": float(t.mean()),
                "p95_ms": float(np.percentile(t, 95)),
            })
    return rows


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows(rows, fields, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([_fmt(row[f]) for f in fields])


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
