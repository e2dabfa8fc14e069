import numpy as np
import pytest

from majam import SystemConfig
from majam.baselines import AoConfig
from majam.config import ConfigError
from majam.experiments import (
    BENCH_FIELDS,
    SWEEP_FIELDS,
    SweepSpec,
    benchmark_runtime,
    read_rows,
    run_sweep,
    sweep_angles,
    write_rows,
)

FAST_AO = AoConfig(grid_points=20, max_sweeps=3)
TINY_TRAIN = {"dataset_size": 200, "batch_size": 50, "epochs": 1}


def _spec(**kw):
    base = dict(trials=4, ao_config=FAST_AO, train_overrides=TINY_TRAIN)
    base.update(kw)
    return SweepSpec(**base)


def test_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec("num-elements", trials=0)
    with pytest.raises(ConfigError):
        SweepSpec("num-elements", schemes=("learned", "magic"))
    with pytest.raises(ValueError):
        SweepSpec("wavelength")
    assert SweepSpec("num-jammers").values == [1, 2, 3, 4, 5, 6]


def test_element_sweep_has_one_row_per_value_and_scheme():
    rows = run_sweep(_spec(variable="num-elements"))
    assert len(rows) == 20
    assert {(r["variable_value"], r["scheme"]) for r in rows} == {
        (n, s) for n in (4, 6, 8, 10, 12) for s in ("learned", "ao", "fpv", "rpb")
    }
    fpv = {r["variable_value"]: r["mean_sinr_db"] for r in rows if r["scheme"] == "fpv"}
    # 2*d_min spacing fits in 7 wavelengths only up to 8 elements
    assert all(isinstance(fpv[n], float) for n in (4, 6, 8))
    assert fpv[10] == "" and fpv[12] == ""


def test_region_sweep_fixed_array_presence():
    rows = run_sweep(_spec(variable="region-size", schemes=("fpv",)))
    present = {r["variable_value"]: r["mean_sinr_db"] != "" for r in rows}
    assert present == {3.5: False, 5.0: False, 7.0: True, 10.0: True, 14.0: True}


def test_jammer_sweep_scenes_are_nested():
    spec = _spec(variable="num-jammers")
    master = sweep_angles(spec)
    assert master.shape == (4, 7)
    rows = run_sweep(_spec(variable="num-jammers", schemes=("fpv", "rpb")))
    for scheme in ("fpv", "rpb"):
        means = [r["mean_sinr_db"] for r in rows if r["scheme"] == scheme]
        assert all(a >= b for a, b in zip(means, means[1:]))


def test_sweep_is_reproducible():
    spec = dict(variable="num-elements", values=[4, 6], schemes=("learned", "ao", "rpb"))
    a = run_sweep(_spec(**spec))
    b = run_sweep(_spec(**spec))
    strip = lambda rows: [{k: v for k, v in r.items() if k != "mean_runtime_ms"} for r in rows]
    assert strip(a) == strip(b)


def test_incompatible_model_is_rejected():
    from majam.training import TrainConfig, build_network

    model = build_network(TrainConfig(system=SystemConfig(num_elements=6)))
    with pytest.raises(ConfigError):
        run_sweep(_spec(variable="num-elements", values=[8], model=model))


def test_benchmark_rows(tmp_path):
    rows = benchmark_runtime(elements=(8, 10), jammers=(1, 2), trials=3, repeats=2,
                             ao_config=FAST_AO)
    schemes = [(r["scheme"], r["N"], r["K"]) for r in rows]
    assert ("fpv", 10, 1) not in schemes
    assert ("learned", 10, 2) in schemes and ("ao", 8, 1) in schemes
    assert all(r["p95_ms"] >= 0 and r["mean_ms"] > 0 for r in rows)
    write_rows(rows, BENCH_FIELDS, tmp_path / "b.csv")
    back = read_rows(tmp_path / "b.csv")
    assert list(back[0]) == BENCH_FIELDS and len(back) == len(rows)


def test_csv_round_trip_keeps_full_precision(tmp_path):
    rows = [{"variable_value": 4, "scheme": "ao", "mean_sinr_db": 1 / 3,
             "std_sinr_db": np.float64(0.1), "mean_runtime_ms": ""}]
    write_rows(rows, SWEEP_FIELDS, tmp_path / "s.csv")
    back = read_rows(tmp_path / "s.csv")[0]
    assert float(back["mean_sinr_db"]) == 1 / 3
    assert back["std_sinr_db"] == "0.1" and back["mean_runtime_ms"] == ""
