import json

import numpy as np
import pytest

from majam import neural
from majam.cli import main


def run(*argv):
    return main([str(a) for a in argv])


class TestGenData:
    def test_paper_size(self, tmp_path):
        out = tmp_path / "scenes.csv"
        assert run("gen-data", "--jammers", 3, "--size", 100000, "--seed", 7, "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "theta0,theta1,theta2,theta3"
        assert len(lines) == 100_001
        assert all(len(l.split(",")) == 4 for l in lines[1:100])

    def test_empty(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run("gen-data", "--size", 0, "--out", out) == 0
        assert out.read_text() == "theta0,theta1,theta2,theta3\n"

    def test_reproducible(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run("gen-data", "--size", 50, "--seed", 3, "--out", a)
        run("gen-data", "--size", 50, "--seed", 3, "--out", b)
        assert a.read_bytes() == b.read_bytes()

    def test_bad_size(self, tmp_path):
        assert run("gen-data", "--size", -1, "--out", tmp_path / "s.csv") == 1

    def test_unwritable(self, tmp_path):
        assert run("gen-data", "--size", 1, "--out", tmp_path / "nope" / "s.csv") == 2


class TestUsage:
    def test_missing_required(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run("gen-data")
        assert exc.value.code == 1

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as exc:
            run("frobnicate")
        assert exc.value.code == 1

    def test_infeasible_system(self, tmp_path):
        assert run("baseline", "--scheme", "fpv", "--scene", "1,2", "--elements", 20,
                   "--out", tmp_path / "o.csv") == 1


class TestTrain:
    def test_single_epoch(self, tmp_path, capsys):
        model = tmp_path / "m.json"
        code = run("train", "--epochs", 1, "--dataset-size", 100, "--batch", 100,
                   "--out", model)
        assert code == 0
        history = (tmp_path / "m.json.history.csv").read_text().splitlines()
        assert history[0] == "epoch,mean_loss,mean_sinr_db,seconds"
        assert len(history) == 2
        assert "held-out mean SINR" in capsys.readouterr().out
        doc = json.loads(model.read_text())
        assert doc["version"] == 1 and "layer_specs" in doc and "weights" in doc

    def test_missing_dataset(self, tmp_path, capsys):
        missing = tmp_path / "absent.csv"
        assert run("train", "--data", missing, "--out", tmp_path / "m.json") == 2
        assert str(missing) in capsys.readouterr().err

    def test_from_dataset_and_infer(self, tmp_path):
        data = tmp_path / "d.csv"
        model = tmp_path / "m.json"
        run("gen-data", "--size", 60, "--jammers", 2, "--out", data)
        assert run("train", "--preset", "desk", "--data", data, "--epochs", 2, "--batch", 20,
                   "--out", model) == 0
        params = neural.load_model(model)
        assert params.meta["num_jammers"] == 2
        out = tmp_path / "r.csv"
        assert run("infer", "--model", model, "--data", data, "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "scene,sinr,sinr_db,positions" and len(lines) == 61
        pos = np.array(lines[1].split(",")[3].split(), dtype=float)
        assert pos[0] == 0.0 and len(pos) == 8

    def test_reproducible(self, tmp_path):
        args = ["--preset", "desk", "--epochs", 2, "--dataset-size", 200, "--batch", 50]
        run("train", *args, "--out", tmp_path / "a.json")
        run("train", *args, "--out", tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_corrupt_model(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"version": 7}')
        assert run("infer", "--model", bad, "--scene", "1,2,3,0.5") == 2


class TestBaseline:
    @pytest.mark.parametrize("scheme", ["ao", "fpv", "rpb"])
    def test_reproducible(self, tmp_path, scheme):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        flags = ["baseline", "--scheme", scheme, "--scene", "1.2,0.3,2.0,2.8",
                 "--grid-points", 30]
        assert run(*flags, "--out", a) == 0
        run(*flags, "--out", b)
        assert a.read_bytes() == b.read_bytes()

    def test_stdout(self, capsys):
        assert run("baseline", "--scheme", "fpv", "--scene", str(np.pi / 2)) == 0
        lines = capsys.readouterr().out.splitlines()
        assert float(lines[1].split(",")[1]) == pytest.approx(80.0)


class TestConfigFile:
    def test_values_apply_and_flags_win(self, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text('seed = 3\n[gen-data]\nsize = 5\njammers = 1\n')
        out = tmp_path / "s.csv"
        assert run("gen-data", "--config", cfg, "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "theta0,theta1" and len(lines) == 6
        ref = tmp_path / "r.csv"
        run("gen-data", "--seed", 3, "--size", 5, "--jammers", 1, "--out", ref)
        assert out.read_bytes() == ref.read_bytes()
        assert run("gen-data", "--config", cfg, "--size", 2, "--out", out) == 0
        assert len(out.read_text().splitlines()) == 3

    def test_out_from_file(self, tmp_path):
        cfg = tmp_path / "c.toml"
        out = tmp_path / "s.csv"
        cfg.write_text(f'[gen-data]\nsize = 1\nout = "{out}"\n')
        assert run("gen-data", "--config", cfg) == 0 and out.exists()

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text("colour = 'blue'\n")
        with pytest.raises(SystemExit) as exc:
            run("gen-data", "--config", cfg, "--out", tmp_path / "s.csv")
        assert exc.value.code == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run("gen-data", "--config", tmp_path / "none.toml", "--out", tmp_path / "s.csv")
        assert exc.value.code == 1


def test_sweep_and_bench(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run("sweep", "--variable", "num-elements", "--values", "4,6", "--trials", 3,
               "--schemes", "fpv,rpb,ao", "--grid-points", 20, "--max-sweeps", 2,
               "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "variable_value,scheme,mean_sinr_db,std_sinr_db,mean_runtime_ms"
    assert len(lines) == 7
    bench = tmp_path / "bench.csv"
    assert run("bench-runtime", "--jammers-list", "1,2", "--trials", 2, "--schemes", "fpv,learned",
               "--out", bench) == 0
    assert bench.read_text().splitlines()[0] == "scheme,N,K,mean_ms,p95_ms"
    assert run("sweep", "--variable", "num-elements", "--schemes", "magic", "--out", out) == 1
