import json

import numpy as np
import pytest

from hfbdyn import cli
from hfbdyn.experiments.lemmas import LemmaCheck
from hfbdyn.io import load_state, load_trace

SMALL = {"scheme": {"dt": 1e-3, "T": 0.008}, "norms": {"windows": [0.5, 1.0]}}


def write_cfg(path, extra=None):
    d = json.loads(json.dumps(SMALL))
    for k, v in (extra or {}).items():
        if isinstance(v, dict):
            d.setdefault(k, {}).update(v)
        else:
            d[k] = v
    path.write_text(json.dumps(d))
    return path


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestExitCodes:
    def test_validate_default(self, capsys):
        code, out, _ = run(capsys, "validate-config")
        assert code == 0 and out.startswith("ok ")

    def test_unknown_subcommand(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 2 and "usage" in err

    def test_missing_subcommand(self, capsys):
        assert run(capsys)[0] == 2

    def test_alpha_boundary(self, capsys, tmp_path):
        p = write_cfg(tmp_path / "c.json", {"norms": {"alpha": 0.5}})
        code, _, err = run(capsys, "validate-config", "--config", p)
        assert code == 1 and "alpha > 1/2" in err

    def test_missing_config_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "validate-config", "--config", tmp_path / "nope.json")
        assert code == 1 and "invalid configuration" in err

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_nan_abort(self, capsys, tmp_path):
        p = write_cfg(tmp_path / "c.json", {"potential": {"amplitude": 1e150}})
        code, _, _ = run(capsys, "simulate", "--config", p, "--out", tmp_path / "runs")
        assert code == 3
        (d,) = (tmp_path / "runs").iterdir()
        assert (d / "state_last_good.bin").exists() and (d / "trace_partial.bin").exists()

    def test_failed_check(self, capsys, tmp_path, monkeypatch):
        bad = LemmaCheck("mlogm", 1, {2: np.array([1.0])}, {2: 1.0}, 0.0, {"spread": 3.0})
        monkeypatch.setitem(cli.LEMMAS, "mlogm", lambda: bad)
        code, _, _ = run(capsys, "verify", "mlogm", "--out", tmp_path)
        assert code == 4

    def test_corrupt_trace(self, capsys, tmp_path):
        p = tmp_path / "t.bin"
        p.write_bytes(b"HFBD\x01")
        code, _, err = run(capsys, "norms", p, "--out", tmp_path)
        assert code == 1 and "invalid input" in err


class TestSimulate:
    @pytest.fixture
    def cfg(self, tmp_path):
        return write_cfg(tmp_path / "c.json")

    def test_outputs(self, capsys, tmp_path, cfg):
        code, out, _ = run(capsys, "simulate", "--config", cfg, "--out", tmp_path / "runs")
        assert code == 0
        d = tmp_path / "runs" / out.strip().split("/")[-1]
        names = {p.name for p in d.iterdir()}
        assert names == {"config.json", "state_initial.bin", "trace.bin", "state_final.bin", "conserved.csv",
                         "norms.csv", "summary.json"}
        assert d.name.startswith("simulate-")
        summ = json.loads((d / "summary.json").read_text())
        assert summ["steps"] == 8 and summ["mass_drift"] < 1e-12
        assert load_trace(d / "trace.bin").steps == 8
        assert load_state(d / "state_final.bin").t == pytest.approx(0.008)

    def test_byte_identical_reruns(self, capsys, tmp_path, cfg):
        assert run(capsys, "simulate", "--config", cfg, "--out", tmp_path / "a", "--serial")[0] == 0
        assert run(capsys, "simulate", "--config", cfg, "--out", tmp_path / "b", "--serial")[0] == 0
        assert tree(tmp_path / "a") == tree(tmp_path / "b")

    def test_seed_changes_hash(self, capsys, tmp_path, cfg):
        run(capsys, "validate-config", "--config", cfg)
        a = run(capsys, "validate-config", "--config", cfg, "--seed", "1")[1]
        b = run(capsys, "validate-config", "--config", cfg, "--seed", "2")[1]
        assert a != b

    def test_norms_reproduce_in_run_report(self, capsys, tmp_path, cfg):
        _, out, _ = run(capsys, "simulate", "--config", cfg, "--out", tmp_path / "runs")
        d = tmp_path / "runs" / out.strip().split("/")[-1]
        code, out2, _ = run(capsys, "norms", d / "trace.bin", "--config", cfg, "--out", tmp_path / "runs")
        assert code == 0
        d2 = tmp_path / "runs" / out2.strip().split("/")[-1]
        assert d2.name.startswith("norms-")
        assert (d2 / "norms.csv").read_bytes() == (d / "norms.csv").read_bytes()


class TestOtherCommands:
    def test_verify_mlogm(self, capsys, tmp_path):
        code, out, _ = run(capsys, "verify", "mlogm", "--out", tmp_path)
        assert code == 0
        d = tmp_path / out.strip().split("/")[-1]
        summ = json.loads((d / "mlogm_summary.json").read_text())
        assert summ["passed"] and summ["lemma_id"] == "mlogm"
        assert (d / "mlogm_ratios.csv").read_text().startswith("lemma,resolution,sample,ratio\n")

    def test_oracle(self, capsys, tmp_path):
        p = write_cfg(tmp_path / "c.json", {"oracle": {"n": 8, "states": 2}})
        code, out, _ = run(capsys, "oracle", "--config", p, "--out", tmp_path)
        assert code == 0
        assert out.count("PASS") >= 10 and "FAIL" not in out

    def test_sweep(self, capsys, tmp_path):
        p = write_cfg(tmp_path / "c.json", {"sweep": {"scenario": None, "N_list": [16, 32]},
                                              "potential": {"N": 32}})
        code, out, _ = run(capsys, "sweep", "--config", p, "--out", tmp_path, "--threads", "2")
        assert code == 0
        d = tmp_path / out.strip().split("/")[-1]
        summ = json.loads((d / "sweep_summary.json").read_text())
        assert summ["completed"] == [16.0, 32.0] and summ["failures"] == {}
        assert (d / "sweep_norms.csv").exists() and (d / "sweep_conserved.csv").exists()
