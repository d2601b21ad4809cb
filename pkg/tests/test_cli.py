import json

import numpy as np
import pytest

from subdmd import cli, io
from subdmd.dmd import SnapshotMatrix


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


LTI_DOC = {
    "system": {"type": "lti", "a": [[{"re": 0, "im": 0.9}, 0], [0, {"re": 0, "im": -0.9}]], "x0": [1, 1]},
    "noise": {"sigma_p": 0.1, "sigma_o": 0.1, "seed": 3},
}


class TestSimulate:
    def test_three_snapshots(self, tmp_path, capsys):
        spec = write_json(tmp_path / "spec.json", dict(LTI_DOC, m=3))
        out = tmp_path / "snap.csv"
        assert cli.main(["simulate", spec, "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "# dt=1 n=2"
        assert lines[1] == "t,ch0_re,ch0_im,ch1_re,ch1_im"
        assert len(lines) == 5 and all(len(ln.split(",")) == 5 for ln in lines[1:])
        assert "n=2 m=3" in capsys.readouterr().out

    def test_byte_identical_reruns_and_seed_override(self, tmp_path):
        spec = write_json(tmp_path / "spec.json", dict(LTI_DOC, m=200))
        paths = [tmp_path / f"{k}.csv" for k in "abc"]
        cli.main(["simulate", spec, "--out", str(paths[0])])
        cli.main(["simulate", spec, "--out", str(paths[1])])
        cli.main(["simulate", spec, "--out", str(paths[2]), "--seed", "4"])
        assert paths[0].read_bytes() == paths[1].read_bytes() != paths[2].read_bytes()

    def test_csv_round_trip_is_exact(self, tmp_path):
        rs = np.random.default_rng(0)
        y = SnapshotMatrix(rs.standard_normal((3, 7)) + 1j * rs.standard_normal((3, 7)) * 1e-300, 0.1)
        io.write_snapshot_csv(tmp_path / "y.csv", y)
        back = io.read_snapshot_csv(tmp_path / "y.csv")
        assert back.data.tobytes() == y.data.tobytes() and back.dt == y.dt

    def test_burgers_at_fine_grid(self, tmp_path):
        doc = {"system": {"type": "burgers", "dx": 0.01, "dt_solver": 5e-5, "t_end": 0.01, "sample_stride": 10}}
        out = tmp_path / "b.csv"
        assert cli.main(["simulate", write_json(tmp_path / "b.json", doc), "--out", str(out)]) == 0
        y = io.read_snapshot_csv(out)
        assert y.n == 101 and y.m == int(0.01 / (5e-5 * 10)) + 1

    def test_stuart_landau_orders_range(self, tmp_path):
        doc = {"system": {"type": "stuart_landau", "orders": {"min": -3, "max": 3}}, "m": 20}
        out = tmp_path / "sl.csv"
        assert cli.main(["simulate", write_json(tmp_path / "sl.json", doc), "--out", str(out)]) == 0
        assert io.read_snapshot_csv(out).n == 7

    @pytest.mark.parametrize("doc", [
        {"system": {"type": "pendulum"}, "m": 5},
        {"system": {"type": "lti", "a": [[0.5]]}, "m": 5},
        {"system": {"type": "lti", "a": [[0.5]], "x0": [1]}},
        {"schema_version": 99, "system": {"type": "lti", "a": [[0.5]], "x0": [1]}, "m": 5},
    ])
    def test_malformed_config(self, tmp_path, doc):
        assert cli.main(["simulate", write_json(tmp_path / "bad.json", doc)]) == 2

    def test_invalid_json_and_missing_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert cli.main(["simulate", str(bad)]) == 2
        assert cli.main(["simulate", str(tmp_path / "missing.json")]) == 2

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["dmd"])
        assert exc.value.code == 2


def write_snapshots(path, data, dt=1.0):
    io.write_snapshot_csv(path, SnapshotMatrix(np.asarray(data), dt))
    return str(path)


class TestDmd:
    def test_diagonal_standard(self, tmp_path):
        y = np.vstack([2.0 ** np.arange(6), 0.5 ** np.arange(6)])
        out = tmp_path / "r.json"
        assert cli.main(["dmd", write_snapshots(tmp_path / "y.csv", y), "--method", "standard",
                         "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        eigs = [io.complex_from_json(v) for v in doc["eigenvalues"]]
        np.testing.assert_allclose(eigs, [2.0, 0.5], atol=1e-12)
        assert doc["retained_rank"] == 2 and doc["method"] == "standard" and doc["schema_version"] == 1
        np.testing.assert_allclose([io.complex_from_json(v) for v in doc["continuous_eigenvalues"]],
                                   np.log([2.0, 0.5]), atol=1e-12)

    def test_stdout(self, tmp_path, capsys):
        y = np.vstack([0.9 ** np.arange(8)])
        assert cli.main(["dmd", write_snapshots(tmp_path / "y.csv", y), "--method", "tls"]) == 0
        assert json.loads(capsys.readouterr().out)["method"] == "tls"

    def test_nc_requires_sigma(self, tmp_path):
        assert cli.main(["dmd", write_snapshots(tmp_path / "y.csv", np.ones((1, 8))), "--method", "nc"]) == 2

    def test_too_few_snapshots_for_subspace(self, tmp_path, capsys):
        path = write_snapshots(tmp_path / "y.csv", np.ones((2, 4)))
        assert cli.main(["dmd", path, "--method", "subspace"]) == 2
        assert "quadruple" in capsys.readouterr().err

    def test_all_zero_data_is_numerical_failure(self, tmp_path):
        path = write_snapshots(tmp_path / "y.csv", np.zeros((2, 10)))
        assert cli.main(["dmd", path, "--method", "standard"]) == 3

    def test_rank_truncation_on_wide_data(self, tmp_path):
        rs = np.random.default_rng(1)
        y = rs.standard_normal((40, 100))
        out = tmp_path / "r.json"
        assert cli.main(["dmd", write_snapshots(tmp_path / "y.csv", y), "--method", "subspace",
                         "--rank", "15", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert len(doc["modes"]) == 15 and len(doc["modes"][0]) == 40

    def test_malformed_csv(self, tmp_path):
        bad = tmp_path / "y.csv"
        bad.write_text("# dt=1 n=1\nt,ch0_re,ch0_im\n0,1.0\n")
        assert cli.main(["dmd", str(bad)]) == 2


def experiment_doc(**kw):
    doc = dict(LTI_DOC, m=1000, trials=40, base_seed=1, method=["standard", "subspace"])
    doc.update(kw)
    return doc


def read_stats(out_dir):
    return json.loads((out_dir / "stats.json").read_text())["results"]


class TestExperiment:
    def test_noiseless_single_trial(self, tmp_path):
        doc = experiment_doc(noise={}, trials=1, m=50, method="standard")
        out = tmp_path / "out"
        assert cli.main(["experiment", write_json(tmp_path / "e.json", doc), "--out", str(out)]) == 0
        res = read_stats(out)
        assert len(res) == 1 and res[0]["trials"] == 1
        assert max(e["median_epsilon"] for e in res[0]["eigenvalues"]) < 1e-12
        rows = (out / "trials.csv").read_text().splitlines()
        assert rows[0] == "method,sweep_value,trial,eig,re,im,epsilon" and len(rows) == 3

    def test_sigma_sweep_orders_methods(self, tmp_path):
        doc = experiment_doc(sweep={"param": "sigma_o", "values": [0.1, 0.2]})
        out = tmp_path / "out"
        assert cli.main(["experiment", write_json(tmp_path / "e.json", doc), "--out", str(out)]) == 0
        med = {(r["method"], r["sweep"]["value"]): max(e["median_epsilon"] for e in r["eigenvalues"])
               for r in read_stats(out)}
        for s in (0.1, 0.2):
            assert med[("subspace", s)] < med[("standard", s)]

    def test_m_sweep_decreases(self, tmp_path):
        doc = experiment_doc(method="subspace", trials=10, sweep={"param": "m", "values": [300, 3000, 30000]})
        out = tmp_path / "out"
        assert cli.main(["experiment", write_json(tmp_path / "e.json", doc), "--out", str(out)]) == 0
        med = [max(e["median_epsilon"] for e in r["eigenvalues"]) for r in read_stats(out)]
        assert med[0] > med[1] > med[2]

    def test_default_output_paths_and_trials_override(self, tmp_path):
        cfg = write_json(tmp_path / "e.json", experiment_doc(method="tls"))
        assert cli.main(["experiment", cfg, "--trials", "2"]) == 0
        assert json.loads((tmp_path / "e.stats.json").read_text())["results"][0]["trials"] == 2
        assert (tmp_path / "e.trials.csv").exists()

    def test_bad_sweep(self, tmp_path):
        doc = experiment_doc(sweep={"param": "k", "values": [1]})
        assert cli.main(["experiment", write_json(tmp_path / "e.json", doc)]) == 2
