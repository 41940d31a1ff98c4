import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from stable_psr import bounds, cli
from stable_psr.bounds import bound_b1, bound_b5, choose_c
from stable_psr.errors import ConvergenceError

SUBCOMMANDS = ["sample", "cf", "bound", "choose-c", "distance", "infer", "figures"]


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestGrid:
    def test_linear_unit_steps(self):
        np.testing.assert_array_equal(cli.parse_grid("12:15"), [12.0, 13.0, 14.0, 15.0])

    def test_count(self):
        np.testing.assert_allclose(cli.parse_grid("0:1:5"), [0, 0.25, 0.5, 0.75, 1.0])

    def test_log(self):
        g = cli.parse_grid("1:1000:4", log=True)
        np.testing.assert_allclose(g, [1, 10, 100, 1000])
        assert cli.parse_grid("1:10", log=True).size == 50

    def test_single(self):
        np.testing.assert_array_equal(cli.parse_grid("3.5"), [3.5])

    @pytest.mark.parametrize("text,log", [("a:b", False), ("5:1", False), ("1:2:0", False), ("0:5", True), ("1:2:3:4", False)])
    def test_bad(self, text, log):
        with pytest.raises(cli.UsageError):
            cli.parse_grid(text, log)


class TestBound:
    def test_b1_matches_library(self, capsys):
        code, out, _ = run_cli(capsys, "bound", "--name", "b1", "--alpha", "0.9", "--c-grid", "12:50")
        assert code == 0
        rows = read_csv(out)
        assert [float(r["c"]) for r in rows] == list(np.arange(12.0, 51.0))
        for r in rows:
            assert float(r["bound"]) == bound_b1(0.9, float(r["c"])).value
            assert float(r["alpha"]) == 0.9

    def test_b4_branch_column(self, capsys):
        code, out, _ = run_cli(capsys, "bound", "--name", "b4", "--alpha", "1.5", "--c-grid", "1000")
        assert code == 0
        assert read_csv(out)[0]["branch"] == "B1"

    def test_b5_and_b2(self, capsys):
        code, out, _ = run_cli(capsys, "bound", "--name", "b5", "--alpha", "1.2", "--c-grid", "10:1000:3", "--log", "--n-envelope", "4")
        assert code == 0
        rows = read_csv(out)
        assert float(rows[1]["bound"]) == bound_b5(1.2, 100.0, 4).value
        code, out, _ = run_cli(capsys, "bound", "--name", "b2", "--alpha", "0.5", "--c-grid", "5", "--delta", "1.0")
        assert code == 0 and float(read_csv(out)[0]["bound"]) > 0

    def test_domain_error_exit(self, capsys):
        code, out, err = run_cli(capsys, "bound", "--name", "b1", "--alpha", "1.0", "--c-grid", "5")
        assert code == 3
        assert out == ""
        msg = json.loads(err)
        assert msg["error"] == "domain" and err.count("\n") == 1


class TestChooseC:
    def test_delegation(self, capsys):
        code, out, _ = run_cli(capsys, "choose-c", "--alpha", "1.2", "--epsilon", "0.01", "--bound", "b5")
        assert code == 0
        payload = json.loads(out)
        assert payload["c"] == choose_c(1.2, 0.01, "B5")
        assert bounds.bound_b5(1.2, payload["c"]).value <= 0.01

    def test_unreachable_is_reported(self, capsys):
        code, _, err = run_cli(capsys, "choose-c", "--alpha", "1.95", "--epsilon", "1e-9", "--bound", "b6")
        assert code != 0
        assert json.loads(err)["error"] in {"domain", "convergence"}


class TestSample:
    def test_deterministic(self, capsys, tmp_path):
        argv = ["sample", "--method", "xhat", "--alpha", "1.2", "--c", "500", "--n", "10000", "--seed", "7"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli.main(argv + ["--out", str(a)]) == 0
        assert cli.main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        rows = read_csv(a.read_text())
        assert len(rows) == 10000

    @pytest.mark.parametrize("method", ["truncated", "residual", "stable"])
    def test_methods(self, capsys, method):
        extra = ["--d", "100"] if method == "residual" else []
        code, out, _ = run_cli(capsys, "sample", "--method", method, "--alpha", "0.8", "--c", "10", "--n", "50", "--seed", "1", *extra)
        assert code == 0
        values = [float(list(r.values())[0]) for r in read_csv(out)]
        assert len(values) == 50 and all(np.isfinite(values))

    def test_bad_count(self, capsys):
        code, _, err = run_cli(capsys, "sample", "--alpha", "1.2", "--c", "5", "--n", "0")
        assert code == 2 and json.loads(err)["error"] == "usage"


class TestCf:
    def test_symmetric_closed_form(self, capsys):
        code, out, _ = run_cli(capsys, "cf", "--name", "X", "--alpha", "1.2", "--c", "10", "--s-grid", "0:2:5")
        assert code == 0
        rows = read_csv(out)
        assert list(rows[0]) == ["s", "re", "im"]
        assert float(rows[0]["re"]) == 0.0
        assert all(float(r["re"]) <= 0 for r in rows)

    def test_w_grid(self, capsys):
        code, out, _ = run_cli(capsys, "cf", "--name", "Z_c", "--alpha", "0.7", "--c", "10", "--w-grid", "0.01:3:6", "--log")
        assert code == 0 and len(read_csv(out)) == 6

    def test_skewed_weights(self, capsys):
        code, out, _ = run_cli(capsys, "cf", "--name", "R", "--alpha", "1.3", "--c", "4", "--mu-w", "0.5", "--s-grid", "1")
        assert code == 0 and float(read_csv(out)[0]["im"]) != 0.0

    def test_needs_a_grid(self, capsys):
        code, _, _ = run_cli(capsys, "cf", "--name", "X", "--alpha", "1.2", "--c", "10")
        assert code == 2


class TestDistance:
    def test_rows(self, capsys):
        code, out, _ = run_cli(capsys, "distance", "--pair", "X,X_hat", "--alpha", "1.2", "--c-grid", "3:30:2", "--log")
        assert code == 0
        rows = read_csv(out)
        assert [list(r) for r in rows][0] == ["c", "alpha", "qbar", "abs_err"]
        assert float(rows[1]["qbar"]) < float(rows[0]["qbar"])

    def test_bad_pair(self, capsys):
        code, _, _ = run_cli(capsys, "distance", "--pair", "X", "--alpha", "1.2", "--c-grid", "3")
        assert code in (2, 3)

    def test_convergence_exit(self, capsys, monkeypatch):
        def boom(*args, **kwargs):
            raise ConvergenceError("quadrature stopped")

        monkeypatch.setattr(cli.distance, "esseen_bound", boom)
        code, _, err = run_cli(capsys, "distance", "--pair", "Z_c,Z", "--alpha", "1.2", "--c-grid", "3")
        assert code == 4 and json.loads(err)["error"] == "convergence"


class TestInfer:
    @pytest.fixture
    def data_file(self, tmp_path):
        rng = np.random.default_rng(0)
        g = rng.standard_normal((40, 2))
        x = g @ [1.0, -0.5] + 0.3 * rng.standard_normal(40)
        path = tmp_path / "data.csv"
        lines = ["x,g_1,g_2"] + [f"{xi:.17g},{a:.17g},{b:.17g}" for xi, (a, b) in zip(x, g)]
        path.write_text("\n".join(lines) + "\n")
        return path

    def test_summary_and_trace(self, capsys, tmp_path, data_file):
        trace = tmp_path / "trace.csv"
        argv = ["infer", "--data", str(data_file), "--alpha", "1.2", "--c", "4", "--iters", "400",
                "--chains", "2", "--seed", "3", "--prior-scale", "10", "--trace", str(trace)]
        code, out, _ = run_cli(capsys, *argv)
        assert code == 0
        payload = json.loads(out)
        assert len(payload["mean"]) == 2 and len(payload["std"]) == 2
        assert 0 <= payload["acceptance_rate"] <= 1
        assert trace.exists()
        code2, out2, _ = run_cli(capsys, *argv)
        assert out2 == out

    def test_epsilon_picks_c(self, capsys, data_file):
        code, out, _ = run_cli(capsys, "infer", "--data", str(data_file), "--alpha", "1.2", "--epsilon", "0.05", "--iters", "100")
        assert code == 0
        assert json.loads(out)["c"] == choose_c(1.2, 0.05, "B5")

    def test_c_and_epsilon_exclusive(self, capsys, data_file):
        code, _, _ = run_cli(capsys, "infer", "--data", str(data_file), "--alpha", "1.2", "--c", "4", "--epsilon", "0.05")
        assert code == 2

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "infer", "--data", str(tmp_path / "none.csv"), "--alpha", "1.2", "--c", "4")
        assert code == 3


class TestFigures:
    def test_quick(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "figures", "--out-dir", str(tmp_path), "--quick", "--seed", "2")
        assert code == 0
        names = {p.name for p in tmp_path.iterdir()}
        assert {"bound_curves.csv", "qbar_vs_bounds.csv", "c_of_alpha.csv", "density_samples.csv"} <= names
        for name in names:
            assert len(read_csv((tmp_path / name).read_text())) > 0


class TestInterface:
    @pytest.mark.parametrize("sub", SUBCOMMANDS)
    def test_help(self, sub, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main([sub, "--help"])
        assert info.value.code == 0
        text = capsys.readouterr().out
        assert "--" in text and "default" in text.lower()

    def test_no_subcommand(self, capsys):
        code, _, err = run_cli(capsys)
        assert code == 2

    def test_unknown_flag(self, capsys):
        code, _, err = run_cli(capsys, "bound", "--bogus")
        assert code == 2 and json.loads(err)["error"] == "usage"

    def test_bad_thread_env(self, capsys, monkeypatch):
        monkeypatch.setenv("STABLE_PSR_THREADS", "many")
        code, _, _ = run_cli(capsys, "bound", "--name", "b6", "--alpha", "1.2", "--c-grid", "3")
        assert code == 2

    def test_threads_do_not_change_output(self, capsys, monkeypatch):
        argv = ["distance", "--pair", "X,X_0c", "--alpha", "0.8", "--c-grid", "3:300:4", "--log"]
        _, serial, _ = run_cli(capsys, *argv)
        monkeypatch.setenv("STABLE_PSR_THREADS", "3")
        _, threaded, _ = run_cli(capsys, *argv)
        assert serial == threaded

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "stable_psr", "choose-c", "--alpha", "1.2", "--epsilon", "0.01"],
            capture_output=True, text=True, check=False,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["c"] > 2
