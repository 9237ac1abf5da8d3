import json
import subprocess
import sys

import pytest

from b92qkd import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return header, [dict(zip(header, ln.split(","))) for ln in lines[1:]]


class TestEstimate:
    def test_loss_only_one_seventh(self, capsys):
        fil = 2 * 0.2 * 0.8 * 0.7
        code, out, _ = run(capsys, "estimate", "--alpha2", "0.2", "--gamma-mode", "beta",
                           "--loss", "0.3", "--err-rate", "0", "--fil-rate", repr(fil))
        assert code == 0
        _, rows = table(out)
        assert abs(float(rows[0]["ratio"]) - 1 / 7) < 1e-6

    def test_noiseless_channel(self, capsys):
        code, out, _ = run(capsys, "estimate", "--channel", "depol", "--p", "0", "--loss", "0", "--alpha2", "0.2")
        assert code == 0
        assert abs(float(table(out)[1][0]["ratio"])) < 1e-9

    def test_err_above_fil(self, capsys):
        code, _, err = run(capsys, "estimate", "--alpha2", "0.2", "--loss", "0", "--err-rate", "0.3", "--fil-rate", "0.2")
        assert code == 1 and "exceeds" in err

    def test_infeasible_exit(self, capsys):
        code, out, _ = run(capsys, "estimate", "--alpha2", "0.2", "--loss", "0", "--err-rate", "0", "--fil-rate", "0.9")
        assert code == 2
        assert table(out)[1][0]["feasible"] == "false"

    @pytest.mark.parametrize(
        "argv",
        [["estimate", "--alpha2", "0.7", "--loss", "0", "--err-rate", "0", "--fil-rate", "0.1"],
         ["estimate", "--alpha2", "0.2", "--overlap2", "0.3", "--loss", "0", "--err-rate", "0", "--fil-rate", "0.1"],
         ["estimate", "--alpha2", "0.2"],
         ["fig1", "--p", "1.5"]],
    )
    def test_invalid_input(self, capsys, argv):
        code, _, err = run(capsys, *argv)
        assert code == 1 and err

    @pytest.mark.parametrize("argv", [["estimate", "--alpha2", "abc"], ["nonsense"]])
    def test_argparse_errors_exit_one(self, capsys, argv):
        with pytest.raises(SystemExit) as exc:
            cli.main(argv)
        assert exc.value.code == 1

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "estimate", "--alpha2", "0.2", "--loss", "0", "--err-rate", "0",
                           "--fil-rate", "0.32", "--format", "json")
        doc = json.loads(out)
        assert code == 0 and doc["columns"] == cli.ESTIMATE_COLUMNS and len(doc["rows"]) == 1


class TestFig1:
    def test_noiseless_rows(self, capsys):
        code, out, _ = run(capsys, "fig1", "--p", "0", "--loss", "0", "--points", "5")
        assert code == 0
        header, rows = table(out)
        assert header == cli.FIG1_COLUMNS and len(rows) == 5
        for r in rows:
            for k in ("est_ph_ratio", "actual_ph_ratio", "bit_ratio"):
                assert abs(float(r[k])) < 1e-9

    def test_config_echo(self, capsys):
        _, out, _ = run(capsys, "fig1", "--points", "3")
        lines = out.splitlines()
        assert lines[0].startswith("# b92qkd ")
        assert "# subcommand=fig1" in lines and "# p=0.01" in lines

    def test_gamma_invariant(self, capsys):
        _, a, _ = run(capsys, "fig1", "--points", "9", "--loss", "0.5", "--gamma-mode", "beta")
        _, b, _ = run(capsys, "fig1", "--points", "9", "--loss", "0.5", "--gamma-mode", "one")
        ra, rb = table(a)[1], table(b)[1]
        for x, y in zip(ra, rb):
            for k in cli.FIG1_COLUMNS:
                assert abs(float(x[k]) - float(y[k])) <= 1e-8

    def test_pure_in_arguments(self, capsys):
        _, a, _ = run(capsys, "fig1", "--points", "4")
        _, b, _ = run(capsys, "fig1", "--points", "4")
        assert a == b


class TestSweeps:
    def test_fig2_small(self, capsys, tmp_path):
        path = tmp_path / "f2.csv"
        code, _, _ = run(capsys, "fig2", "--loss", "0.5", "--p-max", "0.02", "--points", "3", "--out", str(path))
        assert code == 0
        header, rows = table(path.read_text())
        assert header == cli.FIG2_COLUMNS
        assert [r["row_type"] for r in rows] == ["point"] * 3 + ["cutoff"]
        assert float(rows[0]["best_G"]) > 0
        assert float(rows[1]["best_G"]) > 0 and float(rows[2]["best_G"]) == 0

    def test_fig2_rejects_bad_loss(self, capsys):
        code, _, _ = run(capsys, "fig2", "--loss", "0,1.2", "--points", "2")
        assert code == 1


class TestSimulate:
    ARGS = ["simulate", "--alpha2", "0.2", "--n", "20000", "--trials", "5", "--p", "0.01", "--loss", "0.5", "--seed", "7"]

    def test_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert run(capsys, *self.ARGS, "--out", str(a))[0] == 0
        assert run(capsys, *self.ARGS, "--out", str(b))[0] == 0
        assert a.read_bytes() == b.read_bytes()
        assert len(a.read_text().splitlines()) == 5

    def test_summary_within_five_se(self, capsys, tmp_path):
        _, out, _ = run(capsys, *self.ARGS, "--out", str(tmp_path / "s.jsonl"))
        summary = json.loads(out)
        for name, r in summary["rates"].items():
            assert abs(r["z_of_mean"]) < 5, name

    @pytest.mark.parametrize("flag,value", [("--trials", "0"), ("--n", "0"), ("--seed", "-3"), ("--p", "2")])
    def test_validation(self, capsys, flag, value):
        argv = list(self.ARGS)
        argv[argv.index(flag) + 1] = value
        assert run(capsys, *argv)[0] == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "b92qkd", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("b92qkd ")
