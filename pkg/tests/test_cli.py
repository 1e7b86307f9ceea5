import csv
import math

import pytest

from spinarrival import cli
from spinarrival.cli import (
    CSV_HEADER,
    OUTPUT_DIR_ENV,
    SweepSpec,
    UsageError,
    main,
    plot_script,
    read_config,
    resolve_spec,
    run_sweep,
    sweep_csv,
)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _point_lines(capsys, argv):
    assert main(argv) == 0
    return {line.split()[0]: [float(v) for v in line.split()[1:]] for line in capsys.readouterr().out.splitlines()}


class TestPoint:
    def test_output_layout(self, capsys):
        out = _point_lines(capsys, ["point", "--sigma0", "0.3", "--u", "1", "--at", "0.5,0.2,0.1", "--t", "0.4"])
        assert set(out) == {"rho", "J_i", "J_s", "J"}
        assert len(out["J"]) == 3
        assert out["J"] == pytest.approx([a + b for a, b in zip(out["J_i"], out["J_s"])], rel=1e-10)

    def test_reduction_identity(self, capsys):
        s0 = 0.2
        w = str(math.sqrt(2.0) * s0)
        common = ["--u", "2", "--at", "0.6,0.1,-0.05", "--t", "0.3"]
        sym = _point_lines(capsys, ["point", "--sigma0", str(s0)] + common)
        asym = _point_lines(capsys, ["point", "--family", "asymmetric", "--a", w, "--b", w, "--c", w] + common)
        for key in sym:
            assert asym[key] == pytest.approx(sym[key], rel=1e-10)

    def test_spin_direction_generic_path(self, capsys):
        base = ["point", "--sigma0", "0.3", "--u", "1", "--at", "0.5,0.2,0.1", "--t", "0.4"]
        closed = _point_lines(capsys, base)
        up = _point_lines(capsys, base + ["--spin-dir", "0,0,1"])
        down = _point_lines(capsys, base + ["--spin-dir", "0,0,-1"])
        assert up["J_s"] == pytest.approx(closed["J_s"], rel=1e-12)
        assert down["J_s"] == pytest.approx([-v for v in closed["J_s"]], rel=1e-12)

    def test_bad_vector_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["point", "--at", "1,2"])
        assert exc.value.code == 2

    def test_bad_width_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["point", "--sigma0", "-1"])
        assert exc.value.code == 2


class TestSweep:
    def test_two_points(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["sweep", "--preset", "fig1", "--n-points", "2", "--out", str(out)]) == 0
        rows = _rows(out)
        assert len(rows) == 2
        assert [float(r["u"]) for r in rows] == [0.5, 10.0]
        assert all(r["status"] == "OK" for r in rows)
        assert all(r["tau"] == "" and r["tau_s"] for r in rows)

    def test_header_and_line_endings(self, tmp_path):
        out = tmp_path / "s.csv"
        main(["sweep", "--preset", "fig2", "--n-points", "3", "--out", str(out)])
        data = out.read_bytes()
        assert data.splitlines()[0].decode() == ",".join(CSV_HEADER)
        assert b"\r" not in data

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            main(["sweep", "--preset", "fig2", "--n-points", "5", "--out", str(path)])
        assert a.read_bytes() == b.read_bytes()

    def test_parallel_matches_serial(self):
        spec = resolve_spec("fig1", {}, {"n_points": 4})
        assert sweep_csv(run_sweep(spec, jobs=2)) == sweep_csv(run_sweep(spec, jobs=1))

    def test_env_output_dir(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
        assert main(["sweep", "--preset", "fig1", "--n-points", "2"]) == 0
        assert (tmp_path / "sweep_fig1.csv").exists()
        assert str(tmp_path) in capsys.readouterr().out

    def test_degenerate_rows_marked(self, tmp_path):
        out = tmp_path / "d.csv"
        main([
            "sweep", "--family", "symmetric", "--sigma0", "0.3", "--u-min", "0", "--u-max", "1",
            "--n-points", "2", "--detector", "0,0,1", "--selectors", "tau_s", "--out", str(out),
        ])
        rows = _rows(out)
        # at rest the density gradient on the z axis is parallel to the spin
        assert [r["status"] for r in rows] == ["DEGENERATE", "OK"]
        assert rows[0]["tau_s"] == "" and rows[1]["tau_s"]

    def test_log_spacing(self):
        spec = SweepSpec(u_min=1.0, u_max=100.0, n_points=3, spacing="log")
        assert list(spec.velocities()) == pytest.approx([1.0, 10.0, 100.0])


class TestConfig:
    def test_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# fig2 with a coarser tolerance\npreset = fig2\nrel_tol = 1e-6\nn_points = 7\nb = 0.5\n")
        spec = resolve_spec(None, read_config(cfg), {"n_points": 3})
        assert spec.family == "asymmetric"
        assert spec.a == 0.001
        assert spec.b == 0.5
        assert spec.rel_tol == 1e-6
        assert spec.n_points == 3

    def test_flag_preset_beats_config_preset(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("preset = fig2\n")
        spec = resolve_spec(None, read_config(cfg), {"preset": "fig1"})
        assert spec.family == "symmetric" and spec.sigma0 == 0.01

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("velocity = 3\n")
        with pytest.raises(UsageError):
            read_config(cfg)

    def test_missing_equals(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n_points 3\n")
        with pytest.raises(UsageError):
            read_config(cfg)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"u_min": 2.0, "u_max": 1.0},
            {"n_points": 1},
            {"spacing": "log", "u_min": 0.0},
            {"selectors": ("tau_q",)},
            {"family": "cubic"},
            {"family": "asymmetric", "b": 0.0},
        ],
    )
    def test_spec_validation(self, kwargs):
        with pytest.raises(UsageError):
            SweepSpec(**kwargs)


class TestPlotScript:
    def _sweep(self, tmp_path, preset):
        out = tmp_path / f"{preset}.csv"
        main(["sweep", "--preset", preset, "--n-points", "4", "--out", str(out)])
        return out

    def test_fig2_labels(self, tmp_path):
        text = plot_script(self._sweep(tmp_path, "fig2"))
        assert "tau (upper curve)" in text and "tau_i (lower curve)" in text
        compile(text, "plot.py", "exec")

    def test_fig1_single_curve(self, tmp_path):
        text = plot_script(self._sweep(tmp_path, "fig1"))
        assert "('tau_s', 'tau_s')" in text
        assert "upper curve" not in text

    def test_command_writes_file(self, tmp_path):
        script = tmp_path / "plot.py"
        assert main(["plotscript", str(self._sweep(tmp_path, "fig1")), "--out", str(script)]) == 0
        assert "matplotlib" in script.read_text()

    def test_empty_csv_rejected(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text(",".join(CSV_HEADER) + "\n")
        with pytest.raises(SystemExit) as exc:
            main(["plotscript", str(empty), "--out", str(tmp_path / "p.py")])
        assert exc.value.code == 2

    def test_wrong_header_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        with pytest.raises(UsageError):
            plot_script(bad)


def test_validate_exit_code(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert out.rstrip().endswith("checks passed")
    assert "FAIL" not in out


def test_validate_reports_failures(monkeypatch, capsys):
    from spinarrival.currents import CurrentSample, closed_form_current
    from spinarrival.oracle import validation_reports

    def flipped(packet):
        return lambda pt: (lambda c: CurrentSample(c.j_i, -c.j_s, c.rho))(closed_form_current(packet, pt))

    monkeypatch.setattr(cli, "validation_reports", lambda tier: validation_reports(tier, closed_for=flipped))
    assert main(["validate"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_csv_row_formatting():
    row = cli.SweepRow(1.5, "OK", {"tau": 0.5, "norm": 2.0, "t_max_used": math.inf})
    fields = row.csv_fields()
    assert fields[0] == "1.50000000000e+00"
    assert fields[CSV_HEADER.index("t_max_used")] == "inf"
    assert fields[CSV_HEADER.index("tau_s")] == ""
    failed = cli.SweepRow(2.0, "NONCONVERGENT", {"tau": 0.5})
    assert failed.csv_fields()[1:-1] == [""] * (len(CSV_HEADER) - 2)


def test_point_at_moving_center(capsys):
    out = _point_lines(capsys, ["point", "--sigma0", "0.2", "--u", "2", "--at", "1,0,0", "--t", "0.5"])
    assert out["J_s"] == [0.0, 0.0, 0.0]
    assert out["J"][0] == pytest.approx(2.0 * out["rho"][0], rel=1e-12)


def test_point_matches_library(capsys):
    from spinarrival.currents import closed_form_current
    from spinarrival.packets import SpaceTimePoint, SymmetricPacket

    out = _point_lines(capsys, ["point", "--sigma0", "0.01", "--u", "1", "--at", "1,1,1", "--t", "1"])
    ref = closed_form_current(SymmetricPacket(0.01, 1.0), SpaceTimePoint(1.0, 1.0, 1.0, 1.0))
    assert out["J"] == pytest.approx(list(ref.j), rel=1e-11)
    assert out["rho"][0] == pytest.approx(float(ref.rho), rel=1e-11)


def test_fig1_sweep_against_reference():
    from spinarrival.arrival import ComponentSelector, Detector
    from spinarrival.currents import current_source
    from spinarrival.oracle import reference_mean

    spec = resolve_spec("fig1", {}, {"u_min": 1.0, "u_max": 8.0, "n_points": 3})
    for row in run_sweep(spec):
        ref = reference_mean(
            current_source(spec.packet(row.u)), Detector(spec.detector), ComponentSelector.SPIN_ONLY
        )
        assert row.values["tau_s"] == pytest.approx(ref, rel=1e-4)
