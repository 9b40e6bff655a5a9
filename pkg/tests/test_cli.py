import subprocess
import sys

import numpy as np
import pytest

from contactplan.cli import CSV_HEADER, StepRecord, emit_csv, read_csv, run
from contactplan.plots import emit_plots


def synthetic_records(count=3, gamma=(0.0, 0.0)):
    records = []
    for i in range(count):
        records.append(StepRecord(
            step=i,
            object_position=np.array([0.0, 0.45 + 0.05 * i]),
            waypoint=np.array([0.0, 0.45 + 0.05 * i]),
            zmp=np.array([0.001 * i, 0.12]),
            fzmp=np.array([0.0, 0.18]),
            gamma=np.array(gamma, dtype=float),
            beta=np.array([-2.0, -1.1]),
            gap=np.array([0.0, 0.0]),
            support_force_norm=float(np.hypot(*gamma)),
            torque_norm=3.5 + i,
            iterations=5,
            cost=1.25 * i,
            slack=1e-7,
            distance=0.45 + 0.05 * i,
            theta=np.zeros(8),
        ))
    return records


class TestEmitCsv:
    def test_header_and_row_count(self, tmp_path):
        path = tmp_path / "trace.csv"
        emit_csv(synthetic_records(9), str(path))
        lines = path.read_text().splitlines()
        assert len(lines) == 10
        assert lines[0] == CSV_HEADER

    def test_no_contact_rows_write_zero_gamma(self, tmp_path):
        path = tmp_path / "trace.csv"
        emit_csv(synthetic_records(1, gamma=(0.0, 0.0)), str(path))
        row = path.read_text().splitlines()[1].split(",")
        header = CSV_HEADER.split(",")
        assert float(row[header.index("gamma_1")]) == 0.0
        assert float(row[header.index("gamma_2")]) == 0.0

    def test_round_trip_exact(self, tmp_path):
        path = tmp_path / "trace.csv"
        records = synthetic_records(4, gamma=(12.25, 8.5))
        emit_csv(records, str(path))
        parsed = read_csv(str(path))
        assert len(parsed) == len(records)
        for a, b in zip(records, parsed):
            assert a.step == b.step
            np.testing.assert_array_equal(a.object_position, b.object_position)
            np.testing.assert_array_equal(a.zmp, b.zmp)
            np.testing.assert_array_equal(a.gamma, b.gamma)
            assert a.cost == b.cost and a.slack == b.slack
            assert a.distance == b.distance

    def test_empty_records_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_csv([], str(tmp_path / "x.csv"))


class TestEmitPlots:
    def test_three_files(self, tmp_path, step_records, default_config):
        paths = emit_plots(step_records, default_config, str(tmp_path))
        assert len(paths) == 3
        names = sorted(p.split("/")[-1] for p in paths)
        assert names == ["forces.svg", "path.svg", "zmp.svg"]
        for path in paths:
            content = open(path).read()
            assert content.startswith("<svg")
            assert content.rstrip().endswith("</svg>")

    def test_zmp_plot_contains_safe_circle(self, tmp_path, step_records,
                                           default_config):
        emit_plots(step_records, default_config, str(tmp_path))
        content = (tmp_path / "zmp.svg").read_text()
        expected_radius = 0.15 * _zmp_scale(step_records, default_config)
        assert f'r="{expected_radius:.4f}"' in content

    def test_deterministic_bytes(self, tmp_path, step_records, default_config):
        emit_plots(step_records, default_config, str(tmp_path / "a"))
        emit_plots(step_records, default_config, str(tmp_path / "b"))
        for name in ("path.svg", "zmp.svg", "forces.svg"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()

    def test_empty_records_rejected(self, tmp_path, default_config):
        with pytest.raises(ValueError):
            emit_plots([], default_config, str(tmp_path))
        assert not list(tmp_path.iterdir())


def _zmp_scale(records, config):
    from contactplan.plots import _Canvas
    poly = config.sp_polygon
    pts = np.vstack([poly, [r.zmp for r in records], [r.fzmp for r in records]])
    box = (pts[:, 0].min() - 0.05, pts[:, 1].min() - 0.05,
           pts[:, 0].max() + 0.05, pts[:, 1].max() + 0.05)
    return _Canvas(640, 640, box).scale


class TestRun:
    def test_default_scenario_csv(self, tmp_path):
        csv_path = tmp_path / "trace.csv"
        assert run(["--scenario", "default", "--csv", str(csv_path)]) == 0
        rows = read_csv(str(csv_path))
        assert len(rows) == 9

    def test_svg_output(self, tmp_path):
        out = tmp_path / "plots"
        assert run(["--svg", str(out)]) == 0
        assert sorted(p.name for p in out.iterdir()) == \
            ["forces.svg", "path.svg", "zmp.svg"]

    def test_single_waypoint_rest_scenario(self, tmp_path):
        scenario = tmp_path / "light.yaml"
        scenario.write_text("task:\n  object_wrench: [0, 0, 0, 0, 0, 0]\n")
        csv_path = tmp_path / "one.csv"
        assert run(["--scenario", str(scenario), "--waypoints", "1",
                    "--csv", str(csv_path)]) == 0
        rows = read_csv(str(csv_path))
        assert len(rows) == 1
        np.testing.assert_allclose(rows[0].object_position, rows[0].waypoint,
                                   atol=1e-6)

    def test_bad_flags_exit_2(self, capsys):
        assert run(["--no-such-flag"]) == 2
        assert "usage" in capsys.readouterr().err

    def test_missing_scenario_exit_1(self, tmp_path):
        assert run(["--scenario", str(tmp_path / "nope.yaml")]) == 1

    def test_invalid_scenario_exit_1(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("balance:\n  safe_radius: -2.0\n")
        assert run(["--scenario", str(bad)]) == 1

    def test_failing_plan_exit_nonzero(self, tmp_path):
        assert run(["--max-iters", "1"]) == 1

    def test_tolerance_override(self, tmp_path):
        csv_path = tmp_path / "loose.csv"
        assert run(["--tol", "1e-5", "--csv", str(csv_path)]) == 0
        assert len(read_csv(str(csv_path))) == 9

    def test_zmp_rows_inside_safe_circle(self, tmp_path, default_config):
        csv_path = tmp_path / "trace.csv"
        assert run(["--csv", str(csv_path)]) == 0
        for row in read_csv(str(csv_path)):
            dist = np.linalg.norm(row.zmp - default_config.sp_center)
            assert dist <= default_config.safe_radius + 1e-6

    def test_module_entry_point(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "contactplan", "--csv",
             str(tmp_path / "m.csv")],
            capture_output=True, text=True, timeout=300)
        assert result.returncode == 0
        assert result.stdout == ""  # data streams stay machine-clean
        assert (tmp_path / "m.csv").exists()
