import csv
import json

import numpy as np
import pytest

from minimax_egm import BoxRegion, Point, Status, make_quadratic, make_quartic
from minimax_egm.experiments import (
    SWEEP_HEADER,
    TIGHTNESS_HEADER,
    SweepSpec,
    approx_order_study,
    approximation_order_fit,
    figure1_experiment,
    is_cycling,
    run_sweep,
    tightness_scan,
    worker_count,
    write_sweep_csv,
    write_tightness_csv,
)
from minimax_egm.io import OutputExists, fmt


def test_fmt_round_trips():
    x = 0.1 + 0.2
    assert float(fmt(x)) == x
    assert fmt(True) == "true" and fmt(None) == "" and fmt(float("inf")) == "inf"


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("MINIMAX_EGM_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("MINIMAX_EGM_THREADS", "junk")
    assert worker_count() == 1


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec([], [0.1], [Point([0.0], [0.0])])
    with pytest.raises(ValueError):
        SweepSpec([0.1], [1.5], [Point([0.0], [0.0])])


def test_sweep_rows_are_ordered(tmp_path):
    p = make_quadratic(0.1, 10.0)
    starts = [Point([1.0], [0.0]), Point([0.0], [1.0])]
    spec = SweepSpec([0.05, 0.02], [0.5, 0.1], starts, budget=2000)
    rows = run_sweep(p, spec, BoxRegion.cube(-1.0, 1.0, 2))
    keys = [(r.s, r.lam, r.start_idx) for r in rows]
    assert keys == sorted(keys) and len(rows) == 8
    assert all(r.alpha == pytest.approx(-0.1 + r.s * 100 / (1 - 0.1 * r.s)) for r in rows)
    write_sweep_csv(tmp_path / "sweep.csv", rows)
    with open(tmp_path / "sweep.csv") as fh:
        data = list(csv.reader(fh))
    assert data[0] == SWEEP_HEADER
    assert float(data[1][0]) == 0.02


def test_sweep_marks_invalid_step():
    p = make_quartic()
    spec = SweepSpec([0.06], [0.01], [Point([1.0], [1.0])], budget=10)
    (row,) = run_sweep(p, spec, BoxRegion.cube(-1.0, 1.0, 2, 5))
    assert row.status is None and row.error == "StepTooLarge"
    assert row.csv_row()[8] == "error:StepTooLarge"


def test_is_cycling():
    assert is_cycling(Status.MAX_ITER, 5.0, 0.5, 1.0)
    assert not is_cycling(Status.CONVERGED, 5.0, 0.5, 1.0)
    assert not is_cycling(Status.MAX_ITER, 11.0, 0.5, 1.0)
    assert not is_cycling(Status.MAX_ITER, 5.0, 0.05, 1.0)


def test_figure1_small_grid(tmp_path):
    grid = BoxRegion.cube(-4.0, 4.0, 2, 3)
    res = figure1_experiment(start_grid=grid, out_dir=tmp_path, constants_grid=9)
    assert res.passed, res.failures
    damped = res.variant("damped")
    assert len(damped) == 9 and all(r.row.status is Status.CONVERGED for r in damped)
    centre = [r for r in res.variant("vanilla") if r.at_stationary]
    assert len(centre) == 1 and centre[0].row.iterations == 0
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["published_interval_asserted"] is False
    assert (tmp_path / "trajectories" / "vanilla_start008.csv").exists()
    with pytest.raises(OutputExists):
        figure1_experiment(start_grid=grid, out_dir=tmp_path, constants_grid=9)


def test_tightness_small_grid(tmp_path):
    res = tightness_scan(s_values=[1e-3, 0.02, 0.15], lambda_values=[0.1, 1.0], budget=20_000)
    assert res.passed, res.failures
    assert len(res.rows) == 6
    write_tightness_csv(tmp_path / "t.csv", res.rows)
    with open(tmp_path / "t.csv") as fh:
        assert next(csv.reader(fh)) == TIGHTNESS_HEADER


def test_approx_order_fit_validation():
    p = make_quadratic(0.1, 10.0)
    z = Point([1.0], [1.0])
    with pytest.raises(ValueError):
        approximation_order_fit(p, z, 0.5, [1e-2, 5e-3, 2.5e-3])
    with pytest.raises(ValueError):
        approximation_order_fit(p, z, 0.5, [1e-3, 2e-3, 4e-3, 8e-3])
    with pytest.raises(ValueError):
        approximation_order_fit(p, Point([0.0], [0.0]), 0.5, [1e-2, 5e-3, 2.5e-3, 1.25e-3])


def test_approx_order_quadratic():
    study = approx_order_study("quadratic")
    assert study.slope >= 2.5
    assert np.all(np.diff(study.gaps) < 0)
