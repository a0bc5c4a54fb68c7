import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uwbtbd.scenario import (GroundTruth, ScenarioError, SurveillanceGrid, Target, active_targets,
                             bundled_scenarios, cell_center, cell_of, dump_scenario, ground_truth_at,
                             load_scenario, load_scenario_file, with_cell_size)

from .conftest import MINIMAL_DOC


def test_minimal_document_gets_table_defaults(minimal_spec):
    p = minimal_spec.params
    assert (p.alpha, p.beta, p.window_w, p.stride_s) == (0.75, 2.0, 4, 2)
    assert p.kappa == 10 and p.seed_spacing == (5, 5, 1) and p.gamma_num == 150
    assert (p.smooth_w, p.segment_n, p.nu, p.max_tracklets_per_window) == (3, 10, 3.0, 5)
    assert (p.ospa_cutoff, p.ospa_order, p.gating_distance) == (0.7, 1.0, 0.7)
    assert minimal_spec.layout.n_r == 3


def test_two_sensors_rejected():
    doc = MINIMAL_DOC.replace("[[0.0, 0.0], [4.0, 0.0], [2.0, 3.0]]", "[[0.0, 0.0], [4.0, 0.0]]")
    with pytest.raises(ScenarioError, match="N_R >= 3"):
        load_scenario(doc)


def test_multistatic_without_transmitter_rejected():
    with pytest.raises(ScenarioError, match="transmitter"):
        load_scenario(MINIMAL_DOC.replace("monostatic", "multistatic"))


def test_parse_error_reports_line():
    with pytest.raises(ScenarioError, match="line"):
        load_scenario("grid: {n_x: 4\nsensors: [")


def test_unknown_param_named():
    with pytest.raises(ScenarioError, match="bogus"):
        load_scenario(MINIMAL_DOC + "params: {bogus: 1}\n")


def test_invalid_alpha_named():
    with pytest.raises(ScenarioError, match="alpha"):
        load_scenario(MINIMAL_DOC + "params: {alpha: 1.5}\n")


def test_waypoint_outside_grid_rejected():
    with pytest.raises(ScenarioError, match="outside"):
        load_scenario(MINIMAL_DOC.replace("[10, 3.0, 2.0]", "[10, 30.0, 2.0]"))


def test_round_trip_preserves_everything(minimal_spec):
    again = load_scenario(dump_scenario(minimal_spec), name=minimal_spec.name)
    assert again == minimal_spec


@pytest.mark.parametrize("name", ["exp1_test1", "exp1_test2", "exp2_test1", "exp2_test2"])
def test_bundled_scenarios_load_and_round_trip(name):
    spec = load_scenario_file(name)
    assert spec.grid.shape == (150, 150) and spec.grid.delta_x == 0.1
    assert spec.truth.scan_count == 40 and spec.layout.n_r == 4
    assert (spec.layout.mode == "multistatic") == name.startswith("exp2")
    assert len(spec.truth.targets) == (2 if name.endswith("test1") else 3)
    assert load_scenario(dump_scenario(spec), name=name) == spec


def test_bundled_listing():
    assert bundled_scenarios() == ["exp1_test1", "exp1_test2", "exp2_test1", "exp2_test2"]


def test_missing_scenario_file():
    with pytest.raises(FileNotFoundError):
        load_scenario_file("no_such_scenario")


@pytest.mark.parametrize("cell, delta, expected", [
    ((1, 1), 0.1, (0.05, 0.05)),
    ((5, 3), 0.1, (0.45, 0.25)),
    ((5, 3), 0.2, (0.9, 0.5)),
])
def test_cell_center_examples(cell, delta, expected):
    grid = SurveillanceGrid(10, 10, delta, delta)
    assert cell_center(grid, *cell) == pytest.approx(expected, abs=1e-12)


def test_cell_center_out_of_range():
    with pytest.raises(IndexError):
        cell_center(SurveillanceGrid(10, 10), 11, 1)


@given(n_x=st.integers(1, 60), n_y=st.integers(1, 60), delta=st.sampled_from([0.05, 0.1, 0.2, 0.3]),
       data=st.data())
def test_cell_of_inverts_cell_center(n_x, n_y, delta, data):
    grid = SurveillanceGrid(n_x, n_y, delta, delta)
    i_x = data.draw(st.integers(1, n_x))
    i_y = data.draw(st.integers(1, n_y))
    assert cell_of(grid, *cell_center(grid, i_x, i_y)) == (i_x, i_y)


def _truth(waypoints, k=40):
    return GroundTruth((Target(tuple(waypoints)),), k)


def test_ground_truth_examples():
    truth = _truth([(1, 0.0, 0.0), (3, 2.0, 0.0), (31, 2.0, 5.0)])
    assert ground_truth_at(truth, 3) == [(2.0, 0.0)]
    assert ground_truth_at(truth, 2) == [(1.0, 0.0)]
    assert ground_truth_at(truth, 32) == []
    with pytest.raises(IndexError):
        ground_truth_at(truth, 41)


def test_waypoint_scans_must_increase():
    with pytest.raises(ScenarioError):
        Target(((3, 0.0, 0.0), (3, 1.0, 1.0)))


@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), min_size=2, max_size=6), st.data())
def test_ground_truth_piecewise_linear(points, data):
    scans = sorted(data.draw(st.sets(st.integers(1, 40), min_size=len(points), max_size=len(points))))
    truth = _truth([(s, x, y) for s, (x, y) in zip(scans, points)])
    seg = data.draw(st.integers(0, len(scans) - 2))
    a, c = scans[seg], scans[seg + 1]
    b = data.draw(st.integers(a, c))
    (xa, ya), (xb, yb), (xc, yc) = (active_targets(truth, s)[0] for s in (a, b, c))
    # (xb, yb) lies on segment a-c: collinear and between the endpoints
    cross = (xc - xa) * (yb - ya) - (yc - ya) * (xb - xa)
    assert abs(cross) <= 1e-9 * max(1.0, math.hypot(xc - xa, yc - ya))
    assert min(xa, xc) - 1e-9 <= xb <= max(xa, xc) + 1e-9
    assert min(ya, yc) - 1e-9 <= yb <= max(ya, yc) + 1e-9


def test_with_cell_size_rescales_area_parameters():
    spec = load_scenario_file("exp1_test1")
    coarse = with_cell_size(spec, 0.2)
    assert coarse.grid.shape == (75, 75) and coarse.grid.extent == pytest.approx(spec.grid.extent)
    assert coarse.params.gamma_num == round(spec.params.gamma_num / 4)
    assert coarse.params.seed_spacing[:2] == (round(spec.params.seed_spacing[0] / 2),) * 2
    same = with_cell_size(spec, 0.1)
    assert dataclasses.replace(same, name=spec.name) == spec
