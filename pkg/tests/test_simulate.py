"""Closed-loop integration against the reference trajectories."""

import dataclasses

import numpy as np
import pytest

import gridabs as ga
from gridabs.controller import ControllerBank
from gridabs.dynamics import project_configuration
from gridabs.geometry import CellConfiguration
from gridabs.simulate import (InputBoundViolation, check_input_bound,
                              check_linear_interpolation, integrate_closed_loop,
                              integrate_closed_loop_batch)


def make_controllers(model, grid, params, cells, rng=None, substeps=64):
    out = []
    for i in range(model.network.agent_count):
        cfg = project_configuration(model.network, cells, i)
        refs = None
        if rng is not None:
            refs = np.array([grid.sample_in_cell(z, rng)[0] for z in cfg.cells])
        out.append(ga.HybridController(model, grid, params, cfg,
                                       reference_points=refs, substeps=substeps))
    return out


@pytest.fixture()
def joint_setup(ref_model, ref_grid, ref_params):
    cells = ((0, 0), (1, 0), (1, 1))
    controllers = make_controllers(ref_model, ref_grid, ref_params, cells)
    rng = np.random.default_rng(8)
    x0 = np.stack([ref_grid.sample_in_cell(z, rng)[0] for z in cells])
    return cells, controllers, x0


def test_endpoints_match_reference(joint_setup, ref_model, ref_grid):
    cells, controllers, x0 = joint_setup
    trajectory, report = integrate_closed_loop(ref_model, controllers, x0,
                                               substeps=64)
    for i, c in enumerate(controllers):
        np.testing.assert_allclose(trajectory.states[-1, i], c.endpoint, atol=1e-12)
        assert ref_grid.cell_of(trajectory.states[-1, i]) == c.target_cell()
    assert max(report.endpoint_deviation) <= 1e-12
    assert max(report.interpolation_deviation) <= 1e-12
    assert all(report.containment_ok)
    assert max(report.max_input) <= ref_model.input_bound + 1e-12


def test_interpolation_identity_holds_along_the_run(joint_setup, ref_model):
    cells, controllers, x0 = joint_setup
    trajectory, _ = integrate_closed_loop(ref_model, controllers, x0, substeps=64)
    residuals = check_linear_interpolation(trajectory, controllers)
    assert residuals.shape == (3,)
    assert residuals.max() <= 1e-12


def test_initial_state_must_match_declared_cell(joint_setup, ref_model):
    cells, controllers, x0 = joint_setup
    shifted = x0.copy()
    shifted[0] += 10.0
    with pytest.raises(ValueError):
        integrate_closed_loop(ref_model, controllers, shifted, substeps=16)


def test_neighbor_declarations_must_agree(ref_model, ref_grid, ref_params):
    cells = ((0, 0), (1, 0), (1, 1))
    controllers = make_controllers(ref_model, ref_grid, ref_params, cells)
    # agent 0 declares a neighbor cell that agent 1 does not occupy
    wrong = CellConfiguration(agent=0, cells=((0, 0), (-1, -1)))
    controllers[0] = ga.HybridController(ref_model, ref_grid, ref_params, wrong,
                                         substeps=64)
    rng = np.random.default_rng(8)
    x0 = np.stack([ref_grid.sample_in_cell(z, rng)[0] for z in cells])
    with pytest.raises(ValueError):
        integrate_closed_loop(ref_model, controllers, x0, substeps=16)


def test_controllers_must_share_the_period(ref_model, ref_grid, ref_params):
    cells = ((0, 0), (1, 0), (1, 1))
    controllers = make_controllers(ref_model, ref_grid, ref_params, cells)
    other = dataclasses.replace(ref_params, period=0.025)
    cfg = project_configuration(ref_model.network, cells, 2)
    controllers[2] = ga.HybridController(ref_model, ref_grid, other, cfg,
                                         substeps=64)
    rng = np.random.default_rng(8)
    x0 = np.stack([ref_grid.sample_in_cell(z, rng)[0] for z in cells])
    with pytest.raises(ValueError):
        integrate_closed_loop(ref_model, controllers, x0, substeps=16)


def test_trajectory_shapes(joint_setup, ref_model):
    cells, controllers, x0 = joint_setup
    trajectory, _ = integrate_closed_loop(ref_model, controllers, x0, substeps=32)
    assert trajectory.times.shape == (33,)
    assert trajectory.states.shape == (33, 3, 2)
    assert trajectory.input_magnitudes.shape == (33, 3)
    assert trajectory.times[0] == 0.0
    assert trajectory.times[-1] == controllers[0].period


def test_input_bound_checker_flags_tight_budget(joint_setup, ref_model, ref_params):
    cells, controllers, x0 = joint_setup
    trajectory, report = integrate_closed_loop(ref_model, controllers, x0,
                                               substeps=32)
    maxima = check_input_bound(trajectory, ref_params)
    np.testing.assert_allclose(maxima, report.max_input, rtol=1e-12)
    squeezed = dataclasses.replace(ref_params, input_bound=0.5 * max(maxima))
    with pytest.raises(InputBoundViolation) as info:
        check_input_bound(trajectory, squeezed)
    assert info.value.magnitude > squeezed.input_bound
    assert 0.0 <= info.value.time <= ref_params.period


def test_batch_matches_single_runs(ref_model, ref_grid, ref_params):
    rng = np.random.default_rng(15)
    B = 6
    cells = [tuple(tuple(int(v) for v in rng.integers(-1, 2, 2)) for _ in range(3))
             for _ in range(B)]
    banks = []
    for i in range(3):
        member_cells = [project_configuration(ref_model.network, cells[b], i).cells
                        for b in range(B)]
        refs = np.array([[ref_grid.sample_in_cell(z, rng)[0] for z in mc]
                         for mc in member_cells])
        banks.append(ControllerBank(ref_model, ref_grid, ref_params, i,
                                    member_cells, refs, substeps=32))
    x0 = np.stack([np.stack([ref_grid.sample_in_cell(cells[b][i], rng)[0]
                             for i in range(3)]) for b in range(B)])
    batched, reports = integrate_closed_loop_batch(ref_model, banks, x0,
                                                   substeps=32)
    assert batched.states.shape == (33, B, 3, 2)
    assert len(reports) == B
    for b in range(B):
        singles = [ga.HybridController(
            ref_model, ref_grid, ref_params,
            CellConfiguration(i, tuple(banks[i].configurations[b])),
            reference_points=banks[i].reference_points[b], substeps=32)
            for i in range(3)]
        single, _ = integrate_closed_loop(ref_model, singles, x0[b], substeps=32)
        np.testing.assert_allclose(batched.states[:, b], single.states, atol=1e-14)


def test_closed_loop_is_deterministic(joint_setup, ref_model):
    cells, controllers, x0 = joint_setup
    a, _ = integrate_closed_loop(ref_model, controllers, x0, substeps=32)
    b, _ = integrate_closed_loop(ref_model, controllers, x0, substeps=32)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.input_magnitudes, b.input_magnitudes)
