"""Interconnection topology, builtin fields, and constants validation."""

import numpy as np
import pytest

from gridabs.dynamics import (AgentNetwork, ConstantsViolation, DynamicsModel,
                              project_configuration, saturated_consensus,
                              smooth_consensus, validate_constants)


def test_from_edges_symmetric_sorted():
    net = AgentNetwork.from_edges(2, 4, [(2, 0), (1, 2), (3, 2)])
    assert net.neighbors[0] == (2,)
    assert net.neighbors[2] == (0, 1, 3)
    assert net.degree(2) == 3
    assert net.max_degree == 3
    assert net.agent_count == 4


def test_network_rejects_bad_topology():
    with pytest.raises(ValueError):
        AgentNetwork.from_edges(2, 3, [(0, 0)])
    with pytest.raises(ValueError):
        AgentNetwork.from_edges(2, 3, [(0, 3)])
    with pytest.raises(ValueError):
        AgentNetwork(2, ((1,), (0, 0), ()))


def test_project_configuration_order(path_network):
    cells = ((0, 0), (1, 1), (2, 2))
    cfg = project_configuration(path_network, cells, 1)
    assert cfg.agent == 1
    assert cfg.cells == ((1, 1), (0, 0), (2, 2))
    cfg0 = project_configuration(path_network, cells, 0)
    assert cfg0.cells == ((0, 0), (1, 1))


def test_saturated_consensus_linear_region(path_network):
    model = saturated_consensus(path_network, gain=0.5, input_bound=0.5)
    own = np.array([0.001, -0.002])
    nbrs = np.array([[0.003, 0.001], [-0.001, 0.002]])
    # slope is one per neighbor while differences stay below the gain
    expected = (nbrs[0] - own) + (nbrs[1] - own)
    np.testing.assert_allclose(model.evaluator(1)(own, nbrs), expected, atol=1e-15)


def test_saturated_consensus_clips_at_gain(path_network):
    model = saturated_consensus(path_network, gain=0.5, input_bound=0.5)
    own = np.zeros(2)
    nbrs = np.array([[100.0, 0.0]])
    out = model.evaluator(0)(own, nbrs)
    assert np.linalg.norm(out) == pytest.approx(0.5, rel=1e-12)
    # magnitude never exceeds gain * degree
    rng = np.random.default_rng(2)
    pts = rng.normal(scale=50.0, size=(1000, 2, 2))
    vals = model.evaluator(1)(np.zeros(2), pts)
    assert np.max(np.linalg.norm(vals, axis=-1)) <= 2 * 0.5 + 1e-12


def test_saturated_consensus_constants(path_network):
    model = saturated_consensus(path_network, gain=0.5, input_bound=0.3)
    assert model.feedback_bound == pytest.approx(1.0)
    assert model.neighbor_lipschitz == pytest.approx(np.sqrt(2.0))
    assert model.self_lipschitz == pytest.approx(2.0)
    assert model.input_bound == 0.3


def test_smooth_consensus_shape_and_constants(path_network):
    model = smooth_consensus(path_network, gain=2.0, input_bound=0.3, scale=0.1)
    assert model.feedback_bound == pytest.approx(0.4)
    assert model.neighbor_lipschitz == pytest.approx(0.1 * np.sqrt(2.0))
    assert model.self_lipschitz == pytest.approx(0.2)
    own = np.zeros(2)
    # odd in the difference and bounded by scale * gain per neighbor
    out = model.evaluator(0)(own, np.array([[1000.0, 0.0]]))
    assert out[0] < 0.1 * 2.0
    assert out[0] == pytest.approx(0.1 * 2.0, rel=1e-4)
    small = model.evaluator(0)(own, np.array([[1e-6, 0.0]]))
    assert small[0] == pytest.approx(0.1 * 1e-6, rel=1e-9)


def test_feedback_stacks_agents(path_network):
    model = saturated_consensus(path_network, gain=0.5, input_bound=0.5)
    states = np.array([[0.0, 0.0], [0.01, 0.0], [0.02, 0.0]])
    np.testing.assert_allclose(model.feedback(0, states),
                               model.evaluator(0)(states[0], states[[1]]))
    np.testing.assert_allclose(model.feedback(1, states),
                               model.evaluator(1)(states[1], states[[0, 2]]))


def test_input_bound_must_be_below_feedback_bound(path_network):
    with pytest.raises(ValueError):
        saturated_consensus(path_network, gain=0.5, input_bound=1.0)
    with pytest.raises(ValueError):
        saturated_consensus(path_network, gain=0.5, input_bound=0.0)


def test_validate_constants_passes_reference(ref_model):
    report = validate_constants(ref_model, trials=2000, seed=3)
    assert report.ok
    assert report.trials == 2000
    assert report.worst_bound_ratio <= 1.0 + 1e-9
    # the self block attains its constant exactly, up to roundoff
    assert report.worst_self_ratio == pytest.approx(1.0, abs=1e-10)


def test_validate_constants_catches_understated_lipschitz(path_network):
    good = saturated_consensus(path_network, gain=0.5, input_bound=0.5)
    broken = DynamicsModel(path_network, good.evaluators,
                           feedback_bound=good.feedback_bound,
                           neighbor_lipschitz=good.neighbor_lipschitz,
                           self_lipschitz=0.5 * good.self_lipschitz,
                           input_bound=good.input_bound)
    with pytest.raises(ConstantsViolation) as info:
        validate_constants(broken, trials=500, seed=0)
    assert info.value.ratio > 1.0
    assert info.value.kind == "self_lipschitz"
    assert info.value.agent in (0, 1, 2)


def test_validate_constants_catches_understated_bound(path_network):
    good = saturated_consensus(path_network, gain=0.5, input_bound=0.1)
    broken = DynamicsModel(path_network, good.evaluators,
                           feedback_bound=0.2 * good.feedback_bound,
                           neighbor_lipschitz=good.neighbor_lipschitz,
                           self_lipschitz=good.self_lipschitz,
                           input_bound=good.input_bound)
    with pytest.raises(ConstantsViolation):
        validate_constants(broken, trials=500, sample_radius=5.0, seed=0)


def test_constants_only_model(path_network):
    model = DynamicsModel(path_network, None, feedback_bound=1.0,
                          neighbor_lipschitz=1.0, self_lipschitz=1.0,
                          input_bound=0.5)
    with pytest.raises(RuntimeError):
        model.evaluator(0)
