"""Agent networks and interconnection feedback with declared global constants.

A model carries, per agent i, a feedback evaluator f_i(x_i, x_{j_1}, ...,
x_{j_m}) together with constants that bound it globally:

* ``feedback_bound``: |f_i| <= feedback_bound everywhere,
* ``neighbor_lipschitz``: Lipschitz constant of f_i in the stacked neighbor
  block for fixed own state,
* ``self_lipschitz``: Lipschitz constant in the own state for fixed neighbors,
* ``input_bound``: magnitude budget for the free input added on top of f_i;
  must be strictly smaller than ``feedback_bound``.

Evaluators take ``(own, neighbors)`` with shapes ``(..., n)`` and
``(..., m, n)`` and must broadcast over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CellConfiguration

_TINY = np.finfo(float).tiny

# Observed Lipschitz quotients can exceed the declared constant by float
# roundoff (the saturated-consensus self block attains it exactly), so a
# counterexample requires this much relative excess.
RATIO_EXCESS = 1e-9


class ConstantsViolation(RuntimeError):
    """A sampled state falsified one of the declared constants."""

    def __init__(self, kind, ratio, agent, witness):
        super().__init__(f"declared constant {kind!r} violated at agent {agent}: "
                         f"observed ratio {ratio:.6g} > 1")
        self.kind = kind
        self.ratio = ratio
        self.agent = agent
        self.witness = witness


@dataclass(frozen=True)
class AgentNetwork:
    """Directed neighbor structure of N agents with states in R^n.

    ``neighbors[i]`` is the ordered tuple of agents whose states enter f_i.
    """

    dimension: int
    neighbors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "dimension", int(self.dimension))
        object.__setattr__(self, "neighbors",
                           tuple(tuple(int(j) for j in row) for row in self.neighbors))
        if self.dimension < 1:
            raise ValueError("state dimension must be at least 1")
        count = len(self.neighbors)
        if count < 1:
            raise ValueError("network needs at least one agent")
        for i, row in enumerate(self.neighbors):
            for j in row:
                if not 0 <= j < count:
                    raise ValueError(f"agent {i} lists unknown neighbor {j}")
                if j == i:
                    raise ValueError(f"agent {i} lists itself as a neighbor")
            if len(set(row)) != len(row):
                raise ValueError(f"agent {i} lists a neighbor twice")

    @classmethod
    def from_edges(cls, dimension, agent_count, edges):
        """Build a symmetric network from undirected edges, neighbors sorted."""
        rows = [set() for _ in range(agent_count)]
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError("self loops are not allowed")
            if not (0 <= a < agent_count and 0 <= b < agent_count):
                raise ValueError(f"edge ({a}, {b}) references an unknown agent")
            rows[a].add(b)
            rows[b].add(a)
        return cls(dimension, tuple(tuple(sorted(r)) for r in rows))

    @property
    def agent_count(self) -> int:
        return len(self.neighbors)

    def degree(self, agent) -> int:
        return len(self.neighbors[agent])

    @property
    def max_degree(self) -> int:
        return max(len(row) for row in self.neighbors)


class DynamicsModel:
    """Per-agent interconnection feedback plus its declared constants.

    ``evaluators`` may be None for a constants-only model (admissibility
    arithmetic works, trajectory evaluation does not).
    """

    def __init__(self, network, evaluators, feedback_bound, neighbor_lipschitz,
                 self_lipschitz, input_bound):
        feedback_bound = float(feedback_bound)
        neighbor_lipschitz = float(neighbor_lipschitz)
        self_lipschitz = float(self_lipschitz)
        input_bound = float(input_bound)
        if not (feedback_bound > 0.0 and np.isfinite(feedback_bound)):
            raise ValueError("feedback_bound must be positive and finite")
        if neighbor_lipschitz < 0.0 or self_lipschitz < 0.0:
            raise ValueError("Lipschitz constants must be nonnegative")
        if not (0.0 < input_bound < feedback_bound):
            raise ValueError("input_bound must satisfy 0 < input_bound < feedback_bound")
        if evaluators is not None:
            evaluators = tuple(evaluators)
            if len(evaluators) != network.agent_count:
                raise ValueError("need one evaluator per agent")
        self.network = network
        self.evaluators = evaluators
        self.feedback_bound = feedback_bound
        self.neighbor_lipschitz = neighbor_lipschitz
        self.self_lipschitz = self_lipschitz
        self.input_bound = input_bound

    def evaluator(self, agent):
        if self.evaluators is None:
            raise RuntimeError("model declares constants only and has no evaluators")
        return self.evaluators[agent]

    def feedback(self, agent, states) -> np.ndarray:
        """Evaluate f_agent on stacked states shaped ``(..., N, n)``."""
        states = np.asarray(states, dtype=float)
        net = self.network
        if states.shape[-2:] != (net.agent_count, net.dimension):
            raise ValueError(f"expected states shaped (..., {net.agent_count}, "
                             f"{net.dimension}), got {states.shape}")
        if not np.all(np.isfinite(states)):
            raise ValueError("states have non-finite entries")
        own = states[..., agent, :]
        nbrs = states[..., list(net.neighbors[agent]), :]
        return self.evaluator(agent)(own, nbrs)


def _radial_clip(diffs, gain):
    # Projection of each difference vector onto the closed ball B(gain).
    r = np.linalg.norm(diffs, axis=-1, keepdims=True)
    return diffs * np.minimum(1.0, gain / np.maximum(r, _TINY))


def saturated_consensus(network, gain, input_bound):
    """Consensus feedback f_i = sum_k sat_gain(x_{j_k} - x_i).

    sat_gain is the radial projection onto the ball of radius ``gain`` (hence
    1-Lipschitz), giving feedback_bound = gain * maxdeg, neighbor_lipschitz =
    sqrt(maxdeg), self_lipschitz = maxdeg.
    """
    gain = float(gain)
    if gain <= 0.0:
        raise ValueError("gain must be positive")
    maxdeg = network.max_degree
    if maxdeg == 0:
        raise ValueError("saturated consensus needs at least one edge")

    def evaluate(own, nbrs):
        return _radial_clip(nbrs - own[..., None, :], gain).sum(axis=-2)

    return DynamicsModel(network, (evaluate,) * network.agent_count,
                         feedback_bound=gain * maxdeg,
                         neighbor_lipschitz=float(np.sqrt(maxdeg)),
                         self_lipschitz=float(maxdeg),
                         input_bound=input_bound)


def smooth_consensus(network, gain, input_bound, scale=1.0):
    """Consensus feedback with a smooth radial saturation.

    f_i = scale * sum_k g(x_{j_k} - x_i) with g(v) = v / sqrt(1 + |v|^2/gain^2),
    so |g| < gain and g is 1-Lipschitz. Same constants structure as
    ``saturated_consensus`` scaled by ``scale``. The field is C^inf, which
    makes integrator-order measurements meaningful.
    """
    gain = float(gain)
    scale = float(scale)
    if gain <= 0.0 or scale <= 0.0:
        raise ValueError("gain and scale must be positive")
    maxdeg = network.max_degree
    if maxdeg == 0:
        raise ValueError("smooth consensus needs at least one edge")

    def evaluate(own, nbrs):
        diffs = nbrs - own[..., None, :]
        r2 = np.sum(diffs * diffs, axis=-1, keepdims=True)
        return scale * (diffs / np.sqrt(1.0 + r2 / gain**2)).sum(axis=-2)

    return DynamicsModel(network, (evaluate,) * network.agent_count,
                         feedback_bound=scale * gain * maxdeg,
                         neighbor_lipschitz=scale * float(np.sqrt(maxdeg)),
                         self_lipschitz=scale * float(maxdeg),
                         input_bound=input_bound)


def project_configuration(network, cells, agent) -> CellConfiguration:
    """Restrict a global cell assignment to (own cell, neighbor cells) for one agent."""
    cells = tuple(tuple(int(c) for c in z) for z in cells)
    if len(cells) != network.agent_count:
        raise ValueError(f"expected {network.agent_count} cells, got {len(cells)}")
    picked = (cells[agent],) + tuple(cells[j] for j in network.neighbors[agent])
    return CellConfiguration(agent=agent, cells=picked)


@dataclass(frozen=True)
class ValidationReport:
    """Worst observed constant ratios over the sampled battery (all should be <= 1)."""

    trials: int
    worst_bound_ratio: float
    worst_neighbor_ratio: float
    worst_self_ratio: float

    @property
    def ok(self) -> bool:
        worst = max(self.worst_bound_ratio, self.worst_neighbor_ratio, self.worst_self_ratio)
        return worst <= 1.0 + RATIO_EXCESS


def _uniform_ball(rng, count, dim, radius):
    direction = rng.normal(size=(count, dim))
    direction /= np.maximum(np.linalg.norm(direction, axis=-1, keepdims=True), _TINY)
    r = radius * rng.uniform(0.0, 1.0, size=(count, 1)) ** (1.0 / dim)
    return direction * r


def validate_constants(model, trials=10000, sample_radius=1.0, seed=0) -> ValidationReport:
    """Sample-test the declared constants; raise ConstantsViolation on a witness.

    Draws random state tuples in a ball of ``sample_radius`` per agent and
    difference-quotient pairs from single-coordinate perturbations at several
    scales, tracking |f_i| / feedback_bound and the two Lipschitz quotients.
    """
    rng = np.random.default_rng(seed)
    net = model.network
    count, dim = net.agent_count, net.dimension
    scales = (1e-3, 1e-1, 1.0, float(sample_radius))

    worst = {"feedback_bound": 0.0, "neighbor_lipschitz": 0.0, "self_lipschitz": 0.0}

    def track(kind, ratios, agent, states, perturbed):
        k = int(np.argmax(ratios))
        if ratios[k] > worst[kind]:
            worst[kind] = float(ratios[k])
        if ratios[k] > 1.0 + RATIO_EXCESS:
            witness = {"states": states[k], "perturbed": None if perturbed is None else perturbed[k]}
            raise ConstantsViolation(kind, float(ratios[k]), agent, witness)

    states = np.stack([_uniform_ball(rng, trials, dim, sample_radius)
                       for _ in range(count)], axis=1)  # (T, N, n)
    for i in range(count):
        ev = model.evaluator(i)
        m = net.degree(i)
        own = states[:, i]
        nbrs = states[:, list(net.neighbors[i]), :]
        base = ev(own, nbrs)

        ratios = np.linalg.norm(base, axis=-1) / model.feedback_bound
        track("feedback_bound", ratios, i, states, None)

        for scale in scales:
            if m > 0 and model.neighbor_lipschitz > 0.0:
                delta = np.zeros_like(nbrs)
                rows = np.arange(trials)
                which = rng.integers(0, m, size=trials)
                axis = rng.integers(0, dim, size=trials)
                mag = scale * rng.uniform(0.5, 1.0, size=trials) * rng.choice((-1.0, 1.0), size=trials)
                delta[rows, which, axis] = mag
                moved = ev(own, nbrs + delta)
                quot = np.linalg.norm(moved - base, axis=-1) / np.abs(mag)
                track("neighbor_lipschitz", quot / model.neighbor_lipschitz, i,
                      states, nbrs + delta)
            if model.self_lipschitz > 0.0:
                step = scale * rng.uniform(0.5, 1.0, size=(trials, 1))
                direction = rng.normal(size=(trials, dim))
                direction /= np.maximum(np.linalg.norm(direction, axis=-1, keepdims=True), _TINY)
                moved = ev(own + step * direction, nbrs)
                quot = np.linalg.norm(moved - base, axis=-1) / step[:, 0]
                track("self_lipschitz", quot / model.self_lipschitz, i,
                      states, own + step * direction)

    return ValidationReport(trials=trials,
                            worst_bound_ratio=worst["feedback_bound"],
                            worst_neighbor_ratio=worst["neighbor_lipschitz"],
                            worst_self_ratio=worst["self_lipschitz"])
