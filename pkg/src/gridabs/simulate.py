"""Closed-loop integration of all agents under their hybrid controllers.

Every agent runs its own controller simultaneously; the integrator samples
the true coupled dynamics (feedback term plus controller) on a fixed uniform
substep grid and logs, at every knot, each agent's applied input magnitude
and whether it still lies in its declared cell inflated by the reach radius.

The integration is fixed-step classical RK4: identical inputs and substep
counts give bit-identical trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controller import ControllerBank, HybridController, DEFAULT_SUBSTEPS
from .geometry import box_distance, DISTANCE_ATOL

# Slack on the input-magnitude certificate |k| <= input_bound.
INPUT_ATOL = 1e-12


class IntegrationError(RuntimeError):
    """The closed-loop state left the representable range."""


class InputBoundViolation(RuntimeError):
    """Logged input magnitude exceeded the declared input budget."""

    def __init__(self, agent, time, magnitude, bound):
        super().__init__(f"agent {agent} applied |input| = {magnitude:.6g} > "
                         f"{bound:.6g} at t = {time:.6g}")
        self.agent = agent
        self.time = time
        self.magnitude = magnitude


@dataclass(frozen=True)
class Trajectory:
    """Knot times, states, and per-knot monitor samples for one run.

    ``states`` is (K+1, N, n) for a single run; the batched integrator
    returns (K+1, B, N, n) with matching leading axes on the monitor arrays.
    """

    times: np.ndarray
    states: np.ndarray
    input_magnitudes: np.ndarray
    contained: np.ndarray


@dataclass(frozen=True)
class MonitorReport:
    """Per-agent summary of one closed-loop run.

    ``containment_ok`` covers the knots strictly before the period's end;
    ``endpoint_deviation`` is the distance between the realized endpoint and
    the controller's reference endpoint; ``interpolation_deviation`` is the
    worst knot residual of the linear-homing identity
    x_i(t) = ref_i(t) + (1 - t/period) * (x_i(0) - ref_i(0)).
    """

    max_input: np.ndarray
    containment_ok: np.ndarray
    endpoint_deviation: np.ndarray
    interpolation_deviation: np.ndarray

    @staticmethod
    def merge(reports):
        """Worst-case fold of several reports (maxima, containment AND)."""
        reports = list(reports)
        return MonitorReport(
            max_input=np.max([r.max_input for r in reports], axis=0),
            containment_ok=np.min([r.containment_ok for r in reports], axis=0).astype(bool),
            endpoint_deviation=np.max([r.endpoint_deviation for r in reports], axis=0),
            interpolation_deviation=np.max([r.interpolation_deviation for r in reports], axis=0),
        )


def _as_bank(controller) -> ControllerBank:
    if isinstance(controller, HybridController):
        return controller._bank
    if isinstance(controller, ControllerBank):
        return controller
    raise TypeError(f"expected a controller, got {type(controller).__name__}")


def _member(values, b):
    # bank arrays are stacked (B_i, ...); size-1 banks broadcast
    return values[b if len(values) > 1 else 0]


def _check_setup(model, banks, batch):
    net = model.network
    if len(banks) != net.agent_count:
        raise ValueError(f"need one controller per agent ({net.agent_count}), "
                         f"got {len(banks)}")
    grid = banks[0].grid
    period = banks[0].period
    for i, bank in enumerate(banks):
        if bank.agent != i:
            raise ValueError(f"controller at position {i} is for agent {bank.agent}")
        if bank.size not in (1, batch):
            raise ValueError(f"agent {i} bank has size {bank.size}, expected 1 or {batch}")
        if bank.period != period:
            raise ValueError("controllers disagree on the period")
        g = bank.grid
        if (g.dimension != grid.dimension or g.side != grid.side
                or not np.array_equal(g.origin, grid.origin)):
            raise ValueError("controllers disagree on the grid")
    # the declared cells must project from one global configuration per run
    for b in range(batch):
        own = [_member(bank.configurations, b)[0] for bank in banks]
        for i, bank in enumerate(banks):
            declared = _member(bank.configurations, b)[1:]
            expected = tuple(own[j] for j in net.neighbors[i])
            if tuple(declared) != expected:
                raise ValueError(f"agent {i} declares neighbor cells {tuple(declared)} "
                                 f"but the shared configuration implies {expected}")
    return grid, period


def integrate_closed_loop_batch(model, controllers, x0, substeps=DEFAULT_SUBSTEPS):
    """Integrate a batch of joint runs; x0 has shape (B, N, n).

    All runs share the controllers (banks of size 1 broadcast; banks of size
    B give run ``b`` its member ``b``). Returns a batched Trajectory and one
    MonitorReport per run.
    """
    x0 = np.asarray(x0, dtype=float)
    net = model.network
    count, dim = net.agent_count, net.dimension
    if x0.ndim != 3 or x0.shape[1:] != (count, dim):
        raise ValueError(f"expected x0 shaped (B, {count}, {dim}), got {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial states have non-finite entries")
    batch = x0.shape[0]
    banks = [_as_bank(c) for c in controllers]
    grid, period = _check_setup(model, banks, batch)

    for b in range(batch):
        for i, bank in enumerate(banks):
            cell = _member(bank.configurations, b)[0]
            if grid.cell_of(x0[b, i]) != cell:
                raise ValueError(f"run {b}: agent {i} starts at {x0[b, i].tolist()} "
                                 f"outside its declared cell {cell}")

    steps = int(substeps)
    times = np.linspace(0.0, period, steps + 1)
    neighbor_idx = [list(net.neighbors[i]) for i in range(count)]
    evaluators = [model.evaluator(i) for i in range(count)]
    starts = [np.ascontiguousarray(x0[:, i]) for i in range(count)]

    lo = np.empty((count, batch, dim))
    hi = np.empty((count, batch, dim))
    for i, bank in enumerate(banks):
        for b in range(batch):
            box = grid.cell_box(_member(bank.configurations, b)[0])
            lo[i, b] = box.lo
            hi[i, b] = box.hi

    states = np.empty((steps + 1, batch, count, dim))
    mags = np.empty((steps + 1, batch, count))
    contained = np.empty((steps + 1, batch, count), dtype=bool)

    def apply(t, y, log=None):
        u = np.empty_like(y)
        for i in range(count):
            own = y[:, i]
            nbrs = y[:, neighbor_idx[i]]
            k = banks[i].feedback(t, own, nbrs, starts[i])
            u[:, i] = evaluators[i](own, nbrs) + k
            if log is not None:
                log[:, i] = np.linalg.norm(k, axis=-1)
        return u

    def monitor(row, y):
        for i in range(count):
            contained[row, :, i] = (box_distance(lo[i], hi[i], y[:, i])
                                    <= banks[i].params.reach_radius + DISTANCE_ATOL)

    y = x0.copy()
    states[0] = y
    monitor(0, y)
    k1 = apply(times[0], y, log=mags[0])
    for m in range(steps):
        t = times[m]
        h = times[m + 1] - t
        k2 = apply(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = apply(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = apply(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state after t = {times[m + 1]:.6g}")
        states[m + 1] = y
        monitor(m + 1, y)
        k1 = apply(times[m + 1], y, log=mags[m + 1])

    endpoint_dev = np.empty((batch, count))
    interp_dev = np.empty((batch, count))
    remain = (1.0 - times / period)[:, None, None]
    for i, bank in enumerate(banks):
        ref = bank.dense.at(times)                      # (K+1, B_i, n)
        offset = starts[i] - bank._own_ref              # (B?, n)
        resid = states[:, :, i, :] - ref - remain * offset
        interp_dev[:, i] = np.linalg.norm(resid, axis=-1).max(axis=0)
        endpoint_dev[:, i] = np.linalg.norm(states[-1, :, i, :] - bank.endpoint, axis=-1)

    trajectory = Trajectory(times=times, states=states, input_magnitudes=mags,
                            contained=contained)
    reports = [MonitorReport(max_input=mags[:, b].max(axis=0),
                             containment_ok=contained[:-1, b].all(axis=0),
                             endpoint_deviation=endpoint_dev[b],
                             interpolation_deviation=interp_dev[b])
               for b in range(batch)]
    return trajectory, reports


def integrate_closed_loop(model, controllers, x0, substeps=DEFAULT_SUBSTEPS):
    """Integrate one joint run from x0 shaped (N, n).

    Returns the Trajectory (states (K+1, N, n)) and its MonitorReport.
    """
    x0 = np.asarray(x0, dtype=float)
    trajectory, reports = integrate_closed_loop_batch(model, controllers, x0[None],
                                                      substeps=substeps)
    single = Trajectory(times=trajectory.times,
                        states=trajectory.states[:, 0],
                        input_magnitudes=trajectory.input_magnitudes[:, 0],
                        contained=trajectory.contained[:, 0])
    return single, reports[0]


def check_linear_interpolation(trajectory, controllers) -> np.ndarray:
    """Worst knot residual per agent of the linear-homing identity.

    Recomputed from the stored states: the realized state must equal the
    reference trajectory plus the linearly vanishing share of the initial
    offset at every knot.
    """
    banks = [_as_bank(c) for c in controllers]
    times = trajectory.times
    states = trajectory.states
    if states.ndim != 3:
        raise ValueError("expected a single-run trajectory")
    period = banks[0].period
    remain = (1.0 - times / period)[:, None]
    out = np.empty(len(banks))
    for i, bank in enumerate(banks):
        ref = bank.dense.at(times)[:, 0, :]
        offset = states[0, i] - bank._own_ref[0]
        resid = states[:, i, :] - ref - remain * offset
        out[i] = np.linalg.norm(resid, axis=-1).max()
    return out


def check_input_bound(trajectory, params) -> np.ndarray:
    """Per-agent maxima of the logged input magnitudes; raise on violation.

    The certificate is |input| <= input_bound at every knot of every agent.
    """
    mags = trajectory.input_magnitudes
    maxima = mags.max(axis=0)
    worst = np.unravel_index(np.argmax(mags), mags.shape)
    if mags[worst] > params.input_bound + INPUT_ATOL:
        agent = worst[-1]
        time = trajectory.times[worst[0]]
        raise InputBoundViolation(agent, float(time), float(mags[worst]),
                                  params.input_bound)
    return maxima
