"""Fixed-step classical Runge-Kutta integration with cubic dense output.

The integrator is deliberately fixed-step: identical inputs and step counts
produce bit-identical results, and the stored knots live on the same uniform
grid the closed-loop simulation uses, so dense queries stay consistent with
the integration itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def rk4_path(field, y0, t0, t1, steps):
    """Integrate dy/dt = field(t, y) on [t0, t1] with ``steps`` uniform RK4 steps.

    Returns (times, states, derivs) with the field also evaluated at every
    knot; ``y0`` may have any shape as long as ``field`` preserves it.
    """
    steps = int(steps)
    if steps < 1:
        raise ValueError("need at least one step")
    y = np.asarray(y0, dtype=float)
    times = np.linspace(float(t0), float(t1), steps + 1)
    states = np.empty((steps + 1,) + y.shape)
    derivs = np.empty_like(states)
    states[0] = y
    derivs[0] = field(times[0], y)
    for m in range(steps):
        t = times[m]
        h = times[m + 1] - t
        y = states[m]
        k1 = derivs[m]
        k2 = field(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = field(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = field(t + h, y + h * k3)
        states[m + 1] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        derivs[m + 1] = field(times[m + 1], states[m + 1])
    return times, states, derivs


@dataclass(frozen=True)
class DenseTrajectory:
    """Knot states plus derivatives, queryable anywhere in the time span.

    Queries between knots use cubic Hermite interpolation, which matches the
    integrator's fourth-order accuracy; queries at knots reproduce the stored
    states exactly.
    """

    times: np.ndarray   # (K+1,)
    states: np.ndarray  # (K+1, ...)
    derivs: np.ndarray  # (K+1, ...)

    @property
    def span(self):
        return float(self.times[0]), float(self.times[-1])

    @property
    def endpoint(self):
        return self.states[-1]

    def at(self, t):
        """States at time(s) ``t``; scalar t drops the leading axis."""
        scalar = np.ndim(t) == 0
        tq = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.span
        slack = 1e-9 * max(hi - lo, 1.0)
        if np.any(tq < lo - slack) or np.any(tq > hi + slack):
            raise ValueError(f"time out of range [{lo}, {hi}]")
        tq = np.clip(tq, lo, hi)
        idx = np.clip(np.searchsorted(self.times, tq, side="right") - 1,
                      0, len(self.times) - 2)
        width = self.times[idx + 1] - self.times[idx]
        theta = (tq - self.times[idx]) / width
        trail = (1,) * (self.states.ndim - 1)
        theta = theta.reshape(theta.shape + trail)
        width = width.reshape(width.shape + trail)
        t2 = theta * theta
        t3 = t2 * theta
        h00 = 2.0 * t3 - 3.0 * t2 + 1.0
        h10 = t3 - 2.0 * t2 + theta
        h01 = -2.0 * t3 + 3.0 * t2
        h11 = t3 - t2
        out = (h00 * self.states[idx] + h10 * width * self.derivs[idx]
               + h01 * self.states[idx + 1] + h11 * width * self.derivs[idx + 1])
        return out[0] if scalar else out
