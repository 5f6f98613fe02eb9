"""Explicit Runge-Kutta 5(4) integration with dense output.

Dormand-Prince embedded pair (the classic DOPRI5 tableau; see Hairer, Norsett
& Wanner, "Solving Ordinary Differential Equations I", sec. II.4-II.5):
the fifth-order solution propagates, the fourth-order one supplies the error
estimate, and the first-same-as-last property recycles the trailing stage.
Step sizes follow a PI controller (limited growth/shrink, error history
exponent pair 0.7/5 and 0.4/5).  Accepted knots keep the derivative values,
so the returned :class:`Trajectory` supports cubic Hermite evaluation at
arbitrary times, forward or backward.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalBlowupError, NumericalError

__all__ = ["Trajectory", "solve_rk54"]


# Butcher tableau (Dormand & Prince 1980)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4  # error weights

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_ALPHA = 0.7 / 5  # PI controller: current error exponent
_BETA = 0.4 / 5  # previous error exponent


class Trajectory:
    """Accepted solution knots plus derivatives; callable for dense output."""

    def __init__(self, ts, ys, fs):
        self.ts = np.asarray(ts, dtype=float)
        self.ys = np.asarray(ys, dtype=float)
        self.fs = np.asarray(fs, dtype=float)
        self._forward = self.ts[-1] >= self.ts[0]

    @property
    def t0(self) -> float:
        return float(self.ts[0])

    @property
    def t1(self) -> float:
        return float(self.ts[-1])

    @property
    def y1(self) -> np.ndarray:
        return self.ys[-1]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tq = np.atleast_1d(t)
        ts = self.ts if self._forward else self.ts[::-1]
        order = slice(None) if self._forward else slice(None, None, -1)
        ys = self.ys[order]
        fs = self.fs[order]
        lo, hi = ts[0], ts[-1]
        if np.any(tq < lo - 1e-12) or np.any(tq > hi + 1e-12):
            raise ValueError("dense evaluation outside the integrated span")
        idx = np.clip(np.searchsorted(ts, tq, side="right") - 1, 0, len(ts) - 2)
        ta, tb = ts[idx], ts[idx + 1]
        h = tb - ta
        theta = np.where(h != 0, (tq - ta) / np.where(h == 0, 1.0, h), 0.0)
        th = theta[:, None]
        h00 = 2 * th**3 - 3 * th**2 + 1
        h10 = th**3 - 2 * th**2 + th
        h01 = -2 * th**3 + 3 * th**2
        h11 = th**3 - th**2
        out = (
            h00 * ys[idx]
            + h10 * h[:, None] * fs[idx]
            + h01 * ys[idx + 1]
            + h11 * h[:, None] * fs[idx + 1]
        )
        return out[0] if scalar else out


def _error_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(f, t0, y0, f0, direction, rtol, atol):
    # Hairer's starting-step heuristic (op. cit., sec. II.4)
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = f(t0 + h0 * direction, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def solve_rk54(
    f,
    t_span,
    y0,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    max_step: float = np.inf,
    first_step: float | None = None,
    max_steps: int = 200_000,
) -> Trajectory:
    """Integrate y' = f(t, y) over t_span (backward if t1 < t0)."""
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = np.array(y0, dtype=float)
    f0 = np.asarray(f(t0, y), dtype=float)
    if t1 == t0:
        return Trajectory([t0], [y], [f0])
    direction = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)

    if first_step is not None:
        h = min(abs(first_step), span, max_step)
    else:
        h = min(_initial_step(f, t0, y, f0, direction, rtol, atol), span, max_step)

    ts, ys, fs = [t0], [y.copy()], [f0.copy()]
    t = t0
    k = np.empty((7, y.size))
    k[0] = f0
    err_prev = None
    for _ in range(max_steps):
        if direction * (t - t1) >= 0:
            return Trajectory(ts, ys, fs)
        h = min(h, abs(t1 - t))
        if h < 1e-14 * max(1.0, abs(t)):
            raise NumericalError("step size underflow at t = %g" % t)
        hd = h * direction
        for i in range(1, 7):
            yi = y + hd * (np.asarray(_A[i]) @ k[:i])
            k[i] = f(t + _C[i] * hd, yi)
        y_new = y + hd * (_B5 @ k)  # k[6] was evaluated at y_new already (FSAL)
        err_vec = hd * (_E @ k)
        if not np.all(np.isfinite(y_new)):
            raise NumericalBlowupError("solution became non-finite at t = %g" % t)
        err = _error_norm(err_vec, y, y_new, rtol, atol)

        if err <= 1.0:
            t = t + hd
            y = y_new
            ts.append(t)
            ys.append(y.copy())
            fs.append(k[6].copy())
            k[0] = k[6]
            if err == 0.0:
                factor = _MAX_FACTOR
            elif err_prev is None:
                factor = _SAFETY * err ** (-1 / 5)
            else:
                factor = _SAFETY * err ** (-_ALPHA) * err_prev**_BETA
            err_prev = max(err, 1e-10)
            h = min(h * min(_MAX_FACTOR, max(_MIN_FACTOR, factor)), max_step)
        else:
            h = h * max(_MIN_FACTOR, _SAFETY * err ** (-1 / 5))
    raise NumericalError("step budget exhausted (%d steps)" % max_steps)
