"""Adaptive Runge-Kutta integration against closed forms and scipy."""

import math

import numpy as np
import pytest
import scipy.integrate

from saddlenf.errors import NumericalBlowupError
from saddlenf.odeint import solve_rk54


def test_linear_system_exact():
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])      # rotation

    def f(t, y):
        return A @ y

    traj = solve_rk54(f, (0.0, 2 * math.pi), np.array([1.0, 0.0]))
    assert np.max(np.abs(traj.y1 - [1.0, 0.0])) < 1e-7
    # a quarter turn via dense output
    q = traj(math.pi / 2)
    assert np.max(np.abs(q - [0.0, -1.0])) < 1e-6


def test_scalar_exponential_backward():
    traj = solve_rk54(lambda t, y: 2.0 * y, (0.0, -1.0), np.array([1.0]))
    assert traj.y1[0] == pytest.approx(math.exp(-2.0), rel=1e-8)
    # dense output at an interior backward time
    assert traj(-0.5)[0] == pytest.approx(math.exp(-1.0), rel=1e-6)
    with pytest.raises(ValueError):
        traj(0.5)        # outside the integrated span


def test_nonlinear_against_scipy():
    # van der Pol with mu = 1.5: compare with a tight LSODA/RK45 reference
    mu = 1.5

    def f(t, y):
        return np.array([y[1], mu * (1 - y[0] ** 2) * y[1] - y[0]])

    y0 = np.array([2.0, 0.0])
    ours = solve_rk54(f, (0.0, 6.0), y0, rtol=1e-10, atol=1e-12)
    ref = scipy.integrate.solve_ivp(
        f, (0.0, 6.0), y0, method="RK45", rtol=1e-11, atol=1e-13
    )
    assert np.max(np.abs(ours.y1 - ref.y[:, -1])) < 1e-7


def test_dense_output_accuracy():
    # stiff-ish decaying oscillation; dense values must track the truth
    def f(t, y):
        return np.array([-0.5 * y[0] + math.sin(t)])

    def exact(t):
        # y' + y/2 = sin t, y(0)=1: y = c e^{-t/2} + (2/5)(2 sin t - ... )
        # use scipy as the oracle instead of the closed form
        sol = scipy.integrate.solve_ivp(
            f, (0.0, t), [1.0], rtol=1e-12, atol=1e-14
        )
        return sol.y[0, -1]

    traj = solve_rk54(f, (0.0, 10.0), np.array([1.0]), rtol=1e-10, atol=1e-12)
    for t in (0.3, 1.7, 4.4, 9.9):
        assert traj(t)[0] == pytest.approx(exact(t), abs=1e-7)
    # vectorized query matches scalar queries
    batch = traj(np.array([0.3, 1.7]))
    assert batch.shape == (2, 1)
    assert batch[0, 0] == pytest.approx(traj(0.3)[0])


def test_finite_time_blowup_is_reported():
    # y' = y^2, y(0) = 1 blows up at t = 1.  At sane tolerances the step-size
    # controller underflows just before the pole; with the controller
    # effectively disabled the state actually overflows to non-finite values.
    from saddlenf.errors import NumericalError

    with pytest.raises(NumericalError):
        solve_rk54(lambda t, y: y**2, (0.0, 2.0), np.array([1.0]))
    with pytest.raises(NumericalBlowupError), np.errstate(over="ignore", invalid="ignore"):
        solve_rk54(
            lambda t, y: y**2, (0.0, 2.0), np.array([1.0]),
            rtol=1e12, atol=1e12, first_step=0.25,
        )


def test_zero_span_returns_initial_point():
    traj = solve_rk54(lambda t, y: np.array([1.0]), (0.5, 0.5), np.array([3.0]))
    assert traj.t0 == traj.t1 == 0.5
    assert traj.y1[0] == 3.0


def test_tolerance_scaling():
    # tighter tolerances must not increase the error on a smooth problem
    def f(t, y):
        return np.array([y[1], -math.sin(y[0])])

    y0 = np.array([1.2, 0.0])
    ref = scipy.integrate.solve_ivp(
        f, (0.0, 8.0), y0, method="RK45", rtol=3e-13, atol=1e-14
    ).y[:, -1]
    err_loose = np.max(np.abs(solve_rk54(f, (0.0, 8.0), y0, rtol=1e-6, atol=1e-9).y1 - ref))
    err_tight = np.max(np.abs(solve_rk54(f, (0.0, 8.0), y0, rtol=1e-11, atol=1e-13).y1 - ref))
    assert err_tight < err_loose
    assert err_tight < 1e-9
