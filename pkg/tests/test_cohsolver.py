"""Cohomological-equation quadrature against closed forms, realification and
the deformation flow."""

import numpy as np
import pytest

from saddlenf.bump import BumpSpec
from saddlenf.cohsolver import (
    CompactifiedSystem,
    Grid,
    compactify,
    deformation_step,
    integrate_characteristic,
    make_deformation_generator,
    realify,
    residual_check,
    solve_backward,
    solve_forward,
)
from saddlenf.errors import (
    BudgetInequalityError,
    MathPreconditionError,
    NumericalBlowupError,
    QuadratureToleranceError,
)
from saddlenf.polycore import (
    PolyField,
    PolySeries,
    Variable,
    VarClass,
    VariableRoster,
)

WIDE_BUMP = BumpSpec(r0=0.5, r1=1.0)


def saddle_roster():
    return VariableRoster((
        Variable("x", VarClass.REAL_SADDLE, 1.0),
        Variable("y", VarClass.REAL_SADDLE, -1.0),
    ))


def _vars(roster, trunc):
    return [PolySeries.variable(roster, trunc, i) for i in range(roster.n)]


def linear_saddle_system(trunc=3):
    r = saddle_roster()
    x, y = _vars(r, trunc)
    Z = PolyField([x, -y])
    return r, x, y, Z


# -- realification ---------------------------------------------------------


def center_roster():
    return VariableRoster((
        Variable("x", VarClass.REAL_SADDLE, 1.0),
        Variable("c", VarClass.COMPLEX_CENTER, 1j, conjugate=2),
        Variable("cb", VarClass.COMPLEX_CENTER, -1j, conjugate=1),
    ))


def test_realify_identity_on_real_roster():
    r = saddle_roster()
    view = realify(r)
    assert view.real_roster.names == r.names
    assert view.ix == (0,) and view.iy == (1,) and view.ic == ()
    z = np.array([0.3, -0.2])
    assert np.allclose(view.to_real(z), z)
    assert np.allclose(view.to_complex(z), z)


def test_realify_center_pair():
    r = center_roster()
    view = realify(r)
    assert view.real_roster.n == 3
    assert view.ix == (0,) and view.iy == () and len(view.ic) == 2
    zc = np.array([0.5, 0.2 + 0.3j, 0.2 - 0.3j])
    zr = view.to_real(zc)
    assert np.allclose(sorted(zr), sorted([0.5, 0.2, 0.3]))
    back = view.to_complex(zr)
    assert np.allclose(back, zc)


def test_realify_field_matches_complex_evaluation():
    # field values in real coordinates must equal the transported complex ones
    r = center_roster()
    P = 3
    xv, cv, cbv = _vars(r, P)
    Z = PolyField([
        xv + cv * cbv,                            # |c|^2 drive: real
        cv.scale(1j) + (0.2 + 0.1j) * xv * cv,
        cbv.scale(-1j) + (0.2 - 0.1j) * xv * cbv,
    ])
    view = realify(r)
    Zr = view.field(Z)
    rng = np.random.default_rng(3)
    for _ in range(8):
        zr = rng.uniform(-0.5, 0.5, 3)
        zc = view.to_complex(zr)
        # complex velocity transported to real coordinates
        vc = Z.evaluate(zc)
        expect = view.to_real(vc)
        got = np.real(Zr.evaluate(zr))
        assert np.max(np.abs(got - expect)) < 1e-12


def test_realify_rejects_non_real_input():
    r = center_roster()
    P = 2
    xv, cv, cbv = _vars(r, P)
    # x-component picks up an imaginary part on the real slice
    Z = PolyField([xv + cv.scale(1j), cv.scale(1j), cbv.scale(-1j)])
    with pytest.raises(MathPreconditionError):
        realify(r).field(Z)


# -- compactified systems --------------------------------------------------


def test_compactified_field_and_jacobian():
    r, x, y, Z = linear_saddle_system()
    N = PolyField([x * x * y, PolySeries.zero(r, 3)])
    sys = compactify(Z=Z + N, bump=BumpSpec(r0=1.0, r1=2.0))
    z = np.array([0.3, -0.4])
    assert sys.eta(z) == 1.0
    assert np.allclose(sys.field(z), [0.3 + 0.3**2 * (-0.4), 0.4])
    # outside the bump support the dynamics are purely linear
    far = np.array([2.5, 0.0])
    assert sys.eta(far) == 0.0
    assert np.allclose(sys.field(far), [2.5, 0.0])
    # Jacobian vs finite differences across the ramp (bump gradient included)
    zr = np.array([1.4, 0.9])
    J = sys.jacobian(zr)
    for j in range(2):
        e = np.zeros(2)
        e[j] = 1e-7
        fd = (sys.field(zr + e) - sys.field(zr - e)) / 2e-7
        assert np.max(np.abs(J[:, j] - fd)) < 1e-6
    assert sys.gap.mu_min == 1.0 and sys.gap.lam_min == 1.0


def test_characteristic_flow_linear_saddle():
    r, x, y, Z = linear_saddle_system()
    sys = compactify(Z=Z, bump=WIDE_BUMP)
    arc = integrate_characteristic(sys, np.array([0.2, 0.3]), -0.7)
    z = arc.z(-0.7)
    assert z[0] == pytest.approx(0.2 * np.exp(-0.7), rel=1e-8)
    assert z[1] == pytest.approx(0.3 * np.exp(0.7), rel=1e-8)
    V = arc.V(-0.7)
    assert np.allclose(V, np.diag([np.exp(-0.7), np.exp(0.7)]), atol=1e-7)


# -- quadrature closed forms ----------------------------------------------


def slice_points(xs):
    return np.array([[x, 0.0] for x in xs])


def test_backward_closed_form_on_invariant_slice():
    # linear saddle, R1 = x^3 e_x: the equation DG Z - DZ G = R has the
    # polynomial solution G = (x^3/2, 0); on the invariant slice y = 0 the
    # backward characteristics stay inside the bump plateau forever, so the
    # quadrature must reproduce it to quadrature accuracy
    r, x, y, Z = linear_saddle_system(4)
    R1 = PolyField([x * x * x, PolySeries.zero(r, 4)])
    sys = compactify(Z=Z, R=R1, bump=WIDE_BUMP)
    pts = slice_points([0.05, -0.08, 0.03])
    sf = solve_backward(sys, R1, pts)
    assert sf.meta["ell"] == 2
    assert sf.meta["delta_rate"] == pytest.approx(2.0)
    for p, v in zip(sf.points, sf.values):
        assert abs(v[0] - p[0] ** 3 / 2.0) < 1e-7
        assert abs(v[1]) < 1e-9


def test_forward_closed_form_mirror():
    r, x, y, Z = linear_saddle_system(4)
    R2 = PolyField([PolySeries.zero(r, 4), y * y * y])
    sys = compactify(Z=Z, bump=WIDE_BUMP)
    pts = np.array([[0.0, 0.05], [0.0, -0.07]])
    sf = solve_forward(sys, R2, pts)
    for p, v in zip(sf.points, sf.values):
        assert abs(v[1] - (-p[1] ** 3 / 2.0)) < 1e-7
        assert abs(v[0]) < 1e-9


def test_hamiltonian_closed_form():
    # H2 = x y, scalar remainder x^3: DG X_H2 = R gives G = x^3/3
    r = VariableRoster((
        Variable("x", VarClass.REAL_SADDLE, 1.0, sympl_partner=1, sympl_factor=1.0),
        Variable("y", VarClass.REAL_SADDLE, -1.0, sympl_partner=0, sympl_factor=-1.0),
    ))
    x, y = _vars(r, 4)
    H = x * y
    H_R = x * x * x
    sys = compactify(H=H, H_R=H_R, bump=WIDE_BUMP)
    assert sys.mode == "hamiltonian"
    pts = slice_points([0.05, -0.06])
    sf = solve_backward(sys, H_R, pts)
    # Hamiltonian rate rule: delta = (l+1) mu (no Jacobian growth term)
    assert sf.meta["delta_rate"] == pytest.approx(3.0)
    for p, v in zip(sf.points, sf.values):
        assert abs(float(v) - p[0] ** 3 / 3.0) < 1e-7


def test_residual_check_off_slice():
    # off the invariant slice the quadrature solves the *compactified*
    # equation; the residual check must vanish there even though the
    # polynomial closed form no longer applies
    r, x, y, Z = linear_saddle_system(4)
    R1 = PolyField([x * x * x, PolySeries.zero(r, 4)])
    sys = compactify(Z=Z, R=R1, bump=WIDE_BUMP)
    pts = np.array([[0.04, 0.03], [-0.05, 0.02]])
    sf = solve_backward(sys, R1, pts)
    rep = residual_check(sys, R1, sf, points=pts)
    assert rep["max_residual"] < 1e-7
    assert len(rep["per_point"]) == 2


def test_straightened_shortcut_and_sampled_field_protocol():
    r, x, y, Z = linear_saddle_system(4)
    R1 = PolyField([x * x * x, PolySeries.zero(r, 4)])
    sys = compactify(Z=Z, R=R1, bump=WIDE_BUMP)
    assert sys.straightened
    pts = np.array([[0.0, 0.05], [0.06, 0.0]])
    sf = solve_backward(sys, R1, pts)
    # x = 0 lies on the stable manifold: G vanishes identically there
    assert abs(sf.values[0][0]) == 0.0
    # the attached point solver reproduces the sampled values
    again = sf(pts[1])
    assert np.allclose(again, sf.values[1], atol=1e-12)
    # serialization shapes
    obj = sf.to_obj()
    assert obj["direction"] == "backward"
    assert len(obj["points"]) == len(obj["values"]) == 2
    rows = sf.csv_rows()
    assert rows[0] == ["x", "y", "G_x", "G_y"]
    assert len(rows) == 3


def test_default_grid_shape():
    r, x, y, Z = linear_saddle_system(4)
    sys = compactify(Z=Z, bump=WIDE_BUMP)
    g = Grid(radius=0.1, points_per_axis=3)
    pts = g.points(sys)
    assert pts.shape == (9, 2)
    assert pts[:, 0].min() == -0.1 and pts[:, 0].max() == 0.1


def test_solver_guards():
    r, x, y, Z = linear_saddle_system(4)
    R1 = PolyField([x * x * x, PolySeries.zero(r, 4)])
    sys = compactify(Z=Z, R=R1, bump=WIDE_BUMP)
    # fixed cutoff time too large for the rates: refused, not overflowed
    with pytest.raises(QuadratureToleranceError):
        solve_backward(sys, R1, slice_points([0.05]), T_star=700.0)
    # vanishing order too small for the requested smoothness k
    with pytest.raises(BudgetInequalityError):
        solve_backward(sys, R1, slice_points([0.05]), k=1)
    # remainder with too little x-vanishing for the requested ell
    with pytest.raises(MathPreconditionError):
        solve_backward(sys, R1, slice_points([0.05]), ell1=3)
    # identically-zero remainder part
    with pytest.raises(MathPreconditionError):
        solve_backward(sys, PolyField.zero(r, 4), slice_points([0.05]))


def test_threaded_solve_matches_serial():
    r, x, y, Z = linear_saddle_system(4)
    R1 = PolyField([x * x * x, PolySeries.zero(r, 4)])
    sys = compactify(Z=Z, R=R1, bump=WIDE_BUMP)
    pts = slice_points([0.05, -0.08, 0.03, 0.07])
    serial = solve_backward(sys, R1, pts)
    threaded = solve_backward(sys, R1, pts, threads=4)
    assert np.allclose(serial.values, threaded.values, atol=0.0)


# -- deformation flow ------------------------------------------------------


def one_var_quadratic():
    r = VariableRoster((Variable("x", VarClass.REAL_SADDLE, 1.0),))
    x = PolySeries.variable(r, 2, 0)
    Z = PolyField([x])
    R = PolyField([x * x])
    sys = compactify(Z=Z, R=R, bump=BumpSpec(r0=0.6, r1=1.2))
    return sys, R


def test_deformation_flow_exact_one_dim():
    # z' = z + eps z^2 deforms along G = z^2; the flow of dz/deps = z^2 is
    # z(eps) = z0 / (1 - eps z0), so the comparison bound with K = 1, l = 1
    # is attained exactly: v_crit = 1 and v(1) = v0/(1 - v0)
    sys, R = one_var_quadratic()
    gen = make_deformation_generator(sys, R1=R, quad_tol=1e-7, rtol=1e-7)
    v0 = 0.25
    res = deformation_step(sys, gen, np.array([v0]), tol=1e-6, K=1.0, ell=1)
    assert res.v_crit == pytest.approx(1.0)
    assert res.v_bound_at_one == pytest.approx(v0 / (1 - v0))
    assert res.z1[0] == pytest.approx(v0 / (1 - v0), rel=1e-4)
    # starting at or beyond the critical radius is refused
    with pytest.raises(NumericalBlowupError):
        deformation_step(sys, gen, np.array([1.0]), K=1.0, ell=1)
    # without K and ell no bound is reported
    res2 = deformation_step(sys, gen, np.array([0.1]), tol=1e-5)
    assert res2.v_crit is None and res2.v_bound_at_one is None
