"""Truncated sparse polynomial arithmetic against brute-force oracles."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from saddlenf.polycore import (
    PolyField,
    PolySeries,
    Variable,
    VarClass,
    VariableRoster,
    commutator,
    hamiltonian_vector_field,
    poisson_bracket,
    pushforward_truncated,
    reality_defect,
)
from saddlenf.errors import RosterError


def saddle_roster():
    return VariableRoster((
        Variable("x", VarClass.REAL_SADDLE, 1.0),
        Variable("y", VarClass.REAL_SADDLE, -1.0),
    ))


def center_roster():
    return VariableRoster((
        Variable("x", VarClass.REAL_SADDLE, 1.0),
        Variable("y", VarClass.REAL_SADDLE, -1.0),
        Variable("c", VarClass.COMPLEX_CENTER, 2j, conjugate=3),
        Variable("cb", VarClass.COMPLEX_CENTER, -2j, conjugate=2),
    ))


def _vars(roster, trunc):
    return [PolySeries.variable(roster, trunc, i) for i in range(roster.n)]


def test_roster_validation():
    with pytest.raises(RosterError):
        VariableRoster((
            Variable("x", VarClass.REAL_SADDLE, 1.0),
            Variable("x", VarClass.REAL_SADDLE, -1.0),   # duplicate name
        ))
    with pytest.raises(RosterError):
        # center variable with a real part is not a center variable
        VariableRoster((Variable("c", VarClass.COMPLEX_CENTER, 1.0 + 2j, conjugate=0),))
    r = center_roster()
    assert r.saddle_indices == (0, 1)
    assert r.unstable_indices == (0,)
    assert r.stable_indices == (1,)
    assert r.center_indices == (2, 3)
    assert r.conj_perm == (0, 1, 3, 2)


def test_series_canonicalization_drops_zero_and_overflow():
    r = saddle_roster()
    s = PolySeries(r, 2, {(1, 0): 1.0, (0, 2): 2.0, (3, 0): 5.0, (0, 1): 0.0})
    assert (3, 0) not in s.terms          # above truncation degree
    assert (0, 1) not in s.terms          # exact zero coefficient
    assert s.terms[(0, 2)] == 2.0


def test_mul_matches_pointwise_product():
    r = saddle_roster()
    x, y = _vars(r, 6)
    f = x * x + 2.0 * y - 0.5 * x * y
    g = y * y * x + x + 1.0 * PolySeries.constant(r, 6, 1.0)
    h = f * g
    rng = np.random.default_rng(7)
    for _ in range(10):
        z = rng.uniform(-0.7, 0.7, 2)
        assert abs(h.evaluate(z) - f.evaluate(z) * g.evaluate(z)) < 1e-12


def test_mul_truncates():
    r = saddle_roster()
    x, y = _vars(r, 3)
    h = (x * x) * (y * y)     # degree 4 > trunc 3
    assert h.is_zero


def test_diff_and_evaluate():
    r = saddle_roster()
    x, y = _vars(r, 5)
    f = x * x * y + 3.0 * y
    fx = f.diff(0)
    fy = f.diff(1)
    z = np.array([0.3, -0.2])
    assert abs(fx.evaluate(z) - 2 * 0.3 * (-0.2)) < 1e-14
    assert abs(fy.evaluate(z) - (0.3**2 + 3.0)) < 1e-14


def test_compose_is_evaluation_of_substitution():
    r = saddle_roster()
    x, y = _vars(r, 4)
    f = x * x + x * y
    gx = x + 0.1 * y * y
    gy = y - 0.2 * x * x
    comp = f.compose([gx, gy], 4)
    rng = np.random.default_rng(3)
    for _ in range(8):
        z = rng.uniform(-0.2, 0.2, 2)
        direct = f.evaluate(np.array([gx.evaluate(z), gy.evaluate(z)]))
        # difference only from truncation beyond degree 4
        assert abs(comp.evaluate(z) - direct) < 5e-4 * max(1.0, abs(direct))


def test_formal_inverse_round_trip():
    r = saddle_roster()
    x, y = _vars(r, 5)
    T = PolyField([x + y * y - 0.3 * x * x * y, y + 0.25 * x * x])
    Tinv = T.formal_inverse(5)
    ident = T.compose_map(Tinv, 5)
    for i, comp in enumerate(ident.components):
        for exp, c in comp.terms.items():
            if sum(exp) == 1:
                want = 1.0 if exp[i] == 1 else 0.0
                assert abs(c - want) < 1e-12
            else:
                assert abs(c) < 1e-10


def test_commutator_oracle():
    # [A z, h] for linear A recovers (Dh A z - A h); checked on a monomial
    r = saddle_roster()
    x, y = _vars(r, 3)
    A = PolyField.from_linear(r, np.diag([1.0, -1.0]), 3)
    h = PolyField([y * y, PolySeries.zero(r, 3)])
    lie = commutator(A, h, 3)
    # D(y^2 e_x) (x, -y) - A (y^2 e_x) = (-2y^2 - y^2) e_x = -3 y^2 e_x
    assert dict(lie.components[0].terms) == {(0, 2): pytest.approx(-3.0)}
    assert lie.components[1].is_zero


def test_commutator_antisymmetry():
    r = saddle_roster()
    x, y = _vars(r, 4)
    X = PolyField([x * y, y * y - x])
    Y = PolyField([y + x * x, x * y * y])
    lhs = commutator(X, Y, 4)
    rhs = commutator(Y, X, 4).scale(-1.0)
    diff = lhs - rhs
    assert all(c.is_zero for c in diff.components)


def test_pushforward_conjugates_flow_map():
    # pushforward along T(z) = z + h(z): the new field at w = T(z) must equal
    # DT(z) Z(z); we verify pointwise through the inverse map
    r = saddle_roster()
    x, y = _vars(r, 4)
    Z = PolyField([x + y * y, -y + x * y])
    T = PolyField([x + 0.2 * y * y, y - 0.1 * x * x])
    F = pushforward_truncated(Z, T, 4)
    rng = np.random.default_rng(11)
    for _ in range(6):
        z = rng.uniform(-0.05, 0.05, 2)
        w = T.evaluate(z)
        DT = T.jacobian_eval(z)
        lhs = F.evaluate(w)
        rhs = DT @ Z.evaluate(z)
        assert np.max(np.abs(lhs - rhs)) < 1e-8


def test_hamiltonian_vector_field_and_poisson():
    r = VariableRoster((
        Variable("x", VarClass.REAL_SADDLE, 1.0, sympl_partner=1, sympl_factor=1.0),
        Variable("y", VarClass.REAL_SADDLE, -1.0, sympl_partner=0, sympl_factor=-1.0),
    ))
    x, y = _vars(r, 4)
    H = x * y + x * x * x
    X = hamiltonian_vector_field(H, 4)
    # xdot = dH/dy = x ; ydot = -dH/dx = -y - 3x^2
    assert dict(X.components[0].terms) == {(1, 0): pytest.approx(1.0)}
    assert X.components[1].terms[(0, 1)] == pytest.approx(-1.0)
    assert X.components[1].terms[(2, 0)] == pytest.approx(-3.0)
    # {H, H} = 0 and {f, g} = -{g, f}
    f = x * x
    g = x * y
    assert poisson_bracket(H, H, 4).is_zero
    d = poisson_bracket(f, g, 4) + poisson_bracket(g, f, 4)
    assert d.is_zero


def test_conj_swap_reality():
    r = center_roster()
    x, y, c, cb = _vars(r, 3)
    real_series = x * c * cb          # |c|^2 x is real on the slice
    assert reality_defect(real_series) < 1e-14
    not_real = x * c
    assert reality_defect(not_real) > 0.5


def test_roster_serialization_round_trip():
    r = center_roster()
    obj = r.to_obj()
    r2 = VariableRoster.from_obj(obj)
    assert r2.names == r.names
    assert np.allclose(r2.eigenvalues, r.eigenvalues)
    assert r2.variables[2].conjugate == 3


def test_series_serialization_round_trip():
    r = saddle_roster()
    x, y = _vars(r, 4)
    f = 0.5 * x * x * y - y + 2.25 * x
    obj = f.to_obj()
    g = PolySeries.from_obj(obj)
    assert g.terms == f.terms
    assert g.trunc_degree == f.trunc_degree


@st.composite
def small_series(draw, roster, trunc=4):
    n_terms = draw(st.integers(0, 5))
    terms = {}
    for _ in range(n_terms):
        exp = tuple(
            draw(st.integers(0, 2)) for _ in range(roster.n)
        )
        if sum(exp) > trunc:
            continue
        terms[exp] = draw(
            st.floats(-2, 2, allow_nan=False, allow_infinity=False)
        )
    return PolySeries(roster, trunc, terms)


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_product_associativity(data):
    r = saddle_roster()
    f = data.draw(small_series(r))
    g = data.draw(small_series(r))
    h = data.draw(small_series(r))
    lhs = (f * g) * h
    rhs = f * (g * h)
    diff = lhs - rhs
    assert all(abs(c) < 1e-9 for c in diff.terms.values())


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_evaluate_is_ring_homomorphism(data):
    r = saddle_roster()
    f = data.draw(small_series(r))
    g = data.draw(small_series(r))
    z = np.array([
        data.draw(st.floats(-0.5, 0.5, allow_nan=False)),
        data.draw(st.floats(-0.5, 0.5, allow_nan=False)),
    ])
    fg = f * g
    if fg.max_degree <= 4 and f.max_degree + g.max_degree <= 4:
        assert abs(fg.evaluate(z) - f.evaluate(z) * g.evaluate(z)) < 1e-9
    s = f + g
    assert abs(s.evaluate(z) - (f.evaluate(z) + g.evaluate(z))) < 1e-9
