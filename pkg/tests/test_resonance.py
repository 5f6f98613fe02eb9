"""Resonant-monomial enumeration against brute-force counting."""

import math
from fractions import Fraction
from itertools import product

import pytest

from saddlenf.errors import MathPreconditionError
from saddlenf.polycore import Variable, VarClass, VariableRoster
from saddlenf.resonance import (
    ResonanceMode,
    divisor_hamiltonian,
    divisor_vector_field,
    is_saddle_resonant_monomial,
    iter_exponents,
    resonant_set,
)


def simple_saddle():
    return VariableRoster((
        Variable("x", VarClass.REAL_SADDLE, 1.0),
        Variable("y", VarClass.REAL_SADDLE, -1.0),
    ))


def saddle_center():
    return VariableRoster((
        Variable("x", VarClass.REAL_SADDLE, 1.0),
        Variable("y", VarClass.REAL_SADDLE, -1.0),
        Variable("c", VarClass.COMPLEX_CENTER, 1j, conjugate=3),
        Variable("cb", VarClass.COMPLEX_CENTER, -1j, conjugate=2),
    ))


def two_saddle_two_center():
    """Rates (1, -1, 1, -1, i, -i, i sqrt2, -i sqrt2): one saddle pair per
    sign, two center pairs with incommensurate frequencies."""
    s2 = math.sqrt(2.0)
    return VariableRoster((
        Variable("xm", VarClass.REAL_SADDLE, 1.0, sign_group="hm"),
        Variable("ym", VarClass.REAL_SADDLE, -1.0, sign_group="hm"),
        Variable("xp", VarClass.REAL_SADDLE, 1.0, sign_group="hp"),
        Variable("yp", VarClass.REAL_SADDLE, -1.0, sign_group="hp"),
        Variable("c1", VarClass.COMPLEX_CENTER, 1j, conjugate=5, sign_group="c1"),
        Variable("cb1", VarClass.COMPLEX_CENTER, -1j, conjugate=4, sign_group="c1"),
        Variable("c2", VarClass.COMPLEX_CENTER, s2 * 1j, conjugate=7, sign_group="c2"),
        Variable("cb2", VarClass.COMPLEX_CENTER, -s2 * 1j, conjugate=6, sign_group="c2"),
    ))


def test_iter_exponents_counts_and_order():
    # number of monomials of degree exactly d in n variables is C(n+d-1, d)
    for n in (1, 2, 3, 4):
        for d in (1, 2, 3):
            got = [e for e in iter_exponents(n, d, d)]
            assert len(got) == math.comb(n + d - 1, d)
    # graded: degrees never decrease along the iteration
    degs = [sum(e) for e in iter_exponents(3, 1, 4)]
    assert degs == sorted(degs)
    # each tuple appears once
    all_ = list(iter_exponents(4, 2, 3))
    assert len(set(all_)) == len(all_)


def test_divisor_values():
    r = simple_saddle()
    # <(2,1), (1,-1)> - nu_x = (2 - 1) - 1 = 0: the classic x^2 y resonance
    assert divisor_vector_field(r, 0, (2, 1)) == 0
    assert divisor_vector_field(r, 1, (1, 2)) == 0
    assert divisor_vector_field(r, 0, (2, 0)) == pytest.approx(1.0)
    assert divisor_hamiltonian(r, (2, 2)) == 0
    assert divisor_hamiltonian(r, (3, 1)) == pytest.approx(2.0)


def test_resonant_set_matches_brute_force():
    r = saddle_center()
    rs = resonant_set(r, 2, 4)
    nu = r.eigenvalues
    brute = []
    for d in (2, 3, 4):
        for alpha in product(range(d + 1), repeat=4):
            if sum(alpha) != d:
                continue
            for j in range(4):
                div = sum(a * nu[i] for i, a in enumerate(alpha)) - nu[j]
                if abs(div) <= rs.eps_res:
                    brute.append((j, alpha))
    assert set(rs.entries) == set(brute)
    assert rs.to_obj()["count"] == len(brute)
    # membership helper agrees
    for j, alpha in brute:
        assert (j, alpha) in rs


def test_resonant_set_hamiltonian_mode():
    r = simple_saddle()
    rs = resonant_set(r, 3, 4, mode=ResonanceMode.HAMILTONIAN)
    # <alpha, (1,-1)> = 0 means a = b: only (2, 2) in the window
    assert [e for _, e in rs.entries] == [(2, 2)]
    assert rs.to_obj()["mode"] == "hamiltonian"


def test_exact_mode_distinguishes_near_resonances():
    # eigenvalues 1 and -(1 + 1e-13) are numerically resonant at the default
    # tolerance but exactly non-resonant in rational arithmetic
    r = VariableRoster((
        Variable("x", VarClass.REAL_SADDLE, 1.0),
        Variable("y", VarClass.REAL_SADDLE, -(1.0 + 1e-13)),
    ))
    approx = resonant_set(r, 2, 3)
    # <(2,1), nu> - nu_x = -1e-13, inside the default tolerance
    assert (0, (2, 1)) in approx
    assert (1, (1, 2)) in approx
    exact = resonant_set(r, 2, 3, exact=True)
    assert exact.entries == ()
    assert exact.exact


def test_exact_mode_rational_eigenvalues():
    # rates (2, -1): the first resonances sit at degree 4
    r = VariableRoster((
        Variable("x", VarClass.REAL_SADDLE, Fraction(2)),
        Variable("y", VarClass.REAL_SADDLE, Fraction(-1)),
    ))
    rs = resonant_set(r, 2, 4, exact=True)
    assert (0, (2, 2)) in rs             # 2*2 - 2 = 2 = nu_x
    assert (1, (1, 3)) in rs             # 2 - 3 = -1 = nu_y
    # entries are exactly the brute-force rational hits
    brute = []
    nus = [Fraction(2), Fraction(-1)]
    for alpha in product(range(5), repeat=2):
        if not (2 <= sum(alpha) <= 4):
            continue
        s = alpha[0] * nus[0] + alpha[1] * nus[1]
        for j in (0, 1):
            if s == nus[j]:
                brute.append((j, alpha))
    assert set(rs.entries) == set(brute)


def test_no_order2_saddle_resonances_with_center_frequencies():
    # saddle-center rates (1,-1,1,-1,i,-i,i s2,-i s2): every order-2 divisor on
    # a saddle component is bounded away from zero, because center frequencies
    # only contribute imaginary parts and saddle parts cannot cancel at
    # degree 2
    r = two_saddle_two_center()
    rs = resonant_set(r, 2, 2)
    saddle_hits = [(j, a) for j, a in rs.entries if j in r.saddle_indices]
    assert saddle_hits == []
    # brute-force confirmation with an explicit margin
    nu = r.eigenvalues
    margin = min(
        abs(sum(a * nu[i] for i, a in enumerate(alpha)) - nu[j])
        for alpha in iter_exponents(8, 2, 2)
        for j in r.saddle_indices
    )
    assert margin > 0.4


def test_saddle_subexponent_classification():
    r = saddle_center()
    # x * c: saddle part is x alone, <(1), 1> = 1 = nu_x -> saddle-resonant
    # even though the full divisor is i != 0
    assert is_saddle_resonant_monomial(r, 0, (1, 0, 1, 0))
    assert abs(divisor_vector_field(r, 0, (1, 0, 1, 0))) > 0.5
    # x^2 y on x is the genuine saddle resonance
    assert is_saddle_resonant_monomial(r, 0, (2, 1, 0, 0))
    assert not is_saddle_resonant_monomial(r, 0, (2, 0, 0, 0))
    with pytest.raises(MathPreconditionError):
        is_saddle_resonant_monomial(r, 2, (1, 0, 1, 0))


def test_paired_convention_requires_paired_saddles():
    r = VariableRoster((
        Variable("x", VarClass.REAL_SADDLE, 1.0),
        Variable("y", VarClass.REAL_SADDLE, -2.0),
    ))
    with pytest.raises(MathPreconditionError):
        resonant_set(r, 2, 3, mode=ResonanceMode.HAMILTONIAN,
                     hres_convention="paired")
    # matched rates are accepted
    rs = resonant_set(simple_saddle(), 2, 3, mode=ResonanceMode.HAMILTONIAN,
                      hres_convention="paired")
    assert rs.convention == "paired"
    with pytest.raises(ValueError):
        divisor_hamiltonian(simple_saddle(), (1, 1), convention="bogus")
