"""Sign symmetries of fields, Hamiltonians and numeric evaluators.

Variables are partitioned into sign groups (e.g. the "plus" saddle block, the
"minus" saddle block, and one group per center pair).  A sign pattern S_s
multiplies every variable of group g by s_g = +-1.  A vector field Z is
sign-symmetric iff  Z(S_s z) = S_s Z(z)  for every pattern, which in terms of
monomials reads: the component of a variable in group g may carry the monomial
m iff parity(m, g) is odd and parity(m, g') is even for every other group g'.
A Hamiltonian is sign-symmetric iff every monomial has even parity in every
group (then H(S_s z) = H(z)).

Conjugate pair members share one group (a real sign multiplies both), so
parities count the pair's exponents jointly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bump import BumpSpec
from .errors import MathPreconditionError
from .polycore import PolyField, PolySeries, VariableRoster

__all__ = [
    "SignPattern",
    "all_sign_patterns",
    "Violation",
    "SignSymReport",
    "check_field_signsym",
    "check_hamiltonian_signsym",
    "symmetric_bump_spec",
    "numeric_signsym_defect",
]


@dataclass(frozen=True)
class SignPattern:
    """Mapping group label -> +-1."""

    signs: tuple[tuple[str, int], ...]

    def sign(self, group: str | None) -> int:
        if group is None:
            return 1
        return dict(self.signs)[group]

    def apply(self, roster: VariableRoster, z) -> np.ndarray:
        z = np.asarray(z)
        out = z.copy()
        for i, v in enumerate(roster.variables):
            out[i] = self.sign(v.sign_group) * z[i]
        return out

    def to_obj(self):
        return {g: s for g, s in self.signs}


def all_sign_patterns(roster: VariableRoster) -> list[SignPattern]:
    groups = roster.sign_groups
    if not groups:
        raise MathPreconditionError("roster declares no sign groups")
    out = []
    for choice in itertools.product((1, -1), repeat=len(groups)):
        out.append(SignPattern(tuple(zip(groups, choice))))
    return out


@dataclass(frozen=True)
class Violation:
    component: int | None  # None for Hamiltonian monomials
    exponent: tuple[int, ...]
    group: str
    parity: int
    expected: str  # "even" or "odd"

    def to_obj(self):
        return {
            "component": self.component,
            "exp": list(self.exponent),
            "group": self.group,
            "parity": self.parity,
            "expected": self.expected,
        }


@dataclass(frozen=True)
class SignSymReport:
    ok: bool
    violations: tuple[Violation, ...]

    def to_obj(self):
        return {"ok": self.ok, "violations": [v.to_obj() for v in self.violations]}


def _group_parities(roster: VariableRoster, exp) -> dict[str, int]:
    par: dict[str, int] = {g: 0 for g in roster.sign_groups}
    for i, v in enumerate(roster.variables):
        if v.sign_group is not None and exp[i]:
            par[v.sign_group] += exp[i]
    return {g: p % 2 for g, p in par.items()}


def _require_groups(roster: VariableRoster):
    missing = [v.name for v in roster.variables if v.sign_group is None]
    if missing or not roster.sign_groups:
        raise MathPreconditionError(
            "roster has variables without sign groups: %s" % (missing or "(all)")
        )


def check_field_signsym(Z: PolyField) -> SignSymReport:
    """Monomial-by-monomial parity check of Z(S_s z) = S_s Z(z)."""
    roster = Z.roster
    _require_groups(roster)
    violations: list[Violation] = []
    for j, comp in enumerate(Z.components):
        own = roster.variables[j].sign_group
        for exp, _ in comp.graded_items():
            par = _group_parities(roster, exp)
            for g, p in par.items():
                want_odd = g == own
                if (p % 2 == 1) != want_odd:
                    violations.append(
                        Violation(j, exp, g, p, "odd" if want_odd else "even")
                    )
    return SignSymReport(ok=not violations, violations=tuple(violations))


def check_hamiltonian_signsym(H: PolySeries) -> SignSymReport:
    """Every monomial of a symmetric Hamiltonian is even in every group."""
    roster = H.roster
    _require_groups(roster)
    violations: list[Violation] = []
    for exp, _ in H.graded_items():
        par = _group_parities(roster, exp)
        for g, p in par.items():
            if p % 2 == 1:
                violations.append(Violation(None, exp, g, p, "even"))
    return SignSymReport(ok=not violations, violations=tuple(violations))


def symmetric_bump_spec(r0: float, r1: float, sigma: float = 1.0) -> BumpSpec:
    """The sign-symmetric bump: product of even 1-D plateaus over the saddle
    coordinates, independent of the center coordinates."""
    return BumpSpec(r0=r0, r1=r1, sigma=sigma, profile="saddle_product")


def numeric_signsym_defect(
    eval_fn: Callable[[np.ndarray], np.ndarray],
    roster: VariableRoster,
    points: Sequence[np.ndarray],
    kind: str = "field",
) -> float:
    """max over points and patterns of |F(S_s z) - S_s F(z)| (field) or
    |F(S_s z) - F(z)| (scalar).  For sampled/compactified stages where the
    object is only available as an evaluator."""
    _require_groups(roster)
    patterns = all_sign_patterns(roster)
    worst = 0.0
    for z in points:
        z = np.asarray(z, dtype=float)
        base = eval_fn(z)
        for pat in patterns:
            sz = pat.apply(roster, z)
            fsz = eval_fn(sz)
            if kind == "field":
                expect = pat.apply(roster, np.asarray(base))
                worst = max(worst, float(np.max(np.abs(fsz - expect))))
            else:
                worst = max(worst, float(np.abs(fsz - base)))
    return worst
