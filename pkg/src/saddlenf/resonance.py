"""Resonance bookkeeping for vector fields and Hamiltonians.

For eigenvalues nu over the roster, a vector-field monomial (j, alpha) --
coefficient of z^alpha in component j -- is resonant iff

    <alpha, nu> = nu_j .

A Hamiltonian monomial alpha (in H itself) is resonant iff its small divisor
vanishes; two conventions are provided:

* ``"all"``     -- <alpha, nu> = 0 over *all* roster entries, conjugate
  variables counted separately with their own (conjugated) eigenvalues.
  This is the default.
* ``"paired"``  -- the split form <nu_R, alpha_saddle> + <beta, nu_C> +
  <beta*, conj(nu_C)> = 0, which additionally *requires* the saddle
  eigenvalues to be real and to come in +-pairs (the Hamiltonian pairing).
  Where both apply, the two conventions agree; "paired" refuses rosters it
  was not written for instead of silently mis-grouping them.

Decisions can run in float mode (|divisor| <= eps_res) or in exact rational
mode, where eigenvalue components are converted exactly to Fractions and the
divisor comparison is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterator, Sequence

from .defaults import EPS_RES
from .errors import MathPreconditionError
from .polycore import VariableRoster

__all__ = [
    "ResonanceMode",
    "ResonantSet",
    "resonant_set",
    "iter_exponents",
    "divisor_vector_field",
    "divisor_hamiltonian",
    "is_saddle_resonant_monomial",
]


class ResonanceMode(str, Enum):
    VECTOR_FIELD = "vector_field"
    HAMILTONIAN = "hamiltonian"


def iter_exponents(n: int, k1: int, k2: int) -> Iterator[tuple[int, ...]]:
    """All exponent tuples over n variables with k1 <= degree <= k2, in graded
    lexicographic order (degree ascending, then lex)."""

    def compositions(total, slots):
        if slots == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, slots - 1):
                yield (first,) + rest

    for d in range(k1, k2 + 1):
        yield from sorted(compositions(d, n))


def _exact_eigenvalues(roster: VariableRoster) -> list[tuple[Fraction, Fraction]]:
    # Fraction(float) is exact, so floats that encode rationals (e.g. integers
    # or dyadics) lose nothing here.
    return [
        (Fraction(complex(v.eigenvalue).real), Fraction(complex(v.eigenvalue).imag))
        for v in roster.variables
    ]


def _dot_exact(alpha, exact_nu) -> tuple[Fraction, Fraction]:
    re = Fraction(0)
    im = Fraction(0)
    for a, (r, i) in zip(alpha, exact_nu):
        if a:
            re += a * r
            im += a * i
    return re, im


def divisor_vector_field(roster: VariableRoster, j: int, alpha: Sequence[int]) -> complex:
    """<alpha, nu> - nu_j."""
    nu = roster.eigenvalues
    return complex(sum(a * nu[i] for i, a in enumerate(alpha) if a) - nu[j])


def divisor_hamiltonian(
    roster: VariableRoster, alpha: Sequence[int], convention: str = "all"
) -> complex:
    """The Hamiltonian small divisor <alpha, nu> under the chosen convention."""
    if convention == "paired":
        _check_paired_structure(roster)
    elif convention != "all":
        raise ValueError("unknown Hamiltonian resonance convention %r" % convention)
    nu = roster.eigenvalues
    return complex(sum(a * nu[i] for i, a in enumerate(alpha) if a))


def _check_paired_structure(roster: VariableRoster, eps: float = 1e-9, exact: bool = False):
    pos, neg = [], []
    for i in roster.saddle_indices:
        ev = complex(roster.eigenvalues[i])
        if abs(ev.imag) > eps:
            raise MathPreconditionError(
                "paired Hamiltonian resonance convention needs real saddle "
                "eigenvalues; %r has eigenvalue %r"
                % (roster.variables[i].name, ev)
            )
        (pos if ev.real > 0 else neg).append(abs(ev.real))
    pos.sort()
    neg.sort()
    if len(pos) != len(neg) or any(
        (p != q if exact else abs(p - q) > eps) for p, q in zip(pos, neg)
    ):
        raise MathPreconditionError(
            "paired convention needs the saddle spectrum in +- pairs; "
            "got positives %s vs negatives %s" % (pos, neg)
        )


@dataclass(frozen=True)
class ResonantSet:
    """Resonant monomials in a degree window.

    ``entries`` holds (component_index, exponent) pairs for vector fields and
    (None, exponent) for Hamiltonians, in graded lex order.
    """

    window: tuple[int, int]
    mode: ResonanceMode
    entries: tuple[tuple[int | None, tuple[int, ...]], ...]
    eps_res: float
    exact: bool
    convention: str = "all"

    def __contains__(self, item) -> bool:
        j, exp = item
        return (j, tuple(exp)) in self._lookup

    @property
    def _lookup(self):
        d = self.__dict__.get("_lookup_cache")
        if d is None:
            d = frozenset((j, e) for j, e in self.entries)
            self.__dict__["_lookup_cache"] = d
        return d

    def to_obj(self) -> dict:
        return {
            "window": list(self.window),
            "mode": self.mode.value,
            "convention": self.convention,
            "eps_res": self.eps_res,
            "exact": self.exact,
            "count": len(self.entries),
            "entries": [
                {"component": j, "exp": list(e)} for j, e in self.entries
            ],
        }


def resonant_set(
    roster: VariableRoster,
    k1: int,
    k2: int,
    mode: ResonanceMode = ResonanceMode.VECTOR_FIELD,
    eps_res: float = EPS_RES,
    exact: bool = False,
    hres_convention: str = "all",
) -> ResonantSet:
    """Enumerate Res(roster, k1, k2) in the requested mode."""
    if not (1 <= k1 <= k2):
        raise ValueError("need 1 <= k1 <= k2 (got %s, %s)" % (k1, k2))
    mode = ResonanceMode(mode)
    n = roster.n
    exact_nu = _exact_eigenvalues(roster) if exact else None
    if mode is ResonanceMode.HAMILTONIAN and hres_convention == "paired":
        _check_paired_structure(roster, eps=eps_res, exact=exact)

    entries: list[tuple[int | None, tuple[int, ...]]] = []
    for alpha in iter_exponents(n, k1, k2):
        if mode is ResonanceMode.VECTOR_FIELD:
            for j in range(n):
                if exact:
                    re, im = _dot_exact(alpha, exact_nu)
                    nu_j = exact_nu[j]
                    hit = (re == nu_j[0]) and (im == nu_j[1])
                else:
                    hit = abs(divisor_vector_field(roster, j, alpha)) <= eps_res
                if hit:
                    entries.append((j, alpha))
        else:
            if exact:
                re, im = _dot_exact(alpha, exact_nu)
                hit = (re == 0) and (im == 0)
            else:
                hit = abs(divisor_hamiltonian(roster, alpha, "all")) <= eps_res
            if hit:
                entries.append((None, alpha))
    return ResonantSet(
        window=(k1, k2),
        mode=mode,
        entries=tuple(entries),
        eps_res=eps_res,
        exact=exact,
        convention=hres_convention if mode is ResonanceMode.HAMILTONIAN else "all",
    )


def is_saddle_resonant_monomial(
    roster: VariableRoster,
    j: int,
    alpha: Sequence[int],
    eps_res: float = EPS_RES,
    exact: bool = False,
) -> bool:
    """Resonance of the saddle sub-exponent alone:
    <alpha restricted to saddle variables, nu_saddle> = nu_j.

    This is the classification entering the saddle-component normal form
    (center degrees do not count); full resonance of a saddle component
    implies it when the center eigenvalues are purely imaginary and the
    center sub-exponent is conjugation-balanced.
    """
    if j not in roster.saddle_indices:
        raise MathPreconditionError(
            "component %r is not a saddle variable" % roster.variables[j].name
        )
    if exact:
        exact_nu = _exact_eigenvalues(roster)
        re = Fraction(0)
        im = Fraction(0)
        for i in roster.saddle_indices:
            if alpha[i]:
                re += alpha[i] * exact_nu[i][0]
                im += alpha[i] * exact_nu[i][1]
        return re == exact_nu[j][0] and im == exact_nu[j][1]
    nu = roster.eigenvalues
    s = sum(alpha[i] * nu[i] for i in roster.saddle_indices)
    return abs(complex(s) - complex(nu[j])) <= eps_res
