"""Sparse truncated polynomial series and vector fields over a variable roster.

Everything downstream (resonance bookkeeping, normal forms, compactified
systems) is built from three objects:

* :class:`VariableRoster` -- an ordered list of phase-space variables, each
  carrying its linearization eigenvalue, its class (real saddle / complex
  saddle pair member / complex center pair member), an optional conjugate
  partner, an optional sign group, and optional symplectic pairing data.
* :class:`PolySeries` -- a scalar polynomial, stored sparsely as a dict
  ``exponent tuple -> complex coefficient``, together with a truncation degree
  ``trunc_degree``: terms of total degree <= trunc_degree are exact, higher
  degrees are identically dropped by every operation.
* :class:`PolyField` -- one :class:`PolySeries` per roster entry; doubles as a
  polynomial map (for composition, inversion and pushforwards).

Coefficients are complex double precision.  Canonical form drops coefficients
with magnitude <= ``eps_coeff`` (default 1e-12); serialization orders terms by
graded lexicographic order on the exponent tuples, which makes reports
byte-reproducible.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .defaults import EPS_COEFF, EPS_SPEC
from .errors import RosterError

__all__ = [
    "VarClass",
    "Variable",
    "VariableRoster",
    "PolySeries",
    "PolyField",
    "commutator",
    "pushforward_truncated",
    "hamiltonian_vector_field",
    "poisson_bracket",
    "reality_defect",
]


class VarClass(str, Enum):
    REAL_SADDLE = "real_saddle"
    COMPLEX_SADDLE = "complex_saddle"
    COMPLEX_CENTER = "complex_center"
    # realified coordinate with no spectral role (internal use: cohsolver view)
    REAL_GENERIC = "real_generic"


@dataclass(frozen=True)
class Variable:
    """One phase-space variable.

    ``conjugate`` is the roster index of the complex-conjugate variable (pairs
    only).  ``sympl_partner``/``sympl_factor`` encode Hamilton's equations for
    this variable as  d(var)/dt = sympl_factor * dH/d(partner):  (1, +1) style
    real pairs use factors +-1, complex center pairs -+2i, complex saddle
    quadruples +-2.
    """

    name: str
    klass: VarClass
    eigenvalue: complex = 0.0
    conjugate: int | None = None
    sign_group: str | None = None
    sympl_partner: int | None = None
    sympl_factor: complex = 0.0


@dataclass(frozen=True)
class VariableRoster:
    variables: tuple[Variable, ...]
    eps_spec: float = EPS_SPEC

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise RosterError("duplicate variable names in roster: %s" % names)
        for i, v in enumerate(self.variables):
            if v.klass in (VarClass.COMPLEX_SADDLE, VarClass.COMPLEX_CENTER):
                j = v.conjugate
                if j is None or not (0 <= j < len(self.variables)) or j == i:
                    raise RosterError(
                        "variable %r needs a conjugate partner index" % v.name
                    )
                w = self.variables[j]
                if w.conjugate != i:
                    raise RosterError(
                        "conjugation must be an involution (%r <-> %r)"
                        % (v.name, w.name)
                    )
                if abs(np.conj(complex(w.eigenvalue)) - complex(v.eigenvalue)) > 1e-9:
                    raise RosterError(
                        "conjugate pair (%r, %r) has non-conjugate eigenvalues"
                        % (v.name, w.name)
                    )
            elif v.conjugate is not None:
                raise RosterError("real variable %r cannot have a conjugate" % v.name)
            # eigenvalue placement must match the declared class
            re = complex(v.eigenvalue).real
            if v.klass in (VarClass.REAL_SADDLE, VarClass.COMPLEX_SADDLE):
                if abs(re) <= self.eps_spec:
                    raise RosterError(
                        "saddle variable %r has |Re eigenvalue| <= %g"
                        % (v.name, self.eps_spec)
                    )
            if v.klass is VarClass.REAL_SADDLE:
                if abs(complex(v.eigenvalue).imag) > self.eps_spec:
                    raise RosterError(
                        "real saddle variable %r has a complex eigenvalue" % v.name
                    )
            if v.klass is VarClass.COMPLEX_CENTER:
                if abs(re) > self.eps_spec:
                    raise RosterError(
                        "center variable %r has |Re eigenvalue| > %g"
                        % (v.name, self.eps_spec)
                    )

    # -- basic introspection ------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.variables)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.array([complex(v.eigenvalue) for v in self.variables], dtype=complex)

    def index(self, name: str) -> int:
        return self.names.index(name)

    @cached_property
    def conj_perm(self) -> tuple[int, ...]:
        """Index permutation swapping each variable with its conjugate."""
        return tuple(
            v.conjugate if v.conjugate is not None else i
            for i, v in enumerate(self.variables)
        )

    @cached_property
    def saddle_indices(self) -> tuple[int, ...]:
        return tuple(
            i
            for i, v in enumerate(self.variables)
            if v.klass in (VarClass.REAL_SADDLE, VarClass.COMPLEX_SADDLE)
        )

    @cached_property
    def center_indices(self) -> tuple[int, ...]:
        return tuple(
            i
            for i, v in enumerate(self.variables)
            if v.klass is VarClass.COMPLEX_CENTER
        )

    @cached_property
    def unstable_indices(self) -> tuple[int, ...]:
        """Saddle variables with Re(eigenvalue) > 0 (the 'x' block)."""
        return tuple(
            i for i in self.saddle_indices if self.eigenvalues[i].real > 0.0
        )

    @cached_property
    def stable_indices(self) -> tuple[int, ...]:
        """Saddle variables with Re(eigenvalue) < 0 (the 'y' block)."""
        return tuple(
            i for i in self.saddle_indices if self.eigenvalues[i].real < 0.0
        )

    @cached_property
    def sign_groups(self) -> tuple[str, ...]:
        """Distinct sign-group labels, in order of first appearance."""
        seen: list[str] = []
        for v in self.variables:
            if v.sign_group is not None and v.sign_group not in seen:
                seen.append(v.sign_group)
        return tuple(seen)

    def saddle_degree(self, exponent: Sequence[int]) -> int:
        return sum(exponent[i] for i in self.saddle_indices)

    def center_degree(self, exponent: Sequence[int]) -> int:
        return sum(exponent[i] for i in self.center_indices)

    def conj_swap_exponent(self, exponent: Sequence[int]) -> tuple[int, ...]:
        perm = self.conj_perm
        out = [0] * self.n
        for i, e in enumerate(exponent):
            out[perm[i]] = e
        return tuple(out)

    # -- serialization ------------------------------------------------------

    def to_obj(self) -> list[dict]:
        out = []
        for v in self.variables:
            ev = complex(v.eigenvalue)
            entry = {
                "name": v.name,
                "class": v.klass.value,
                "eigenvalue": [ev.real, ev.imag],
            }
            if v.conjugate is not None:
                entry["conjugate"] = self.variables[v.conjugate].name
            if v.sign_group is not None:
                entry["sign_group"] = v.sign_group
            if v.sympl_partner is not None:
                f = complex(v.sympl_factor)
                entry["sympl_partner"] = self.variables[v.sympl_partner].name
                entry["sympl_factor"] = [f.real, f.imag]
            out.append(entry)
        return out

    @classmethod
    def from_obj(cls, obj: Sequence[Mapping], eps_spec: float = EPS_SPEC):
        names = [e["name"] for e in obj]

        def _idx(name):
            try:
                return names.index(name)
            except ValueError:
                raise RosterError("unknown variable name %r in roster" % (name,))

        variables = []
        for e in obj:
            re, im = e["eigenvalue"]
            sp = e.get("sympl_partner")
            sf = e.get("sympl_factor", [0.0, 0.0])
            variables.append(
                Variable(
                    name=e["name"],
                    klass=VarClass(e["class"]),
                    eigenvalue=complex(re, im),
                    conjugate=None if e.get("conjugate") is None else _idx(e["conjugate"]),
                    sign_group=e.get("sign_group"),
                    sympl_partner=None if sp is None else _idx(sp),
                    sympl_factor=complex(sf[0], sf[1]),
                )
            )
        return cls(tuple(variables), eps_spec=eps_spec)


# ---------------------------------------------------------------------------
# scalar series
# ---------------------------------------------------------------------------


def _graded_key(exp: tuple[int, ...]):
    return (sum(exp), exp)


class PolySeries:
    """A scalar polynomial, exact through ``trunc_degree``."""

    __slots__ = ("roster", "trunc_degree", "terms")

    def __init__(
        self,
        roster: VariableRoster,
        trunc_degree: int,
        terms: Mapping[tuple[int, ...], complex] | None = None,
        *,
        eps: float = EPS_COEFF,
    ):
        if trunc_degree < 0:
            raise ValueError("trunc_degree must be >= 0")
        clean: dict[tuple[int, ...], complex] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != roster.n or any(e < 0 for e in exp):
                raise ValueError("bad exponent %s for %d variables" % (exp, roster.n))
            if sum(exp) > trunc_degree:
                continue
            c = complex(c)
            if abs(c) <= eps:
                continue
            clean[exp] = clean.get(exp, 0.0) + c
        self.roster = roster
        self.trunc_degree = int(trunc_degree)
        self.terms = {e: c for e, c in clean.items() if abs(c) > eps}

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, roster, trunc_degree):
        return cls(roster, trunc_degree, {})

    @classmethod
    def monomial(cls, roster, trunc_degree, exponent, coeff=1.0):
        return cls(roster, trunc_degree, {tuple(exponent): coeff})

    @classmethod
    def variable(cls, roster, trunc_degree, i, coeff=1.0):
        exp = [0] * roster.n
        exp[i] = 1
        return cls(roster, trunc_degree, {tuple(exp): coeff})

    @classmethod
    def constant(cls, roster, trunc_degree, c):
        return cls(roster, trunc_degree, {(0,) * roster.n: c})

    # -- views --------------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def max_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    @property
    def min_degree(self) -> int:
        return min((sum(e) for e in self.terms), default=0)

    def graded_items(self):
        """Terms sorted in graded lexicographic order (the canonical order)."""
        return sorted(self.terms.items(), key=lambda kv: _graded_key(kv[0]))

    def degree_part(self, d: int) -> "PolySeries":
        return PolySeries(
            self.roster, self.trunc_degree, {e: c for e, c in self.terms.items() if sum(e) == d}
        )

    def up_to(self, d: int) -> "PolySeries":
        return PolySeries(
            self.roster, min(self.trunc_degree, d),
            {e: c for e, c in self.terms.items() if sum(e) <= d},
        )

    def with_trunc(self, trunc_degree: int) -> "PolySeries":
        """Reinterpret at a different truncation degree (drops, never invents)."""
        return PolySeries(self.roster, trunc_degree, self.terms)

    # -- ring operations ----------------------------------------------------

    def _check(self, other: "PolySeries"):
        if other.roster is not self.roster and other.roster != self.roster:
            raise ValueError("series live on different rosters")

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PolySeries.constant(self.roster, self.trunc_degree, other)
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return PolySeries(self.roster, min(self.trunc_degree, other.trunc_degree), out)

    __radd__ = __add__

    def __neg__(self):
        return PolySeries(
            self.roster, self.trunc_degree, {e: -c for e, c in self.terms.items()}
        )

    def __sub__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PolySeries.constant(self.roster, self.trunc_degree, other)
        return self + (-other)

    def scale(self, a) -> "PolySeries":
        return PolySeries(
            self.roster, self.trunc_degree, {e: a * c for e, c in self.terms.items()}
        )

    __mul__ = None  # defined below so scalars and series both work

    def mul(self, other: "PolySeries", trunc_degree: int | None = None) -> "PolySeries":
        self._check(other)
        P = min(self.trunc_degree, other.trunc_degree) if trunc_degree is None else trunc_degree
        out: dict[tuple[int, ...], complex] = {}
        for e1, c1 in self.terms.items():
            d1 = sum(e1)
            for e2, c2 in other.terms.items():
                if d1 + sum(e2) > P:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return PolySeries(self.roster, P, out)

    def pow(self, k: int, trunc_degree: int | None = None) -> "PolySeries":
        P = self.trunc_degree if trunc_degree is None else trunc_degree
        out = PolySeries.constant(self.roster, P, 1.0)
        base = self.with_trunc(P)
        for _ in range(int(k)):
            out = out.mul(base, P)
            if out.is_zero:
                break
        return out

    def diff(self, i: int) -> "PolySeries":
        out: dict[tuple[int, ...], complex] = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            d = list(e)
            d[i] -= 1
            out[tuple(d)] = out.get(tuple(d), 0.0) + c * e[i]
        return PolySeries(self.roster, max(self.trunc_degree - 1, 0), out)

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, point) -> complex:
        z = np.asarray(point, dtype=complex)
        total = 0.0 + 0.0j
        for e, c in self.terms.items():
            m = c
            for zi, ei in zip(z, e):
                if ei:
                    m *= zi**ei
            total += m
        return total

    def evaluate_many(self, points) -> np.ndarray:
        """Vectorized evaluation at an (m, n) array of points."""
        pts = np.asarray(points, dtype=complex)
        if not self.terms:
            return np.zeros(pts.shape[0], dtype=complex)
        exps = np.array(list(self.terms.keys()))  # (t, n)
        coeffs = np.array(list(self.terms.values()), dtype=complex)  # (t,)
        # (m, t): product over variables of z_i^{e_i}
        with np.errstate(invalid="ignore"):
            mono = np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)
        return mono @ coeffs

    # -- composition --------------------------------------------------------

    def compose(
        self,
        args: Sequence["PolySeries"],
        trunc_degree: int | None = None,
        _pows: list[dict[int, "PolySeries"]] | None = None,
    ) -> "PolySeries":
        """Substitute ``args[i]`` for variable i.  Args share a common roster
        (which may differ from ``self.roster``); the result lives there."""
        if len(args) != self.roster.n:
            raise ValueError("need one substitution per variable")
        target = args[0].roster
        P = trunc_degree if trunc_degree is not None else self.trunc_degree
        pows = _pows if _pows is not None else [dict() for _ in args]

        def power(i, k):
            if k == 0:
                return PolySeries.constant(target, P, 1.0)
            cache = pows[i]
            if k not in cache:
                if k == 1:
                    cache[k] = args[i].with_trunc(P)
                else:
                    cache[k] = power(i, k - 1).mul(args[i].with_trunc(P), P)
            return cache[k]

        total = PolySeries.zero(target, P)
        for e, c in self.terms.items():
            term = PolySeries.constant(target, P, c)
            for i, ei in enumerate(e):
                if ei:
                    term = term.mul(power(i, ei), P)
                    if term.is_zero:
                        break
            total = total + term
        return total

    def conj_swap(self) -> "PolySeries":
        """Coefficient-conjugated, conjugate-variable-swapped series.

        A real-valued series (on the locus where conjugate pairs take
        conjugate values) equals its own conj_swap.
        """
        out = {}
        for e, c in self.terms.items():
            out[self.roster.conj_swap_exponent(e)] = np.conj(c)
        return PolySeries(self.roster, self.trunc_degree, out)

    # -- serialization ------------------------------------------------------

    def to_obj(self, with_roster: bool = True) -> dict:
        obj = {
            "trunc_degree": self.trunc_degree,
            "terms": [
                {"exp": list(e), "re": c.real, "im": c.imag}
                for e, c in self.graded_items()
            ],
        }
        if with_roster:
            obj["roster"] = self.roster.to_obj()
        return obj

    @classmethod
    def from_obj(cls, obj: Mapping, roster: VariableRoster | None = None):
        if roster is None:
            roster = VariableRoster.from_obj(obj["roster"])
        terms = {
            tuple(t["exp"]): complex(t["re"], t.get("im", 0.0)) for t in obj["terms"]
        }
        return cls(roster, obj["trunc_degree"], terms)

    def __eq__(self, other):
        return (
            isinstance(other, PolySeries)
            and self.roster == other.roster
            and self.trunc_degree == other.trunc_degree
            and self.terms == other.terms
        )

    def __repr__(self):
        head = ", ".join(
            "%s: %.6g%+.6gj" % (e, c.real, c.imag) for e, c in self.graded_items()[:4]
        )
        more = "" if len(self.terms) <= 4 else ", ... (%d terms)" % len(self.terms)
        return "PolySeries(P=%d, {%s%s})" % (self.trunc_degree, head, more)


def _series_mul(self, other):
    if isinstance(other, (int, float, complex)):
        return self.scale(other)
    return self.mul(other)


PolySeries.__mul__ = _series_mul
PolySeries.__rmul__ = _series_mul


# ---------------------------------------------------------------------------
# vector fields / polynomial maps
# ---------------------------------------------------------------------------


class PolyField:
    """A vector field (or polynomial map): one series per roster entry."""

    __slots__ = ("roster", "trunc_degree", "components", "_jac")

    def __init__(self, components: Sequence[PolySeries]):
        components = tuple(components)
        if not components:
            raise ValueError("empty field")
        roster = components[0].roster
        P = min(c.trunc_degree for c in components)
        for c in components:
            if c.roster != roster:
                raise ValueError("components live on different rosters")
        if len(components) != roster.n:
            raise ValueError(
                "need %d components, got %d" % (roster.n, len(components))
            )
        self.roster = roster
        self.trunc_degree = P
        self.components = tuple(c.with_trunc(P) for c in components)
        self._jac = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, roster, trunc_degree):
        return cls([PolySeries.zero(roster, trunc_degree)] * roster.n)

    @classmethod
    def identity_map(cls, roster, trunc_degree):
        return cls(
            [PolySeries.variable(roster, trunc_degree, i) for i in range(roster.n)]
        )

    @classmethod
    def from_linear(cls, roster, A, trunc_degree):
        A = np.asarray(A, dtype=complex)
        comps = []
        for i in range(roster.n):
            terms = {}
            for j in range(roster.n):
                if A[i, j] != 0:
                    e = [0] * roster.n
                    e[j] = 1
                    terms[tuple(e)] = A[i, j]
            comps.append(PolySeries(roster, trunc_degree, terms))
        return cls(comps)

    @classmethod
    def from_terms(cls, roster, trunc_degree, comp_terms: Sequence[Mapping]):
        return cls(
            [PolySeries(roster, trunc_degree, t) for t in comp_terms]
        )

    # -- views --------------------------------------------------------------

    def __getitem__(self, i) -> PolySeries:
        return self.components[i]

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.components)

    @property
    def max_degree(self) -> int:
        return max(c.max_degree for c in self.components)

    def degree_part(self, d: int) -> "PolyField":
        return PolyField([c.degree_part(d) for c in self.components])

    def up_to(self, d: int) -> "PolyField":
        return PolyField([c.up_to(d) for c in self.components])

    def with_trunc(self, P: int) -> "PolyField":
        return PolyField([c.with_trunc(P) for c in self.components])

    def linear_matrix(self) -> np.ndarray:
        n = self.roster.n
        A = np.zeros((n, n), dtype=complex)
        for i, comp in enumerate(self.components):
            for e, c in comp.terms.items():
                if sum(e) == 1:
                    A[i, e.index(1)] = c
        return A

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "PolyField") -> "PolyField":
        return PolyField([a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: "PolyField") -> "PolyField":
        return PolyField([a - b for a, b in zip(self.components, other.components)])

    def __neg__(self) -> "PolyField":
        return PolyField([-c for c in self.components])

    def scale(self, a) -> "PolyField":
        return PolyField([c.scale(a) for c in self.components])

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, point) -> np.ndarray:
        return np.array([c.evaluate(point) for c in self.components])

    def evaluate_many(self, points) -> np.ndarray:
        return np.stack([c.evaluate_many(points) for c in self.components], axis=1)

    def jacobian_series(self) -> list[list[PolySeries]]:
        if self._jac is None:
            self._jac = [
                [comp.diff(j) for j in range(self.roster.n)]
                for comp in self.components
            ]
        return self._jac

    def jacobian_eval(self, point) -> np.ndarray:
        J = self.jacobian_series()
        n = self.roster.n
        out = np.empty((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                out[i, j] = J[i][j].evaluate(point)
        return out

    # -- map structure ------------------------------------------------------

    def compose_map(self, inner: "PolyField", trunc_degree: int | None = None) -> "PolyField":
        """self o inner, truncated."""
        P = trunc_degree if trunc_degree is not None else min(
            self.trunc_degree, inner.trunc_degree
        )
        pows: list[dict] = [dict() for _ in range(self.roster.n)]
        args = list(inner.components)
        return PolyField(
            [c.compose(args, P, _pows=pows) for c in self.components]
        )

    def formal_inverse(self, trunc_degree: int | None = None) -> "PolyField":
        """Compositional inverse of a map with invertible linear part.

        Degree-by-degree fixed point iteration g <- L^{-1}(u - h_nl(g(u)));
        each sweep fixes one more degree, so ceil(P-1) sweeps suffice.
        """
        P = trunc_degree if trunc_degree is not None else self.trunc_degree
        L = self.linear_matrix()
        if abs(np.linalg.det(L)) < 1e-12:
            raise ValueError("map has a singular linear part; no formal inverse")
        Linv = np.linalg.inv(L)
        nl = PolyField(
            [c - c.degree_part(0) - c.degree_part(1) for c in self.components]
        ).with_trunc(P)
        ident = PolyField.identity_map(self.roster, P)
        linv_map = PolyField.from_linear(self.roster, Linv, P)
        g = linv_map
        for _ in range(max(P - 1, 0)):
            corr = nl.compose_map(g, P)
            g = linv_map.compose_map(ident - corr, P)
        return g

    # -- reality ------------------------------------------------------------

    def conj_swap(self) -> "PolyField":
        """The field whose component for each variable is the conj-swap of the
        component of its conjugate variable.  A real field equals its own
        conj_swap."""
        perm = self.roster.conj_perm
        return PolyField(
            [self.components[perm[i]].conj_swap() for i in range(self.roster.n)]
        )

    # -- serialization ------------------------------------------------------

    def to_obj(self, with_roster: bool = True) -> dict:
        obj = {
            "trunc_degree": self.trunc_degree,
            "components": [c.to_obj(with_roster=False) for c in self.components],
        }
        if with_roster:
            obj["roster"] = self.roster.to_obj()
        return obj

    @classmethod
    def from_obj(cls, obj: Mapping, roster: VariableRoster | None = None):
        if roster is None:
            roster = VariableRoster.from_obj(obj["roster"])
        return cls(
            [PolySeries.from_obj(c, roster=roster) for c in obj["components"]]
        )

    def __eq__(self, other):
        return (
            isinstance(other, PolyField) and self.components == other.components
        )

    def __repr__(self):
        return "PolyField(n=%d, P=%d)" % (self.roster.n, self.trunc_degree)


# ---------------------------------------------------------------------------
# derived operations
# ---------------------------------------------------------------------------


def commutator(X: PolyField, Y: PolyField, trunc_degree: int | None = None) -> PolyField:
    """[X, Y](z) = DY(z) X(z) - DX(z) Y(z), truncated."""
    P = trunc_degree if trunc_degree is not None else min(X.trunc_degree, Y.trunc_degree)
    JX, JY = X.jacobian_series(), Y.jacobian_series()
    n = X.roster.n
    comps = []
    for i in range(n):
        acc = PolySeries.zero(X.roster, P)
        for j in range(n):
            acc = acc + JY[i][j].mul(X.components[j], P) - JX[i][j].mul(Y.components[j], P)
        comps.append(acc)
    return PolyField(comps)


def pushforward_truncated(Z: PolyField, h: PolyField, trunc_degree: int) -> PolyField:
    """The field h_* Z expressed in u = h(z) coordinates:
    (h_* Z)(u) = Dh(h^{-1}(u)) Z(h^{-1}(u)), truncated at ``trunc_degree``."""
    P = trunc_degree
    g = h.formal_inverse(P)
    Jh = h.jacobian_series()
    n = Z.roster.n
    pows: list[dict] = [dict() for _ in range(n)]
    args = list(g.components)
    Zg = [Z.components[j].compose(args, P, _pows=pows) for j in range(n)]
    comps = []
    for i in range(n):
        acc = PolySeries.zero(g.roster, P)
        for j in range(n):
            if Jh[i][j].is_zero or Zg[j].is_zero:
                continue
            acc = acc + Jh[i][j].compose(args, P, _pows=pows).mul(Zg[j], P)
        comps.append(acc)
    return PolyField(comps)


def _require_pairing(roster: VariableRoster):
    for v in roster.variables:
        if v.sympl_partner is None:
            raise RosterError(
                "variable %r has no symplectic pairing; Hamiltonian operations "
                "need a fully paired roster" % v.name
            )


def hamiltonian_vector_field(H: PolySeries, trunc_degree: int) -> PolyField:
    """X_H per the roster's pairing:  d(var)/dt = factor * dH/d(partner)."""
    roster = H.roster
    _require_pairing(roster)
    comps = []
    for v in roster.variables:
        comps.append(
            H.diff(v.sympl_partner).scale(v.sympl_factor).with_trunc(trunc_degree)
        )
    return PolyField(comps)


def poisson_bracket(f: PolySeries, g: PolySeries, trunc_degree: int | None = None) -> PolySeries:
    """{f, g} = sum_v (df/dv) * factor_v * (dg/d partner(v)) = df . X_g."""
    roster = f.roster
    _require_pairing(roster)
    P = trunc_degree if trunc_degree is not None else min(f.trunc_degree, g.trunc_degree)
    acc = PolySeries.zero(roster, P)
    for i, v in enumerate(roster.variables):
        df = f.diff(i)
        if df.is_zero:
            continue
        dg = g.diff(v.sympl_partner)
        if dg.is_zero:
            continue
        acc = acc + df.mul(dg, P).scale(v.sympl_factor)
    return acc


def reality_defect(obj: PolySeries | PolyField) -> float:
    """Max coefficient distance from the reality constraint
    coeff(m) = conj(coeff(conj-swapped m)) (componentwise for fields, with the
    conjugate component swap)."""
    if isinstance(obj, PolySeries):
        diff = obj - obj.conj_swap()
        return max((abs(c) for c in diff.terms.values()), default=0.0)
    worst = 0.0
    swapped = obj.conj_swap()
    for a, b in zip(obj.components, swapped.components):
        diff = a - b
        worst = max(worst, max((abs(c) for c in diff.terms.values()), default=0.0))
    return worst
