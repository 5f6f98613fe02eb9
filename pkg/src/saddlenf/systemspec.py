"""Self-describing JSON system documents (schema_version 1).

A document carries the variable roster, optional explicit linear blocks
(A_u, A_s, B -- in the roster's eigen-frame), the polynomial nonlinearity,
an optional remainder part, bump parameters and smoothness-budget inputs:

    {
      "schema_version": 1,
      "mode": "general" | "hamiltonian",
      "roster": [ {"name", "class", "eigenvalue": [re, im], ...}, ... ],
      "matrices": {"A_u": [[...]], "A_s": [[...]], "B": [[...]]},   # optional
      "N": {"trunc_degree": P, "components": [...]} | {"terms": [...]},
      "R": ...,                                                      # optional
      "bump": {"r0", "r1", "sigma", "profile"},                      # optional
      "budget": {"k", "Q", "P", "q"},                                # optional
      "seed": 0
    }

Malformed documents raise :class:`SchemaError` (exit code 2) with a field
path; eigenvalues placed on the wrong side of the imaginary axis raise
:class:`SpectralGapError` (exit code 3) naming the offending eigenvalue.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .bump import BumpSpec
from .cohsolver import CompactifiedSystem, compactify
from .errors import MathPreconditionError, SchemaError, SpectralGapError
from .polycore import (
    PolyField,
    PolySeries,
    VariableRoster,
)

__all__ = [
    "SystemSpec",
    "parse_system_spec",
    "load_system_spec",
    "quadratic_hamiltonian",
]

SCHEMA_VERSION = 1


def _entry_to_complex(v, path: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(v[0], v[1])
    raise SchemaError("%s: matrix entries must be numbers or [re, im] pairs" % path)


def _parse_matrix(obj, path: str, dim: int) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != dim:
        raise SchemaError("%s: expected a %dx%d matrix" % (path, dim, dim))
    M = np.zeros((dim, dim), dtype=complex)
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != dim:
            raise SchemaError("%s: expected a %dx%d matrix" % (path, dim, dim))
        for j, v in enumerate(row):
            M[i, j] = _entry_to_complex(v, "%s[%d][%d]" % (path, i, j))
    return M


def _parse_terms(obj, roster: VariableRoster, trunc: int, path: str) -> dict:
    if not isinstance(obj, list):
        raise SchemaError("%s: 'terms' must be a list" % path)
    out = {}
    for t_i, t in enumerate(obj):
        here = "%s[%d]" % (path, t_i)
        if not isinstance(t, dict) or "exp" not in t:
            raise SchemaError("%s: each term needs an 'exp' list" % here)
        exp = t["exp"]
        if len(exp) != roster.n or not all(
            isinstance(e, int) and e >= 0 for e in exp
        ):
            raise SchemaError(
                "%s: 'exp' must be %d non-negative integers" % (here, roster.n)
            )
        out[tuple(exp)] = complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))
    return out


def _parse_series(obj, roster, path: str, min_degree: int) -> PolySeries:
    if not isinstance(obj, dict) or "terms" not in obj:
        raise SchemaError("%s: expected {'trunc_degree', 'terms'}" % path)
    degrees = [sum(t.get("exp", [])) for t in obj["terms"]]
    trunc = int(obj.get("trunc_degree", max(degrees, default=min_degree)))
    terms = _parse_terms(obj["terms"], roster, trunc, path + ".terms")
    for e in terms:
        if sum(e) < min_degree:
            raise SchemaError(
                "%s: term %s has degree < %d" % (path, list(e), min_degree)
            )
    return PolySeries(roster, trunc, terms)


def _parse_field(obj, roster, path: str, min_degree: int) -> PolyField:
    if not isinstance(obj, dict) or "components" not in obj:
        raise SchemaError("%s: expected {'trunc_degree', 'components'}" % path)
    comps_obj = obj["components"]
    if not isinstance(comps_obj, list) or len(comps_obj) != roster.n:
        raise SchemaError(
            "%s: need exactly %d components (one per roster variable)"
            % (path, roster.n)
        )
    all_deg = [
        sum(t.get("exp", []))
        for comp in comps_obj
        for t in comp.get("terms", [])
    ]
    trunc = int(obj.get("trunc_degree", max(all_deg, default=min_degree)))
    comps = []
    for c_i, comp in enumerate(comps_obj):
        here = "%s.components[%d]" % (path, c_i)
        if not isinstance(comp, dict) or "terms" not in comp:
            raise SchemaError("%s: expected {'terms': [...]}" % here)
        terms = _parse_terms(comp["terms"], roster, trunc, here + ".terms")
        for e in terms:
            if sum(e) < min_degree:
                raise SchemaError(
                    "%s: term %s has degree < %d" % (here, list(e), min_degree)
                )
        comps.append(PolySeries(roster, trunc, terms))
    return PolyField(comps)


def quadratic_hamiltonian(roster: VariableRoster, trunc_degree: int = 2) -> PolySeries:
    """H2 whose Hamiltonian vector field is diag(roster eigenvalues).

    Each symplectic pair {i, p} contributes (nu_i / factor_i) z_i z_p; the
    pairing consistency nu_p = nu_i * factor_p / factor_i is checked.
    """
    terms: dict = {}
    seen = set()
    for i, v in enumerate(roster.variables):
        if v.sympl_partner is None:
            raise MathPreconditionError(
                "variable %r has no symplectic partner" % v.name
            )
        p = v.sympl_partner
        if (p, i) in seen or (i, p) in seen:
            continue
        seen.add((i, p))
        w = roster.variables[p]
        if w.sympl_partner != i:
            raise MathPreconditionError(
                "symplectic pairing is not an involution (%r, %r)" % (v.name, w.name)
            )
        nu_i = complex(v.eigenvalue)
        f_i = complex(v.sympl_factor)
        f_p = complex(w.sympl_factor)
        if f_i == 0:
            raise MathPreconditionError("zero symplectic factor on %r" % v.name)
        expect_p = nu_i * f_p / f_i
        if abs(expect_p - complex(w.eigenvalue)) > 1e-9:
            raise MathPreconditionError(
                "eigenvalues of the pair (%r, %r) are inconsistent with the "
                "symplectic factors" % (v.name, w.name)
            )
        e = [0] * roster.n
        e[i] += 1
        e[p] += 1
        terms[tuple(e)] = terms.get(tuple(e), 0.0) + nu_i / f_i
    return PolySeries(roster, trunc_degree, terms)


@dataclass
class SystemSpec:
    mode: str
    roster: VariableRoster
    linear: np.ndarray  # full complex linear matrix in roster order
    N: PolyField | PolySeries
    R: PolyField | PolySeries | None
    bump: BumpSpec | None
    budget: dict
    seed: int
    source: str = "<memory>"
    raw: dict = dc_field(default_factory=dict)

    @property
    def trunc_degree(self) -> int:
        return self.N.trunc_degree

    @property
    def gap(self):
        from .spectral import spectral_gap

        eps = self.roster.eps_spec
        hyper = [nu for nu in self.roster.eigenvalues if abs(nu.real) > eps]
        if not hyper:
            raise SpectralGapError("system has no hyperbolic eigenvalues")
        return spectral_gap(hyper, eps)

    def full_field(self) -> PolyField:
        if self.mode != "general":
            raise MathPreconditionError("full_field applies to general mode")
        return PolyField.from_linear(self.roster, self.linear, self.trunc_degree) + self.N

    def full_hamiltonian(self) -> PolySeries:
        if self.mode != "hamiltonian":
            raise MathPreconditionError("full_hamiltonian applies to hamiltonian mode")
        return quadratic_hamiltonian(self.roster, self.trunc_degree) + self.N

    def compactified(self) -> CompactifiedSystem:
        if self.mode == "general":
            return compactify(self.full_field(), R=self.R, bump=self.bump)
        return compactify(H=self.full_hamiltonian(), H_R=self.R, bump=self.bump)

    def to_obj(self) -> dict:
        return dict(self.raw)


def _validate_block(M: np.ndarray, name: str, side: str, eps: float):
    for ev in np.linalg.eigvals(M):
        re = ev.real
        if side == "unstable" and re <= eps:
            raise SpectralGapError(
                "eigenvalue %s of %s is not unstable (Re <= %g)"
                % (_fmt_ev(ev), name, eps)
            )
        if side == "stable" and re >= -eps:
            raise SpectralGapError(
                "eigenvalue %s of %s is not stable (Re >= -%g)"
                % (_fmt_ev(ev), name, eps)
            )
        if side == "center" and abs(re) > eps:
            raise SpectralGapError(
                "eigenvalue %s of %s is not a center eigenvalue (|Re| > %g)"
                % (_fmt_ev(ev), name, eps)
            )


def _fmt_ev(ev: complex) -> str:
    return "%g%+gi" % (ev.real, ev.imag)


def parse_system_spec(obj, source: str = "<memory>") -> SystemSpec:
    if not isinstance(obj, dict):
        raise SchemaError("%s: top level must be a JSON object" % source)
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(
            "%s: schema_version must be %d (got %r)" % (source, SCHEMA_VERSION, version)
        )
    mode = obj.get("mode", "general")
    if mode not in ("general", "hamiltonian"):
        raise SchemaError("%s: mode must be 'general' or 'hamiltonian'" % source)
    if "roster" not in obj:
        raise SchemaError("%s: missing 'roster'" % source)
    roster = VariableRoster.from_obj(obj["roster"])  # RosterError is a SchemaError

    # linear part: roster eigenvalues on the diagonal, optionally overridden
    # block-wise (the blocks must stay in the roster's eigen-frame)
    A = np.diag(roster.eigenvalues).astype(complex)
    mat_obj = obj.get("matrices", {})
    if not isinstance(mat_obj, dict):
        raise SchemaError("%s: 'matrices' must be an object" % source)
    eps = roster.eps_spec
    nus = roster.eigenvalues
    blocks = {
        "A_u": ("unstable", [i for i in range(roster.n) if nus[i].real > eps]),
        "A_s": ("stable", [i for i in range(roster.n) if nus[i].real < -eps]),
        "B": ("center", [i for i in range(roster.n) if abs(nus[i].real) <= eps]),
    }
    for key, (side, idx) in blocks.items():
        if key not in mat_obj:
            continue
        M = _parse_matrix(mat_obj[key], "%s.matrices.%s" % (source, key), len(idx))
        _validate_block(M, key, side, eps)
        nu_block = roster.eigenvalues[list(idx)]
        if np.abs(np.diag(M) - nu_block).max() > 1e-9:
            raise MathPreconditionError(
                "%s diagonal disagrees with the roster eigenvalues; supply "
                "blocks in the roster's eigen-frame" % key
            )
        off = M - np.diag(np.diag(M))
        for i in range(len(idx)):
            for j in range(len(idx)):
                if abs(off[i, j]) > 0 and abs(nu_block[i] - nu_block[j]) > 1e-9:
                    raise MathPreconditionError(
                        "%s couples distinct eigenvalues %s and %s; only "
                        "Jordan-type off-diagonal entries are supported"
                        % (key, _fmt_ev(nu_block[i]), _fmt_ev(nu_block[j]))
                    )
        A[np.ix_(idx, idx)] = M
    unknown = set(mat_obj) - set(blocks)
    if unknown:
        raise SchemaError(
            "%s: unknown matrix block(s) %s" % (source, sorted(unknown))
        )

    if "N" not in obj:
        raise SchemaError("%s: missing nonlinearity 'N'" % source)
    if mode == "hamiltonian":
        N = _parse_series(obj["N"], roster, source + ".N", min_degree=3)
        R = (
            _parse_series(obj["R"], roster, source + ".R", min_degree=2)
            if obj.get("R") is not None
            else None
        )
        if np.abs(A - np.diag(np.diag(A))).max() > 0:
            raise MathPreconditionError(
                "hamiltonian mode builds H2 from the roster pairing and needs "
                "a diagonal linear part"
            )
    else:
        N = _parse_field(obj["N"], roster, source + ".N", min_degree=2)
        R = (
            _parse_field(obj["R"], roster, source + ".R", min_degree=2)
            if obj.get("R") is not None
            else None
        )

    bump = None
    if obj.get("bump") is not None:
        try:
            bump = BumpSpec.from_obj(obj["bump"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError("%s.bump: %s" % (source, exc)) from exc

    budget = obj.get("budget", {})
    if budget is None:
        budget = {}
    if not isinstance(budget, dict):
        raise SchemaError("%s: 'budget' must be an object" % source)
    for key in budget:
        if key not in ("k", "Q", "P", "q"):
            raise SchemaError("%s.budget: unknown key %r" % (source, key))
        if not isinstance(budget[key], int):
            raise SchemaError("%s.budget.%s must be an integer" % (source, key))

    seed = obj.get("seed", 0)
    if not isinstance(seed, int):
        raise SchemaError("%s: 'seed' must be an integer" % source)

    return SystemSpec(
        mode=mode,
        roster=roster,
        linear=A,
        N=N,
        R=R,
        bump=bump,
        budget=dict(budget),
        seed=seed,
        source=source,
        raw=obj,
    )


def load_system_spec(path) -> SystemSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError("cannot read %s: %s" % (path, exc)) from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("%s: invalid JSON (%s)" % (path, exc)) from exc
    return parse_system_spec(obj, source=str(path))
