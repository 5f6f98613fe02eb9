"""Degree-by-degree polynomial normal forms.

General vector fields use Poincare-Dulac: at each degree d the removable
(non-resonant, not explicitly kept) part W_d is cancelled by the near-identity
substitution u = z - h_d(z), where h_d solves the homological equation
[A, h_d] = W_d.  For A = D + N in complex Jordan form (D the eigenvalue
diagonal, N nilpotent) the homological operator splits as L_D + L_N with L_D
diagonal on monomial fields -- eigenvalue <alpha, nu> - nu_j -- and L_N
nilpotent on each homogeneous degree, so

    h = sum_s (-L_D^{-1} L_N)^s L_D^{-1} W

is a *terminating* Neumann series.  L_N maps a monomial to monomials with the
same divisor, so non-resonance of W is all that is needed.

Hamiltonians use Lie transforms: a degree-d generator chi_d with
{chi_d, H_2} = -W_d (divisor <alpha, nu>) removes W_d from H via
H <- exp(-L_chi) H, and the coordinate change is the time-1 flow of X_chi,
expanded as a truncated Lie series.  Such transforms are symplectic up to the
truncation degree, which :func:`symplectic_defect` verifies coefficientwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .defaults import EPS_NF, EPS_RES
from .errors import (
    BudgetInequalityError,
    MathPreconditionError,
    ResonantMonomialError,
)
from .polycore import (
    PolyField,
    PolySeries,
    VariableRoster,
    commutator,
    hamiltonian_vector_field,
    poisson_bracket,
    pushforward_truncated,
)

__all__ = [
    "LinearPart",
    "homological_solve",
    "NormalizationResult",
    "poincare_dulac",
    "lie_normalize_hamiltonian",
    "SplitRemainder",
    "split_remainder",
    "theorem_form_report",
    "symplectic_form_matrix",
    "symplectic_defect",
]


@dataclass(frozen=True)
class LinearPart:
    """Diagonal eigenvalues from the roster plus an optional nilpotent part
    (complex Jordan form: N[i, j] != 0 only between equal eigenvalues)."""

    roster: VariableRoster
    nilpotent: np.ndarray | None = None

    def __post_init__(self):
        if self.nilpotent is not None:
            N = np.asarray(self.nilpotent, dtype=complex)
            object.__setattr__(self, "nilpotent", N)
            n = self.roster.n
            if N.shape != (n, n):
                raise MathPreconditionError("nilpotent part has wrong shape")
            nu = self.roster.eigenvalues
            for i in range(n):
                for j in range(n):
                    if abs(N[i, j]) > 0 and abs(nu[i] - nu[j]) > 1e-9:
                        raise MathPreconditionError(
                            "nilpotent entry (%d, %d) couples distinct "
                            "eigenvalues; linear part is not in Jordan form"
                            % (i, j)
                        )
            if np.abs(np.linalg.matrix_power(N, n)).max() > 1e-9:
                raise MathPreconditionError("claimed nilpotent part is not nilpotent")

    def matrix(self) -> np.ndarray:
        A = np.diag(self.roster.eigenvalues)
        if self.nilpotent is not None:
            A = A + self.nilpotent
        return A

    @classmethod
    def from_field(cls, Z: PolyField, tol: float = 1e-9) -> "LinearPart":
        """Extract the linear part of Z, requiring complex Jordan form with
        diagonal equal to the roster eigenvalues."""
        A = Z.linear_matrix()
        nu = Z.roster.eigenvalues
        if np.abs(np.diag(A) - nu).max() > tol:
            raise MathPreconditionError(
                "diagonal of the linear part does not match the roster "
                "eigenvalues (max deviation %g)" % np.abs(np.diag(A) - nu).max()
            )
        N = A - np.diag(np.diag(A))
        if np.abs(N).max() <= tol:
            return cls(Z.roster, None)
        return cls(Z.roster, N)


def _diagonal_solve(A: LinearPart, W: PolyField, eps_res: float) -> PolyField:
    nu = A.roster.eigenvalues
    comps = []
    for j, comp in enumerate(W.components):
        out = {}
        for exp, c in comp.terms.items():
            divisor = complex(sum(a * nu[i] for i, a in enumerate(exp) if a) - nu[j])
            if abs(divisor) <= eps_res:
                raise ResonantMonomialError(j, exp, divisor)
            out[exp] = c / divisor
        comps.append(PolySeries(W.roster, comp.trunc_degree, out))
    return PolyField(comps)


def homological_solve(A: LinearPart, W: PolyField, eps_res: float = EPS_RES) -> PolyField:
    """Solve [A, h] = W termwise; terminating Neumann series for Jordan blocks."""
    h = _diagonal_solve(A, W, eps_res)
    if A.nilpotent is None:
        return h
    N_field = PolyField.from_linear(A.roster, A.nilpotent, W.trunc_degree)
    term = h
    # bound: L_N strictly increases a finite filtration on each degree
    max_iter = (W.trunc_degree + 2) * A.roster.n + 2
    for _ in range(max_iter):
        ln_term = commutator(N_field, term, W.trunc_degree)
        if ln_term.is_zero:
            return h
        term = _diagonal_solve(A, ln_term, eps_res).scale(-1.0)
        h = h + term
        if term.is_zero:
            return h
    raise MathPreconditionError("Neumann series for the nilpotent part did not terminate")


# ---------------------------------------------------------------------------
# normalization drivers
# ---------------------------------------------------------------------------


@dataclass
class NormalizationResult:
    normalized: PolyField | PolySeries
    transform: PolyField  # map: original coords -> normalized coords, Id + h.o.t.
    inverse: PolyField
    generators: tuple  # per-degree removal data (PolyField h_d or PolySeries chi_d)
    kept: tuple  # (component | None, exponent) monomials present beyond degree 1/2
    residual_nonresonant_max: float
    mode: str
    degrees: tuple[int, ...]

    def to_obj(self) -> dict:
        return {
            "mode": self.mode,
            "degrees": list(self.degrees),
            "residual_nonresonant_max": self.residual_nonresonant_max,
            "kept": [{"component": j, "exp": list(e)} for j, e in self.kept],
            "normalized": self.normalized.to_obj(),
            "transform": self.transform.to_obj(with_roster=False),
            "inverse": self.inverse.to_obj(with_roster=False),
        }


def _split_removable_field(
    F_d: PolyField, nu: np.ndarray, keep, eps_res: float
) -> PolyField:
    comps = []
    for j, comp in enumerate(F_d.components):
        out = {}
        for exp, c in comp.terms.items():
            if (j, exp) in keep:
                continue
            divisor = complex(sum(a * nu[i] for i, a in enumerate(exp) if a) - nu[j])
            if abs(divisor) <= eps_res:
                continue  # resonant: always kept
            out[exp] = c
        comps.append(PolySeries(F_d.roster, F_d.trunc_degree, out))
    return PolyField(comps)


def poincare_dulac(
    Z: PolyField,
    P: int | None = None,
    keep: Iterable[tuple[int, Sequence[int]]] = (),
    eps_res: float = EPS_RES,
    eps_nf: float = EPS_NF,
) -> NormalizationResult:
    """Remove all removable monomials of degrees 2..P from Z.

    ``keep`` lists extra (component, exponent) monomials to retain; resonant
    monomials are always retained.  The returned transform maps original to
    normalized coordinates (identity linear part) and the normalized field is
    its pushforward of Z.
    """
    roster = Z.roster
    P = Z.trunc_degree if P is None else P
    Z = Z.with_trunc(P)
    A = LinearPart.from_field(Z)
    nu = roster.eigenvalues
    keep = frozenset((j, tuple(e)) for j, e in keep)

    F = Z
    T = PolyField.identity_map(roster, P)
    generators = []
    degrees = []
    for d in range(2, P + 1):
        W_d = _split_removable_field(F.degree_part(d), nu, keep, eps_res)
        degrees.append(d)
        if W_d.is_zero:
            generators.append(PolyField.zero(roster, P))
            continue
        h_d = homological_solve(A, W_d, eps_res)
        m_d = PolyField.identity_map(roster, P) - h_d.with_trunc(P)
        F = pushforward_truncated(F, m_d, P)
        T = m_d.compose_map(T, P)
        generators.append(h_d)

    # residual audit: anything non-resonant outside `keep` left above degree 1?
    residual = 0.0
    kept = []
    for j, comp in enumerate(F.components):
        for exp, c in comp.terms.items():
            if sum(exp) < 2:
                continue
            kept.append((j, exp))
            if (j, exp) in keep:
                continue
            divisor = complex(sum(a * nu[i] for i, a in enumerate(exp) if a) - nu[j])
            if abs(divisor) > eps_res:
                residual = max(residual, abs(c))
    kept.sort(key=lambda je: (sum(je[1]), je[1], je[0]))

    return NormalizationResult(
        normalized=F,
        transform=T,
        inverse=T.formal_inverse(P),
        generators=tuple(generators),
        kept=tuple(kept),
        residual_nonresonant_max=residual,
        mode="general",
        degrees=tuple(degrees),
    )


def _lie_diag_solve(H2_roster, W: PolySeries, nu, eps_res) -> PolySeries:
    out = {}
    for exp, c in W.terms.items():
        divisor = complex(sum(a * nu[i] for i, a in enumerate(exp) if a))
        if abs(divisor) <= eps_res:
            raise ResonantMonomialError(None, exp, divisor)
        out[exp] = c / divisor
    return PolySeries(W.roster, W.trunc_degree, out)


def _lie_generator(H2: PolySeries, W: PolySeries, nu, eps_res, max_degree) -> PolySeries:
    """Solve {chi, H2} = W (the full quadratic part, Jordan blocks included)."""
    chi = _lie_diag_solve(H2.roster, W, nu, eps_res)
    # nilpotent correction: iterate on the difference between the true bracket
    # and the diagonal action
    for _ in range((max_degree + 2) * H2.roster.n + 2):
        resid = poisson_bracket(chi, H2, max_degree) - W
        if resid.is_zero or max(abs(c) for c in resid.terms.values()) < 1e-14:
            return chi
        chi = chi - _lie_diag_solve(H2.roster, resid, nu, eps_res)
    raise MathPreconditionError("generator solve did not terminate (quadratic part not in Jordan form?)")


def lie_normalize_hamiltonian(
    H: PolySeries,
    keep: Iterable[Sequence[int]] = (),
    eps_res: float = EPS_RES,
    eps_nf: float = EPS_NF,
    hres_convention: str = "all",
) -> NormalizationResult:
    """Normalize H degree by degree (orders 3 .. trunc_degree of H).

    The transform is the composition of time-1 Hamiltonian flows of the
    generators, so it is symplectic up to the truncation degree.
    """
    roster = H.roster
    Pmax = H.trunc_degree
    nu = roster.eigenvalues
    if hres_convention == "paired":
        from .resonance import _check_paired_structure

        _check_paired_structure(roster, eps=eps_res)
    elif hres_convention != "all":
        raise ValueError("unknown Hamiltonian resonance convention %r" % hres_convention)
    keep = frozenset(tuple(e) for e in keep)

    H2 = H.degree_part(2)
    A = hamiltonian_vector_field(H2, 2).linear_matrix()
    if np.abs(np.diag(A) - nu).max() > 1e-9:
        raise MathPreconditionError(
            "X_{H_2} diagonal does not match the roster eigenvalues"
        )

    cur = H
    T = PolyField.identity_map(roster, Pmax)
    generators = []
    degrees = []
    for d in range(3, Pmax + 1):
        degrees.append(d)
        W = PolySeries(
            roster,
            Pmax,
            {
                exp: c
                for exp, c in cur.degree_part(d).terms.items()
                if exp not in keep
                and abs(complex(sum(a * nu[i] for i, a in enumerate(exp) if a)))
                > eps_res
            },
        )
        if W.is_zero:
            generators.append(PolySeries.zero(roster, Pmax))
            continue
        chi = _lie_generator(H2, -W, nu, eps_res, Pmax)
        generators.append(chi)

        # H <- exp(-L_chi) H,  L_chi f = {f, chi}; terminates (deg chi >= 3)
        new_H = cur
        term = cur
        sign = 1.0
        fact = 1.0
        for kk in range(1, Pmax):
            term = poisson_bracket(term, chi, Pmax)
            if term.is_zero:
                break
            sign = -sign
            fact *= kk
            new_H = new_H + term.scale(sign / fact)
        cur = new_H

        # coordinate change u = time-1 flow of X_chi applied after the ones
        # already accumulated
        flow = _lie_series_map(chi, Pmax)
        T = flow.compose_map(T, Pmax)

    residual = 0.0
    kept = []
    for exp, c in cur.terms.items():
        if sum(exp) < 3:
            continue
        kept.append((None, exp))
        if exp in keep:
            continue
        divisor = complex(sum(a * nu[i] for i, a in enumerate(exp) if a))
        if abs(divisor) > eps_res:
            residual = max(residual, abs(c))
    kept.sort(key=lambda je: (sum(je[1]), je[1]))

    return NormalizationResult(
        normalized=cur,
        transform=T,
        inverse=T.formal_inverse(Pmax),
        generators=tuple(generators),
        kept=tuple(kept),
        residual_nonresonant_max=residual,
        mode="hamiltonian",
        degrees=tuple(degrees),
    )


def _lie_series_map(chi: PolySeries, P: int) -> PolyField:
    """Time-1 flow of X_chi on coordinates: u_i = sum_k (1/k!) L_chi^k z_i."""
    roster = chi.roster
    comps = []
    for i in range(roster.n):
        zi = PolySeries.variable(roster, P, i)
        acc = zi
        term = zi
        fact = 1.0
        for kk in range(1, P + 1):
            term = poisson_bracket(term, chi, P)
            if term.is_zero:
                break
            fact *= kk
            acc = acc + term.scale(1.0 / fact)
        comps.append(acc)
    return PolyField(comps)


# ---------------------------------------------------------------------------
# symplectic audit
# ---------------------------------------------------------------------------


def symplectic_form_matrix(roster: VariableRoster) -> np.ndarray:
    """Matrix of the symplectic form consistent with the roster pairing:
    X_H = J grad H  with  J[i, partner(i)] = factor_i,  and  Omega = (J^T)^{-1}."""
    n = roster.n
    J = np.zeros((n, n), dtype=complex)
    for i, v in enumerate(roster.variables):
        if v.sympl_partner is None:
            raise MathPreconditionError("roster has no symplectic pairing")
        J[i, v.sympl_partner] = complex(v.sympl_factor)
    if abs(np.linalg.det(J)) < 1e-12:
        raise MathPreconditionError("symplectic pairing is degenerate")
    return np.linalg.inv(J.T)


def symplectic_defect(T: PolyField, check_degree: int | None = None) -> float:
    """Max coefficient of (DT^T Omega DT - Omega) through ``check_degree``
    (default: trunc_degree - 1, the last degree the truncated map controls)."""
    roster = T.roster
    Omega = symplectic_form_matrix(roster)
    P = T.trunc_degree
    D = check_degree if check_degree is not None else P - 1
    J = T.jacobian_series()
    n = roster.n
    worst = 0.0
    for i in range(n):
        for j in range(n):
            acc = PolySeries.zero(roster, D)
            for kk in range(n):
                for ll in range(n):
                    if Omega[kk, ll] == 0 or J[kk][i].is_zero or J[ll][j].is_zero:
                        continue
                    acc = acc + J[kk][i].mul(J[ll][j], D).scale(Omega[kk, ll])
            acc = acc - PolySeries.constant(roster, D, Omega[i, j])
            if acc.terms:
                worst = max(worst, max(abs(c) for c in acc.terms.values()))
    return worst


# ---------------------------------------------------------------------------
# remainder splitting and the target form audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitRemainder:
    R1: PolyField | PolySeries
    R2: PolyField | PolySeries
    ell1: int
    ell2: int
    by: str
    Q: int
    notes: tuple[str, ...] = ()

    def to_obj(self) -> dict:
        return {
            "ell1": self.ell1,
            "ell2": self.ell2,
            "by": self.by,
            "Q": self.Q,
            "notes": list(self.notes),
            "R1": self.R1.to_obj(with_roster=False),
            "R2": self.R2.to_obj(with_roster=False),
        }


def _series_split(comp: PolySeries, cond) -> tuple[PolySeries, PolySeries]:
    t1, t2 = {}, {}
    for exp, c in comp.terms.items():
        (t1 if cond(exp) else t2)[exp] = c
    return (
        PolySeries(comp.roster, comp.trunc_degree, t1),
        PolySeries(comp.roster, comp.trunc_degree, t2),
    )


def split_remainder(
    R: PolyField | PolySeries,
    ell1: int,
    ell2: int,
    by: str = "y",
    Q: int | None = None,
) -> SplitRemainder:
    """Partition R = R1 + R2 with R1 = O(|x|^{ell1+1}) and R2 = O(|y|^{ell2+1}).

    Default rule ("y"): R1 collects the monomials with stable-variable degree
    <= ell2 (a Taylor expansion in y up to order ell2); "x" mirrors the rule on
    the unstable degree.  Q defaults to (min saddle degree of R) - 1; the
    inequalities l1+l2 <= Q and 2*l2+1 <= Q are enforced, the latter with the
    rearrangement waiver (l2 <= l1).
    """
    roster = R.roster if isinstance(R, PolySeries) else R.roster
    xs = roster.unstable_indices
    ys = roster.stable_indices

    comps = [R] if isinstance(R, PolySeries) else list(R.components)
    min_sdeg = None
    for comp in comps:
        for exp in comp.terms:
            sdeg = roster.saddle_degree(exp)
            min_sdeg = sdeg if min_sdeg is None else min(min_sdeg, sdeg)
    if Q is None:
        Q = (min_sdeg - 1) if min_sdeg is not None else ell1 + ell2

    notes = []
    if min_sdeg is not None and min_sdeg < Q + 1:
        raise BudgetInequalityError(
            "saddle-order>=Q+1",
            "R contains a monomial of saddle degree %d < Q+1 = %d" % (min_sdeg, Q + 1),
        )
    if ell1 + ell2 > Q:
        raise BudgetInequalityError(
            "l1+l2<=Q", "l1+l2 = %d > Q = %d" % (ell1 + ell2, Q)
        )
    if 2 * ell2 + 1 > Q:
        if ell2 <= ell1:
            notes.append(
                "2l2+1<=Q fails literally (%d > %d); waived by the rearranged "
                "decomposition with l2 <= l1" % (2 * ell2 + 1, Q)
            )
        else:
            raise BudgetInequalityError(
                "2l2+1<=Q",
                "2*l2+1 = %d > Q = %d and l2 > l1; rearrange the "
                "decomposition R = R1 + R2 so that l2 <= l1" % (2 * ell2 + 1, Q),
            )

    def ydeg(exp):
        return sum(exp[i] for i in ys)

    def xdeg(exp):
        return sum(exp[i] for i in xs)

    if by == "y":
        cond = lambda exp: ydeg(exp) <= ell2
    elif by == "x":
        cond = lambda exp: xdeg(exp) >= ell1 + 1
    else:
        raise ValueError("split rule must be 'y' or 'x'")

    parts = [_series_split(c, cond) for c in comps]
    if isinstance(R, PolySeries):
        R1, R2 = parts[0]
    else:
        R1 = PolyField([p[0] for p in parts])
        R2 = PolyField([p[1] for p in parts])

    # audit the claimed vanishing orders
    for comp in [R1] if isinstance(R1, PolySeries) else R1.components:
        for exp in comp.terms:
            if xdeg(exp) < ell1 + 1:
                notes.append("R1 monomial %s has x-degree < l1+1" % (exp,))
    for comp in [R2] if isinstance(R2, PolySeries) else R2.components:
        for exp in comp.terms:
            if ydeg(exp) < ell2 + 1:
                notes.append("R2 monomial %s has y-degree < l2+1" % (exp,))

    return SplitRemainder(R1=R1, R2=R2, ell1=ell1, ell2=ell2, by=by, Q=Q, notes=tuple(notes))


def theorem_form_report(Z: PolyField, P: int, Q: int, eps_res: float = EPS_RES) -> dict:
    """Classify the monomials of a normalized field against the target form:
    resonant of degree <= P ("normal_form"), or saddle-degree-1 with center
    degree >= P+1-Q ("remainder_admissible"); everything else is a violation.
    """
    roster = Z.roster
    nu = roster.eigenvalues
    counts = {"normal_form": 0, "remainder_admissible": 0, "violation": 0, "linear": 0}
    violations = []
    for j, comp in enumerate(Z.components):
        for exp, c in comp.terms.items():
            deg = sum(exp)
            if deg <= 1:
                counts["linear"] += 1
                continue
            divisor = complex(sum(a * nu[i] for i, a in enumerate(exp) if a) - nu[j])
            if abs(divisor) <= eps_res and deg <= P:
                counts["normal_form"] += 1
            elif roster.saddle_degree(exp) == 1 and roster.center_degree(exp) >= P + 1 - Q:
                counts["remainder_admissible"] += 1
            else:
                counts["violation"] += 1
                violations.append({"component": j, "exp": list(exp), "coeff": abs(c)})
    return {"P": P, "Q": Q, "counts": counts, "violations": violations}
