"""Numerical cohomological solver on compactified systems.

The conjugacy step of the smooth-linearization construction solves, for a
given remainder part R with a high vanishing order in the unstable (x) or
stable (y) variables, the first-order PDE

    DG(z) Z(z) = DZ(z) G(z) + R(z)            (vector fields)
    DG(z) Z(z) = R(z)                          (Hamiltonian scalars)

by integrating along characteristics: with phi(t, z) the flow of Z and
S(t, z) = (D_z phi(t, z))^{-1},

    G(z) =  int_{-inf}^{0} S(t, z) R(phi(t, z)) dt      (backward, R = O(|x|^{l1+1}))
    G(z) = -int_{0}^{+inf} S(t, z) R(phi(t, z)) dt      (forward,  R = O(|y|^{l2+1}))

and S == 1 in the scalar case.  Convergence comes from the vanishing order:
the integrand decays like exp(-delta |t|) with delta = (l1+1) mu_min - mu_max
(backward; the S-growth term is absent for scalars) and the lam <-> mu mirror
forward.  The quadrature is carried as an extra state g alongside z and the
variational matrix V = D_z phi, with S R evaluated by an LU solve of V g = R;
the cutoff time T* is chosen automatically from the fitted integrand envelope
so that the neglected tail stays below the quadrature tolerance.

Systems are "compactified": the nonlinearity (and the deformed remainder) is
multiplied by a plateau bump eta, so flows exist globally and the decay rates
of the linear part take over outside a compact set.  Complex rosters are
realified first -- conjugate pairs become (re, im) coordinate pairs -- so all
integration happens in real coordinates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .budget import BudgetMode, validate_ell
from .bump import BumpSpec
from .defaults import (
    EPS_SPEC,
    FD_STEP,
    GRID_POINTS,
    GRID_RADIUS,
    QUAD_TOL,
)
from .errors import (
    MathPreconditionError,
    NumericalBlowupError,
    QuadratureToleranceError,
    SpectralGapError,
)
from .odeint import solve_rk54
from .polycore import (
    PolyField,
    PolySeries,
    VarClass,
    Variable,
    VariableRoster,
    pushforward_truncated,
)
from .spectral import SpectralGap

__all__ = [
    "RealifiedView",
    "realify",
    "CompactifiedSystem",
    "compactify",
    "Grid",
    "SampledField",
    "CharacteristicArc",
    "integrate_characteristic",
    "solve_backward",
    "solve_forward",
    "residual_check",
    "make_deformation_generator",
    "DeformationResult",
    "deformation_step",
    "apply_straightening",
]


# ---------------------------------------------------------------------------
# realification
# ---------------------------------------------------------------------------


def _strip_imag(series: PolySeries, tol: float, what: str) -> tuple[PolySeries, float]:
    defect = 0.0
    out = {}
    for e, c in series.terms.items():
        defect = max(defect, abs(c.imag))
        out[e] = complex(c.real, 0.0)
    if defect > tol:
        raise MathPreconditionError(
            "%s is not reality-symmetric (imaginary defect %g after "
            "realification)" % (what, defect)
        )
    return PolySeries(series.roster, series.trunc_degree, out), defect


@dataclass
class RealifiedView:
    """Coordinate dictionary between a complex roster and its real form.

    Each conjugate pair (c, cbar) maps to two real coordinates (re, im) with
    c = re + i*im; variables that are already real map to themselves.  The
    view carries the induced saddle/center index partition of the real roster
    and converts points, series and fields both ways.
    """

    complex_roster: VariableRoster
    real_roster: VariableRoster
    entries: tuple  # per complex index: ("real", ri) | ("pair", ru, rw, sign)
    ix: tuple[int, ...]
    iy: tuple[int, ...]
    ic: tuple[int, ...]

    def _subs(self, P: int) -> list[PolySeries]:
        n = self.real_roster.n
        subs = []
        for entry in self.entries:
            if entry[0] == "real":
                subs.append(PolySeries.variable(self.real_roster, P, entry[1]))
            else:
                _, ru, rw, sign = entry
                eu = [0] * n
                eu[ru] = 1
                ew = [0] * n
                ew[rw] = 1
                subs.append(
                    PolySeries(
                        self.real_roster,
                        P,
                        {tuple(eu): 1.0, tuple(ew): 1j * sign},
                    )
                )
        return subs

    def to_real(self, zc) -> np.ndarray:
        zc = np.asarray(zc, dtype=complex)
        out = np.zeros(self.real_roster.n)
        for i, entry in enumerate(self.entries):
            if entry[0] == "real":
                out[entry[1]] = zc[i].real
            elif entry[3] > 0:  # primary pair member carries the data
                out[entry[1]] = zc[i].real
                out[entry[2]] = zc[i].imag
        return out

    def to_complex(self, zr) -> np.ndarray:
        zr = np.asarray(zr, dtype=float)
        out = np.zeros(self.complex_roster.n, dtype=complex)
        for i, entry in enumerate(self.entries):
            if entry[0] == "real":
                out[i] = zr[entry[1]]
            else:
                _, ru, rw, sign = entry
                out[i] = zr[ru] + 1j * sign * zr[rw]
        return out

    def series(self, H: PolySeries, tol: float = 1e-8) -> PolySeries:
        if H.roster != self.complex_roster:
            raise MathPreconditionError("series lives on a different roster")
        composed = H.compose(self._subs(H.trunc_degree), H.trunc_degree)
        real, _ = _strip_imag(composed, tol, "scalar series")
        return real

    def field(self, Z: PolyField, tol: float = 1e-8) -> PolyField:
        if Z.roster != self.complex_roster:
            raise MathPreconditionError("field lives on a different roster")
        P = Z.trunc_degree
        subs = self._subs(P)
        pows: list[dict] = [dict() for _ in subs]
        composed = [Z[i].compose(subs, P, _pows=pows) for i in range(Z.roster.n)]
        comps: list[PolySeries | None] = [None] * self.real_roster.n
        for i, entry in enumerate(self.entries):
            if entry[0] == "real":
                comps[entry[1]], _ = _strip_imag(composed[i], tol, "field component")
            elif entry[3] > 0:
                ib = self.complex_roster.conj_perm[i]
                # d(re)/dt = (F_c + F_cbar)/2,  d(im)/dt = (F_c - F_cbar)/(2i)
                comps[entry[1]], _ = _strip_imag(
                    (composed[i] + composed[ib]).scale(0.5), tol, "field component"
                )
                comps[entry[2]], _ = _strip_imag(
                    (composed[i] - composed[ib]).scale(-0.5j), tol, "field component"
                )
        return PolyField(comps)


def realify(roster: VariableRoster) -> RealifiedView:
    """Build the real coordinate view of a roster (identity if already real)."""
    new_vars: list[Variable] = []
    needs_remap: list[bool] = []  # copied real vars keep old partner indices
    new_index_of: dict[int, tuple] = {}
    for i, v in enumerate(roster.variables):
        if v.klass in (VarClass.REAL_SADDLE, VarClass.REAL_GENERIC):
            new_index_of[i] = ("real", len(new_vars))
            new_vars.append(v)
            needs_remap.append(v.sympl_partner is not None)
        elif v.conjugate > i:  # primary member of a conjugate pair
            ru = len(new_vars)
            rw = ru + 1
            new_index_of[i] = ("pair", ru, rw)
            is_center = v.klass is VarClass.COMPLEX_CENTER
            for suffix in ("_re", "_im"):
                new_vars.append(
                    Variable(
                        name=v.name + suffix,
                        klass=VarClass.REAL_GENERIC,
                        eigenvalue=complex(v.eigenvalue).real,
                        conjugate=None,
                        sign_group=v.sign_group,
                        # center pair (re, im) is a standard symplectic pair:
                        # d(re)/dt = +dH/d(im), d(im)/dt = -dH/d(re)
                        sympl_partner=(rw if suffix == "_re" else ru)
                        if is_center
                        else None,
                        sympl_factor=(1.0 if suffix == "_re" else -1.0)
                        if is_center
                        else 0.0,
                    )
                )
                needs_remap.append(False)

    entries: list[tuple] = [None] * roster.n  # type: ignore[list-item]
    ix: list[int] = []
    iy: list[int] = []
    ic: list[int] = []
    for i, v in enumerate(roster.variables):
        loc = new_index_of.get(i) or new_index_of[v.conjugate]
        if loc[0] == "real":
            entries[i] = ("real", loc[1])
        else:
            entries[i] = ("pair", loc[1], loc[2], 1 if i < v.conjugate else -1)
        re_part = complex(v.eigenvalue).real
        if v.klass is VarClass.COMPLEX_CENTER or abs(re_part) <= roster.eps_spec:
            dest = ic
        elif re_part > 0:
            dest = ix
        else:
            dest = iy
        for t in [loc[1]] if loc[0] == "real" else [loc[1], loc[2]]:
            if t not in dest:
                dest.append(t)

    fixed = []
    for w, remap in zip(new_vars, needs_remap):
        if not remap:
            fixed.append(w)
            continue
        loc = new_index_of.get(w.sympl_partner)
        if loc is None or loc[0] != "real":
            raise MathPreconditionError(
                "cannot realify a symplectic pairing between a real and a "
                "complex variable"
            )
        fixed.append(
            Variable(
                name=w.name,
                klass=w.klass,
                eigenvalue=w.eigenvalue,
                conjugate=None,
                sign_group=w.sign_group,
                sympl_partner=loc[1],
                sympl_factor=w.sympl_factor,
            )
        )

    real_roster = VariableRoster(tuple(fixed), eps_spec=roster.eps_spec)
    return RealifiedView(
        complex_roster=roster,
        real_roster=real_roster,
        entries=tuple(entries),
        ix=tuple(sorted(ix)),
        iy=tuple(sorted(iy)),
        ic=tuple(sorted(ic)),
    )


# ---------------------------------------------------------------------------
# fast polynomial evaluation (stacked term arrays)
# ---------------------------------------------------------------------------


class _StackedEval:
    """Evaluate a list of real-coefficient series at once via one big
    exponent array and a bincount-style reduction."""

    def __init__(self, series_list: Sequence[PolySeries], n: int):
        rows, exps, coeffs = [], [], []
        for r, s in enumerate(series_list):
            for e, c in s.terms.items():
                if abs(c.imag) > 1e-8:
                    raise MathPreconditionError(
                        "numeric solver needs real coefficients (found %r)" % c
                    )
                rows.append(r)
                exps.append(e)
                coeffs.append(c.real)
        self.size = len(series_list)
        self.rows = np.asarray(rows, dtype=np.intp)
        self.exps = np.asarray(exps, dtype=np.int64).reshape(len(rows), n)
        self.coeffs = np.asarray(coeffs, dtype=float)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        if self.rows.size == 0:
            return np.zeros(self.size)
        mono = np.prod(z[None, :] ** self.exps, axis=1)
        return np.bincount(self.rows, weights=self.coeffs * mono, minlength=self.size)


def _field_eval(F: PolyField) -> _StackedEval:
    return _StackedEval(F.components, F.roster.n)


def _jac_eval(F: PolyField) -> _StackedEval:
    n = F.roster.n
    flat = [F.jacobian_series()[i][j] for i in range(n) for j in range(n)]
    return _StackedEval(flat, n)


def _grad_eval(H: PolySeries) -> _StackedEval:
    n = H.roster.n
    return _StackedEval([H.diff(j) for j in range(n)], n)


# ---------------------------------------------------------------------------
# compactified systems
# ---------------------------------------------------------------------------


@dataclass
class CompactifiedSystem:
    """Real-coordinate system  z' = A z + eta(z) (N(z) + eps R(z)).

    In Hamiltonian mode the cutoff is applied to the Hamiltonian instead,
    H_eta = H2 + eta (H_N + eps H_R), and the field is X_{H_eta}; the bump
    gradient then enters the field itself.
    """

    roster: VariableRoster
    A: np.ndarray
    N: PolyField
    R: PolyField | None
    bump: BumpSpec
    mode: str  # "general" | "hamiltonian"
    ix: tuple[int, ...]
    iy: tuple[int, ...]
    ic: tuple[int, ...]
    straightened: bool = False
    H2: PolySeries | None = None
    H_N: PolySeries | None = None
    H_R: PolySeries | None = None
    J: np.ndarray | None = None
    view: RealifiedView | None = None
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        n = self.roster.n
        if self.A.shape != (n, n):
            raise MathPreconditionError("linear part has wrong shape")
        if self.mode not in ("general", "hamiltonian"):
            raise MathPreconditionError("mode must be 'general' or 'hamiltonian'")
        self._bump_idx = tuple(sorted(self.ix + self.iy))
        self._evN = _field_eval(self.N)
        self._jacN = _jac_eval(self.N)
        self._evR = _field_eval(self.R) if self.R is not None else None
        self._jacR = _jac_eval(self.R) if self.R is not None else None
        if self.mode == "hamiltonian":
            if self.H2 is None or self.J is None:
                raise MathPreconditionError(
                    "hamiltonian mode needs H2 and the structure matrix J"
                )
            self._gH2 = _grad_eval(self.H2)
            self._gHN = _grad_eval(self.H_N) if self.H_N is not None else None
            self._gHR = _grad_eval(self.H_R) if self.H_R is not None else None
            self._evHN = (
                _StackedEval([self.H_N], self.roster.n) if self.H_N is not None else None
            )
            self._evHR = (
                _StackedEval([self.H_R], self.roster.n) if self.H_R is not None else None
            )
        self._gap_cache: SpectralGap | None = None

    # -- spectra ------------------------------------------------------------

    @property
    def gap(self) -> SpectralGap:
        if self._gap_cache is None:
            eps = self.roster.eps_spec
            res = np.linalg.eigvals(self.A).real
            mus = [r for r in res if r > eps]
            lams = [-r for r in res if r < -eps]
            if not mus and not lams:
                raise SpectralGapError("linear part has no hyperbolic eigenvalues")
            self._gap_cache = SpectralGap(
                lam_min=min(lams) if lams else None,
                lam_max=max(lams) if lams else None,
                mu_min=min(mus) if mus else None,
                mu_max=max(mus) if mus else None,
            )
        return self._gap_cache

    @property
    def budget_mode(self) -> BudgetMode:
        if self.mode == "hamiltonian":
            return BudgetMode.HAMILTONIAN
        return BudgetMode.PURE_SADDLE if not self.ic else BudgetMode.GENERAL

    # -- evaluation ---------------------------------------------------------

    def eta(self, z) -> float:
        return self.bump.value(np.asarray(z, float), self._bump_idx)

    def field(self, z, eps: float = 0.0) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.mode == "general":
            eta = self.bump.value(z, self._bump_idx)
            nl = self._evN(z)
            if eps and self._evR is not None:
                nl = nl + eps * self._evR(z)
            return self.A @ z + eta * nl
        eta = self.bump.value(z, self._bump_idx)
        grad = self._gH2(z)
        hval = 0.0
        if self._gHN is not None:
            grad = grad + eta * self._gHN(z)
            hval += self._evHN(z)[0]
        if eps and self._gHR is not None:
            grad = grad + eps * eta * self._gHR(z)
            hval += eps * self._evHR(z)[0]
        if hval != 0.0:
            grad = grad + hval * self.bump.gradient(z, self._bump_idx)
        return self.J @ grad

    def jacobian(self, z, eps: float = 0.0) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        n = self.roster.n
        if self.mode == "general":
            eta = self.bump.value(z, self._bump_idx)
            geta = self.bump.gradient(z, self._bump_idx)
            nl = self._evN(z)
            Dnl = self._jacN(z).reshape(n, n)
            if eps and self._evR is not None:
                nl = nl + eps * self._evR(z)
                Dnl = Dnl + eps * self._jacR(z).reshape(n, n)
            return self.A + eta * Dnl + np.outer(nl, geta)
        # Hamiltonian mode: the field contains first bump derivatives already,
        # so the exact Jacobian would need second ones; use central differences
        h = 1e-6 * max(1.0, float(np.max(np.abs(z))))
        out = np.empty((n, n))
        for j in range(n):
            dz = np.zeros(n)
            dz[j] = h
            out[:, j] = (self.field(z + dz, eps) - self.field(z - dz, eps)) / (2 * h)
        return out

    def remainder_value(self, z, eps_bump: bool = True) -> np.ndarray | float:
        """eta * R (general) or eta * H_R (hamiltonian) at a real point."""
        z = np.asarray(z, dtype=float)
        eta = self.bump.value(z, self._bump_idx) if eps_bump else 1.0
        if self.mode == "general":
            if self._evR is None:
                raise MathPreconditionError("system has no remainder part R")
            return eta * self._evR(z)
        if self._evHR is None:
            raise MathPreconditionError("system has no remainder part H_R")
        return eta * self._evHR(z)[0]


def _nonlinear_part(F: PolyField) -> PolyField:
    return PolyField(
        [c - c.degree_part(0) - c.degree_part(1) for c in F.components]
    )


def _structure_matrix(roster: VariableRoster) -> np.ndarray:
    n = roster.n
    J = np.zeros((n, n))
    for i, v in enumerate(roster.variables):
        if v.sympl_partner is None:
            raise MathPreconditionError(
                "variable %r has no symplectic partner after realification"
                % v.name
            )
        f = complex(v.sympl_factor)
        if abs(f.imag) > 1e-12:
            raise MathPreconditionError("realified symplectic factors must be real")
        J[i, v.sympl_partner] = f.real
    if abs(np.linalg.det(J)) < 1e-12:
        raise MathPreconditionError("symplectic pairing is degenerate")
    return J


def _is_straightened(fields, ix, iy) -> bool:
    for F in fields:
        if F is None:
            continue
        for i in ix:
            for e in F[i].terms:
                if sum(e[j] for j in ix) == 0:
                    return False
        for i in iy:
            for e in F[i].terms:
                if sum(e[j] for j in iy) == 0:
                    return False
    return True


def compactify(
    Z: PolyField | None = None,
    *,
    H: PolySeries | None = None,
    R: PolyField | None = None,
    H_R: PolySeries | None = None,
    bump: BumpSpec | None = None,
    straightened: bool | None = None,
    reality_tol: float = 1e-8,
) -> CompactifiedSystem:
    """Realify a polynomial system and wrap it with a cutoff bump.

    Pass ``Z`` (full field, linear part included) for a general system or
    ``H`` (full Hamiltonian, quadratic part included) for a Hamiltonian one;
    ``R`` / ``H_R`` is the remainder slated for deformation.
    """
    if (Z is None) == (H is None):
        raise MathPreconditionError("pass exactly one of Z (general) or H (hamiltonian)")
    roster = (Z or H).roster
    view = realify(roster)
    rr = view.real_roster
    bump = bump or BumpSpec(r0=2 * GRID_RADIUS, r1=4 * GRID_RADIUS)

    if Z is not None:
        Zr = view.field(Z, tol=reality_tol)
        A = Zr.linear_matrix()
        if np.abs(A.imag).max() > 1e-10:
            raise MathPreconditionError("realified linear part is not real")
        N = _nonlinear_part(Zr)
        Rr = view.field(R, tol=reality_tol) if R is not None else None
        if straightened is None:
            straightened = _is_straightened([N, Rr], view.ix, view.iy)
        return CompactifiedSystem(
            roster=rr,
            A=A.real,
            N=N,
            R=Rr,
            bump=bump,
            mode="general",
            ix=view.ix,
            iy=view.iy,
            ic=view.ic,
            straightened=straightened,
            view=view,
        )

    Hr = view.series(H, tol=reality_tol)
    H2 = Hr.degree_part(2)
    H_Nr = Hr - Hr.up_to(2)
    H_Rr = view.series(H_R, tol=reality_tol) if H_R is not None else None
    J = _structure_matrix(rr)
    grad2 = PolyField([H2.diff(j) for j in range(rr.n)])
    # X_{H2} = J grad H2; both factors are real
    XH2 = np.asarray(J, float) @ grad2.linear_matrix().real
    N_field = PolyField(
        [
            sum(
                (H_Nr.diff(j).scale(J[i, j]) for j in range(rr.n) if J[i, j] != 0.0),
                PolySeries.zero(rr, Hr.trunc_degree),
            )
            for i in range(rr.n)
        ]
    )
    R_field = None
    if H_Rr is not None:
        R_field = PolyField(
            [
                sum(
                    (H_Rr.diff(j).scale(J[i, j]) for j in range(rr.n) if J[i, j] != 0.0),
                    PolySeries.zero(rr, Hr.trunc_degree),
                )
                for i in range(rr.n)
            ]
        )
    if straightened is None:
        straightened = _is_straightened([N_field, R_field], view.ix, view.iy)
    return CompactifiedSystem(
        roster=rr,
        A=XH2,
        N=N_field,
        R=R_field,
        bump=bump,
        mode="hamiltonian",
        ix=view.ix,
        iy=view.iy,
        ic=view.ic,
        straightened=straightened,
        H2=H2,
        H_N=H_Nr if not H_Nr.is_zero else None,
        H_R=H_Rr,
        J=J,
        view=view,
    )


# ---------------------------------------------------------------------------
# grids and sampled solutions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Cartesian saddle-coordinate grid at a fixed center slice."""

    radius: float = GRID_RADIUS
    points_per_axis: int = GRID_POINTS
    center_slice: tuple[float, ...] = ()

    def points(self, sys: CompactifiedSystem) -> np.ndarray:
        saddle = sorted(sys.ix + sys.iy)
        axes = [np.linspace(-self.radius, self.radius, self.points_per_axis)] * len(
            saddle
        )
        if saddle:
            mesh = np.meshgrid(*axes, indexing="ij")
            flat = np.stack([m.ravel() for m in mesh], axis=1)
        else:
            flat = np.zeros((1, 0))
        pts = np.zeros((flat.shape[0], sys.roster.n))
        for col, i in enumerate(saddle):
            pts[:, i] = flat[:, col]
        for col, i in enumerate(sys.ic):
            if col < len(self.center_slice):
                pts[:, i] = self.center_slice[col]
        return pts


@dataclass
class SampledField:
    """A numerically defined (non-polynomial) field: values on grid points
    plus a callable that solves for the value at any other point."""

    roster: VariableRoster
    points: np.ndarray
    values: np.ndarray
    direction: str
    meta: dict
    point_solver: Callable | None = None
    residuals: np.ndarray | None = None

    def __call__(self, z):
        if self.point_solver is None:
            raise MathPreconditionError("sampled field has no point solver attached")
        return self.point_solver(np.asarray(z, dtype=float))

    def to_obj(self) -> dict:
        obj = {
            "direction": self.direction,
            "names": list(self.roster.names),
            "points": [list(map(float, p)) for p in self.points],
            "values": [
                list(map(float, np.atleast_1d(v))) for v in np.atleast_1d(self.values)
            ],
            "meta": {k: v for k, v in self.meta.items() if _jsonable(v)},
        }
        if self.residuals is not None:
            obj["residuals"] = [float(r) for r in self.residuals]
        return obj

    def csv_rows(self) -> list[list]:
        names = list(self.roster.names)
        vec = self.values.ndim == 2
        head = names + (["G_" + nm for nm in names] if vec else ["G"])
        rows = [head]
        for p, v in zip(self.points, self.values):
            rows.append(
                [float(x) for x in p] + [float(x) for x in (v if vec else [v])]
            )
        return rows


def _jsonable(v) -> bool:
    return isinstance(v, (int, float, str, bool, list, tuple, type(None)))


# ---------------------------------------------------------------------------
# characteristics
# ---------------------------------------------------------------------------


class CharacteristicArc:
    """Flow arc t -> phi(t, z0) with the variational matrix V(t) = D phi."""

    def __init__(self, sys: CompactifiedSystem, traj, with_variational: bool):
        self._n = sys.roster.n
        self.traj = traj
        self.with_variational = with_variational

    @property
    def t0(self):
        return self.traj.t0

    @property
    def t1(self):
        return self.traj.t1

    def z(self, t) -> np.ndarray:
        return np.asarray(self.traj(t))[..., : self._n]

    def V(self, t) -> np.ndarray:
        if not self.with_variational:
            raise MathPreconditionError("arc was integrated without variational data")
        n = self._n
        flat = np.asarray(self.traj(t))[..., n : n + n * n]
        return flat.reshape(flat.shape[:-1] + (n, n))


def integrate_characteristic(
    sys: CompactifiedSystem,
    z0,
    t_final: float,
    eps: float = 0.0,
    with_variational: bool = True,
    rtol: float = 1e-9,
    atol: float = 1e-12,
) -> CharacteristicArc:
    n = sys.roster.n
    z0 = np.asarray(z0, dtype=float)
    if with_variational:
        u0 = np.concatenate([z0, np.eye(n).ravel()])

        def rhs(t, u):
            z = u[:n]
            V = u[n:].reshape(n, n)
            return np.concatenate(
                [sys.field(z, eps), (sys.jacobian(z, eps) @ V).ravel()]
            )

    else:
        u0 = z0

        def rhs(t, u):
            return sys.field(u, eps)

    traj = solve_rk54(rhs, (0.0, t_final), u0, rtol=rtol, atol=atol)
    return CharacteristicArc(sys, traj, with_variational)


# ---------------------------------------------------------------------------
# the quadrature solver
# ---------------------------------------------------------------------------


def _min_degree_along(F, idx) -> int | None:
    comps = [F] if isinstance(F, PolySeries) else list(F.components)
    best = None
    for comp in comps:
        for e in comp.terms:
            d = sum(e[i] for i in idx)
            best = d if best is None else min(best, d)
    return best


def _coerce_remainder(sys: CompactifiedSystem, R):
    """Accept the remainder on the real roster or on the complex one."""
    want_scalar = sys.mode == "hamiltonian"
    if want_scalar:
        if not isinstance(R, PolySeries):
            raise MathPreconditionError("hamiltonian solve needs a scalar remainder")
        if R.roster == sys.roster:
            return R
        if sys.view is not None and R.roster == sys.view.complex_roster:
            return sys.view.series(R)
    else:
        if not isinstance(R, PolyField):
            raise MathPreconditionError("general solve needs a vector-field remainder")
        if R.roster == sys.roster:
            return R
        if sys.view is not None and R.roster == sys.view.complex_roster:
            return sys.view.field(R)
    raise MathPreconditionError("remainder lives on an unrelated roster")


def _point_quadrature(
    sys,
    r_ev,
    scalar: bool,
    z0: np.ndarray,
    direction: int,
    delta: float,
    eps: float,
    T_star,
    quad_tol: float,
    rtol: float,
    atol: float,
):
    """One backward/forward characteristic quadrature; returns (G, T_used, C_est)."""
    n = sys.roster.n
    gdim = 1 if scalar else n

    if scalar:

        def rhs(t, u):
            z = u[:n]
            f = sys.field(z, eps)
            eta = sys.bump.value(z, sys._bump_idx)
            return np.concatenate([f, [-eta * r_ev(z)[0]]])

        u0 = np.concatenate([z0, [0.0]])
        g_slice = slice(n, n + 1)
    else:

        def rhs(t, u):
            z = u[:n]
            V = u[n : n + n * n].reshape(n, n)
            f = sys.field(z, eps)
            Df = sys.jacobian(z, eps)
            eta = sys.bump.value(z, sys._bump_idx)
            rv = eta * r_ev(z)
            gdot = -np.linalg.solve(V, rv)
            return np.concatenate([f, (Df @ V).ravel(), gdot])

        u0 = np.concatenate([z0, np.eye(n).ravel(), np.zeros(n)])
        g_slice = slice(n + n * n, n + n * n + n)

    if T_star == "auto":
        # pilot over one decade of predicted decay, then fit the envelope
        # |integrand| <= C exp(-delta |t|) and cut where the tail drops below
        # the quadrature tolerance
        T_pilot = math.log(10.0) / delta
        arc = solve_rk54(rhs, (0.0, direction * T_pilot), u0, rtol=rtol, atol=atol)
        norms = np.linalg.norm(arc.fs[:, g_slice], axis=1)
        C_est = float(np.max(norms * np.exp(delta * np.abs(arc.ts))))
        if C_est <= quad_tol:
            return arc.y1[g_slice].copy(), T_pilot, C_est
        T_use = max(T_pilot, math.log(C_est / quad_tol) / delta)
        _guard_overflow(sys, T_use)
        tail = solve_rk54(
            rhs, (arc.t1, direction * T_use), arc.y1, rtol=rtol, atol=atol
        )
        return tail.y1[g_slice].copy(), T_use, C_est
    T_use = float(T_star)
    _guard_overflow(sys, T_use)
    arc = solve_rk54(rhs, (0.0, direction * T_use), u0, rtol=rtol, atol=atol)
    return arc.y1[g_slice].copy(), T_use, None


def _guard_overflow(sys: CompactifiedSystem, T: float):
    gap = sys.gap
    fastest = max(gap.mu_max or 0.0, gap.lam_max or 0.0)
    if fastest * T > 600.0:
        raise QuadratureToleranceError(
            "cutoff time %g would overflow the variational growth "
            "(rate %g); the decay margin is too small for the requested "
            "tolerance" % (T, fastest)
        )


def _solve_directional(
    sys: CompactifiedSystem,
    R_part,
    grid,
    direction: str,
    ell: int | None,
    T_star,
    quad_tol: float,
    eps: float,
    k: int | None,
    rtol: float | None,
    atol: float | None,
    threads: int = 1,
) -> SampledField:
    R_part = _coerce_remainder(sys, R_part)
    scalar = sys.mode == "hamiltonian"
    back = direction == "backward"
    idx_van = sys.ix if back else sys.iy  # block whose high vanishing order pays
    if not idx_van:
        raise MathPreconditionError(
            "%s solve needs %s coordinates" % (direction, "unstable" if back else "stable")
        )
    min_deg = _min_degree_along(R_part, idx_van)
    if min_deg is None:
        raise MathPreconditionError("remainder part is identically zero")
    if ell is None:
        ell = min_deg - 1
    if min_deg < ell + 1:
        raise MathPreconditionError(
            "remainder has %s-degree %d < l+1 = %d"
            % ("x" if back else "y", min_deg, ell + 1)
        )

    gap = sys.gap
    lo = gap.mu_min if back else gap.lam_min
    hi = gap.mu_max if back else gap.lam_max
    if lo is None:
        raise SpectralGapError(
            "no %s eigenvalues; cannot integrate %s"
            % ("unstable" if back else "stable", direction)
        )
    xi = 0.0 if scalar else 1.0
    delta = (ell + 1) * lo - xi * hi
    if delta <= 0.0:
        raise MathPreconditionError(
            "quadrature does not converge: (l+1)*%g - %g = %g <= 0"
            % (lo, xi * hi, delta)
        )
    order_note = None
    if k is not None:
        if gap.two_sided:
            validate_ell(k, ell, gap, sys.budget_mode, direction)
        else:
            order_note = "one-sided spectrum: C^k order condition not checked"

    if grid is None:
        grid = Grid()
    pts = grid.points(sys) if isinstance(grid, Grid) else np.asarray(grid, dtype=float)
    rtol = rtol if rtol is not None else min(1e-9, quad_tol * 1e-2)
    atol = atol if atol is not None else quad_tol * 1e-4
    r_ev = (
        _StackedEval([R_part], sys.roster.n)
        if scalar
        else _field_eval(R_part)
    )
    dir_sign = -1 if back else 1

    def point_solver(z, _eps=eps):
        z = np.asarray(z, dtype=float)
        if sys.straightened and not np.any(z[list(idx_van)]):
            return 0.0 if scalar else np.zeros(sys.roster.n)
        G, _, _ = _point_quadrature(
            sys, r_ev, scalar, z, dir_sign, delta, _eps, T_star, quad_tol, rtol, atol
        )
        return float(G[0]) if scalar else G

    def _solve_point(z):
        if sys.straightened and not np.any(z[list(idx_van)]):
            return (0.0 if scalar else np.zeros(sys.roster.n)), 0.0, None
        G, T_used, C_est = _point_quadrature(
            sys, r_ev, scalar, z, dir_sign, delta, eps, T_star, quad_tol, rtol, atol
        )
        return (float(G[0]) if scalar else G), T_used, C_est

    if threads > 1 and len(pts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_point = list(pool.map(_solve_point, pts))
    else:
        per_point = [_solve_point(z) for z in pts]
    values = []
    T_used_max = 0.0
    C_max = 0.0
    for G, T_used, C_est in per_point:
        values.append(G)
        T_used_max = max(T_used_max, T_used)
        if C_est is not None:
            C_max = max(C_max, C_est)

    meta = {
        "ell": ell,
        "delta_rate": delta,
        "quad_tol": quad_tol,
        "eps": eps,
        "T_star": T_used_max if T_star == "auto" else float(T_star),
        "T_star_rule": "auto" if T_star == "auto" else "fixed",
        "C_est": C_max if T_star == "auto" else None,
        "mode": sys.mode,
        "label": "sampled, non-rigorous",
    }
    if order_note:
        meta["note"] = order_note
    return SampledField(
        roster=sys.roster,
        points=pts,
        values=np.asarray(values),
        direction=direction,
        meta=meta,
        point_solver=point_solver,
    )


def solve_backward(
    sys: CompactifiedSystem,
    R1,
    grid=None,
    *,
    ell1: int | None = None,
    T_star="auto",
    quad_tol: float = QUAD_TOL,
    eps: float = 0.0,
    k: int | None = None,
    rtol: float | None = None,
    atol: float | None = None,
    threads: int = 1,
) -> SampledField:
    """Solve the cohomological equation for R1 = O(|x|^{l1+1}) by quadrature
    over backward characteristics."""
    return _solve_directional(
        sys, R1, grid, "backward", ell1, T_star, quad_tol, eps, k, rtol, atol,
        threads=threads,
    )


def solve_forward(
    sys: CompactifiedSystem,
    R2,
    grid=None,
    *,
    ell2: int | None = None,
    T_star="auto",
    quad_tol: float = QUAD_TOL,
    eps: float = 0.0,
    k: int | None = None,
    rtol: float | None = None,
    atol: float | None = None,
    threads: int = 1,
) -> SampledField:
    """Forward-characteristic mirror of :func:`solve_backward` for
    R2 = O(|y|^{l2+1})."""
    return _solve_directional(
        sys, R2, grid, "forward", ell2, T_star, quad_tol, eps, k, rtol, atol,
        threads=threads,
    )


# ---------------------------------------------------------------------------
# residual verification
# ---------------------------------------------------------------------------


def _stencil_derivative(f, z, h):
    """Fourth-order centered first derivative of f along every axis."""
    n = z.size
    cols = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        cols.append(
            (-f(z + 2 * e) + 8 * f(z + e) - 8 * f(z - e) + f(z - 2 * e)) / (12 * h)
        )
    return np.stack(cols, axis=-1)


def residual_check(
    sys: CompactifiedSystem,
    R_part,
    solver,
    points=None,
    eps: float = 0.0,
    h: float = FD_STEP,
) -> dict:
    """Plug a numerical solution G back into  DG Z = DZ G + R  (or DG Z = R).

    ``solver`` is a SampledField or a bare callable z -> G(z); derivatives of
    G are taken with a fourth-order centered stencil of step ``h``.
    """
    R_part = _coerce_remainder(sys, R_part)
    scalar = sys.mode == "hamiltonian"
    if isinstance(solver, SampledField):
        if points is None:
            pts = solver.points
            points = pts[:: max(1, len(pts) // 5)]
        solver = solver.point_solver
    if points is None:
        raise MathPreconditionError("points are required with a bare callable")
    r_ev = (
        _StackedEval([R_part], sys.roster.n) if scalar else _field_eval(R_part)
    )

    per_point = []
    worst = 0.0
    for z in np.asarray(points, dtype=float):
        G0 = solver(z)
        DG = _stencil_derivative(lambda w: np.atleast_1d(solver(w)), z, h)
        F = sys.field(z, eps)
        eta = sys.bump.value(z, sys._bump_idx)
        if scalar:
            res = float(DG[0] @ F - eta * r_ev(z)[0])
        else:
            DZ = sys.jacobian(z, eps)
            res = float(
                np.max(np.abs(DG @ F - DZ @ np.asarray(G0) - eta * r_ev(z)))
            )
        res = abs(res)
        per_point.append({"point": [float(x) for x in z], "residual": res})
        worst = max(worst, res)
    return {"max_residual": worst, "h": h, "per_point": per_point}


# ---------------------------------------------------------------------------
# deformation flow
# ---------------------------------------------------------------------------


def make_deformation_generator(
    sys: CompactifiedSystem,
    R1=None,
    R2=None,
    *,
    T_star="auto",
    quad_tol: float = QUAD_TOL,
    rtol: float | None = None,
    atol: float | None = None,
    grad_step: float = FD_STEP,
) -> Callable:
    """Pointwise generator (eps, z) -> velocity for the deformation flow.

    Each evaluation runs a fresh cohomological quadrature at the current
    deformation stage eps; in Hamiltonian mode the scalar solution is turned
    into the vector field J grad G by a stencil gradient.
    """
    if R1 is None and R2 is None:
        raise MathPreconditionError("need at least one remainder part")
    scalar = sys.mode == "hamiltonian"
    parts = []
    if R1 is not None:
        Rp = _coerce_remainder(sys, R1)
        ell = _min_degree_along(Rp, sys.ix)
        parts.append(("backward", Rp, None if ell is None else ell - 1))
    if R2 is not None:
        Rp = _coerce_remainder(sys, R2)
        ell = _min_degree_along(Rp, sys.iy)
        parts.append(("forward", Rp, None if ell is None else ell - 1))

    def scalar_G(epsv, z):
        total = 0.0
        for direction, Rp, ell in parts:
            sf = _solve_directional(
                sys, Rp, np.asarray([z]), direction, ell, T_star, quad_tol, epsv,
                None, rtol, atol,
            )
            total += float(np.atleast_1d(sf.values)[0])
        return total

    def vector_G(epsv, z):
        total = np.zeros(sys.roster.n)
        for direction, Rp, ell in parts:
            sf = _solve_directional(
                sys, Rp, np.asarray([z]), direction, ell, T_star, quad_tol, epsv,
                None, rtol, atol,
            )
            total = total + np.asarray(sf.values)[0]
        return total

    if not scalar:
        return vector_G

    def hamiltonian_generator(epsv, z):
        grad = _stencil_derivative(
            lambda w: np.atleast_1d(scalar_G(epsv, w)), np.asarray(z, float), grad_step
        )[0]
        return sys.J @ grad

    return hamiltonian_generator


@dataclass
class DeformationResult:
    z0: np.ndarray
    z1: np.ndarray
    v0: float
    v_crit: float | None
    v_bound_at_one: float | None
    trajectory: object

    def to_obj(self) -> dict:
        return {
            "z0": [float(x) for x in self.z0],
            "z1": [float(x) for x in self.z1],
            "v0": self.v0,
            "v_crit": self.v_crit,
            "v_bound_at_one": self.v_bound_at_one,
        }


def deformation_step(
    sys: CompactifiedSystem,
    G_total: Callable,
    z0,
    *,
    tol: float = 1e-8,
    K: float | None = None,
    ell: int | None = None,
) -> DeformationResult:
    """Flow z' = G(eps, z) from eps = 0 to 1.

    With a generator bound |G(eps, z)| <= K |pi_saddle z|^{ell+1} the saddle
    radius obeys the comparison solution v(eps) = v0 (1 - K ell eps v0^ell)^{-1/ell},
    which stays finite through eps = 1 exactly when v0 < (K ell)^{-1/ell}; the
    routine refuses to start outside that ball.  Center-subspace points are
    fixed (both generator parts vanish there).
    """
    z0 = np.asarray(z0, dtype=float)
    saddle = sorted(sys.ix + sys.iy)
    v0 = float(np.linalg.norm(z0[saddle])) if saddle else 0.0
    v_crit = None
    v_bound = None
    if K is not None and ell is not None and ell > 0:
        v_crit = (K * ell) ** (-1.0 / ell)
        if v0 >= v_crit:
            raise NumericalBlowupError(
                "comparison bound v(eps) = v0 (1 - K l eps v0^l)^{-1/l} blows "
                "up before eps = 1: |z0| = %g >= (K l)^{-1/l} = %g" % (v0, v_crit)
            )
        denom = 1.0 - K * ell * v0**ell
        v_bound = v0 * denom ** (-1.0 / ell)

    traj = solve_rk54(
        lambda e, z: np.asarray(G_total(e, z), dtype=float),
        (0.0, 1.0),
        z0,
        rtol=tol,
        atol=tol * 1e-3,
    )
    return DeformationResult(
        z0=z0,
        z1=traj.y1.copy(),
        v0=v0,
        v_crit=v_crit,
        v_bound_at_one=v_bound,
        trajectory=traj,
    )


# ---------------------------------------------------------------------------
# invariant-manifold straightening
# ---------------------------------------------------------------------------


def apply_straightening(
    Z: PolyField,
    xs_graph: dict | None = None,
    yu_graph: dict | None = None,
    P: int | None = None,
    tol: float = 1e-9,
) -> tuple[PolyField, PolyField, dict]:
    """Push Z through  x~ = x - x^s(y, c),  y~ = y - y^u(x, c).

    ``xs_graph`` maps unstable component indices to the graph series of the
    stable manifold (series in the other variables, vanishing to second
    order); ``yu_graph`` mirrors it for the unstable manifold.  Returns the
    transformed field, the transform, and an invariance report: after
    straightening every unstable component must vanish on {x = 0} and every
    stable one on {y = 0}.
    """
    roster = Z.roster
    P = P if P is not None else Z.trunc_degree
    xs_graph = xs_graph or {}
    yu_graph = yu_graph or {}
    xs_idx = set(roster.unstable_indices)
    ys_idx = set(roster.stable_indices)

    comps = list(PolyField.identity_map(roster, P).components)
    for idx, graph in list(xs_graph.items()) + list(yu_graph.items()):
        own = xs_idx if idx in xs_idx else ys_idx
        if idx not in (xs_idx | ys_idx):
            raise MathPreconditionError("graph index %d is not a saddle variable" % idx)
        for e in graph.terms:
            if sum(e) < 2:
                raise MathPreconditionError(
                    "manifold graph must vanish to second order (tangency)"
                )
            if any(e[i] for i in own):
                raise MathPreconditionError(
                    "graph for component %d may not depend on its own block" % idx
                )
        comps[idx] = comps[idx] - graph.with_trunc(P)
    T = PolyField(comps)
    Znew = pushforward_truncated(Z, T, P)

    def block_defect(indices, other):
        worst = 0.0
        for i in indices:
            for e, c in Znew[i].terms.items():
                if sum(e[j] for j in other) == 0:
                    worst = max(worst, abs(c))
        return worst

    report = {
        "unstable_on_x0": block_defect(roster.unstable_indices, roster.unstable_indices),
        "stable_on_y0": block_defect(roster.stable_indices, roster.stable_indices),
    }
    report["ok"] = max(report["unstable_on_x0"], report["stable_on_y0"]) <= tol
    return Znew, T, report
