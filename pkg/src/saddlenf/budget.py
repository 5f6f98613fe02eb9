"""Smoothness budgets: how much regularity a degree-k polynomial normal form
costs near a saddle(-center) equilibrium.

All arithmetic is exact rational (``fractions.Fraction``); floats are converted
*exactly* (never truncated) before any integer part is taken, so boundary
cases like integer rate ratios are decided correctly.

For a two-sided gap  Re Sp in [-lam_max, -lam_min] u [mu_min, mu_max]  and a
target conjugacy order k, the minimal Taylor split orders are

  general / pure saddle:
      l1(k) = max(k + [k*lam_max/mu_min + mu_max/mu_min], [(k+1)*mu_max/mu_min])
      l2(k) = max(k + [k*mu_max/lam_min + lam_max/lam_min], [(k+1)*lam_max/lam_min])
      Q0    = l1 + l2
  Hamiltonian (gap symmetrized so lam = mu sidewise):
      l1(k) = k + 1 + [(k+1)*lam_max/mu_min]
      l2(k) = k + 1 + [(k+1)*mu_max/lam_min]
      Q0    = l1 + l2 - 1

with [.] the integer part, and the induced order floor is q0 = Q0 + 3
(general and Hamiltonian) or q0 = Q0 + 2 (pure saddle, no center block).

:func:`validate_choice` replays the full inequality ledger for a concrete
choice of (Q, P, q) and reports each inequality by name with its exact margin.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Sequence

from .errors import BudgetInequalityError, MathPreconditionError
from .spectral import SpectralGap

__all__ = [
    "BudgetMode",
    "SmoothnessBudget",
    "InequalityRecord",
    "smoothness_budget",
    "default_choice",
    "validate_choice",
    "validate_ell",
    "compare_literature",
    "as_fraction",
]


class BudgetMode(str, Enum):
    GENERAL = "general"
    HAMILTONIAN = "hamiltonian"
    PURE_SADDLE = "pure_saddle"


def as_fraction(x) -> Fraction:
    """Exact conversion (int, Fraction, 'p/q' strings, floats bit-exactly)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)  # exact binary expansion
    raise TypeError("cannot convert %r to an exact rational" % (x,))


@dataclass(frozen=True)
class InequalityRecord:
    name: str
    lhs: Fraction
    rhs: Fraction
    satisfied: bool
    strict: bool
    note: str = ""

    @property
    def margin(self) -> Fraction:
        return self.rhs - self.lhs

    def to_obj(self) -> dict:
        return {
            "name": self.name,
            "lhs": str(self.lhs),
            "rhs": str(self.rhs),
            "relation": "<" if self.strict else "<=",
            "margin": str(self.margin),
            "satisfied": self.satisfied,
            "note": self.note,
        }


@dataclass(frozen=True)
class SmoothnessBudget:
    k: int
    mode: BudgetMode
    gap: tuple[Fraction, Fraction, Fraction, Fraction]  # lam_min, lam_max, mu_min, mu_max
    ell1: int
    ell2: int
    Q0: int
    q0: int
    Q: int | None = None
    P: int | None = None
    q: int | None = None
    ledger: tuple[InequalityRecord, ...] = ()
    satisfied: bool | None = None

    def to_obj(self) -> dict:
        lam_min, lam_max, mu_min, mu_max = self.gap
        return {
            "k": self.k,
            "mode": self.mode.value,
            "gap": {
                "lam_min": str(lam_min),
                "lam_max": str(lam_max),
                "mu_min": str(mu_min),
                "mu_max": str(mu_max),
            },
            "ell1": self.ell1,
            "ell2": self.ell2,
            "Q0": self.Q0,
            "q0": self.q0,
            "Q": self.Q,
            "P": self.P,
            "q": self.q,
            "satisfied": self.satisfied,
            "ledger": [r.to_obj() for r in self.ledger],
        }


def _gap_fractions(gap, mode: BudgetMode):
    """Extract (lam_min, lam_max, mu_min, mu_max) as Fractions.

    Accepts a :class:`SpectralGap` or a 4-sequence.  Hamiltonian budgets need
    lam = mu sidewise; mismatching input is symmetrized conservatively (wider
    ratios, hence never an underestimate) with a warning.
    """
    if isinstance(gap, SpectralGap):
        if not gap.two_sided:
            raise MathPreconditionError(
                "smoothness budget needs a two-sided gap (stable and unstable)"
            )
        vals = (gap.lam_min, gap.lam_max, gap.mu_min, gap.mu_max)
    else:
        vals = tuple(gap)
        if len(vals) != 4 or any(v is None for v in vals):
            raise MathPreconditionError(
                "gap must provide lam_min, lam_max, mu_min, mu_max"
            )
    lam_min, lam_max, mu_min, mu_max = (as_fraction(v) for v in vals)
    if not (0 < lam_min <= lam_max and 0 < mu_min <= mu_max):
        raise MathPreconditionError("gap must satisfy 0 < min <= max on both sides")
    if mode is BudgetMode.HAMILTONIAN and (lam_min != mu_min or lam_max != mu_max):
        warnings.warn(
            "Hamiltonian gap should satisfy lam=mu sidewise; symmetrizing "
            "conservatively (min of mins, max of maxes)",
            stacklevel=3,
        )
        lo = min(lam_min, mu_min)
        hi = max(lam_max, mu_max)
        lam_min = mu_min = lo
        lam_max = mu_max = hi
    return lam_min, lam_max, mu_min, mu_max


def _ell_general(k: int, num_max: Fraction, den_min: Fraction, other_max: Fraction) -> int:
    """max(k + [k*num_max/den_min + other_max/den_min], [(k+1)*other_max/den_min])

    where for l1: num_max = lam_max, den_min = mu_min, other_max = mu_max
    and for l2 the lam/mu roles are exchanged."""
    a = k + math.floor((k * num_max + other_max) / den_min)
    b = math.floor((k + 1) * other_max / den_min)
    return max(a, b)


def _ell_hamiltonian(k: int, num_max: Fraction, den_min: Fraction) -> int:
    return k + 1 + math.floor((k + 1) * num_max / den_min)


def smoothness_budget(k: int, gap, mode: BudgetMode = BudgetMode.GENERAL) -> SmoothnessBudget:
    """Minimal split orders (l1, l2) and the floors Q0, q0 for order k."""
    if k < 1:
        raise MathPreconditionError("conjugacy order k must be >= 1")
    mode = BudgetMode(mode)
    lam_min, lam_max, mu_min, mu_max = _gap_fractions(gap, mode)
    if mode is BudgetMode.HAMILTONIAN:
        ell1 = _ell_hamiltonian(k, lam_max, mu_min)
        ell2 = _ell_hamiltonian(k, mu_max, lam_min)
        Q0 = ell1 + ell2 - 1
        q0 = Q0 + 3
    else:
        ell1 = _ell_general(k, lam_max, mu_min, mu_max)
        ell2 = _ell_general(k, mu_max, lam_min, lam_max)
        Q0 = ell1 + ell2
        q0 = Q0 + (2 if mode is BudgetMode.PURE_SADDLE else 3)
    return SmoothnessBudget(
        k=k,
        mode=mode,
        gap=(lam_min, lam_max, mu_min, mu_max),
        ell1=ell1,
        ell2=ell2,
        Q0=Q0,
        q0=q0,
    )


def default_choice(budget: SmoothnessBudget) -> tuple[int, int, int]:
    """The canonical choice Q = Q0, P = Q0 + 2, q = minimal admissible."""
    Q = budget.Q0
    P = Q + 2
    q = max(budget.q0, P + 1)
    return Q, P, q


# ---------------------------------------------------------------------------
# inequality ledger
# ---------------------------------------------------------------------------


def _rec(name, lhs, rhs, strict, note=""):
    lhs = as_fraction(lhs)
    rhs = as_fraction(rhs)
    ok = (lhs < rhs) if strict else (lhs <= rhs)
    return InequalityRecord(name, lhs, rhs, ok, strict, note)


def _cond2_pair(k, ell, lo, hi, other_lo, other_hi):
    """k < min((lo*(ell+1) - hi)/(lo + other_hi), (lo*(ell+1) - hi)/hi)."""
    num = lo * (ell + 1) - hi
    return min(num / (lo + other_hi), num / hi)


def validate_ell(k: int, ell: int, gap, mode: BudgetMode, direction: str = "backward"):
    """Check the single split-order inequality governing one solver direction.

    backward: cond2 (general) / cond2-ham; forward: the lam<->mu mirrored
    frw-cond2 / cond2-ham-frw.  Raises :class:`BudgetInequalityError` naming
    the inequality when violated; returns the exact margin otherwise.
    """
    mode = BudgetMode(mode)
    lam_min, lam_max, mu_min, mu_max = _gap_fractions(gap, mode)
    if direction == "backward":
        if mode is BudgetMode.HAMILTONIAN:
            name = "cond2-ham"
            bound = mu_min * (ell + 1) / (mu_min + lam_max)
            lhs = Fraction(k + 1)
        else:
            name = "cond2"
            bound = _cond2_pair(k, ell, mu_min, mu_max, lam_min, lam_max)
            lhs = Fraction(k)
    elif direction == "forward":
        if mode is BudgetMode.HAMILTONIAN:
            name = "cond2-ham-frw"
            bound = lam_min * (ell + 1) / (lam_min + mu_max)
            lhs = Fraction(k + 1)
        else:
            name = "frw-cond2"
            bound = _cond2_pair(k, ell, lam_min, lam_max, mu_min, mu_max)
            lhs = Fraction(k)
    else:
        raise ValueError("direction must be 'backward' or 'forward'")
    margin = bound - lhs
    if margin <= 0:
        raise BudgetInequalityError(
            name, "need %s < %s (margin %s)" % (lhs, bound, margin)
        )
    return margin


def validate_choice(budget: SmoothnessBudget, Q: int, P: int, q: int) -> SmoothnessBudget:
    """Evaluate the full inequality ledger for concrete (Q, P, q).

    Returns a copy of the budget with ``Q``/``P``/``q``, the ledger, and the
    overall ``satisfied`` flag filled in.  Inequalities are strict where the
    underlying estimates need strict inequality; equality counts as failure
    there.
    """
    lam_min, lam_max, mu_min, mu_max = budget.gap
    k, l1, l2 = budget.k, budget.ell1, budget.ell2
    mode = budget.mode
    recs: list[InequalityRecord] = []

    if mode is BudgetMode.HAMILTONIAN:
        recs.append(_rec("q-1>=Q+2", Q + 2, q - 1, strict=False))
        recs.append(_rec("l1+l2<=Q+1", l1 + l2, Q + 1, strict=False))
        lit = _rec("2l2+1<=Q+1", 2 * l2 + 1, Q + 1, strict=False)
    elif mode is BudgetMode.PURE_SADDLE:
        recs.append(_rec("q-1>=Q+1", Q + 1, q - 1, strict=False))
        recs.append(_rec("l1+l2<=Q", l1 + l2, Q, strict=False))
        lit = _rec("2l2+1<=Q", 2 * l2 + 1, Q, strict=False)
    else:
        recs.append(_rec("q-2>=Q+1", Q + 1, q - 2, strict=False))
        recs.append(_rec("l1+l2<=Q", l1 + l2, Q, strict=False))
        lit = _rec("2l2+1<=Q", 2 * l2 + 1, Q, strict=False)

    # The 2*l2+1 condition exists to give the y-Taylor split enough room; when
    # l2 <= l1 the decomposition can be rearranged and q >= 2*l2 + 2 already
    # suffices, so we accept that as an equivalent route.
    if not lit.satisfied:
        if l2 <= l1 and q >= 2 * l2 + 2:
            lit = replace(
                lit,
                satisfied=True,
                note="waived: rearranged decomposition with l2 <= l1 and q >= 2*l2+2",
            )
        elif l2 > l1:
            lit = replace(
                lit,
                note="hint: rearrange the decomposition R = R1 + R2 so that l2 <= l1",
            )
    recs.append(lit)

    if mode is BudgetMode.HAMILTONIAN:
        recs.append(
            _rec("cond2-ham", k + 1, mu_min * (l1 + 1) / (mu_min + lam_max), strict=True)
        )
        recs.append(
            _rec(
                "cond2-ham-frw", k + 1, lam_min * (l2 + 1) / (lam_min + mu_max),
                strict=True,
            )
        )
    else:
        recs.append(
            _rec("cond2", k, _cond2_pair(k, l1, mu_min, mu_max, lam_min, lam_max), strict=True)
        )
        recs.append(
            _rec(
                "frw-cond2", k, _cond2_pair(k, l2, lam_min, lam_max, mu_min, mu_max),
                strict=True,
            )
        )

    # hypotheses of the conjugacy statement itself
    recs.append(_rec("P>=Q", Q, P, strict=False))
    recs.append(_rec("q-1>=P", P, q - 1, strict=False))
    floor_gap = 2 if mode is BudgetMode.PURE_SADDLE else 3
    recs.append(_rec("q>=Q+%d" % floor_gap, Q + floor_gap, q, strict=False))

    return replace(
        budget,
        Q=Q,
        P=P,
        q=q,
        ledger=tuple(recs),
        satisfied=all(r.satisfied for r in recs),
    )


# ---------------------------------------------------------------------------
# literature comparison
# ---------------------------------------------------------------------------


def compare_literature(k: int, gap) -> list[dict]:
    """Q0/q0 rows for this construction and for the two published baselines.

    Rows (all exact):

    * ours/general, ours/hamiltonian, ours/pure_saddle -- the formulas above.
    * BK95 -- Q0 = [lam_max/lam_min + k(mu_max/lam_min + 1)]
                 + [mu_max/mu_min + k(lam_max/mu_min + 1)] + 2,  q0 = Q0 + k.
    * BLW (no structure and Hamiltonian) -- Q0 = ceil((k+B)/A) with
      A = (lam_min/mu_max) * (mu_min/(lam_max+mu_min)),
      B = (mu_max^2 + mu_min(lam_max-lam_min)) / (mu_max(lam_max+mu_min))
      (no structure)  or  B = 1 - 2A (Hamiltonian);  q0 = Q0 + 2.
    """
    rows: list[dict] = []

    def row(source, mode, Q0, q0, note=""):
        rows.append(
            {"source": source, "mode": mode, "Q0": Q0, "q0": q0, "note": note}
        )

    try:
        lam_min, lam_max, mu_min, mu_max = _gap_fractions(gap, BudgetMode.GENERAL)
    except MathPreconditionError as exc:
        return [{"source": "all", "mode": "-", "Q0": None, "q0": None, "note": str(exc)}]

    b = smoothness_budget(k, (lam_min, lam_max, mu_min, mu_max), BudgetMode.GENERAL)
    row("ours", "general", b.Q0, b.q0)
    bs = smoothness_budget(k, (lam_min, lam_max, mu_min, mu_max), BudgetMode.PURE_SADDLE)
    row("ours", "pure_saddle", bs.Q0, bs.q0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bh = smoothness_budget(k, (lam_min, lam_max, mu_min, mu_max), BudgetMode.HAMILTONIAN)
    note = "" if (lam_min == mu_min and lam_max == mu_max) else "gap symmetrized"
    row("ours", "hamiltonian", bh.Q0, bh.q0, note)

    Q0_bk = (
        math.floor(lam_max / lam_min + k * (mu_max / lam_min + 1))
        + math.floor(mu_max / mu_min + k * (lam_max / mu_min + 1))
        + 2
    )
    row("BK95", "general", Q0_bk, Q0_bk + k)

    A = (lam_min / mu_max) * (mu_min / (lam_max + mu_min))
    B_gen = (mu_max**2 + mu_min * (lam_max - lam_min)) / (mu_max * (lam_max + mu_min))
    B_ham = 1 - 2 * A
    Q0_blw = math.ceil((k + B_gen) / A)
    row("BLW", "general", Q0_blw, Q0_blw + 2)
    Q0_blw_h = math.ceil((k + B_ham) / A)
    row("BLW", "hamiltonian", Q0_blw_h, Q0_blw_h + 2)
    return rows
