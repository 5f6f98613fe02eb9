"""Sampled rate-condition and isolating-block diagnostics.

The deformation parameter eps is adjoined as a neutral direction, so the
"slow" block is lambda = (eps, center); x is the unstable and y the stable
block.  Ten directional rate constants are built from logarithmic norms of
the diagonal Jacobian blocks and operator norms of the off-diagonal ones,
each weighted by a cone-slope parameter L in (0, 1):

    mu_s1  = sup { mu_log(df_y/dy)   + (1/L) |df_y/d(l,x)| }
    mu_s2  = sup { mu_log(df_y/dy)   +   L   |df_(l,x)/dy| }
    xi_u1  = inf { m_l(df_x/dx)      - (1/L) |df_x/d(l,y)| }
    xi_u1P = inf  m_l(df_x/dx o P)   - (1/L) sup |df_x/d(l,y)|
    mu_cs1 = sup { mu_log(df_(l,y)/d(l,y)) +   L   |df_(l,y)/dx| }
    mu_cs2 = sup { mu_log(df_(l,y)/d(l,y)) + (1/L) |df_x/d(l,y)| }
    xi_cu1 = inf { m_l(df_(l,x)/d(l,x))    -   L   |df_(l,x)/dy| }
    xi_cu1P= inf  m_l(df_(l,x)/d(l,x) o P) -   L   sup |df_(l,x)/dy|
    xi_u2  = inf { m_l(df_x/dx)      -   L   |df_(l,y)/dx| }
    xi_cu2 = inf  m_l(df_(l,x)/d(l,x))     - (1/L) sup |df_y/d(l,x)|

where P projects onto the candidate manifold {x = y = 0} and the "P" /
split variants take the inf and sup separately.  The rate conditions of
order k then demand, for every 1 <= j <= k,

    mu_s1 < 0 < xi_u1P,        mu_cs1 < xi_u1P,      mu_s1 < xi_cu1P,
    mu_s2 < (j+1) xi_cu1,      mu_cs2 < xi_u1,
    (j+1) mu_cs1 < xi_u2,      mu_s1 < xi_cu2.

Suprema/infima are estimated by quasi-random (Halton) sampling of the block
domain -- a diagnostic, not an enclosure; every report carries the label
"sampled, non-rigorous".  The isolating-block check samples the exit face
|x| = delta for (F_x | x) > 0 and the entry face |y| = delta for
(F_y | y) < 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .cohsolver import CompactifiedSystem
from .defaults import GRID_RADIUS, NHIM_SAMPLES
from .errors import MathPreconditionError
from .spectral import log_norm, symmetric_eigenvalues

__all__ = [
    "RateConstants",
    "rate_constants",
    "rate_conditions",
    "isolating_block",
]

LABEL = "sampled, non-rigorous"


def _opnorm(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    evs = symmetric_eigenvalues(M.T @ M)
    return math.sqrt(max(float(np.max(evs)), 0.0))


@dataclass(frozen=True)
class RateConstants:
    """The cone slope L plus the ten directional constants."""

    L: float
    mu_s1: float
    mu_s2: float
    xi_u1: float
    xi_u1P: float
    mu_cs1: float
    mu_cs2: float
    xi_cu1: float
    xi_cu1P: float
    xi_u2: float
    xi_cu2: float
    source: str = "supplied"

    def __post_init__(self):
        if not (0.0 < self.L < 1.0):
            raise MathPreconditionError("cone slope L must lie in (0, 1)")

    def to_obj(self) -> dict:
        return {
            "L": self.L,
            "mu_s1": self.mu_s1,
            "mu_s2": self.mu_s2,
            "xi_u1": self.xi_u1,
            "xi_u1P": self.xi_u1P,
            "mu_cs1": self.mu_cs1,
            "mu_cs2": self.mu_cs2,
            "xi_cu1": self.xi_cu1,
            "xi_cu1P": self.xi_cu1P,
            "xi_u2": self.xi_u2,
            "xi_cu2": self.xi_cu2,
            "source": self.source,
            "label": LABEL,
        }


def _extended_jacobian(sys: CompactifiedSystem, z: np.ndarray, eps: float) -> np.ndarray:
    """Jacobian of the eps-extended field (eps' = 0, z' = F(z, eps))."""
    n = sys.roster.n
    J = np.zeros((n + 1, n + 1))
    J[1:, 1:] = sys.jacobian(z, eps)
    h = 1e-6
    J[1:, 0] = (sys.field(z, eps + h) - sys.field(z, eps - h)) / (2 * h)
    return J


def _scale_into_ball(pts: np.ndarray, radius: float) -> np.ndarray:
    """Clamp box samples into the closed ball of the given radius."""
    if pts.shape[1] == 0:
        return pts
    norms = np.linalg.norm(pts, axis=1, keepdims=True)
    factor = np.minimum(1.0, radius / np.maximum(norms, 1e-300))
    return pts * factor


def rate_constants(
    sys: CompactifiedSystem,
    L: float,
    delta: float = GRID_RADIUS,
    samples: int = NHIM_SAMPLES,
    seed: int = 0,
    center_box: float | None = None,
) -> RateConstants:
    """Estimate the ten constants over D(delta) x [0, 1]_eps by sampling.

    The saddle blocks range over balls of radius delta, the center block over
    the bump-support box (outside it the field is linear, so the blocks are
    constant), eps over [0, 1].
    """
    if samples < 1:
        raise MathPreconditionError("need at least one sample")
    if not (0.0 < L < 1.0):
        raise MathPreconditionError("cone slope L must lie in (0, 1)")
    n = sys.roster.n
    dim_x, dim_y, dim_c = len(sys.ix), len(sys.iy), len(sys.ic)
    if center_box is None:
        center_box = sys.bump.sigma * sys.bump.r1

    sampler = qmc.Halton(d=dim_x + dim_y + dim_c + 1, scramble=True, seed=seed)
    raw = sampler.random(samples)
    xs = _scale_into_ball((raw[:, :dim_x] * 2 - 1) * delta, delta)
    ys = _scale_into_ball(
        (raw[:, dim_x : dim_x + dim_y] * 2 - 1) * delta, delta
    )
    cs = (raw[:, dim_x + dim_y : dim_x + dim_y + dim_c] * 2 - 1) * center_box
    eps_col = raw[:, -1]

    # extended-space index blocks: slot 0 is eps
    lam = [0] + [1 + i for i in sys.ic]
    ux = [1 + i for i in sys.ix]
    sy = [1 + i for i in sys.iy]
    lam_x = sorted(lam + ux)
    lam_y = sorted(lam + sy)

    sup_mu_s1 = -math.inf
    sup_mu_s2 = -math.inf
    inf_xi_u1 = math.inf
    inf_ml_xx_P = math.inf
    sup_off_x_ly = 0.0
    sup_mu_cs1 = -math.inf
    sup_mu_cs2 = -math.inf
    inf_xi_cu1 = math.inf
    inf_ml_lx_P = math.inf
    sup_off_lx_y = 0.0
    inf_xi_u2 = math.inf
    inf_ml_lx = math.inf
    sup_off_y_lx = 0.0

    for s in range(samples):
        z = np.zeros(n)
        z[list(sys.ix)] = xs[s]
        z[list(sys.iy)] = ys[s]
        z[list(sys.ic)] = cs[s]
        eps = float(eps_col[s])
        J = _extended_jacobian(sys, z, eps)
        zP = z.copy()
        zP[list(sys.ix)] = 0.0
        zP[list(sys.iy)] = 0.0
        JP = _extended_jacobian(sys, zP, eps)

        Jyy = J[np.ix_(sy, sy)]
        Jxx = J[np.ix_(ux, ux)]
        Jll_y = J[np.ix_(lam_y, lam_y)]
        Jll_x = J[np.ix_(lam_x, lam_x)]
        off_y_lx = _opnorm(J[np.ix_(sy, lam_x)])
        off_lx_y = _opnorm(J[np.ix_(lam_x, sy)])
        off_x_ly = _opnorm(J[np.ix_(ux, lam_y)])
        off_ly_x = _opnorm(J[np.ix_(lam_y, ux)])

        rep_yy = log_norm(Jyy)
        rep_xx = log_norm(Jxx)
        rep_ll_y = log_norm(Jll_y)
        rep_ll_x = log_norm(Jll_x)

        sup_mu_s1 = max(sup_mu_s1, rep_yy.mu_log + off_y_lx / L)
        sup_mu_s2 = max(sup_mu_s2, rep_yy.mu_log + L * off_lx_y)
        inf_xi_u1 = min(inf_xi_u1, rep_xx.m_l - off_x_ly / L)
        sup_off_x_ly = max(sup_off_x_ly, off_x_ly)
        sup_mu_cs1 = max(sup_mu_cs1, rep_ll_y.mu_log + L * off_ly_x)
        sup_mu_cs2 = max(sup_mu_cs2, rep_ll_y.mu_log + off_x_ly / L)
        inf_xi_cu1 = min(inf_xi_cu1, rep_ll_x.m_l - L * off_lx_y)
        sup_off_lx_y = max(sup_off_lx_y, off_lx_y)
        inf_xi_u2 = min(inf_xi_u2, rep_xx.m_l - L * off_ly_x)
        inf_ml_lx = min(inf_ml_lx, rep_ll_x.m_l)
        sup_off_y_lx = max(sup_off_y_lx, off_y_lx)

        inf_ml_xx_P = min(inf_ml_xx_P, log_norm(JP[np.ix_(ux, ux)]).m_l)
        inf_ml_lx_P = min(inf_ml_lx_P, log_norm(JP[np.ix_(lam_x, lam_x)]).m_l)

    return RateConstants(
        L=L,
        mu_s1=sup_mu_s1,
        mu_s2=sup_mu_s2,
        xi_u1=inf_xi_u1,
        xi_u1P=inf_ml_xx_P - sup_off_x_ly / L,
        mu_cs1=sup_mu_cs1,
        mu_cs2=sup_mu_cs2,
        xi_cu1=inf_xi_cu1,
        xi_cu1P=inf_ml_lx_P - L * sup_off_lx_y,
        xi_u2=inf_xi_u2,
        xi_cu2=inf_ml_lx - sup_off_y_lx / L,
        source="sampled(n=%d, delta=%g, seed=%d)" % (samples, delta, seed),
    )


def rate_conditions(rc: RateConstants, k: int) -> dict:
    """Evaluate the order-k rate-condition ledger (report-style, no raising)."""
    if k < 1:
        raise MathPreconditionError("order k must be >= 1")
    records = []

    def rec(name, lhs, rhs, j=None):
        entry = {
            "name": name,
            "lhs": lhs,
            "rhs": rhs,
            "margin": rhs - lhs,
            "ok": lhs < rhs,
        }
        if j is not None:
            entry["j"] = j
        records.append(entry)

    rec("mu_s1<0", rc.mu_s1, 0.0)
    rec("0<xi_u1P", 0.0, rc.xi_u1P)
    rec("mu_cs1<xi_u1P", rc.mu_cs1, rc.xi_u1P)
    rec("mu_s1<xi_cu1P", rc.mu_s1, rc.xi_cu1P)
    rec("mu_cs2<xi_u1", rc.mu_cs2, rc.xi_u1)
    rec("mu_s1<xi_cu2", rc.mu_s1, rc.xi_cu2)
    for j in range(1, k + 1):
        rec("mu_s2<(j+1)xi_cu1", rc.mu_s2, (j + 1) * rc.xi_cu1, j=j)
        rec("(j+1)mu_cs1<xi_u2", (j + 1) * rc.mu_cs1, rc.xi_u2, j=j)
    return {
        "k": k,
        "L": rc.L,
        "constants": rc.to_obj(),
        "records": records,
        "ok": all(r["ok"] for r in records),
        "label": LABEL,
    }


def isolating_block(
    sys: CompactifiedSystem,
    delta: float,
    samples: int = 1000,
    seed: int = 0,
    eps_values=(0.0, 0.5, 1.0),
    center_box: float | None = None,
) -> dict:
    """Sample the exit/entry sign conditions on the faces |x| = / |y| = delta.

    Exit face: (pi_x F | pi_x q) > 0 on {|x| = delta, |y| <= delta};
    entry face: (pi_y F | pi_y q) < 0 on {|y| = delta, |x| <= delta}.
    Margins are the worst (smallest) signed values over all samples and all
    eps in ``eps_values``; both must be positive for a pass.
    """
    if delta <= 0:
        raise MathPreconditionError("face radius delta must be positive")
    if samples < 1:
        raise MathPreconditionError("need at least one sample")
    n = sys.roster.n
    dim_x, dim_y, dim_c = len(sys.ix), len(sys.iy), len(sys.ic)
    if center_box is None:
        center_box = sys.bump.sigma * sys.bump.r1

    sampler = qmc.Halton(d=max(dim_x + dim_y + dim_c, 1), scramble=True, seed=seed)
    raw = sampler.random(samples) * 2 - 1

    def assemble(face: str):
        xs = raw[:, :dim_x] * delta
        ys = raw[:, dim_x : dim_x + dim_y] * delta
        cs = raw[:, dim_x + dim_y : dim_x + dim_y + dim_c] * center_box
        if face == "exit":
            norms = np.linalg.norm(xs, axis=1, keepdims=True)
            xs = delta * xs / np.maximum(norms, 1e-300)  # push onto the sphere
            ys = _scale_into_ball(ys, delta)
        else:
            norms = np.linalg.norm(ys, axis=1, keepdims=True)
            ys = delta * ys / np.maximum(norms, 1e-300)
            xs = _scale_into_ball(xs, delta)
        pts = np.zeros((samples, n))
        pts[:, list(sys.ix)] = xs
        pts[:, list(sys.iy)] = ys
        pts[:, list(sys.ic)] = cs
        return pts

    report = {
        "delta": delta,
        "samples": samples,
        "eps_values": list(eps_values),
        "label": LABEL,
    }
    exit_margin = math.inf
    entry_margin = math.inf
    worst_exit = None
    worst_entry = None
    if dim_x:
        for eps in eps_values:
            for q in assemble("exit"):
                F = sys.field(q, eps)
                val = float(F[list(sys.ix)] @ q[list(sys.ix)])
                if val < exit_margin:
                    exit_margin = val
                    worst_exit = {"point": q.tolist(), "eps": float(eps)}
    else:
        report["exit_note"] = "no unstable coordinates; exit face is empty"
    if dim_y:
        for eps in eps_values:
            for q in assemble("entry"):
                F = sys.field(q, eps)
                val = -float(F[list(sys.iy)] @ q[list(sys.iy)])
                if val < entry_margin:
                    entry_margin = val
                    worst_entry = {"point": q.tolist(), "eps": float(eps)}
    else:
        report["entry_note"] = "no stable coordinates; entry face is empty"

    report["exit_margin"] = None if exit_margin is math.inf else exit_margin
    report["entry_margin"] = None if entry_margin is math.inf else entry_margin
    report["worst_exit"] = worst_exit
    report["worst_entry"] = worst_entry
    finite = [m for m in (exit_margin, entry_margin) if m is not math.inf]
    report["ok"] = all(m > 0 for m in finite) if finite else False
    return report
