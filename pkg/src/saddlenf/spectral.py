"""Spectral gaps and (Euclidean) logarithmic norms.

The spectral gap of a saddle(-center) linearization collects the moduli of the
real parts of the hyperbolic eigenvalues:

    Re Sp(A)  restricted to  [-lam_max, -lam_min] u [mu_min, mu_max],

with the minimal such intervals.  One of the two sides may be empty (pure
stable / pure unstable spectra).

The logarithmic norm here is always the Euclidean one,

    mu_log(A) = max eig( (A + A^T)/2 ),      m_l(A) = min eig( (A + A^T)/2 ),

computed with an in-repo cyclic Jacobi eigensolver for the symmetric part, and
satisfying m_l(A) = -mu_log(-A).  They bound flows of  z' = A(t) z + c(t)  via
the Duhamel inequality implemented in :func:`duhamel_bound`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .defaults import EPS_SPEC
from .errors import SpectralGapError

__all__ = [
    "SpectralGap",
    "spectral_gap",
    "symmetric_eigenvalues",
    "LogNormReport",
    "log_norm",
    "mu_log",
    "m_l",
    "duhamel_bound",
]


@dataclass(frozen=True)
class SpectralGap:
    """Minimal real-part intervals of a hyperbolic (two-sided) spectrum.

    ``lam_*`` describe the stable side (|Re| of eigenvalues with Re < 0),
    ``mu_*`` the unstable side.  An absent side has both entries ``None``.
    """

    lam_min: float | None
    lam_max: float | None
    mu_min: float | None
    mu_max: float | None

    def __post_init__(self):
        for lo, hi, side in (
            (self.lam_min, self.lam_max, "stable"),
            (self.mu_min, self.mu_max, "unstable"),
        ):
            if (lo is None) != (hi is None):
                raise SpectralGapError("%s side must be both set or both None" % side)
            if lo is not None and not (0.0 < lo <= hi):
                raise SpectralGapError(
                    "%s side must satisfy 0 < min <= max (got %r, %r)" % (side, lo, hi)
                )
        if self.lam_min is None and self.mu_min is None:
            raise SpectralGapError("gap has no hyperbolic side at all")

    @property
    def two_sided(self) -> bool:
        return self.lam_min is not None and self.mu_min is not None

    def to_obj(self) -> dict:
        return {
            "lam_min": self.lam_min,
            "lam_max": self.lam_max,
            "mu_min": self.mu_min,
            "mu_max": self.mu_max,
        }


def spectral_gap(eigenvalues: Sequence[complex], eps_spec: float = EPS_SPEC) -> SpectralGap:
    """Minimal gap intervals for a list of hyperbolic eigenvalues.

    Center eigenvalues are not allowed here: any eigenvalue with
    |Re nu| <= eps_spec raises :class:`SpectralGapError` (callers strip the
    center block first).
    """
    stable, unstable = [], []
    for nu in eigenvalues:
        re = complex(nu).real
        if abs(re) <= eps_spec:
            raise SpectralGapError(
                "eigenvalue %r has |Re| <= %g; not hyperbolic" % (nu, eps_spec)
            )
        (stable if re < 0 else unstable).append(abs(re))
    return SpectralGap(
        lam_min=min(stable) if stable else None,
        lam_max=max(stable) if stable else None,
        mu_min=min(unstable) if unstable else None,
        mu_max=max(unstable) if unstable else None,
    )


# ---------------------------------------------------------------------------
# symmetric eigenvalues by cyclic Jacobi sweeps
# ---------------------------------------------------------------------------


def symmetric_eigenvalues(S, tol: float = 1e-14, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps annihilate each off-diagonal entry in turn with a Givens rotation;
    off-diagonal mass decreases monotonically and the iteration converges
    quadratically.  Returns eigenvalues sorted ascending.
    """
    A = np.array(S, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if n == 0:
        return np.array([])
    if not np.allclose(A, A.T, atol=1e-12 * (1.0 + np.abs(A).max())):
        raise ValueError("matrix must be symmetric")
    scale = np.abs(A).max() or 1.0
    for _ in range(max_sweeps):
        off = math.sqrt(max(0.0, (A**2).sum() - (np.diag(A) ** 2).sum()))
        if off <= tol * scale * n:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= tol * scale:
                    continue
                # rotation angle: tan(2 theta) = 2 a_pq / (a_qq - a_pp)
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                t = math.copysign(1.0, theta) / (
                    abs(theta) + math.sqrt(theta * theta + 1.0)
                )
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                G = np.eye(n)
                G[p, p] = G[q, q] = c
                G[p, q] = s
                G[q, p] = -s
                A = G.T @ A @ G
    return np.sort(np.diag(A))


@dataclass(frozen=True)
class LogNormReport:
    mu_log: float
    m_l: float

    def to_obj(self) -> dict:
        return {"mu_log": self.mu_log, "m_l": self.m_l}


def log_norm(A) -> LogNormReport:
    """Euclidean logarithmic norm mu_log and its lower companion m_l."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        # empty block: sup over an empty set; make the report inert
        return LogNormReport(mu_log=-math.inf, m_l=math.inf)
    S = 0.5 * (A + A.T)
    eigs = symmetric_eigenvalues(S)
    return LogNormReport(mu_log=float(eigs[-1]), m_l=float(eigs[0]))


def mu_log(A) -> float:
    return log_norm(A).mu_log


def m_l(A) -> float:
    return log_norm(A).m_l


def duhamel_bound(alpha: float, z0_norm: float, C, t: float, quadrature_steps: int = 256) -> float:
    """Upper bound  e^{alpha t} |z0| + int_0^t e^{alpha (t-s)} C(s) ds.

    ``C`` may be a constant or a callable s -> C(s) >= 0.  The integral is a
    composite Simpson rule with ``quadrature_steps`` panels (the integrand is
    smooth, so this is far more accurate than the bound needs).
    """
    if t < 0:
        raise ValueError("duhamel_bound is a forward-time bound; t must be >= 0")
    cfun = C if callable(C) else (lambda s: C)
    head = math.exp(alpha * t) * z0_norm
    if t == 0:
        return head
    m = 2 * int(quadrature_steps)
    s = np.linspace(0.0, t, m + 1)
    vals = np.array([math.exp(alpha * (t - si)) * cfun(si) for si in s])
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    integral = (t / m) / 3.0 * float(w @ vals)
    return head + integral
