"""Smooth plateau bumps used to compactify nonlinearities.

Two profiles:

* ``"radial"`` -- eta(z) = plateau(||z|| / sigma): identically 1 for
  ||z|| <= sigma*r0, identically 0 for ||z|| >= sigma*r1.
* ``"saddle_product"`` -- product of *even* one-dimensional plateaus over the
  saddle coordinates only:  eta(z) = prod_i alpha(u_i / sigma).  This is the
  sign-symmetric choice: even factors make eta invariant under every sign
  pattern, and independence of the center coordinates keeps the center action
  free.  Its support is the box {max_i |u_i| <= sigma*r1} (unbounded in the
  center directions).

The 1-D plateau is the classical C-infinity construction from
s(u) = exp(-1/u):  ramp(u) = s(u) / (s(u) + s(1-u))  rises smoothly 0 -> 1 on
[0, 1], and  alpha(t) = ramp((r1 - |t|)/(r1 - r0))  is even, 1 on |t| <= r0,
0 on |t| >= r1.  First derivatives are provided analytically (they are needed
for Jacobians of compactified fields and for Hamiltonian gradients).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["BumpSpec", "plateau", "plateau_d"]


def _s(u: float) -> float:
    return math.exp(-1.0 / u) if u > 0.0 else 0.0


def _s_d(u: float) -> float:
    return _s(u) / (u * u) if u > 0.0 else 0.0


def _ramp(u: float) -> float:
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    a, b = _s(u), _s(1.0 - u)
    return a / (a + b)


def _ramp_d(u: float) -> float:
    if u <= 0.0 or u >= 1.0:
        return 0.0
    a, b = _s(u), _s(1.0 - u)
    da, db = _s_d(u), -_s_d(1.0 - u)
    denom = (a + b) ** 2
    return (da * b - a * db) / denom


def plateau(t: float, r0: float, r1: float) -> float:
    """Even C-infinity plateau: 1 on |t| <= r0, 0 on |t| >= r1."""
    at = abs(t)
    if at <= r0:
        return 1.0
    if at >= r1:
        return 0.0
    return _ramp((r1 - at) / (r1 - r0))


def plateau_d(t: float, r0: float, r1: float) -> float:
    at = abs(t)
    if at <= r0 or at >= r1:
        return 0.0
    sign = 1.0 if t >= 0 else -1.0
    return sign * _ramp_d((r1 - at) / (r1 - r0)) * (-1.0 / (r1 - r0))


@dataclass(frozen=True)
class BumpSpec:
    """Plateau radii (in units of sigma), the scale sigma and the profile id."""

    r0: float
    r1: float
    sigma: float = 1.0
    profile: str = "radial"

    def __post_init__(self):
        if not (0.0 < self.r0 < self.r1):
            raise ValueError("need 0 < r0 < r1")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if self.profile not in ("radial", "saddle_product"):
            raise ValueError("unknown bump profile %r" % self.profile)

    # -- evaluation ---------------------------------------------------------

    def value(self, z, saddle_idx=None) -> float:
        """eta at the (real) point z.  ``saddle_idx`` selects the coordinates
        the product profile acts on (ignored by the radial profile)."""
        z = np.asarray(z, dtype=float)
        if self.profile == "radial":
            return plateau(float(np.linalg.norm(z)) / self.sigma, self.r0, self.r1)
        idx = range(len(z)) if saddle_idx is None else saddle_idx
        out = 1.0
        for i in idx:
            out *= plateau(z[i] / self.sigma, self.r0, self.r1)
            if out == 0.0:
                break
        return out

    def gradient(self, z, saddle_idx=None) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        g = np.zeros_like(z)
        if self.profile == "radial":
            r = float(np.linalg.norm(z))
            if r == 0.0:
                return g
            d = plateau_d(r / self.sigma, self.r0, self.r1) / self.sigma
            if d != 0.0:
                g = d * z / r
            return g
        idx = list(range(len(z))) if saddle_idx is None else list(saddle_idx)
        vals = {i: plateau(z[i] / self.sigma, self.r0, self.r1) for i in idx}
        for i in idx:
            d = plateau_d(z[i] / self.sigma, self.r0, self.r1) / self.sigma
            if d == 0.0:
                continue
            prod = d
            for j in idx:
                if j != i:
                    prod *= vals[j]
                    if prod == 0.0:
                        break
            g[i] = prod
        return g

    def support_contains(self, z, saddle_idx=None) -> bool:
        """Whether z is inside (the closure of) supp eta."""
        z = np.asarray(z, dtype=float)
        if self.profile == "radial":
            return float(np.linalg.norm(z)) <= self.sigma * self.r1
        idx = range(len(z)) if saddle_idx is None else saddle_idx
        return all(abs(z[i]) <= self.sigma * self.r1 for i in idx)

    def to_obj(self) -> dict:
        return {
            "r0": self.r0,
            "r1": self.r1,
            "sigma": self.sigma,
            "profile": self.profile,
        }

    @classmethod
    def from_obj(cls, obj) -> "BumpSpec":
        return cls(
            r0=float(obj["r0"]),
            r1=float(obj["r1"]),
            sigma=float(obj.get("sigma", 1.0)),
            profile=obj.get("profile", "radial"),
        )
