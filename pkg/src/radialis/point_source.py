"""Surface-flux diagnostic for a hidden point source at the origin.

Writing the full solution as psi = u(r)/r, the flux of grad(psi) through a
sphere of radius a is

    s(a) = 4 pi (a u'(a) - u(a))  ->  -4 pi u(0)   as a -> 0.

A solution whose reduced wave function does not vanish at the origin
therefore behaves as if a delta-function source of strength -4 pi u(0) had
been silently added to the three-dimensional problem.  This module measures
s(a) on a shrinking sequence of probe radii, extrapolates the a -> 0 limit,
and flags states that carry such a source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, NumericalError

__all__ = [
    "ResidualReport",
    "DEFAULT_PROBE_RADII",
    "DEFAULT_TOLERANCE",
    "surface_flux",
    "point_source_strength",
    "check_compatibility",
    "audit_samples",
    "audit_eigenstate",
]

#: Geometric probe ladder 0.1 * 2^-k, k = 0..12.
DEFAULT_PROBE_RADII = tuple(0.1 * 2.0 ** -k for k in range(13))
DEFAULT_TOLERANCE = 1e-6

_FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class ResidualReport:
    """Flux measurements and their extrapolated origin limit.

    ``compatible`` is True exactly when the extrapolated strength is finite
    and smaller in magnitude than the recorded tolerance.  A diverging flux
    sequence reports ``extrapolated_strength = +-inf`` and is never
    compatible.  ``fit_exponent`` is the power q of the fitted
    s0 + c a^q decay (nan when the fit was unnecessary or impossible).
    """

    radii: tuple[float, ...]
    flux_values: tuple[float, ...]
    extrapolated_strength: float
    compatible: bool
    tolerance: float
    diverged: bool
    fit_exponent: float

    def __post_init__(self):
        finite = math.isfinite(self.extrapolated_strength)
        expected = finite and abs(self.extrapolated_strength) < self.tolerance
        if self.compatible != expected:
            raise ValueError("inconsistent ResidualReport: compatible flag does not "
                             "match |strength| < tolerance")


def surface_flux(u_val: float, du_val: float, a: float) -> float:
    """Flux of grad(u/r) through the sphere of radius a: 4 pi (a u' - u)."""
    return _FOUR_PI * (a * du_val - u_val)


def _validate_radii(radii: Sequence[float]) -> np.ndarray:
    arr = np.asarray(radii, dtype=float)
    if arr.size < 3:
        raise ConfigError("at least 3 probe radii are required")
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise ConfigError("probe radii must be finite and > 0")
    if np.any(np.diff(arr) >= 0.0):
        raise ConfigError("probe radii must be strictly decreasing")
    return arr


def _aitken_column(values: np.ndarray) -> np.ndarray:
    """One stage of free-exponent elimination over consecutive triples.

    For a geometric radius ladder, s = s0 + c a^q makes successive
    differences geometric as well, and s3 - d2^2/(d1 - d2) recovers s0
    without knowing q.
    """
    out = np.empty(values.size - 2)
    for k in range(values.size - 2):
        s1, s2, s3 = values[k], values[k + 1], values[k + 2]
        d1, d2 = s1 - s2, s2 - s3
        denom = d1 - d2
        scale = max(abs(s1), abs(s2), abs(s3), 1e-300)
        if abs(denom) < 1e-14 * scale or abs(d2) < 1e-14 * scale:
            out[k] = s3
        else:
            out[k] = s3 - d2 * d2 / denom
    return out


def _extrapolate(flux: np.ndarray) -> tuple[float, bool, float]:
    """Return (limit, diverged, fit_exponent) for flux on decreasing radii."""
    s1, s2, s3 = flux[-3], flux[-2], flux[-1]
    mags = (abs(s1), abs(s2), abs(s3))
    scale = max(*mags, 1e-300)
    d1, d2 = s1 - s2, s2 - s3

    # Fast growth over the last three probes is divergence outright.
    if mags[0] < mags[1] < mags[2] and mags[2] > 2.0 * mags[0]:
        return math.copysign(math.inf, s3), True, float("nan")

    if abs(d1) < 1e-12 * scale and abs(d2) < 1e-12 * scale:
        return float(s3), False, float("nan")       # already flat

    q = float("nan")
    if d2 != 0.0:
        ratio = d1 / d2
        if ratio > 0.0:
            q = math.log2(ratio)
            # q <= 0 means the fitted power never decays: no finite limit.
            if q <= 0.0 and abs(d2) > 1e-11 * scale:
                return math.copysign(math.inf, s3), True, q

    # Iterated elimination; a second stage strips the subleading power,
    # which matters when the probes cannot reach very small radii.
    column = flux.astype(float)
    best = float(column[-1])
    prev_step = math.inf
    for _ in range(2):
        if column.size < 3:
            break
        nxt = _aitken_column(column)
        step = abs(nxt[-1] - best)
        if not math.isfinite(nxt[-1]) or step > 4.0 * prev_step:
            break                                   # noise amplification guard
        best, prev_step = float(nxt[-1]), step
        column = nxt
    return best, False, q


def point_source_strength(u: Callable[[float], float],
                          du: Callable[[float], float],
                          radii: Sequence[float] = DEFAULT_PROBE_RADII,
                          tol: float = DEFAULT_TOLERANCE) -> ResidualReport:
    """Measure the origin point-source strength of u via shrinking flux spheres.

    Parameters
    ----------
    u, du : callables
        The reduced wave function and its derivative, evaluable at every
        probe radius.  The flux formula itself is exact; only the a -> 0
        extrapolation is numerical.
    radii : sequence of float
        Strictly decreasing probe radii, at least three, ideally a
        geometric ladder (the default halves thirteen times from 0.1).
    """
    arr = _validate_radii(radii)
    uv = np.array([float(u(a)) for a in arr])
    duv = np.array([float(du(a)) for a in arr])
    if not (np.all(np.isfinite(uv)) and np.all(np.isfinite(duv))):
        bad = int(np.flatnonzero(~(np.isfinite(uv) & np.isfinite(duv)))[0])
        raise NumericalError(f"u or u' non-finite at probe radius {arr[bad]:.6g}")
    flux = _FOUR_PI * (arr * duv - uv)
    strength, diverged, q = _extrapolate(flux)
    compatible = math.isfinite(strength) and abs(strength) < tol
    return ResidualReport(radii=tuple(arr), flux_values=tuple(flux),
                          extrapolated_strength=strength, compatible=compatible,
                          tolerance=tol, diverged=diverged, fit_exponent=q)


def check_compatibility(u, du, radii: Sequence[float] = DEFAULT_PROBE_RADII,
                        tol: float = DEFAULT_TOLERANCE) -> bool:
    """True when the extrapolated strength vanishes within tol."""
    return point_source_strength(u, du, radii, tol).compatible


def audit_samples(r: np.ndarray, u: np.ndarray,
                  probe_radii: Sequence[float] | None = None,
                  tol: float = DEFAULT_TOLERANCE) -> ResidualReport:
    """Audit a sampled u(r) by cubic interpolation.

    Default probes take the geometric ladder clipped to the resolved part
    of the grid (no lower than the second node).  The sampling must
    actually resolve the probe region: at least ten nodes below ten times
    the smallest probe, and probes spanning at least a factor of four.
    """
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    if r.ndim != 1 or r.shape != u.shape or r.size < 8:
        raise ConfigError("audit_samples needs matching 1-d arrays of >= 8 samples")
    if not np.all(np.isfinite(u)):
        raise NumericalError("u non-finite in sampled state")

    r_floor = r[1]
    if probe_radii is None:
        top = min(DEFAULT_PROBE_RADII[0], 0.5 * r[-1])
        probes = [a for a in DEFAULT_PROBE_RADII if r_floor <= a <= top]
        if len(probes) > 1 and probes[0] < top / 1.5:
            probes.insert(0, min(2.0 * probes[0], 0.9 * r[-1]))
    else:
        probes = [float(a) for a in probe_radii]
    probes = sorted(set(probes), reverse=True)

    if len(probes) < 3 or probes[0] < 4.0 * probes[-1]:
        raise NumericalError(
            "grid too coarse near origin for a flux audit: minimum resolved radius "
            f"is {r_floor:.6g}")
    below = int(np.searchsorted(r, 10.0 * probes[-1]))
    if below < 10:
        raise NumericalError(
            f"grid too coarse near origin: only {below} nodes below "
            f"10 x smallest probe ({10.0 * probes[-1]:.6g}); minimum resolved "
            f"radius is {r_floor:.6g}")

    spline = CubicSpline(r, u)
    dspline = spline.derivative()
    return point_source_strength(spline, dspline, probes, tol)


def audit_eigenstate(state, probe_radii: Sequence[float] | None = None,
                     tol: float = DEFAULT_TOLERANCE) -> ResidualReport:
    """Audit a solved eigenstate for a hidden origin source."""
    traj = state.u
    return audit_samples(traj.grid.nodes, traj.u, probe_radii, tol)
