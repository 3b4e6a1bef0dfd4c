"""Radial potentials with a declared near-origin inverse-square strength.

A `Potential` carries the tail V(r) for r > 0 together with the declared
limit of r^2 V(r) at the origin.  The limit is part of the constructor
contract, never estimated numerically: classification of the origin
behaviour must not depend on floating-point probing of the tail.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError

__all__ = [
    "Potential",
    "PotentialClass",
    "PotentialClassKind",
    "classify",
    "evaluate",
    "make_builtin",
    "coulomb",
    "harmonic",
    "inverse_square",
    "finite_well",
    "coulomb_plus_inverse_square",
    "power_law",
]


@dataclass(frozen=True)
class Potential:
    """A radial potential V(r), defined for r > 0.

    Attributes
    ----------
    tail : callable
        Evaluates V(r); must accept floats and numpy arrays of r > 0.
    origin_strength : float
        Declared value of lim_{r->0} r^2 V(r) (energy * length^2).  Stored
        exactly as given.  Negative for an attractive -V0/r^2 core.
    strongly_singular : bool
        True when r^2 V(r) diverges at the origin; such potentials can be
        represented and classified but are rejected by the eigensolver.
    label : str
        Human-readable name used in reports.
    """

    tail: Callable = field(repr=False)
    origin_strength: float = 0.0
    strongly_singular: bool = False
    label: str = "custom"

    def __post_init__(self):
        if not callable(self.tail):
            raise ConfigError("Potential.tail must be callable")
        if not math.isfinite(self.origin_strength):
            raise ConfigError("Potential.origin_strength must be finite")

    def __call__(self, r):
        return evaluate(self, r)

    def __add__(self, other: "Potential") -> "Potential":
        if not isinstance(other, Potential):
            return NotImplemented
        a, b = self.tail, other.tail
        return Potential(
            tail=lambda r: a(r) + b(r),
            origin_strength=self.origin_strength + other.origin_strength,
            strongly_singular=self.strongly_singular or other.strongly_singular,
            label=f"{self.label}+{other.label}",
        )


class PotentialClassKind(enum.Enum):
    REGULAR = "regular"
    TRANSITIVE_SINGULAR = "transitive_singular"
    STRONGLY_SINGULAR = "strongly_singular"


@dataclass(frozen=True)
class PotentialClass:
    """Origin classification of a potential.

    ``TRANSITIVE_SINGULAR`` marks the borderline inverse-square case
    V(r) -> -v0/r^2 near the origin; ``v0 > 0`` is attraction, ``v0 < 0``
    repulsion.  ``v0`` is None for the other two kinds.
    """

    kind: PotentialClassKind
    v0: float | None = None

    @property
    def solvable(self) -> bool:
        """Whether the eigensolver accepts potentials of this class."""
        return self.kind is not PotentialClassKind.STRONGLY_SINGULAR


def classify(p: Potential) -> PotentialClass:
    """Classify the near-origin behaviour from the declared strength."""
    if p.strongly_singular:
        return PotentialClass(PotentialClassKind.STRONGLY_SINGULAR)
    if p.origin_strength == 0.0:
        return PotentialClass(PotentialClassKind.REGULAR)
    return PotentialClass(PotentialClassKind.TRANSITIVE_SINGULAR, v0=-p.origin_strength)


def evaluate(p: Potential, r):
    """Evaluate V(r) at a scalar or array of radii, all strictly positive."""
    arr = np.asarray(r, dtype=float)
    if arr.size == 0:
        raise ConfigError("evaluate: empty radius array")
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise ConfigError("evaluate: radii must be finite and > 0")
    out = np.asarray(p.tail(arr), dtype=float)
    if np.isscalar(r) or np.ndim(r) == 0:
        return float(out)
    return out


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value!r}")
    return value


def coulomb(Z: float) -> Potential:
    """V(r) = -Z/r."""
    Z = _require_finite("Z", Z)
    return Potential(lambda r: -Z / np.asarray(r, dtype=float),
                     origin_strength=0.0, label=f"coulomb(Z={Z:g})")


def harmonic(omega: float) -> Potential:
    """Isotropic oscillator V(r) = omega^2 r^2 / 2.

    With unit mass this gives the ladder E = (2 n_r + l + 3/2) omega; for
    mass m != 1 the effective frequency becomes omega/sqrt(m).
    """
    omega = _require_finite("omega", omega)
    if omega <= 0.0:
        raise ConfigError(f"omega must be > 0, got {omega!r}")
    return Potential(lambda r: 0.5 * omega**2 * np.square(np.asarray(r, dtype=float)),
                     origin_strength=0.0, label=f"harmonic(omega={omega:g})")


def inverse_square(v0: float) -> Potential:
    """Pure inverse-square V(r) = -v0/r^2; v0 > 0 attracts, v0 < 0 repels."""
    v0 = _require_finite("v0", v0)
    return Potential(lambda r: -v0 / np.square(np.asarray(r, dtype=float)),
                     origin_strength=-v0, label=f"inverse_square(v0={v0:g})")


def finite_well(depth: float, radius: float) -> Potential:
    """Spherical well: -depth inside ``radius``, zero outside.

    At r exactly equal to ``radius`` the midpoint value -depth/2 is
    returned, which keeps node-sampled quadrature of the step second
    order when a grid node lands on the edge.
    """
    depth = _require_finite("depth", depth)
    radius = _require_finite("radius", radius)
    if radius <= 0.0:
        raise ConfigError(f"radius must be > 0, got {radius!r}")

    def tail(r):
        r = np.asarray(r, dtype=float)
        return np.where(r < radius, -depth, np.where(r == radius, -0.5 * depth, 0.0))

    return Potential(tail, origin_strength=0.0,
                     label=f"finite_well(depth={depth:g}, radius={radius:g})")


def coulomb_plus_inverse_square(Z: float, v0: float) -> Potential:
    """V(r) = -Z/r - v0/r^2."""
    Z = _require_finite("Z", Z)
    v0 = _require_finite("v0", v0)

    def tail(r):
        r = np.asarray(r, dtype=float)
        return -Z / r - v0 / np.square(r)

    return Potential(tail, origin_strength=-v0,
                     label=f"coulomb(Z={Z:g})+inverse_square(v0={v0:g})")


def power_law(coefficient: float, exponent: float) -> Potential:
    """V(r) = coefficient * r^exponent, classified from the exponent.

    Exponents above -2 leave the origin regular, exactly -2 contributes
    its coefficient as the inverse-square strength, and anything below -2
    is declared strongly singular (and hence rejected by the solver).
    """
    coefficient = _require_finite("coefficient", coefficient)
    exponent = _require_finite("exponent", exponent)
    return Potential(
        lambda r: coefficient * np.asarray(r, dtype=float) ** exponent,
        origin_strength=coefficient if exponent == -2.0 else 0.0,
        strongly_singular=exponent < -2.0,
        label=f"power_law({coefficient:g}*r^{exponent:g})")


_BUILTINS = {
    "coulomb": coulomb,
    "harmonic": harmonic,
    "inverse_square": inverse_square,
    "finite_well": finite_well,
    "coulomb_plus_inverse_square": coulomb_plus_inverse_square,
    "power_law": power_law,
}


def make_builtin(kind: str, **params) -> Potential:
    """Construct a builtin potential by kind name.

    Known kinds: coulomb(Z), harmonic(omega), inverse_square(v0),
    finite_well(depth, radius), coulomb_plus_inverse_square(Z, v0),
    power_law(coefficient, exponent).
    """
    try:
        ctor = _BUILTINS[kind]
    except KeyError:
        known = ", ".join(sorted(_BUILTINS))
        raise ConfigError(f"unknown potential kind {kind!r}; known kinds: {known}") from None
    try:
        return ctor(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for potential kind {kind!r}: {exc}") from None
