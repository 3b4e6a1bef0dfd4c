"""Indicial exponents of the origin singularity and boundary-condition policies.

Near r = 0 the reduced radial equation u'' = [l(l+1) - gamma]/r^2 u + ...
admits power solutions u ~ r^a whose exponents solve the quadratic
a(a-1) = l(l+1) - gamma.  Writing P = sqrt((l+1/2)^2 - gamma) the roots are
a = 1/2 +- P, and the value of P decides how much freedom is left in the
boundary condition at the origin:

* P >= 1          one admissible power; nothing to choose.
* 1/2 <= P < 1    both powers square integrable; a vanishing-u condition
                  still singles out the leading one.
* 0 <= P < 1/2    both powers vanish at the origin; even a Dirichlet-style
                  condition cannot distinguish them and an extension angle
                  is required.
* P imaginary     oscillatory collapse toward the origin ("fall to the
                  center"); no self-adjoint problem without a cutoff.

All interval boundaries are closed on the left of the higher regime:
P = 1 is unique-admissible, P = 1/2 is square-integrable-both.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

from .errors import ConfigError

__all__ = [
    "Regime",
    "IndicialResult",
    "AdmissibleSet",
    "Dirichlet",
    "SquareIntegrableOnly",
    "SAEMixing",
    "BoundaryPolicy",
    "indicial_exponents",
    "admissible_behaviors",
    "policy_name",
]


class Regime(enum.Enum):
    UNIQUE_ADMISSIBLE = "unique_admissible"
    SQUARE_INTEGRABLE_BOTH = "square_integrable_both"
    DIRICHLET_AMBIGUOUS = "dirichlet_ambiguous"
    FALL_TO_CENTER = "fall_to_center"

    @property
    def rank(self) -> int:
        """Position on the ladder from most to least constrained."""
        order = (Regime.UNIQUE_ADMISSIBLE, Regime.SQUARE_INTEGRABLE_BOTH,
                 Regime.DIRICHLET_AMBIGUOUS, Regime.FALL_TO_CENTER)
        return order.index(self)


@dataclass(frozen=True)
class Dirichlet:
    """Admit only exponents with Re(a) > 0, i.e. u(0) = 0 along that branch."""


@dataclass(frozen=True)
class SquareIntegrableOnly:
    """Admit every exponent with locally square-integrable u: 2 Re(a) > -1."""


@dataclass(frozen=True)
class SAEMixing:
    """Fix the two-exponent mixture by an extension angle chi at scale r_s.

    The near-origin form is u ~ r^(1/2) [cos(chi) (r/r_s)^P + sin(chi) (r/r_s)^(-P)];
    at the degenerate point P = 0 the second branch becomes r^(1/2) ln(r/r_s).
    """

    chi: float
    r_s: float

    def __post_init__(self):
        if not math.isfinite(self.chi):
            raise ConfigError("SAEMixing.chi must be finite")
        if not (math.isfinite(self.r_s) and self.r_s > 0.0):
            raise ConfigError("SAEMixing.r_s must be finite and > 0")


BoundaryPolicy = Dirichlet | SquareIntegrableOnly | SAEMixing


def policy_name(policy: BoundaryPolicy) -> str:
    if isinstance(policy, Dirichlet):
        return "dirichlet"
    if isinstance(policy, SquareIntegrableOnly):
        return "square_integrable_only"
    if isinstance(policy, SAEMixing):
        return "sae_mixing"
    raise ConfigError(f"unknown boundary policy {policy!r}")


@dataclass(frozen=True)
class IndicialResult:
    """Roots of the indicial equation a(a-1) = l(l+1) - gamma.

    ``p`` is real (imag == 0) when the discriminant (l+1/2)^2 - gamma is
    non-negative, otherwise purely imaginary.  ``exponents`` is always
    (1/2 + p, 1/2 - p), so the two entries sum to exactly 1.
    """

    l: int
    gamma: float
    discriminant: float
    p: complex
    exponents: tuple[complex, complex]
    regime: Regime

    @property
    def p_real(self) -> float:
        if self.p.imag != 0.0:
            raise ValueError("P is imaginary in the fall-to-center regime")
        return self.p.real

    @property
    def degenerate(self) -> bool:
        """True at the double root P = 0, where r^(1/2) ln r appears."""
        return self.p == 0


def indicial_exponents(l: int, gamma: float) -> IndicialResult:
    """Solve the indicial equation for angular momentum l and strength gamma.

    ``gamma`` is the dimensionless 2 m V0 of the inverse-square part of the
    potential (positive for attraction); ``gamma = 0`` reproduces the free
    exponents (l+1, -l) exactly.
    """
    if not isinstance(l, (int,)) or isinstance(l, bool):
        raise ConfigError(f"l must be a non-negative integer, got {l!r}")
    if l < 0:
        raise ConfigError(f"l must be >= 0, got {l}")
    gamma = float(gamma)
    if not math.isfinite(gamma):
        raise ConfigError("gamma must be finite")

    disc = (l + 0.5) ** 2 - gamma
    if disc >= 0.0:
        p = complex(math.sqrt(disc), 0.0)
    else:
        p = complex(0.0, math.sqrt(-disc))
    # The second root is taken as the exact complement of the first, so the
    # pair sums to 1.0 without rounding residue.
    a_plus = 0.5 + p
    exponents = (a_plus, 1.0 - a_plus)

    if disc < 0.0:
        regime = Regime.FALL_TO_CENTER
    elif p.real >= 1.0:
        regime = Regime.UNIQUE_ADMISSIBLE
    elif p.real >= 0.5:
        regime = Regime.SQUARE_INTEGRABLE_BOTH
    else:
        regime = Regime.DIRICHLET_AMBIGUOUS

    return IndicialResult(l=l, gamma=gamma, discriminant=disc, p=p,
                          exponents=exponents, regime=regime)


@dataclass(frozen=True)
class AdmissibleSet:
    """Exponents allowed at the origin under a policy.

    ``needs_extension_parameter`` is True when the policy alone does not
    single out one behaviour.  ``fall_to_center`` marks the dedicated
    no-power-solution answer for an imaginary P; ``degenerate`` marks the
    double root P = 0.
    """

    exponents: tuple[complex, ...]
    needs_extension_parameter: bool
    degenerate: bool = False
    fall_to_center: bool = False


def admissible_behaviors(result: IndicialResult, policy: BoundaryPolicy) -> AdmissibleSet:
    """Apply a boundary policy to an indicial result.

    For SAEMixing the regime must actually leave a choice to make;
    requesting an extension angle where the admissible behaviour is unique
    is an error.
    """
    fall = result.regime is Regime.FALL_TO_CENTER

    if isinstance(policy, SAEMixing):
        if result.regime is Regime.UNIQUE_ADMISSIBLE:
            raise ConfigError(
                "extension parameter meaningless: the admissible behaviour is "
                f"already unique at P = {result.p.real:g}")
        if fall:
            return AdmissibleSet((), True, fall_to_center=True)
        if result.degenerate:
            return AdmissibleSet((result.exponents[0],), False, degenerate=True)
        return AdmissibleSet(result.exponents, False)

    if isinstance(policy, (Dirichlet, SquareIntegrableOnly)):
        if fall:
            return AdmissibleSet((), True, fall_to_center=True)
        if isinstance(policy, Dirichlet):
            admitted = tuple(a for a in result.exponents if a.real > 0.0)
        else:
            admitted = tuple(a for a in result.exponents if 2.0 * a.real > -1.0)
        if result.degenerate:
            # Equal roots: one power plus an r^(1/2) ln r companion.
            return AdmissibleSet((result.exponents[0],), True, degenerate=True)
        return AdmissibleSet(admitted, needs_extension_parameter=len(admitted) == 2)

    raise ConfigError(f"unknown boundary policy {policy!r}")
