"""Two-sided shooting eigensolver for the reduced radial equation.

The bound-state problem u'' = f(r) u, f = l(l+1)/r^2 + 2m(V - E), is solved
by propagating outward from an origin seed and inward from an exponential
tail seed, and matching logarithmic derivatives at the outer classical
turning point.  The boundary-condition policy enters the computation in
exactly one place: the outward seed.  Everything downstream (node counts,
matching, normalization) is policy-blind, which is what makes competing
policies comparable on equal footing.

Eigenvalues are located in two phases: bisection on the outward node count
(which steps by one exactly at an eigenvalue of the truncated-domain
problem), then sign bisection of the mismatch W(E) inside the isolated
bracket.  W is the difference of inward and outward logarithmic
derivatives, oriented so that it increases through a bound state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import ConfigError, NumericalError, RegimeRefusal, StateNotFound
from .indicial import (BoundaryPolicy, IndicialResult, Regime, SAEMixing,
                       admissible_behaviors, indicial_exponents, policy_name)
from .numerics import (GridSpacing, RadialGrid, Trajectory, _numerov_kernel,
                       count_sign_changes)
from .potentials import Potential, PotentialClassKind, classify

__all__ = [
    "SolveTolerances",
    "SolveRequest",
    "Eigenstate",
    "effective_f",
    "origin_seed",
    "request_indicial",
    "mismatch",
    "solve_state",
    "spectrum",
    "energy_ratios",
    "near_origin_exponent",
]

_NODE_FLOOR = 1e-300

# Non-integer indicial exponents have unbounded high derivatives at the
# origin, so propagation starts this many steps out (the Frobenius series
# covers the gap).  The power-law truncation error falls off steeply with
# the start index until series truncation takes over; 48 sits near the
# crossover for step sizes around 1e-3.
_SINGULAR_START_FLOOR = 48


@dataclass(frozen=True)
class SolveTolerances:
    energy_rel: float = 1e-10
    max_bisection_iters: int = 200

    def __post_init__(self):
        if not (math.isfinite(self.energy_rel) and self.energy_rel > 0.0):
            raise ConfigError("energy_rel must be finite and > 0")
        if self.max_bisection_iters < 8:
            raise ConfigError("max_bisection_iters must be >= 8")


@dataclass(frozen=True)
class SolveRequest:
    """Everything needed to pose one bound-state search.

    ``energy_window`` must lie strictly below the continuum edge, i.e.
    below 0 for potentials that decay at large r and below V(r_max) for
    confining ones.  ``cutoff_radius`` truncates the potential to its
    value at the cutoff for r below it; this is how a fall-to-center
    problem is regularized into a solvable one.
    """

    potential: Potential
    mass: float
    l: int
    policy: BoundaryPolicy
    grid: RadialGrid
    energy_window: tuple[float, float]
    match_radius: float | None = None
    cutoff_radius: float | None = None
    tolerances: SolveTolerances = field(default_factory=SolveTolerances)

    def __post_init__(self):
        if not (math.isfinite(self.mass) and self.mass > 0.0):
            raise ConfigError(f"mass must be finite and > 0, got {self.mass!r}")
        if not isinstance(self.l, int) or isinstance(self.l, bool) or self.l < 0:
            raise ConfigError(f"l must be a non-negative integer, got {self.l!r}")
        if self.grid.spacing is not GridSpacing.LINEAR:
            raise ConfigError("the eigensolver requires a linear grid")
        if not classify(self.potential).solvable:
            raise ConfigError("strongly singular potentials are outside the "
                              "eigensolver's scope")
        lo, hi = self.energy_window
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ConfigError(f"energy window must satisfy E_lo < E_hi, got {self.energy_window!r}")
        ceiling = _continuum_ceiling(self)
        if hi >= ceiling:
            raise ConfigError(
                f"energy window top {hi:g} is not below the continuum edge {ceiling:g}")
        if self.cutoff_radius is not None:
            rc = self.cutoff_radius
            if not (math.isfinite(rc) and rc > 0.0):
                raise ConfigError(f"cutoff_radius must be finite and > 0, got {rc!r}")
        if self.match_radius is not None:
            if not (self.grid.r_min < self.match_radius < self.grid.r_max):
                raise ConfigError("match_radius must lie inside the grid")
        # An extension angle only makes sense where a choice remains.
        ind = _indicial_for(self)
        if isinstance(self.policy, SAEMixing) and ind.regime is Regime.UNIQUE_ADMISSIBLE:
            raise ConfigError(
                "extension parameter meaningless: the admissible behaviour is "
                f"already unique at P = {ind.p.real:g}")


def _eval_potential(pot: Potential, r: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(pot.tail(r), dtype=float)
        if vals.shape != r.shape:
            raise ValueError
    except Exception:
        vals = np.array([float(pot.tail(x)) for x in r])
    if not np.all(np.isfinite(vals)):
        i = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise NumericalError(f"potential non-finite at node {i} (r = {r[i]:.6g})")
    return vals


def _truncated(pot: Potential, r_c: float) -> Potential:
    tail = pot.tail
    return Potential(
        tail=lambda r: tail(np.maximum(np.asarray(r, dtype=float), r_c)),
        origin_strength=0.0,
        label=f"{pot.label}|truncated@{r_c:g}")


def _effective_potential(req: SolveRequest) -> Potential:
    if req.cutoff_radius is not None:
        return _truncated(req.potential, req.cutoff_radius)
    return req.potential


def _indicial_for(req: SolveRequest) -> IndicialResult:
    pot = _effective_potential(req)
    cls = classify(pot)
    v0 = cls.v0 if cls.kind is PotentialClassKind.TRANSITIVE_SINGULAR else 0.0
    return indicial_exponents(req.l, 2.0 * req.mass * v0)


def request_indicial(req: SolveRequest) -> IndicialResult:
    """Indicial record of the request's effective potential.

    A cutoff radius regularizes the origin, so a truncated request reports
    gamma = 0 regardless of the original potential's strength.
    """
    return _indicial_for(req)


def _continuum_ceiling(req: SolveRequest) -> float:
    v_end = float(np.asarray(req.potential.tail(np.array([req.grid.r_max])))[0])
    return max(0.0, v_end)


def effective_f(req: SolveRequest, E: float):
    """The Numerov coefficient f(r) = l(l+1)/r^2 + 2m(V(r) - E) as a callable."""
    pot = _effective_potential(req)
    ll1 = float(req.l * (req.l + 1))
    two_m = 2.0 * req.mass

    def f(r):
        r_arr = np.asarray(r, dtype=float)
        out = ll1 / np.square(r_arr) + two_m * (np.asarray(pot.tail(r_arr), dtype=float) - E)
        return float(out) if np.ndim(r) == 0 else out

    return f


# ---------------------------------------------------------------------------
# origin seeds


@dataclass(frozen=True)
class _SeedForm:
    """Near-origin expansion: either a sum of power branches or the
    degenerate log form r^(1/2) (cos chi + sin chi ln(r/r_s))."""

    branches: tuple[tuple[float, float], ...]    # (coefficient, exponent)
    log_form: tuple[float, float] | None = None  # (chi, r_s) when P = 0

    @property
    def dominant_exponent(self) -> float:
        if self.log_form is not None:
            return 0.5
        return min(a for c, a in self.branches if c != 0.0)


def _seed_form(req: SolveRequest, ind: IndicialResult) -> _SeedForm:
    adm = admissible_behaviors(ind, req.policy)
    if adm.fall_to_center:
        raise RegimeRefusal(
            "fall to center: spectrum unbounded below; supply a short-range cutoff")
    if isinstance(req.policy, SAEMixing):
        chi, r_s = req.policy.chi, req.policy.r_s
        if adm.degenerate:
            return _SeedForm(branches=(), log_form=(chi, r_s))
        p = ind.p_real
        a_plus, a_minus = 0.5 + p, 0.5 - p
        return _SeedForm(branches=((math.cos(chi) * r_s ** -p, a_plus),
                                   (math.sin(chi) * r_s ** p, a_minus)))
    if adm.needs_extension_parameter or len(adm.exponents) == 0:
        raise ConfigError(
            f"ambiguous near-origin behaviour under {policy_name(req.policy)} "
            f"(regime {ind.regime.value}): ambiguity must be resolved explicitly "
            "with an SAEMixing policy")
    return _SeedForm(branches=((1.0, adm.exponents[0].real),))


def origin_seed(req: SolveRequest) -> tuple[float, float]:
    """Leading-order seed values of u at the first two grid nodes.

    This is where the boundary policy acts.  Raises RegimeRefusal in the
    fall-to-center regime (no cutoff) and ConfigError when the policy
    leaves the near-origin behaviour ambiguous.
    """
    form = _seed_form(req, _indicial_for(req))
    r = req.grid.nodes[:2]
    vals = _seed_values(form, r, b_coef=0.0, c_coef=0.0)
    return float(vals[0]), float(vals[1])


def _seed_values(form: _SeedForm, r: np.ndarray, b_coef: float, c_coef: float) -> np.ndarray:
    """Evaluate the seed with Frobenius corrections through sixth order.

    For u'' = (A/r^2 + B/r + C) u and a branch r^a with a(a-1) = A the
    series u = r^a sum_k c_k r^k obeys c_k = (B c_{k-1} + C c_{k-2}) /
    (k (2a + k - 1)); the series is truncated early at a resonant
    denominator (where the companion solution carries a log term).
    """
    r = np.asarray(r, dtype=float)
    if form.log_form is not None:
        chi, r_s = form.log_form
        return np.sqrt(r) * (math.cos(chi) + math.sin(chi) * np.log(r / r_s))
    out = np.zeros_like(r)
    for coef, a in form.branches:
        if coef == 0.0:
            continue
        series = np.ones_like(r)
        ck_2, ck_1 = 0.0, 1.0
        rpow = np.ones_like(r)
        for k in range(1, 7):
            den = k * (2.0 * a + k - 1.0)
            if abs(den) < 1e-6:
                break
            ck = (b_coef * ck_1 + c_coef * ck_2) / den
            rpow = rpow * r
            series = series + ck * rpow
            ck_2, ck_1 = ck_1, ck
        out = out + coef * r ** a * series
    return out


# ---------------------------------------------------------------------------
# solver context and propagation


class _Context:
    """Per-request precomputation shared across energy evaluations."""

    def __init__(self, req: SolveRequest):
        self.req = req
        self.pot = _effective_potential(req)
        self.ind = _indicial_for(req)
        self.form = _seed_form(req, self.ind)          # refuses fall-to-center
        grid = req.grid
        self.nodes = grid.nodes
        self.h = grid.step
        self.n = grid.n_points
        v = _eval_potential(self.pot, self.nodes)
        self.v_nodes = v
        ll1 = float(req.l * (req.l + 1))
        self.f_static = ll1 / np.square(self.nodes) + 2.0 * req.mass * v
        self.two_m = 2.0 * req.mass
        gamma = self.ind.gamma
        self.a_coef = ll1 - gamma
        self.i0 = self._start_index()
        # 1/r and constant parts of f near the origin, used by the seed
        # series.  Fitting r (f - A/r^2) at two radii eliminates both.
        r_start = self.nodes[self.i0]
        ra, rb = 0.35 * r_start, 0.7 * r_start
        ga = self._g_of(ra)
        gb = self._g_of(rb)
        self.b_base = (ga * rb - gb * ra) / (rb - ra)
        self.c_base = (gb - ga) / (rb - ra)            # still missing -2mE

    def _g_of(self, r: float) -> float:
        v = float(np.asarray(self.pot.tail(np.array([r])))[0])
        ll1 = float(self.req.l * (self.req.l + 1))
        return r * (ll1 / r ** 2 + self.two_m * v - self.a_coef / r ** 2)

    def _start_index(self) -> int:
        # Begin propagation where the 1/r^2 term is resolved by the step:
        # |A| h^2 / (12 r^2) stays below ~0.02 from the start index on.
        a = abs(self.a_coef)
        base = 1 if a == 0.0 else int(math.ceil(2.1 * math.sqrt(a)))
        if self.ind.gamma != 0.0:
            base = max(base, _SINGULAR_START_FLOOR)
        i0 = max(1, base)
        if i0 + 12 > self.n // 2:
            raise ConfigError(
                f"grid too coarse for l={self.req.l}, gamma={self.ind.gamma:g}: "
                f"seeding would start at node {i0} of {self.n}")
        return i0

    # -- per-energy pieces --------------------------------------------------

    def f_at(self, E: float) -> np.ndarray:
        return self.f_static - self.two_m * E

    def seed_head(self, E: float, upto: int) -> np.ndarray:
        c_coef = self.c_base - self.two_m * E
        return _seed_values(self.form, self.nodes[:upto], self.b_base, c_coef)

    def match_index(self, f: np.ndarray) -> int:
        if self.req.match_radius is not None:
            m = int(np.searchsorted(self.nodes, self.req.match_radius))
        else:
            allowed = np.flatnonzero(f < 0.0)
            m = int(allowed[-1]) if allowed.size else self.n // 2
        return min(max(m, self.i0 + 4), self.n - 5)

    def outward(self, E: float, f: np.ndarray, i_stop: int) -> tuple[np.ndarray, int]:
        """Propagate from the seed up to node i_stop; returns (u, node count)."""
        u = np.zeros(self.n)
        u[:self.i0 + 2] = self.seed_head(E, self.i0 + 2)
        scale, fail, ncross = _numerov_kernel(u, f, self.h, self.i0, i_stop)
        if fail >= 0:
            raise NumericalError(
                f"outward propagation failed at node {fail} (r = {self.nodes[fail]:.6g})")
        nodes = count_sign_changes(u[:self.i0 + 2]) + int(ncross)
        return u, nodes

    def node_count(self, E: float) -> int:
        f = self.f_at(E)
        _, nodes = self.outward(E, f, self.n - 1)
        return nodes

    def inward(self, E: float, f: np.ndarray, i_stop: int) -> np.ndarray:
        """Propagate from the far end down to node i_stop."""
        m = self.req.mass
        kap1 = math.sqrt(max(2.0 * m * (self.v_nodes[-1] - E), 1e-14))
        kap2 = math.sqrt(max(2.0 * m * (self.v_nodes[-2] - E), 1e-14))
        length = self.n - i_stop
        work = np.zeros(length)
        work[0] = 1.0
        work[1] = math.exp(0.5 * (kap1 + kap2) * self.h)
        f_rev = f[i_stop:][::-1].copy()
        _, fail, _ = _numerov_kernel(work, f_rev, self.h, 0, length - 1)
        if fail >= 0:
            idx = self.n - 1 - fail
            raise NumericalError(
                f"inward propagation failed at node {idx} (r = {self.nodes[idx]:.6g})")
        u = np.zeros(self.n)
        u[i_stop:] = work[::-1]
        return u

    def _log_derivative(self, u: np.ndarray, i: int) -> float:
        if abs(u[i]) < _NODE_FLOOR:
            raise NumericalError("node at matching point")
        du = (u[i - 2] - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]) / (12.0 * self.h)
        return du / u[i]

    def evaluate(self, E: float) -> "_EnergyEval":
        """Outward/inward trajectories and the mismatch at one energy."""
        f = self.f_at(E)
        m0 = self.match_index(f)
        last_err: Exception | None = None
        for shift in range(6):
            m = m0 + shift
            if m > self.n - 5:
                break
            u_out, _ = self.outward(E, f, m + 3)
            u_in = self.inward(E, f, max(self.i0, m - 4))
            try:
                ld_out = self._log_derivative(u_out, m)
                ld_in = self._log_derivative(u_in, m)
            except NumericalError as exc:
                last_err = exc
                continue
            return _EnergyEval(E=E, w=ld_in - ld_out, match=m, u_out=u_out, u_in=u_in)
        raise NumericalError(
            f"node at matching point persists after 5 shifts near r = "
            f"{self.nodes[m0]:.6g}") from last_err


@dataclass
class _EnergyEval:
    E: float
    w: float
    match: int
    u_out: np.ndarray
    u_in: np.ndarray


def mismatch(req: SolveRequest, E: float) -> float:
    """Logarithmic-derivative mismatch W(E) at the match radius.

    W is zero at a bound state and increases through it; |W| is the
    physical mismatch magnitude.  E must lie in the request's window.
    """
    lo, hi = req.energy_window
    if not lo <= E <= hi:
        raise ConfigError(f"E = {E:g} outside the energy window [{lo:g}, {hi:g}]")
    return _Context(req).evaluate(E).w


# ---------------------------------------------------------------------------
# eigenvalue search


@dataclass(frozen=True)
class Eigenstate:
    """One normalized bound state.

    ``u`` is the merged outward/inward trajectory (direction "merged"),
    normalized to unit ∫u^2 dr over the grid; ``node_count`` equals the
    spectral index n_r.  ``energy_resolution`` is the final bisection
    bracket width.
    """

    energy: float
    node_count: int
    u: Trajectory
    l: int
    mass: float
    policy: BoundaryPolicy
    indicial: IndicialResult
    seed_exponent: float
    norm_check: float
    match_radius: float
    potential_label: str
    energy_resolution: float

    @property
    def grid(self) -> RadialGrid:
        return self.u.grid


def _mid(a: float, b: float) -> float:
    # Windows spanning many decades (energy towers) bisect far faster on a
    # geometric midpoint; fall back to arithmetic near sign changes.
    if a < 0.0 and b < 0.0 and a / b > 100.0:
        return -math.sqrt(a * b)
    return 0.5 * (a + b)


def _solve_in_context(ctx: _Context, n_r: int) -> Eigenstate:
    if not isinstance(n_r, int) or isinstance(n_r, bool) or n_r < 0:
        raise ConfigError(f"n_r must be a non-negative integer, got {n_r!r}")
    req = ctx.req
    lo, hi = req.energy_window
    rel = req.tolerances.energy_rel
    budget = req.tolerances.max_bisection_iters
    used = 0

    g_lo = ctx.node_count(lo)
    if g_lo > n_r:
        raise StateNotFound(
            f"no state with n_r = {n_r} in window: the window bottom already has "
            f"{g_lo} nodes")
    g_hi = ctx.node_count(hi)
    if g_hi <= n_r:
        raise StateNotFound(
            f"no state with n_r = {n_r} in window: only {g_hi} node(s) appear by "
            "the window top")

    # Phase 1: isolate the node-count step n_r -> n_r + 1.
    a, b, ga, gb = lo, hi, g_lo, g_hi
    while used < budget:
        tight = (b - a) <= 0.02 * max(abs(a), abs(b))
        if ga == n_r and gb == n_r + 1 and tight:
            break
        if (b - a) <= rel * max(abs(a), abs(b)):
            break
        mid = _mid(a, b)
        gm = ctx.node_count(mid)
        used += 1
        if gm <= n_r:
            a, ga = mid, gm
        else:
            b, gb = mid, gm

    # Phase 2: sign bisection of W inside the bracket.
    try:
        wa = ctx.evaluate(a).w
        wb = ctx.evaluate(b).w
        have_signs = wa * wb < 0.0
    except NumericalError:
        have_signs = False
    if have_signs:
        while (b - a) > rel * max(abs(a), abs(b)) and used < budget:
            mid = 0.5 * (a + b)
            wm = ctx.evaluate(mid).w
            used += 1
            if wm == 0.0:
                a = b = mid
                break
            if (wm < 0.0) == (wa < 0.0):
                a = mid
            else:
                b = mid
    else:
        # Degenerate bracket (e.g. node lands on the match radius at an
        # endpoint): refine on the node count alone.
        while (b - a) > rel * max(abs(a), abs(b)) and used < budget:
            mid = 0.5 * (a + b)
            used += 1
            if ctx.node_count(mid) <= n_r:
                a = mid
            else:
                b = mid
    if (b - a) > 4.0 * rel * max(abs(a), abs(b), 1e-300):
        raise NumericalError(
            f"bisection exhausted {budget} iterations without reaching the "
            f"energy tolerance (bracket width {b - a:g})")

    energy = 0.5 * (a + b)
    return _assemble(ctx, energy, n_r, b - a)


def _assemble(ctx: _Context, energy: float, n_r: int, resolution: float) -> Eigenstate:
    req = ctx.req
    ev = ctx.evaluate(energy)
    m = ev.match
    if abs(ev.u_in[m]) < _NODE_FLOOR:
        raise NumericalError("vanishing inward solution at the match radius")
    scale = ev.u_out[m] / ev.u_in[m]
    u = np.empty(ctx.n)
    u[:m + 1] = ev.u_out[:m + 1]
    u[m + 1:] = ev.u_in[m + 1:] * scale
    if u[ctx.i0 + 1] < 0.0:
        u = -u
    count = count_sign_changes(u)
    if count != n_r:
        raise NumericalError(
            f"assembled state has {count} nodes, expected {n_r}; the grid or "
            "window does not resolve this state")
    norm2 = float(simpson(u * u, x=ctx.nodes))
    if not (math.isfinite(norm2) and norm2 > 0.0):
        raise NumericalError("non-normalizable assembled state")
    u /= math.sqrt(norm2)
    traj = Trajectory(grid=req.grid, u=u, direction="merged")
    return Eigenstate(
        energy=energy,
        node_count=count,
        u=traj,
        l=req.l,
        mass=req.mass,
        policy=req.policy,
        indicial=ctx.ind,
        seed_exponent=ctx.form.dominant_exponent,
        norm_check=float(simpson(u * u, x=ctx.nodes)),
        match_radius=float(ctx.nodes[m]),
        potential_label=ctx.pot.label,
        energy_resolution=resolution,
    )


def solve_state(req: SolveRequest, n_r: int) -> Eigenstate:
    """Find the bound state with exactly n_r radial nodes inside the window.

    Raises StateNotFound when the window contains no such state, which is
    distinct from NumericalError (the search itself failed).
    """
    return _solve_in_context(_Context(req), n_r)


def spectrum(req: SolveRequest, max_states: int) -> list[Eigenstate]:
    """Ascending bound states with n_r = 0, 1, ... inside the window.

    Stops at the first missing node count.  In the fall-to-center regime
    this refuses to run unless the request carries a cutoff radius; with a
    cutoff, the truncated potential is solved instead and the geometric
    character of the resulting tower can be checked with *energy_ratios*.
    """
    if max_states < 1:
        raise ConfigError("max_states must be >= 1")
    ctx = _Context(req)
    states: list[Eigenstate] = []
    for k in range(max_states):
        try:
            states.append(_solve_in_context(ctx, k))
        except StateNotFound:
            break
    for prev, cur in zip(states, states[1:]):
        if not cur.energy > prev.energy:
            raise NumericalError("spectrum not strictly ascending; grid too coarse")
    return states


def energy_ratios(states: list[Eigenstate]) -> list[float]:
    """Successive energy ratios E_{k+1}/E_k of a spectrum."""
    return [b.energy / a.energy for a, b in zip(states, states[1:])]


def near_origin_exponent(state: Eigenstate) -> float:
    """Log-log slope of |u| over the first decade of the grid above node 1."""
    r = state.grid.nodes
    u = state.u.u
    j = int(np.searchsorted(r, 10.0 * r[1]))
    j = max(j, 6)
    rr, uu = r[1:j], np.abs(u[1:j])
    keep = uu > 1e-280
    if int(np.count_nonzero(keep)) < 3:
        raise NumericalError("state vanishes over the near-origin fit window")
    slope = np.polyfit(np.log(rr[keep]), np.log(uu[keep]), 1)[0]
    return float(slope)
