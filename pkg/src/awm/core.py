"""Domain types, Pareto-Lorenz potentials, Lorenz/Gini analytics and the
scale / duality / shift transforms.

Every model problem is reduced to a subcritical EYSM problem in canonical
form (N = W = 1).  The helpers here move densities and Lorenz curves back
and forth between that canonical problem and the one the caller asked for.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DomainError, InputError, UnsupportedError

DEFAULT_RESOLUTION = 10_000
CONVEXITY_TOL = 1e-8


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.flags.writeable = False
    return arr


def kappa_to_lambda(kappa: float) -> float:
    if not 0.0 <= kappa < 1.0:
        raise DomainError(f"kappa must lie in [0, 1), got {kappa!r}")
    return kappa / (1.0 - kappa)


def lambda_to_kappa(lam: float) -> float:
    if lam < 0.0 or not np.isfinite(lam):
        raise DomainError(f"lambda must be finite and nonnegative, got {lam!r}")
    return lam / (1.0 + lam)


@dataclass(frozen=True)
class ParameterVector:
    """One AWM instance: redistribution ``chi``, WAA ``zeta``, shift ``kappa``."""

    chi: float
    zeta: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        for name in ("chi", "zeta", "kappa"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.chi > 0.0:
            raise DomainError(f"chi must be positive, got {self.chi}")
        if self.zeta < 0.0:
            raise DomainError(f"zeta must be nonnegative, got {self.zeta}")
        if not 0.0 <= self.kappa < 1.0:
            raise DomainError(f"kappa must lie in [0, 1), got {self.kappa}")
        if not self.chi > self.kappa * self.zeta:
            raise DomainError(
                f"infeasible: chi={self.chi} <= kappa*zeta={self.kappa * self.zeta}"
                " (non-oligarchical wealth would be nonpositive)"
            )

    @property
    def lam(self) -> float:
        return kappa_to_lambda(self.kappa)

    @property
    def is_supercritical(self) -> bool:
        return self.zeta > self.chi

    def as_dict(self) -> dict:
        return {"chi": self.chi, "zeta": self.zeta, "kappa": self.kappa, "lambda": self.lam}


@dataclass(frozen=True, eq=False)
class CanonicalDensity:
    """Agent density tabulated on a strictly increasing wealth grid.

    All integrals are trapezoid sums over ``grid``; ``n_total``/``w_total``
    are the nominal agent count and wealth (both 1 in canonical form).
    """

    grid: np.ndarray
    density: np.ndarray
    n_total: float = 1.0
    w_total: float = 1.0
    support_lo: float | None = None

    def __post_init__(self):
        g = _frozen(self.grid)
        p = _frozen(self.density)
        if g.ndim != 1 or g.shape != p.shape or g.size < 2:
            raise InputError("grid and density must be 1-d arrays of equal length >= 2")
        if not np.all(np.diff(g) > 0):
            raise InputError("density grid must be strictly increasing")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise InputError("density must be finite and nonnegative")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "density", p)
        if self.support_lo is None:
            object.__setattr__(self, "support_lo", float(g[0]))

    def mass(self) -> float:
        return float(np.trapezoid(self.density, self.grid))

    def wealth(self) -> float:
        return float(np.trapezoid(self.density * self.grid, self.grid))

    def mean(self) -> float:
        return self.wealth() / self.mass()


@dataclass(frozen=True, eq=False)
class Potentials:
    """F, A, L, B tabulated on the density grid."""

    grid: np.ndarray
    F: np.ndarray
    A: np.ndarray
    L: np.ndarray
    B: np.ndarray
    n_total: float
    w_total: float


@dataclass(frozen=True, eq=False)
class LorenzCurve:
    """Parametric Lorenz curve sampled at nondecreasing ``f`` in [0, 1].

    ``l[-1]`` is the left limit at f -> 1; for a supercritical curve it equals
    ``terminal`` < 1 and the missing wealth is the oligarchy's.
    """

    f: np.ndarray
    l: np.ndarray
    terminal: float = 1.0
    is_supercritical: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        f = _frozen(self.f)
        l = _frozen(self.l)
        if f.ndim != 1 or f.shape != l.shape or f.size < 2:
            raise InputError("f and l must be 1-d arrays of equal length >= 2")
        if f[0] != 0.0 or l[0] != 0.0:
            raise InputError("Lorenz curve must start at (0, 0)")
        if f[-1] != 1.0:
            raise InputError("Lorenz curve must end at f = 1")
        if np.any(np.diff(f) < 0):
            raise InputError("Lorenz abscissae must be nondecreasing")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "terminal", float(self.terminal))
        object.__setattr__(self, "is_supercritical", bool(self.is_supercritical))

    def __call__(self, f):
        return np.interp(f, self.f, self.l)

    def resample(self, resolution: int = DEFAULT_RESOLUTION) -> LorenzCurve:
        fg = np.linspace(0.0, 1.0, resolution + 1)
        return LorenzCurve(fg, self(fg), self.terminal, self.is_supercritical, dict(self.params))

    def is_convex(self, tol: float = CONVEXITY_TOL) -> bool:
        return bool(np.all(_second_differences(self.f, self.l) >= -tol))


@dataclass(frozen=True, eq=False)
class DriftDiffusionField:
    """Drift ``sigma`` and diffusivity ``d`` of the EYSM Fokker-Planck operator."""

    grid: np.ndarray
    sigma: np.ndarray
    d: np.ndarray


def _second_differences(f, l):
    h = np.diff(f)
    keep = h > 0
    f = np.concatenate([[f[0]], f[1:][keep]])
    l = np.concatenate([[l[0]], l[1:][keep]])
    h = np.diff(f)
    if h.size < 2:
        return np.zeros(0)
    s = np.diff(l) / h
    return np.diff(s) * 0.5 * (h[1:] + h[:-1])


def compute_potentials(p: CanonicalDensity) -> Potentials:
    g, P = p.grid, p.density
    if not np.all(np.diff(g) > 0):
        raise InputError("density grid must be strictly increasing")
    cum_n = cumulative_trapezoid(P, g, initial=0.0)
    cum_w = cumulative_trapezoid(P * g, g, initial=0.0)
    cum_b = cumulative_trapezoid(0.5 * P * g * g, g, initial=0.0)
    n, w = cum_n[-1], cum_w[-1]
    if not n > 0:
        raise InputError("density has zero mass")
    F = cum_n / n
    return Potentials(g, F, 1.0 - F, cum_w / w, cum_b / n, float(n), float(w))


def lorenz_from_density(p: CanonicalDensity, resolution: int = DEFAULT_RESOLUTION) -> LorenzCurve:
    pot = compute_potentials(p)
    # drop zero-mass stretches so F is strictly increasing for interpolation
    F, idx = np.unique(pot.F, return_index=True)
    L = pot.L[idx]
    fg = np.linspace(0.0, 1.0, resolution + 1)
    l = np.interp(fg, F, L)
    l[0] = 0.0
    l[-1] = 1.0
    return LorenzCurve(fg, l, 1.0, False)


def density_from_lorenz(curve: LorenzCurve, n: float = 1.0, w: float = 1.0,
                        tol: float = CONVEXITY_TOL) -> CanonicalDensity:
    """Recover the agent density whose Lorenz curve is ``curve``.

    Each segment slope times the mean wealth is the wealth of the agents in
    that population slice; the cumulative fraction F is placed at segment
    midpoints and differentiated to give P = n dF/dw.
    """
    if curve.is_supercritical or curve.terminal < 1.0:
        raise UnsupportedError("supercritical curves carry an oligarchy atom; no classical density")
    if n <= 0 or w <= 0:
        raise DomainError("n and w must be positive")
    mu = w / n
    f, l = np.asarray(curve.f), np.asarray(curve.l)
    h = np.diff(f)
    keep = h > 0
    f0, f1 = f[:-1][keep], f[1:][keep]
    slopes = np.diff(l)[keep] / h[keep]
    if np.any(_second_differences(f, l) < -tol):
        raise UnsupportedError("Lorenz curve is not concave up; wealth(f) would not be monotone")

    # merge consecutive segments sharing a slope (one linear piece of the source)
    scale = np.maximum(1.0, np.abs(slopes))
    new_run = np.concatenate([[True], np.abs(np.diff(slopes)) > 1e-12 * scale[1:]])
    starts = np.flatnonzero(new_run)
    ends = np.concatenate([starts[1:], [slopes.size]]) - 1
    seg_lo, seg_hi = f0[starts], f1[ends]
    s = slopes[starts]
    # slopes of merged runs can still tie under the tolerance; force strict increase
    s = np.maximum.accumulate(s)

    if s.size == 1 or s[-1] - s[0] <= 1e-12 * max(1.0, abs(s[0])):
        width = 1e-6 * max(abs(mu), 1.0)
        c = float(s[0]) * mu
        return CanonicalDensity(np.array([c - width, c, c + width]),
                                np.array([0.0, n / width, 0.0]), n, w)

    fm = 0.5 * (seg_lo + seg_hi)
    ws = s * mu
    # one-sided extrapolation of wealth(f) to f = 0 and f = 1
    w_lo = ws[0] - fm[0] * (ws[1] - ws[0]) / (fm[1] - fm[0])
    w_hi = ws[-1] + (1.0 - fm[-1]) * (ws[-1] - ws[-2]) / (fm[-1] - fm[-2])
    grid = np.concatenate([[w_lo], ws, [w_hi]])
    F = np.concatenate([[0.0], fm, [1.0]])
    ok = np.concatenate([[True], np.diff(grid) > 0])
    grid, F = grid[ok], F[ok]
    # centred differences over the two adjacent intervals, one-sided at the ends;
    # unlike the second-order stencil this stays bounded on very uneven spacing
    dF = np.empty_like(F)
    dF[1:-1] = (F[2:] - F[:-2]) / (grid[2:] - grid[:-2])
    dF[0] = (F[1] - F[0]) / (grid[1] - grid[0])
    dF[-1] = (F[-1] - F[-2]) / (grid[-1] - grid[-2])
    P = n * dF
    P = np.maximum(P, 0.0)
    return CanonicalDensity(grid, P, n, w)


def gini(curve: LorenzCurve) -> float:
    """1 - 2 * area under the curve on [0, 1); may exceed 1 with negative wealth."""
    return float(1.0 - 2.0 * np.trapezoid(curve.l, curve.f))


def gini_density_form(p: CanonicalDensity) -> float:
    if p.grid[0] < 0 and np.any(p.density[p.grid < 0] > 0):
        raise UnsupportedError("density form assumes nonnegative support; use gini(lorenz_from_density(p))")
    pot = compute_potentials(p)
    integral = np.trapezoid(p.density * pot.A * p.grid, p.grid)
    return float(1.0 - 2.0 * integral / pot.w_total)


def scale_density(p: CanonicalDensity, n: float, w: float) -> CanonicalDensity:
    """Map a canonical density to agent count ``n`` and total wealth ``w``."""
    if not (n > 0 and w > 0):
        raise DomainError(f"n and w must be positive, got n={n}, w={w}")
    mu = w / n
    return CanonicalDensity(p.grid * mu, p.density * (n / mu), n, w)


def dual_lorenz(sub: LorenzCurve, chi: float, zeta: float) -> LorenzCurve:
    """Supercritical (chi, zeta) curve from the subcritical (zeta, chi) one."""
    if not zeta > chi:
        raise DomainError(f"duality needs zeta > chi, got chi={chi}, zeta={zeta}")
    if sub.is_supercritical:
        raise InputError("dual_lorenz expects the subcritical curve for the swapped parameters")
    ratio = chi / zeta
    params = dict(sub.params, chi=chi, zeta=zeta)
    return LorenzCurve(sub.f, ratio * np.asarray(sub.l), ratio, True, params)


def awm_lorenz(eysm: LorenzCurve, theta: ParameterVector) -> LorenzCurve:
    """Shift an EYSM curve for (chi, zeta) into the AWM curve with theta.kappa."""
    lam = theta.lam
    terminal = (1.0 + lam) * eysm.terminal - lam
    if not terminal > 0:
        raise DomainError(f"shift leaves nonpositive non-oligarchical wealth ({terminal})")
    f = np.asarray(eysm.f)
    l = (1.0 + lam) * np.asarray(eysm.l) - lam * f
    l[0] = 0.0
    if not eysm.is_supercritical:
        l[-1] = 1.0
    else:
        l[-1] = terminal
    return LorenzCurve(f, l, terminal, eysm.is_supercritical, theta.as_dict())


def oligarchy_fraction(theta: ParameterVector) -> float:
    if not theta.is_supercritical:
        return 0.0
    return (1.0 + theta.lam) * (1.0 - theta.chi / theta.zeta)


def shift_density(eysm_density: CanonicalDensity, theta: ParameterVector,
                  mu_bar: float | None = None) -> CanonicalDensity:
    """Translate an EYSM solution down by kappa * mu_bar (= lambda * mu).

    ``mu_bar`` defaults to the density's own mean.  Pass it explicitly when
    the density is only the classical part of a condensed state, whose
    shifted mean includes the oligarchy's wealth.  An input with mean
    1 + lambda yields a canonical output.
    """
    if mu_bar is None:
        mu_bar = eysm_density.mean()
    delta = theta.kappa * mu_bar
    n = eysm_density.n_total
    return CanonicalDensity(eysm_density.grid - delta, eysm_density.density, n,
                            eysm_density.w_total - delta * n, float(eysm_density.support_lo - delta))


def awm_potentials_from_barred(bar: Potentials, theta: ParameterVector, mu_bar: float):
    """Right-hand sides of the forward potential transforms (F, A, L, B)."""
    k, lam = theta.kappa, theta.lam
    F = bar.F
    A = bar.A
    L = (1.0 + lam) * bar.L - lam * bar.F
    B = bar.B - k * mu_bar ** 2 * (bar.L - 0.5 * k * bar.F)
    return F, A, L, B


def barred_potentials_from_awm(pot: Potentials, theta: ParameterVector, mu: float):
    """Inverse transforms: barred (EYSM) potentials from the AWM ones."""
    k, lam = theta.kappa, theta.lam
    F = pot.F
    A = pot.A
    L = (1.0 - k) * pot.L + k * pot.F
    B = pot.B + lam * mu ** 2 * (pot.L + 0.5 * lam * pot.F)
    return F, A, L, B
