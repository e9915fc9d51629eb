"""Steady-state solver for the canonical subcritical EYSM Fokker-Planck equation.

The zero-flux form of the stationary equation is

    J = v P - d/dw[D P] = 0,
    D = B + w^2 A / 2,
    v = chi (1 - w) - zeta [2 (B - w^2 A / 2) + (1 - 2 L) w],

and because dD/dw = w A exactly, J = (v - w A) P - D dP/dw.  The flux is
discretized with Scharfetter-Gummel weights on a vertex-centred grid and the
equation is relaxed in pseudo-time with an implicit step, lagging the
potentials (Picard iteration).  Each step is followed by a two-moment
projection that pins N = W = 1 to round-off.

Supercritical and AWM problems reach this solver through the transforms in
:mod:`awm.core`; see :func:`model_lorenz`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .core import (
    CanonicalDensity,
    DriftDiffusionField,
    LorenzCurve,
    ParameterVector,
    Potentials,
    awm_lorenz,
    compute_potentials,
    dual_lorenz,
    lorenz_from_density,
    scale_density,
    shift_density,
    DEFAULT_RESOLUTION,
)
from .errors import ConvergenceError, DomainError

log = logging.getLogger(__name__)

# relative offset used in place of exact criticality zeta == chi
CRITICAL_EPS = 1e-6
# residual improving by less than 1% over this many steps counts as a plateau
PLATEAU_WINDOW = 10
PLATEAU_RATIO = 0.99


@dataclass(frozen=True)
class SolverConfig:
    w_max: float = 50.0
    n_cells: int = 4096
    dt: float = 1.0
    tol_residual: float = 1e-5
    max_steps: int = 500
    w_min: float = 1e-6
    tail_tol: float = 1e-8
    max_doublings: int = 8

    def __post_init__(self):
        if not self.w_max >= 10:
            raise DomainError(f"w_max must be >= 10 mean-wealth units, got {self.w_max}")
        if self.n_cells < 256:
            raise DomainError(f"n_cells must be >= 256, got {self.n_cells}")
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if not self.tol_residual > 0:
            raise DomainError("tol_residual must be positive")
        if self.max_steps < 1:
            raise DomainError("max_steps must be >= 1")
        if not 0 < self.w_min < 1:
            raise DomainError("w_min must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class SolveOutcome:
    density: CanonicalDensity
    residual: float
    steps: int
    mass_drift: float
    wealth_drift: float
    w_max: float = 0.0
    tail_mass: float = 0.0
    history: list = field(default_factory=list, repr=False)

    def diagnostics(self) -> dict:
        return {
            "residual": self.residual,
            "steps": self.steps,
            "mass_drift": self.mass_drift,
            "wealth_drift": self.wealth_drift,
            "w_max": self.w_max,
            "tail_mass": self.tail_mass,
        }


def make_grid(w_max: float, n_cells: int, w_min: float = 1e-6) -> np.ndarray:
    """Node 0 at w = 0 followed by ``n_cells`` log-spaced nodes on [w_min, w_max]."""
    return np.concatenate([[0.0], np.geomspace(w_min, w_max, n_cells)])


def _bernoulli(x: np.ndarray) -> np.ndarray:
    """x / (e^x - 1), with the removable singularity at 0 filled in."""
    out = np.empty_like(x)
    small = np.abs(x) < 1e-6
    xs = x[small]
    out[small] = 1.0 - xs / 2.0 + xs * xs / 12.0
    xl = x[~small]
    with np.errstate(over="ignore"):
        out[~small] = xl / np.expm1(xl)
    return out


def _dual_volumes(w: np.ndarray) -> np.ndarray:
    h = np.diff(w)
    v = np.zeros_like(w)
    v[:-1] += 0.5 * h
    v[1:] += 0.5 * h
    return v


def assemble_coefficients(p: CanonicalDensity, pot: Potentials, chi: float,
                          zeta: float) -> DriftDiffusionField:
    """Nodal drift and diffusivity; ``mu`` and ``N/W`` taken from the density."""
    w = p.grid
    mu = pot.w_total / pot.n_total
    n_over_w = pot.n_total / pot.w_total
    half = 0.5 * w * w * pot.A
    sigma = chi * (mu - w) - zeta * (2.0 * n_over_w * (pot.B - half) + (1.0 - 2.0 * pot.L) * w)
    d = pot.B + half
    return DriftDiffusionField(w, sigma, d)


def _edge_flux_coefficients(w, A, L, B, chi, zeta):
    """(left, right) so that J_{i+1/2} = left_i P_i - right_i P_{i+1}."""
    h = np.diff(w)
    wm = 0.5 * (w[1:] + w[:-1])
    Ae = 0.5 * (A[1:] + A[:-1])
    Le = 0.5 * (L[1:] + L[:-1])
    Be = 0.5 * (B[1:] + B[:-1])
    half = 0.5 * wm * wm * Ae
    D = Be + half
    v = chi * (1.0 - wm) - zeta * (2.0 * (Be - half) + (1.0 - 2.0 * Le) * wm)
    pe = (v - wm * Ae) * h / D
    k = D / h
    return k * _bernoulli(-pe), k * _bernoulli(pe)


def _canonical_potentials(w, P, V):
    n = V @ P
    wealth = V @ (P * w)
    h = np.diff(w)
    cum = lambda g: np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * h)])
    F = cum(P) / n
    L = cum(P * w) / wealth
    B = cum(0.5 * P * w * w) / n
    return F, 1.0 - F, L, B


def _flux_residual(w, P, V, chi, zeta):
    F, A, L, B = _canonical_potentials(w, P, V)
    left, right = _edge_flux_coefficients(w, A, L, B, chi, zeta)
    J = left * P[:-1] - right * P[1:]
    return float(np.sum(np.diff(w) * np.abs(J)))


def residual_eq14(p: CanonicalDensity, pot: Potentials, chi: float, zeta: float) -> float:
    """L1 norm of the once-integrated stationary equation, in flux form.

    On the solver's grid this is sum_i h_i |J_{i+1/2}|, where J is the same
    Scharfetter-Gummel flux the solver drives to zero.  ``pot`` must belong
    to ``p``.
    """
    w, P = p.grid, p.density
    left, right = _edge_flux_coefficients(w, pot.A, pot.L, pot.B, chi, zeta)
    # the flux form assumes canonical normalization of P
    scale = 1.0 / pot.n_total if pot.n_total > 0 else 0.0
    J = (left * P[:-1] - right * P[1:]) * scale
    return float(np.sum(np.diff(w) * np.abs(J)))


def _project_moments(P, w, V):
    """Multiply P by (alpha + beta w) so that N = W = 1 on the grid."""
    n = V @ P
    m1 = V @ (P * w)
    m2 = V @ (P * w * w)
    det = n * m2 - m1 * m1
    alpha = (m2 - m1) / det
    beta = (n - m1) / det
    return P * (alpha + beta * w)


def _initial_profile(w: np.ndarray, chi: float) -> np.ndarray:
    # single-agent-model shape with mean 1: w^-(2chi+2) exp(-2chi/w)
    a = 2.0 * chi
    P = np.zeros_like(w)
    pos = w > 0
    lp = -(a + 2.0) * np.log(w[pos]) - a / w[pos]
    P[pos] = np.exp(lp - lp.max())
    return P


def _relax(chi, zeta, w, P, cfg: SolverConfig, max_steps: int, stop_on_plateau: bool = True):
    V = _dual_volumes(w)
    P = _project_moments(P, w, V)
    P = np.maximum(P, 0.0)
    n1 = w.size
    dt = cfg.dt
    prev_change = np.inf
    history = []
    residual = np.inf
    for step in range(1, max_steps + 1):
        F, A, L, B = _canonical_potentials(w, P, V)
        left, right = _edge_flux_coefficients(w, A, L, B, chi, zeta)
        ab = np.zeros((3, n1))
        ab[1] = V / dt
        ab[1, :-1] += left
        ab[1, 1:] += right
        ab[0, 1:] = -right
        ab[2, :-1] = -left
        Pn = solve_banded((1, 1), ab, V * P / dt, check_finite=False)
        if np.any(Pn < -1e-14 * np.max(np.abs(Pn))):
            dt = max(dt / 3.0, 1e-6)
            continue
        Pn = _project_moments(np.maximum(Pn, 0.0), w, V)
        Pn = np.maximum(Pn, 0.0)
        change = float(V @ np.abs(Pn - P)) / dt
        P = Pn
        dt = min(dt * 1.5, 1e6) if change < prev_change else max(dt / 3.0, 1e-6)
        prev_change = change
        residual = _flux_residual(w, P, V, chi, zeta)
        history.append(residual)
        if residual <= cfg.tol_residual:
            return P, residual, step, history, "converged"
        if stop_on_plateau and step > PLATEAU_WINDOW and residual > PLATEAU_RATIO * history[-PLATEAU_WINDOW - 1]:
            # fixed point of the truncated problem that is not a steady state
            return P, residual, step, history, "stalled"
    return P, residual, max_steps, history, "exhausted"


def solve_steady_subcritical(chi: float, zeta: float, cfg: SolverConfig | None = None) -> SolveOutcome:
    """Canonical EYSM steady state for 0 <= zeta < chi.

    The domain is doubled until the agent fraction above w_max/2 is below
    ``cfg.tail_tol``.  Raises :class:`DomainError` for zeta >= chi and
    :class:`ConvergenceError` when ``max_steps`` is exhausted.
    """
    cfg = cfg or SolverConfig()
    if not chi > 0:
        raise DomainError(f"chi must be positive, got {chi}")
    if zeta < 0:
        raise DomainError(f"zeta must be nonnegative, got {zeta}")
    if zeta >= chi:
        raise DomainError(f"zeta={zeta} >= chi={chi} is not subcritical; use duality")

    w_max = cfg.w_max
    w = make_grid(w_max, cfg.n_cells, cfg.w_min)
    P = _initial_profile(w, chi)
    total_steps = 0
    history = []
    steps_left = cfg.max_steps
    for _ in range(cfg.max_doublings + 1):
        P, residual, steps, hist, status = _relax(chi, zeta, w, P, cfg, steps_left)
        total_steps += steps
        steps_left -= steps
        history.extend(hist)
        V = _dual_volumes(w)
        _, A, _, _ = _canonical_potentials(w, P, V)
        tail = float(np.interp(0.5 * w_max, w, A))
        diagnostics = {"residual": residual, "steps": total_steps, "w_max": w_max, "tail_mass": tail}
        if tail > cfg.tail_tol and steps_left > 0:
            log.debug("tail fraction %.3g above w_max/2=%g; doubling domain", tail, 0.5 * w_max)
            w_old, P_old = w, P
            w_max *= 2.0
            w = make_grid(w_max, cfg.n_cells, cfg.w_min)
            P = np.interp(w, w_old, P_old, right=0.0)
            continue
        if status == "stalled" and tail <= cfg.tail_tol:
            # the domain is adequate; keep relaxing without plateau exits
            P, residual, steps, hist, status = _relax(chi, zeta, w, P, cfg, steps_left, False)
            total_steps += steps
            history.extend(hist)
            diagnostics.update(residual=residual, steps=total_steps)
        if status != "converged":
            raise ConvergenceError(
                f"no steady state after {total_steps} steps at chi={chi}, zeta={zeta}"
                f" (residual {residual:.3g}, {status})", diagnostics)
        if tail > cfg.tail_tol:
            raise ConvergenceError(
                f"tail fraction {tail:.3g} above tolerance at w_max={w_max}", diagnostics)
        break
    else:
        raise ConvergenceError(
            f"tail did not decay within w_max={w_max} at chi={chi}, zeta={zeta}", diagnostics)

    V = _dual_volumes(w)
    density = CanonicalDensity(w, P, 1.0, 1.0, 0.0)
    return SolveOutcome(
        density=density,
        residual=residual,
        steps=total_steps,
        mass_drift=abs(float(V @ P) - 1.0),
        wealth_drift=abs(float(V @ (P * w)) - 1.0),
        w_max=w_max,
        tail_mass=tail,
        history=history,
    )


def _subcritical_zeta(chi: float, zeta: float) -> float:
    return chi * (1.0 - CRITICAL_EPS) if zeta == chi else zeta


def eysm_lorenz(chi: float, zeta: float, cfg: SolverConfig | None = None,
                resolution: int = DEFAULT_RESOLUTION) -> LorenzCurve:
    """EYSM Lorenz curve for any (chi, zeta); supercritical cases go through duality."""
    if zeta > chi:
        sub = solve_steady_subcritical(zeta, chi, cfg)
        curve = dual_lorenz(lorenz_from_density(sub.density, resolution), chi, zeta)
    else:
        sub = solve_steady_subcritical(chi, _subcritical_zeta(chi, zeta), cfg)
        curve = lorenz_from_density(sub.density, resolution)
    return LorenzCurve(curve.f, curve.l, curve.terminal, curve.is_supercritical,
                       {"chi": chi, "zeta": zeta})


def model_lorenz(theta: ParameterVector, cfg: SolverConfig | None = None,
                 resolution: int = DEFAULT_RESOLUTION) -> LorenzCurve:
    """AWM Lorenz curve: solve canonically, resolve duality, then shift."""
    return awm_lorenz(eysm_lorenz(theta.chi, theta.zeta, cfg, resolution), theta)


@dataclass(frozen=True, eq=False)
class ModelSolution:
    theta: ParameterVector
    lorenz: LorenzCurve
    density: CanonicalDensity
    outcome: SolveOutcome


def solve_model(theta: ParameterVector, cfg: SolverConfig | None = None,
                resolution: int = DEFAULT_RESOLUTION) -> ModelSolution:
    """Full three-step solve returning the Lorenz curve and a canonical density.

    For supercritical theta the density describes the non-oligarchical
    agents only: it carries all agents but just the classical wealth
    fraction chi/zeta (before the shift).
    """
    chi, zeta, lam = theta.chi, theta.zeta, theta.lam
    if zeta > chi:
        outcome = solve_steady_subcritical(zeta, chi, cfg)
        ratio = chi / zeta
    else:
        outcome = solve_steady_subcritical(chi, _subcritical_zeta(chi, zeta), cfg)
        ratio = 1.0
    # EYSM state with shifted mean 1 + lambda, so the shifted output has mean 1
    mu_bar = 1.0 + lam
    classical = scale_density(outcome.density, 1.0, ratio * mu_bar)
    density = shift_density(classical, theta, mu_bar) if theta.kappa > 0 else classical
    lorenz = model_lorenz_from_outcome(theta, outcome, resolution)
    return ModelSolution(theta, lorenz, density, outcome)


def model_lorenz_from_outcome(theta: ParameterVector, outcome: SolveOutcome,
                              resolution: int = DEFAULT_RESOLUTION) -> LorenzCurve:
    sub = lorenz_from_density(outcome.density, resolution)
    if theta.zeta > theta.chi:
        sub = dual_lorenz(sub, theta.chi, theta.zeta)
    return awm_lorenz(sub, theta)

