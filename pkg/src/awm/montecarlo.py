"""Agent-based simulation of the SAM, EYSM and AWM transaction processes.

One sweep advances time by ``dt``.  For the exchange models every agent is
paired once (a random perfect matching, so n/2 transactions) and then a
flat tax ``chi * dt * (mu - w)`` is applied to all agents.  For the SAM each
agent takes one multiplicative fair-coin step before the same tax.

AWM transactions act on shifted wealth w + Delta with Delta = lambda * mu, so
agents can hold wealth down to -Delta.
"""

from __future__ import annotations

import enum
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import DEFAULT_RESOLUTION, LorenzCurve, ParameterVector
from .errors import DegenerateError, DomainError, InputError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class Model(str, enum.Enum):
    SAM = "sam"
    EYSM = "eysm"
    AWM = "awm"


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``sweeps`` counts steps of length ``dt``; the simulated time is
    ``sweeps * dt``.  With ``sample_every > 0`` the Lorenz curve is averaged
    over snapshots taken every that many sweeps once ``burn_in`` sweeps have
    elapsed.
    """

    theta: ParameterVector = field(default_factory=lambda: ParameterVector(0.05))
    model: Model = Model.EYSM
    n_agents: int = 10_000
    dt: float = 0.01
    sweeps: int = 20_000
    seed: int = 0
    burn_in: int = 0
    sample_every: int = 0
    resolution: int = 2000

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        if self.n_agents < 2:
            raise DomainError("n_agents must be >= 2")
        if not 0 < self.dt <= 1:
            raise DomainError(f"dt must lie in (0, 1], got {self.dt}")
        if self.sweeps < 0 or self.burn_in < 0 or self.sample_every < 0:
            raise DomainError("sweeps, burn_in and sample_every must be nonnegative")
        if self.model is Model.SAM and (self.theta.zeta or self.theta.kappa):
            raise DomainError("the single-agent model takes chi only")
        if self.model is Model.EYSM and self.theta.kappa:
            raise DomainError("EYSM has kappa = 0; use model 'awm'")

    @classmethod
    def from_mapping(cls, m: dict) -> SimConfig:
        m = dict(m)
        theta = ParameterVector(float(m.pop("chi", 0.05)), float(m.pop("zeta", 0.0)),
                                float(m.pop("kappa", 0.0)))
        known = {"model", "n_agents", "dt", "sweeps", "seed", "burn_in", "sample_every", "resolution"}
        extra = set(m) - known
        if extra:
            raise InputError(f"unknown simulation settings: {sorted(extra)}")
        casts = {"n_agents": int, "sweeps": int, "seed": int, "burn_in": int,
                 "sample_every": int, "resolution": int, "dt": float, "model": str}
        return cls(theta=theta, **{k: casts[k](v) for k, v in m.items()})

    @classmethod
    def from_file(cls, path) -> SimConfig:
        text = Path(path).read_text()
        if str(path).lower().endswith(".toml"):
            return cls.from_mapping(tomllib.loads(text))
        return cls.from_mapping(json.loads(text))


@dataclass(frozen=True, eq=False)
class WealthEnsemble:
    wealths: np.ndarray
    time: float
    seed: int
    clamp_events: int = 0
    mean_lorenz: LorenzCurve | None = None
    snapshots: int = 0

    @property
    def n_agents(self) -> int:
        return self.wealths.size

    def mean(self) -> float:
        return float(self.wealths.mean())

    def top_share(self, fraction: float | None = None) -> float:
        """Wealth share of the richest agent, or of the top ``fraction`` of agents."""
        w = np.sort(self.wealths)
        k = 1 if fraction is None else max(1, int(round(fraction * w.size)))
        return float(w[-k:].sum() / w.sum())

    def condensed(self, threshold: float = 0.1, fraction: float | None = None) -> bool:
        """True when the top agent (or top ``fraction``) holds more than ``threshold``.

        A finite ensemble cannot hold a true atom, so this is a heuristic
        flag; track it across runs of increasing length.
        """
        return self.top_share(fraction) > threshold


def _bias_probability(a, b, zeta, sq_dt, mu_bar):
    bias = zeta * sq_dt * (a - b) / mu_bar
    clamped = np.abs(bias) > 1.0
    return 0.5 * (1.0 + np.clip(bias, -1.0, 1.0)), int(np.count_nonzero(clamped))


def eysm_pair_step(w, x, theta: ParameterVector, dt: float, rng: np.random.Generator,
                   mu_bar: float = 1.0):
    """One yard-sale exchange between (arrays of) agents with wealths w and x.

    Wealths are the shifted ones for the AWM.  Returns (w', x') with
    w' + x' = w + x exactly.
    """
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(w <= 0) or np.any(x <= 0):
        raise DomainError("pair step needs positive (shifted) wealths")
    if not mu_bar > 0:
        raise DomainError("mean shifted wealth must be positive")
    sq = np.sqrt(dt)
    prob, _ = _bias_probability(w, x, theta.zeta, sq, mu_bar)
    eta = np.where(rng.random(np.shape(prob)) < prob, 1.0, -1.0)
    dw = sq * np.minimum(w, x) * eta
    w_new = w + dw
    # x' is defined from the pair total so the sum is preserved bit for bit
    x_new = (w + x) - w_new
    return w_new, x_new


def redistribute_sweep(ensemble: WealthEnsemble, chi: float, dt: float) -> WealthEnsemble:
    """Flat tax toward the mean: w <- w + chi * dt * (mu - w)."""
    w = ensemble.wealths
    mu = w.mean()
    c = chi * dt
    new = mu if c == 1.0 else w + c * (mu - w)
    new = np.broadcast_to(np.asarray(new, dtype=float), w.shape).copy()
    return replace(ensemble, wealths=new)


def _lorenz_on_grid(w, fg):
    s = np.sort(w)
    n = s.size
    f = np.arange(n + 1) / n
    cum = np.concatenate([[0.0], np.cumsum(s)])
    return np.interp(fg, f, cum / cum[-1])


def run(config: SimConfig, initial: np.ndarray | None = None) -> WealthEnsemble:
    """Simulate; deterministic for a given config and initial state."""
    th = config.theta
    rng = np.random.default_rng(config.seed)
    n = config.n_agents
    w = np.ones(n) if initial is None else np.array(initial, dtype=float)
    if w.shape != (n,):
        raise InputError(f"initial wealths must have shape ({n},)")
    sq = np.sqrt(config.dt)
    c = th.chi * config.dt
    half = n // 2
    sam = config.model is Model.SAM
    lam = th.lam if config.model is Model.AWM else 0.0
    fg = np.linspace(0.0, 1.0, config.resolution + 1)
    acc = np.zeros_like(fg)
    snaps = 0
    clamps = 0

    for step in range(1, config.sweeps + 1):
        mu = w.mean()
        if sam:
            eta = np.where(rng.random(n) < 0.5, 1.0, -1.0)
            w = w + sq * w * eta
            mu = w.mean()
        else:
            delta = lam * mu
            mu_bar = mu + delta
            perm = rng.permutation(n)
            i, j = perm[:half], perm[half:2 * half]
            a = w[i] + delta
            b = w[j] + delta
            prob, k = _bias_probability(a, b, th.zeta, sq, mu_bar)
            clamps += k
            eta = np.where(rng.random(half) < prob, 1.0, -1.0)
            dw = sq * np.minimum(a, b) * eta
            a_new = a + dw
            b_new = (a + b) - a_new
            w[i] = a_new - delta
            w[j] = b_new - delta
        w += c * (mu - w)
        if config.sample_every and step > config.burn_in and step % config.sample_every == 0:
            acc += _lorenz_on_grid(w, fg)
            snaps += 1

    mean_curve = None
    if snaps:
        l = acc / snaps
        l[0], l[-1] = 0.0, 1.0
        mean_curve = LorenzCurve(fg, l, 1.0, False, {"snapshots": snaps})
    return WealthEnsemble(w, config.sweeps * config.dt, config.seed, clamps, mean_curve, snaps)


def empirical_lorenz(ensemble: WealthEnsemble) -> LorenzCurve:
    """Exact ordinates (j/n, cumulative wealth share) of the sorted ensemble."""
    s = np.sort(np.asarray(ensemble.wealths, dtype=float))
    n = s.size
    if n < 2:
        raise DomainError("need at least two agents")
    total = s.sum()
    if not total > 0:
        raise DegenerateError("total wealth must be positive")
    f = np.arange(n + 1) / n
    l = np.concatenate([[0.0], np.cumsum(s) / total])
    l[-1] = 1.0
    return LorenzCurve(f, l, 1.0, False)


def resampled_lorenz(ensemble: WealthEnsemble, resolution: int = DEFAULT_RESOLUTION) -> LorenzCurve:
    return empirical_lorenz(ensemble).resample(resolution)
