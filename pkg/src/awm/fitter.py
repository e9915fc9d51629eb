"""Inverse problem: fit model parameters to an empirical Lorenz curve.

The objective is the L1 discrepancy J, the area between the empirical and
model Lorenz curves.  For the AWM the shift enters the Lorenz curve affinely,

    L_awm(f) = (1 + lambda) L_eysm(f) - lambda f,

so kappa is optimized by a solver-free line search on a cached EYSM curve
and the outer search only runs over (chi, zeta).
"""

from __future__ import annotations

import enum
import logging
import math
import threading
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .core import (
    LorenzCurve,
    ParameterVector,
    awm_lorenz,
    gini,
    lambda_to_kappa,
    oligarchy_fraction,
)
from .empirical import EmpiricalDistribution, lorenz_ordinates
from .errors import AWMError, DegenerateError, DomainError, FitError
from .sam import sam_lorenz
from .solver import SolverConfig, eysm_lorenz

log = logging.getLogger(__name__)

INFEASIBLE = math.inf
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ModelFamily(str, enum.Enum):
    SAM = "sam"
    EYSM_REDIST = "eysm-redist"
    EYSM_FULL = "eysm-full"
    AWM = "awm"

    @property
    def dimension(self) -> int:
        return {"sam": 1, "eysm-redist": 1, "eysm-full": 2, "awm": 3}[self.value]

    @property
    def has_zeta(self) -> bool:
        return self in (ModelFamily.EYSM_FULL, ModelFamily.AWM)


@dataclass(frozen=True)
class SearchConfig:
    # at least twice the largest published optimum on each axis
    chi_range: tuple = (0.001, 0.25)
    zeta_range: tuple = (0.0, 0.3)
    kappa_range: tuple = (0.0, 0.2)
    grid_density: int = 8
    refine_tol: float = 1e-7
    curve_resolution: int = 10_000
    cache_size: int = 1024
    max_refine_evals: int = 400
    kappa_tol: float = 1e-7
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        for name in ("chi_range", "zeta_range", "kappa_range"):
            lo, hi = (float(v) for v in getattr(self, name))
            object.__setattr__(self, name, (lo, hi))
            if not (0.0 <= lo <= hi) or not math.isfinite(hi):
                raise DomainError(f"{name} must be a closed interval in [0, inf), got {(lo, hi)}")
        if not self.chi_range[0] > 0:
            raise DomainError("chi_range must exclude 0")
        if not self.kappa_range[1] < 1:
            raise DomainError("kappa_range must lie below 1")
        if self.grid_density < 2:
            raise DomainError("grid_density must be >= 2")
        if not self.refine_tol > 0:
            raise DomainError("refine_tol must be positive")
        if self.curve_resolution < 10:
            raise DomainError("curve_resolution must be >= 10")


class CurveCache:
    """Thread-safe LRU memo of model Lorenz curves keyed by rounded parameters.

    Concurrent misses on the same key may both compute; the values are
    deterministic so the last write wins harmlessly.
    """

    def __init__(self, capacity: int = 1024):
        self.capacity = capacity
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key, compute):
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                self.hits += 1
                return self._data[key]
            self.misses += 1
        value = compute()
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.capacity:
                self._data.popitem(last=False)
        return value

    def __len__(self):
        return len(self._data)


def round_key(x: float) -> float:
    return round(float(x), 5)


def _as_curve(empirical) -> LorenzCurve:
    if isinstance(empirical, EmpiricalDistribution):
        return lorenz_ordinates(empirical)
    if isinstance(empirical, LorenzCurve):
        return empirical
    raise TypeError(f"expected LorenzCurve or EmpiricalDistribution, got {type(empirical).__name__}")


def _uniform_grid(resolution: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, resolution + 1)


def _values_on(curve: LorenzCurve, fg: np.ndarray) -> np.ndarray:
    if curve.f.size == fg.size and np.array_equal(curve.f, fg):
        return np.asarray(curve.l)
    return curve(fg)


def discrepancy(model: LorenzCurve, empirical: LorenzCurve,
                resolution: int = 10_000) -> float:
    """J = integral over [0, 1] of |L_model - L_emp|, trapezoid on a uniform grid.

    A supercritical curve takes its terminal value at f = 1, which is the
    plateau extension of its last interior value.
    """
    fg = _uniform_grid(resolution)
    diff = np.abs(_values_on(model, fg) - _values_on(empirical, fg))
    return float(np.trapezoid(diff, fg))


def _point_segment_distance(px, py, x0, y0, x1, y1):
    dx, dy = x1 - x0, y1 - y0
    len2 = dx * dx + dy * dy
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(len2 > 0, ((px - x0) * dx + (py - y0) * dy) / len2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(px - (x0 + t * dx), py - (y0 + t * dy))


def local_error(point, model: LorenzCurve) -> float:
    """Shortest distance from an empirical ordinate to the model curve.

    Points of a supercritical model whose l lies strictly between the
    terminal value and 1 are measured horizontally to the line f = 1.
    """
    fj, lj = float(point[0]), float(point[1])
    if model.is_supercritical and model.terminal < lj < 1.0:
        return abs(fj - 1.0)
    f, l = np.asarray(model.f), np.asarray(model.l)
    # the vertical gap bounds the distance, so only nearby segments matter
    bound = abs(lj - float(np.interp(fj, f, l)))
    lo = max(int(np.searchsorted(f, fj - bound, side="left")) - 1, 0)
    hi = min(int(np.searchsorted(f, fj + bound, side="right")) + 1, f.size - 1)
    if hi <= lo:
        lo, hi = max(hi - 1, 0), max(hi, 1)
    d = _point_segment_distance(fj, lj, f[lo:hi], l[lo:hi], f[lo + 1:hi + 1], l[lo + 1:hi + 1])
    return float(min(bound, d.min())) if d.size else bound


def local_error_profile(empirical: LorenzCurve, model: LorenzCurve) -> np.ndarray:
    pts = zip(empirical.f[1:], empirical.l[1:])
    return np.array([local_error(p, model) for p in pts])


def lambda_l2_guess(eysm: LorenzCurve, empirical: LorenzCurve,
                    resolution: int = 10_000) -> float:
    """Closed-form lambda minimizing the L2 distance of the shifted curve."""
    fg = _uniform_grid(resolution)
    le = _values_on(eysm, fg)
    emp = _values_on(empirical, fg)
    gap = fg - le
    den = float(np.trapezoid(gap * gap, fg))
    if not den > 1e-300:
        raise DegenerateError("EYSM curve coincides with the diagonal; lambda is undetermined")
    return float(np.trapezoid((le - emp) * gap, fg)) / den


def _kappa_bounds(chi: float, zeta: float, kappa_range) -> tuple[float, float]:
    lo, hi = kappa_range
    if zeta > 0:
        # terminal positivity: kappa < chi / zeta
        hi = min(hi, (chi / zeta) * (1.0 - 1e-9))
    return lo, hi


def _shift_j(le: np.ndarray, emp: np.ndarray, fg: np.ndarray, kappa: float) -> float:
    lam = kappa / (1.0 - kappa)
    return float(np.trapezoid(np.abs((1.0 + lam) * le - lam * fg - emp), fg))


def _golden_section(fun, a, b, tol):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)


def fit_kappa(chi: float, zeta: float, empirical, cfg: SearchConfig | None = None,
              eysm: LorenzCurve | None = None) -> tuple[float, float]:
    """Optimal kappa and its J for fixed (chi, zeta).

    Golden-section search seeded by the L2-optimal guess; the bracket grows
    from the guess until the minimum is interior or the feasible range is
    exhausted.  Returns (nan, inf) when no kappa is feasible.
    """
    cfg = cfg or SearchConfig()
    emp_curve = _as_curve(empirical)
    if eysm is None:
        eysm = eysm_lorenz(chi, zeta, cfg.solver, cfg.curve_resolution)
    lo, hi = _kappa_bounds(chi, zeta, cfg.kappa_range)
    if not hi >= lo:
        return math.nan, INFEASIBLE
    fg = _uniform_grid(cfg.curve_resolution)
    le = _values_on(eysm, fg)
    emp = _values_on(emp_curve, fg)
    cost = lambda k: _shift_j(le, emp, fg, k)

    try:
        k0 = lambda_to_kappa(max(lambda_l2_guess(eysm, emp_curve, cfg.curve_resolution), 0.0))
    except (DegenerateError, DomainError):
        k0 = lo
    k0 = min(max(k0, lo), hi)
    if hi - lo <= cfg.kappa_tol:
        return k0, cost(k0)

    # expand a bracket [a, b] around k0 until the interior point beats both ends
    step = max(0.01 * (hi - lo), 4 * cfg.kappa_tol)
    a, b = max(lo, k0 - step), min(hi, k0 + step)
    fa, f0, fb = cost(a), cost(k0), cost(b)
    while fa < f0 and a > lo:
        step *= 2.0
        a, fa = max(lo, k0 - step), cost(max(lo, k0 - step))
    while fb < f0 and b < hi:
        step *= 2.0
        b, fb = min(hi, k0 + step), cost(min(hi, k0 + step))
    k, j = _golden_section(cost, a, b, cfg.kappa_tol)
    # J is convex in lambda, so the ends only win at a boundary optimum
    for kb, jb in ((a, fa), (b, fb), (lo, cost(lo))):
        if jb < j:
            k, j = kb, jb
    return float(k), float(j)


@dataclass
class FitReport:
    model: ModelFamily
    theta_opt: ParameterVector
    j_opt: float
    fitted_gini: float
    empirical_gini: float
    oligarchy_fraction: float
    mean_local_error: float
    local_error_profile: np.ndarray
    evaluations: int
    regime: str
    label: str = ""
    curve: LorenzCurve | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self, include_profile: bool = True) -> dict:
        d = {
            "label": self.label,
            "model": self.model.value,
            "theta": self.theta_opt.as_dict(),
            "j_opt": self.j_opt,
            "fitted_gini": self.fitted_gini,
            "empirical_gini": self.empirical_gini,
            "oligarchy_fraction": self.oligarchy_fraction,
            "mean_local_error": self.mean_local_error,
            "evaluations": self.evaluations,
            "regime": self.regime,
            "diagnostics": self.diagnostics,
        }
        if include_profile:
            d["local_error_profile"] = np.asarray(self.local_error_profile).tolist()
        return d

    def table_row(self) -> dict:
        th = self.theta_opt
        return {
            "label": self.label,
            "chi": th.chi,
            "zeta": th.zeta,
            "kappa": th.kappa,
            "fitting_gini": self.fitted_gini,
            "empirical_gini": self.empirical_gini,
            "oligarchy_fraction": self.oligarchy_fraction,
        }


TABLE_COLUMNS = ("label", "chi", "zeta", "kappa", "fitting_gini", "empirical_gini",
                 "oligarchy_fraction", "error")


class _Objective:
    """J as a function of the outer parameters of one family, with bookkeeping."""

    def __init__(self, family: ModelFamily, emp: LorenzCurve, cfg: SearchConfig,
                 cache: CurveCache):
        self.family = family
        self.cfg = cfg
        self.cache = cache
        self.emp_curve = emp
        self.fg = _uniform_grid(cfg.curve_resolution)
        self.emp = _values_on(emp, self.fg)
        self.evaluations = 0
        self.failures = 0
        self.best = (INFEASIBLE, None)

    def curve(self, chi: float, zeta: float) -> LorenzCurve:
        key = (self.family is ModelFamily.SAM, round_key(chi), round_key(zeta), self.cfg.curve_resolution)
        if self.family is ModelFamily.SAM:
            compute = lambda: LorenzCurve(self.fg, sam_lorenz(self.fg, key[1]), 1.0, False,
                                          {"chi": key[1]})
        else:
            compute = lambda: eysm_lorenz(key[1], key[2], self.cfg.solver, self.cfg.curve_resolution)
        return self.cache.get(key, compute)

    def theta_j(self, chi: float, zeta: float) -> tuple[float, ParameterVector | None]:
        """(J, theta) at the rounded point; J is inf when infeasible."""
        cfg = self.cfg
        chi, zeta = round_key(chi), round_key(zeta) if self.family.has_zeta else 0.0
        if not (cfg.chi_range[0] <= chi <= cfg.chi_range[1]):
            return INFEASIBLE, None
        if self.family.has_zeta and not (cfg.zeta_range[0] <= zeta <= cfg.zeta_range[1]):
            return INFEASIBLE, None
        self.evaluations += 1
        try:
            curve = self.curve(chi, zeta)
            if self.family is ModelFamily.AWM:
                kappa, j = fit_kappa(chi, zeta, self.emp_curve, cfg, eysm=curve)
                if not math.isfinite(j):
                    return INFEASIBLE, None
                theta = ParameterVector(chi, zeta, kappa)
            else:
                theta = ParameterVector(chi, zeta, 0.0)
                j = float(np.trapezoid(np.abs(_values_on(curve, self.fg) - self.emp), self.fg))
        except AWMError as exc:
            self.failures += 1
            log.debug("infeasible point chi=%g zeta=%g: %s", chi, zeta, exc)
            return INFEASIBLE, None
        if j < self.best[0] or (j == self.best[0] and _lex(theta) < _lex(self.best[1])):
            self.best = (j, theta)
        return j, theta

    def __call__(self, x) -> float:
        chi = float(x[0])
        zeta = float(x[1]) if self.family.has_zeta else 0.0
        return self.theta_j(chi, zeta)[0]


def _lex(theta: ParameterVector | None):
    return (math.inf,) if theta is None else (theta.chi, theta.zeta, theta.kappa)


def _axis(lo: float, hi: float, n: int) -> np.ndarray:
    if lo > 0:
        return np.geomspace(lo, hi, n)
    # keep the nested zeta = 0 model on the grid
    return np.concatenate([[0.0], np.geomspace(max(hi * 1e-2, 1e-3), hi, n - 1)])


def fit(model, empirical, cfg: SearchConfig | None = None, cache: CurveCache | None = None,
        label: str = "", seeds=()) -> FitReport:
    """Two-stage global search: coarse grid, then bounded Nelder-Mead.

    ``seeds`` are extra (chi, zeta) points added to the coarse stage.
    """
    family = ModelFamily(model)
    cfg = cfg or SearchConfig()
    cache = cache if cache is not None else CurveCache(cfg.cache_size)
    emp = _as_curve(empirical)
    obj = _Objective(family, emp, cfg, cache)
    t0 = time.perf_counter()

    chis = _axis(*cfg.chi_range, cfg.grid_density * (4 if family.dimension == 1 else 1))
    zetas = _axis(*cfg.zeta_range, cfg.grid_density) if family.has_zeta else np.array([0.0])
    points = [(c, z) for c in chis for z in zetas] + [tuple(s) for s in seeds]
    grid_best = (INFEASIBLE, None)
    for c, z in sorted(points):
        j, theta = obj.theta_j(c, z)
        if j < grid_best[0]:
            grid_best = (j, theta)
    if grid_best[1] is None:
        raise FitError("every grid point was infeasible",
                       {"evaluations": obj.evaluations, "failures": obj.failures})

    start = grid_best[1]
    if family.has_zeta:
        x0 = np.array([start.chi, start.zeta])
        bounds = [cfg.chi_range, cfg.zeta_range]
    else:
        x0 = np.array([start.chi])
        bounds = [cfg.chi_range]
    # initial simplex edges of a quarter grid cell in each direction
    steps = [0.25 * max(x * (np.exp(np.log(b[1] / max(b[0], 1e-3)) / cfg.grid_density) - 1), 2e-4)
             for x, b in zip(x0, bounds)]
    simplex = [x0]
    for i, s in enumerate(steps):
        v = x0.copy()
        v[i] = v[i] + s if v[i] + s <= bounds[i][1] else v[i] - s
        simplex.append(v)
    res = minimize(obj, x0, method="Nelder-Mead", bounds=bounds,
                   options={"initial_simplex": np.array(simplex), "fatol": cfg.refine_tol,
                            "xatol": 1e-5, "maxfev": cfg.max_refine_evals})
    j_opt, theta = obj.best

    curve = _final_curve(family, theta, obj)
    profile = local_error_profile(emp, curve)
    report = FitReport(
        model=family,
        theta_opt=theta,
        j_opt=j_opt,
        fitted_gini=gini(curve),
        empirical_gini=gini(emp),
        oligarchy_fraction=oligarchy_fraction(theta),
        mean_local_error=float(profile.mean()) if profile.size else 0.0,
        local_error_profile=profile,
        evaluations=obj.evaluations,
        regime="supercritical" if theta.is_supercritical else "subcritical",
        label=label,
        curve=curve,
        diagnostics={
            "grid_best_j": grid_best[0],
            "grid_best_theta": grid_best[1].as_dict(),
            "refine_message": str(res.message),
            "refine_iterations": int(res.nit),
            "infeasible_points": obj.failures,
            "cache_hits": cache.hits,
            "cache_misses": cache.misses,
            "seconds": time.perf_counter() - t0,
        },
    )
    return report


def _final_curve(family: ModelFamily, theta: ParameterVector, obj: _Objective) -> LorenzCurve:
    base = obj.curve(theta.chi, theta.zeta)
    if family is ModelFamily.AWM:
        return awm_lorenz(base, theta)
    return base


def model_curve(model, theta: ParameterVector, cfg: SearchConfig | None = None) -> LorenzCurve:
    """The Lorenz curve the fitter would compare for ``theta`` in ``model``."""
    family = ModelFamily(model)
    cfg = cfg or SearchConfig()
    fg = _uniform_grid(cfg.curve_resolution)
    if family is ModelFamily.SAM:
        return LorenzCurve(fg, sam_lorenz(fg, theta.chi), 1.0, False, {"chi": theta.chi})
    base = eysm_lorenz(theta.chi, theta.zeta, cfg.solver, cfg.curve_resolution)
    return awm_lorenz(base, theta)


def fit_nested(empirical, cfg: SearchConfig | None = None, cache: CurveCache | None = None,
               label: str = "") -> dict:
    """Fit EYSM-redistribution, EYSM-full and AWM, seeding each with the previous optimum."""
    cfg = cfg or SearchConfig()
    cache = cache if cache is not None else CurveCache(cfg.cache_size)
    out = {}
    seeds = []
    for family in (ModelFamily.EYSM_REDIST, ModelFamily.EYSM_FULL, ModelFamily.AWM):
        rep = fit(family, empirical, cfg, cache, label, seeds)
        out[family] = rep
        seeds = seeds + [(rep.theta_opt.chi, rep.theta_opt.zeta)]
    return out


def trend(datasets, model, cfg: SearchConfig | None = None, jobs: int = 1) -> list:
    """Independent fits per (label, empirical) pair, sorted by label.

    A failed dataset yields ``(label, exception)`` in place of a report.
    """
    cfg = cfg or SearchConfig()
    cache = CurveCache(cfg.cache_size)
    items = sorted(datasets, key=lambda item: str(item[0]))

    def one(item):
        label, emp = item
        try:
            return fit(model, emp, cfg, cache, label=str(label))
        except (AWMError, ValueError) as exc:
            return (str(label), exc)

    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, items))
    return [one(item) for item in items]


def trend_rows(results) -> list[dict]:
    rows = []
    for r in results:
        if isinstance(r, FitReport):
            rows.append({**r.table_row(), "error": ""})
        else:
            label, exc = r
            rows.append({c: "" for c in TABLE_COLUMNS} | {"label": label, "error": str(exc)})
    return rows
