"""Single-Agent Model: closed-form density, cumulative functions and Lorenz curve.

The steady density with redistribution rate chi and mean mu is an inverse
gamma law,

    P(w) = (N / mu) (2 chi)^(2 chi) / Gamma(2 chi) (mu / w)^(2 chi + 2) exp(-2 chi mu / w),

so F(w) = Q(2 chi + 1, 2 chi mu / w) and L(w) = Q(2 chi, 2 chi mu / w), with Q
the regularized upper incomplete gamma function.  Eliminating w gives the
one-parameter Lorenz curve L(f) = Q(2 chi, Q^{-1}(2 chi + 1, f)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core import DEFAULT_RESOLUTION, LorenzCurve
from .errors import DomainError

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


@dataclass(frozen=True)
class SamParams:
    chi: float
    mu: float = 1.0
    n: float = 1.0

    def __post_init__(self):
        if not self.chi > 0:
            raise DomainError(f"chi must be positive, got {self.chi}")
        if not self.mu > 0:
            raise DomainError(f"mu must be positive, got {self.mu}")


def _prefactor(a, z):
    with np.errstate(divide="ignore", over="ignore"):
        return np.exp(a * np.log(z) - z - gammaln(a))


def _series_p(a, z):
    """Lower regularized P(a, z) by its power series (use for z < a + 1)."""
    term = 1.0 / a
    total = term.copy()
    ap = a.copy()
    active = np.ones(a.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        ap = ap + 1.0
        term = np.where(active, term * z / ap, 0.0)
        total = total + term
        active &= np.abs(term) >= np.abs(total) * _EPS
        if not active.any():
            break
    return total * _prefactor(a, z)


def _continued_fraction_q(a, z):
    """Upper regularized Q(a, z) by modified Lentz (use for z >= a + 1)."""
    b = z + 1.0 - a
    c = np.full(a.shape, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(a.shape, dtype=bool)
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = np.where(active, d * c, 1.0)
        h = h * delta
        active &= np.abs(delta - 1.0) >= _EPS
        if not active.any():
            break
    return _prefactor(a, z) * h


def _tails(a, z):
    """(P, Q) on flat float arrays, each computed from the accurate side."""
    p = np.empty_like(z)
    q = np.empty_like(z)
    zero = z == 0.0
    inf = np.isinf(z)
    p[zero], q[zero] = 0.0, 1.0
    p[inf], q[inf] = 1.0, 0.0
    ser = ~zero & ~inf & (z < a + 1.0)
    cf = ~zero & ~inf & ~ser
    if ser.any():
        p[ser] = _series_p(a[ser], z[ser])
        q[ser] = 1.0 - p[ser]
    if cf.any():
        q[cf] = _continued_fraction_q(a[cf], z[cf])
        p[cf] = 1.0 - q[cf]
    return p, q


def _check(a, z, name):
    a_arr = np.asarray(a, dtype=float)
    z_arr = np.asarray(z, dtype=float)
    if np.any(~(a_arr > 0)):
        raise DomainError(f"{name} needs a > 0")
    if np.any(~(z_arr >= 0)):
        raise DomainError(f"{name} needs z >= 0")
    a_b, z_b = np.broadcast_arrays(a_arr, z_arr)
    return a_b.ravel().astype(float), z_b.ravel().astype(float), a_b.shape


def _shaped(out, shape):
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def reg_gamma_q(a, z):
    """Regularized upper incomplete gamma Q(a, z) = Gamma(a, z) / Gamma(a)."""
    a_f, z_f, shape = _check(a, z, "reg_gamma_q")
    return _shaped(_tails(a_f, z_f)[1], shape)


def reg_gamma_p(a, z):
    """Regularized lower incomplete gamma P(a, z) = 1 - Q(a, z)."""
    a_f, z_f, shape = _check(a, z, "reg_gamma_p")
    return _shaped(_tails(a_f, z_f)[0], shape)


def _q_inverse(a, q):
    # Safeguarded Newton in t = log z, tracking whichever tail is smaller.
    lo = np.full(a.shape, -1.0)
    hi = np.full(a.shape, 1.0)
    for _ in range(20):
        low_ok = _tails(a, np.exp(lo))[1] >= q
        if low_ok.all():
            break
        lo = np.where(low_ok, lo, 2.0 * lo)
    for _ in range(20):
        high_ok = _tails(a, np.exp(hi))[1] <= q
        if high_ok.all():
            break
        hi = np.where(high_ok, hi, 2.0 * hi)
    use_p = q > 0.5
    target = np.where(use_p, 1.0 - q, q)
    sign = np.where(use_p, 1.0, -1.0)
    t = 0.5 * (lo + hi)
    active = np.ones(a.shape, dtype=bool)
    for _ in range(200):
        z = np.exp(t)
        p_val, q_val = _tails(a, z)
        g = np.where(use_p, p_val, q_val) - target
        up = sign * g > 0
        hi = np.where(active & up, t, hi)
        lo = np.where(active & ~up, t, lo)
        # d/dt of P(a, e^t) is z^a e^-z / Gamma(a)
        deriv = sign * _prefactor(a, z)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            t_new = t - g / deriv
        bad = ~np.isfinite(t_new) | (t_new <= lo) | (t_new >= hi)
        t_new = np.where(bad, 0.5 * (lo + hi), t_new)
        done = (g == 0.0) | (np.abs(t_new - t) <= 1e-15 * np.maximum(1.0, np.abs(t)))
        t = np.where(active & (g != 0.0), t_new, t)
        active &= ~done
        if not active.any():
            break
    return np.exp(t)


def reg_gamma_q_inv(a, q):
    """Inverse of Q in its second argument: returns z with Q(a, z) = q.

    For small ``a`` and ``q`` near 1 the root can lie below the smallest
    double; the result then underflows to 0 (or a subnormal).
    """
    q_arr = np.asarray(q, dtype=float)
    if np.any(~((q_arr > 0) & (q_arr < 1))):
        raise DomainError("reg_gamma_q_inv needs q in (0, 1)")
    a_f, q_f, shape = _check(a, q_arr, "reg_gamma_q_inv")
    return _shaped(_q_inverse(a_f, q_f), shape)


def sam_density(w, p: SamParams):
    """Closed-form SAM density; ``w`` must be positive."""
    w_arr = np.asarray(w, dtype=float)
    if np.any(w_arr <= 0):
        raise DomainError("sam_density is defined for w > 0")
    a = 2.0 * p.chi
    x = p.mu / w_arr
    log_p = (np.log(p.n / p.mu) + a * np.log(a) - gammaln(a)
             + (a + 2.0) * np.log(x) - a * x)
    out = np.exp(log_p)
    return float(out) if out.ndim == 0 else out


def sam_cdf(w, p: SamParams):
    """Agent fraction F(w) = Q(2 chi + 1, 2 chi mu / w)."""
    w_arr = np.asarray(w, dtype=float)
    if np.any(w_arr < 0):
        raise DomainError("sam_cdf is defined for w >= 0")
    a = 2.0 * p.chi
    with np.errstate(divide="ignore"):
        z = np.where(w_arr > 0, a * p.mu / np.where(w_arr > 0, w_arr, 1.0), np.inf)
    return reg_gamma_q(a + 1.0, z)


def sam_wealth_cdf(w, p: SamParams):
    """Wealth fraction L(w) = Q(2 chi, 2 chi mu / w)."""
    w_arr = np.asarray(w, dtype=float)
    if np.any(w_arr < 0):
        raise DomainError("sam_wealth_cdf is defined for w >= 0")
    a = 2.0 * p.chi
    z = np.where(w_arr > 0, a * p.mu / np.where(w_arr > 0, w_arr, 1.0), np.inf)
    return reg_gamma_q(a, z)


def sam_lorenz(f, chi: float):
    """L(f) = Q(2 chi, Q^{-1}(2 chi + 1, f)) with the endpoints pinned."""
    if not chi > 0:
        raise DomainError(f"chi must be positive, got {chi}")
    f_arr = np.atleast_1d(np.asarray(f, dtype=float))
    if np.any((f_arr < 0) | (f_arr > 1)):
        raise DomainError("f must lie in [0, 1]")
    a = 2.0 * chi
    out = np.empty_like(f_arr)
    out[f_arr == 0] = 0.0
    out[f_arr == 1] = 1.0
    inner = (f_arr > 0) & (f_arr < 1)
    if np.any(inner):
        z = reg_gamma_q_inv(a + 1.0, f_arr[inner])
        out[inner] = reg_gamma_q(a, np.atleast_1d(z))
    return float(out[0]) if np.ndim(f) == 0 else out


def sam_curve(chi: float, resolution: int = DEFAULT_RESOLUTION) -> LorenzCurve:
    f = np.linspace(0.0, 1.0, resolution + 1)
    return LorenzCurve(f, sam_lorenz(f, chi), 1.0, False, {"chi": chi})
