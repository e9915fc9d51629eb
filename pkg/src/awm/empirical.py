"""Weighted household wealth records and their Lorenz ordinates.

A dataset is a sum of weighted point masses: household j carries population
weight p_j and net worth w_j (possibly negative).  Canonicalization rescales
so that sum p_j = 1 and sum p_j w_j = 1.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .core import LorenzCurve, gini
from .errors import DegenerateError, InputError, ParseError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Household records sorted by net worth.

    ``dropped`` counts zero-weight rows discarded at load time.
    """

    weights: np.ndarray
    networth: np.ndarray
    normalized: bool = False
    dropped: int = 0
    source: str = ""
    scale: float = field(default=1.0)

    def __post_init__(self):
        wt = np.array(self.weights, dtype=float).ravel()
        nw = np.array(self.networth, dtype=float).ravel()
        if wt.shape != nw.shape:
            raise InputError("weights and networth must have the same length")
        if np.any(wt < 0) or not np.all(np.isfinite(wt)) or not np.all(np.isfinite(nw)):
            raise InputError("weights must be finite and nonnegative; networth finite")
        order = np.argsort(nw, kind="stable")
        wt, nw = wt[order], nw[order]
        wt.flags.writeable = False
        nw.flags.writeable = False
        object.__setattr__(self, "weights", wt)
        object.__setattr__(self, "networth", nw)

    def __len__(self) -> int:
        return self.weights.size

    @property
    def f_ord(self) -> np.ndarray:
        return lorenz_ordinates(self).f[1:]

    @property
    def l_ord(self) -> np.ndarray:
        return lorenz_ordinates(self).l[1:]

    def fraction_below_zero(self) -> float:
        total = self.weights.sum()
        return float(self.weights[self.networth < 0].sum() / total) if total > 0 else 0.0


def load_households(source, name: str = "") -> EmpiricalDistribution:
    """Parse a ``weight,networth`` CSV from a path or an open text stream."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_households(fh, name or str(source))
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", 1) from None
    cols = [c.strip().lower() for c in header]
    if "weight" not in cols or "networth" not in cols:
        raise ParseError(f"header must name columns weight,networth; got {header!r}", 1)
    iw, inw = cols.index("weight"), cols.index("networth")
    weights, worths = [], []
    dropped = 0
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(cols):
            raise ParseError(f"expected {len(cols)} fields, got {len(row)}", lineno)
        try:
            wt = float(row[iw])
            nw = float(row[inw])
        except ValueError:
            raise ParseError(f"non-numeric field in {row!r}", lineno) from None
        if not (np.isfinite(wt) and np.isfinite(nw)):
            raise ParseError("non-finite value", lineno)
        if wt < 0:
            raise ParseError(f"negative weight {wt}", lineno)
        if wt == 0:
            dropped += 1
            continue
        weights.append(wt)
        worths.append(nw)
    if not weights:
        raise ParseError("no records with positive weight", None)
    if dropped:
        log.warning("%s: dropped %d zero-weight rows", name or "input", dropped)
    return EmpiricalDistribution(np.array(weights), np.array(worths), False, dropped, name)


def loads_households(text: str) -> EmpiricalDistribution:
    return load_households(io.StringIO(text))


def merge(base: EmpiricalDistribution, extra: EmpiricalDistribution) -> EmpiricalDistribution:
    """Concatenate two raw datasets whose weights share an absolute scale."""
    if base.normalized or extra.normalized:
        raise InputError("merge expects raw (not canonicalized) datasets")
    return EmpiricalDistribution(
        np.concatenate([base.weights, extra.weights]),
        np.concatenate([base.networth, extra.networth]),
        False,
        base.dropped + extra.dropped,
        "+".join(s for s in (base.source, extra.source) if s),
    )


def canonicalize(d: EmpiricalDistribution) -> EmpiricalDistribution:
    """Scale weights to sum 1 and wealth to mean 1."""
    total_n = float(d.weights.sum())
    if not total_n > 0:
        raise DegenerateError("total weight must be positive")
    p = d.weights / total_n
    mean = float(p @ d.networth)
    if not mean > 0:
        raise DegenerateError(f"total wealth must be positive, got mean {mean}")
    return EmpiricalDistribution(p, d.networth / mean, True, d.dropped, d.source, d.scale * mean)


def lorenz_ordinates(d: EmpiricalDistribution) -> LorenzCurve:
    """Piecewise-linear curve through (0, 0) and the cumulative (f_j, l_j)."""
    if not d.normalized:
        d = canonicalize(d)
    w, p = d.networth, d.weights
    # tied wealth values collapse into one ordinate
    last_of_group = np.concatenate([w[1:] != w[:-1], [True]])
    cum_p = np.cumsum(p)[last_of_group]
    cum_pw = np.cumsum(p * w)[last_of_group]
    f = np.concatenate([[0.0], cum_p / cum_p[-1]])
    l = np.concatenate([[0.0], cum_pw / cum_pw[-1]])
    f[-1] = 1.0
    l[-1] = 1.0
    return LorenzCurve(f, l, 1.0, False, {"source": d.source})


def empirical_gini(d: EmpiricalDistribution) -> float:
    return gini(lorenz_ordinates(d))
