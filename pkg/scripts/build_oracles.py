"""Compute reference values with methods independent of the package and freeze them.

Uses adaptive quadrature and scipy.special's incomplete gamma only; nothing
here imports awm.  Output: tests/data/oracles.json.
"""

import json
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaincc, gammaln

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"


def upper_gamma_by_quadrature(a, z):
    f = lambda t: np.exp((a - 1) * np.log(t) - t - gammaln(a))
    pieces = [z, z + 1, z + 10, z + 50, z + 200]
    total = sum(quad(f, lo, hi, epsabs=0, epsrel=1e-13, limit=400)[0] for lo, hi in zip(pieces, pieces[1:]))
    return total


def bisect_q_inverse(a, q):
    lo, hi = 1e-12, 100.0
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if gammaincc(a, mid) > q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sam_lorenz_area(chi):
    # area = int_0^inf Q(a, u) u^a e^-u / Gamma(a + 1) du with u = 2 chi mu / w
    a = 2 * chi
    g = lambda u: gammaincc(a, u) * np.exp(a * np.log(u) - u - gammaln(a + 1))
    edges = [0, 1e-12, 1e-8, 1e-4, 1e-2, 0.1, 1, 5, 20, 60, 200]
    return sum(quad(g, lo, hi, epsabs=0, epsrel=1e-13, limit=500)[0] for lo, hi in zip(edges, edges[1:]))


def sam_density(w, chi):
    a = 2 * chi
    return np.exp(a * np.log(a) - gammaln(a) + (a + 2) * np.log(1 / w) - a / w)


def sam_cumulatives_by_quadrature(chi, w):
    """(F(w), L(w)) by integrating the density directly in log w."""
    pf = lambda s: sam_density(np.exp(s), chi) * np.exp(s)
    pl = lambda s: sam_density(np.exp(s), chi) * np.exp(2 * s)
    edges = np.linspace(np.log(1e-4), np.log(w), 60)
    F = sum(quad(pf, lo, hi, epsabs=1e-15, epsrel=1e-13)[0] for lo, hi in zip(edges, edges[1:]))
    L = sum(quad(pl, lo, hi, epsabs=1e-15, epsrel=1e-13)[0] for lo, hi in zip(edges, edges[1:]))
    return F, L


def min_distance_dense(px, py, curve, n=1_000_001):
    f = np.linspace(0, 1, n)
    return float(np.min(np.hypot(f - px, curve(f) - py)))


def main():
    o = {}
    o["kappa_to_lambda_0.076"] = float(Fraction(76, 1000) / (1 - Fraction(76, 1000)))
    o["reg_gamma_q_0.0132_0.5"] = upper_gamma_by_quadrature(0.0132, 0.5)
    o["reg_gamma_q_inv_2.0132_0.5"] = bisect_q_inverse(2.0132, 0.5)
    o["sam_gini"] = {str(chi): 1 - 2 * sam_lorenz_area(chi) for chi in (0.0066, 0.0132, 0.1, 0.2)}
    chi = 0.1
    pairs = [sam_cumulatives_by_quadrature(chi, w) for w in (0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0)]
    o["sam_0.1_quadrature_FL"] = [[F, L] for F, L in pairs]
    o["local_error_0.5_0.5_vs_f2"] = min_distance_dense(0.5, 0.5, lambda f: f * f)
    o["uniform_0_2"] = {"F(1)": 0.5, "L(1)": 0.25, "B(2)": 8 / 12, "gini": 1 / 3}
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(o, indent=2) + "\n")
    print(json.dumps(o, indent=2))


if __name__ == "__main__":
    main()
