"""Model Ginis for the published single-dataset and yearly parameter sets.

Prints the model Gini and oligarchy fraction for each parameter set next to
the published values.  Pure forward computation; no survey data needed.
"""

import argparse
import json
import time
from pathlib import Path

from awm.core import ParameterVector, gini, oligarchy_fraction
from awm.sam import sam_curve
from awm.solver import model_lorenz

DATA = Path(__file__).resolve().parents[1] / "tests" / "data" / "published_fits.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--json", help="also write the rows to this file")
    args = ap.parse_args()
    pub = json.loads(DATA.read_text())
    rows = []

    print(f"{'model':<14}{'chi':>8}{'zeta':>8}{'kappa':>8}{'Gini':>9}{'published':>11}")
    for name, p in pub["single_fits"].items():
        if name == "empirical_gini":
            continue
        th = ParameterVector(p["chi"], p.get("zeta", 0.0), p.get("kappa", 0.0))
        curve = sam_curve(th.chi) if name == "sam" else model_lorenz(th)
        g = gini(curve)
        rows.append({"model": name, **th.as_dict(), "gini": g, "published": p["gini"]})
        print(f"{name:<14}{th.chi:>8.4f}{th.zeta:>8.3f}{th.kappa:>8.3f}{g:>9.4f}{p['gini']:>11.4f}")

    print()
    print(f"{'year':<6}{'Gini':>9}{'published':>11}{'oligarchy':>11}{'published':>11}{'sec':>7}")
    for r in pub["yearly_fits"]:
        th = ParameterVector(r["chi"], r["zeta"], r["kappa"])
        t0 = time.perf_counter()
        g = gini(model_lorenz(th))
        dt = time.perf_counter() - t0
        o = oligarchy_fraction(th)
        rows.append({"year": r["year"], **th.as_dict(), "gini": g, "published": r["fitting_gini"],
                     "oligarchy": o, "published_oligarchy": r["oligarchy"]})
        print(f"{r['year']:<6}{g:>9.4f}{r['fitting_gini']:>11.4f}{o:>11.4f}{r['oligarchy']:>11.4f}{dt:>7.2f}")

    if args.json:
        Path(args.json).write_text(json.dumps(rows, indent=2) + "\n")


if __name__ == "__main__":
    main()
