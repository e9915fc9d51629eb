"""Write plot-ready CSV files for the standard figure types.

Produces, in the output directory:
  eysm_subcritical.csv    Lorenz curves for several zeta below chi
  eysm_supercritical.csv  Lorenz curves above criticality (plateau at chi/zeta)
  awm_kappa.csv           AWM Lorenz curves for several kappa (negative dip)
  awm_density.csv         AWM density on its shifted support
  sam_density.csv         closed-form single-agent density
  yearly_lorenz.csv       model curves for the published yearly parameters
  fits_<name>.csv         nested-family overlays, when --data is given
"""

import argparse
import json
from pathlib import Path

import numpy as np

from awm.core import ParameterVector
from awm.empirical import canonicalize, load_households, lorenz_ordinates, merge
from awm.fitter import SearchConfig, fit, fit_nested
from awm.sam import SamParams, sam_density
from awm.solver import model_lorenz, solve_model

ROOT = Path(__file__).resolve().parents[1]
F = np.linspace(0.0, 1.0, 1001)


def save(path, columns: dict):
    names = list(columns)
    np.savetxt(path, np.column_stack([columns[n] for n in names]), delimiter=",", fmt="%.10g",
               header=",".join(names), comments="")
    print("wrote", path)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="figures")
    ap.add_argument("--data", action="append", help="weight,networth CSV (repeat to merge)")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    chi = 0.05
    cols = {"f": F}
    for z in (0.0, 0.0125, 0.025, 0.0375, 0.049):
        cols[f"zeta_{z:g}"] = model_lorenz(ParameterVector(chi, z))(F)
    save(out / "eysm_subcritical.csv", cols)

    cols = {"f": F}
    for z in (0.06, 0.08, 0.1, 0.15):
        cols[f"zeta_{z:g}"] = model_lorenz(ParameterVector(chi, z))(F)
    save(out / "eysm_supercritical.csv", cols)

    cols = {"f": F}
    for k in (0.0, 0.05, 0.1, 0.2):
        cols[f"kappa_{k:g}"] = model_lorenz(ParameterVector(chi, 0.03, k))(F)
    save(out / "awm_kappa.csv", cols)

    sol = solve_model(ParameterVector(0.046, 0.064, 0.076))
    d = sol.density
    keep = d.grid <= 10
    save(out / "awm_density.csv", {"w": d.grid[keep], "p": d.density[keep]})

    w = np.geomspace(1e-3, 1e3, 600)
    save(out / "sam_density.csv", {"w": w, **{f"chi_{c:g}": sam_density(w, SamParams(c))
                                              for c in (0.0066, 0.05, 0.2)}})

    pub = json.loads((ROOT / "tests" / "data" / "published_fits.json").read_text())
    cols = {"f": F}
    for r in pub["yearly_fits"]:
        cols[str(r["year"])] = model_lorenz(ParameterVector(r["chi"], r["zeta"], r["kappa"]))(F)
    save(out / "yearly_lorenz.csv", cols)

    if args.data:
        data = None
        for path in args.data:
            d = load_households(path)
            data = d if data is None else merge(data, d)
        emp = lorenz_ordinates(canonicalize(data))
        cfg = SearchConfig()
        reports = {"sam": fit("sam", emp, cfg), **{k.value: v for k, v in fit_nested(emp, cfg).items()}}
        cols = {"f": F, "empirical": emp(F)}
        for name, rep in reports.items():
            cols[name] = rep.curve(F)
            th = rep.theta_opt
            print(f"{name:<12} chi={th.chi:.4f} zeta={th.zeta:.4f} kappa={th.kappa:.4f} "
                  f"Gini={rep.fitted_gini:.4f} J={rep.j_opt:.2e} "
                  f"mean local error={100 * rep.mean_local_error:.3f}%")
        save(out / f"fits_{Path(args.data[0]).stem}.csv", cols)


if __name__ == "__main__":
    main()
