import math
import threading

import numpy as np
import pytest

from awm.core import LorenzCurve, ParameterVector, awm_lorenz, gini
from awm.empirical import EmpiricalDistribution
from awm.errors import DegenerateError, DomainError
from awm.fitter import (
    TABLE_COLUMNS,
    CurveCache,
    FitReport,
    ModelFamily,
    SearchConfig,
    discrepancy,
    fit,
    fit_kappa,
    lambda_l2_guess,
    local_error,
    local_error_profile,
    model_curve,
    round_key,
    trend,
    trend_rows,
)
from awm.sam import sam_lorenz
from awm.solver import eysm_lorenz

FG = np.linspace(0, 1, 10_001)


def _curve(l, terminal=1.0):
    return LorenzCurve(FG, l, terminal, terminal < 1.0)


def test_search_config_validation():
    with pytest.raises(DomainError):
        SearchConfig(chi_range=(0.0, 0.1))
    with pytest.raises(DomainError):
        SearchConfig(kappa_range=(0.0, 1.0))
    with pytest.raises(DomainError):
        SearchConfig(grid_density=1)
    assert ModelFamily("awm").dimension == 3 and not ModelFamily.EYSM_REDIST.has_zeta


def test_discrepancy_examples():
    diag = _curve(FG.copy())
    zero = _curve(np.where(FG < 1, 0.0, 1.0))
    assert discrepancy(diag, diag) == 0.0
    assert discrepancy(diag, zero) == pytest.approx(0.5, abs=1e-4)
    # kink at f = 1/2 sits on the grid, so trapezoid integration is exact
    kink = _curve(np.maximum(0.0, 2 * FG - 1))
    assert discrepancy(diag, kink) == pytest.approx(0.25, abs=1e-10)


def test_discrepancy_symmetric_and_triangle():
    a, b, c = (_curve(FG ** p) for p in (1.5, 2.0, 3.0))
    assert discrepancy(a, b) == discrepancy(b, a)
    assert discrepancy(a, c) <= discrepancy(a, b) + discrepancy(b, c) + 1e-15
    # integral of f^2 - f^3 is 1/12
    assert discrepancy(b, c) == pytest.approx(1 / 12, abs=1e-8)


def test_local_error_examples(oracles):
    sq = _curve(FG ** 2)
    assert local_error((0.5, 0.25), sq) == pytest.approx(0.0, abs=1e-12)
    assert local_error((0.5, 0.5), sq) == pytest.approx(oracles["local_error_0.5_0.5_vs_f2"], abs=1e-7)
    sup = _curve(0.7 * FG ** 2, terminal=0.7)
    assert local_error((0.9, 0.85), sup) == pytest.approx(0.1, abs=1e-12)


def test_local_error_profile_length():
    d = EmpiricalDistribution(np.ones(5), [1, 2, 3, 4, 5])
    from awm.empirical import lorenz_ordinates

    emp = lorenz_ordinates(d)
    prof = local_error_profile(emp, _curve(FG ** 2))
    assert prof.shape == (5,)
    assert prof[-1] == pytest.approx(0.0, abs=1e-12)


def test_lambda_guess_recovers_shift():
    eysm = eysm_lorenz(0.05, 0.03)
    emp = awm_lorenz(eysm, ParameterVector(0.05, 0.03, 0.08 / 1.08))
    assert lambda_l2_guess(eysm, emp) == pytest.approx(0.08, abs=1e-8)
    assert lambda_l2_guess(eysm, eysm) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DegenerateError):
        lambda_l2_guess(_curve(FG.copy()), eysm)


def test_fit_kappa_recovery():
    chi, zeta = 0.046, 0.064
    eysm = eysm_lorenz(chi, zeta)
    emp = awm_lorenz(eysm, ParameterVector(chi, zeta, 0.076))
    k, j = fit_kappa(chi, zeta, emp, eysm=eysm)
    assert k == pytest.approx(0.076, abs=1e-3)
    assert j < 1e-6
    k0, j0 = fit_kappa(chi, zeta, eysm, eysm=eysm)
    assert k0 == pytest.approx(0.0, abs=1e-6) and j0 < 1e-8


def test_fit_kappa_respects_terminal_feasibility():
    # chi/zeta = 0.72 caps kappa below 0.72; a range entirely above it is infeasible
    chi, zeta = 0.072, 0.1
    eysm = eysm_lorenz(chi, zeta)
    k, j = fit_kappa(chi, zeta, eysm, SearchConfig(kappa_range=(0.73, 0.9)), eysm=eysm)
    assert math.isnan(k) and j == math.inf
    k, _ = fit_kappa(chi, zeta, _curve(FG ** 8), SearchConfig(kappa_range=(0.0, 0.99)), eysm=eysm)
    assert (1 + k / (1 - k)) * chi / zeta - k / (1 - k) > 0


def test_cache_lru_and_threads():
    cache = CurveCache(2)
    calls = []
    for key in (1, 2, 1, 3):
        cache.get(key, lambda key=key: calls.append(key) or key)
    assert calls == [1, 2, 3] and len(cache) == 2
    assert cache.get(1, lambda: -1) == 1
    assert cache.get(2, lambda: "recomputed") == "recomputed"

    shared = CurveCache(16)
    results = []
    threads = [threading.Thread(target=lambda: results.append(shared.get("k", lambda: 42)))
               for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results == [42] * 8 and len(shared) == 1


def test_round_key():
    assert round_key(0.0460000001) == 0.046
    assert round_key(0.123456789) == 0.12346


FAST = SearchConfig(curve_resolution=4000, grid_density=6)


def test_sam_self_fit():
    chi = 0.0066
    emp = LorenzCurve(FG, sam_lorenz(FG, chi), 1.0, False)
    rep = fit("sam", emp)
    assert rep.theta_opt.chi == pytest.approx(chi, rel=0.01)
    assert rep.j_opt <= 1e-6
    assert rep.regime == "subcritical" and rep.oligarchy_fraction == 0.0


def test_eysm_redist_self_fit():
    emp = eysm_lorenz(0.03, 0.0)
    rep = fit(ModelFamily.EYSM_REDIST, emp, FAST)
    assert rep.theta_opt.chi == pytest.approx(0.03, rel=0.01)
    assert rep.theta_opt.zeta == 0.0
    assert rep.fitted_gini == pytest.approx(gini(emp), abs=1e-3)


def test_report_serialization():
    emp = eysm_lorenz(0.03, 0.0)
    rep = fit("eysm-redist", emp, FAST, label="demo")
    d = rep.to_dict()
    assert d["model"] == "eysm-redist" and d["label"] == "demo"
    assert len(d["local_error_profile"]) == emp.f.size - 1
    row = rep.table_row()
    assert set(row) <= set(TABLE_COLUMNS)
    curve = model_curve("eysm-redist", rep.theta_opt, FAST)
    assert gini(curve) == pytest.approx(rep.fitted_gini, abs=1e-12)


def test_trend_determinism_and_single():
    emp = LorenzCurve(FG, sam_lorenz(FG, 0.02), 1.0, False)
    single = fit("sam", emp, FAST, label="a")
    out = trend([("b", emp), ("a", emp)], "sam", FAST, jobs=2)
    assert [r.label for r in out] == ["a", "b"]
    rows = trend_rows(out)
    assert rows[0]["chi"] == rows[1]["chi"] == single.theta_opt.chi
    assert rows[0]["fitting_gini"] == rows[1]["fitting_gini"]
    assert all(isinstance(r, FitReport) for r in out)


def test_trend_flags_failures():
    from awm.solver import SolverConfig

    starved = SearchConfig(curve_resolution=1000, grid_density=3, solver=SolverConfig(max_steps=1))
    emp = eysm_lorenz(0.03, 0.0)
    out = trend([("y", emp), ("x", emp)], "eysm-redist", starved)
    rows = trend_rows(out)
    assert [r["label"] for r in rows] == ["x", "y"]
    assert all(r["error"] for r in rows)


def test_argmin_invariant_under_raw_rescaling():
    rng = np.random.default_rng(9)
    wt = rng.uniform(1, 5, 400)
    nw = rng.pareto(1.6, 400) - 0.1
    cfg = SearchConfig(curve_resolution=2000, grid_density=4)
    base = fit("eysm-redist", EmpiricalDistribution(wt, nw), cfg).theta_opt
    for a, b in ((1024.0, 1.0), (1.0, 3.7e5), (0.25, 12.0)):
        th = fit("eysm-redist", EmpiricalDistribution(wt * a, nw * b), cfg).theta_opt
        assert th.chi == pytest.approx(base.chi, abs=2e-5)
