"""Numbered acceptance criteria.

Each test records exactly one PASS/FAIL line (printed in the terminal summary)
and then asserts it.  Tolerances are the ones fixed by the specification.
Lines tagged ``[info]`` are diagnostics and never gate anything.
"""

import functools
import time

import numpy as np
import pytest
from conftest import record_acceptance

from phasetopo.baselines import empirical_covariance, graphical_lasso
from phasetopo.dynamics import detrend
from phasetopo.fixtures import evaluate_panel, gamma_candidates, make_fixture, tune_gamma
from phasetopo.graphs import relative_error
from phasetopo.inference import (DEFAULT_TAU, InferenceParams, learn_topology,
                                 spouse_pruning_effectiveness, topology_from_responses)
from phasetopo.oracle import PhaseClass, analytic_wiener, brute_force_wiener, classify_pair
from phasetopo.oracle import oracle_responses
from phasetopo.wiener import (FrequencyGrid, critical_gamma, fit_wiener_fir,
                              fit_wiener_fir_group_lasso, freq_response, group_lasso_stationarity,
                              lag_gram)

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

SEEDS = range(10)
ORACLE_FIXTURES = ("consensus-5", "rc-5zone", "swing-mesh-10")
GRIDS = {"default": FrequencyGrid.uniform(), "near-nyquist": FrequencyGrid.near_nyquist(50)}
RHO, TAU = 1e-3, 0.2 * np.pi
NOISE_AWARE_RHO = 0.05
LARGE_T, SMALL_T = 1_000_000, 10_000


def _oracle(fx, grid):
    m = fx.model()
    return oracle_responses(m, fx.noise.psd(m.n, grid.omega), grid.omega)


@functools.lru_cache(maxsize=None)
def consensus_runs(kind):
    """Per seed: reports at both sample counts and estimated responses at T = 1e6."""
    fx = make_fixture("consensus-5", kind)
    params = InferenceParams(rho=RHO, tau=TAU)
    runs, seconds = {}, []
    for seed in SEEDS:
        t0 = time.perf_counter()
        big = learn_topology(fx.simulate(LARGE_T, seed), params)
        seconds.append(time.perf_counter() - t0)
        small = learn_topology(fx.simulate(SMALL_T, seed), params)
        W = {g: np.stack([freq_response(b, grid) for b in big.banks]) for g, grid in GRIDS.items()}
        runs[seed] = {"big": big, "small": small, "W": W}
    return fx, runs, seconds


def _estimation_consistency(kind):
    fx, runs, seconds = consensus_runs(kind)
    errs = {g: np.abs(runs[0]["W"][g] - _oracle(fx, grid)).max() for g, grid in GRIDS.items()}
    worst = max(np.abs(r["W"][g] - _oracle(fx, GRIDS[g])).max()
                for r in runs.values() for g in GRIDS)
    ok = max(errs.values()) <= 0.05 and seconds[0] < 300
    detail = (f"max|W_est - W_oracle| seed 0: default grid {errs['default']:.4f}, "
              f"near-Nyquist grid {errs['near-nyquist']:.4f} (tol 0.05); "
              f"fit {seconds[0]:.1f} s; [info] worst over 10 seeds {worst:.4f}")
    return ok, detail


def _exact_recovery(kind):
    fx, runs, seconds = consensus_runs(kind)
    truth = fx.true_topology
    big = [relative_error(r["big"].topology_edges, truth) for r in runs.values()]
    small = [relative_error(r["small"].topology_edges, truth) for r in runs.values()]
    exact = sum(e == 0 for e in big)
    monotone = all(s >= b for s, b in zip(small, big))
    aware = sum(relative_error(topology_from_responses(r["W"]["default"], NOISE_AWARE_RHO, TAU)[1],
                               truth) == 0 for r in runs.values())
    ok = exact >= 9 and monotone and sum(seconds) < 1800
    detail = (f"rho=1e-3: exact at T=1e6 in {exact}/10 seeds (need 9), errors {_fmt(big)}; "
              f"T=1e4 >= T=1e6 on every seed: {monotone}; "
              f"[info] rho={NOISE_AWARE_RHO}: exact in {aware}/10")
    return ok, detail


def _spurious_edges(kind):
    fx, runs, _ = consensus_runs(kind)
    truth, spouses = fx.true_topology, fx.strict_spouses

    def good(moral, topo):
        return moral - truth == spouses and truth <= moral and topo == truth

    hits = sum(good(r["big"].moral_edges, r["big"].topology_edges) for r in runs.values())
    extra = [len(r["big"].moral_edges - truth - spouses) for r in runs.values()]
    aware = sum(good(*topology_from_responses(r["W"]["default"], NOISE_AWARE_RHO, TAU))
                for r in runs.values())
    ok = hits >= 9
    detail = (f"rho=1e-3: moral = truth + strict spouses and pruning exact in {hits}/10 "
              f"(need 9); non-spouse extra moral edges per seed {extra}; "
              f"[info] rho={NOISE_AWARE_RHO}: {aware}/10")
    return ok, detail


def _fmt(values):
    return "[" + ", ".join(f"{v:g}" for v in values) + "]"


def test_criterion_01_oracle_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for name in ORACLE_FIXTURES:
        for kind in ("white", "ar1"):
            fx = make_fixture(name, kind)
            m = fx.model()
            for grid in GRIDS.values():
                psd = fx.noise.psd(m.n, grid.omega)
                for j in range(m.n):
                    a = analytic_wiener(m, psd, j, grid.omega).total
                    b = brute_force_wiener(m, psd, j, grid.omega)
                    worst = max(worst, np.abs(a - b).max())
    seconds = time.perf_counter() - t0
    ok = worst <= 1e-9 and seconds < 10
    record_acceptance(1, ok, f"max|analytic - brute force| = {worst:.2e} (tol 1e-9) over 3 "
                             f"fixtures x 2 noises x 2 grids; {seconds:.2f} s (< 10 s)")
    assert ok


def test_criterion_02_phase_theorems():
    t0 = time.perf_counter()
    spouse_dev, neighbor_dev, n_sp, n_nb = 0.0, 0.0, 0, 0
    for name in ORACLE_FIXTURES:
        for kind in ("white", "ar1"):
            fx = make_fixture(name, kind)
            m = fx.model()
            for grid in GRIDS.values():
                W = _oracle(fx, grid)
                for j in range(m.n):
                    for i in range(m.n):
                        if i == j:
                            continue
                        cls = classify_pair(m, i, j)
                        if cls is PhaseClass.STRICT_SPOUSE:
                            n_sp += 1
                            spouse_dev = max(spouse_dev,
                                             np.abs(np.abs(np.angle(W[j, i])) - np.pi).max())
                        elif cls is PhaseClass.NEIGHBOR:
                            n_nb += 1
                            neighbor_dev = max(neighbor_dev, abs(np.angle(W[j, i, 0])))
    seconds = time.perf_counter() - t0
    ok = spouse_dev <= 1e-9 and neighbor_dev <= 1e-9 and seconds < 10
    record_acceptance(2, ok, f"strict spouses ||angle|-pi| max {spouse_dev:.1e} ({n_sp} checks); "
                             f"neighbors |angle at 0| max {neighbor_dev:.1e} ({n_nb} checks); "
                             f"tol 1e-9; {seconds:.2f} s")
    assert ok


def test_criterion_03_estimation_consistency():
    ok, detail = _estimation_consistency("white")
    record_acceptance(3, ok, detail)
    assert ok


def test_criterion_04_exact_recovery():
    ok, detail = _exact_recovery("white")
    record_acceptance(4, ok, detail)
    assert ok


def test_criterion_05_spurious_edges():
    ok, detail = _spurious_edges("white")
    record_acceptance(5, ok, detail)
    assert ok


def test_criterion_06_static_baselines_fail_on_cycles():
    fx = make_fixture("rc-5zone")
    params = InferenceParams(rho=RHO, tau=TAU)
    errs = {m: [] for m in ("dynamic", "glasso", "glasso-sign")}
    for seed in SEEDS:
        for row in evaluate_panel(fx, fx.simulate(LARGE_T, seed), list(errs), params):
            errs[row.method].append(row.relative_error)
    static_fail = all(e > 0 for m in ("glasso", "glasso-sign") for e in errs[m])
    exact = sum(e == 0 for e in errs["dynamic"])
    ok = static_fail and exact >= 9
    record_acceptance(6, ok, f"rc-5zone T=1e6: glasso errors {_fmt(errs['glasso'])}, "
                             f"glasso-sign {_fmt(errs['glasso-sign'])} (all > 0: {static_fail}); "
                             f"dynamic exact {exact}/10 (need 9)")
    assert ok


def test_criterion_07_regularization_at_low_samples():
    fx = make_fixture("rc-5zone")
    params = InferenceParams(rho=RHO, tau=TAU)
    candidates = gamma_candidates(fx, SMALL_T, 1000, (0.003, 0.01, 0.03, 0.1, 0.3), params.F)
    best, _ = tune_gamma(fx, SMALL_T, candidates, range(1001, 1006), params)
    plain, tuned = [], []
    for seed in SEEDS:
        panel = fx.simulate(SMALL_T, seed)
        plain.append(relative_error(learn_topology(panel, params).topology_edges, fx.true_topology))
        tuned.append(relative_error(learn_topology(panel, params.with_(gamma=best)).topology_edges,
                                    fx.true_topology))
    mp, mt = float(np.mean(plain)), float(np.mean(tuned))
    ratio = f"{mt / mp:.2f}" if mp > 0 else "n/a (gamma = 0 already exact)"
    ok = mt <= mp
    record_acceptance(7, ok, f"rc-5zone T=1e4: mean error tuned gamma={best:.3g} {mt:g}% vs "
                             f"gamma=0 {mp:g}%; [info] ratio {ratio}")
    assert ok


def test_criterion_08_colored_noise():
    parts = [_estimation_consistency("ar1"), _exact_recovery("ar1"), _spurious_edges("ar1")]
    ok = all(p[0] for p in parts)
    detail = "; ".join(f"({k}) {'pass' if p[0] else 'FAIL'}: {p[1]}"
                       for k, p in zip((3, 4, 5), parts))
    record_acceptance(8, ok, "AR(1) a=0.5 " + detail)
    assert ok


def test_criterion_09_pruning_effectiveness():
    fx = make_fixture("swing-mesh-10")
    params = InferenceParams(rho=RHO, tau=TAU)
    eff, present = [], []
    for seed in SEEDS:
        rep = learn_topology(fx.simulate(LARGE_T, seed), params)
        eff.append(spouse_pruning_effectiveness(rep.moral_edges, rep.topology_edges,
                                                fx.strict_spouses))
        present.append(len(rep.moral_edges & fx.strict_spouses))
    full = sum(e == 1.0 for e in eff)
    ok = full >= 9
    record_acceptance(9, ok, f"swing-mesh-10 T=1e6: all strict-spouse false positives removed in "
                             f"{full}/10 seeds (need 9); spouse pairs present after magnitude "
                             f"test {present} of {len(fx.strict_spouses)}")
    assert ok


def test_criterion_10_solver_correctness():
    # graphical lasso without penalty on a well-conditioned covariance
    S = empirical_covariance(make_fixture("consensus-5").simulate(100_000, 0))
    inv_err = np.abs(graphical_lasso(S, 0.0).theta @ S - np.eye(len(S))).max()
    ls_diff, stat = 0.0, 0.0
    for name in ORACLE_FIXTURES:
        panel = detrend(make_fixture(name).simulate(20_000, 0))
        gram = lag_gram(panel, 20)
        for j in range(panel.n):
            ls = fit_wiener_fir(panel, j, 20, gram=gram)
            gl = fit_wiener_fir_group_lasso(panel, j, 20, 0.0, gram=gram)
            ls_diff = max(ls_diff, np.abs(gl.coefficients - ls.coefficients).max())
            crit = critical_gamma(gram, j)
            for frac in (0.01, 0.1, 0.5):
                bank = fit_wiener_fir_group_lasso(panel, j, 20, frac * crit, gram=gram)
                stat = max(stat, group_lasso_stationarity(gram, bank).max() / crit)
    ok = inv_err <= 1e-5 and ls_diff <= 1e-6 and stat <= 1e-6
    record_acceptance(10, ok, f"cond(S)={np.linalg.cond(S):.0f}: max|Theta S - I| {inv_err:.1e} "
                              f"(tol 1e-5); group lasso gamma=0 vs LS {ls_diff:.1e} (tol 1e-6); "
                              f"stationarity / critical gamma {stat:.1e} (tol 1e-6)")
    assert ok
