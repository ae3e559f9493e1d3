import math

import numpy as np
import pytest

from phasetopo.dynamics import check_stability
from phasetopo.fixtures import (FIXTURES, METHODS, SweepResult, gamma_candidates, make_fixture,
                                run_sweep, tune_gamma)
from phasetopo.graphs import adjacency, kin_sets, strict_two_hop_pairs
from phasetopo.inference import InferenceParams
from phasetopo.io import format_sweep


@pytest.mark.parametrize("name", FIXTURES)
def test_every_fixture_builds_stable(name):
    fx = make_fixture(name)
    assert check_stability(fx.model())
    assert fx.strict_spouses == strict_two_hop_pairs(fx.true_topology, fx.spec.n)
    assert fx.description


def test_unknown_fixture_and_noise_override():
    with pytest.raises(KeyError):
        make_fixture("ieee-118")
    with pytest.raises(ValueError):
        make_fixture("consensus-5", "pink")
    assert make_fixture("consensus-5", "ar1").noise.ar_coef == 0.5
    assert make_fixture("rc-5zone", "white").noise.kind == "white"


def test_consensus_five_is_a_path():
    fx = make_fixture("consensus-5")
    assert fx.true_topology == {(0, 1), (1, 2), (2, 3), (3, 4)}
    assert fx.strict_spouses == {(0, 2), (1, 3), (2, 4)}
    assert fx.noise.kind == "white" and fx.dt == 1.0
    assert fx.metadata["reconstruction"] is True


def test_rc_core_and_cycles():
    fx = make_fixture("rc-5zone")
    adj = adjacency(fx.true_topology, 5)
    assert adj[0] == {1, 2, 3, 4}
    triangles = {tuple(sorted((0, a, b))) for a in adj[0] for b in adj[a] if b in adj[0]}
    assert len(triangles) >= 3
    assert fx.dt == 60.0 and fx.noise.kind == "ar1"


def test_swing_mesh_ten():
    fx = make_fixture("swing-mesh-10")
    assert len(fx.true_topology) == 13
    assert len(fx.strict_spouses) >= 3
    assert fx.dt == 0.01 and fx.noise.kind == "ar1"
    m = fx.model()
    for j in range(10):
        kin = kin_sets(m.graph, j)
        assert kin.hop(2) <= kin.spouses


def test_panels_are_reproducible():
    fx = make_fixture("consensus-5")
    a = fx.simulate(2000, seed=1).data
    np.testing.assert_array_equal(a, fx.simulate(2000, seed=1).data)
    assert not np.array_equal(a, fx.simulate(2000, seed=2).data)
    assert fx.panel_seed(2000, 1) != fx.panel_seed(3000, 1)


def test_sweep_argument_checks():
    fx = make_fixture("consensus-path-3")
    assert run_sweep(fx, [1000, 2000], []).rows == ()
    with pytest.raises(ValueError):
        run_sweep(fx, [2000, 1000], ["dynamic"])
    with pytest.raises(ValueError):
        run_sweep(fx, [1000], ["svm"])


def test_sweep_rows_and_reproducibility():
    fx = make_fixture("rc-5zone")
    params = InferenceParams(F=5)
    a = run_sweep(fx, [5000, 20_000], METHODS, params, seed=3)
    b = run_sweep(fx, [5000, 20_000], METHODS, params, seed=3)
    assert isinstance(a, SweepResult)
    assert format_sweep(a) == format_sweep(b)
    assert [r.method for r in a.rows] == list(METHODS) * 2
    assert all(math.isnan(r.pruning_effectiveness) for r in a.rows if r.method == "glasso")
    assert len(a.errors("dynamic")) == 2


def test_sweep_trend_with_noise_aware_threshold():
    # rho = 0.05 sits above the finite-sample floor of non-kin responses
    fx = make_fixture("consensus-5")
    res = run_sweep(fx, [10_000, 100_000, 1_000_000], ["dynamic"], InferenceParams(rho=0.05))
    errs = res.errors("dynamic")
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    assert errs[-1] == 0.0


@pytest.mark.parametrize("name", ["rc-5zone", "swing-mesh-10"])
def test_error_trend_at_default_threshold(name):
    fx = make_fixture(name)
    for seed in range(3):
        errs = run_sweep(fx, [10_000, 100_000], ["dynamic"], seed=seed).errors("dynamic")
        assert errs[-1] <= errs[0]


def test_gamma_tuning_helpers():
    fx = make_fixture("consensus-path-3")
    cands = gamma_candidates(fx, 5000, 99, [0.01, 0.1], F=5)
    assert cands[0] < cands[1]
    best, table = tune_gamma(fx, 5000, cands, [100, 101], InferenceParams(F=5, rho=0.05))
    assert best in cands and set(table) == set(cands)
    with pytest.raises(ValueError):
        tune_gamma(fx, 5000, [], [100], InferenceParams())
