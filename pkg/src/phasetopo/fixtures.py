"""Canonical network fixtures and sample-count sweeps.

Every fixture is built from committed constants.  Its panels are drawn with
seeds derived from ``(fixture seed, T, run seed)`` so a sweep point can be
recomputed on its own.  All methods at one sweep point see the same panel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .baselines import (DEFAULT_EPSILON, DEFAULT_GLASSO_RHO, empirical_covariance,
                        glasso_sign_pruned_topology, glasso_topology, graphical_lasso)
from .dynamics import (DEFAULT_BURN_IN, DEFAULT_DT, DiscreteModel, NoiseSpec,
                       PhysicalModelSpec, TimeSeriesPanel, build_model, detrend, gen_noise,
                       simulate)
from .graphs import bidirected, relative_error, spouse_pairs, strict_two_hop_pairs, topology_of
from .inference import (InferenceParams, learn_topology, pruning_effectiveness,
                        spouse_pruning_effectiveness)
from .wiener import critical_gamma, lag_gram

METHODS = ("dynamic", "dynamic-gl", "glasso", "glasso-sign")
AR_COEF = 0.5


@dataclass(frozen=True)
class Fixture:
    """A network, its input noise and the ground truth used for scoring.

    ``strict_spouses`` are the spouse pairs that are not also neighbors,
    i.e. the false positives the magnitude test is expected to produce.
    """

    name: str
    spec: PhysicalModelSpec
    noise: NoiseSpec
    dt: float
    true_topology: frozenset
    strict_spouses: frozenset
    seed: int
    description: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    def model(self) -> DiscreteModel:
        return build_model(self.spec, self.dt)

    def panel_seed(self, T: int, seed: int = 0) -> int:
        return int(np.random.SeedSequence([self.seed, int(T), int(seed)]).generate_state(1)[0])

    def simulate(self, T: int, seed: int = 0, burn_in: int = DEFAULT_BURN_IN) -> TimeSeriesPanel:
        """``T`` samples driven by noise seeded from ``(self.seed, T, seed)``."""
        noise = NoiseSpec(self.noise.kind, self.noise.variance, self.noise.ar_coef,
                          self.panel_seed(T, seed))
        return simulate(self.model(), gen_noise(noise, T + burn_in, self.spec.n, self.dt),
                        burn_in, T)


def _path(n, gain):
    return bidirected(n, [(k, k + 1, gain) for k in range(n - 1)])


def _consensus(n, gain, seed, description, reconstruction=False):
    spec = PhysicalModelSpec("consensus", _path(n, gain), ground=0.2 * gain)
    return spec, NoiseSpec("white", 1.0, 0.0, seed), description, {"reconstruction": reconstruction}


def _rc_5zone(seed):
    # zone 0 is the core; conductances in W/K, capacitances in J/K.  Weak
    # envelope leaks leave a strong common mode, the regime in which static
    # partial correlations lose the sign structure of the cycles.
    core = [23e3, 34e3, 14e3, 35e3]
    ring = {(1, 2): 18e3, (2, 3): 19e3, (3, 4): 36e3, (1, 4): 29e3}
    edges = [(0, k + 1, g) for k, g in enumerate(core)] + [(a, b, g) for (a, b), g in ring.items()]
    spec = PhysicalModelSpec(
        "rc-thermal", bidirected(5, edges),
        capacitance=[7.8e5, 5.6e5, 3.0e5, 8.3e5, 8.1e5],
        ground=[700.0, 1400.0, 6300.0, 7000.0, 6600.0],
    )
    description = ("core zone 1 linked to perimeter zones 2-5, perimeter ring "
                   "closing four three-node cycles through the core")
    noise = NoiseSpec("ar1", np.array([0.3, 1.0, 1.4, 2.7, 0.7]), AR_COEF, seed)
    return spec, noise, description, {}


_SWING10_LINES = [(0, 1, 401), (1, 2, 474), (2, 3, 745), (3, 4, 639), (4, 5, 405),
                  (5, 6, 568), (6, 7, 590), (7, 8, 437), (8, 9, 713), (9, 0, 415),
                  (0, 5, 548), (2, 7, 608), (3, 8, 567)]
_SWING10_M = [0.0319, 0.034, 0.0369, 0.0278, 0.0328, 0.0334, 0.028, 0.024, 0.0371, 0.028]
_SWING10_D = [1.88, 2.4, 2.13, 2.02, 2.3, 1.63, 2.24, 1.94, 1.68, 2.19]


def _swing(lines, n, inertia, damping, seed, description):
    b = bidirected(n, lines)
    spec = PhysicalModelSpec("swing", b, inertia=inertia, damping=damping,
                             ground=0.1 * b.sum(axis=1))
    return spec, NoiseSpec("ar1", 1.0, AR_COEF, seed), description, {}


def _swing39(seed):
    n = 39
    rng = np.random.default_rng(39)
    pairs = [(k, (k + 1) % n) for k in range(n)] + [(k, (k + 9) % n) for k in range(0, n, 4)]
    lines = [(a, b, float(np.round(w))) for (a, b), w in zip(pairs, rng.uniform(360, 840, len(pairs)))]
    M = np.round(0.03 * rng.uniform(0.8, 1.25, n), 4)
    D = np.round(2.0 * rng.uniform(0.8, 1.25, n), 2)
    return _swing(lines, n, M, D, seed, "39-node ring with ten chords (long-running)")


def _builders():
    return {
        "consensus-5": lambda: _consensus(
            5, 4.0, 1,
            "path 1-2-3-4-5, reconstruction of the five-node consensus example",
            reconstruction=True),
        "consensus-path-3": lambda: _consensus(3, 4.0, 3, "path 1-2-3"),
        "consensus-pair-2": lambda: _consensus(2, 4.0, 2, "single edge 1-2"),
        "rc-5zone": lambda: _rc_5zone(5),
        "swing-mesh-10": lambda: _swing(_SWING10_LINES, 10, _SWING10_M, _SWING10_D, 10,
                                        "10-bus ring with three chords"),
        "swing-mesh-39": lambda: _swing39(39),
    }


FIXTURES = tuple(_builders())


def make_fixture(name: str, noise_kind: str | None = None) -> Fixture:
    """Build a named fixture.

    Parameters
    ----------
    name : str
        One of :data:`FIXTURES`.
    noise_kind : {"white", "ar1"}, optional
        Override the fixture's input noise; ``"ar1"`` uses ``a = 0.5``.
    """
    builders = _builders()
    if name not in builders:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}")
    spec, noise, description, meta = builders[name]()
    if noise_kind is not None:
        if noise_kind not in ("white", "ar1"):
            raise ValueError(f"noise kind must be 'white' or 'ar1', got {noise_kind!r}")
        noise = NoiseSpec(noise_kind, noise.variance, AR_COEF if noise_kind == "ar1" else 0.0,
                          noise.seed)
    dt = DEFAULT_DT[spec.family]
    model = build_model(spec, dt)
    truth = topology_of(model.graph)
    strict = spouse_pairs(model.graph) - truth
    if strict != strict_two_hop_pairs(truth, spec.n):
        raise RuntimeError(f"fixture {name}: spouse pairs disagree with the two-hop structure")
    return Fixture(name, spec, noise, dt, truth, strict, noise.seed, description, meta)


@dataclass(frozen=True)
class SweepRow:
    method: str
    T: int
    relative_error: float
    pruning_effectiveness: float
    spouse_pruning_effectiveness: float = math.nan


@dataclass(frozen=True)
class SweepResult:
    fixture: str
    counts: tuple[int, ...]
    rows: tuple[SweepRow, ...]

    def errors(self, method: str) -> list[float]:
        return [r.relative_error for r in self.rows if r.method == method]


def evaluate_panel(fixture: Fixture, panel: TimeSeriesPanel, methods: Sequence[str],
                   params: InferenceParams, glasso_rho: float = DEFAULT_GLASSO_RHO,
                   epsilon: float = DEFAULT_EPSILON) -> list[SweepRow]:
    """Score each method on one panel."""
    truth = fixture.true_topology
    rows = []
    cov = None
    for method in methods:
        if method in ("dynamic", "dynamic-gl"):
            p = params if method == "dynamic-gl" else params.with_(gamma=0.0)
            rep = learn_topology(panel, p)
            rows.append(SweepRow(
                method, panel.T, relative_error(rep.topology_edges, truth),
                pruning_effectiveness(rep.moral_edges, rep.topology_edges, truth),
                spouse_pruning_effectiveness(rep.moral_edges, rep.topology_edges,
                                             fixture.strict_spouses)))
        elif method in ("glasso", "glasso-sign"):
            if cov is None:
                cov = empirical_covariance(detrend(panel))
                est = graphical_lasso(cov, glasso_rho)
                plain = glasso_topology(est, epsilon)
                signed = glasso_sign_pruned_topology(est, epsilon)
            if method == "glasso":
                rows.append(SweepRow(method, panel.T, relative_error(plain, truth), math.nan))
            else:
                rows.append(SweepRow(
                    method, panel.T, relative_error(signed, truth),
                    pruning_effectiveness(plain, signed, truth),
                    spouse_pruning_effectiveness(plain, signed, fixture.strict_spouses)))
        else:
            raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return rows


def run_sweep(fixture: Fixture, sample_counts: Iterable[int], methods: Sequence[str],
              params: InferenceParams | None = None, seed: int = 0,
              glasso_rho: float = DEFAULT_GLASSO_RHO,
              epsilon: float = DEFAULT_EPSILON) -> SweepResult:
    """Relative error of each method at each sample count.

    ``pruning_effectiveness`` is the fraction of false positives left by the
    first stage that the pruning stage removed (1.0 when there were none,
    NaN for plain glasso, which has no pruning stage).
    """
    params = params or InferenceParams()
    counts = tuple(int(T) for T in sample_counts)
    if any(b <= a for a, b in zip(counts, counts[1:])):
        raise ValueError("sample counts must be strictly ascending")
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")
    rows: list[SweepRow] = []
    if methods:
        for T in counts:
            rows.extend(evaluate_panel(fixture, fixture.simulate(T, seed), methods, params,
                                       glasso_rho, epsilon))
    return SweepResult(fixture.name, counts, tuple(rows))


def gamma_candidates(fixture: Fixture, T: int, seed: int, fractions: Sequence[float],
                     F: int) -> list[float]:
    """Group-lasso weights as fractions of the median critical weight of one panel."""
    gram = lag_gram(detrend(fixture.simulate(T, seed)), F)
    crit = float(np.median([critical_gamma(gram, j) for j in range(fixture.spec.n)]))
    return [f * crit for f in fractions]


def tune_gamma(fixture: Fixture, T: int, candidates: Sequence[float], seeds: Sequence[int],
               params: InferenceParams) -> tuple[float, dict[float, float]]:
    """Candidate with the lowest mean dynamic error over ``seeds`` (ties go to the smaller)."""
    if not candidates:
        raise ValueError("no candidate weights")
    table = {}
    for g in candidates:
        errs = [relative_error(learn_topology(fixture.simulate(T, s), params.with_(gamma=g))
                               .topology_edges, fixture.true_topology) for s in seeds]
        table[g] = float(np.mean(errs))
    best = min(sorted(table), key=lambda g: table[g])
    return best, table
