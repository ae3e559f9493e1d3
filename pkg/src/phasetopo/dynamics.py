"""Linear network models, Tustin discretization, noise and simulation.

Three physical families share the node equation

    sum_m a_{m,i} d^m x_i/dt^m = sum_j b_ij (x_j - x_i) - g_i x_i + p_i

where ``g_i >= 0`` is an optional leak to a fixed reference (ground, outdoor
air, infinite bus).  Without it every connected network has a pole at
``s = 0`` and the nodal states are not stationary.

* ``consensus``: ``a_1 = 1``; ``coupling`` gives ``b`` directly.
* ``rc-thermal``: ``C_i dT_i/dt = sum_j (T_j - T_i)/R_ij + ...``; dividing by
  ``C_i`` gives ``a_1 = 1``, ``b_ij = 1/(R_ij C_i)`` and ``g_i / C_i``.
  Noise panels are injected in this per-capacitance form.
* ``swing``: ``a_2 = M_i``, ``a_1 = D_i``; states are angle and speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.polynomial.polynomial as P
from scipy import signal

from .errors import InsufficientSamplesError, UnstableModelError
from .graphs import GenerativeGraph

FAMILIES = ("consensus", "rc-thermal", "swing")

STABILITY_MARGIN = 1e-6
DEFAULT_BURN_IN = 10_000
DEFAULT_DT = {"consensus": 1.0, "rc-thermal": 60.0, "swing": 0.01}


@dataclass(frozen=True)
class PhysicalModelSpec:
    family: str
    coupling: np.ndarray
    capacitance: np.ndarray | None = None
    inertia: np.ndarray | None = None
    damping: np.ndarray | None = None
    ground: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        c = np.array(self.coupling, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("coupling must be a square matrix")
        if not np.allclose(c, c.T, rtol=0, atol=0):
            raise ValueError("coupling must be symmetric")
        if np.any(np.diag(c) != 0) or np.any(c < 0):
            raise ValueError("coupling must be nonnegative with a zero diagonal")
        object.__setattr__(self, "coupling", c)
        n = c.shape[0]

        def vec(name, value, default, strict):
            if value is None:
                if default is None:
                    raise ValueError(f"{self.family} models require {name}")
                value = default
            v = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
            bad = (v <= 0) if strict else (v < 0)
            if np.any(bad) or not np.all(np.isfinite(v)):
                kind = "positive" if strict else "nonnegative"
                raise ValueError(f"{name} must be {kind}")
            return v

        object.__setattr__(self, "ground", vec("ground", self.ground, 0.0, strict=False))
        if self.family == "rc-thermal":
            object.__setattr__(self, "capacitance", vec("capacitance", self.capacitance, None, True))
        if self.family == "swing":
            object.__setattr__(self, "inertia", vec("inertia", self.inertia, None, True))
            object.__setattr__(self, "damping", vec("damping", self.damping, None, False))

    @property
    def n(self) -> int:
        return self.coupling.shape[0]


@dataclass(frozen=True)
class DiscreteModel:
    """Tustin-discretized network.

    ``graph.b`` holds the effective gains ``b_ij``, ``graph.node_dynamics``
    the coefficients ``a_{m,i}`` (index ``m-1``) and ``ground`` the leak
    ``g_i``.  ``(Ad, Bd, Cd, Dd)`` realize ``X = (diag(S) - B)^{-1} P``.
    """

    family: str
    dt: float
    graph: GenerativeGraph
    ground: np.ndarray
    Ad: np.ndarray = field(repr=False)
    Bd: np.ndarray = field(repr=False)
    Cd: np.ndarray = field(repr=False)
    Dd: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def b(self) -> np.ndarray:
        return self.graph.b

    @property
    def order(self) -> int:
        return len(self.graph.node_dynamics[0])

    @property
    def total_gain(self) -> np.ndarray:
        """``S_i(z=1) = sum_j b_ij + g_i``."""
        return self.b.sum(axis=1) + self.ground

    def s_polynomials(self) -> tuple[np.ndarray, np.ndarray]:
        """Numerator rows and common denominator of ``S_i`` in powers of ``z^-1``.

        Substituting ``s = (2/dt)(1 - z^-1)/(1 + z^-1)`` and clearing
        ``(1 + z^-1)^l`` gives ``S_i = num_i(z^-1) / (1 + z^-1)^l``.
        """
        l = self.order
        k = 2.0 / self.dt
        minus, plus = np.array([1.0, -1.0]), np.array([1.0, 1.0])
        den = P.polypow(plus, l)
        num = np.zeros((self.n, l + 1))
        for i in range(self.n):
            acc = self.total_gain[i] * den
            for m, a in enumerate(self.graph.node_dynamics[i], start=1):
                term = a * k**m * P.polymul(P.polypow(minus, m), P.polypow(plus, l - m))
                acc = P.polyadd(acc, term)
            num[i, : len(acc)] = acc
        return num, den

    def S(self, omega) -> np.ndarray:
        """``S_i(e^{j omega})`` with shape ``(n, len(omega))``."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        q = np.exp(-1j * omega)
        num, den = self.s_polynomials()
        d = P.polyval(q, den)
        return np.array([P.polyval(q, row) for row in num]) / d

    def H(self, omega) -> np.ndarray:
        """``H(e^{j omega})`` with shape ``(len(omega), n, n)``; ``H_ij = b_ij / S_i``."""
        s = self.S(omega)
        return self.b[None, :, :] / s.T[:, :, None]

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.Ad))))


def build_model(spec: PhysicalModelSpec, dt: float) -> DiscreteModel:
    if not dt > 0:
        raise ValueError(f"sampling interval must be positive, got {dt}")
    n = spec.n
    if spec.family == "swing":
        b = spec.coupling.copy()
        ground = spec.ground.copy()
        dyn = tuple(np.array([d, m]) for d, m in zip(spec.damping, spec.inertia))
    else:
        scale = spec.capacitance if spec.family == "rc-thermal" else np.ones(n)
        b = spec.coupling / scale[:, None]
        ground = spec.ground / scale
        dyn = tuple(np.array([1.0]) for _ in range(n))
    graph = GenerativeGraph(b, dyn)

    stiffness = np.diag(b.sum(axis=1) + ground) - b
    if spec.family == "swing":
        minv = np.diag(1.0 / spec.inertia)
        A = np.block([
            [np.zeros((n, n)), np.eye(n)],
            [-minv @ stiffness, -minv @ np.diag(spec.damping)],
        ])
        B = np.vstack([np.zeros((n, n)), minv])
        C = np.hstack([np.eye(n), np.zeros((n, n))])
    else:
        A, B, C = -stiffness, np.eye(n), np.eye(n)
    Ad, Bd, Cd, Dd, _ = signal.cont2discrete((A, B, C, np.zeros((n, n))), dt, method="bilinear")
    return DiscreteModel(spec.family, float(dt), graph, ground, Ad, Bd, Cd, Dd)


def check_stability(model: DiscreteModel, margin: float = STABILITY_MARGIN) -> bool:
    return model.spectral_radius() <= 1.0 - margin


@dataclass(frozen=True)
class NoiseSpec:
    """Exogenous input: white, or AR(1) ``p(k) = a p(k-1) + w(k)``.

    ``variance`` is the variance of the white driving sequence ``w``.
    """

    kind: str = "white"
    variance: float | np.ndarray = 1.0
    ar_coef: float | np.ndarray = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("white", "ar1"):
            raise ValueError(f"noise kind must be 'white' or 'ar1', got {self.kind!r}")
        if np.any(np.asarray(self.variance) <= 0):
            raise ValueError("noise variance must be positive")
        if np.any(np.abs(np.asarray(self.ar_coef)) >= 1):
            raise ValueError("AR coefficient must satisfy |a| < 1")

    def per_node(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        var = np.broadcast_to(np.asarray(self.variance, dtype=float), (n,))
        a = np.broadcast_to(np.asarray(self.ar_coef, dtype=float), (n,))
        if self.kind == "white":
            a = np.zeros(n)
        return var, a

    def psd(self, n: int, omega) -> np.ndarray:
        """PSD of each channel on ``omega``; shape ``(n, len(omega))``."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        var, a = self.per_node(n)
        gain = np.abs(1.0 - a[:, None] * np.exp(-1j * omega)[None, :]) ** 2
        return var[:, None] / gain


@dataclass(frozen=True)
class TimeSeriesPanel:
    """``T x n`` samples of the nodal states at interval ``dt``."""

    data: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] == 0:
            raise ValueError("panel data must be a non-empty T x n array")
        if not np.all(np.isfinite(data)):
            raise ValueError("panel data contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]


def gen_noise(spec: NoiseSpec, T: int, n: int, dt: float = 1.0) -> TimeSeriesPanel:
    if T <= 0:
        raise ValueError("T must be positive")
    var, a = spec.per_node(n)
    rng = np.random.default_rng(spec.seed)
    w = rng.standard_normal((T, n)) * np.sqrt(var)
    if spec.kind == "ar1":
        # start each channel from its stationary distribution
        p0 = rng.standard_normal(n) * np.sqrt(var / (1.0 - a**2))
        for i in range(n):
            w[:, i] = signal.lfilter([1.0], [1.0, -a[i]], w[:, i], zi=[a[i] * p0[i]])[0]
    return TimeSeriesPanel(w, dt)


def _propagate(Ad, Bd, Cd, Dd, u):
    """Run the state recursion from zero state, using modal coordinates when safe."""
    lam, V = np.linalg.eig(Ad)
    if np.linalg.cond(V) < 1e8:
        Vi = np.linalg.inv(V)
        w = u @ (Vi @ Bd).T
        z = np.empty(w.shape, dtype=complex)
        for m in range(len(lam)):
            z[:, m] = signal.lfilter([0.0, 1.0], [1.0, -lam[m]], w[:, m])
        y = (z @ (Cd @ V).T).real
    else:
        _, y, _ = signal.dlsim((Ad, Bd, Cd, np.zeros_like(Dd), 1.0), u)
    return y + u @ Dd.T


def simulate(model: DiscreteModel, noise: TimeSeriesPanel, burn_in: int = DEFAULT_BURN_IN,
             T: int | None = None) -> TimeSeriesPanel:
    """Drive the model with ``noise`` from zero state and drop ``burn_in`` samples."""
    if not check_stability(model):
        raise UnstableModelError(
            f"spectral radius {model.spectral_radius():.9f} exceeds 1 - {STABILITY_MARGIN:g}")
    if noise.n != model.n:
        raise ValueError(f"noise has {noise.n} channels, model has {model.n}")
    if T is None:
        T = noise.T - burn_in
    if burn_in < 0 or T <= 0 or noise.T < burn_in + T:
        raise InsufficientSamplesError(
            f"need {burn_in} + {T} noise samples, got {noise.T}")
    y = _propagate(model.Ad, model.Bd, model.Cd, model.Dd, noise.data[: burn_in + T])
    return TimeSeriesPanel(y[burn_in:], model.dt)


def detrend(panel: TimeSeriesPanel) -> TimeSeriesPanel:
    """Remove the least-squares affine trend from every channel."""
    if panel.T < 2:
        raise ValueError("detrending needs at least two samples")
    return TimeSeriesPanel(signal.detrend(panel.data, axis=0, type="linear"), panel.dt)


def stationary_covariance(model: DiscreteModel, noise: NoiseSpec) -> np.ndarray:
    """Exact lag-0 covariance of the simulated outputs.

    AR(1) inputs are folded into an augmented state ``[x_k, p_{k-1}]``.
    """
    from scipy.linalg import solve_discrete_lyapunov

    n = model.n
    var, a = noise.per_node(n)
    Q = np.diag(var)
    nx = model.Ad.shape[0]
    A = np.block([
        [model.Ad, model.Bd * a[None, :]],
        [np.zeros((n, nx)), np.diag(a)],
    ])
    B = np.vstack([model.Bd, np.eye(n)])
    C = np.hstack([model.Cd, model.Dd * a[None, :]])
    X = solve_discrete_lyapunov(A, B @ Q @ B.T)
    return C @ X @ C.T + model.Dd @ Q @ model.Dd.T
