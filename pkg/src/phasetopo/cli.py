"""Command-line front end.

    phasetopo simulate --fixture consensus-5 --samples 100000 --seed 7 --output-dir out
    phasetopo infer --input out/panel.csv --output-dir out
    phasetopo baseline --fixture rc-5zone --samples 1000000 --output-dir out
    phasetopo oracle --fixture consensus-5 --output-dir out
    phasetopo sweep --fixture consensus-5 --samples 10000,100000 --output-dir out

Settings come from an optional ``key = value`` config file (``--config``)
overridden by flags.  Every run writes ``<command>.meta`` next to its
outputs; it is itself a config file that reproduces the run.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import (DEFAULT_EPSILON, DEFAULT_GLASSO_RHO, empirical_covariance,
                        glasso_sign_pruned_topology, glasso_topology, graphical_lasso)
from .dynamics import (DEFAULT_BURN_IN, DEFAULT_DT, NoiseSpec, PhysicalModelSpec, build_model,
                       detrend, gen_noise, simulate)
from .errors import (ConvergenceError, IllConditionedError, InsufficientSamplesError,
                     UnstableModelError)
from .fixtures import FIXTURES, METHODS, make_fixture, run_sweep
from .graphs import relative_error, spouse_pairs, topology_of
from .inference import (DEFAULT_RHO, DEFAULT_TAU, InferenceParams, learn_topology,
                        pair_statistics, topology_from_responses)
from .io import (DataFormatError, format_edges, format_filter_banks, format_matrix,
                 format_oracle_table, format_report, format_sweep, model_hash, parse_matrix,
                 read_panel_csv, write_panel_csv)
from .oracle import classify_pair, oracle_responses
from .wiener import DEFAULT_F, GRID_POINTS, GRID_TOP, FrequencyGrid

log = logging.getLogger("phasetopo")

COMMANDS = ("simulate", "infer", "baseline", "oracle", "sweep")
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text):
    out = []
    for v in str(text).split(","):
        if v.strip():
            x = float(v)
            if x != int(x):
                raise ValueError(f"not an integer: {v!r}")
            out.append(int(x))
    return out


def _names(text):
    return [v.strip() for v in str(text).split(",") if v.strip()]


# key -> (parser, default); None means "not set"
KEYS = {
    "fixture": (str, None),
    "input": (str, None),
    "output_dir": (str, None),
    "samples": (_ints, None),
    "seed": (int, 0),
    "rho": (float, DEFAULT_RHO),
    "tau": (float, DEFAULT_TAU),
    "lag_F": (int, DEFAULT_F),
    "gamma": (float, 0.0),
    "grid_points": (int, GRID_POINTS),
    "grid_top": (float, GRID_TOP),
    "detrend": (_bool, True),
    "method": (_names, None),
    "noise": (str, None),
    "noise_variance": (_floats, None),
    "ar_coef": (float, None),
    "glasso_rho": (float, DEFAULT_GLASSO_RHO),
    "epsilon": (float, DEFAULT_EPSILON),
    "burn_in": (int, DEFAULT_BURN_IN),
    "family": (str, None),
    "coupling": (str, None),
    "capacitance": (_floats, None),
    "inertia": (_floats, None),
    "damping": (_floats, None),
    "ground": (_floats, None),
    "dt": (float, None),
    "quiet": (_bool, False),
}


def _norm_key(key):
    key = key.strip().replace("-", "_")
    return "lag_F" if key.lower() == "lag_f" else key


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    raw = {}
    for num, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = _norm_key(key)
        if not sep:
            raise UsageError(f"{path}:{num}: expected 'key = value'")
        if key not in KEYS:
            raise UsageError(f"{path}:{num}: unknown key {key!r}")
        raw[key] = value.strip()
    return raw


@dataclass
class RunConfig:
    command: str
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key):
        return self.values.get(key)


def _parse_values(raw: dict) -> dict:
    values = {k: d for k, (_, d) in KEYS.items()}
    for key, text in raw.items():
        parser, _ = KEYS[key]
        if text == "" and key in ("input", "fixture", "method", "noise"):
            values[key] = None
            continue
        try:
            values[key] = parser(text)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid value for {key}: {text!r} ({exc})") from None
    return values


def _params(cfg: RunConfig) -> InferenceParams:
    try:
        grid = FrequencyGrid.uniform(cfg["grid_points"], cfg["grid_top"])
        return InferenceParams(cfg["rho"], cfg["tau"], grid, cfg["lag_F"], cfg["gamma"],
                               cfg["detrend"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _fixture(cfg):
    name = cfg.get("fixture")
    if name is None:
        return None
    try:
        return make_fixture(name, cfg.get("noise"))
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc).strip("'\"")) from None


def _model_and_noise(cfg, fixture):
    """Model, noise spec and truth from a fixture or the explicit model keys."""
    if fixture is not None:
        noise = fixture.noise
        if cfg.get("noise_variance") is not None or cfg.get("ar_coef") is not None:
            noise = _noise_from(cfg, noise)
        return fixture.model(), noise, fixture.true_topology, fixture
    if cfg.get("family") is None:
        raise UsageError("need --fixture or an explicit model (family, coupling, ...)")
    if cfg.get("coupling") is None:
        raise UsageError("explicit models need a coupling matrix file")
    try:
        coupling = parse_matrix(Path(cfg["coupling"]).read_text(encoding="utf-8"), cfg["coupling"])
    except OSError as exc:
        raise UsageError(f"cannot read coupling matrix: {exc.strerror}") from None
    try:
        spec = PhysicalModelSpec(cfg["family"], coupling, cfg.get("capacitance"),
                                 cfg.get("inertia"), cfg.get("damping"), cfg.get("ground"))
        dt = cfg.get("dt") or DEFAULT_DT[spec.family]
        model = build_model(spec, dt)
        noise = _noise_from(cfg, NoiseSpec())
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return model, noise, topology_of(model.graph), None


def _noise_from(cfg, base: NoiseSpec) -> NoiseSpec:
    kind = cfg.get("noise") or base.kind
    var = cfg.get("noise_variance")
    var = base.variance if var is None else (var[0] if len(var) == 1 else np.array(var))
    a = cfg.get("ar_coef")
    if a is None:
        a = base.ar_coef if kind == "ar1" and base.kind == "ar1" else (0.5 if kind == "ar1" else 0.0)
    return NoiseSpec(kind, var, a, base.seed)


def _first_samples(cfg):
    s = cfg.get("samples")
    if not s:
        raise UsageError("--samples is required")
    if any(T <= 0 for T in s):
        raise UsageError("sample counts must be positive")
    return s[0]


def _load_panel(cfg):
    if cfg.get("input") is not None:
        return read_panel_csv(cfg["input"]), None
    fixture = _fixture(cfg)
    if fixture is None:
        raise UsageError("need --input or --fixture with --samples")
    T = _first_samples(cfg)
    log.info("simulating %s, T = %d, seed %d", fixture.name, T, cfg["seed"])
    return fixture.simulate(T, cfg["seed"], cfg["burn_in"]), fixture


def _seeded(noise: NoiseSpec, seed: int) -> NoiseSpec:
    return NoiseSpec(noise.kind, noise.variance, noise.ar_coef, seed)


# commands -------------------------------------------------------------------

def cmd_simulate(cfg):
    fixture = _fixture(cfg)
    T = _first_samples(cfg)
    model, noise, truth, fixture = _model_and_noise(cfg, fixture)
    log.info("simulating T = %d samples, dt = %g", T, model.dt)
    if fixture is not None and noise is fixture.noise:
        panel = fixture.simulate(T, cfg["seed"], cfg["burn_in"])
    else:
        seed = int(np.random.SeedSequence([noise.seed, T, cfg["seed"]]).generate_state(1)[0])
        panel = simulate(model, gen_noise(_seeded(noise, seed), T + cfg["burn_in"], model.n, model.dt),
                         cfg["burn_in"], T)
    return {"panel.csv": panel, "truth.txt": format_edges(truth)}, {
        "model_hash": model_hash(model), "dt": repr(model.dt), "samples": str(T)}


def cmd_infer(cfg):
    params = _params(cfg)
    panel, fixture = _load_panel(cfg)
    log.info("fitting %d filter banks (T = %d, F = %d, gamma = %g)", panel.n, panel.T,
             params.F, params.gamma)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = learn_topology(panel, params)
    for w in caught:
        log.warning("%s", w.message)
    outputs = {"report.txt": format_report(report),
               "edges.txt": format_edges(report.topology_edges),
               "filters.txt": format_filter_banks(report.banks)}
    meta = {"samples_used": str(panel.T), "dt": repr(panel.dt)}
    if fixture is not None:
        meta["relative_error"] = repr(relative_error(report.topology_edges, fixture.true_topology))
    return outputs, meta


def cmd_baseline(cfg):
    methods = cfg.get("method") or ["glasso", "glasso-sign"]
    for m in methods:
        if m not in ("glasso", "glasso-sign"):
            raise UsageError(f"baseline method must be glasso or glasso-sign, got {m!r}")
    if not cfg["epsilon"] > 0 or cfg["glasso_rho"] < 0:
        raise UsageError("epsilon must be positive and glasso_rho nonnegative")
    panel, fixture = _load_panel(cfg)
    if cfg["detrend"]:
        panel = detrend(panel)
    est = graphical_lasso(empirical_covariance(panel), cfg["glasso_rho"])
    edges = {"glasso": glasso_topology(est, cfg["epsilon"]),
             "glasso-sign": glasso_sign_pruned_topology(est, cfg["epsilon"])}
    outputs = {"theta.csv": format_matrix(est.theta)}
    summary = ["method,edges,relative_error"]
    for m in methods:
        outputs[f"edges-{m}.txt"] = format_edges(edges[m])
        err = relative_error(edges[m], fixture.true_topology) if fixture is not None else math.nan
        summary.append(f"{m},{len(edges[m])},{err!r}")
    outputs["summary.txt"] = "\n".join(summary) + "\n"
    return outputs, {"sweeps": str(est.iterations), "kkt": repr(est.kkt)}


def cmd_oracle(cfg):
    params = _params(cfg)
    model, noise, truth, _ = _model_and_noise(cfg, _fixture(cfg))
    omega = params.grid.omega
    W = oracle_responses(model, noise.psd(model.n, omega), omega)
    moral, topo = topology_from_responses(W, params.rho, params.tau)
    stats = pair_statistics(W)
    rows = ["j,i,class,sup_mag,min_absphase,max_absphase"]
    for (j, i), st in sorted(stats.items()):
        rows.append(f"{j + 1},{i + 1},{classify_pair(model, i, j).value},{st.sup_mag:.12g},"
                    f"{st.min_absphase:.12g},{st.max_absphase:.12g}")
    return {"oracle.csv": format_oracle_table(W, omega),
            "oracle-pairs.csv": "\n".join(rows) + "\n",
            "oracle-moral-edges.txt": format_edges(moral),
            "oracle-topology-edges.txt": format_edges(topo),
            "true-moral-edges.txt": format_edges(truth | spouse_pairs(model.graph)),
            "truth.txt": format_edges(truth)}, {"model_hash": model_hash(model)}


def cmd_sweep(cfg):
    params = _params(cfg)
    fixture = _fixture(cfg)
    if fixture is None:
        raise UsageError("sweep needs --fixture")
    counts = cfg.get("samples")
    if not counts:
        raise UsageError("--samples is required (comma-separated counts)")
    methods = cfg.get("method") or list(METHODS)
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}; expected one of {', '.join(METHODS)}")
    if "dynamic-gl" in methods and params.gamma == 0:
        log.warning("dynamic-gl with gamma = 0 is plain least squares")
    try:
        result = run_sweep(fixture, counts, methods, params, cfg["seed"], cfg["glasso_rho"],
                           cfg["epsilon"])
    except ValueError as exc:
        if "ascending" in str(exc):
            raise UsageError(str(exc)) from None
        raise
    return {"sweep.csv": format_sweep(result)}, {}


HANDLERS = {"simulate": cmd_simulate, "infer": cmd_infer, "baseline": cmd_baseline,
            "oracle": cmd_oracle, "sweep": cmd_sweep}


# plumbing -------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="phasetopo", description="Network topology from nodal time series.")
    p.add_argument("--version", action="version", version=f"phasetopo {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config")
    p.add_argument("--input")
    p.add_argument("--output-dir")
    p.add_argument("--fixture", help=f"one of: {', '.join(FIXTURES)}")
    p.add_argument("--samples", help="sample count, or comma-separated counts for sweep")
    p.add_argument("--seed")
    p.add_argument("--rho")
    p.add_argument("--tau")
    p.add_argument("--lag-F", dest="lag_F")
    p.add_argument("--gamma")
    p.add_argument("--grid-points")
    p.add_argument("--method")
    p.add_argument("--quiet", action="store_true", default=None)
    return p


def resolve_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    raw = read_config(args.config) if args.config else {}
    for key in ("input", "output_dir", "fixture", "samples", "seed", "rho", "tau", "lag_F",
                "gamma", "grid_points", "method"):
        v = getattr(args, key)
        if v is not None:
            raw[key] = v
    if args.quiet:
        raw["quiet"] = "true"
    values = _parse_values(raw)
    if values["output_dir"] is None:
        raise UsageError("--output-dir is required")
    return RunConfig(args.command, values)


def _format_value(key, value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_sidecar(cfg: RunConfig, meta: dict, files) -> str:
    lines = [f"# phasetopo {cfg.command}"]
    lines += [f"# {k}: {v}" for k, v in meta.items()]
    lines += [f"# output: {name}" for name in files]
    for key in KEYS:
        value = cfg.values.get(key)
        if value is not None:
            lines.append(f"{key} = {_format_value(key, value)}")
    return "\n".join(lines) + "\n"


def _write_outputs(cfg, outputs, meta):
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    for name, content in outputs.items():
        if isinstance(content, str):
            (out / name).write_text(content, encoding="utf-8", newline="\n")
        else:
            write_panel_csv(content, out / name)
    (out / f"{cfg.command}.meta").write_text(format_sidecar(cfg, meta, outputs), encoding="utf-8")


def main(argv=None) -> int:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("phasetopo: %(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    log.setLevel(logging.INFO)
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else argv)
        if cfg["quiet"]:
            log.setLevel(logging.WARNING)
        outputs, meta = HANDLERS[cfg.command](cfg)
        _write_outputs(cfg, outputs, meta)
        log.info("wrote %s", ", ".join(sorted(outputs)))
        return EXIT_OK
    except UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (ConvergenceError, UnstableModelError, IllConditionedError, ZeroDivisionError,
            np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (DataFormatError, InsufficientSamplesError, OSError, ValueError) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
