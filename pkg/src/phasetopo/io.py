"""Text formats for panels, edge lists, filters, reports and sweeps.

Node labels in every text format are 1-based; the Python API is 0-based.
Floats are written with ``repr``-level precision unless noted, so files
round-trip exactly.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from .dynamics import DiscreteModel, TimeSeriesPanel
from .errors import TopologyError
from .graphs import Edge, edge
from .wiener import FilterBank


class DataFormatError(TopologyError, ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = f"{path}:" if path is not None else ""
        where += f"{line}: " if line is not None else (" " if where else "")
        super().__init__(f"{where}{message}")
        self.path = path
        self.line = line


def _g(x: float, digits: int | None = None) -> str:
    if math.isnan(x):
        return "nan"
    return repr(float(x)) if digits is None else format(float(x), f".{digits}g")


# edge lists ---------------------------------------------------------------

def format_edges(edges: Iterable[Edge]) -> str:
    """One ``"i j"`` line per edge, 1-based, ``i < j``, sorted."""
    return "".join(f"{i + 1} {j + 1}\n" for i, j in sorted(edge(a, b) for a, b in edges))


def parse_edges(text: str, path=None) -> frozenset[Edge]:
    out = set()
    for num, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            i, j = (int(p) for p in parts)
        except ValueError:
            raise DataFormatError(f"expected two integers, got {line!r}", path, num) from None
        if i < 1 or j < 1 or i == j:
            raise DataFormatError(f"invalid edge {line!r}", path, num)
        out.add(edge(i - 1, j - 1))
    return frozenset(out)


# panels -------------------------------------------------------------------

def write_panel_csv(panel: TimeSeriesPanel, path) -> None:
    # numpy's writer is much faster than a Python loop at T = 1e6
    t = np.arange(panel.T) * panel.dt
    header = "t," + ",".join(f"x{i + 1}" for i in range(panel.n))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        np.savetxt(fh, np.column_stack([t, panel.data]), fmt="%.17g", delimiter=",",
                   header=header, comments="")


def read_panel_csv(path) -> TimeSeriesPanel:
    """Parse a ``t,x1,...,xn`` file; ``dt`` comes from the time column."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
    except OSError as exc:
        raise DataFormatError(f"cannot read panel: {exc.strerror}", path) from None
    cols = header.split(",")
    if len(cols) < 2 or cols[0] != "t" or cols[1:] != [f"x{i + 1}" for i in range(len(cols) - 1)]:
        raise DataFormatError("header must be 't,x1,...,xn'", path, 1)
    try:
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, encoding="utf-8")
        if arr.shape[1] != len(cols) or not np.all(np.isfinite(arr)):
            raise ValueError
    except ValueError:
        # slow pass only to report where the file is broken
        _locate_panel_error(path, len(cols))
        raise DataFormatError("unparseable panel", path) from None
    if arr.shape[0] < 2:
        raise DataFormatError("panel needs at least two samples", path)
    steps = np.diff(arr[:, 0])
    dt = float(steps[0])
    uniform = np.isclose(steps, dt, rtol=1e-9, atol=0) & (steps > 0)
    if not np.all(uniform):
        raise DataFormatError("time column must be uniformly increasing", path,
                              int(np.argmin(uniform)) + 3)
    return TimeSeriesPanel(arr[:, 1:], dt)


def _locate_panel_error(path, width):
    with open(path, encoding="utf-8") as fh:
        fh.readline()
        for num, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != width:
                raise DataFormatError(f"expected {width} fields, got {len(parts)}", path, num)
            try:
                values = [float(p) for p in parts]
            except ValueError:
                raise DataFormatError(f"non-numeric field in {line[:60]!r}", path, num) from None
            if not all(math.isfinite(v) for v in values):
                raise DataFormatError("non-finite value", path, num)


# filter banks -------------------------------------------------------------

def format_filter_banks(banks: Iterable[FilterBank]) -> str:
    """Per target: ``target j F gamma``, then ``i: h[-F] ... h[F]`` per source."""
    out = []
    for bank in banks:
        out.append(f"target {bank.target + 1} F {bank.F} gamma {_g(bank.gamma)}\n")
        for i in bank.sources:
            coeffs = " ".join(_g(c, 15) for c in bank.coefficients[i])
            out.append(f"{i + 1}: {coeffs}\n")
    return "".join(out)


def parse_filter_banks(text: str, n: int) -> list[FilterBank]:
    banks = []
    cur = None
    for num, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("target"):
            parts = line.split()
            try:
                j, F, gamma = int(parts[1]) - 1, int(parts[3]), float(parts[5])
            except (IndexError, ValueError):
                raise DataFormatError(f"bad target line {line!r}", line=num) from None
            cur = [j, F, gamma, np.zeros((n, 2 * F + 1))]
            banks.append(cur)
            continue
        if cur is None:
            raise DataFormatError("coefficients before any target line", line=num)
        head, _, rest = line.partition(":")
        try:
            i = int(head) - 1
            cur[3][i] = [float(v) for v in rest.split()]
        except (ValueError, IndexError):
            raise DataFormatError(f"bad coefficient line for target {cur[0] + 1}", line=num) from None
    return [FilterBank(j, F, c, g) for j, F, g, c in banks]


# inference report ---------------------------------------------------------

def format_report(report) -> str:
    p = report.params
    lines = ["[params]",
             f"rho = {_g(p.rho)}",
             f"tau = {_g(p.tau)}",
             f"lag_F = {p.F}",
             f"gamma = {_g(p.gamma)}",
             f"grid_points = {len(p.grid)}",
             f"grid_top = {_g(p.grid.omega[-1])}",
             f"detrend = {'true' if p.detrend else 'false'}",
             f"isolated = {' '.join(str(j + 1) for j in report.isolated)}",
             "",
             "[moral-edges]"]
    text = "\n".join(lines) + "\n" + format_edges(report.moral_edges)
    text += "\n[topology-edges]\n" + format_edges(report.topology_edges)
    text += "\n[pair-stats]\nj,i,sup_mag,min_absphase,max_absphase\n"
    for (j, i), st in sorted(report.pair_stats.items()):
        text += (f"{j + 1},{i + 1},{_g(st.sup_mag, 12)},{_g(st.min_absphase, 12)},"
                 f"{_g(st.max_absphase, 12)}\n")
    return text


def parse_report_sections(text: str) -> dict[str, list[str]]:
    """Raw lines of every ``[section]`` in a report."""
    sections: dict[str, list[str]] = {}
    cur = None
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            cur = sections.setdefault(s[1:-1], [])
        elif cur is not None and s:
            cur.append(s)
    return sections


# dense matrices, oracle tables and sweeps ---------------------------------

def format_matrix(M: np.ndarray) -> str:
    return "".join(",".join(_g(v, 12) for v in row) + "\n" for row in np.atleast_2d(M))


def parse_matrix(text: str, path=None) -> np.ndarray:
    rows = []
    for num, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            rows.append([float(v) for v in line.split(",")])
        except ValueError:
            raise DataFormatError(f"non-numeric entry in {line[:60]!r}", path, num) from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise DataFormatError("matrix rows must be non-empty and equally long", path)
    return np.array(rows)


def format_oracle_table(W: np.ndarray, omega: np.ndarray) -> str:
    """Rows ``j,i,omega,re,im,abs,absphase`` for every ordered pair and grid point."""
    out = ["j,i,omega,re,im,abs,absphase\n"]
    n = W.shape[0]
    for j in range(n):
        for i in range(n):
            if i == j:
                continue
            for k, w in enumerate(omega):
                z = W[j, i, k]
                out.append(f"{j + 1},{i + 1},{_g(w, 12)},{_g(z.real, 12)},{_g(z.imag, 12)},"
                           f"{_g(abs(z), 12)},{_g(abs(np.angle(z)), 12)}\n")
    return "".join(out)


def format_sweep(result) -> str:
    out = ["method,T,relative_error,pruning_effectiveness\n"]
    for r in result.rows:
        out.append(f"{r.method},{r.T},{_g(r.relative_error, 10)},{_g(r.pruning_effectiveness, 10)}\n")
    return "".join(out)


def model_hash(model: DiscreteModel) -> str:
    """SHA-256 over the discretized realization and sampling interval."""
    h = hashlib.sha256()
    for arr in (model.Ad, model.Bd, model.Cd, model.Dd, np.array([model.dt])):
        h.update(np.ascontiguousarray(arr, dtype=float).tobytes())
    return h.hexdigest()
