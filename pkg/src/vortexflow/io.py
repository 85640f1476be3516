"""State files (JSON), diagnostic traces (CSV) and emitted plot scripts.

Every write goes to a temporary file in the target directory and is then
renamed over the destination, so readers never see a partial file.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import fields as fl
from .grid import GridSpec, build_grid
from .moment import DIAGNOSTIC_COLUMNS

FORMAT_VERSION = 1
TRACE_COLUMNS = ("step", "t") + DIAGNOSTIC_COLUMNS


class StateFileError(ValueError):
    pass


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# ---------------------------------------------------------------- state files

def state_to_dict(state: fl.State) -> dict:
    s = state.grid.spec
    return {
        "format_version": FORMAT_VERSION,
        "grid": {"topology": s.topology, "nx": s.nx, "ny": s.ny, "lx": s.lx, "ly": s.ly},
        "tau": state.tau,
        "degree": state.degree,
        "ax": state.ax.ravel().tolist(),
        "ay": state.ay.ravel().tolist(),
        "u_re": state.u.real.ravel().tolist(),
        "u_im": state.u.imag.ravel().tolist(),
    }


def state_from_dict(doc: dict) -> fl.State:
    if not isinstance(doc, dict):
        raise StateFileError("state file must hold a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise StateFileError(f"unsupported format_version {doc.get('format_version')!r}")
    missing = {"grid", "tau", "degree", "ax", "ay", "u_re", "u_im"} - set(doc)
    if missing:
        raise StateFileError(f"state file lacks {', '.join(sorted(missing))}")
    try:
        grid = build_grid(GridSpec(**doc["grid"]))
    except (TypeError, ValueError) as exc:
        raise StateFileError(f"bad grid block: {exc}") from exc
    arrays = {}
    for key in ("ax", "ay", "u_re", "u_im"):
        arr = np.asarray(doc[key], dtype=float)
        if arr.ndim != 1 or arr.size != grid.node_count:
            raise StateFileError(f"{key} has {arr.size} entries, grid has {grid.node_count} nodes")
        arrays[key] = arr.reshape(grid.shape)
    # assign parts directly: u_re + 1j * u_im would turn an imaginary -0.0 into +0.0
    u = np.empty(grid.shape, dtype=complex)
    u.real, u.imag = arrays["u_re"], arrays["u_im"]
    try:
        return fl.State(grid, arrays["ax"], arrays["ay"], u,
                        tau=float(doc["tau"]), degree=int(doc["degree"]))
    except ValueError as exc:
        raise StateFileError(str(exc)) from exc


def save_state(path, state: fl.State) -> Path:
    return atomic_write(path, json.dumps(state_to_dict(state)))


def load_state(path) -> fl.State:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise StateFileError(f"{path}: invalid JSON ({exc})") from exc
    return state_from_dict(doc)


# -------------------------------------------------------------------- traces

def trace_text(steps, times, rows) -> str:
    """CSV with the frozen header; floats written with repr so a rerun
    reproduces the file byte for byte."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for step, t, row in zip(steps, times, rows):
        w.writerow([int(step), repr(float(t))] + [repr(float(v)) for v in row.as_tuple()])
    return buf.getvalue()


def write_trace(path, steps, times, rows) -> Path:
    return atomic_write(path, trace_text(steps, times, rows))


def read_trace(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        data = np.array([[float(v) for v in line] for line in reader])
    data = data.reshape(-1, len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


def write_oracle_trace(path, times, xs, functional) -> Path:
    """Columns t, re_0, im_0, ..., phi_sq with phi_sq = |Phi|^2."""
    n = xs.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"{p}_{i}" for i in range(n) for p in ("re", "im")] + ["phi_sq"])
    for t, x, val in zip(times, xs, functional):
        coords = [repr(float(c)) for xi in x for c in (xi.real, xi.imag)]
        w.writerow([repr(float(t))] + coords + [repr(2.0 * float(val))])
    return atomic_write(path, buf.getvalue())


PLOT_TEMPLATE = '''"""Plot the diagnostic trace {csv_name}."""

import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
with open(here / "{csv_name}") as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["t"]) for r in rows]
fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
axes[0].semilogy(t, [max(float(r["f_l2"]), 1e-300) for r in rows])
axes[0].set_title("||f||")
axes[1].plot(t, [float(r["energy"]) for r in rows])
axes[1].set_title("energy")
axes[2].plot(t, [float(r["min_abs_u"]) for r in rows])
axes[2].set_title("min |u|")
for ax in axes:
    ax.set_xlabel("t")
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else here / "{png_name}")
'''


def write_plot_script(path, csv_name: str) -> Path:
    png = Path(csv_name).with_suffix(".png").name
    return atomic_write(path, PLOT_TEMPLATE.format(csv_name=csv_name, png_name=png))


# ------------------------------------------------------------- reports

def _plain(value):
    if isinstance(value, np.ndarray):
        return value.ravel().tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def report_to_dict(report) -> dict:
    """SolveReport without its solution vector."""
    return _plain({"status": report.status, "iterations": report.iterations,
                   "final_residual": report.final_residual, "ratios": report.ratios,
                   "residuals": report.residuals, "extra": report.extra})


def record_to_dict(record) -> dict:
    return _plain({"abs_u": record.abs_u, "curvature": record.curvature, "f": record.f,
                   "f_l2": record.f_l2, "vortex_count": record.vortex_count,
                   "flux": record.flux})


def trajectory_to_dict(traj) -> dict:
    """Sample times, ||f|| history and the final sigma of an h-flow run."""
    return _plain({"status": traj.status, "dt": traj.dt, "steps": traj.steps,
                   "times": traj.times, "f_l2": traj.f_l2, "sigma_final": traj.sigmas[-1]})


def write_json(path, doc: dict) -> Path:
    return atomic_write(path, json.dumps(doc))
