"""Command-line runner: TOML configuration, subcommands and exit codes.

    vortexflow <flow|hflow|project|picard|oracle|verify> --config PATH [--seed N] [--out DIR]

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import re
import sys
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import acceptance, gauge_ops, io, moment
from . import fields as fl
from . import oracle as orc
from .flow import FlowConfig, NonContraction, NumericalFailure, picard_solve, run_flow
from .grid import Grid, GridSpec, build_grid
from .rng import DEFAULT_SEED

log = logging.getLogger("vortexflow")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3
SUBCOMMANDS = ("flow", "hflow", "project", "picard", "oracle", "verify")
METHODS = ("euler", "imex", "picard", "hflow")
INITIAL_KINDS = ("polynomial_zeros", "constant", "file", "theta")

SCHEMA = {
    "": {"seed"},
    "grid": {"topology", "nx", "ny", "lx", "ly"},
    "physics": {"tau", "degree"},
    "initial": {"kind", "zeros", "scale", "path"},
    "flow": {"method", "dt", "t_end", "output_every", "tolerance", "max_picard_iters",
             "t0_window", "picard_steps", "picard_tol", "max_halvings"},
    "output": {"dir", "prefix", "emit_plots"},
    "oracle": {"weights", "tau", "x0", "dt", "t_end"},
    "verify": {"criteria"},
}


class ConfigError(ValueError):
    pass


@dataclass
class InitialConfig:
    kind: str = "polynomial_zeros"
    zeros: list = field(default_factory=list)
    scale: float | None = None
    path: Path | None = None


@dataclass
class OutputConfig:
    dir: Path = Path("vortexflow_out")
    prefix: str = "run"
    emit_plots: bool = False


@dataclass
class OracleConfig:
    weights: list = field(default_factory=lambda: [[1]])
    tau: list = field(default_factory=lambda: [1.0])
    x0: list = field(default_factory=lambda: [[2.0, 0.0]])
    dt: float = 1e-2
    t_end: float = 20.0


@dataclass
class RunConfig:
    grid: GridSpec | None
    tau: float = 1.0
    degree: int = 0
    initial: InitialConfig | None = None
    method: str = "imex"
    flow: FlowConfig = field(default_factory=FlowConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    criteria: list = field(default_factory=lambda: sorted(acceptance.CRITERIA))
    seed: int = DEFAULT_SEED
    source: Path | None = None


# ------------------------------------------------------------------- parsing

def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Map (table, key) to the 1-based line where the key is assigned."""
    out, table = {}, ""
    for n, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        head = re.match(r"^\[\s*([A-Za-z0-9_.\-]+)\s*\]", stripped)
        if head:
            table = head.group(1)
            out.setdefault((table, ""), n)
            continue
        key = re.match(r"^([A-Za-z0-9_\-]+)\s*=", stripped)
        if key:
            out.setdefault((table, key.group(1)), n)
    return out


class _Reader:
    """Typed access to one parsed TOML document with line-aware errors."""

    def __init__(self, doc: dict, text: str, path: Path):
        self.doc, self.path = doc, path
        self.lines = _key_lines(text)

    def fail(self, table: str, key: str, msg: str):
        line = self.lines.get((table, key)) or self.lines.get((table, ""), 1)
        raise ConfigError(f"{self.path}:{line}: {msg}")

    def check_keys(self):
        for key, value in self.doc.items():
            if isinstance(value, dict):
                if key not in SCHEMA or not key:
                    self.fail(key, "", f"unknown table [{key}]")
                for sub in value:
                    if sub not in SCHEMA[key]:
                        self.fail(key, sub, f"unknown key {sub!r} in [{key}]")
            elif key not in SCHEMA[""]:
                self.fail("", key, f"unknown key {key!r}")

    def get(self, table: str, key: str, kind, default=None):
        src = self.doc if not table else self.doc.get(table, {})
        if key not in src:
            return default
        value = src[key]
        name = f"{table}.{key}" if table else key
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)) \
                    or not math.isfinite(value):
                self.fail(table, key, f"{name} must be a finite number")
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                self.fail(table, key, f"{name} must be an integer")
            return value
        if not isinstance(value, kind):
            self.fail(table, key, f"{name} must be of type {kind.__name__}")
        return value


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML syntax error: {exc}") from exc
    r = _Reader(doc, text, path)
    r.check_keys()

    seed = r.get("", "seed", int, DEFAULT_SEED)
    tau = r.get("physics", "tau", float, 1.0)
    if tau <= 0:
        r.fail("physics", "tau", "physics.tau must be positive")
    degree = r.get("physics", "degree", int, 0)

    spec = None
    if "grid" in doc:
        topo = r.get("grid", "topology", str, "rectangle")
        nx = r.get("grid", "nx", int)
        if nx is None:
            r.fail("grid", "", "grid.nx is required")
        ny = r.get("grid", "ny", int, nx)
        lx = r.get("grid", "lx", float, 1.0)
        ly = r.get("grid", "ly", float, lx * ny / nx)
        try:
            spec = GridSpec(topo, nx, ny, lx, ly)
        except ValueError as exc:
            r.fail("grid", "", f"invalid grid: {exc}")
        if degree != 0 and topo != "torus":
            r.fail("physics", "degree", "a nonzero degree needs a torus")

    initial = None
    if "initial" in doc:
        initial = _parse_initial(r, spec, tau, degree)

    method = r.get("flow", "method", str, "imex")
    if method not in METHODS:
        r.fail("flow", "method", f"flow.method must be one of {', '.join(METHODS)}")
    if method == "euler" and spec is not None and spec.topology != "torus":
        r.fail("flow", "method", "the euler method needs a torus; use imex or picard")
    h = spec.lx / spec.nx if spec else None
    dt = r.get("flow", "dt", float, h * h / 8 if h else None)
    flow_kw = {"integrator": method if method != "hflow" else "imex", "dt": dt,
               "t_end": r.get("flow", "t_end", float, 50.0),
               "tolerance": r.get("flow", "tolerance", float, 1e-3 * tau)}
    for key, kind in (("output_every", int), ("max_picard_iters", int), ("t0_window", float),
                      ("picard_steps", int), ("picard_tol", float), ("max_halvings", int)):
        value = r.get("flow", key, kind)
        if value is not None:
            flow_kw[key] = value
    if flow_kw["tolerance"] < 0:
        r.fail("flow", "tolerance", "flow.tolerance must be nonnegative")
    try:
        flow_cfg = FlowConfig(**flow_kw)
    except ValueError as exc:
        r.fail("flow", "", f"invalid [flow]: {exc}")

    out = OutputConfig(
        dir=Path(r.get("output", "dir", str, "vortexflow_out")),
        prefix=r.get("output", "prefix", str, "run"),
        emit_plots=r.get("output", "emit_plots", bool, False))
    if not re.fullmatch(r"[A-Za-z0-9_.\-]+", out.prefix):
        r.fail("output", "prefix", "output.prefix may only use letters, digits, '_', '.', '-'")

    orc_cfg = _parse_oracle(r)

    criteria = r.get("verify", "criteria", list, sorted(acceptance.CRITERIA))
    bad = [c for c in criteria if c not in acceptance.CRITERIA]
    if bad:
        r.fail("verify", "criteria", f"unknown criteria {bad}; valid are 1-{len(acceptance.CRITERIA)}")

    return RunConfig(grid=spec, tau=tau, degree=degree, initial=initial, method=method,
                     flow=flow_cfg, output=out, oracle=orc_cfg, criteria=list(criteria),
                     seed=seed, source=path)


def _parse_initial(r: _Reader, spec: GridSpec | None, tau: float, degree: int) -> InitialConfig:
    kind = r.get("initial", "kind", str, "polynomial_zeros")
    if kind not in INITIAL_KINDS:
        r.fail("initial", "kind", f"initial.kind must be one of {', '.join(INITIAL_KINDS)}")
    scale = r.get("initial", "scale", float)
    cfg = InitialConfig(kind=kind, scale=scale)
    if kind == "file":
        raw = r.get("initial", "path", str)
        if raw is None:
            r.fail("initial", "", "initial.path is required for kind = 'file'")
        p = Path(raw)
        cfg.path = p if p.is_absolute() else r.path.parent / p
        return cfg
    if spec is None:
        r.fail("initial", "kind", f"initial.kind = {kind!r} needs a [grid] table")
    if kind == "polynomial_zeros":
        if spec.topology == "torus":
            r.fail("initial", "kind", "polynomial data is not periodic; use constant or theta on a torus")
        zeros = r.get("initial", "zeros", list, [])
        for z in zeros:
            if not (isinstance(z, list) and len(z) == 2
                    and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in z)):
                r.fail("initial", "zeros", "initial.zeros must be a list of [x, y] pairs")
            if not (0 < z[0] < spec.lx and 0 < z[1] < spec.ly):
                r.fail("initial", "zeros", f"zero {z} lies outside the domain interior")
        cfg.zeros = [(float(a), float(b)) for a, b in zeros]
    elif kind == "constant":
        if degree != 0:
            r.fail("initial", "kind", "a constant section needs degree 0; use kind = 'theta'")
        if cfg.scale is None:
            cfg.scale = math.sqrt(tau)
    elif kind == "theta":
        if spec.topology != "torus" or degree == 0:
            r.fail("initial", "kind", "kind = 'theta' needs a torus with nonzero degree")
    if cfg.scale is None:
        cfg.scale = 1.0
    return cfg


def _parse_oracle(r: _Reader) -> OracleConfig:
    cfg = OracleConfig()
    if "oracle" not in r.doc:
        return cfg
    cfg.weights = r.get("oracle", "weights", list, cfg.weights)
    cfg.tau = r.get("oracle", "tau", list, cfg.tau)
    cfg.x0 = r.get("oracle", "x0", list, cfg.x0)
    cfg.dt = r.get("oracle", "dt", float, cfg.dt)
    cfg.t_end = r.get("oracle", "t_end", float, cfg.t_end)
    try:
        model = orc.FinDimModel(cfg.weights, cfg.tau)
    except (ValueError, TypeError) as exc:
        r.fail("oracle", "weights", f"invalid oracle model: {exc}")
    if len(cfg.x0) != model.n or not all(isinstance(c, list) and len(c) == 2 for c in cfg.x0):
        r.fail("oracle", "x0", f"oracle.x0 must list {model.n} [re, im] pairs")
    return cfg


# ------------------------------------------------------------------ building

def make_initial(config: RunConfig, grid: Grid | None = None) -> fl.State:
    init = config.initial
    if init is None:
        raise ConfigError("config has no [initial] table")
    if init.kind == "file":
        try:
            state = io.load_state(init.path)
        except OSError as exc:
            raise ConfigError(f"cannot read state file {init.path}: {exc.strerror}") from exc
        except io.StateFileError as exc:
            raise ConfigError(f"invalid state file {init.path}: {exc}") from exc
        if config.grid is not None and state.grid.spec != config.grid:
            raise ConfigError(f"state file grid {state.grid.spec} differs from [grid]")
        return state
    grid = grid or build_grid(config.grid)
    if init.kind == "theta":
        return fl.theta_state(grid, config.degree, init.scale, tau=config.tau)
    z = np.zeros(grid.shape)
    if init.kind == "polynomial_zeros":
        u = fl.polynomial_section(grid, init.zeros, init.scale)
    else:
        u = np.full(grid.shape, complex(init.scale))
    return fl.State(grid, z, z, u, tau=config.tau, degree=config.degree)


# ----------------------------------------------------------------- commands

def _outputs(config: RunConfig, steps, times, rows, state: fl.State | None):
    out, prefix = config.output.dir, config.output.prefix
    csv_path = io.write_trace(out / f"{prefix}_trace.csv", steps, times, rows)
    written = [csv_path]
    if state is not None:
        written.append(io.save_state(out / f"{prefix}_final.json", state))
    if config.output.emit_plots:
        written.append(io.write_plot_script(out / f"{prefix}_plot.py", csv_path.name))
    for p in written:
        log.info("wrote %s", p)


def _dirichlet(state: fl.State) -> bool:
    return not state.grid.is_torus


def cmd_flow(config: RunConfig) -> int:
    if config.method == "hflow":
        return cmd_hflow(config)
    state = make_initial(config)
    tr = run_flow(state, config.flow)
    log.info("flow %s: status %s after %d steps, t = %.4g, ||f|| = %.3e",
             config.method, tr.status, tr.steps[-1], tr.times[-1], tr.final.f_l2)
    _outputs(config, tr.steps, tr.times, tr.rows, tr.state)
    return EXIT_OK


def cmd_hflow(config: RunConfig) -> int:
    state = make_initial(config)
    cfg = config.flow
    traj = gauge_ops.hflow_run(state, cfg.dt, cfg.t_end, tolerance=cfg.tolerance,
                               record_every=cfg.output_every, max_halvings=cfg.max_halvings)
    rows = [moment.diagnostics(traj.state(k)) for k in range(len(traj.times))]
    log.info("hflow: status %s, t = %.4g, ||f|| = %.3e", traj.status, traj.times[-1], traj.f_l2[-1])
    _outputs(config, traj.steps, traj.times, rows, traj.state())
    io.write_json(config.output.dir / f"{config.output.prefix}_sigma.json",
                  io.trajectory_to_dict(traj))
    return EXIT_OK


def cmd_project(config: RunConfig) -> int:
    state = make_initial(config)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        _, vortex, rep = gauge_ops.project_to_vortex(state)
    for w in caught:
        log.warning("%s", w.message)
    if not rep.converged:
        raise NumericalFailure(f"Newton stopped with status {rep.status}, "
                               f"residual {rep.final_residual:.3g}")
    log.info("project: %d Newton iterations, residual %.3e, ||sigma|| = %.3e (bound %.3e)",
             rep.iterations, rep.final_residual, rep.extra["sigma_l2"], rep.extra["bound"])
    rows = [moment.diagnostics(state), moment.diagnostics(vortex)]
    _outputs(config, [0, rep.iterations], [0.0, 0.0], rows, vortex)
    io.write_json(config.output.dir / f"{config.output.prefix}_report.json",
                  io.report_to_dict(rep))
    return EXIT_OK


def cmd_picard(config: RunConfig) -> int:
    state = make_initial(config)
    cfg = config.flow
    res = picard_solve(state, cfg.t0_window, cfg.picard_steps, cfg.picard_tol,
                       cfg.max_picard_iters)
    states = [res.triple(k).state(state) for k in range(len(res.times))]
    rows = [moment.diagnostics(s) for s in states]
    log.info("picard: %d iterations, mean contraction ratio %.4f", res.iterations, res.mean_ratio)
    _outputs(config, list(range(len(states))), list(res.times), rows, states[-1])
    return EXIT_OK


def cmd_oracle(config: RunConfig) -> int:
    oc = config.oracle
    model = orc.FinDimModel(oc.weights, oc.tau)
    x0 = np.array([complex(a, b) for a, b in oc.x0])
    try:
        traj = orc.findim_flow(model, x0, oc.dt, oc.t_end)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    except FloatingPointError as exc:
        raise NumericalFailure(str(exc)) from exc
    path = io.write_oracle_trace(config.output.dir / f"{config.output.prefix}_oracle.csv",
                                 traj.times, traj.xs, traj.functional)
    log.info("oracle: |Phi|^2 %.3e -> %.3e; wrote %s",
             2 * traj.functional[0], 2 * traj.functional[-1], path)
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    results = acceptance.run_all(config.criteria, config.seed, echo=print)
    failed = [r.number for r in results if not r.passed]
    summary = f"{len(results) - len(failed)}/{len(results)} criteria passed"
    print(summary)
    text = "\n".join(r.line() for r in results) + "\n" + summary + "\n"
    io.atomic_write(config.output.dir / f"{config.output.prefix}_verify.txt", text)
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {"flow": cmd_flow, "hflow": cmd_hflow, "project": cmd_project,
            "picard": cmd_picard, "oracle": cmd_oracle, "verify": cmd_verify}


def run(subcommand: str, config: RunConfig) -> int:
    """Run one subcommand and map failures onto exit codes."""
    if subcommand not in COMMANDS:
        log.error("unknown subcommand %r", subcommand)
        return EXIT_CONFIG
    if subcommand in ("flow", "hflow", "project", "picard") and config.initial is None:
        log.error("%s: subcommand %s needs an [initial] table", config.source, subcommand)
        return EXIT_CONFIG
    try:
        return COMMANDS[subcommand](config)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (NumericalFailure, NonContraction, gauge_ops.NewtonStagnation,
            FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vortexflow", description=__doc__.split("\n")[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    try:
        config = parse_config(args.config)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.output = replace(config.output, dir=args.out)
    return run(args.subcommand, config)


if __name__ == "__main__":
    sys.exit(main())
