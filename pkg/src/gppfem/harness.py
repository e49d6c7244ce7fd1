"""Experiment CLI: single runs, conservation studies and convergence sweeps.

Configs are flat key=value text (one pair per line, ``#`` comments).  All
outputs are UTF-8 CSV with ``%.6e`` values and ``%.2f`` rates so repeated
serial runs are byte-identical and diffable.

Exit codes: 0 success, 2 configuration problem, 3 solver failure.
"""

import argparse
import os
import sys
from dataclasses import dataclass, replace

from . import diagnostics, scheme
from .fem import build_space
from .linalg import CompatibilityError, SolverFailure
from .mesh import build_interval_mesh, build_rect_mesh
from .problems import CATALOG_NAMES, catalog_get
from .scheme import ConfigError

_REQUIRED = ("problem", "degree", "tau", "T")
_DEFAULTS = {
    "stride": 1,
    "init": "interpolate",
    "outdir": "out",
    "solver": "direct",
    "parallel": False,
}


@dataclass(frozen=True)
class RunConfig:
    problem: str
    degree: int
    tau: float
    T: float
    n: int = None
    nx: int = None
    ny: int = None
    stride: int = 1
    init: str = "interpolate"
    outdir: str = "out"
    solver: str = "direct"
    parallel: bool = False

    def resolution(self):
        """(nx, ny) for 2D problems, (n,) for 1D."""
        spec_dim = catalog_get(self.problem).dim
        if spec_dim == 1:
            if self.n is None:
                raise ConfigError("missing key 'n' for a 1D problem")
            return (self.n,)
        nx = self.nx if self.nx is not None else self.n
        ny = self.ny if self.ny is not None else self.n
        if nx is None or ny is None:
            raise ConfigError("missing key 'n' (or 'nx'/'ny') for a 2D problem")
        return (nx, ny)


def _parse_bool(raw):
    if raw in ("on", "true", "1", "yes"):
        return True
    if raw in ("off", "false", "0", "no"):
        return False
    raise ValueError(f"expected on/off, got {raw!r}")


_PARSERS = {
    "problem": str,
    "degree": int,
    "n": int,
    "nx": int,
    "ny": int,
    "tau": float,
    "T": float,
    "stride": int,
    "init": str,
    "outdir": str,
    "solver": str,
    "parallel": _parse_bool,
}


def parse_config(text):
    """Parse flat key=value config text into a validated RunConfig."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, raw_value = line.partition("=")
        key, raw_value = key.strip(), raw_value.strip()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](raw_value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
    for key, default in _DEFAULTS.items():
        values.setdefault(key, default)
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.problem not in CATALOG_NAMES:
        raise ConfigError(f"unknown problem {cfg.problem!r}, expected one of {CATALOG_NAMES}")
    if cfg.degree not in (1, 2):
        raise ConfigError(f"unsupported degree {cfg.degree}; only P1 and P2 are available")
    if cfg.solver != "direct":
        raise ConfigError(f"unknown solver {cfg.solver!r}; only 'direct' is available")
    if not cfg.tau > 0:
        raise ConfigError(f"tau must be positive, got {cfg.tau}")
    if cfg.T < 0:
        raise ConfigError(f"T must be nonnegative, got {cfg.T}")
    steps = round(cfg.T / cfg.tau)
    if abs(steps * cfg.tau - cfg.T) > 1e-12 * max(1.0, abs(cfg.T)):
        raise ConfigError(f"T = {cfg.T} is not an integer multiple of tau = {cfg.tau}")
    if cfg.stride < 1:
        raise ConfigError(f"stride must be >= 1, got {cfg.stride}")
    if cfg.init not in ("interpolate", "project"):
        raise ConfigError(f"unknown init method {cfg.init!r}, expected interpolate or project")
    for r in cfg.resolution():
        if r < 2:
            raise ConfigError(f"mesh needs at least 2 divisions per direction, got {r}")


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def build_setup(cfg):
    """Problem spec, mesh, space and Params for one configuration."""
    spec = catalog_get(cfg.problem)
    res = cfg.resolution()
    if spec.dim == 1:
        mesh = build_interval_mesh(spec.extents[0], res[0])
    else:
        mesh = build_rect_mesh(spec.extents[0], spec.extents[1], res[0], res[1])
    space = build_space(mesh, cfg.degree)
    params = scheme.Params(g=spec.g, G=spec.G, q=spec.q, tau=cfg.tau, T=cfg.T)
    return spec, mesh, space, params


def run_problem(cfg, record_stride=None):
    """Run one simulation; returns (spec, space, params, final state, records)."""
    spec, _, space, params = build_setup(cfg)
    state, records = scheme.run(
        space,
        params,
        spec.psi0_plus,
        spec.psi0_minus,
        record_stride=record_stride if record_stride is not None else cfg.stride,
        init_method=cfg.init,
        exact_psi_plus=spec.exact_psi_plus,
        exact_psi_minus=spec.exact_psi_minus,
        exact_phi=spec.exact_phi,
        parallel=cfg.parallel,
    )
    return spec, space, params, state, records


def _fmt(value):
    return f"{value:.6e}"


def write_diagnostics_csv(path, records):
    with_errors = bool(records) and records[0].err_psi_plus is not None
    with_phi = bool(records) and records[0].err_phi is not None
    header = "step,t,mass_plus,mass_minus,energy,compat_residual"
    if with_errors:
        header += ",err_psi_plus,err_psi_minus"
        if with_phi:
            header += ",err_phi"
    lines = [header]
    for r in records:
        row = [
            str(r.n),
            _fmt(r.t),
            _fmt(r.mass_plus),
            _fmt(r.mass_minus),
            _fmt(r.energy),
            _fmt(r.compat_residual),
        ]
        if with_errors:
            row += [_fmt(r.err_psi_plus), _fmt(r.err_psi_minus)]
            if with_phi:
                row.append(_fmt(r.err_phi))
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_snapshot_csv(path, space, state):
    dim = space.mesh.dim
    header = ("x," if dim == 1 else "x,y,") + "re_psi_plus,im_psi_plus,re_psi_minus,im_psi_minus"
    if state.phi is not None:
        header += ",phi"
    lines = [header]
    coords = space.dof_coords
    pp, pm = state.psi_plus.values, state.psi_minus.values
    for i in range(space.ndof):
        row = [_fmt(c) for c in coords[i]]
        row += [_fmt(pp[i].real), _fmt(pp[i].imag), _fmt(pm[i].real), _fmt(pm[i].imag)]
        if state.phi is not None:
            row.append(_fmt(state.phi.values[i]))
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_run(cfg):
    """Single simulation: writes diagnostics.csv and snapshot.csv to outdir."""
    spec, space, params, state, records = run_problem(cfg)
    os.makedirs(cfg.outdir, exist_ok=True)
    diag_path = os.path.join(cfg.outdir, "diagnostics.csv")
    snap_path = os.path.join(cfg.outdir, "snapshot.csv")
    write_diagnostics_csv(diag_path, records)
    write_snapshot_csv(snap_path, space, state)
    return diag_path, snap_path


def converge_rows(cfg, sweep, levels):
    """Errors over a halving sweep; rows are (resolution, e+, e-, e_phi-or-None).

    Space sweeps double the mesh divisions per level at fixed tau; time
    sweeps halve tau at fixed mesh.  Errors are final-time L2 errors (the
    potential at its last half level).
    """
    if sweep not in ("space", "time"):
        raise ConfigError(f"unknown sweep {sweep!r}, expected 'space' or 'time'")
    if levels < 2:
        raise ConfigError("a sweep needs at least 2 levels")
    spec = catalog_get(cfg.problem)
    if not spec.has_exact:
        raise ConfigError(f"problem {cfg.problem!r} has no exact solution to sweep against")
    rows = []
    for j in range(levels):
        if sweep == "space":
            scaled = tuple(r * 2**j for r in cfg.resolution())
            level_cfg = (
                replace(cfg, n=scaled[0])
                if spec.dim == 1
                else replace(cfg, n=None, nx=scaled[0], ny=scaled[1])
            )
        else:
            level_cfg = replace(cfg, tau=cfg.tau / 2**j)
        steps = max(1, round(level_cfg.T / level_cfg.tau))
        _, space, _, _, records = run_problem(level_cfg, record_stride=steps)
        final = records[-1]
        resolution = space.mesh.h if sweep == "space" else level_cfg.tau
        rows.append((resolution, final.err_psi_plus, final.err_psi_minus, final.err_phi))
    return rows


def rate_columns(rows):
    """Interleave rate_table rates with the error columns of converge_rows."""
    with_phi = rows[0][3] is not None
    rate_p = diagnostics.rate_table([(r[0], r[1]) for r in rows])
    rate_m = diagnostics.rate_table([(r[0], r[2]) for r in rows])
    rate_phi = diagnostics.rate_table([(r[0], r[3]) for r in rows]) if with_phi else None
    table = []
    for i, row in enumerate(rows):
        entry = {
            "resolution": row[0],
            "e_psi_plus": row[1],
            "rate_psi_plus": rate_p[i][2],
            "e_psi_minus": row[2],
            "rate_psi_minus": rate_m[i][2],
        }
        if with_phi:
            entry["e_phi"] = row[3]
            entry["rate_phi"] = rate_phi[i][2]
        table.append(entry)
    return table


def write_errors_csv(path, table):
    with_phi = "e_phi" in table[0]
    header = "resolution,e_psi_plus,rate,e_psi_minus,rate"
    if with_phi:
        header += ",e_phi,rate"
    lines = [header]
    for entry in table:
        row = [_fmt(entry["resolution"]), _fmt(entry["e_psi_plus"])]
        row.append("" if entry["rate_psi_plus"] is None else f"{entry['rate_psi_plus']:.2f}")
        row.append(_fmt(entry["e_psi_minus"]))
        row.append("" if entry["rate_psi_minus"] is None else f"{entry['rate_psi_minus']:.2f}")
        if with_phi:
            row.append(_fmt(entry["e_phi"]))
            row.append("" if entry["rate_phi"] is None else f"{entry['rate_phi']:.2f}")
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_converge(cfg, sweep, levels, extended=False):
    """Convergence sweep: writes errors_<sweep>.csv with rate columns."""
    effective = levels + 1 if extended else levels
    table = rate_columns(converge_rows(cfg, sweep, effective))
    os.makedirs(cfg.outdir, exist_ok=True)
    path = os.path.join(cfg.outdir, f"errors_{sweep}.csv")
    write_errors_csv(path, table)
    return path


def main(argv=None):
    parser = argparse.ArgumentParser(prog="gppfem", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="single simulation with diagnostics")
    p_conv = sub.add_parser("converge", help="space or time convergence sweep")
    for p in (p_run, p_conv):
        p.add_argument("--config", required=True, help="path to a key=value config file")
        p.add_argument("--parallel", action="store_true", help="solve the two species concurrently")
    p_conv.add_argument("--sweep", required=True, choices=("space", "time"))
    p_conv.add_argument("--levels", type=int, default=4)
    p_conv.add_argument(
        "--extended", action="store_true", help="add the costly finest level to 2D sweeps"
    )
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.parallel:
            cfg = replace(cfg, parallel=True)
        if args.command == "run":
            for path in cmd_run(cfg):
                print(path)
        else:
            print(cmd_converge(cfg, args.sweep, args.levels, extended=args.extended))
    except (SolverFailure, CompatibilityError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
