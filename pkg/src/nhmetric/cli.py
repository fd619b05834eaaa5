"""Command-line front end: ``nhmetric <command> [options]``.

Commands
--------
spectrum  instantaneous eigenvalues and exceptional-point times
evolve    Bloch trajectories of the mapped and the naive state
sweep     asymptotic polarisation versus k (simulated, closed form, adiabatic)
defects   momentum-integrated defect densities
validate  run the acceptance checks; exit status 3 on any failure

Settings are resolved as defaults < ``--preset`` < ``--config FILE`` < flags.
A config file holds one ``key = value`` per line (``#`` starts a comment);
``--save-config`` writes the resolved settings in the same format.

Exit status: 0 success, 1 configuration or I/O error, 2 numerical failure,
3 validation failure.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .defects import defect_density, defect_density_finite_F
from .errors import ConfigError, NumericalError
from .evolution import IntegratorConfig, evolve_factored, evolve_mode, sweep_point
from .model import ModeParams, ep_times, spectrum_on_grid
from .observables import METRIC, NORM, adiabatic_value, asymptotic_value

COMMANDS = ("spectrum", "evolve", "sweep", "defects", "validate")
METHODS = ("metric", "norm", "both")
FORMATS = ("csv", "json")
ROUTES = ("factored", "direct")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    command: str = "sweep"
    gamma: float = 1.0
    F: float = None
    nonherm_scale: float = 2.5
    k: tuple = ()
    k_grid: tuple = None  # (count, min, max)
    window: float = 80.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    samples: int = 401
    method: str = "both"
    k_max: float = math.pi
    adiabatic: bool = False
    route: str = "factored"
    criteria: tuple = (1, 2, 3, 4, 5, 6, 7)
    out: str = None
    format: str = "csv"
    jobs: int = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {', '.join(METHODS)}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {', '.join(FORMATS)}")
        if self.route not in ROUTES:
            raise ConfigError(f"route must be one of {', '.join(ROUTES)}")
        for name in ("gamma", "window", "rel_tol", "abs_tol", "k_max"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        for k in self.k:
            if not math.isfinite(k):
                raise ConfigError("k values must be finite")
        if self.k_grid is not None:
            n, lo, hi = self.k_grid
            if n < 1 or not (math.isfinite(lo) and math.isfinite(hi)) or (n > 1 and hi <= lo):
                raise ConfigError("k grid must be COUNT:MIN:MAX with COUNT >= 1 and MIN < MAX")
        if self.window <= 0 or self.samples < 1 or self.k_max <= 0:
            raise ConfigError("window, samples and kmax must be positive")
        if self.jobs is not None and self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        bad = [c for c in self.criteria if c not in range(1, 8)]
        if bad:
            raise ConfigError(f"unknown criteria {bad}")

    # physical parameters ---------------------------------------------------

    def force(self):
        if self.F is not None:
            if not self.F > 0:
                raise ConfigError("F must be positive")
            return float(self.F)
        if self.gamma == 0:
            raise ConfigError("with gamma = 0 the force must be given as F")
        if not (self.nonherm_scale and self.nonherm_scale > 0):
            raise ConfigError("nonherm_scale must be positive")
        return self.gamma * self.gamma / self.nonherm_scale

    def k_values(self):
        ks = list(self.k)
        if self.k_grid is not None:
            n, lo, hi = self.k_grid
            ks.extend(np.linspace(lo, hi, int(n)).tolist() if n > 1 else [lo])
        if not ks:
            raise ConfigError("no k values given (use --k or --k-grid)")
        return sorted(set(float(k) for k in ks))

    def integrator(self):
        return IntegratorConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol,
                                t_start=-self.window, t_end=self.window,
                                sample_count=self.samples)

    def methods(self):
        return ("metric", "norm") if self.method == "both" else (self.method,)

    # key = value text --------------------------------------------------------

    def to_text(self):
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, base=None):
        return _apply(base or cls(), parse_pairs(text))


def _format_value(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(_format_value(x) for x in v)
    return str(v)


_FLOAT = {"gamma", "F", "nonherm_scale", "window", "rel_tol", "abs_tol", "k_max"}
_INT = {"samples", "jobs"}


def parse_pairs(text):
    pairs = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        pairs[key.replace("-", "_")] = value
    return pairs


def _parse_floats(s):
    try:
        return tuple(float(x) for x in s.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"not a list of numbers: {s!r}") from None


def parse_k_grid(s):
    parts = s.replace(",", ":").split(":")
    if len(parts) != 3:
        raise ConfigError(f"k grid must be COUNT:MIN:MAX, got {s!r}")
    try:
        return (int(parts[0]), float(parts[1]), float(parts[2]))
    except ValueError:
        raise ConfigError(f"k grid must be COUNT:MIN:MAX, got {s!r}") from None


def _convert(key, value):
    if value.lower() == "none":
        return None
    try:
        if key in _FLOAT:
            return float(value)
        if key in _INT:
            return int(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r}") from None
    if key == "k":
        return _parse_floats(value)
    if key == "k_grid":
        return parse_k_grid(value)
    if key == "criteria":
        try:
            return tuple(int(x) for x in value.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"criteria: cannot parse {value!r}") from None
    if key == "adiabatic":
        if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"adiabatic: expected true or false, got {value!r}")
        return value.lower() in ("true", "1", "yes")
    return value


def _apply(cfg, pairs):
    names = {f.name for f in fields(RunConfig)}
    updates = {}
    for key, value in pairs.items():
        if key == "preset":
            cfg = replace(preset(value), **updates)
            continue
        if key not in names:
            raise ConfigError(f"unknown setting {key!r}")
        updates[key] = _convert(key, value) if isinstance(value, str) else value
    return replace(cfg, **updates)


# presets ---------------------------------------------------------------------

PRESETS = {
    # spectrum of a PT-broken, an exceptional and a PT-symmetric mode
    "fig1": dict(command="spectrum", gamma=1.0, nonherm_scale=2.5, k=(0.2, 1.0, 2.0),
                 samples=801),
    # Bloch trajectories at k = 2, 1.1, 1 and 0.2 gamma
    "fig2": dict(command="evolve", gamma=1.0, nonherm_scale=2.5, k=(2.0, 1.1, 1.0, 0.2),
                 samples=801),
    # asymptotic polarisation in the adiabatic regime
    "fig3": dict(command="sweep", gamma=1.0, nonherm_scale=400.0, k_grid=(81, -2.0, 2.0)),
    # closed form versus simulation at moderate non-Hermiticity
    "eq6": dict(command="sweep", gamma=1.0, nonherm_scale=2.5,
                k=(-2.0, -1.5, -1.1, -0.5, -0.2, 0.0, 0.2, 0.5, 1.1, 1.5, 2.0)),
    # defect densities in the adiabatic limit
    "eq8": dict(command="defects", gamma=1.0, adiabatic=True),
}


def preset(name):
    try:
        return replace(RunConfig(), **PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


# output ------------------------------------------------------------------------

def fmt_float(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.17g" % v


def _json_value(v):
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        s = fmt_float(v)
        return s if math.isfinite(v) else "null"
    return json.dumps(str(v))


def render(columns, rows, fmt):
    """Serialise rows (dicts keyed by ``columns``) as CSV or JSON text."""
    if fmt == "csv":
        out = [",".join(columns)]
        for r in rows:
            out.append(",".join(
                fmt_float(r[c]) if isinstance(r[c], (float, np.floating)) else str(r[c])
                for c in columns
            ))
        return "\n".join(out) + "\n"
    body = ",\n".join(
        "  {" + ", ".join(f"{json.dumps(c)}: {_json_value(r[c])}" for c in columns) + "}"
        for r in rows
    )
    return "[\n" + body + "\n]\n" if rows else "[]\n"


def write_output(cfg, columns, rows, meta=None):
    text = render(columns, rows, cfg.format)
    if cfg.out is None:
        sys.stdout.write(text)
        return
    with open(cfg.out, "w") as fh:
        fh.write(text)
    # settings that cannot change the payload are left out
    settings = replace(cfg, out=None, jobs=None).to_text()
    side = {"version": __version__, "command": cfg.command, "rows": len(rows),
            "columns": list(columns), "config": settings}
    side.update(meta or {})
    with open(cfg.out + ".meta.json", "w") as fh:
        json.dump(side, fh, indent=2, sort_keys=True)
        fh.write("\n")


# parallel map --------------------------------------------------------------------

def default_jobs():
    env = os.environ.get("NHMETRIC_JOBS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"NHMETRIC_JOBS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError("NHMETRIC_JOBS must be at least 1")
        return n
    return os.cpu_count() or 1


def pmap(fn, items, jobs):
    """Ordered map; fans out to processes when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items))


# commands ------------------------------------------------------------------------

SPECTRUM_COLUMNS = ("k", "t", "re_e_plus", "im_e_plus", "re_e_minus", "im_e_minus", "is_ep")


def cmd_spectrum(cfg):
    F = cfg.force()
    rows = []
    for k in cfg.k_values():
        p = ModeParams(k, cfg.gamma, F)
        times = cfg.integrator().times(p)
        eps = ep_times(p)
        ts = np.unique(np.concatenate([times, [t for t in eps if times[0] <= t <= times[-1]]]))
        E = spectrum_on_grid(p, ts)
        for t, (ep, em) in zip(ts, E):
            rows.append({"k": k, "t": float(t), "re_e_plus": float(ep.real),
                         "im_e_plus": float(ep.imag), "re_e_minus": float(em.real),
                         "im_e_minus": float(em.imag), "is_ep": int(t in eps)})
    return SPECTRUM_COLUMNS, rows, {}


EVOLVE_COLUMNS = (
    "k", "t", "re_psi0", "im_psi0", "re_psi1", "im_psi1",
    "re_Psi0", "im_Psi0", "re_Psi1", "im_Psi1",
    "bloch_metric_x", "bloch_metric_y", "bloch_metric_z",
    "bloch_norm_x", "bloch_norm_y", "bloch_norm_z",
    "sigma_z_metric", "sigma_z_norm", "sigma_x_metric", "sigma_x_norm",
    "herm_residual", "log_gauge",
)


def _evolve_one(args):
    p, icfg, route = args
    run = evolve_factored if route == "factored" else evolve_mode
    tr = run(p, icfg)
    rows = []
    for s in tr:
        rows.append({
            "k": p.k, "t": s.t,
            "re_psi0": s.psi[0].real, "im_psi0": s.psi[0].imag,
            "re_psi1": s.psi[1].real, "im_psi1": s.psi[1].imag,
            "re_Psi0": s.Psi[0].real, "im_Psi0": s.Psi[0].imag,
            "re_Psi1": s.Psi[1].real, "im_Psi1": s.Psi[1].imag,
            "bloch_metric_x": s.bloch_metric[0], "bloch_metric_y": s.bloch_metric[1],
            "bloch_metric_z": s.bloch_metric[2],
            "bloch_norm_x": s.bloch_norm[0], "bloch_norm_y": s.bloch_norm[1],
            "bloch_norm_z": s.bloch_norm[2],
            "sigma_z_metric": s.sigma_z_metric, "sigma_z_norm": s.sigma_z_norm,
            "sigma_x_metric": s.bloch_metric[0], "sigma_x_norm": s.bloch_norm[0],
            "herm_residual": s.herm_residual, "log_gauge": s.log_gauge,
        })
    return [{c: float(r[c]) for c in EVOLVE_COLUMNS} for r in rows]


def cmd_evolve(cfg):
    F = cfg.force()
    icfg = cfg.integrator()
    tasks = [(ModeParams(k, cfg.gamma, F), icfg, cfg.route) for k in cfg.k_values()]
    chunks = pmap(_evolve_one, tasks, cfg.jobs or default_jobs())
    return EVOLVE_COLUMNS, [r for c in chunks for r in c], {"route": cfg.route}


SWEEP_COLUMNS = (
    "k", "value_metric", "value_norm", "eq6_metric", "eq6_norm",
    "adiabatic_metric", "adiabatic_norm", "endpoint_metric", "endpoint_norm",
)


def _sweep_one(args):
    p, icfg = args
    sp = sweep_point(p, icfg)
    return {
        "k": p.k,
        "value_metric": float(sp.bloch_metric[2]), "value_norm": float(sp.bloch_norm[2]),
        "eq6_metric": asymptotic_value(p.k, p.gamma, p.F, METRIC),
        "eq6_norm": asymptotic_value(p.k, p.gamma, p.F, NORM),
        "adiabatic_metric": adiabatic_value(p.k, p.gamma, METRIC),
        "adiabatic_norm": adiabatic_value(p.k, p.gamma, NORM),
        "endpoint_metric": float(sp.endpoint_metric[2]),
        "endpoint_norm": float(sp.endpoint_norm[2]),
    }


def cmd_sweep(cfg):
    F = cfg.force()
    icfg = cfg.integrator()
    tasks = [(ModeParams(k, cfg.gamma, F), icfg) for k in cfg.k_values()]
    rows = pmap(_sweep_one, tasks, cfg.jobs or default_jobs())
    return SWEEP_COLUMNS, rows, {}


DEFECT_COLUMNS = ("method", "gamma", "F", "sigma_pts", "sigma_ptb", "sigma_total",
                  "k_max", "quadrature_error_estimate")


def cmd_defects(cfg):
    rows = []
    F = None if cfg.adiabatic else cfg.force()
    for m in cfg.methods():
        if F is None:
            d = defect_density(cfg.gamma, m, cfg.k_max)
        else:
            d = defect_density_finite_F(cfg.gamma, F, m, cfg.k_max)
        rows.append({"method": d.method.value, "gamma": d.gamma,
                     "F": "adiabatic" if d.F is None else d.F,
                     "sigma_pts": d.sigma_pts, "sigma_ptb": d.sigma_ptb,
                     "sigma_total": d.sigma_total, "k_max": d.k_max,
                     "quadrature_error_estimate": d.quadrature_error_estimate})
    return DEFECT_COLUMNS, rows, {}


CHECK_COLUMNS = ("criterion", "name", "value", "tol", "passed", "gating", "note")


def cmd_validate(cfg):
    from . import validation
    checks, ok = validation.run(cfg.criteria, echo=print)
    for c in cfg.criteria:
        print(f"criterion {c}: {'PASS' if validation.verdict(checks, c) else 'FAIL'}")
    rows = [{"criterion": c.criterion, "name": c.name, "value": c.value, "tol": c.tol,
             "passed": int(c.passed), "gating": int(c.gating), "note": c.note}
            for c in checks]
    return CHECK_COLUMNS, rows, {"passed": ok}


RUNNERS = {"spectrum": cmd_spectrum, "evolve": cmd_evolve, "sweep": cmd_sweep,
           "defects": cmd_defects, "validate": cmd_validate}


# argument parsing ----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    ap = _Parser(prog="nhmetric", description=__doc__.split("\n\n")[0],
                 formatter_class=argparse.RawDescriptionHelpFormatter,
                 epilog="Presets: " + ", ".join(PRESETS))
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--preset", choices=sorted(PRESETS))
    ap.add_argument("--config", metavar="FILE", help="key = value settings file")
    ap.add_argument("--save-config", metavar="FILE", help="write the resolved settings")
    ap.add_argument("--gamma", type=float)
    force = ap.add_mutually_exclusive_group()
    force.add_argument("--nonherm-scale", type=float, metavar="Y", help="gamma^2 / F")
    force.add_argument("--F", type=float, dest="F", help="quench force (needed when gamma = 0)")
    ap.add_argument("--k", nargs="+", metavar="K", help="momenta (space or comma separated)")
    ap.add_argument("--k-grid", metavar="N:MIN:MAX")
    ap.add_argument("--window", type=float, metavar="S", help="t in [-S, S] / sqrt(F)")
    ap.add_argument("--samples", type=int, help="output samples per trajectory")
    ap.add_argument("--method", choices=METHODS)
    ap.add_argument("--kmax", type=float, dest="k_max")
    ap.add_argument("--adiabatic", action="store_true", default=None,
                    help="defects: use the F -> 0 limit")
    ap.add_argument("--route", choices=ROUTES, help="evolve: propagator (default) or direct pair")
    ap.add_argument("--criteria", help="validate: comma-separated criterion numbers")
    ap.add_argument("--out", metavar="PATH")
    ap.add_argument("--format", choices=FORMATS)
    ap.add_argument("--jobs", type=int)
    ap.add_argument("--rel-tol", type=float)
    ap.add_argument("--abs-tol", type=float)
    return ap


def resolve(argv):
    """Parse ``argv`` into a :class:`RunConfig` and the optional save path."""
    ns = build_parser().parse_args(argv)
    cfg = preset(ns.preset) if ns.preset else RunConfig()
    if ns.config:
        with open(ns.config) as fh:
            cfg = RunConfig.from_text(fh.read(), cfg)
    updates = {"command": ns.command}
    for name in ("gamma", "window", "samples", "method", "k_max", "route", "out",
                 "format", "jobs", "rel_tol", "abs_tol", "adiabatic"):
        v = getattr(ns, name)
        if v is not None:
            updates[name] = v
    if ns.F is not None:
        updates.update(F=ns.F, nonherm_scale=None)
    if ns.nonherm_scale is not None:
        updates.update(nonherm_scale=ns.nonherm_scale, F=None)
    if ns.k is not None:
        updates["k"] = _parse_floats(" ".join(ns.k))
        if ns.k_grid is None:
            updates["k_grid"] = None
    if ns.k_grid is not None:
        updates["k_grid"] = parse_k_grid(ns.k_grid)
        if ns.k is None:
            updates["k"] = ()
    if ns.criteria is not None:
        updates["criteria"] = _convert("criteria", ns.criteria)
    cfg = replace(cfg, **updates)
    return cfg, ns.save_config


def main(argv=None):
    try:
        cfg, save = resolve(sys.argv[1:] if argv is None else argv)
        if save:
            with open(save, "w") as fh:
                fh.write(cfg.to_text())
        columns, rows, meta = RUNNERS[cfg.command](cfg)
        if cfg.command != "validate" or cfg.out:
            write_output(cfg, columns, rows, meta)
        if cfg.command == "validate" and not meta["passed"]:
            return EXIT_VALIDATION
        return EXIT_OK
    except ConfigError as exc:
        print(f"nhmetric: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except OSError as exc:
        print(f"nhmetric: I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError) as exc:
        print(f"nhmetric: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
