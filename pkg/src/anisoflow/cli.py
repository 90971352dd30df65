"""Command line interface.

Configuration files are INI-style with flat sections; every key, its type and
default is listed in ``SCHEMA`` and documented in the README. Example::

    [experiment]
    id = grim_reaper

    [grid]
    h = 0.01

Exit status: 0 pass, 2 configuration error, 3 numerical failure, 4 check failed.
"""

import argparse
import configparser
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import experiments as ex
from .anisotropy import Elliptic, Euclidean, MobilityModel, PowerNorm
from .barriers import comparison_check, wulff_barrier_check
from .discretization import GraphField, GraphGrid
from .errors import AnisoFlowError, ConfigError, UsageError
from .flow import FlowParams, evolve, evolve_lockstep
from .io import write_snapshot
from .reports import ExperimentReport
from .selfsimilar import (
    ConeSpec,
    compute_expander,
    cone_grid,
    expander_far_field,
    expander_fixed_point_check,
    scaling_check,
)

log = logging.getLogger(__name__)

EXPERIMENTS = (
    "grim_reaper",
    "expander_ode",
    "scaling",
    "expander",
    "rescaled_convergence",
    "hyperplane",
    "meanconvex",
    "wulff_barrier",
    "comparison",
    "flow",
)

REQUIRED = object()


def _float(s):
    return float(s)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError(f"{s!r} is not an integer")
    return int(v)


def _bool(s):
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{s!r} is not a boolean")


def _floats(s):
    return tuple(float(v) for v in s.replace(";", ",").split(",") if v.strip())


def _str(s):
    return s.strip()


def _pos(name):
    def check(v):
        if not v > 0:
            return f"{name} must be positive"
    return check


def _in_open01(name):
    def check(v):
        if not 0 < v < 1:
            return f"{name} out of (0,1)"
    return check


def _choice(name, options):
    def check(v):
        if v not in options:
            return f"{name} must be one of {', '.join(options)}"
    return check


def _cfl(v):
    if not 0 < v <= 0.5:
        return "cfl_factor out of (0,0.5]"


# section -> key -> (parser, default, range check)
SCHEMA = {
    "experiment": {
        "id": (_str, REQUIRED, _choice("id", EXPERIMENTS)),
        "cone": (_str, "abs:1.0", None),
        "t1": (_float, 1.0, _pos("t1")),
        "t2": (_float, 4.0, _pos("t2")),
        "R": (_float, 1.0, _pos("R")),
        "alphas": (_floats, (0.5, 1.0), None),
        "threshold": (_float, None, _pos("threshold")),
        "eps": (_float, 0.1, _pos("eps")),
        "n_pairs": (_int, 100, _pos("n_pairs")),
        "check_symmetry": (_bool, True, None),
    },
    "perturbation": {
        "kind": (_str, "none", _choice("kind", ("none", "sublinear", "vanishing", "offset"))),
        "K": (_float, 1.0, None),
        "delta": (_float, 0.5, _in_open01("delta")),
        "width": (_float, 4.0, _pos("width")),
        "amplitude": (_float, 1.0, None),
        "m": (_float, 0.0, None),
    },
    "anisotropy": {
        "family": (_str, "euclidean", _choice("family", ("euclidean", "power", "elliptic"))),
        "exponent": (_float, 4.0, None),
        "matrix": (_floats, (), None),
    },
    "mobility": {
        "family": (_str, "euclidean", _choice("family", ("euclidean", "power", "elliptic"))),
        "exponent": (_float, 2.0, None),
        "matrix": (_floats, (), None),
    },
    "grid": {
        "N": (_int, 1, _choice("N", (1, 2))),
        "h": (_float, 0.02, _pos("h")),
        "half_width": (_float, 8.0, _pos("half_width")),
        "period": (_float, 16.0, _pos("period")),
        "n": (_int, 256, _pos("n")),
    },
    "flow": {
        "cfl_factor": (_float, 0.25, _cfl),
        "T": (_float, 1.0, _pos("T")),
        "tau_end": (_float, 14.0, _pos("tau_end")),
        "snapshot_dt": (_float, None, _pos("snapshot_dt")),
        "snapshot_every": (_int, None, _pos("snapshot_every")),
        "tol_stat": (_float, 1e-8, _pos("tol_stat")),
    },
    "output": {
        "dir": (_str, "out", None),
    },
    "run": {
        "seed": (_int, None, None),
    },
}

# defaults that depend on the experiment id, applied when the key is absent
EXPERIMENT_DEFAULTS = {
    "grim_reaper": {("grid", "h"): 0.01, ("grid", "half_width"): 1.2, ("flow", "T"): 1.0},
    "scaling": {("grid", "h"): 0.01, ("grid", "half_width"): 32.0, ("experiment", "threshold"): 0.02},
    "expander": {("grid", "h"): 0.008, ("grid", "half_width"): 4.0, ("flow", "cfl_factor"): 0.5,
                 ("flow", "tau_end"): 40.0, ("experiment", "threshold"): 1e-3},
    "expander_ode": {("experiment", "threshold"): 1e-13},
    "rescaled_convergence": {("perturbation", "kind"): "sublinear",
                             ("experiment", "threshold"): 1e-2},
    "hyperplane": {("perturbation", "kind"): "vanishing", ("perturbation", "width"): 2.0,
                   ("flow", "T"): 20.0, ("flow", "snapshot_dt"): 0.05,
                   ("experiment", "threshold"): 0.1},
    "meanconvex": {("grid", "N"): 2, ("grid", "h"): 0.05, ("flow", "T"): 4.0,
                   ("flow", "snapshot_dt"): 0.25, ("perturbation", "kind"): "vanishing",
                   ("perturbation", "amplitude"): 0.5, ("perturbation", "width"): 1.0,
                   ("experiment", "threshold"): 2e-2},
    "wulff_barrier": {("grid", "h"): 0.01, ("flow", "T"): 0.1, ("flow", "snapshot_dt"): 0.01},
    "comparison": {("grid", "h"): 0.05, ("grid", "period"): 4.0, ("flow", "T"): 0.05,
                   ("flow", "snapshot_every"): 1, ("experiment", "n_pairs"): 100},
    "flow": {},
}


@dataclass
class RunConfig:
    """Validated configuration: every schema key present with a typed value."""

    sections: dict = field(default_factory=dict)

    def __getitem__(self, section):
        return self.sections[section]

    def get(self, section, key):
        return self.sections[section][key]

    def __eq__(self, other):
        return isinstance(other, RunConfig) and _canon(self.sections) == _canon(other.sections)


def _canon(d):
    return {s: {k: (tuple(v) if isinstance(v, (list, tuple)) else v) for k, v in kv.items()}
            for s, kv in d.items()}


def _find_line(text, section, key=None):
    """1-based line of ``key`` in ``section`` (or of the section header)."""
    current = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return i
            continue
        if current == section and key is not None:
            name = line.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return i
    return None


def _err(text, section, key, msg):
    line = _find_line(text, section, key)
    where = f"line {line}, " if line else ""
    target = f"[{section}] {key}" if key else f"[{section}]"
    return ConfigError(f"{where}{target}: {msg}")


def parse_config(text, overrides=()):
    """Parse and validate a configuration; ``overrides`` are ``section.key=value`` strings."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str  # keys are case-sensitive (N, K, R, T)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        lhs, value = item.split("=", 1)
        section, key = lhs.strip().split(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, value.strip())
    for section in cp.sections():
        if section not in SCHEMA:
            raise _err(text, section, None, "unknown section")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise _err(text, section, key, "unknown key")
    if not cp.has_option("experiment", "id"):
        raise _err(text, "experiment", "id", "missing required key")
    exp_id = cp["experiment"]["id"].strip()
    if exp_id not in EXPERIMENTS:
        raise _err(text, "experiment", "id", f"id must be one of {', '.join(EXPERIMENTS)}")
    extra = EXPERIMENT_DEFAULTS[exp_id]
    sections = {}
    for section, keys in SCHEMA.items():
        out = {}
        for key, (conv, default, check) in keys.items():
            if cp.has_option(section, key):
                raw = cp[section][key]
                if raw.strip().lower() == "none" and default is None:
                    value = None
                else:
                    try:
                        value = conv(raw)
                    except ValueError as exc:
                        raise _err(text, section, key, f"cannot parse {raw!r}: {exc}") from None
            elif (section, key) in extra:
                value = extra[(section, key)]
            elif default is REQUIRED:
                raise _err(text, section, key, "missing required key")
            else:
                value = default
            if check is not None and value is not None:
                msg = check(value)
                if msg:
                    raise _err(text, section, key, msg)
            out[key] = value
        sections[section] = out
    cfg = RunConfig(sections)
    _cross_check(cfg, text)
    return cfg


def _cross_check(cfg, text):
    try:
        cone = parse_cone(cfg.get("experiment", "cone"), cfg.get("grid", "N"))
    except (ValueError, UsageError) as exc:
        raise _err(text, "experiment", "cone", str(exc)) from None
    if cone.N != cfg.get("grid", "N"):
        raise _err(text, "experiment", "cone", "cone dimension does not match grid N")
    if cfg.get("experiment", "t2") < cfg.get("experiment", "t1"):
        raise _err(text, "experiment", "t2", "t2 must be at least t1")
    for sec in ("anisotropy", "mobility"):
        try:
            build_model(cfg[sec], cfg.get("grid", "N"))
        except (ValueError, UsageError) as exc:
            raise _err(text, sec, "family", str(exc)) from None


def _fmt(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


def emit_config(cfg):
    """Configuration text with every key; parse_config(emit_config(c)) == c."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {_fmt(cfg.get(section, key))}")
        lines.append("")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# builders


def parse_cone(text, N=1):
    """``abs:alpha`` or ``maxaffine:a1;a2;...`` (rows of comma-separated slopes)."""
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind == "abs":
        return ConeSpec.abs(float(arg or 1.0), N)
    if kind == "maxaffine":
        rows = [[float(v) for v in row.split(",")] for row in arg.split(";") if row.strip()]
        return ConeSpec.max_affine(rows)
    raise ValueError(f"unknown cone {text!r}; use abs:alpha or maxaffine:rows")


def build_model(sec, N):
    dim = N + 1
    fam = sec["family"]
    if fam == "euclidean":
        return Euclidean(dim)
    if fam == "power":
        return PowerNorm(dim, sec["exponent"])
    m = np.asarray(sec["matrix"], float)
    if m.size != dim * dim:
        raise ValueError(f"elliptic matrix needs {dim * dim} entries, got {m.size}")
    return Elliptic(m.reshape(dim, dim))


def build_perturbation(sec):
    kind = sec["kind"]
    if kind == "sublinear":
        return ex.PerturbationSpec.sublinear(sec["K"], sec["delta"], sec["width"])
    if kind == "vanishing":
        return ex.PerturbationSpec.vanishing(sec["amplitude"], sec["width"])
    if kind == "offset":
        return ex.PerturbationSpec.offset(sec["m"])
    return None


def _flow_params(cfg, T=None):
    f = cfg["flow"]
    return FlowParams(T=f["T"] if T is None else T, cfl_factor=f["cfl_factor"],
                      snapshot_dt=f["snapshot_dt"], snapshot_every=f["snapshot_every"],
                      tol_stat=f["tol_stat"])


# --------------------------------------------------------------------------
# runners: each returns (report, extra artifact writer or None)


def _run_expander(cfg, out):
    N, g = cfg.get("grid", "N"), cfg["grid"]
    cone = parse_cone(cfg.get("experiment", "cone"), N)
    phi = build_model(cfg["anisotropy"], N)
    psi = MobilityModel(build_model(cfg["mobility"], N))
    f = cfg["flow"]
    params = FlowParams(T=f["tau_end"], cfl_factor=f["cfl_factor"], tol_stat=f["tol_stat"])
    prof = compute_expander(cone, params, phi, psi, cone_grid(cone, N, g["h"], g["half_width"]))
    rep = expander_far_field(prof, cone)
    rep.id = "expander"
    rep.config.update(h=g["h"], half_width=g["half_width"], tau_end=f["tau_end"],
                      tol_stat=f["tol_stat"], phi=repr(phi), psi=repr(psi))
    rep.add("fixed_point_residual",
            expander_fixed_point_check(prof, phi, psi, cfl_factor=f["cfl_factor"]),
            10 * f["tol_stat"])
    u0 = float(prof.field.sample(np.zeros(N))[()])
    rep.flag("center_value", u0)
    if N == 1 and cone.kind == "abs" and cfg.get("anisotropy", "family") == "euclidean" \
            and cfg.get("mobility", "family") == "euclidean":
        w0 = ex.oracle_expander_ode(cone.slope)
        rep.add("oracle_center_error", abs(u0 - w0), cfg.get("experiment", "threshold"))
    path = os.path.join(out, "expander_profile.txt")
    os.makedirs(out, exist_ok=True)
    prof.save(path)
    rep.artifacts.append(path)
    return rep


def _run_comparison(cfg, seed):
    """Random ordered Lipschitz pairs on a periodic grid, advanced in lockstep."""
    g = cfg["grid"]
    N = g["N"]
    phi = build_model(cfg["anisotropy"], N)
    psi = MobilityModel(build_model(cfg["mobility"], N))
    rng = np.random.default_rng(0 if seed is None else seed)
    grid = GraphGrid.periodic(N, g["h"], g["period"])
    rep = ExperimentReport("comparison", config=dict(seed=seed, n_pairs=cfg.get("experiment", "n_pairs"),
                                                     h=g["h"], period=g["period"], N=N,
                                                     phi=repr(phi), psi=repr(psi)))
    worst = -math.inf
    for _ in range(cfg.get("experiment", "n_pairs")):
        u, v = random_ordered_pair(grid, rng)
        a, b = evolve_lockstep([u, v], _flow_params(cfg), phi, psi, record=False)
        worst = max(worst, comparison_check(a, b).metric("max_violation").value)
    rep.add("max_violation", worst, 1e-10)
    return rep


def random_ordered_pair(grid, rng, lip=1.0, modes=4):
    """Random periodic u <= v with Lipschitz constant at most about ``lip``.

    Even draws are smooth Fourier sums with a strictly positive gap; odd draws
    are rough piecewise-linear walks whose gap max(0, walk) vanishes on a
    large set, so the pair touches.
    """
    L = grid.shape[0] * grid.h
    x = grid.points()

    def smooth():
        out = np.zeros(grid.shape)
        for _ in range(modes):
            k = rng.integers(1, 4, size=grid.N)
            ph = rng.uniform(0, 2 * np.pi)
            amp = rng.uniform(-1, 1) * lip * L / (2 * np.pi * modes * np.linalg.norm(k))
            out += amp * np.cos(2 * np.pi * (x @ k) / L + ph)
        return out

    def rough():
        # sum of per-axis periodic walks with slopes in [-lip, lip] / N
        out = np.zeros(grid.shape)
        for k, n in enumerate(grid.shape):
            s = rng.uniform(-1, 1, n)
            s -= s.mean()
            s *= lip / (grid.N * max(1.0, np.abs(s).max()))
            walk = np.concatenate([[0.0], np.cumsum(s[:-1])]) * grid.h
            shape = [1] * grid.N
            shape[k] = n
            out = out + walk.reshape(shape)
        return out

    if rng.integers(2) == 0:
        u = smooth()
        gap = np.abs(smooth()) + rng.uniform(0, 0.05)
    else:
        u = rough()
        gap = np.maximum(0.0, rough())
    return GraphField(grid, u, 0.0), GraphField(grid, u + gap, 0.0)


def _run_flow(cfg, out):
    """Plain evolution of cone (+ perturbation) data; writes records and final snapshot."""
    g = cfg["grid"]
    N = g["N"]
    phi = build_model(cfg["anisotropy"], N)
    psi = MobilityModel(build_model(cfg["mobility"], N))
    cone = parse_cone(cfg.get("experiment", "cone"), N)
    grid = cone_grid(cone, N, g["h"], g["half_width"])
    vals = cone(grid.points())
    pert = build_perturbation(cfg["perturbation"])
    if pert is not None:
        vals = vals + pert(grid.points())
    traj = evolve(GraphField(grid, vals, 0.0), _flow_params(cfg), phi, psi)
    os.makedirs(out, exist_ok=True)
    rec = os.path.join(out, "flow_records.csv")
    snap = os.path.join(out, "flow_final.txt")
    traj.to_csv(rec)
    write_snapshot(snap, traj.final)
    rep = ExperimentReport("flow", config=dict(cone=cone.describe(), h=g["h"],
                                               half_width=g["half_width"], T=cfg.get("flow", "T")))
    rep.add("finite", int(traj.final.finite), 1, relation="==")
    rep.flag("lipschitz_growth", float(traj.records["lipschitz"].max() - traj.meta["lipschitz0"]))
    rep.artifacts += [rec, snap]
    return rep


def run_experiment(cfg, out, seed=None):
    e = cfg["experiment"]
    g = cfg["grid"]
    f = cfg["flow"]
    N = g["N"]
    exp_id = e["id"]
    phi = build_model(cfg["anisotropy"], N)
    psi = MobilityModel(build_model(cfg["mobility"], N))
    pert = build_perturbation(cfg["perturbation"])
    if exp_id == "grim_reaper":
        if N != 1 or cfg.get("anisotropy", "family") != "euclidean":
            raise ConfigError("grim reaper oracle is for N=1 with Euclidean anisotropy")
        return ex.oracle_grim_reaper(h=g["h"], T=f["T"], half_width=g["half_width"],
                                     cfl_factor=f["cfl_factor"])
    if exp_id == "expander_ode":
        rep = ExperimentReport("expander_ode", config=dict(alphas=list(e["alphas"])))
        for a in e["alphas"]:
            rep.flag(f"w0_alpha={a!r}", ex.oracle_expander_ode(a, tol=e["threshold"]))
        return rep
    if exp_id == "scaling":
        cone = parse_cone(e["cone"], N)
        return scaling_check(cone, e["t1"], e["t2"], phi, psi, h=g["h"],
                             half_width=g["half_width"], cfl_factor=f["cfl_factor"],
                             rel_tol=e["threshold"])
    if exp_id == "expander":
        return _run_expander(cfg, out)
    if exp_id == "rescaled_convergence":
        cone = parse_cone(e["cone"], N)
        if pert is None:
            raise ConfigError("[perturbation] kind: rescaled convergence needs a perturbation")
        return ex.exp_rescaled_convergence(
            cone, pert, phi, psi, h=g["h"], half_width=g["half_width"], tau_end=f["tau_end"],
            threshold=e["threshold"], tol_stat=f["tol_stat"], cfl_factor=f["cfl_factor"],
            snapshot_dt=f["snapshot_dt"] or 0.25)
    if exp_id == "hyperplane":
        if pert is None or pert.kind != "vanishing":
            raise ConfigError("[perturbation] kind: hyperplane stability needs kind = vanishing")
        return ex.exp_hyperplane_stability(
            pert, phi, psi, h=g["h"], period=g["period"], T=f["T"], eps=e["eps"],
            ratio=e["threshold"], snapshot_dt=f["snapshot_dt"] or 0.05,
            cfl_factor=f["cfl_factor"], check_symmetry=e["check_symmetry"])
    if exp_id == "meanconvex":
        cone = parse_cone(e["cone"], N)
        if pert is None or pert.kind != "vanishing":
            raise ConfigError("[perturbation] kind: mean-convex stability needs kind = vanishing")
        return ex.exp_meanconvex_stability(
            cone, pert, phi, psi, h=g["h"], n=g["n"], T=f["T"], threshold=e["threshold"],
            snapshot_dt=f["snapshot_dt"] or 0.25, cfl_factor=f["cfl_factor"])
    if exp_id == "wulff_barrier":
        params = FlowParams(T=f["T"], cfl_factor=f["cfl_factor"],
                            snapshot_dt=f["snapshot_dt"], snapshot_every=f["snapshot_every"],
                            stop_at_stationary=False)
        return wulff_barrier_check(e["R"], phi, psi, params, N=N, h=g["h"])
    if exp_id == "comparison":
        return _run_comparison(cfg, seed if seed is not None else cfg.get("run", "seed"))
    return _run_flow(cfg, out)


EXIT_PASS, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CHECK = 0, 2, 3, 4


def dispatch(cfg, out=None, seed=None, stream=None):
    """Run the configured experiment, write its report, and return the exit status."""
    out = out or cfg.get("output", "dir")
    try:
        rep = run_experiment(cfg, out, seed)
    except AnisoFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    os.makedirs(out, exist_ok=True)
    echo = os.path.join(out, "config_echo.ini")
    with open(echo, "w", encoding="utf-8") as fh:
        fh.write(emit_config(cfg))
    rep.artifacts.append(echo)
    rep.write(out)
    print(rep.summary(), file=stream or sys.stdout)
    return EXIT_PASS if rep.passed else EXIT_CHECK


# --------------------------------------------------------------------------
# entry point

SUBCOMMAND_IDS = {
    "expander": ("expander",),
    "rescaled": ("rescaled_convergence",),
    "barrier-check": ("wulff_barrier", "hyperplane", "comparison"),
    "oracle": ("grim_reaper", "expander_ode"),
}


def _parser():
    p = argparse.ArgumentParser(prog="anisoflow",
                                description="Anisotropic mean curvature flow of graphs.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("run", "run the experiment named in the configuration"),
        ("expander", "compute an expander profile from a cone"),
        ("rescaled", "rescaled convergence experiment"),
        ("barrier-check", "Wulff barrier, periodic barrier or comparison checks"),
        ("oracle", "exact-solution oracles"),
        ("suite", "run every acceptance experiment with defaults"),
    ]:
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="configuration file")
        s.add_argument("--out", help="output directory")
        s.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE")
        s.add_argument("--seed", type=int)
        s.add_argument("--emit", action="store_true", help="print the validated configuration")
        if name == "suite":
            s.add_argument("--quick", action="store_true", help="coarse smoke-test settings")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "suite":
        out = args.out or "out"
        try:
            reports = ex.suite(out, quick=args.quick)
        except AnisoFlowError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return exc.exit_code
        for r in reports:
            print(r.summary())
        return EXIT_PASS if all(r.passed for r in reports) else EXIT_CHECK
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    overrides = list(args.override)
    if args.command in SUBCOMMAND_IDS and "[experiment]" not in text \
            and not any(o.startswith("experiment.id=") for o in overrides):
        overrides.insert(0, f"experiment.id={SUBCOMMAND_IDS[args.command][0]}")
    try:
        cfg = parse_config(text, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command in SUBCOMMAND_IDS and cfg.get("experiment", "id") not in SUBCOMMAND_IDS[args.command]:
        print(f"error: experiment {cfg.get('experiment', 'id')!r} does not belong to "
              f"'{args.command}'", file=sys.stderr)
        return EXIT_CONFIG
    if args.emit:
        print(emit_config(cfg))
        return EXIT_PASS
    return dispatch(cfg, out=args.out, seed=args.seed)


if __name__ == "__main__":
    sys.exit(main())
