"""``gwphase`` command line: run named scenarios from a config file.

    gwphase run --config cone.yaml [--out result.csv] [--format csv|json]
    gwphase list-scenarios
    gwphase validate --config cone.yaml

Configs are YAML (JSON is accepted as a subset) with the keys ``scenario``,
``params``, ``resolution``, ``out`` and ``format``.  See SCHEMA.md for the
per-scenario keys and the output columns.

Exit codes: 0 success, 2 invalid config, 3 numerical failure, 4 I/O error.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np
import yaml

from . import bornopp, dynamics
from .biortho import track_branches
from .errors import ContractViolation, GWPhaseError
from .geomphase import GWPhase, aa_phase, phase_difference, phase_line_integral, phase_naive
from .geomphase import phase_surface_integral
from .scenarios import ac, cone, optics

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

COLUMNS = [
    "scenario",
    "case",
    "index",
    "phi_re",
    "phi_im",
    "phi_branch",
    "ref_re",
    "ref_im",
    "error",
    "omega_re",
    "omega_im",
    "factor_re",
    "factor_im",
    "ratio",
    "note",
    "params",
]

TOP_KEYS = {"scenario", "params", "resolution", "out", "format"}
FORMATS = ("csv", "json")


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------- value parsing


def _complex(v, key):
    if isinstance(v, bool):
        raise ConfigError(f"{key}: expected a number")
    if isinstance(v, (int, float)):
        z = complex(v)
    elif isinstance(v, (list, tuple)) and len(v) == 2 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
    ):
        z = complex(v[0], v[1])
    elif isinstance(v, str):
        try:
            z = complex(v.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {v!r} as a complex number") from None
    else:
        raise ConfigError(f"{key}: expected a number, [re, im] or a string like '0.5+0.2j'")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ConfigError(f"{key}: must be finite")
    return z


def _real(v, key):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{key}: expected a finite real number")
    return float(v)


def _int(v, key):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key}: expected an integer")
    return int(v)


def _pos_int(v, key):
    n = _int(v, key)
    if n <= 0:
        raise ConfigError(f"{key}: must be positive")
    return n


def _pos_real(v, key):
    x = _real(v, key)
    if x <= 0:
        raise ConfigError(f"{key}: must be positive")
    return x


def _field(v, key):
    z = _complex(v, key)
    if z.real <= 0:
        raise ConfigError(f"{key}: real part must be positive")
    return z


def _sign(v, key):
    n = _int(v, key)
    if n not in (-1, 1):
        raise ConfigError(f"{key}: must be 1 or -1")
    return n


def _branch2(v, key):
    n = _int(v, key)
    if n not in (0, 1):
        raise ConfigError(f"{key}: must be 0 or 1")
    return n


def _int_list(v, key):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{key}: expected a non-empty list of integers")
    return [_int(x, key) for x in v]


def _pos_list(v, key):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{key}: expected a non-empty list of positive numbers")
    return [_pos_real(x, key) for x in v]


def _vector2(v, key):
    if not isinstance(v, list) or len(v) != 2:
        raise ConfigError(f"{key}: expected two complex components")
    z = np.array([_complex(x, key) for x in v])
    if np.linalg.norm(z) == 0:
        raise ConfigError(f"{key}: zero vector")
    return z


def _matrix(v, key):
    if not isinstance(v, list) or not v or not all(isinstance(r, list) and len(r) == len(v) for r in v):
        raise ConfigError(f"{key}: expected a square matrix (list of rows)")
    return np.array([[_complex(x, key) for x in row] for row in v])


# ---------------------------------------------------------------- scenarios


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    params: dict  # key -> (parser, default)
    resolution: dict  # key -> default (positive integers)
    runner: object
    check: object = None


def _phase_cols(phase):
    v = complex(phase.value if isinstance(phase, GWPhase) else phase)
    g = GWPhase.from_value(v)
    with np.errstate(over="ignore", invalid="ignore"):
        f = np.exp(1j * v)
    return {
        "phi_re": v.real,
        "phi_im": v.imag,
        "phi_branch": g.real_part_branch,
        "factor_re": f.real,
        "factor_im": f.imag,
    }


def _ref_cols(phase, ref):
    ref = complex(ref)
    return {"ref_re": ref.real, "ref_im": ref.imag, "error": phase_difference(complex(phase), ref)}


def _cone_setup(p):
    shape = cone.ComplexCone(p["b"], p["theta"], 2 * np.pi, p["handedness"])
    exact = shape.exact_phase if p["branch"] == 1 else -shape.exact_phase
    return shape, exact


def run_cone(p, r):
    shape, exact = _cone_setup(p)
    loop = cone.cone_loop(shape, r["samples"])
    branch = track_branches(loop)[p["branch"]]
    rows = []
    line = phase_line_integral(branch).value
    rows.append({"case": "line", **_phase_cols(line), **_ref_cols(line, exact)})
    naive = phase_naive(branch).value
    rows.append({"case": "naive", **_phase_cols(naive), **_ref_cols(naive, exact)})
    if shape.theta.imag == 0 and shape.b.imag == 0:
        aa = aa_phase(branch, loop).value
        rows.append({"case": "aa", **_phase_cols(aa), **_ref_cols(aa, exact)})
    return rows


def run_stokes(p, r):
    shape, exact = _cone_setup(p)
    branch = track_branches(cone.cone_loop(shape, r["samples"]))[p["branch"]]
    line = phase_line_integral(branch).value
    surf = phase_surface_integral(cone.cone_surface(shape, r["grid"], r["grid"]), p["branch"]).value
    return [
        {"case": "line", **_phase_cols(line), **_ref_cols(line, exact)},
        {"case": "surface", **_phase_cols(surf), **_ref_cols(surf, line)},
    ]


def run_jones(p, r):
    A = optics.linear_dichroic(p["kappa"], p["length"], 0.0, "A", p["activity"])
    B = optics.rotated(A, np.deg2rad(p["angle_deg"]), "B")
    vac = optics.vacuum()
    eps = p["polarization"]
    merged = [vac, A, B, vac]
    reference = [vac, A, vac, B, vac]
    phi = optics.sequence_phase_extract(merged, reference, eps).value
    ref = optics.three_vertex_phase(eps, A, B)
    phi_ref = optics.sequence_circuit_phase(reference, eps)
    return [
        {"case": "merged", **_phase_cols(phi), **_ref_cols(phi, ref)},
        {"case": "reference", **_phase_cols(phi_ref), **_ref_cols(phi_ref, 0.0)},
    ]


def run_helix(p, r):
    N = optics.elliptic_generator(p["a"], p["c"])
    L = p["length"]
    loop = optics.helical_fiber_loop(p["rotation"] * 2 * np.pi / L, N, L, r["samples"])
    branch = track_branches(loop)[p["branch"]]
    line = phase_line_integral(branch).value
    exact = optics.helix_exact_phase(p["a"], p["c"], p["rotation"], p["branch"])
    return [{"case": "line", **_phase_cols(line), **_ref_cols(line, exact)}]


def _circle(radius, turns, vertices):
    if turns == 0:
        # a circle beside the line charge
        t = np.linspace(0, 2 * np.pi, vertices, endpoint=False)
        return ac.PlanarPath.from_xy(3 * radius + radius * np.cos(t), radius * np.sin(t))
    count = vertices * abs(turns)
    t = np.sign(turns) * np.linspace(0, 2 * np.pi * abs(turns), count, endpoint=False)
    return ac.PlanarPath.from_polar(np.full(count, radius), t)


def run_ac(p, r):
    model = ac.ACModel(p["h_int"], p["mu_z"], p["rho"])
    mu = ac.effective_moment(model, p["branch"])
    rows = []
    for n in sorted(set(p["windings"])):
        path = _circle(p["radius"], n, r["vertices"])
        phase = ac.ac_geometric_phase(model, path, p["branch"]).value
        fac = ac.topological_factor(mu, model.rho, path)
        dropped = ac.neglected_terms(model, path, p["branch"])
        row = {"case": "winding", "index": n, **_phase_cols(phase)}
        row.update(
            factor_re=fac.topological.real,
            factor_im=fac.topological.imag,
            ratio=fac.log_magnitude,
            omega_re=mu.real,
            omega_im=mu.imag,
            note=f"neglected quadratic={dropped.quadratic:.17g} interbranch={dropped.interbranch:.17g}",
        )
        rows.append(row)
    return rows


def _check_loop_samples(p, r):
    if r.get("samples", 100) < 100:
        raise ConfigError("resolution.samples: at least 100 loop samples are needed")


def _check_ac(p, r):
    if p["h_int"].shape != p["mu_z"].shape:
        raise ConfigError("params.h_int and params.mu_z must have the same shape")
    if not 0 <= p["branch"] < p["h_int"].shape[0]:
        raise ConfigError("params.branch: out of range")


def _check_bo(p, r):
    _check_loop_samples(p, r)
    if r["gridN"] > bornopp.MAX_GRID or r["gridN"] < 8:
        raise ConfigError(f"resolution.gridN: must lie in [8, {bornopp.MAX_GRID}]")


def run_bo(p, r):
    shape, _ = _cone_setup({"b": p["b"], "theta": p["theta"], "handedness": 1, "branch": p["branch"]})
    fam = bornopp.FastFamily(lambda Q: cone.cone_hamiltonian(shape.b, shape.theta, Q), p["mass"])
    pot = bornopp.bo_potentials(fam, p["branch"], r["gridN"])
    fast = phase_line_integral(track_branches(cone.cone_loop(shape, r["samples"]))[p["branch"]]).value
    loop = pot.loop_integral()
    dev = bornopp.flux_equivalence(pot, p["mass"], r["gridN"], bornopp.random_gauge(p["gauge_seed"]))
    spectrum = bornopp.ring_spectrum(pot, p["mass"], r["gridN"])
    rows = [
        {"case": "loop", **_phase_cols(loop), **_ref_cols(loop, fast)},
        {"case": "flux", "error": dev},
    ]
    for k, w in enumerate(spectrum[: p["levels"]]):
        rows.append({"case": "level", "index": k, "omega_re": w.real, "omega_im": w.imag})
    return rows


def run_adiabatic(p, r):
    shape, _ = _cone_setup({"b": p["b"], "theta": p["theta"], "handedness": 1, "branch": p["branch"]})

    def factory(T):
        return cone.cone_loop(cone.ComplexCone(shape.b, shape.theta, T), r["samples"])

    points = dynamics.adiabatic_sweep(
        factory, p["durations"], p["branch"], steps_per_unit_time=r["steps_per_unit_time"]
    )
    rows = []
    for pt in sorted(points, key=lambda q: q.T):
        row = {"case": "sweep", "index": pt.T, **_phase_cols(pt.extracted)}
        row.update(ref_re=pt.predicted.real, ref_im=pt.predicted.imag, error=pt.error, ratio=pt.ratio)
        row["note"] = "adiabatic" if pt.adiabatic else "non-adiabatic"
        rows.append(row)
    return rows


_CONE_PARAMS = {
    "b": (_field, 1.0),
    "theta": (_complex, [0.5, 0.2]),
    "handedness": (_sign, 1),
    "branch": (_branch2, 1),
}

SCENARIOS = {
    s.name: s
    for s in [
        Scenario("cone", "two-level field on a complex cone: line, naive and AA phases vs closed form",
                 _CONE_PARAMS, {"samples": 4001}, run_cone, _check_loop_samples),
        Scenario("stokes", "complex cone: line integral vs surface integral of the two-form",
                 _CONE_PARAMS, {"samples": 4001, "grid": 201}, run_stokes, _check_loop_samples),
        Scenario("jones", "dichroic crystal sequences vac-A-B-vac against vac-A-vac-B-vac",
                 {"kappa": (_real, 0.3), "length": (_pos_real, 1.0), "angle_deg": (_real, 30.0),
                  "activity": (_real, 0.0), "polarization": (_vector2, [1.0, [0.0, 1.0]])},
                 {}, run_jones),
        Scenario("helix", "one-turn helical fiber of elliptically dichroic material",
                 {"a": (_complex, [0.3, -0.1]), "c": (_complex, 1.0), "rotation": (_sign, 1),
                  "length": (_pos_real, 1.0), "branch": (_branch2, 0)},
                 {"samples": 4001}, run_helix, _check_loop_samples),
        Scenario("ac", "metastable-moment AC phase and topological decay factor by winding number",
                 {"h_int": (_matrix, [[[1.0, -0.1], 0.2], [0.2, [1.5, -0.6]]]),
                  "mu_z": (_matrix, [[1.0, 0.0], [0.0, -1.0]]), "rho": (_real, 0.4),
                  "branch": (_int, 0), "windings": (_int_list, [-3, -2, -1, 0, 1, 2, 3]),
                  "radius": (_pos_real, 1.0)},
                 {"vertices": 64}, run_ac, _check_ac),
        Scenario("bo", "Born-Oppenheimer ring over a complex-cone fast system: loop integral, gauge check, levels",
                 {"b": (_field, 10.0), "theta": (_complex, [0.5, 0.2]), "mass": (_pos_real, 50.0),
                  "branch": (_branch2, 1), "levels": (_pos_int, 8), "gauge_seed": (_int, 0)},
                 {"gridN": 128, "samples": 4001}, run_bo, _check_bo),
        Scenario("adiabatic", "exact evolution around the complex cone for several durations",
                 {"b": (_field, 1.0), "theta": (_complex, [0.5, 0.2]), "branch": (_branch2, 1),
                  "durations": (_pos_list, [20.0, 80.0, 320.0])},
                 {"steps_per_unit_time": 20, "samples": 2001}, run_adiabatic,
                 _check_loop_samples),
    ]
}


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    params: dict
    resolution: dict
    out: object
    format: str


def _echo(v):
    if isinstance(v, np.ndarray):
        return _echo(v.tolist())
    if isinstance(v, (list, tuple)):
        return [_echo(x) for x in v]
    if isinstance(v, complex):
        return [v.real, v.imag] if v.imag else v.real
    return v


def parse_config(data):
    """Validate a loaded config mapping and fill in defaults."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    extra = set(data) - TOP_KEYS
    if extra:
        raise ConfigError(f"unknown keys: {sorted(extra)}")
    name = data.get("scenario")
    if name not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {sorted(SCENARIOS)}")
    sc = SCENARIOS[name]
    raw = data.get("params") or {}
    res = data.get("resolution") or {}
    if not isinstance(raw, dict) or not isinstance(res, dict):
        raise ConfigError("params and resolution must be mappings")
    extra = set(raw) - set(sc.params)
    if extra:
        raise ConfigError(f"unknown params for {name}: {sorted(extra)}")
    extra = set(res) - set(sc.resolution)
    if extra:
        raise ConfigError(f"unknown resolution keys for {name}: {sorted(extra)}")
    params = {k: parse(raw.get(k, default), f"params.{k}") for k, (parse, default) in sc.params.items()}
    resolution = {k: _pos_int(res.get(k, default), f"resolution.{k}") for k, default in sc.resolution.items()}
    if sc.check is not None:
        sc.check(params, resolution)
    fmt = data.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}")
    out = data.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out must be a path string")
    return RunConfig(name, params, resolution, out, fmt)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return parse_config(data)


# ---------------------------------------------------------------- run / emit


def _params_echo(cfg):
    echo = {"params": {k: _echo(v) for k, v in cfg.params.items()}, "resolution": cfg.resolution}
    return json.dumps(echo, sort_keys=True, separators=(",", ":"))


def _finish(cfg, rows):
    echo = _params_echo(cfg)
    out = []
    for row in rows:
        rec = {c: None for c in COLUMNS}
        rec.update(row)
        rec["scenario"] = cfg.scenario
        rec["params"] = echo
        for k, v in rec.items():
            if isinstance(v, (np.floating, np.integer)):
                rec[k] = v.item()
        out.append(rec)
    return out


def run(cfg):
    """Records for a validated config, in a deterministic order."""
    records = _finish(cfg, SCENARIOS[cfg.scenario].runner(cfg.params, cfg.resolution))
    for rec in records:
        for k, v in rec.items():
            if isinstance(v, float) and not math.isfinite(v):
                raise GWPhaseError(f"non-finite {k} in {rec['case']} row")
    return records


def failure_record(cfg, exc):
    return _finish(cfg, [{"case": "failure", "note": f"{type(exc).__name__}: {exc}"}])


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def render(records, fmt):
    if not records:
        raise ContractViolation("no records to emit")
    if fmt == "json":
        return json.dumps(records, ensure_ascii=False, indent=1, allow_nan=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for rec in records:
        w.writerow([_cell(rec.get(c)) for c in COLUMNS])
    return buf.getvalue()


def emit(records, fmt, path=None):
    """Write records as CSV or JSON to `path`, or to stdout when it is None."""
    text = render(records, fmt)
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------- entry point


def _check_threads():
    env = os.environ.get("GWPHASE_THREADS")
    if env is None:
        return
    try:
        ok = int(env) > 0
    except ValueError:
        ok = False
    if not ok:
        raise ConfigError("GWPHASE_THREADS must be a positive integer")


def _err(msg):
    print(f"gwphase: {msg}", file=sys.stderr)


def _cmd_run(args):
    try:
        _check_threads()
        cfg = load_config(args.config)
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO
    fmt = args.format or cfg.format
    out = args.out or cfg.out
    start = time.perf_counter()
    code = EXIT_OK
    try:
        records = run(cfg)
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    except (GWPhaseError, np.linalg.LinAlgError, FloatingPointError) as exc:
        _err(f"numerical failure: {type(exc).__name__}: {exc}")
        records = failure_record(cfg, exc)
        code = EXIT_NUMERICAL
    # wall time stays out of the records so that reruns are byte-identical
    _err(f"{cfg.scenario}: {len(records)} records in {time.perf_counter() - start:.3f} s")
    try:
        emit(records, fmt, out)
    except OSError as exc:
        _err(f"cannot write output: {exc}")
        return EXIT_IO
    return code


def _cmd_validate(args):
    try:
        _check_threads()
        cfg = load_config(args.config)
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO
    print(f"ok: {cfg.scenario}")
    return EXIT_OK


def _cmd_list(args):
    for name in sorted(SCENARIOS):
        print(f"{name}\t{SCENARIOS[name].description}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="gwphase", description="Complex geometric phase scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="output file (default: stdout)")
    p_run.add_argument("--format", choices=FORMATS, default=None)
    p_run.set_defaults(func=_cmd_run)
    p_list = sub.add_parser("list-scenarios", help="list scenario names")
    p_list.set_defaults(func=_cmd_list)
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which matches the config code
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
