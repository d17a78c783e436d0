"""Command-line front end: ``nls-peaks <task> --config <file> --out <dir>``.

Each task reads one TOML experiment file, validates every block before any
computation, runs the pipeline and writes CSV/JSON/SVG artefacts plus a
``manifest.json`` with the SHA-256 of the config and of every output.

Exit codes: 0 success, 2 configuration error, 3 task failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import platform
import sys
from pathlib import Path

import numpy as np
import tomli

from . import __version__
from .errors import ConfigError, InadmissibleBeta, InsufficientData, NLSPeaksError, TaskError

__all__ = ["main", "run", "load_config", "validate_config", "asymptotics_report", "TASKS",
           "EXIT_CONFIG", "EXIT_TASK"]

TASKS = ("ground-state", "reduced-scan", "solve", "spectrum", "pohozaev", "decay",
         "full-pipeline")
EXIT_CONFIG = 2
EXIT_TASK = 3

_BLOCKS = {"task", "potentials", "amplitudes", "ansatz", "solver", "ground_state", "pohozaev",
           "scan"}
_KEYS = {
    "amplitudes": {"mu1", "mu2", "beta"},
    "ansatz": {"k", "r", "epsilon", "mode", "rho", "delta", "inner", "exponent"},
    "solver": {"h", "margin", "tol", "stencil", "count", "subspace", "half_width",
               "projected", "inner_solution"},
    "ground_state": {"mu", "tol", "r_max"},
    "pohozaev": {"center", "delta", "direction"},
    "scan": {"points", "m_values"},
}
_POTENTIAL_KEYS = {"a", "m", "c", "constant"}


# ---------------------------------------------------------------- configuration
def load_config(path) -> tuple[dict, bytes]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from exc
    try:
        cfg = tomli.loads(raw.decode("utf-8"))
    except (tomli.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"malformed TOML ({exc})", str(path)) from exc
    return cfg, raw


def _number(block, key, where, positive=False, integer=False, default=None):
    val = block.get(key, default)
    if val is None:
        raise ConfigError("missing required key", f"{where}.{key}")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"expected a number, got {type(val).__name__}", f"{where}.{key}")
    if integer and int(val) != val:
        raise ConfigError("expected an integer", f"{where}.{key}")
    if not math.isfinite(val) or (positive and val <= 0):
        raise ConfigError("must be finite" + (" and positive" if positive else ""),
                          f"{where}.{key}")
    return int(val) if integer else float(val)


def validate_config(cfg: dict, task: str) -> dict:
    """Check cross-field consistency and return a normalised copy.

    Raises :class:`ConfigError` naming the offending key path.
    """
    from .ansatz import SEG, SYNC
    from .ground_state import coupled_amplitudes

    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}", "task")
    for key in cfg:
        if key not in _BLOCKS:
            raise ConfigError("unknown block", key)
    for block, allowed in _KEYS.items():
        sub = cfg.get(block, {})
        if not isinstance(sub, dict):
            raise ConfigError("expected a table", block)
        for key in sub:
            if key not in allowed:
                raise ConfigError("unknown key", f"{block}.{key}")
    out = {"task": task}

    pots = cfg.get("potentials", {})
    if not isinstance(pots, dict):
        raise ConfigError("expected a table", "potentials")
    norm_pots = {}
    for name in pots:
        if name not in ("P", "Q"):
            raise ConfigError("unknown potential (use P or Q)", f"potentials.{name}")
    for name in ("P", "Q"):
        spec = pots.get(name, {})
        for key in spec:
            if key not in _POTENTIAL_KEYS:
                raise ConfigError("unknown key", f"potentials.{name}.{key}")
        if spec.get("constant", False):
            norm_pots[name] = {"constant": True}
            continue
        entry = {"a": _number(spec, "a", f"potentials.{name}", default=1.0),
                 "m": _number(spec, "m", f"potentials.{name}", default=4.0),
                 "c": _number(spec, "c", f"potentials.{name}", default=0.1)}
        if entry["m"] <= 2:
            raise ConfigError("m must exceed 2", f"potentials.{name}.m")
        norm_pots[name] = entry
    out["potentials"] = norm_pots

    amp = cfg.get("amplitudes", {})
    mu1 = _number(amp, "mu1", "amplitudes", positive=True, default=1.0)
    mu2 = _number(amp, "mu2", "amplitudes", positive=True, default=1.0)
    beta = _number(amp, "beta", "amplitudes", default=0.0)
    try:
        coupled_amplitudes(mu1, mu2, beta)
    except InadmissibleBeta as exc:
        raise ConfigError(str(exc), "amplitudes.beta") from exc
    out["amplitudes"] = {"mu1": mu1, "mu2": mu2, "beta": beta}

    ans = cfg.get("ansatz", {})
    ks = ans.get("k", 1)
    ks = ks if isinstance(ks, list) else [ks]
    if not ks:
        raise ConfigError("empty list", "ansatz.k")
    kk = []
    for n, k in enumerate(ks):
        kk.append(_number({"k": k}, "k", "ansatz", positive=True, integer=True))
    mode = ans.get("mode", SYNC)
    if mode not in (SYNC, SEG):
        raise ConfigError(f"must be {SYNC!r} or {SEG!r}", "ansatz.mode")
    eps = _number(ans, "epsilon", "ansatz", positive=True, default=1.0)
    m = min(norm_pots[n].get("m", 4.0) for n in ("P", "Q"))
    delta = _number(ans, "delta", "ansatz", default=0.2)
    if not 0 <= delta < m / (4 * math.pi):
        raise ConfigError(f"window half-width must lie in [0, m/4π) = [0, {m / (4 * math.pi):.4f})",
                          "ansatz.delta")
    norm_ans = {"k": kk, "epsilon": eps, "mode": mode, "delta": delta,
                "exponent": ans.get("exponent", "exact")}
    if norm_ans["exponent"] not in ("exact", "pi_r_over_k", "two_pi_r_over_k"):
        raise ConfigError("unknown exponent mode", "ansatz.exponent")
    if "r" in ans:
        norm_ans["r"] = _number(ans, "r", "ansatz", positive=True)
    if mode == SEG:
        if "rho" not in ans and task != "reduced-scan":
            raise ConfigError("segregated mode needs rho", "ansatz.rho")
        if "rho" in ans:
            norm_ans["rho"] = _number(ans, "rho", "ansatz", positive=True)
    inner = ans.get("inner", [])
    try:
        inner = np.asarray(inner, dtype=float).reshape(-1, 3).tolist()
    except (TypeError, ValueError) as exc:
        raise ConfigError("expected a list of 3-vectors", "ansatz.inner") from exc
    norm_ans["inner"] = inner
    out["ansatz"] = norm_ans

    solver = cfg.get("solver", {})
    norm_solver = {"h": _number(solver, "h", "solver", positive=True, default=0.25),
                   "margin": _number(solver, "margin", "solver", positive=True, default=12.0),
                   "tol": _number(solver, "tol", "solver", positive=True, default=1e-8),
                   "count": _number(solver, "count", "solver", positive=True, integer=True,
                                    default=4),
                   "stencil": solver.get("stencil", "spectral"),
                   "subspace": solver.get("subspace", "EvenX2X3"),
                   "projected": bool(solver.get("projected", False)),
                   "inner_solution": bool(solver.get("inner_solution", False))}
    if not 1e-10 <= norm_solver["tol"] <= 1e-4:
        raise ConfigError("must lie in [1e-10, 1e-4]", "solver.tol")
    if norm_solver["count"] > 10:
        raise ConfigError("at most 10 eigenpairs", "solver.count")
    from .grid import STENCILS
    from .spectral import SUBSPACES
    if norm_solver["stencil"] not in STENCILS:
        raise ConfigError(f"must be one of {STENCILS}", "solver.stencil")
    if norm_solver["subspace"] not in SUBSPACES:
        raise ConfigError(f"must be one of {SUBSPACES}", "solver.subspace")
    if "half_width" in solver:
        norm_solver["half_width"] = _number(solver, "half_width", "solver", positive=True)
    out["solver"] = norm_solver

    if task in ("solve", "spectrum", "pohozaev", "decay", "full-pipeline"):
        if len(kk) != 1:
            raise ConfigError("solve tasks take a single k", "ansatz.k")
        if kk[0] > 1 and "r" not in norm_ans:
            raise ConfigError("ring configurations need r", "ansatz.r")
        if mode == SEG:
            raise ConfigError("grid solves support the synchronized mode only", "ansatz.mode")

    gsb = cfg.get("ground_state", {})
    mus = gsb.get("mu", [mu1])
    mus = mus if isinstance(mus, list) else [mus]
    out["ground_state"] = {
        "mu": [_number({"mu": x}, "mu", "ground_state", positive=True) for x in mus],
        "tol": _number(gsb, "tol", "ground_state", positive=True, default=1e-10),
        "r_max": _number(gsb, "r_max", "ground_state", positive=True, default=30.0)}

    ph = cfg.get("pohozaev", {})
    direction = _number(ph, "direction", "pohozaev", integer=True, default=1)
    if direction not in (1, 2, 3):
        raise ConfigError("must be 1, 2 or 3", "pohozaev.direction")
    norm_ph = {"direction": direction}
    if "center" in ph:
        try:
            norm_ph["center"] = [float(x) for x in ph["center"]]
        except (TypeError, ValueError) as exc:
            raise ConfigError("expected a 3-vector", "pohozaev.center") from exc
        if len(norm_ph["center"]) != 3:
            raise ConfigError("expected a 3-vector", "pohozaev.center")
    if "delta" in ph:
        norm_ph["delta"] = _number(ph, "delta", "pohozaev", positive=True)
    out["pohozaev"] = norm_ph

    sc = cfg.get("scan", {})
    out["scan"] = {"points": _number(sc, "points", "scan", positive=True, integer=True,
                                     default=400)}
    if out["scan"]["points"] < 200:
        raise ConfigError("at least 200 scan points", "scan.points")
    return out


# ---------------------------------------------------------------- reports
def asymptotics_report(maximizers, m: float = 4.0) -> dict:
    """Table of ``r*_k/(ε k ln k)`` across ``k`` with a trend verdict.

    ``maximizers`` are summary records (dicts with ``k`` and
    ``ratio_to_klnk``) or paths to JSON files holding lists of them.  The
    verdict is true when the ratios are monotone in ``k`` and their distance
    to ``m/2π`` shrinks.
    """
    records = []
    for item in maximizers:
        if isinstance(item, (str, Path)):
            data = json.loads(Path(item).read_text())
            records.extend(data if isinstance(data, list) else [data])
        else:
            records.append(item)
    by_k = {}
    for rec in records:
        by_k[int(rec["k"])] = float(rec["ratio_to_klnk"])
    if len(by_k) < 3:
        raise InsufficientData(f"need at least 3 distinct k, got {sorted(by_k)}")
    ks = sorted(by_k)
    ratios = np.array([by_k[k] for k in ks])
    target = m / (2 * math.pi)
    d = np.diff(ratios)
    monotone = bool(np.all(d > 0) or np.all(d < 0))
    approaching = bool(np.all(np.diff(np.abs(ratios - target)) < 0))
    return {"m": m, "target": target,
            "table": [{"k": k, "ratio": by_k[k]} for k in ks],
            "monotone": monotone, "approaching": approaching,
            "verdict": monotone and approaching}


def _write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


# ---------------------------------------------------------------- pipeline pieces
class _Context:
    def __init__(self, cfg: dict, out: Path, resolution: float | None):
        from .ground_state import coupled_amplitudes, solve_ground_state
        from .potentials import potentials_from_dict

        self.cfg = cfg
        self.out = out
        self.files: list[Path] = []
        self.potentials = potentials_from_dict(cfg["potentials"])
        a = cfg["amplitudes"]
        self.amplitudes = coupled_amplitudes(a["mu1"], a["mu2"], a["beta"])
        self.h = resolution if resolution is not None else cfg["solver"]["h"]
        self._gs = None
        self._solution = None
        self._solve = solve_ground_state

    @property
    def gs(self):
        if self._gs is None:
            self._gs = self._solve(1.0)
        return self._gs

    def add(self, path: Path) -> None:
        self.files.append(Path(path))


def _task_ground_state(ctx: _Context) -> dict:
    from .ground_state import decay_constant, radial_integrals, solve_ground_state, write_profile_csv

    gcfg = ctx.cfg["ground_state"]
    records = {}
    for mu in gcfg["mu"]:
        gs = solve_ground_state(mu, tol=gcfg["tol"], r_max=gcfg["r_max"])
        ints = radial_integrals(gs)
        rate = decay_constant(gs)
        name = f"profile_mu{mu:g}.csv"
        ctx.add(write_profile_csv(gs, ctx.out / name))
        records[f"{mu:g}"] = {"mu": mu, "w0": gs.center_value, **ints, **rate,
                              "residual_norm": gs.residual_norm}
    ctx.add(_write_json(ctx.out / "ground_state.json", records))
    return records


def _scan_curves(ctx: _Context, m_override=None):
    from .ansatz import SEG, default_window
    from .reduced_energy import (maximize_reduced_2d, reduced_energy_seg, scan_sync,
                                 seg_constants, sync_constants, ReducedEnergyCurve)

    ans = ctx.cfg["ansatz"]
    p, q = ctx.potentials
    curves = []
    for k in ans["k"]:
        if k < 2:
            raise TaskError("reduced scans need k ≥ 2")
        if ans["mode"] == SEG:
            c = seg_constants(ctx.amplitudes, ctx.gs, k)
            m = min(p.m, q.m) if m_override is None else m_override
            w = default_window(k, m, ans["delta"], ans["epsilon"])
            func = lambda r, rho, k=k, c=c: reduced_energy_seg(k, r, rho, ans["epsilon"], c, p.a,
                                                               q.a, m)
            (r_s, rho_s), val, interior = maximize_reduced_2d(func, (w.lo, w.hi), (w.lo, w.hi),
                                                              ctx.cfg["scan"]["points"])
            r = np.linspace(w.lo, w.hi, ctx.cfg["scan"]["points"])
            samples = np.column_stack((r, np.full_like(r, rho_s), func(r, rho_s)))
            curves.append(ReducedEnergyCurve(k=k, window=(w.lo, w.hi), samples=samples,
                                             r_star=(r_s, rho_s), value=val, interior=interior,
                                             constants=c, epsilon=ans["epsilon"]))
        else:
            c = sync_constants(ctx.amplitudes, ctx.gs, ctx.potentials)
            m = c["m"] if m_override is None else m_override
            curves.append(scan_sync(k, ans["epsilon"], c, m, c["a_eff"], ans["delta"],
                                    ans["exponent"], ctx.cfg["scan"]["points"]))
    return curves


def _task_reduced_scan(ctx: _Context) -> dict:
    from .ansatz import SEG
    from .reduced_energy import curves_to_csv, curves_to_svg, maximizers_to_json

    curves = _scan_curves(ctx)
    ctx.add(curves_to_csv(curves, ctx.out / "curves.csv"))
    ctx.add(maximizers_to_json(curves, ctx.out / "maximizers.json"))
    ctx.add(curves_to_svg(curves, ctx.out / "curves.svg"))
    result = {"maximizers": [c.summary() for c in curves]}
    if ctx.cfg["ansatz"]["mode"] != SEG and len(set(ctx.cfg["ansatz"]["k"])) >= 3:
        m = min(ctx.potentials[0].m, ctx.potentials[1].m)
        rep = asymptotics_report(result["maximizers"], m)
        ctx.add(_write_json(ctx.out / "asymptotics.json", rep))
        result["asymptotics"] = rep
    return result


def _configuration(ctx: _Context):
    from .ansatz import PeakConfiguration, make_ring_configuration, single_peak_configuration

    ans = ctx.cfg["ansatz"]
    k = ans["k"][0]
    m = min(ctx.potentials[0].m, ctx.potentials[1].m)
    if k == 1:
        cfg = single_peak_configuration(ans["epsilon"])
        if ans["inner"]:
            cfg = PeakConfiguration(epsilon=ans["epsilon"], ring_radius=0.0, ring_count=1,
                                    inner_centers=ans["inner"])
        return cfg
    return make_ring_configuration(k, ans["r"], ans["epsilon"], inner_centers=ans["inner"], m=m,
                                   delta=ans["delta"])


def _grid(ctx: _Context, configuration, symmetric):
    from .field_solver import grid_for_configuration
    from .grid import make_grid

    s = ctx.cfg["solver"]
    if "half_width" in s:
        return make_grid(s["half_width"], h=ctx.h, symmetric=symmetric, stencil=s["stencil"])
    return grid_for_configuration(configuration, ctx.h, margin=s["margin"], symmetric=symmetric,
                                  stencil=s["stencil"])


def _symmetric_for(ctx: _Context, configuration):
    """Mirror reductions compatible with every peak (and with the requested
    Pohozaev direction / spectral subspace)."""
    centres = configuration.all_centers()
    sym = []
    for a in range(3):
        mirrored = centres * np.where(np.arange(3) == a, -1.0, 1.0)
        ok = all(np.min(np.linalg.norm(centres - c, axis=1)) < 1e-12 for c in mirrored)
        sym.append(ok)
    task = ctx.cfg["task"]
    if task in ("pohozaev", "full-pipeline"):
        sym[ctx.cfg["pohozaev"]["direction"] - 1] = False
    if task in ("spectrum", "full-pipeline"):
        from .spectral import _symmetry
        k = ctx.cfg["ansatz"]["k"][0]
        need = _symmetry(ctx.cfg["solver"]["subspace"], k)
        sym = [s and n for s, n in zip(sym, need)]
    return tuple(sym)


def _task_solve(ctx: _Context) -> dict:
    from .ansatz import AnsatzField, single_peak_configuration
    from .field_solver import (energy_full, newton_solve, projected_solve, write_binary,
                               write_midplane_csv)
    from .errors import BoxTooSmall

    s = ctx.cfg["solver"]
    configuration = _configuration(ctx)
    grid = _grid(ctx, configuration, _symmetric_for(ctx, configuration))
    inner = None
    if s["inner_solution"] and configuration.ring_count > 1:
        inner = newton_solve(AnsatzField(single_peak_configuration(configuration.epsilon),
                                         ctx.amplitudes, ctx.gs), ctx.potentials, grid, tol=s["tol"])
    ansatz = AnsatzField(configuration, ctx.amplitudes, ctx.gs, inner_solution=inner)
    result = {}
    if s["projected"]:
        rep = projected_solve(ansatz, ctx.potentials, grid, tol=s["tol"])
        ctx.add(_write_json(ctx.out / "projected.json", rep.to_dict()))
        result["projected"] = rep.to_dict()
    sol = newton_solve(ansatz, ctx.potentials, grid, tol=s["tol"])
    ctx._solution = sol
    try:
        energy = energy_full(sol, ctx.potentials)
        box_ok = True
    except BoxTooSmall:
        energy = energy_full(sol, ctx.potentials, check_box=False)
        box_ok = False
    ctx.add(write_binary(sol, ctx.out / "fields.bin"))
    ctx.add(write_midplane_csv(sol, ctx.out / "midplane.csv"))
    result["solve"] = {"residual_norm": sol.residual_norm, "iterations": len(sol.history) - 1,
                       "history": sol.history, "positive": sol.positive, "energy": energy,
                       "box_ok": box_ok, "grid_shape": list(grid.shape), "h": grid.h,
                       "symmetric": list(grid.symmetric), "configuration": configuration.to_dict()}
    ctx.add(_write_json(ctx.out / "solve.json", result["solve"]))
    return result


def _need_solution(ctx: _Context):
    if ctx._solution is None:
        _task_solve(ctx)
    return ctx._solution


def _task_spectrum(ctx: _Context) -> dict:
    from .spectral import ROTATION, assemble_linearized, lowest_eigs, rotation_ritz

    sol = _need_solution(ctx)
    s = ctx.cfg["solver"]
    k = ctx.cfg["ansatz"]["k"][0]
    op = assemble_linearized(sol, ctx.potentials, s["subspace"], k)
    rep = lowest_eigs(op, count=s["count"])
    data = rep.to_dict()
    if s["subspace"] == ROTATION:
        ritz, match = rotation_ritz(op, rep, k)
        data["rotation_ritz"] = [float(x) for x in ritz]
        data["rotation_match"] = [float(x) for x in match]
        lams = ritz
    else:
        lams = np.array(rep.eigenvalues)
    data["margin"] = float(np.min(np.abs(lams))) if len(lams) else None
    ctx.add(_write_json(ctx.out / "spectrum.json", data))
    return {"spectrum": data}


def _task_pohozaev(ctx: _Context) -> dict:
    from .diagnostics import default_delta, pohozaev_residual
    from .field_solver import DiscreteFieldPair

    sol = _need_solution(ctx)
    ph = ctx.cfg["pohozaev"]
    i = ph["direction"] - 1
    configuration = _configuration(ctx)
    eps = configuration.epsilon
    centres = configuration.all_centers() / eps
    center = np.asarray(ph.get("center", centres[0]), dtype=float)
    if "delta" in ph:
        delta = ph["delta"]
    elif len(centres) > 1:
        others = centres[np.linalg.norm(centres - center, axis=1) > 1e-12]
        delta = default_delta(center, others)
    else:
        delta = 0.5 * (min(sol.grid.half_widths) - float(np.max(np.abs(center))))
    g = sol.grid
    test = DiscreteFieldPair(g, g.gradient(sol.u)[i], g.gradient(sol.v)[i], sol.epsilon,
                             sol.amplitudes)
    rep = pohozaev_residual(sol, test, ctx.potentials, center, delta, i)
    data = rep.to_dict()
    data["direction"] = i + 1
    data["test"] = f"translation mode d/dy{i + 1}"
    ctx.add(_write_json(ctx.out / "pohozaev.json", data))
    return {"pohozaev": data}


def _task_decay(ctx: _Context) -> dict:
    from .diagnostics import decay_check, write_bands_csv

    sol = _need_solution(ctx)
    configuration = _configuration(ctx)
    rep = decay_check(sol, configuration.all_centers(), configuration.epsilon)
    ctx.add(write_bands_csv(rep, ctx.out / "bands.csv"))
    ctx.add(_write_json(ctx.out / "decay.json", rep.to_dict()))
    return {"decay": rep.to_dict()}


def _task_full(ctx: _Context) -> dict:
    out = {}
    for step in (_task_solve, _task_spectrum, _task_pohozaev, _task_decay):
        out.update(step(ctx))
    return out


_RUNNERS = {"ground-state": _task_ground_state, "reduced-scan": _task_reduced_scan,
            "solve": _task_solve, "spectrum": _task_spectrum, "pohozaev": _task_pohozaev,
            "decay": _task_decay, "full-pipeline": _task_full}


def _versions() -> dict:
    import scipy
    return {"nlspeaks": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run(task: str, config_path, out_dir, threads: int | None = None,
        resolution: float | None = None) -> dict:
    """Run one task; returns the result summary and writes ``manifest.json``."""
    from .grid import set_workers

    raw_cfg, raw = load_config(config_path)
    declared = raw_cfg.get("task")
    if declared is not None and declared != task:
        raise ConfigError(f"config declares task {declared!r} but {task!r} was requested", "task")
    cfg = validate_config(raw_cfg, task)
    if resolution is not None and not resolution > 0:
        raise ConfigError("must be positive", "--resolution")
    if threads is None:
        env = os.environ.get("NLS_PEAKS_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError as exc:
                raise ConfigError("must be an integer", "NLS_PEAKS_THREADS") from exc
    set_workers(threads or 1)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ctx = _Context(cfg, out, resolution)
    try:
        result = _RUNNERS[task](ctx)
    except ConfigError:
        raise
    except (NLSPeaksError, ValueError, ArithmeticError) as exc:
        raise TaskError(f"{task} failed: {type(exc).__name__}: {exc}") from exc
    manifest = {"task": task, "config_sha256": hashlib.sha256(raw).hexdigest(),
                "versions": _versions(),
                "files": [{"name": p.name, "sha256": _sha256(p)} for p in ctx.files]}
    _write_json(out / "manifest.json", manifest)
    return result


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nls-peaks",
                                     description="Multi-peak solutions of coupled NLS systems.")
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", required=True, help="TOML experiment file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="FFT worker threads (default: NLS_PEAKS_THREADS or 1)")
    parser.add_argument("--resolution", type=float, default=None,
                        help="grid spacing h in rescaled units (overrides solver.h)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = run(args.task, args.config, args.out, args.threads, args.resolution)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TaskError as exc:
        print(f"task error: {exc}", file=sys.stderr)
        return EXIT_TASK
    print(json.dumps({"task": args.task, "out": str(args.out),
                      "keys": sorted(result)}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
