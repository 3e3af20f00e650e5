"""Batch front-end: JSON config in, report.json and CSV tables out.

    mristab <task> --config run.json [--out DIR] [--jobs N]

Tasks: stability, thresholds, modes, dispersion, simulate, euler, sweep.
Exit status is 0 on success, 2 for configuration or wrong-regime errors and
1 for numeric failures.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import jsonschema
import numpy as np

from . import __version__
from .errors import (ConfigError, IncompleteCount, InvalidProfile, NumericFailure,
                     WrongRegime)
from .fixtures import FIXTURES
from .operators import assemble_Lk, inertia, make_grid, unstable_mode_count
from .profiles import (check_signs, gaussian_field, make_keplerian, make_powerlaw,
                       make_tabulated, make_twoterm, uniform_field)

TASKS = ("stability", "thresholds", "modes", "dispersion", "simulate", "euler", "sweep")

_num = {"type": "number"}
_int = {"type": "integer"}
_nums = {"type": "array", "items": _num}
_ints = {"type": "array", "items": {"type": "integer", "minimum": 1}}

_FIELD = {
    "type": "object",
    "properties": {"kind": {"enum": ["uniform", "gaussian"]}, "b0": _num,
                   "c": _num, "rm": _num, "w": _num},
    "required": ["kind"],
    "additionalProperties": False,
}

_PROFILE_KEYS = {
    "keplerian": ({"gm": _num}, ["gm"]),
    "powerlaw": ({"omega0": _num, "beta": _num, "gamma": _num}, ["omega0", "beta", "gamma"]),
    "twoterm": ({"c1": _num, "c2": _num}, ["c1", "c2"]),
    "tabulated": ({"samples": {"type": "array", "items": {"type": "array", "items": _num,
                                                          "minItems": 3, "maxItems": 3}},
                   "samples_file": {"type": "string"}}, []),
    "fixture": ({"name": {"enum": sorted(FIXTURES)}}, ["name"]),
}

_TASK_KEYS = {
    "stability": {"k_max_hint": {"type": "integer", "minimum": 1},
                  "count_modes": {"type": "boolean"}},
    "thresholds": {"sweep": {"type": "object",
                             "properties": {"eps": {"type": "array", "items": _num,
                                                    "minItems": 2, "maxItems": 2},
                                            "n": {"type": "integer", "minimum": 2}},
                             "required": ["eps"], "additionalProperties": False}},
    "modes": {"k": _ints, "n_scan": {"type": "integer", "minimum": 8}},
    "dispersion": {"k": _nums, "kr": _nums, "r0": _nums,
                   "compare_global": {"type": "boolean"}},
    "simulate": {"k": {"type": "integer", "minimum": 1}, "T": _num, "dt": _num,
                 "seed": _int, "record_every": {"type": "integer", "minimum": 1},
                 "units": {"enum": ["absolute", "growth"]},
                 "model": {"enum": ["mhd", "euler"]}},
    "euler": {"k": _ints, "eps": _nums, "compare_k": {"type": "integer", "minimum": 1}},
    "sweep": {"axes": {"type": "object",
                       "properties": {"eps": _nums, "k": _ints,
                                      "n": {"type": "array",
                                            "items": {"type": "integer", "minimum": 16}}},
                       "additionalProperties": False},
              "quantity": {"enum": ["classify", "growth"]}},
}

_TASK_REQUIRED = {"simulate": ["T", "dt"]}

_TASK_DEFAULTS = {
    "stability": {"k_max_hint": 64, "count_modes": True},
    "thresholds": {},
    "modes": {"k": [1, 2, 3, 4], "n_scan": 400},
    "dispersion": {"k": [1.0], "kr": [1.0, 3.0, 10.0], "compare_global": False},
    "simulate": {"k": 1, "seed": 0, "record_every": 1, "units": "absolute", "model": "mhd"},
    "euler": {"k": [1, 2, 4, 8, 16, 32, 64], "eps": [], "compare_k": 1},
    "sweep": {"axes": {}, "quantity": "classify"},
}


def _schema(task: str, kind: str) -> dict:
    props, req = _PROFILE_KEYS[kind]
    profile = {"type": "object",
               "properties": dict({"kind": {"enum": sorted(_PROFILE_KEYS)}, "eps": _num,
                                   "r1": _num, "r2": _num, "field": _FIELD}, **props),
               "required": ["kind", "eps"] + req,
               "additionalProperties": False}
    task_s = {"type": "object",
              "properties": dict({"name": {"enum": list(TASKS)}}, **_TASK_KEYS[task]),
              "required": _TASK_REQUIRED.get(task, []),
              "additionalProperties": False}
    return {
        "type": "object",
        "properties": {
            "profile": profile,
            "grid": {"type": "object",
                     "properties": {"n": {"type": "integer", "minimum": 16},
                                    "spacing": {"enum": ["uniform", "geometric"]}},
                     "additionalProperties": False},
            "task": task_s,
            "output": {"type": "object",
                       "properties": {"directory": {"type": "string"},
                                      "formats": {"type": "array",
                                                  "items": {"enum": ["json", "csv"]}}},
                       "additionalProperties": False},
        },
        "required": ["profile"],
        "additionalProperties": False,
    }


@dataclass
class RunConfig:
    task: str
    profile: dict
    grid: dict
    params: dict
    output: dict

    def as_dict(self) -> dict:
        return {"profile": self.profile, "grid": self.grid,
                "task": dict(self.params, name=self.task), "output": self.output}


def _where(err) -> str:
    path = ".".join(str(p) for p in err.absolute_path)
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        key = ".".join(filter(None, [path, extra[0] if extra else ""]))
        return "unknown key %r (allowed: %s)" % (key, ", ".join(sorted(err.schema["properties"])))
    if err.validator == "required":
        return "missing key %r in %s" % (err.message.split("'")[1], path or "config")
    expected = err.schema.get("type") or err.schema.get("enum")
    return "key %r: %s (expected %s)" % (path, err.message, expected)


def validate_config(raw: dict, task: str | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    tb = raw.get("task", {})
    name = tb.get("name") if isinstance(tb, dict) else None
    if task is None:
        task = name
    if task not in TASKS:
        raise ConfigError("task must be one of %s, got %r" % (", ".join(TASKS), task))
    if name is not None and name != task:
        raise ConfigError("task.name %r does not match subcommand %r" % (name, task))
    prof = raw.get("profile")
    kind = prof.get("kind") if isinstance(prof, dict) else None
    if kind not in _PROFILE_KEYS:
        raise ConfigError("key 'profile.kind': expected one of %s, got %r"
                          % (", ".join(sorted(_PROFILE_KEYS)), kind))
    v = jsonschema.Draft7Validator(_schema(task, kind))
    errs = sorted(v.iter_errors(raw),
                  key=lambda e: ([str(x) for x in e.absolute_path], e.validator))
    if errs:
        raise ConfigError(_where(errs[0]))
    if kind == "tabulated" and ("samples" in prof) == ("samples_file" in prof):
        raise ConfigError("tabulated profile needs exactly one of 'samples', 'samples_file'")
    params = dict(copy.deepcopy(_TASK_DEFAULTS[task]))
    params.update({k: copy.deepcopy(v) for k, v in tb.items() if k != "name"})
    grid = dict({"n": 400, "spacing": "uniform"}, **raw.get("grid", {}))
    out = dict({"directory": "mristab_out", "formats": ["json", "csv"]}, **raw.get("output", {}))
    profile = copy.deepcopy(prof)
    profile.setdefault("field", {"kind": "uniform"})
    return RunConfig(task, profile, grid, params, out)


def parse_config(path, task: str | None = None) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config file not found: %s" % path)
    except json.JSONDecodeError as exc:
        raise ConfigError("config is not valid JSON: %s" % exc)
    return validate_config(raw, task)


# ---------------------------------------------------------------------------
# profile construction

def build_profile(cfg: dict):
    f = cfg.get("field", {"kind": "uniform"})
    if f["kind"] == "uniform":
        fld = uniform_field(f.get("b0", 1.0))
    else:
        try:
            fld = gaussian_field(f["c"], f["rm"], f["w"])
        except KeyError as exc:
            raise ConfigError("gaussian field needs key %s" % exc)
    kind, eps = cfg["kind"], cfg["eps"]
    if kind == "fixture":
        if f["kind"] != "uniform":
            raise ConfigError("fixture profiles carry their own field")
        return FIXTURES[cfg["name"]](eps)
    if kind == "tabulated":
        if "samples_file" in cfg:
            rows = np.loadtxt(cfg["samples_file"], delimiter=",", skiprows=1, ndmin=2)
        else:
            rows = cfg["samples"]
        return make_tabulated(rows, eps)
    r1, r2 = cfg.get("r1", 1.0), cfg.get("r2", 2.0)
    if kind == "keplerian":
        return make_keplerian(cfg["gm"], r1, r2, eps, fld)
    if kind == "powerlaw":
        return make_powerlaw(cfg["omega0"], cfg["beta"], cfg["gamma"], r1, r2, eps, fld)
    return make_twoterm(cfg["c1"], cfg["c2"], r1, r2, eps, fld)


# ---------------------------------------------------------------------------
# output helpers

def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    return obj


class Output:
    def __init__(self, cfg: RunConfig):
        self.dir = cfg.output["directory"]
        self.formats = cfg.output["formats"]
        os.makedirs(self.dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.dir, name)

    def csv(self, name, header, rows):
        if "csv" not in self.formats:
            return None
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt(v) for v in r])
        return name

    def report(self, data):
        if "json" not in self.formats:
            return
        with open(self.path("report.json"), "w") as fh:
            json.dump(_clean(data), fh, sort_keys=True, indent=2, allow_nan=False)
            fh.write("\n")


# ---------------------------------------------------------------------------
# tasks

def task_stability(p, g, prm, out, jobs):
    from .euler import rayleigh_classify
    from .thresholds import classify

    v = classify(p, g)
    res = {"verdict": "stable" if v.stable else "unstable", "n_neg_L1": v.n_neg_L1,
           "criterion": v.criterion, "rayleigh_stable": rayleigh_classify(p, g)}
    s = check_signs(p)
    res["signs"] = {"domega2": s.domega2_sign, "upsilon": s.upsilon_sign}
    if prm["count_modes"]:
        try:
            total, per_k = unstable_mode_count(p, g, prm["k_max_hint"])
            res.update(unstable_modes=total, per_k=per_k, count_complete=True)
        except IncompleteCount as exc:
            per_k = exc.per_k
            res.update(unstable_modes=None, per_k=per_k, count_complete=False)
        res["files"] = [out.csv("per_k.csv", ["k", "n_neg"],
                                [(k + 1, n) for k, n in enumerate(per_k)])]
    return res


def task_thresholds(p, g, prm, out, jobs):
    from .thresholds import (classify_sweep, compute_B0, compute_eps_max,
                             compute_eps_min, geometric_sweep)

    res = {}
    t = compute_eps_min(p, g)
    res["eps_min2"] = t.value
    files = [out.csv("eps_min_maximizer.csv", ["r", "phi"], zip(g.nodes, t.maximizer))]
    try:
        res["B0_2"] = compute_B0(p, g).value
    except WrongRegime as exc:
        res["B0_2"] = None
        res["B0_note"] = str(exc)
    try:
        res["eps_max2"] = compute_eps_max(p, g).value
    except WrongRegime as exc:
        res["eps_max2"] = None
        res["eps_max_note"] = str(exc)
    if "sweep" in prm:
        lo, hi = prm["sweep"]["eps"]
        if not 0 < lo < hi:
            raise ConfigError("task.sweep.eps must be [lo, hi] with 0 < lo < hi")
        eps = geometric_sweep(lo, hi, prm["sweep"].get("n", 200))
        st = classify_sweep(p, g, eps, jobs)
        flips = np.flatnonzero(st[1:] != st[:-1])
        res["sweep_transitions"] = [[float(eps[i]**2), float(eps[i + 1]**2)] for i in flips]
        files.append(out.csv("eps_sweep.csv", ["eps", "eps2", "stable"],
                             zip(eps, eps**2, st)))
    res["files"] = files
    return res


def task_modes(p, g, prm, out, jobs):
    from .modes import max_growth_rate

    rows, best = [], None
    for k in prm["k"]:
        _, m = max_growth_rate(p, g, [k])
        rows.append((k, m.lam if m else float("nan"), m.n_roots if m else 0))
        if m is not None and (best is None or m.lam > best.lam):
            best = m
    res = {"growth_rates": [[k, lam] for k, lam, _ in rows]}
    files = [out.csv("modes.csv", ["k", "Lambda", "n_roots"], rows)]
    if best is not None:
        res.update(k_star=best.k, Lambda_max=best.lam)
        files.append(out.csv("mode_k%d.csv" % best.k,
                             ["r", "phi", "u_r", "u_theta", "u_z", "B_theta"], best.table()))
    else:
        res.update(k_star=None, Lambda_max=None)
    res["files"] = files
    return res


def task_dispersion(p, g, prm, out, jobs):
    from .dispersion import DispersionInput, dispersion_roots, local_vs_global

    r0s = prm.get("r0") or list(np.linspace(p.r1, p.r2, 7)[1:-1])
    rows, worst = [], 0.0
    for r0 in r0s:
        for k in prm["k"]:
            for kr in prm["kr"]:
                inp = DispersionInput.at(p, r0, k, kr)
                d = dispersion_roots(inp)
                res_ = d.residuals()
                worst = max(worst, float(res_.max()))
                rows.append((r0, k, kr, inp.upsilon0, inp.omega0, inp.eps, d.X[0], d.X[1],
                             d.lambda2[0], d.lambda2[1], res_[0], res_[1], d.labels[0]))
    hdr = ["r0", "k", "kr", "upsilon", "omega", "eps", "X_epicyclic", "X_mri",
           "lambda2_epicyclic", "lambda2_mri", "residual_epicyclic", "residual_mri", "labels"]
    res = {"n_rows": len(rows), "max_residual": worst,
           "files": [out.csv("dispersion.csv", hdr, rows)]}
    if prm["compare_global"]:
        lg = []
        for k in prm["k"]:
            if float(k) != int(k):
                raise ConfigError("compare_global needs integer k")
            lg += [(int(k),) + r for r in local_vs_global(p, g, int(k), None, prm["kr"])]
        res["files"].append(out.csv("local_vs_global.csv",
                                    ["k", "kr", "r0_argmax", "lambda2_local", "lambda_global"],
                                    lg))
    return res


def task_simulate(p, g, prm, out, jobs):
    from .euler import assemble_euler_generator
    from .linsim import MHDGenerator, max_growth, random_state, run_simulation

    k = prm["k"]
    gen = MHDGenerator(p, g, k) if prm["model"] == "mhd" else assemble_euler_generator(p, g, k)
    T, dt = prm["T"], prm["dt"]
    res = {"model": prm["model"], "k": k}
    if prm["units"] == "growth":
        lam2 = max_growth(gen)
        if not lam2 > 0:
            raise WrongRegime("growth units need an unstable generator (Lambda^2 = %.3g)" % lam2)
        lam = float(np.sqrt(lam2))
        T, dt = T / lam, dt / lam
        res["Lambda"] = lam
    if not (T > 0 and dt > 0):
        raise ConfigError("task.T and task.dt must be positive")
    x0 = random_state(gen, prm["seed"])
    rep = run_simulation(gen, x0, T, dt, record_every=prm["record_every"])
    res.update(rep.summary())
    res["files"] = [out.csv("simulation.csv", ["t", "norm", "form", "log_norm"], rep.rows())]
    return res


def task_euler(p, g, prm, out, jobs):
    from .euler import compare_small_field, euler_report

    rep = euler_report(p, g, prm["k"])
    res = {"rayleigh_stable": rep.rayleigh_stable, "a1": rep.a1,
           "lambda_k2": [[k, v] for k, v in zip(prm["k"], rep.lambda_k2)]}
    files = [out.csv("euler_lambda_k.csv", ["k", "lambda2"], zip(prm["k"], rep.lambda_k2))]
    if prm["eps"]:
        cmp_ = compare_small_field(p, g, prm["compare_k"], prm["eps"])
        res["slope_fit"] = cmp_.slope
        files.append(out.csv("euler_comparison.csv",
                             ["eps", "k", "Lambda2", "lambda2", "gap", "slope_fit"],
                             [r + (cmp_.slope,) for r in cmp_.comparisons]))
    res["files"] = files
    return res


SWEEP_HEADER = ["eps", "k", "n", "n_neg_Lk", "stable_L1", "Lambda2"]


def _sweep_point(p, prm, spacing, key):
    from .linsim import MHDGenerator, max_growth

    eps, k, n = key
    q = p.with_eps(eps)
    g = make_grid(p.r1, p.r2, n, spacing)
    nk = inertia(assemble_Lk(q, g, k)).n_neg
    n1 = nk if k == 1 else inertia(assemble_Lk(q, g, 1)).n_neg
    lam2 = max_growth(MHDGenerator(q, g, k)) if prm["quantity"] == "growth" else float("nan")
    return (eps, k, n, nk, n1 == 0, lam2)


def task_sweep(p, g, prm, out, jobs):
    axes = prm["axes"]
    eps_ax = axes.get("eps") or [p.eps]
    k_ax = axes.get("k") or [1]
    n_ax = axes.get("n") or [g.n]
    keys = [(float(e), int(k), int(n)) for e in eps_ax for k in k_ax for n in n_ax]
    keyfmt = lambda key: tuple(fmt(v) for v in key)
    path = out.path("sweep.csv")
    done = {}
    if os.path.exists(path):
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            if next(rd, None) == SWEEP_HEADER:
                for row in rd:
                    if len(row) == len(SWEEP_HEADER):
                        done[tuple(row[:3])] = row
        if not done:
            os.remove(path)
    todo = [key for key in keys if keyfmt(key) not in done]
    fresh = not os.path.exists(path)
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if fresh:
            w.writerow(SWEEP_HEADER)
        run = lambda key: _sweep_point(p, prm, g.spacing, key)
        if jobs > 1:
            ex = ThreadPoolExecutor(jobs)
            results = ex.map(run, todo)
        else:
            ex, results = None, map(run, todo)
        for row in results:
            row = [fmt(v) for v in row]
            w.writerow(row)
            fh.flush()
            done[tuple(row[:3])] = row
        if ex is not None:
            ex.shutdown()
    print("sweep: %d points, %d computed, %d reused" % (len(keys), len(todo),
                                                        len(keys) - len(todo)), file=sys.stderr)
    table = [done[keyfmt(key)] for key in keys]
    nneg = {}
    for (e, k, n), row in zip(keys, table):
        nneg.setdefault((e, n), []).append((k, int(row[3])))
    mono = all(all(a[1] >= b[1] for a, b in zip(v, v[1:])) for v in
               (sorted(x) for x in nneg.values()))
    flips = []
    for k in k_ax:
        for n in n_ax:
            pts = sorted((float(r[0]), r[4]) for key, r in zip(keys, table)
                         if key[1] == k and key[2] == n)
            for a, b in zip(pts, pts[1:]):
                if a[1] != b[1]:
                    flips.append({"k": int(k), "n": int(n), "eps": [a[0], b[0]]})
    return {"n_points": len(keys), "n_neg_nonincreasing_in_k": mono,
            "stability_transitions": flips, "files": ["sweep.csv"]}


RUNNERS = {"stability": task_stability, "thresholds": task_thresholds, "modes": task_modes,
           "dispersion": task_dispersion, "simulate": task_simulate, "euler": task_euler,
           "sweep": task_sweep}


def run(cfg: RunConfig, jobs: int = 1) -> int:
    """Execute one configured task; returns the process exit status."""
    out = Output(cfg)
    report = {"task": cfg.task, "config": cfg.as_dict(), "version": __version__}
    try:
        p = build_profile(cfg.profile)
        g = make_grid(p.r1, p.r2, cfg.grid["n"], cfg.grid["spacing"])
        report["result"] = RUNNERS[cfg.task](p, g, cfg.params, out, jobs)
        report["status"] = "ok"
        code = 0
    except (WrongRegime, InvalidProfile, ConfigError) as exc:
        report.update(status="wrong_regime", error=str(exc))
        code = 2
    except (NumericFailure, IncompleteCount, np.linalg.LinAlgError) as exc:
        report.update(status="numeric_failure", error=str(exc))
        code = 1
    out.report(report)
    if code:
        print("mristab %s: %s" % (report["status"], report["error"]), file=sys.stderr)
    return code


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="mristab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="task", required=True)
    for t in TASKS:
        sp = sub.add_parser(t)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", help="output directory (overrides output.directory)")
        sp.add_argument("--jobs", type=int, default=1, help="worker threads for sweeps")
    a = ap.parse_args(argv)
    try:
        cfg = parse_config(a.config, a.task)
    except ConfigError as exc:
        print("mristab: config error: %s" % exc, file=sys.stderr)
        return 2
    if a.out:
        cfg.output["directory"] = a.out
    return run(cfg, max(1, a.jobs))


if __name__ == "__main__":
    sys.exit(main())
