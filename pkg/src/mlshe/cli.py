"""Command-line experiment runner.

    mlshe <experiment> [--config file] [--seed N] [--workers K] [--out dir] [--strict-reduce]
    mlshe list [--json]

Every run writes into its output directory

* ``config.json``: the fully resolved configuration (defaults materialized),
* ``summary.json``: the experiment's numbers and pass/fail verdicts,
* one or more CSV files with a header row,
* ``manifest.json``: package version, seeds, file digests, column units and a
  ``status`` of ``complete`` or ``partial`` (interrupted or failed runs).

The default output root is ``$MLSHE_OUT`` (``./mlshe-runs`` when unset); a run
goes to ``<root>/<experiment>`` unless ``--out`` names a directory.
"""
from __future__ import annotations

import argparse
import copy
import difflib
import functools
import hashlib
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, acceptance, analysis, bridges, kernels, mild, multilayer, she
from .errors import ConfigError, MlsheError
from .fileio import write_csv
from .noise import GridSpec, NoiseField, sample_noise
from .parallel import default_workers, map_seeds

__all__ = ["REGISTRY", "Experiment", "resolve_config", "run", "list_experiments", "lookup", "load_config", "packaged_configs", "main"]

OUT_ENV = "MLSHE_OUT"
DEFAULT_ROOT = "mlshe-runs"


# -- schema helpers ------------------------------------------------------------

def _num(default, minimum=None, exclusive=False, desc=""):
    s = {"type": "number", "default": default}
    if minimum is not None:
        s["exclusiveMinimum" if exclusive else "minimum"] = minimum
    if desc:
        s["description"] = desc
    return s


def _int(default, minimum=None, maximum=None, desc=""):
    s = {"type": "integer", "default": default}
    if minimum is not None:
        s["minimum"] = minimum
    if maximum is not None:
        s["maximum"] = maximum
    if desc:
        s["description"] = desc
    return s


def _nums(default, min_items=1):
    return {"type": "array", "items": {"type": "number"}, "minItems": min_items, "default": default}


def _obj(props, desc=""):
    s = {
        "type": "object",
        "properties": props,
        "additionalProperties": False,
        "default": {},
    }
    if desc:
        s["description"] = desc
    return s


def _grid(x_min, x_max, dx, t_max, dt, boundary="periodic"):
    return _obj({
        "x_min": _num(x_min),
        "x_max": _num(x_max),
        "dx": _num(dx, 0, True, "space step"),
        "t_max": _num(t_max, 0, True, "horizon"),
        "dt": _num(dt, 0, True, "time step, at most dx^2/2"),
        "boundary": {"enum": ["periodic", "absorbing"], "default": boundary},
    }, "space-time grid")


SEEDS = {
    "description": "seed list, or {start, count} range",
    "default": {"start": 0, "count": 1},
    "oneOf": [
        {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        {
            "type": "object",
            "properties": {"start": _int(0, 0), "count": _int(1, 1)},
            "additionalProperties": False,
        },
    ],
}

COMMON = {
    "experiment": {"type": "string"},
    "seeds": SEEDS,
    "workers": {"type": ["integer", "null"], "minimum": 1, "default": None, "description": "worker processes; null = available cores"},
    "strict_reduce": {"type": "boolean", "default": True, "description": "sequential, seed-ordered reductions"},
    "out": {"type": ["string", "null"], "default": None},
}


def _schema(props):
    return {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "properties": {**COMMON, **props},
        "additionalProperties": False,
    }


def _materialize(schema, value):
    """Fill defaults recursively for ``object`` schemas."""
    if schema.get("type") == "object" and "properties" in schema:
        value = {} if value is None else dict(value)
        for k, sub in schema["properties"].items():
            if k not in value and "default" in sub:
                value[k] = copy.deepcopy(sub["default"])
            if k in value:
                value[k] = _materialize(sub, value[k])
        return value
    return value


def _seed_list(spec) -> list:
    if isinstance(spec, list):
        return [int(s) for s in spec]
    return list(range(int(spec.get("start", 0)), int(spec.get("start", 0)) + int(spec.get("count", 1))))


def _grid_of(c) -> GridSpec:
    return GridSpec.from_spacing(c["x_min"], c["x_max"], c["dx"], c["t_max"], c["dt"], c["boundary"])


# -- experiment bodies -------------------------------------------------------------
# Each body gets the resolved config and the output directory and returns
# (summary, {csv file name: {column: unit}}).

def _she_member(seed, grid, init, times, probes):
    tr = she.solve_she(grid, sample_noise(grid, seed), init)
    return [[float(tr.value(t, p)) for p in probes] for t in times]


def _flat(x, value=1.0):
    return np.full_like(x, value)


def _init_of(c):
    # partials rather than lambdas so members can be shipped to workers
    if c["kind"] == "delta":
        return ("delta", c["x0"])
    return functools.partial(_flat, value=c["value"])


def run_she_ensemble(cfg, out: Path):
    g = _grid_of(cfg["grid"])
    seeds = _seed_list(cfg["seeds"])
    times = cfg["times"]
    probes = cfg["probes"]
    init = _init_of(cfg["init"])
    vals = np.array(map_seeds(functools.partial(_she_member, grid=g, init=init, times=times, probes=probes), seeds, cfg["workers"]))
    rows = []
    for k, s in enumerate(seeds):
        for i, t in enumerate(times):
            for j, p in enumerate(probes):
                rows.append([s, float(t), float(p), float(vals[k, i, j])])
    write_csv(out / "ensemble.csv", ["seed", "t", "x", "u"], rows)
    stats = []
    for i, t in enumerate(times):
        for j, p in enumerate(probes):
            v = vals[:, i, j]
            ref = float(kernels.heat_kernel(t, p - cfg["init"]["x0"])) if cfg["init"]["kind"] == "delta" else cfg["init"]["value"]
            se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
            stats.append({"t": t, "x": p, "mean": float(v.mean()), "se": se, "heat_mean": ref,
                          "z": (float(v.mean()) - ref) / se if se and se > 0 else None})
    if cfg["save_binary"]:
        she.solve_she(g, sample_noise(g, seeds[0]), init).to_binary(out / f"trajectory_seed{seeds[0]}.bin")
    summary = {"grid": g.to_dict(), "members": len(seeds), "stats": stats,
               "passed": all(s["z"] is None or abs(s["z"]) <= 3 for s in stats)}
    return summary, {"ensemble.csv": {"seed": "-", "t": "time", "x": "space", "u": "1/space"}}


def run_multilayer_field(cfg, out: Path):
    g = _grid_of(cfg["grid"])
    seed = _seed_list(cfg["seeds"])[0]
    noise = NoiseField.zeros(g) if cfg["zero_noise"] else sample_noise(g, seed)
    x = sorted(cfg["x"], reverse=True)
    n = len(x)
    t = cfg["t"]
    lo, hi = cfg["y_window"]
    ynodes = g.x[(g.x >= lo - 1e-9) & (g.x <= hi + 1e-9)][:: cfg["y_stride"]]
    fam = multilayer.Family.solve(g, noise, x)
    lf = multilayer.layer_field(fam, t, x, ynodes)
    multilayer.write_layer_csv(out / "layer.csv", lf)
    starts = set()
    for a in cfg["a"]:
        for k in range(1, n + 1):
            starts.update(multilayer.boundary_points(g, a, k) if k > 1 else [a])
    bfam = multilayer.Family.solve(g, noise, sorted(starts, reverse=True))
    records, zinfo = [], []
    for a in cfg["a"]:
        for b in cfg["b"]:
            zs, ratios = [], []
            for k in range(1, n + 1):
                z, est = multilayer.z_n(bfam, t, a, b, n=k, return_details=True)
                zs.append(z)
                ratios.append(None if est is None else est.ratio)
            try:
                hs = multilayer.h_n(zs)
            except MlsheError:
                hs = [math.nan] * n
            for k in range(n):
                records.append((t, a, b, zs[k], hs[k]))
            zinfo.append({"a": a, "b": b, "Z": zs, "h": hs, "cauchy_ratios": ratios})
    multilayer.write_z_csv(out / "z.csv", records)
    minors = multilayer.sorted_minors_min(np.array([fam.get(xi).value(t, ynodes[::-1]) for xi in x]))
    summary = {
        "n": n, "t": t, "x": x, "points": int(lf.K.size),
        "K_min": float(lf.K.min()), "M_min": float(lf.M.min()), "M_max": float(lf.M.max()),
        "min_2x2_minor": minors, "boundary": zinfo, "zero_noise": cfg["zero_noise"], "seed": seed,
    }
    units = {"layer.csv": {"t": "time", "x*": "space", "y*": "space", "K_n": "space^-n", "M_n": "space^-n^2"},
             "z.csv": {"t": "time", "a": "space", "b": "space", "Z_n": "space^-n", "h_n": "log"}}
    return summary, units


def run_bridge_moments(cfg, out: Path):
    n, t, x, y = cfg["n"], cfg["t"], cfg["x"], cfg["y"]
    if len(x) != n or len(y) != n:
        raise ConfigError(f"x and y must have n = {n} coordinates")
    seed = _seed_list(cfg["seeds"])[0]
    steps = cfg["steps"]
    L = bridges.summed_local_times(n, t, x, y, cfg["samples"], seed, steps=steps)
    rows, mom = [], []
    for k in range(1, cfg["k_max"] + 1):
        v = L**k / math.factorial(k)
        est, se = float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
        rows.append([k, est, se])
        mom.append({"k": k, "estimate": est, "se": se})
    write_csv(out / "moments.csv", ["k", "estimate", "se"], rows)
    e = np.exp(np.minimum(cfg["a"] * L, 700.0))
    summary = {
        "n": n, "t": t, "x": x, "y": y, "samples": cfg["samples"], "steps": steps, "seed": seed,
        "eps": bridges.default_eps(t, steps),
        "moments": mom,
        "exp_moment": {"a": cfg["a"], "estimate": float(e.mean()), "se": float(e.std(ddof=1) / math.sqrt(e.size)),
                       "prefactor": bridges.moment_prefactor(n, t, x, y), "saturated": bool(np.any(cfg["a"] * L > 700))},
    }
    if n > 1:
        p, se = bridges.acceptance_rate(x, y, t, cfg["proposals"], steps=min(steps, 2048), seed=seed)
        summary["acceptance"] = {"rate": p, "se": se, "oracle": bridges.acceptance_oracle(t, x, y)}
    if all(v == 0 for v in x + y) and n == 1:
        summary["r1_squared_exact"] = bridges.r1_squared_exact(t)
    if cfg["export_samples"]:
        ens = bridges.sample_nonintersecting(x, y, t, min(steps, 256), seed, samples=cfg["export_samples"])
        ens.to_csv(out / "ensemble.csv")
    units = {"moments.csv": {"k": "-", "estimate": "time^(k/2)", "se": "time^(k/2)"},
             "ensemble.csv": {"sample_id": "-", "path_id": "-", "time_index": "-", "value": "space"}}
    return summary, units


def _initial_data(c, n):
    if c["kind"] == "constant":
        return mild.SymmetricInitialData.constant(c["value"], n)
    return mild.SymmetricInitialData.indicator(c["h"], n, c["center"])


def run_picard(cfg, out: Path):
    g = _grid_of(cfg["grid"])
    n = cfg["n"]
    seed = _seed_list(cfg["seeds"])[0]
    noise = NoiseField.zeros(g) if cfg["zero_noise"] else sample_noise(g, seed)
    st = mild.picard_solve(_initial_data(cfg["g"], n), noise, n, cfg["k_max"], cfg["tol"], strict_reduce=cfg["strict_reduce"])
    write_csv(out / "d.csv", ["k", "d"], [[k + 1, float(v)] for k, v in enumerate(st.d)])
    st.to_csv(out / "field.csv", times=[g.nt * g.dt])
    rep = st.report()
    rep.pop("timings", None)  # wall times stay out of the summary numbers
    summary = {"seed": seed, "zero_noise": cfg["zero_noise"], "report": rep}
    if len(st.d) >= 3:
        summary["decay_check"] = mild.picard_decay_check(st)
    if len(st.d) > 5:
        summary["d5_over_d1"] = st.d[5] / st.d[1]
    units = {"d.csv": {"k": "-", "d": "1"}, "field.csv": {"t": "time", "y*": "space", "m": "1"}}
    return summary, units


def _chaos_member(seed, grid, t, x, y, k_max):
    return mild.chaos_z1(sample_noise(grid, seed), t, x, y, k_max)


def run_chaos_z1(cfg, out: Path):
    g = _grid_of(cfg["grid"])
    seeds = _seed_list(cfg["seeds"])
    t, x, y, k = cfg["t"], cfg["x"], cfg["y"], cfg["k_max"]
    sums = map_seeds(functools.partial(_chaos_member, grid=g, t=t, x=x, y=y, k_max=k), seeds, cfg["workers"])
    write_csv(out / "partial_sums.csv", ["seed", "k", "S_k"], [[s, j, float(v)] for s, row in zip(seeds, sums) for j, v in enumerate(row)])
    summary = {"t": t, "x": x, "y": y, "k_max": k, "members": len(seeds)}
    if k >= 1 and len(seeds) >= 2:
        inc = np.array([r[1] - r[0] for r in sums])
        var, se = analysis._var_se(inc)
        target = float(kernels.heat_kernel(t, x - y) ** 2 * bridges.r1_squared_exact(t)) if x == y == 0 else None
        summary["first_order"] = {"mean": float(inc.mean()), "mean_se": float(inc.std(ddof=1) / math.sqrt(inc.size)), "variance": var, "variance_se": se, "variance_target": target}
    return summary, {"partial_sums.csv": {"seed": "-", "k": "-", "S_k": "1/space"}}


def run_kernel_verify(cfg, out: Path):
    n = cfg["n"]
    t = cfg["t"]
    spec = kernels.ContourSpec(**cfg["contour"])
    rng = np.random.default_rng(_seed_list(cfg["seeds"])[0])
    pts = [np.sort(rng.uniform(-2, 2, n))[::-1] for _ in range(cfg["points"])]
    norm = [abs(kernels.dyson_mass(t, x) - 1.0) for x in pts]
    scal = []
    for x in pts:
        y = np.sort(rng.uniform(-2, 2, n))[::-1]
        q = kernels.dyson_density(t, x, y)
        st = math.sqrt(t)
        scal.append(abs(q - t ** (-n / 2) * kernels.dyson_density(1.0, x / st, y / st)) / abs(q))
    x0 = pts[0]
    ys = np.linspace(x0[-1] - 8 * math.sqrt(t), x0[0] + 8 * math.sqrt(t), cfg["y_points"])
    K = kernels.one_point_kernel(t, x0, ys, spec)
    mass = float(np.sum(K) * (ys[1] - ys[0]))
    write_csv(out / "kernel.csv", ["y", "K"], [[float(a), float(b)] for a, b in zip(ys, K)])
    l2t = kernels.kernel_l2(t, x0, spec)
    l21 = kernels.kernel_l2(1.0, x0 / math.sqrt(t), spec) / math.sqrt(t)
    summary = {
        "n": n, "t": t,
        "normalization_residual": max(norm),
        "scaling_relative_error": max(scal),
        "kernel_mass": mass, "kernel_mass_error": abs(mass - math.factorial(n)),
        "l2_scaling_relative_error": abs(l2t - l21) / l21,
        "passed": max(norm) < 1e-3 and max(scal) < 1e-12 and abs(mass - math.factorial(n)) < 1e-3,
    }
    return summary, {"kernel.csv": {"y": "space", "K": "1/space"}}


def run_hciz(cfg, out: Path):
    seed = _seed_list(cfg["seeds"])[0]
    rows, pairs = [], []
    for k, pair in enumerate(cfg["pairs"]):
        x, y = pair["x"], pair["y"]
        est, se = kernels.hciz_mc(x, y, cfg["samples"], seed + k)
        target = kernels.hciz_exact(x, y)
        z = (est - target) / se if se > 0 else 0.0
        viol = kernels.hciz_bound_violations(x, y, min(cfg["samples"], 10**4), seed + k) if len(x) == len(y) else None
        rows.append([*x, *y, est, se, target, z])
        pairs.append({"x": x, "y": y, "estimate": est, "se": se, "target": target, "z": z, "bound_violations": viol})
    n = len(cfg["pairs"][0]["x"])
    write_csv(out / "hciz.csv", [f"x{i+1}" for i in range(n)] + [f"y{i+1}" for i in range(n)] + ["estimate", "se", "target", "z"], rows)
    summary = {"pairs": pairs, "samples": cfg["samples"], "passed": all(abs(p["z"]) <= 3 for p in pairs)}
    return summary, {"hciz.csv": {"x*": "1", "y*": "1", "estimate": "1", "se": "1", "target": "1", "z": "SE"}}


def run_holder(cfg, out: Path):
    g = _grid_of(cfg["grid"])
    rows = list(range(g.nt - cfg["time_rows"] + 1, g.nt + 1))
    win = np.abs(g.x) <= cfg["window"] + 1e-9
    seeds = _seed_list(cfg["seeds"])
    snaps = she.ensemble_snapshots(g, seeds, _flat, [r * g.dt for r in rows])[:, :, win]
    sp = analysis.holder_exponent([s[-1] for s in snaps], "space", cfg["lags"], g.dx)
    tm = analysis.holder_exponent(list(snaps), "time", cfg["lags"], g.dt)
    sp.to_csv(out / "structure_space.csv")
    tm.to_csv(out / "structure_time.csv")
    bands = cfg["bands"]
    summary = {
        "space": sp.to_dict(), "time": tm.to_dict(), "bands": bands,
        "passed": bands["space"][0] <= sp.alpha <= bands["space"][1] and bands["time"][0] <= tm.alpha <= bands["time"][1],
    }
    u = {"lag_steps": "-", "h": "space", "S": "1"}
    return summary, {"structure_space.csv": u, "structure_time.csv": {**u, "h": "time"}}


def _positivity_member(seed, grid, times, window, x0):
    tr = she.solve_she(grid, sample_noise(grid, seed), ("delta", x0))
    win = np.abs(grid.x) <= window + 1e-9
    out = []
    for t in times:
        frac, mn, arg = analysis.positivity_report(tr.at(t)[win])
        out.append((frac, mn, float(grid.x[win][arg[0]])))
    return out


def run_positivity(cfg, out: Path):
    g = _grid_of(cfg["grid"])
    seeds = _seed_list(cfg["seeds"])
    res = map_seeds(functools.partial(_positivity_member, grid=g, times=cfg["times"], window=cfg["window"], x0=cfg["x0"]), seeds, cfg["workers"])
    rows = [[s, float(t), r[0], r[1], r[2]] for s, per in zip(seeds, res) for t, r in zip(cfg["times"], per)]
    write_csv(out / "positivity.csv", ["seed", "t", "fraction_positive", "min", "argmin_x"], rows)
    fr = min(r[2] for r in rows)
    summary = {"members": len(seeds), "times": cfg["times"], "min_fraction": fr, "min_value": min(r[3] for r in rows),
               "passed": fr == 1.0}
    return summary, {"positivity.csv": {"seed": "-", "t": "time", "fraction_positive": "1", "min": "1/space", "argmin_x": "space"}}


def _m2_member(seed, grid, t, x, y):
    fam = multilayer.Family.solve(grid, sample_noise(grid, seed), x)
    return multilayer.m_n(fam, t, x, y)


def run_compare_symmetry(cfg, out: Path):
    g = _grid_of(cfg["grid"])
    sa = _seed_list(cfg["seeds"])
    sb = _seed_list(cfg["seeds_b"])
    x, y, t = cfg["x"], cfg["y"], cfg["t"]
    a = map_seeds(functools.partial(_m2_member, grid=g, t=t, x=x, y=y), sa, cfg["workers"])
    b = map_seeds(functools.partial(_m2_member, grid=g, t=t, x=y, y=x), sb, cfg["workers"])
    write_csv(out / "samples.csv", ["set", "seed", "M_2"], [["xy", s, float(v)] for s, v in zip(sa, a)] + [["yx", s, float(v)] for s, v in zip(sb, b)])
    cmp = analysis.compare_ensembles(a, b, cfg["level"])
    return {"x": x, "y": y, "t": t, "comparison": cmp.to_dict(), "passed": cmp.passed}, {"samples.csv": {"set": "-", "seed": "-", "M_2": "space^-4"}}


def run_acceptance_suite(cfg, out: Path):
    numbers = cfg["criteria"] or sorted(acceptance.CRITERIA)
    results = acceptance.run_all(numbers, workers=cfg["workers"])
    write_csv(out / "acceptance.csv", ["criterion", "passed", "seconds", "budget_seconds"],
              [[r.number, int(r.passed), float(r.seconds), float(r.budget)] for r in results])
    summary = {"results": [r.to_dict() for r in results], "passed": all(r.passed for r in results)}
    return summary, {"acceptance.csv": {"criterion": "-", "passed": "0/1", "seconds": "s", "budget_seconds": "s"}}


# -- registry ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    schema: dict
    body: object
    order_sensitive: bool = False

    def defaults(self) -> dict:
        return _materialize(self.schema, {"experiment": self.name})


_PICARD_GRID = _grid(-4.0, 4.0, 0.2, 0.25, 0.005)
REGISTRY = {e.name: e for e in [
    Experiment("she-ensemble", "ensemble of SHE solutions from one initial datum",
               _schema({"grid": _grid(-4.0, 4.0, 0.05, 0.5, 0.00125), "init": _obj({
                   "kind": {"enum": ["delta", "constant"], "default": "delta"},
                   "x0": _num(0.0), "value": _num(1.0)}),
                   "times": _nums([0.25, 0.5]), "probes": _nums([0.0, 0.5]),
                   "save_binary": {"type": "boolean", "default": False}}),
               run_she_ensemble),
    Experiment("multilayer-field", "K_n and M_n on sorted grid tuples, Z_n and h_n on the diagonal",
               _schema({"grid": _grid(-4.0, 4.0, 0.05, 0.5, 0.000625), "x": _nums([0.5, -0.5], 1),
                        "t": _num(0.5, 0, True), "y_window": _nums([-1.0, 1.0], 2), "y_stride": _int(2, 1),
                        "a": _nums([0.0]), "b": _nums([0.0, 0.5]), "zero_noise": {"type": "boolean", "default": False}}),
               run_multilayer_field),
    Experiment("bridge-moments", "moments of summed bridge local times and the exponential moment",
               _schema({"n": _int(1, 1, 4), "t": _num(1.0, 0, True), "x": _nums([0.0]), "y": _nums([0.0]),
                        "samples": _int(2000, 2), "steps": _int(2048, 1), "k_max": _int(3, 1, 8), "a": _num(1.0, 0),
                        "proposals": _int(2000, 1), "export_samples": _int(0, 0)}),
               run_bridge_moments, order_sensitive=True),
    Experiment("picard", "Picard iteration of the n-dimensional mild equation",
               _schema({"n": _int(2, 1, 3), "grid": _PICARD_GRID, "g": _obj({
                   "kind": {"enum": ["constant", "indicator"], "default": "constant"},
                   "value": _num(1.0), "h": _num(1.0, 0, True), "center": _num(0.0)}),
                   "k_max": _int(40, 1), "tol": _num(1e-12, 0, True), "zero_noise": {"type": "boolean", "default": False}}),
               run_picard, order_sensitive=True),
    Experiment("chaos-z1", "chaos partial sums of Z_1(t, x, y)",
               _schema({"grid": _grid(-6.0, 6.0, 0.1, 1.0, 0.0025), "t": _num(1.0, 0, True), "x": _num(0.0), "y": _num(0.0),
                        "k_max": _int(1, 0, 3)}),
               run_chaos_z1),
    Experiment("kernel-verify", "normalization and scaling of Q_t, mass of the one-point kernel",
               _schema({"n": _int(2, 1, 3), "t": _num(1.0, 0, True), "points": _int(5, 1), "y_points": _int(801, 16),
                        "contour": _obj({"d": _num(1.0, 0, True), "margin": _num(1.0, 0, True), "n_gamma": _int(256, 8),
                                         "n_vertical": _int(128, 8), "v_max": _num(10.0, 0, True), "tol": _num(1e-11, 0, True)})}),
               run_kernel_verify),
    Experiment("hciz", "HCIZ Monte Carlo against the determinant ratio",
               _schema({"samples": _int(100000, 2), "pairs": {
                   "type": "array", "minItems": 1,
                   "items": {"type": "object", "properties": {"x": _nums(None, 1), "y": _nums(None, 1)},
                             "required": ["x", "y"], "additionalProperties": False},
                   "default": [{"x": [1.0, 0.0], "y": [1.0, 0.0]}, {"x": [0.0, 0.0], "y": [1.0, 0.0]}]}}),
               run_hciz),
    Experiment("holder", "space and time Hölder exponents of flat-data SHE paths",
               _schema({"grid": _grid(-8.0, 8.0, 0.02, 0.5, 0.0001), "window": _num(5.0, 0, True),
                        "time_rows": _int(65, 3), "lags": {"type": "array", "items": {"type": "integer", "minimum": 1},
                                                               "minItems": 2, "default": [2, 4, 8, 16, 32]},
                        "bands": _obj({"space": _nums([0.35, 0.60], 2), "time": _nums([0.12, 0.35], 2)})}),
               run_holder),
    Experiment("positivity", "positivity of delta-data SHE solutions",
               _schema({"grid": _grid(-4.0, 4.0, 0.05, 0.5, 0.000625), "times": _nums([0.1, 0.25, 0.5]),
                        "window": _num(3.0, 0, True), "x0": _num(0.0)}),
               run_positivity),
    Experiment("compare-symmetry", "distributional symmetry of M_2(t, x, y) and M_2(t, y, x)",
               _schema({"grid": _grid(-4.0, 4.0, 0.05, 0.5, 0.000625), "t": _num(0.5, 0, True),
                        "x": _nums([0.5, -0.5], 2), "y": _nums([1.0, 0.2], 2),
                        "seeds_b": {**SEEDS, "default": {"start": 2000, "count": 200}}, "level": _num(0.99, 0, True)}),
               run_compare_symmetry),
    Experiment("acceptance-suite", "every acceptance criterion; exit 0 iff all pass",
               _schema({"criteria": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 13}, "default": []}}),
               run_acceptance_suite),
]}

# ensemble-style defaults: more than one member
REGISTRY["she-ensemble"].schema["properties"]["seeds"] = {**SEEDS, "default": {"start": 0, "count": 200}}
REGISTRY["chaos-z1"].schema["properties"]["seeds"] = {**SEEDS, "default": {"start": 0, "count": 200}}
REGISTRY["holder"].schema["properties"]["seeds"] = {**SEEDS, "default": {"start": 0, "count": 50}}
REGISTRY["positivity"].schema["properties"]["seeds"] = {**SEEDS, "default": {"start": 0, "count": 20}}
REGISTRY["compare-symmetry"].schema["properties"]["seeds"] = {**SEEDS, "default": {"start": 1000, "count": 200}}


def lookup(name: str) -> Experiment:
    if name in REGISTRY:
        return REGISTRY[name]
    near = difflib.get_close_matches(name, list(REGISTRY), n=3, cutoff=0.4)
    hint = f"; did you mean {', '.join(near)}?" if near else ""
    raise ConfigError(f"unknown experiment {name!r}{hint} (run 'mlshe list' for all kinds)")


def list_experiments() -> list:
    return [{"name": e.name, "description": e.description, "schema": e.schema, "order_sensitive": e.order_sensitive}
            for e in REGISTRY.values()]


def resolve_config(name: str, config: dict | None = None, **overrides) -> dict:
    """Merge ``config`` and ``overrides`` over the defaults and validate."""
    exp = lookup(name)
    cfg = dict(config or {})
    if cfg.get("experiment", name) != name:
        raise ConfigError(f"config is for {cfg['experiment']!r}, not {name!r}")
    cfg["experiment"] = name
    for k, v in overrides.items():
        if v is not None:
            cfg[k] = v
    try:
        jsonschema.validate(cfg, exp.schema)
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"invalid parameter at {where}: {err.message}") from None
    cfg = _materialize(exp.schema, cfg)
    if cfg["workers"] is None:
        cfg["workers"] = default_workers()
    if exp.order_sensitive and not cfg["strict_reduce"]:
        raise ConfigError(f"{name} has order-sensitive reductions and always runs with strict_reduce")
    return cfg


def packaged_configs() -> dict:
    """Names and paths of the quick configurations shipped with the package."""
    root = resources.files("mlshe") / "configs"
    return {p.name[:-5]: p for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".json")}


def load_config(spec: str) -> dict:
    """Read a JSON config file; a bare name selects a packaged config."""
    path = Path(spec)
    if not path.exists():
        shipped = packaged_configs()
        if spec in shipped:
            path = shipped[spec]
        else:
            raise ConfigError(f"config {spec!r} is neither a file nor a packaged config ({', '.join(shipped)})")
    try:
        cfg = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config {spec}: {err}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {spec} must hold a JSON object")
    return cfg


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.bool_,)):
        return bool(o)
    return str(o)


def _dump(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def output_dir(name: str, out: str | None) -> Path:
    if out:
        return Path(out)
    return Path(os.environ.get(OUT_ENV, DEFAULT_ROOT)) / name


def run(name: str, config: dict | None = None, **overrides):
    """Run one experiment; returns ``(exit_code, summary, out_dir)``."""
    cfg = resolve_config(name, config, **overrides)
    exp = REGISTRY[name]
    out = output_dir(name, cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "config.json", cfg)
    manifest = {
        "experiment": name,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seeds": _seed_list(cfg["seeds"]),
        "workers": cfg["workers"],
        "strict_reduce": cfg["strict_reduce"],
        "order_sensitive": exp.order_sensitive,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "status": "partial",
    }
    _dump(out / "manifest.json", manifest)
    t0 = time.perf_counter()
    try:
        summary, units = exp.body(cfg, out)
    except BaseException as err:  # record what was produced, then re-raise
        manifest["error"] = f"{type(err).__name__}: {err}"
        manifest["files"] = {p.name: _digest(p) for p in sorted(out.glob("*.csv"))}
        _dump(out / "manifest.json", manifest)
        raise
    summary = {"experiment": name, **summary}
    _dump(out / "summary.json", summary)
    manifest["status"] = "complete"
    manifest["seconds"] = time.perf_counter() - t0
    manifest["files"] = {p.name: _digest(p) for p in sorted(out.iterdir()) if p.name != "manifest.json"}
    manifest["columns"] = units
    _dump(out / "manifest.json", manifest)
    code = 0 if summary.get("passed", True) else 1
    return code, summary, out


def _parser():
    p = argparse.ArgumentParser(prog="mlshe", description="Multi-layer SHE experiments.")
    p.add_argument("experiment", help="experiment kind, or 'list'")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="run the single seed N")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--out", help="output directory")
    p.add_argument("--strict-reduce", action="store_true", default=None, help="sequential, seed-ordered reductions")
    p.add_argument("--n", type=int, help="override the experiment's n")
    p.add_argument("--json", action="store_true", help="with 'list': dump the registry with schemas")
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "run":
        argv = argv[1:]
    args = _parser().parse_args(argv)
    if args.experiment == "list":
        if args.json:
            print(json.dumps(list_experiments(), indent=2))
        else:
            for e in REGISTRY.values():
                print(f"{e.name:18s} {e.description}")
        return 0
    try:
        cfg = load_config(args.config) if args.config else {}
        over = {"workers": args.workers, "out": args.out, "strict_reduce": args.strict_reduce}
        if args.seed is not None:
            over["seeds"] = [args.seed]
        if args.n is not None:
            over["n"] = args.n
        code, summary, out = run(args.experiment, cfg, **over)
    except ConfigError as err:
        print(f"mlshe: error: {err}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("mlshe: interrupted; partial manifest written", file=sys.stderr)
        return 130
    except MlsheError as err:
        print(f"mlshe: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    verdict = summary.get("passed")
    tag = "" if verdict is None else (" PASS" if verdict else " FAIL")
    print(f"{args.experiment}: wrote {out}{tag}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
