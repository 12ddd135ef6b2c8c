"""Batch runner: ``integral-uncertainty run <config> --out <dir>``.

Exit codes: 0 all certificates passed, 1 a certificate failed, 2 invalid
config, 3 numeric failure.
"""
import argparse
from datetime import datetime, timezone
import json
import math
from pathlib import Path
import sys

import jsonschema
import numpy as np
from threadpoolctl import threadpool_limits

from . import _io
from ._linalg import ConvergenceError
from .concentration import (
    SetSpec,
    annihilation_certificate,
    annihilation_constant,
    dilate_gram,
    export_prolates,
    hs_norm_kernel,
    hs_norm_matrix,
    make_pair,
    op_norm,
    prolate_pairs,
)
from .discretize import assemble_forward, build_grid, plancherel_defect, relative_l2_error
from .families import DEFAULT_SEED, FAMILIES, family, gaussian, laguerre_eigenvalue, laguerre_gaussian
from .inequalities import (
    InequalityReport,
    c1_constant,
    c2_constant,
    dunkl_c_derived,
    dunkl_c_printed,
    dunkl_c_prime,
    global_constant,
    local_constant,
    regime,
    unfold_dunkl_constant,
    verify_donoho_stark,
    verify_global,
    verify_local,
)
from .recovery import RecoveryRefused, export_reconstruction, observe, observed_rate, reconstruct, stability_certificate
from .transforms import TransformSpec

EXIT_OK, EXIT_CERT, EXIT_SCHEMA, EXIT_NUMERIC = 0, 1, 2, 3

_interval = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_set = {
    "type": "object",
    "properties": {"intervals": {"type": "array", "items": _interval}},
    "required": ["intervals"],
    "additionalProperties": False,
}
_grid = {
    "type": "object",
    "properties": {
        "R": {"type": "number", "exclusiveMinimum": 0},
        "panels": {"type": "integer", "minimum": 1},
        "nodes_per_panel": {"type": "integer", "minimum": 2, "maximum": 64},
    },
    "required": ["R", "panels", "nodes_per_panel"],
    "additionalProperties": False,
}
TASK_TYPES = ("plancherel", "concentration", "local", "global", "donoho_stark", "prolate", "recover", "constants", "dilates")
_positive = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "transform": {
            "type": "object",
            "properties": {"kind": {"enum": ["hankel", "dunkl1d"]}, "param": {"type": "number"}},
            "required": ["kind", "param"],
            "additionalProperties": False,
        },
        "grid": _grid,
        "seed": {"type": "integer"},
        "tasks": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "type": {"enum": list(TASK_TYPES)},
                    "id": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                    "grid": _grid,
                    "family": {"enum": list(FAMILIES)},
                    "S": _set,
                    "Sigma": _set,
                    "s": {"oneOf": [_positive, {"type": "array", "items": _positive}]},
                    "s_over_a": {"type": "array", "items": _positive},
                    "beta": _positive,
                    "route": {"enum": ["sharp", "c2"]},
                    "count": {"type": "integer", "minimum": 1},
                    "functions": {"type": "integer", "minimum": 0},
                    "function": {"enum": ["gaussian", "prolate", "laguerre1"]},
                    "noise_levels": {"type": "array", "items": {"type": "number", "minimum": 0}},
                    "tol": _positive,
                    "max_iter": {"type": "integer", "minimum": 1},
                    "seed": {"type": "integer"},
                    "support": _interval,
                    "lambdas": {"type": "array", "items": _positive, "minItems": 1},
                },
                "required": ["type", "id"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["transform", "grid", "tasks"],
    "additionalProperties": False,
}

MANIFEST_SCHEMA = {
    "type": "object",
    "properties": {
        "config": {"type": "string"},
        "config_sha256": {"type": "string"},
        "timestamp": {"type": "string"},
        "pass": {"type": "boolean"},
        "exit_code": {"type": "integer"},
        "artifacts": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "file": {"type": "string"},
                    "task": {"type": "string"},
                    "type": {"type": "string"},
                    "params": {"type": "object"},
                    "pass": {"type": "boolean"},
                    "status": {"enum": ["ok", "fail", "error"]},
                    "sha256": {"type": "string"},
                },
                "required": ["file", "task", "type", "pass", "status", "sha256"],
            },
        },
    },
    "required": ["timestamp", "pass", "artifacts"],
}


class ConfigError(ValueError):
    pass


def load_config(path):
    """Parse and validate a config; raise :class:`ConfigError` with a location."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: schema error at {where}: {exc.message}") from None
    try:
        spec = TransformSpec.from_dict(cfg["transform"])
        ids = [t["id"] for t in cfg["tasks"]]
        if len(set(ids)) != len(ids):
            raise ValueError("task ids must be unique")
        for t in cfg["tasks"]:
            radius = t.get("grid", cfg["grid"])["R"]
            for key in ("S", "Sigma"):
                if key in t:
                    SetSpec.from_dict(t[key]).check_within(spec, radius)
            if t["type"] in ("concentration", "donoho_stark", "prolate", "recover") and ("S" not in t or "Sigma" not in t):
                raise ValueError(f"task {t['id']} needs S and Sigma")
            if t["type"] == "local" and ("Sigma" not in t or ("s" not in t and "s_over_a" not in t)):
                raise ValueError(f"task {t['id']} needs Sigma and s or s_over_a")
            if t["type"] == "global" and ("s" not in t or "beta" not in t):
                raise ValueError(f"task {t['id']} needs s and beta")
            if t["type"] == "dilates" and ("support" not in t or "lambdas" not in t):
                raise ValueError(f"task {t['id']} needs support and lambdas")
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cfg


class _Task:
    """Context for one task: grid, seeds, output naming."""

    def __init__(self, cfg, task, index, out, seed_override):
        self.cfg = cfg
        self.task = task
        self.spec = TransformSpec.from_dict(cfg["transform"])
        self.grid_cfg = task.get("grid", cfg["grid"])
        self.prefix = Path(out) / f"{index:02d}_{task['id']}"
        if seed_override is not None:
            self.seed = seed_override
        else:
            self.seed = task.get("seed", cfg.get("seed", DEFAULT_SEED))

    def grid(self, breakpoints=()):
        g = self.grid_cfg
        return build_grid(self.spec, g["R"], g["panels"], g["nodes_per_panel"], breakpoints)

    def pair(self):
        g = self.grid_cfg
        return make_pair(self.spec, self.task["S"], self.task["Sigma"], g["R"], g["panels"], g["nodes_per_panel"])

    def family(self, default):
        return family(self.task.get("family", default), self.spec, self.seed)

    def s_values(self):
        t = self.task
        if "s_over_a" in t:
            return [f * self.spec.a for f in t["s_over_a"]]
        s = t["s"]
        return list(s) if isinstance(s, list) else [s]


def _task_plancherel(ctx):
    grid = ctx.grid()
    fwd = assemble_forward(ctx.spec, grid)
    fam = ctx.family("laguerre")
    tol = ctx.task.get("tol", 1e-7)
    defect = plancherel_defect(fwd, fam)
    rows, eig_err = [], 0.0
    if ctx.task.get("family", "laguerre") == "laguerre":
        for n, f in enumerate(fam):
            vals = grid.sample(f)
            err = relative_l2_error(grid, fwd(vals), laguerre_eigenvalue(n) * vals)
            eig_err = max(eig_err, err)
            rows.append([f.label, err])
    passed = defect <= tol and eig_err <= tol
    report = {"defect": defect, "eigen_error": eig_err, "tol": tol, "pass": passed, "grid": grid.metadata()}
    return report, (["function", "eigen_error"], rows), passed


def _task_concentration(ctx):
    pair = ctx.pair()
    hk = hs_norm_kernel(pair)
    hm = hs_norm_matrix(pair)
    on = op_norm(pair)
    c = annihilation_constant(on.value)
    gap = abs(hk.value - hm) / hk.value if hk.value > 0 else abs(hm)
    chain = on.value <= hm + 1e-10 and hm <= hk.bound + 1e-10
    rows, cert_ok = [], True
    nfun = ctx.task.get("functions", 20)
    if c is not None and nfun:
        rng = np.random.default_rng(ctx.seed)
        x = pair.grid.nodes
        for i in range(nfun):
            # random smooth functions: Gaussian bumps of random centre, width, sign
            cen, wid, amp = rng.uniform(0, 3, 3), rng.uniform(0.2, 1.5, 3), rng.standard_normal(3)
            f = sum(A * np.exp(-((x - c0) / w) ** 2) for A, c0, w in zip(amp, cen, wid))
            slack, lhs, rhs = annihilation_certificate(pair, f, c)
            rel = slack / rhs
            cert_ok &= rel >= -1e-6
            rows.append([i, lhs, rhs, rel])
    passed = bool(chain and gap <= 1e-5 and cert_ok)
    report = {
        "pair": pair.metadata(),
        "hs_norm_kernel": hk.value,
        "hs_norm_matrix": hm,
        "hs_bound": hk.bound,
        "hs_relative_gap": gap,
        "op_norm": on.value,
        "op_norm_iterations": on.iterations,
        "annihilation_constant": c,
        "norm_chain": chain,
        "annihilation_certificate": cert_ok,
        "pass": passed,
    }
    return report, (["function", "norm_sq", "bound", "relative_slack"], rows), passed


def _task_local(ctx):
    sigma = SetSpec.from_dict(ctx.task["Sigma"])
    grid = ctx.grid(sigma.endpoints)
    fam = ctx.family("shipped")
    route = ctx.task.get("route", "sharp")
    reports, rows = [], []
    for s in ctx.s_values():
        r = verify_local(ctx.spec, s, sigma, fam, grid, route)
        reports.append(r.to_dict())
        rows.append(r.csv_row() + [r.extra["max_ratio"]])
    passed = all(r["pass"] for r in reports)
    return {"reports": reports, "pass": passed}, (InequalityReport.CSV_HEADER + ["max_ratio"], rows), passed


def _task_global(ctx):
    grid = ctx.grid()
    fam = ctx.family("shipped")
    r = verify_global(ctx.spec, ctx.task["s"], ctx.task["beta"], fam, grid, ctx.task.get("route", "sharp"))
    rows = [[k, v] for k, v in r.extra["ratios"].items()]
    return r.to_dict(), (["function", "ratio"], rows), r.passed


def _task_donoho_stark(ctx):
    pair = ctx.pair()
    which = ctx.task.get("function", "prolate")
    if which == "prolate":
        f = prolate_pairs(pair, 1, seed=ctx.seed)[0].vector
    elif which == "laguerre1":
        f = pair.grid.sample(laguerre_gaussian(ctx.spec, 1))
    else:
        f = pair.grid.sample(gaussian())
    r = verify_donoho_stark(pair, f)
    return r.to_dict(), (InequalityReport.CSV_HEADER, [r.csv_row()]), r.passed


def _task_prolate(ctx):
    pair = ctx.pair()
    prol = prolate_pairs(pair, ctx.task.get("count", 4), ctx.task.get("tol", 1e-10), seed=ctx.seed)
    on = op_norm(pair).value
    gram = np.array([[pair.grid.inner(p.vector, q.vector) for q in prol] for p in prol])
    orth = float(np.max(np.abs(gram - np.eye(len(prol)))))
    top_gap = abs(prol[0].eigenvalue - on ** 2)
    passed = orth <= 1e-8 and top_gap <= 1e-8
    export_prolates(prol, pair, f"{ctx.prefix}_vectors")
    report = {
        "pair": pair.metadata(),
        "eigenvalues": [p.eigenvalue for p in prol],
        "residuals": [p.residual for p in prol],
        "orthonormality_defect": orth,
        "top_eigenvalue_vs_op_norm_sq": top_gap,
        "pass": passed,
    }
    rows = [[i, p.eigenvalue, p.residual] for i, p in enumerate(prol)]
    return report, (["index", "eigenvalue", "residual"], rows), passed


def _task_recover(ctx):
    pair = ctx.pair()
    f = gaussian() if ctx.task.get("function", "gaussian") == "gaussian" else laguerre_gaussian(ctx.spec, 1)
    tol = ctx.task.get("tol", 1e-12)
    obs = observe(f, pair)
    rec = reconstruct(obs, tol, ctx.task.get("max_iter", 2000))
    truth = pair.grid.sample(f)
    rel = float(pair.grid.norm(rec.f_hat - truth) / pair.grid.norm(truth))
    rate = observed_rate(rec.history)
    stab = [
        stability_certificate(obs, f, lvl, seed=ctx.seed).to_dict()
        for lvl in ctx.task.get("noise_levels", [1e-4, 1e-3, 1e-2])
    ]
    passed = rel <= max(10 * tol, 1e-6) and rate <= 1.1 * rec.op_norm ** 2 and all(s["passed"] for s in stab)
    export_reconstruction(obs, f, rec, f"{ctx.prefix}_signal")
    report = {
        "pair": pair.metadata(),
        "iterations": rec.iterations,
        "residual": rec.residual,
        "relative_error": rel,
        "op_norm": rec.op_norm,
        "rate": rate,
        "stability": stab,
        "pass": bool(passed),
    }
    rows = [[s["noise_level"], s["error"], s["bound"], s["slack"], s["passed"]] for s in stab]
    return report, (["noise_level", "error", "bound", "slack", "pass"], rows), bool(passed)


def _task_constants(ctx):
    spec = ctx.spec
    beta = ctx.task.get("beta", 1.0)
    rows, entries = [], []
    for s in ctx.s_values():
        e = {"s": s, "regime": regime(spec, s)}
        if s < spec.a:
            e["C1"] = c1_constant(spec, s)
            e["local"] = local_constant(spec, s).constant
        elif s > spec.a:
            e["C2"] = c2_constant(spec, s)
            e["local"] = local_constant(spec, s).constant
            e["local_c2_route"] = local_constant(spec, s, route="c2").constant
        else:
            e["local"] = None
        e["global"] = global_constant(spec, s, beta)
        if spec.kind == "dunkl1d" and s != spec.a:
            k = spec.param
            e["unfolded_local"] = unfold_dunkl_constant(e["local"], spec, s)
            if s < spec.a:
                e["dunkl_c_printed"] = dunkl_c_printed(s, k)
                e["dunkl_c_derived"] = dunkl_c_derived(s, k)
            else:
                e["dunkl_c_prime"] = dunkl_c_prime(s, k)
        entries.append(e)
        rows.append([s, e["regime"], e["local"] if e["local"] is not None else math.nan, e["global"]])
    report = {"transform": spec.to_dict(), "beta": beta, "constants": entries, "pass": True}
    return report, (["s", "regime", "local_constant", "global_constant"], rows), True


def _task_dilates(ctx):
    support = ctx.task["support"]
    lo, hi = support

    def f(x):
        return ((x >= lo) & (x <= hi)).astype(float)

    gram = dilate_gram(ctx.spec, f, support, ctx.task["lambdas"], ctx.grid_cfg["R"])
    eig = np.linalg.eigvalsh(gram)
    passed = bool(eig[0] > 1e-6)
    report = {"support": support, "lambdas": ctx.task["lambdas"], "gram": np.real(gram), "eigenvalues": eig, "pass": passed}
    rows = [[i, v] for i, v in enumerate(eig)]
    return report, (["index", "eigenvalue"], rows), passed


RUNNERS = {
    "plancherel": _task_plancherel,
    "concentration": _task_concentration,
    "local": _task_local,
    "global": _task_global,
    "donoho_stark": _task_donoho_stark,
    "prolate": _task_prolate,
    "recover": _task_recover,
    "constants": _task_constants,
    "dilates": _task_dilates,
}

NUMERIC_ERRORS = (ConvergenceError, RecoveryRefused, np.linalg.LinAlgError, FloatingPointError, OverflowError)


def _artifacts(prefix):
    return sorted(p for p in prefix.parent.glob(prefix.name + "*") if p.is_file())


def execute(cfg, out, seed=None, config_name=""):
    """Run all tasks; return ``(exit_code, manifest)``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []
    any_fail = any_error = False
    for index, task in enumerate(cfg["tasks"]):
        ctx = _Task(cfg, task, index, out, seed)
        params = {k: v for k, v in task.items() if k not in ("type", "id")}
        try:
            with np.errstate(over="raise", invalid="raise", divide="raise"):
                report, (header, rows), passed = RUNNERS[task["type"]](ctx)
            status = "ok" if passed else "fail"
        except NUMERIC_ERRORS as exc:
            report, header, rows, passed, status = {"error": f"{type(exc).__name__}: {exc}"}, ["error"], [[str(exc)]], False, "error"
        report = {"task": task["id"], "type": task["type"], "seed": ctx.seed, "status": status, **report}
        _io.write_json(f"{ctx.prefix}.json", report)
        _io.write_csv(f"{ctx.prefix}.csv", header, rows)
        any_fail |= status == "fail"
        any_error |= status == "error"
        for path in _artifacts(ctx.prefix):
            artifacts.append(
                {
                    "file": path.name,
                    "task": task["id"],
                    "type": task["type"],
                    "params": params,
                    "pass": bool(passed),
                    "status": status,
                    "sha256": _io.digest(path),
                }
            )
    code = EXIT_NUMERIC if any_error else EXIT_CERT if any_fail else EXIT_OK
    manifest = emit_manifest(artifacts, out, code, config_name)
    return code, manifest


def emit_manifest(artifacts, out, exit_code=EXIT_OK, config_name=""):
    """Write ``manifest.json``; only ``timestamp`` varies between identical runs."""
    manifest = {
        "config": str(config_name),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "pass": exit_code == EXIT_OK,
        "exit_code": exit_code,
        "artifacts": artifacts,
    }
    jsonschema.validate(_io.to_jsonable(manifest), MANIFEST_SCHEMA)
    _io.write_json(Path(out) / "manifest.json", manifest)
    return manifest


def run(config_path, out, threads=None, seed=None):
    """Load, validate and execute a config; return the exit code."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    if threads is not None:
        with threadpool_limits(limits=threads):
            code, _ = execute(cfg, out, seed, Path(config_path).name)
    else:
        code, _ = execute(cfg, out, seed, Path(config_path).name)
    return code


def shipped_config(name="hankel_alpha0_reference.json"):
    return Path(__file__).parent / "configs" / name


def main(argv=None):
    parser = argparse.ArgumentParser(prog="integral-uncertainty", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config", help="path to a JSON config (or 'reference' for the shipped one)")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--threads", type=int, default=None, help="BLAS thread limit")
    p_run.add_argument("--seed", type=int, default=None, help="override every seed in the config")
    args = parser.parse_args(argv)
    config = shipped_config() if args.config == "reference" else args.config
    code = run(config, args.out, args.threads, args.seed)
    if code != EXIT_SCHEMA:
        print(f"exit {code}: see {Path(args.out) / 'manifest.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
