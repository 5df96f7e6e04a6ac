"""Command surface: configure, run, verify, and post-process experiments.

    ipme solve  CONFIG [--set key=value ...]
    ipme exact  CONFIG [--set key=value ...]
    ipme verify [CONFIG] [--suite NAME ...] [--fault MODE]
    ipme asym   CONFIG [--set key=value ...]

Configs are YAML mappings validated against a fixed schema; `--set`
overrides apply after the file parse, address scalar leaves by dotted
path, and reject unknown keys.  Exit codes: 0 success, 2 continuation
warning, 1 error; diagnostics go to standard error as one
"IPME-E<code>:" line.  Outputs (snapshots, manifests, CSV) are fully
deterministic: no wall-clock or unseeded randomness is ever recorded.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

import numpy as np
import yaml

from . import asymptotics, exact, io, verify
from .core import (BoundaryData, ConfigError, DomainError, GridSpec,
                   IpmeError, NumericError, Params, RegularizationSchedule,
                   ScalarField)
from .solver import (CauchyProblem, DirichletProblem, ball_mask,
                     solve_cauchy, solve_dirichlet, solve_maximal)

__all__ = ["main", "load_config", "apply_overrides"]

_NUM = (int, float)
_LIST = (list, tuple)

# allowed keys and leaf types; sections are nested dicts
SCHEMA = {
    "problem": str,
    "m": _NUM, "eps": _NUM, "delta": _NUM, "c": _NUM,
    "grid": {"lo": _LIST, "hi": _LIST, "n": _LIST},
    "domain": {"kind": str, "radius": _NUM, "center": _LIST},
    "data": {"kind": str, "value": _NUM, "height": _NUM, "radius": _NUM,
             "slope": _NUM, "R": _NUM, "t_offset": _NUM, "speed": _NUM,
             "offset": _NUM},
    "boundary": {"kind": str, "value": _NUM},
    "t_end": _NUM,
    "snapshot_times": _LIST,
    "schedule": {"eps_list": _LIST, "delta_list": _LIST, "n_list": _LIST},
    "cauchy": {"M": _NUM, "r": _NUM},
    "regression_threshold": _NUM,
    "seed": int,
    "output": str,
    "exact": {"family": str, "m": _NUM, "quantity": str, "t": _NUM,
              "times": _LIST, "R": _NUM, "speed": _NUM, "offset": _NUM,
              "a": _NUM, "R1": _NUM, "t0": _NUM, "C": _NUM},
    "asym": {"snapshots": str, "tasks": _LIST, "threshold": _NUM,
             "r_max": _NUM, "floor": _NUM, "center": _LIST,
             "ball_radius": _NUM, "R_estimate": _NUM, "m": _NUM},
    "verify": {"suites": _LIST, "fault": str},
}

DATA_KINDS = ("constant", "bump", "linear", "barenblatt", "traveling-wave",
              "separable-ball")
BOUNDARY_KINDS = ("zero", "constant", "exact")


def _check_keys(cfg: dict, schema: dict, path: str = "") -> None:
    for key, val in cfg.items():
        here = f"{path}{key}"
        if key not in schema:
            raise ConfigError(f"unknown config key {here!r}")
        want = schema[key]
        if isinstance(want, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{here!r} must be a mapping")
            _check_keys(val, want, here + ".")
        elif val is not None and not isinstance(val, want):
            raise ConfigError(f"{here!r} has the wrong type "
                              f"({type(val).__name__})")


def load_config(path: Optional[str]) -> dict:
    """Parse and schema-check a YAML config; None or missing body -> {}."""
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path!r}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"config {path!r} is not valid YAML: {e}") from e
    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path!r} must be a mapping at top level")
    _check_keys(cfg, SCHEMA)
    return cfg


def apply_overrides(cfg: dict, pairs: Sequence[str]) -> dict:
    """Apply --set key=value pairs (after the file parse).

    Keys are dotted schema paths; values parse as YAML scalars.  Unknown
    keys and non-scalar targets are hard errors.
    """
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not key=value")
        key, _, raw = pair.partition("=")
        parts = key.strip().split(".")
        schema = SCHEMA
        for i, part in enumerate(parts):
            if not isinstance(schema, dict) or part not in schema:
                raise ConfigError(f"unknown override key {key!r}")
            schema = schema[part]
            last = i == len(parts) - 1
            if last and isinstance(schema, dict):
                raise ConfigError(f"override {key!r} addresses a section, "
                                  f"not a scalar leaf")
        if schema in (_LIST,) or schema is _LIST:
            raise ConfigError(f"override {key!r} addresses a list; flags "
                              f"only override scalar leaves")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse override value {raw!r}: {e}")
        if isinstance(value, (dict, list)):
            raise ConfigError(f"override {key!r} must be a scalar")
        node = cfg
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} collides with a "
                                  f"non-mapping entry")
        node[parts[-1]] = value
    _check_keys(cfg, SCHEMA)
    return cfg


def _require(cfg: dict, key: str):
    if key not in cfg or cfg[key] is None:
        raise ConfigError(f"config key {key!r} is required")
    return cfg[key]


def _build_grid(cfg: dict) -> GridSpec:
    g = _require(cfg, "grid")
    for k in ("lo", "hi", "n"):
        if k not in g:
            raise ConfigError(f"grid.{k} is required")
    return GridSpec.box(g["lo"], g["hi"], g["n"])


def _build_params(cfg: dict) -> Params:
    return Params(m=float(_require(cfg, "m")),
                  eps=float(cfg.get("eps", 1e-3)),
                  delta=float(cfg.get("delta", 1e-3)),
                  c=float(cfg.get("c", 0.0)))


def _build_schedule(cfg: dict) -> Optional[RegularizationSchedule]:
    s = cfg.get("schedule")
    if not s:
        return None
    return RegularizationSchedule(
        eps_list=tuple(float(v) for v in s.get("eps_list", ())) or
        (float(cfg.get("eps", 1e-3)),),
        delta_list=tuple(float(v) for v in s.get("delta_list", ())) or
        (float(cfg.get("delta", 1e-3)),),
        n_list=tuple(int(v) for v in s.get("n_list", ())))


def _exact_companion(cfg: dict, params: Params):
    """(spec, t_offset) of the data preset's exact solution, if it has one."""
    data = _require(cfg, "data")
    kind = data.get("kind")
    if kind == "barenblatt":
        return (exact.barenblatt(params.m, R=float(data.get("R", 1.0))),
                float(data.get("t_offset", 1.0)))
    if kind == "traveling-wave":
        return (exact.traveling_wave(params.m,
                                     c=float(data.get("speed", 1.0)),
                                     a=float(data.get("offset", 0.0))), 0.0)
    if kind == "separable-ball":
        return (exact.separable_ball(params.m,
                                     R=float(data.get("radius", 1.0))),
                float(data.get("t_offset", 1.0)))
    return None, 0.0


def _build_data(cfg: dict, grid: GridSpec, params: Params) -> tuple:
    """Initial/lateral data from the preset; returns (BoundaryData,
    companion spec or None, time offset)."""
    data = _require(cfg, "data")
    kind = data.get("kind")
    if kind not in DATA_KINDS:
        raise ConfigError(f"unknown data kind {kind!r}; "
                          f"known: {', '.join(DATA_KINDS)}")
    spec, t_off = _exact_companion(cfg, params)

    if kind == "constant":
        value = float(data.get("value", 1.0))
        u0_fn = lambda X: np.full(len(X), value)  # noqa: E731
    elif kind == "bump":
        height = float(data.get("height", 0.5))
        radius = float(data.get("radius", 0.2))

        def u0_fn(X):
            r2 = np.sum(X * X, axis=1)
            return height * np.maximum(1.0 - r2 / radius ** 2, 0.0)
    elif kind == "linear":
        slope = float(data.get("slope", 1.0))
        lo0 = grid.origin[0]
        u0_fn = lambda X: slope * (X[:, 0] - lo0)  # noqa: E731
    else:
        u0_fn = lambda X: exact.evaluate_u(spec, X, t_off)  # noqa: E731

    bc = cfg.get("boundary") or {"kind": "zero"}
    bkind = bc.get("kind", "zero")
    if bkind not in BOUNDARY_KINDS:
        raise ConfigError(f"unknown boundary kind {bkind!r}; "
                          f"known: {', '.join(BOUNDARY_KINDS)}")
    if bkind == "zero":
        g_fn = lambda X, t: np.zeros(len(X))  # noqa: E731
        time_dep = False
    elif bkind == "constant":
        bval = float(bc.get("value", 0.0))
        g_fn = lambda X, t: np.full(len(X), bval)  # noqa: E731
        time_dep = False
    else:
        if spec is None and kind not in ("constant", "linear"):
            raise ConfigError(f"boundary kind 'exact' needs a data preset "
                              f"with an exact companion, not {kind!r}")
        if spec is None:
            g_fn = lambda X, t: u0_fn(X)  # noqa: E731
            time_dep = False
        else:
            g_fn = lambda X, t: exact.evaluate_u(spec, X, t_off + t)  # noqa: E731
            time_dep = True
    return (BoundaryData.from_functions(u0=u0_fn, g=g_fn,
                                        time_dependent=time_dep),
            spec, t_off)


def _domain_mask(cfg: dict, grid: GridSpec):
    dom = cfg.get("domain")
    if not dom or dom.get("kind", "box") == "box":
        return None
    if dom.get("kind") != "ball":
        raise ConfigError(f"unknown domain kind {dom.get('kind')!r}")
    return ball_mask(grid, float(_require(dom, "radius")),
                     dom.get("center"))


def _write_run(outdir: str, report, cfg: dict) -> None:
    os.makedirs(outdir, exist_ok=True)
    names = []
    for i, snap in enumerate(report.snapshots):
        name = f"{snap.quantity}_{i:04d}.snap"
        io.write_snapshot(os.path.join(outdir, name), snap)
        names.append(name)
    report.manifest.data["snapshots"] = names
    report.manifest.data["config"] = cfg
    io.write_manifest(os.path.join(outdir, "manifest.yaml"), report.manifest)


def cmd_solve(cfg: dict) -> int:
    problem_kind = cfg.get("problem", "dirichlet")
    grid = _build_grid(cfg)
    params = _build_params(cfg)
    schedule = _build_schedule(cfg)
    t_end = float(_require(cfg, "t_end"))
    snaps = tuple(float(t) for t in cfg.get("snapshot_times", (t_end,)))

    if problem_kind == "cauchy":
        cc = cfg.get("cauchy") or {}
        if "M" not in cc or "r" not in cc:
            raise ConfigError("cauchy.M and cauchy.r are required")
        bdata, spec, t_off = _build_data(cfg, grid, params)
        prob = CauchyProblem(grid, params, bdata.initial,
                             M=float(cc["M"]), r=float(cc["r"]),
                             t_end=t_end, snapshot_times=snaps)
        report = solve_cauchy(prob, schedule)
    else:
        bdata, spec, t_off = _build_data(cfg, grid, params)
        prob = DirichletProblem(grid, params, bdata, t_end=t_end,
                                snapshot_times=snaps,
                                domain_mask=_domain_mask(cfg, grid))
        if problem_kind == "maximal":
            report = solve_maximal(prob, schedule=schedule)
        elif problem_kind == "dirichlet":
            report = solve_dirichlet(prob, schedule)
        else:
            raise ConfigError(f"unknown problem kind {problem_kind!r}")

        if spec is not None:
            U = exact.evaluate_u(spec, grid.points(),
                                 t_off + t_end).reshape(grid.shape)
            err = float(np.max(np.abs(
                report.final.values - report.ladder_floor - U)))
            rel = err / max(float(np.max(U)), 1e-300)
            report.manifest.data["error_stat"] = {"abs": err, "rel": rel}
            thr = cfg.get("regression_threshold")
            if thr is not None:
                report.manifest.data["regression_threshold"] = float(thr)
                if rel > float(thr):
                    _write_run(_require(cfg, "output"), report, cfg)
                    raise NumericError(
                        f"regression error statistic {rel:.6f} exceeds "
                        f"threshold {thr}")

    if "seed" in cfg:
        report.manifest.data["seed"] = int(cfg["seed"])
    _write_run(_require(cfg, "output"), report, cfg)
    return 2 if report.warnings else 0


_EXACT_FAMILIES = ("barenblatt", "traveling-wave", "separable-ball",
                   "separable-annulus", "neg-lambda-pos", "neg-lambda-zero",
                   "neg-lambda-neg")


def _build_exact_spec(ex: dict) -> exact.ExactSolutionSpec:
    family = ex.get("family")
    m = float(_require(ex, "m"))
    if family == "barenblatt":
        return exact.barenblatt(m, R=float(ex.get("R", 1.0)),
                                quantity=ex.get("quantity", "u"))
    if family == "traveling-wave":
        return exact.traveling_wave(m, c=float(ex.get("speed", 1.0)),
                                    a=float(ex.get("offset", 0.0)),
                                    quantity=ex.get("quantity", "u"))
    if family == "separable-ball":
        if "R" in ex:
            return exact.separable_ball(m, R=float(ex["R"]),
                                        t0=float(ex.get("t0", 0.0)))
        return exact.separable_ball(m, a=float(ex.get("a", 1.0)),
                                    t0=float(ex.get("t0", 0.0)))
    if family == "separable-annulus":
        return exact.separable_annulus(m, a=float(ex.get("a", 1.0)),
                                       R1=float(_require(ex, "R1")),
                                       t0=float(ex.get("t0", 0.0)))
    if family == "neg-lambda-pos":
        return exact.neg_lambda_a_pos(m, a=float(ex.get("a", 1.0)),
                                      R=float(_require(ex, "R")),
                                      t0=float(_require(ex, "t0")))
    if family == "neg-lambda-zero":
        return exact.neg_lambda_a_zero(m, R=float(_require(ex, "R")),
                                       t0=float(_require(ex, "t0")))
    if family == "neg-lambda-neg":
        return exact.neg_lambda_a_neg(m, a=float(ex.get("a", -1.0)),
                                      C=float(_require(ex, "C")),
                                      t0=float(_require(ex, "t0")))
    raise ConfigError(f"unknown exact family {family!r}; known: "
                      f"{', '.join(_EXACT_FAMILIES)}")


def cmd_exact(cfg: dict) -> int:
    ex = _require(cfg, "exact")
    grid = _build_grid(cfg)
    spec = _build_exact_spec(ex)
    quantity = ex.get("quantity", "u")
    times = ex.get("times")
    if times is None:
        times = [ex.get("t", 1.0)]
    outdir = _require(cfg, "output")
    os.makedirs(outdir, exist_ok=True)
    names = []
    for i, t in enumerate(times):
        f = exact.sample_field(spec, grid, float(t), quantity=quantity)
        name = f"{quantity}_{i:04d}.snap"
        io.write_snapshot(os.path.join(outdir, name), f)
        names.append(name)
    man = io.RunManifest({
        "format": "ipme-manifest v1",
        "problem": "exact",
        "family": spec.kind,
        "params": {"m": spec.params.m},
        "grid": {"n": list(grid.n), "h": list(grid.h),
                 "origin": list(grid.origin)},
        "times": [float(t) for t in times],
        "quantity": quantity,
        "snapshots": names,
        "config": cfg,
    })
    io.write_manifest(os.path.join(outdir, "manifest.yaml"), man)
    return 0


def cmd_verify(cfg: dict, suites: Sequence[str],
               fault: Optional[str]) -> int:
    vcfg = cfg.get("verify") or {}
    names = list(suites) or list(vcfg.get("suites") or [])
    fault = fault or vcfg.get("fault")
    rows, all_ok = verify.run_suites(names or None, fault=fault)
    width = max(len(f"{s}/{c}") for s, c, _, _ in rows)
    for s, c, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {f'{s}/{c}':{width}}  {detail}")
    n_fail = sum(1 for r in rows if not r[2])
    print(f"{len(rows) - n_fail}/{len(rows)} cases passed")
    if not all_ok:
        failing = ", ".join(f"{s}/{c}" for s, c, ok, _ in rows if not ok)
        print(f"IPME-E1: failing cases: {failing}", file=sys.stderr)
        return 1
    return 0


def _read_snapshot_dir(path: str) -> list:
    if not os.path.isdir(path):
        raise DomainError(f"snapshot directory {path!r} does not exist")
    names = sorted(n for n in os.listdir(path) if n.endswith(".snap"))
    if not names:
        raise DomainError(f"no snapshots found in {path!r}")
    return [io.read_snapshot(os.path.join(path, n)) for n in names]


def cmd_asym(cfg: dict) -> int:
    acfg = cfg.get("asym") or {}
    snaps = _read_snapshot_dir(acfg.get("snapshots")
                               or _require(cfg, "output"))
    snaps.sort(key=lambda s: s.t)
    outdir = _require(cfg, "output")
    os.makedirs(outdir, exist_ok=True)
    tasks = list(acfg.get("tasks") or ["support", "rate"])
    floor = float(acfg.get("floor", 0.0))
    center = acfg.get("center")
    r_max = acfg.get("r_max")
    m = acfg.get("m")
    params = Params(m=float(m)) if m is not None else None
    summary: dict = {"format": "ipme-asym v1", "tasks": tasks}

    trace = None
    if "support" in tasks or "rate" in tasks:
        trace = asymptotics.track_support(
            snaps, threshold=acfg.get("threshold"), center=center,
            r_max=None if r_max is None else float(r_max), floor=floor)
        header, rows = asymptotics.trace_rows(trace)
        io.write_trace_csv(os.path.join(outdir, "support_trace.csv"),
                           header, rows)
        summary["support"] = {"threshold": trace.threshold,
                              "degenerate": trace.degenerate}
    fit = None
    if "rate" in tasks:
        fit = asymptotics.fit_rate(trace.times, trace.r_outer)
        io.write_trace_csv(
            os.path.join(outdir, "rate_fit.csv"),
            ["rate", "amplitude", "residual", "t_lo", "t_hi", "n_used"],
            [[fit.rate, fit.amplitude, fit.residual,
              fit.window[0], fit.window[1], fit.n_used]])
        summary["rate"] = {"rate": fit.rate, "amplitude": fit.amplitude,
                           "residual": fit.residual, "n_used": fit.n_used}
    if "giant" in tasks:
        if params is None:
            raise ConfigError("asym.m is required for the giant task")
        br = acfg.get("ball_radius")
        fg = asymptotics.friendly_giant(
            snaps, params, ball_radius=None if br is None else float(br),
            center=center, floor=floor)
        rows = []
        for i, t in enumerate(fg.times):
            err = "" if fg.errors is None else fg.errors[i]
            diff = fg.stabilization_diffs[i - 1] if i > 0 else ""
            rows.append([t, err, diff])
        io.write_trace_csv(os.path.join(outdir, "giant_curve.csv"),
                           ["t", "error", "stabilization_diff"], rows)
        summary["giant"] = {"is_ball": fg.is_ball}
        if fg.errors is not None:
            summary["giant"]["final_error"] = float(fg.errors[-1])
    if "barenblatt" in tasks:
        if params is None:
            raise ConfigError("asym.m is required for the barenblatt task")
        R_est = acfg.get("R_estimate")
        if R_est is None:
            if fit is None:
                tr = asymptotics.track_support(
                    snaps, threshold=acfg.get("threshold"), center=center,
                    r_max=None if r_max is None else float(r_max),
                    floor=floor)
                fit = asymptotics.fit_rate(tr.times, tr.r_outer)
            R_est = fit.amplitude
        ts, errs = asymptotics.barenblatt_convergence(
            snaps, float(R_est), params, floor=floor, center=center,
            r_max=None if r_max is None else float(r_max))
        io.write_trace_csv(os.path.join(outdir, "barenblatt_curve.csv"),
                           ["t", "e"], [[t, e] for t, e in zip(ts, errs)])
        summary["barenblatt"] = {"R_estimate": float(R_est),
                                 "final_e": float(errs[-1])}
    if "benilan" in tasks:
        worst = asymptotics.benilan_crandall_check(snaps, floor=floor)
        summary["benilan"] = {"worst": worst}
    io.write_manifest(os.path.join(outdir, "asym_summary.yaml"),
                      io.RunManifest(summary))
    return 0


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ipme",
        description="Pressure-form porous-medium / infinity-Laplacian "
                    "experiment driver")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name, needs_config in (("solve", True), ("exact", True),
                               ("verify", False), ("asym", True)):
        p = sub.add_parser(name)
        p.add_argument("config", nargs=None if needs_config else "?",
                       help="YAML config file")
        p.add_argument("--set", dest="overrides", action="append",
                       default=[], metavar="KEY=VALUE",
                       help="override a scalar config leaf (repeatable)")
        if name == "verify":
            p.add_argument("--suite", dest="suites", action="append",
                           default=[], choices=list(verify.suite_names()),
                           help="run only the named suite (repeatable)")
            p.add_argument("--fault", default=None,
                           help="fault-injection mode (sensitivity hook)")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _parser().parse_args(argv)
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, args.overrides)
        if args.subcommand == "solve":
            return cmd_solve(cfg)
        if args.subcommand == "exact":
            return cmd_exact(cfg)
        if args.subcommand == "verify":
            return cmd_verify(cfg, args.suites, args.fault)
        return cmd_asym(cfg)
    except IpmeError as e:
        print(f"IPME-E{e.code}: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - map to the generic error code
        print(f"IPME-E1: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


def console() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console()
