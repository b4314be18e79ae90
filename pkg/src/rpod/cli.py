"""Command-line front end: ``run``, ``bounds`` and ``inspect``."""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import (
    OUTPUT_ENV,
    expand_steps,
    load_config,
    resolve_weights,
    stage_seeds,
)
from .errors import ConfigError, RankShortfallError, RpodError
from .hankel import Selection
from .pod import eigenrecon_cross, load_rom, rpod, rpod_repeated, save_rom
from .report import (
    compare_eigenvalues,
    compare_outputs,
    cost_report,
    write_cost_csv,
    write_eigenvalues_csv,
    write_errors_csv,
    write_summary_json,
)
from .sampling import BoundInputs, SamplingPlan, bounds_rows, make_plan
from .snapshots import ADJOINT, PRIMAL, LtiSystem, simulate_impulse
from .textio import format_real, read_matrix

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_RANK = 4


class StageError(RpodError):
    """Wraps a failure with the pipeline stage where it happened."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


def exit_code(exc):
    exc = getattr(exc, "cause", exc)
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, RankShortfallError):
        return EXIT_RANK
    return EXIT_NUMERICAL


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, kind, exc, tb):
        if exc is not None and isinstance(exc, RpodError) and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def build_problem(pcfg, seed):
    """LtiSystem (plus optional ground truth) for a problem block."""
    kind = pcfg["kind"]
    params = {k: v for k, v in pcfg.items() if k != "kind"}
    if kind == "pollutant":
        from .problems.pollutant import GridSpec2D, PollutantConfig, build_pollutant
        grid = GridSpec2D(**{k: params[k] for k in ("nx", "ny", "lx", "ly", "dt", "scheme")})
        outputs = params["outputs"]
        cfg = PollutantConfig(
            Dx=params["Dx"], Dy=params["Dy"], vx=params["vx"], vy=params["vy"],
            sources=tuple(((x, y), s) for x, y, s in params["sources"]),
            obstacles=tuple(tuple(o) for o in params["obstacles"]),
            outputs=outputs if isinstance(outputs, str) else tuple(tuple(o) for o in outputs))
        return build_pollutant(grid, cfg), None
    if kind == "channel":
        from .problems.channel import ChannelConfig, build_channel
        params["forcing_z"] = tuple(params["forcing_z"])
        params["fields"] = tuple(params["fields"])
        return build_channel(ChannelConfig(**params)), None
    if kind == "duffing_fpk":
        from .problems.fpk import DuffingFpkConfig, build_duffing_fpk
        params["x1_range"] = tuple(params["x1_range"])
        params["x2_range"] = tuple(params["x2_range"])
        return build_duffing_fpk(DuffingFpkConfig(seed=seed, **params)), None
    if kind == "synthetic":
        from .problems.synthetic import build_synthetic
        dom = [complex(*v) if isinstance(v, list) else complex(v) for v in params["dominant"]]
        sys_, truth = build_synthetic(params["n"], dom, params["tail_magnitude"], seed,
                                      p=params["p"], q=params["q"])
        return sys_, truth
    if kind == "matrix-files":
        mats = []
        for key in ("A", "B", "C"):
            try:
                mats.append(read_matrix(params[key]))
            except (OSError, ValueError) as exc:
                raise ConfigError(f"problem.{key}: {exc}", field=f"problem.{key}") from exc
        return LtiSystem(*mats, params["dt"]), None
    raise ConfigError(f"unknown problem kind {kind!r}", field="problem.kind")


def _check_rpod_request(rp, sys_, psteps, asteps):
    limits = {"r": sys_.n_inputs, "s": sys_.n_outputs, "m1": len(psteps), "m2": len(asteps)}
    names = {"r": "p", "s": "q", "m1": "#primal_steps", "m2": "#adjoint_steps"}
    if rp["with_replacement"]:
        return
    for key, limit in limits.items():
        if rp[key] > limit:
            raise ConfigError(f"method.rpod.{key}={rp[key]} exceeds {names[key]}={limit}",
                              field=f"method.rpod.{key}")


def make_run_plan(cfg, sys_, psteps, asteps, seeds):
    rp = cfg["method"]["rpod"]
    _check_rpod_request(rp, sys_, psteps, asteps)
    pools = {"input": list(range(sys_.n_inputs)), "output": list(range(sys_.n_outputs)),
             "primal_steps": psteps, "adjoint_steps": asteps}
    weights = resolve_weights(rp["weights"], pools)
    bp = ba = None
    if rp["bounds"]:
        b = rp["bounds"]
        bp = BoundInputs(b["l"], b["eps_bar_primal"], b["beta"])
        ba = BoundInputs(b["l"], b["eps_bar_adjoint"], b["beta"])
    if weights is not None:
        weights = {k: v.tolist() for k, v in weights.items()}
    return make_plan(sys_.n_inputs, sys_.n_outputs, psteps, asteps, rp["r"], rp["s"],
                     rp["m1"], rp["m2"], seeds["rpod"], bp, ba, rp["K"], weights,
                     rp["with_replacement"])


def replay_selections(manifest):
    """Re-draw every RPOD selection recorded in a run manifest."""
    out = []
    for d in manifest.get("plans", []):
        plan = SamplingPlan.from_dict(d)
        out.append(plan.redraw(plan.selection.seed).selection)
    return out


def _versions():
    return {"rpod": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _resolve_out(cfg, out):
    target = out or os.environ.get(OUTPUT_ENV) or cfg.get("output_dir")
    if not target:
        raise ConfigError("no output directory: pass --out, set "
                          f"{OUTPUT_ENV} or output_dir in the config", field="output_dir")
    return Path(target)


def run_experiment(cfg, out=None):
    """Run the configured pipelines and write artifacts; returns the directory."""
    target = _resolve_out(cfg, out)
    target.parent.mkdir(parents=True, exist_ok=True)
    work = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    try:
        _run_into(cfg, work)
    except BaseException:
        shutil.rmtree(work, ignore_errors=True)
        raise
    if target.exists():
        shutil.rmtree(target)
    work.rename(target)
    return target


def _run_into(cfg, work):
    seeds = stage_seeds(cfg)
    with _Stage("problems"):
        sys_, truth = build_problem(cfg["problem"], seeds["problem"])
    with _Stage("snapshots"):
        psteps = expand_steps(cfg["snapshots"]["primal_steps"])
        asteps = expand_steps(cfg["snapshots"]["adjoint_steps"])
    method = cfg["method"]
    order, rank_tol = cfg["order"], cfg["rank_tol"]
    rep = cfg["report"]
    excitation = dict(rep["excitation"])
    if excitation["kind"] == "noise":
        excitation["seed"] = seeds["noise"]

    roms = {}
    plans = []
    plan = None
    consistency = None
    if method["bpod"]:
        with _Stage("pod.bpod"):
            x = simulate_impulse(sys_, PRIMAL, psteps)
            y = simulate_impulse(sys_, ADJOINT, asteps)
            roms["bpod"] = eigenrecon_cross(x, y, sys_, order, rank_tol,
                                            discard_unstable=cfg["discard_unstable"],
                                            source="bpod")
    if method["rpod"] is not None:
        with _Stage("sampling"):
            plan = make_run_plan(cfg, sys_, psteps, asteps, seeds)
        with _Stage("pod.rpod"):
            if plan.K >= 2:
                rom, consistency = rpod_repeated(sys_, plan, order, plan.K, cfg["match_tol"],
                                                 rank_tol,
                                                 discard_unstable=cfg["discard_unstable"])
                plans = [plan if s == plan.selection.seed else plan.redraw(s)
                         for s in consistency.seeds]
                plan = plans[consistency.best]
            else:
                rom = rpod(sys_, plan, order, rank_tol, cfg["discard_unstable"])
                plans = [plan]
            roms["rpod"] = rom

    with _Stage("report"):
        errors = {name: compare_outputs(sys_, rom, rep["horizon"], excitation)
                  for name, rom in roms.items()}
        if len(roms) == 2:
            eig = compare_eigenvalues(roms["bpod"], roms["rpod"], rep["top_eigenvalues"])
        elif truth is not None and roms:
            eig = compare_eigenvalues(truth.eigenvalues, next(iter(roms.values())),
                                      rep["top_eigenvalues"])
        else:
            only = next(iter(roms.values())).eigenvalues if roms else np.zeros(0)
            eig = compare_eigenvalues(only, only, rep["top_eigenvalues"])
        sel = plan.selection if plan is not None else Selection.full(
            sys_.n_inputs, sys_.n_outputs, psteps, asteps)
        cost = cost_report(sys_.n_inputs, sys_.n_outputs, len(psteps), len(asteps),
                           sel.r, sel.s, sel.m1, sel.m2, sys_.n_states)

        write_eigenvalues_csv(work / "eigenvalues.csv", eig)
        write_cost_csv(work / "cost.csv", cost)
        for name, rom in roms.items():
            (work / name).mkdir()
            save_rom(rom, work / name / "rom",
                     plan=plan.to_dict() if name == "rpod" else None)
            write_errors_csv(work / name / "errors.csv", errors[name])

        summary = {
            "problem": {"kind": cfg["problem"]["kind"], "N": sys_.n_states,
                        "p": sys_.n_inputs, "q": sys_.n_outputs},
            "cost": cost.to_dict(),
            "eigenvalues": {"max_distance": eig.max_distance, "matched": len(eig.rows),
                            "unmatched_a": [[z.real, z.imag] for z in eig.unmatched_a],
                            "unmatched_b": [[z.real, z.imag] for z in eig.unmatched_b]},
            "errors": {name: e.summary() for name, e in errors.items()},
            "orders": {name: rom.order for name, rom in roms.items()},
            "unstable_modes": {name: rom.unstable_modes().tolist() for name, rom in roms.items()},
        }
        if consistency is not None:
            summary["consistency"] = consistency.to_dict()
        write_summary_json(work / "summary.json", _finite(summary))
        manifest = {"config": cfg, "seeds": seeds, "versions": _versions(),
                    "plans": [p.to_dict() for p in plans]}
        (work / "manifest.json").write_text(json.dumps(_finite(manifest), indent=2,
                                                       sort_keys=True) + "\n")


def _finite(value):
    """Replace NaN/inf by None so the JSON stays standard."""
    if isinstance(value, float):
        return value if np.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def bounds_table(ls, epss, betas, k, stream=None):
    stream = stream or sys.stdout
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["l", "eps_bar", "beta", "M", "gamma", "gamma_K"])
    for row in bounds_rows(ls, epss, betas, k):
        l, eps, beta, m, g, gk = row
        w.writerow([l, format_real(eps), format_real(beta), m, format_real(g), format_real(gk)])


def inspect_rom(directory, stream=None):
    stream = stream or sys.stdout
    d = Path(directory)
    rom = load_rom(d)
    manifest = json.loads((d / "manifest.json").read_text())
    manifest.pop("diagnostics", None)
    stream.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["index", "re", "im", "abs"])
    for i, z in enumerate(rom.eigenvalues):
        w.writerow([i, format_real(z.real), format_real(z.imag), format_real(abs(z))])


def _parser():
    ap = argparse.ArgumentParser(prog="rpod", description="Randomized and balanced POD runs.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None,
                     help=f"artifact directory (overrides ${OUTPUT_ENV} and output_dir)")
    run.add_argument("--seed-override", type=int, default=None)
    b = sub.add_parser("bounds", help="print sampling-bound table as CSV")
    b.add_argument("--l", type=int, nargs="*", default=[])
    b.add_argument("--eps", type=float, nargs="*", default=[])
    b.add_argument("--beta", type=float, nargs="*", default=[])
    b.add_argument("--k", type=int, default=1)
    ins = sub.add_parser("inspect", help="print a saved ROM manifest and eigenvalues")
    ins.add_argument("romdir")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.seed_override is not None:
                cfg["seed"] = args.seed_override
            out = run_experiment(cfg, args.out)
            print(out)
        elif args.command == "bounds":
            bounds_table(args.l, args.eps, args.beta, args.k)
        else:
            inspect_rom(args.romdir)
    except RpodError as exc:
        print(f"rpod: error: {exc}", file=sys.stderr)
        return exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
