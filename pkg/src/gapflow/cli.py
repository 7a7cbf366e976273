"""Command-line laboratory: parse a config, dispatch, write artifacts.

Subcommands
-----------
solve / split / merged / blowup
    Run the corresponding solver and write ``run.json`` (resolved config,
    tool version, wall-clock duration), ``fields.csv`` (t, x, subdomain,
    value) and ``diag.csv`` (t, energy, moreau_energy, jump, mass,
    newton_iters).  ``blowup`` additionally writes ``blowup.csv``
    (t, alpha, jump, jump_times_alpha) for the pre-hand-off phase.
rate-zero / rate-inf
    Rate study against the split / merged limit; writes ``rates.csv``
    (alpha, e_C, e_E) and ``summary.json`` with the fitted slopes.
mosco
    Mosco audit; writes ``mosco.csv`` (n, alpha_n, probe_id, gap, margin,
    prox_err) and ``summary.json``.
audit
    A-priori estimate audit over (lambda, alpha); writes ``audit.csv``
    (lambda, alpha, quantity_id, value) and ``summary.json``.

Floats are formatted with ``repr`` (shortest round-trip decimal), and
column orders are fixed as documented above, so identical configs
produce byte-identical CSVs.  Exit codes: 0 success, 2 config error
(message names the offending field), 3 solver failure, 4 I/O failure.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    build_initial_family,
    build_problem,
    build_schedule,
    build_solver_config,
    load_config,
)
from .errors import ConfigError, GapflowError, NumericalError, StepFailure
from .grid import build_mesh
from .lab import apriori_audit, mosco_audit, rate_to_infinity, rate_to_zero
from .stepper import (
    solve_blowup_and_extend,
    solve_finite_alpha,
    solve_merged,
    solve_split,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

SUBCOMMANDS = (
    "solve",
    "split",
    "merged",
    "blowup",
    "rate-zero",
    "rate-inf",
    "mosco",
    "audit",
)


def _fmt(value):
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_fields_csv(out, traj):
    mesh = traj.mesh
    rows = []
    for k, t in enumerate(traj.times):
        for x, val in zip(mesh.x1, traj.us[k]):
            rows.append((t, x, 1, val))
        for x, val in zip(mesh.x2, traj.vs[k]):
            rows.append((t, x, 2, val))
    _write_csv(out / "fields.csv", ("t", "x", "subdomain", "value"), rows)


def _write_diag_csv(out, traj):
    d = traj.diagnostics
    rows = [
        (t, d["energy"][k], d["moreau_energy"][k], d["jump"][k], d["mass"][k], d["newton_iters"][k])
        for k, t in enumerate(traj.times)
    ]
    _write_csv(
        out / "diag.csv",
        ("t", "energy", "moreau_energy", "jump", "mass", "newton_iters"),
        rows,
    )


def _write_run_json(out, command, resolved, duration, extra=None):
    payload = {
        "command": command,
        "config": resolved,
        "version": __version__,
        "duration_seconds": duration,
    }
    if extra:
        payload.update(extra)
    (out / "run.json").write_text(json.dumps(payload, indent=2, default=float) + "\n")


def _run_solver(command, resolved, out):
    spec = build_problem(resolved)
    cfg = build_solver_config(resolved)
    if command == "solve":
        schedule = build_schedule(resolved)
        if schedule.kind == "blowup":
            raise ConfigError(
                "alpha.kind: blow-up schedules run under the 'blowup' subcommand",
                field="alpha.kind",
            )
        traj = solve_finite_alpha(spec, schedule, cfg)
    elif command == "split":
        traj = solve_split(spec, cfg)
    elif command == "merged":
        traj = solve_merged(spec, cfg)
    else:
        schedule = build_schedule(resolved)
        if schedule.kind != "blowup":
            raise ConfigError(
                "alpha.kind: the 'blowup' subcommand requires a blow-up schedule",
                field="alpha.kind",
            )
        traj = solve_blowup_and_extend(spec, schedule, cfg)
    _write_fields_csv(out, traj)
    _write_diag_csv(out, traj)
    if command == "blowup":
        idx = traj.annotations["handoff_index"]
        rows = [
            (traj.times[k], traj.alphas[k], traj.diagnostics["jump"][k],
             traj.alphas[k] * traj.diagnostics["jump"][k])
            for k in range(idx)
        ]
        _write_csv(out / "blowup.csv", ("t", "alpha", "jump", "jump_times_alpha"), rows)
    d = traj.diagnostics
    extra = {"annotations": {k: v for k, v in traj.annotations.items()}}
    summary = (
        f"{command}: steps={traj.n_times - 1} final_energy={d['energy'][-1]:.6e} "
        f"final_mass={d['mass'][-1]:.6e} max_jump={np.max(d['jump']):.6e}"
    )
    return summary, extra


def _run_rate(command, resolved, out):
    spec = build_problem(resolved)
    cfg = build_solver_config(resolved)
    exp = resolved["experiment"]
    grid = exp["alpha_grid"]
    if grid is None:
        raise ConfigError(
            "experiment.alpha_grid: required for rate studies",
            field="experiment.alpha_grid",
        )
    family = build_initial_family(resolved, spec.geom)
    fn = rate_to_zero if command == "rate-zero" else rate_to_infinity
    report = fn(spec, grid, cfg, initial_family=family, jobs=exp["jobs"])
    rows = list(zip(report.alphas, report.e_C, report.e_E))
    _write_csv(out / "rates.csv", ("alpha", "e_C", "e_E"), rows)
    summary_payload = {
        "direction": report.direction,
        "slope_e_C": report.slope,
        "intercept_e_C": report.intercept,
        "fit_residual": report.fit_residual,
        "slope_e_E": report.slope_E,
        "degenerate": report.degenerate,
        "sqrt_alpha_max_jump": list(report.sqrt_alpha_max_jump),
        "jump_uniform": report.jump_uniform,
    }
    (out / "summary.json").write_text(
        json.dumps(summary_payload, indent=2, default=float) + "\n"
    )
    return report.summary(), {"report": summary_payload}


def _run_mosco(resolved, out):
    exp = resolved["experiment"]
    grid = exp["alpha_grid"]
    if grid is None:
        raise ConfigError(
            "experiment.alpha_grid: required for the mosco audit",
            field="experiment.alpha_grid",
        )
    mesh = build_mesh(build_problem(resolved).geom)
    report = mosco_audit(
        mesh,
        resolved["physics"]["kappa"],
        exp["direction"],
        grid,
        tau=exp["tau"],
        seed=exp["seed"],
    )
    rows = []
    for pid in report.probe_ids:
        gaps = report.recovery_gaps.get(pid)
        margin = report.liminf_margins.get(pid)
        errs = report.prox_errors[pid]
        for n, alpha in enumerate(report.alphas):
            gap = gaps[n] if gaps is not None else float("inf")
            mg = (
                min(margin["constant"][n], margin["perturbed"][n])
                if margin is not None
                else float("inf")
            )
            rows.append((n + 1, alpha, pid, gap, mg, errs[n]))
    _write_csv(
        out / "mosco.csv", ("n", "alpha_n", "probe_id", "gap", "margin", "prox_err"), rows
    )
    payload = {
        "direction": report.direction,
        "m1_pass": report.m1_pass,
        "m2_pass": report.m2_pass,
        "prox_decreasing": report.prox_decreasing,
        "final_prox_error_over_norm": {
            pid: float(report.prox_errors[pid][-1] / max(report.probe_norms[pid], 1e-300))
            for pid in report.probe_ids
        },
    }
    (out / "summary.json").write_text(json.dumps(payload, indent=2, default=float) + "\n")
    return report.summary(), {"report": payload}


def _run_audit(resolved, out):
    spec = build_problem(resolved)
    cfg = build_solver_config(resolved)
    exp = resolved["experiment"]
    a_grid = exp["alpha_grid"]
    l_grid = exp["lambda_grid"] or [cfg.yosida_lam]
    if a_grid is None:
        raise ConfigError(
            "experiment.alpha_grid: required for the audit",
            field="experiment.alpha_grid",
        )
    family = build_initial_family(resolved, spec.geom)
    report = apriori_audit(
        spec, l_grid, a_grid, cfg, initial_family=family, jobs=exp["jobs"]
    )
    rows = []
    for lam, alpha, quantities in report.rows:
        for qid in report.QUANTITIES:
            rows.append((lam, alpha, qid, quantities[qid]))
    _write_csv(out / "audit.csv", ("lambda", "alpha", "quantity_id", "value"), rows)
    payload = {
        "suprema": report.suprema,
        "spreads": report.spreads,
        "bounded_flags": report.bounded_flags,
        "bound_factor": report.bound_factor,
    }
    (out / "summary.json").write_text(json.dumps(payload, indent=2, default=float) + "\n")
    return report.summary(), {"report": payload}


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gapflow",
        description="Two-domain Robin-coupled reaction-diffusion laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)

    try:
        resolved = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    out_dir = args.out or resolved.get("output_dir")
    if not out_dir:
        print("config error: output_dir: pass --out or set output_dir", file=sys.stderr)
        return EXIT_CONFIG

    started = time.perf_counter()
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command in ("solve", "split", "merged", "blowup"):
            summary, extra = _run_solver(args.command, resolved, out)
        elif args.command in ("rate-zero", "rate-inf"):
            summary, extra = _run_rate(args.command, resolved, out)
        elif args.command == "mosco":
            summary, extra = _run_mosco(resolved, out)
        else:
            summary, extra = _run_audit(resolved, out)
        duration = time.perf_counter() - started
        _write_run_json(out, args.command, resolved, duration, extra)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepFailure, NumericalError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except GapflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(summary)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
