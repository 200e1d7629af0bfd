"""Command-line entry point.

Every subcommand echoes its effective parameters into a manifest JSON next
to its outputs, so any invocation can be reproduced bit-identically from
the manifest alone.  Numbers in CSV files carry 17 significant digits;
JSON floats round-trip exactly.

Exit codes: 0 success, 2 usage, 3 domain error, 4 certification failure,
5 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .errors import (BlowupFitError, CertificationError, DomainError,
                     QuadratureError)
from .exponents import (ProblemParams, exponent_profile, phase_table,
                        phase_table_csv)
from .fracop import Field, UniformGrid, verify_power_solution
from .kernel import (build_profile, check_envelope, check_scaling_ode,
                     load_profile, save_profile)
from .solver import RadialGrid, SolverConfig, run, save_trajectory

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_CERTIFICATION = 4
EXIT_NUMERICAL = 5

_SENTINEL = object()


def _outdir(args) -> str:
    out = args.outdir or os.environ.get("HARDYHEAT_OUTDIR", ".")
    os.makedirs(out, exist_ok=True)
    return out


def _write_manifest(args, command: str, outputs: list[str],
                    extra: dict | None = None) -> str:
    manifest = {
        "command": command,
        "version": __version__,
        "parameters": {k: v for k, v in sorted(vars(args).items())
                       if k not in ("func", "config") and v is not None},
        "outputs": sorted(outputs),
    }
    if extra:
        manifest["provenance"] = extra
    path = os.path.join(_outdir(args), f"manifest_{command.replace(' ', '_')}.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _parse_grid_spec(spec: str) -> np.ndarray:
    """a:b:n inclusive linear grid, or a comma list."""
    if ":" in spec:
        a, b, n = spec.split(":")
        return np.linspace(float(a), float(b), int(n))
    return np.array([float(x) for x in spec.split(",")])


def _apply_config(args: argparse.Namespace, parser_defaults: dict) -> None:
    """key=value config lines fill unset options; explicit flags win."""
    if not getattr(args, "config", None):
        for k, v in parser_defaults.items():
            if getattr(args, k, _SENTINEL) is None and v is not None:
                setattr(args, k, v)
        return
    cfg = {}
    with open(args.config) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            cfg[key.strip().replace("-", "_")] = val.strip()
    for k, default in parser_defaults.items():
        if getattr(args, k, _SENTINEL) is None:
            if k in cfg:
                caster = type(default) if default is not None else str
                if caster is bool:
                    setattr(args, k, cfg[k].lower() in ("1", "true", "yes"))
                else:
                    setattr(args, k, caster(cfg[k]))
            elif default is not None:
                setattr(args, k, default)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_exponents(args) -> int:
    prof = exponent_profile(args.N, args.s, getattr(args, "lam"))
    print(json.dumps(prof.as_dict(), sort_keys=True, indent=2))
    _write_manifest(args, "exponents", [])
    return EXIT_OK


def _cmd_phase_diagram(args) -> int:
    grid = _parse_grid_spec(args.lambda_grid)
    rows, errors = phase_table(args.N, args.s, grid)
    out = os.path.join(_outdir(args), args.out)
    with open(out, "w") as fh:
        fh.write(phase_table_csv(rows))
    for lam, msg in errors:
        print(f"skipped lambda={lam!r}: {msg}", file=sys.stderr)
    _write_manifest(args, "phase-diagram", [out],
                    {"rows": len(rows), "skipped": len(errors)})
    print(out)
    return EXIT_OK


def _cmd_kernel(args) -> int:
    outdir = _outdir(args)
    if args.action == "build":
        prof = build_profile(args.N, args.s, args.sigma_max, args.n_points)
        csv_path = os.path.join(outdir, args.out)
        json_path = csv_path.rsplit(".", 1)[0] + ".json"
        save_profile(prof, csv_path, json_path)
        _write_manifest(args, "kernel_build", [csv_path, json_path],
                        {"mass": prof.mass,
                         "envelope_constant": check_envelope(prof)})
        print(csv_path)
        return EXIT_OK
    csv_path = os.path.join(outdir, args.out)
    json_path = csv_path.rsplit(".", 1)[0] + ".json"
    prof = load_profile(csv_path, json_path)
    prof.validate()
    C = check_envelope(prof)
    report = {"envelope_constant": C, "mass": prof.mass,
              "mass_defect": abs(prof.mass - 1.0)}
    if args.scaling_ode:
        report["scaling_ode_residual"] = check_scaling_ode(prof)
    print(json.dumps(report, sort_keys=True, indent=2))
    _write_manifest(args, "kernel_check", [])
    ok = report["mass_defect"] <= 1e-6 and np.isfinite(C)
    if args.scaling_ode:
        ok = ok and report["scaling_ode_residual"] <= 1e-2
    return EXIT_OK if ok else EXIT_CERTIFICATION


def _cmd_verify(args) -> int:
    outdir = _outdir(args)
    report: dict = {"check": args.check}
    ok = True
    if args.check == "lemma21":
        err = verify_power_solution(args.N, args.s, args.alpha,
                                    [0.5, 1.0, 2.0])
        report["max_relative_error"] = err
        ok = err <= 1e-3
    elif args.check == "psi-eta":
        from .constructions import (TestFunctionParams,
                                    psi_differential_inequality, psi_eta_mass)
        prof = build_profile(args.N, args.s, 50.0, 321)
        mu = exponent_profile(args.N, args.s, args.lam).mu
        etas = np.geomspace(1e-2, 1.0, 9)
        masses = [psi_eta_mass(TestFunctionParams(float(e), mu), prof)
                  for e in etas]
        slope = float(np.polyfit(np.log(etas), np.log(masses), 1)[0])
        report["mass_law_slope"] = slope
        report["expected_slope"] = -mu / (2.0 * args.s)
        slack = psi_differential_inequality(
            TestFunctionParams(0.05, mu), prof, args.lam,
            np.geomspace(0.1, 10.0, 20))
        report["differential_inequality_min_slack"] = slack
        ok = abs(slope - report["expected_slope"]) <= 1e-2 and slack >= -1e-6
    elif args.check == "supersolution":
        from .constructions import choose_supersolution, supersolution_residual
        params = ProblemParams(args.N, args.s, args.lam, args.p)
        prof = build_profile(args.N, args.s, 50.0, 321)
        sp = choose_supersolution(params, prof)
        res = supersolution_residual(sp, params, prof)
        report.update({"A": sp.A, "gamma": sp.gamma, "T": sp.T,
                       "min_normalized_residual": res})
        ok = res >= -1e-6
    elif args.check == "energy":
        from .constructions import energy_gap, smooth_bump
        params = ProblemParams(args.N, args.s, args.lam, args.p)
        grid = UniformGrid(args.N, 2.0 * args.radius, 64)
        h0 = Field.from_radial(grid, smooth_bump(args.radius))
        lhs, rhs = energy_gap(h0, params, args.radius, epsilon=1.0)
        a_star = (rhs / lhs) ** (1.0 / (params.p - 1.0)) if rhs > 0 else 0.0
        report.update({"reaction_side_unit": lhs, "dissipation_side_unit": rhs,
                       "threshold_amplitude": a_star})
        ok = np.isfinite(a_star)
    elif args.check == "critical-constants":
        from .constructions import critical_case_constants
        fujita = exponent_profile(args.N, args.s, args.lam).fujita
        params = ProblemParams(args.N, args.s, args.lam, fujita)
        c1, c3 = critical_case_constants(params, args.m, args.kappa)
        report.update({"C1": c1, "C3": c3})
        ok = np.isfinite(c1) and np.isfinite(c3)
    path = os.path.join(outdir, f"verify_{args.check}.json")
    report["pass"] = bool(ok)
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(json.dumps(report, sort_keys=True, indent=2))
    _write_manifest(args, f"verify_{args.check}", [path])
    return EXIT_OK if ok else EXIT_CERTIFICATION


def _make_datum(kind: str, amplitude: float, width: float, seed: int | None):
    if kind == "gaussian":
        def f(r):
            return amplitude * np.exp(-(r / width) ** 2)
        return f
    if kind == "random-bumps":
        rng = np.random.default_rng(0 if seed is None else seed)
        centers = rng.uniform(0.5, 3.0, size=4)
        amps = amplitude * rng.uniform(0.5, 1.0, size=4)

        def f(r):
            r = np.asarray(r, dtype=float)
            return sum(a * np.exp(-((r - c) / width) ** 2)
                       for a, c in zip(amps, centers))
        return f
    raise DomainError(f"unknown datum kind {kind!r}")


def _run_one(task):
    (N, s, lam, p, kind, amplitude, width, seed, r_min, r_max, n_points,
     t_max, dt, threshold) = task
    params = ProblemParams(N, s, lam, p)
    grid = RadialGrid(r_min, r_max, n_points)
    cfg = SolverConfig(params=params, grid=grid, formulation="ground_state",
                       t_max=t_max, dt_initial=dt,
                       blowup_threshold=threshold, n_monitor=32)
    rep = run(_make_datum(kind, amplitude, width, seed), cfg)
    t_star = rep.verdict.t_star
    return (lam, p, rep.verdict.kind,
            float("nan") if t_star is None else t_star,
            float(rep.weighted_mass_series[-1]))


def _cmd_simulate(args) -> int:
    params = ProblemParams(args.N, args.s, args.lam, args.p)
    if args.formulation == "direct":
        grid = UniformGrid(args.N, args.half_width, args.points)
        datum = Field.from_radial(
            grid, _make_datum(args.u0, args.amplitude, args.width, args.seed))
    else:
        grid = RadialGrid(args.r_min, args.r_max, args.points)
        datum = _make_datum(args.u0, args.amplitude, args.width, args.seed)
    cfg = SolverConfig(params=params, grid=grid, formulation=args.formulation,
                       t_max=args.t_max, dt_initial=args.dt_initial,
                       dt_safety=args.dt_safety,
                       blowup_threshold=args.blowup_threshold,
                       potential_epsilon=args.potential_epsilon,
                       n_monitor=args.n_monitor)
    rep = run(datum, cfg)
    outdir = _outdir(args)
    csv_path = os.path.join(outdir, args.out)
    json_path = csv_path.rsplit(".", 1)[0] + "_verdict.json"
    save_trajectory(rep, csv_path, json_path)
    _write_manifest(args, "simulate", [csv_path, json_path],
                    {"verdict": rep.verdict.kind,
                     "t_star": rep.verdict.t_star})
    print(json.dumps({"verdict": rep.verdict.kind,
                      "t_star": rep.verdict.t_star,
                      "reason": rep.verdict.reason}, sort_keys=True))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    lam_grid = _parse_grid_spec(args.lambda_grid)
    p_grid = _parse_grid_spec(args.p_grid)
    tasks = [(args.N, args.s, float(lam), float(p), args.u0, args.amplitude,
              args.width, args.seed, args.r_min, args.r_max, args.points,
              args.t_max, args.dt_initial, args.blowup_threshold)
             for lam in lam_grid for p in p_grid]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    results.sort(key=lambda row: (row[0], row[1]))
    outdir = _outdir(args)
    out = os.path.join(outdir, args.out)
    with open(out, "w") as fh:
        fh.write("lambda,p,verdict,t_star,final_weighted_mass\n")
        for lam, p, verdict, t_star, wm in results:
            fh.write(f"{lam:.17g},{p:.17g},{verdict},{t_star:.17g},{wm:.17g}\n")
    _write_manifest(args, "sweep", [out], {"cells": len(results)})
    print(out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> tuple[argparse.ArgumentParser, dict[str, dict]]:
    top = argparse.ArgumentParser(
        prog="hardyheat",
        description="Critical exponents, kernel profiles, nonlocal operators "
                    "and blow-up simulation for the fractional heat equation "
                    "with a Hardy potential.")
    top.add_argument("--outdir", default=None,
                     help="output directory (or HARDYHEAT_OUTDIR, default .)")
    top.add_argument("--config", default=None,
                     help="key=value config file merged under explicit flags")
    sub = top.add_subparsers(dest="command")
    defaults: dict[str, dict] = {}

    def add(parser, name, **kw):
        default = kw.pop("default", None)
        parser.add_argument(name, default=None, **kw)
        defaults.setdefault(parser.prog.split()[-1], {})[
            name.lstrip("-").replace("-", "_")] = default

    pe = sub.add_parser("exponents", help="print an exponent profile as JSON")
    pe.add_argument("--N", type=int, required=True)
    pe.add_argument("--s", type=float, required=True)
    pe.add_argument("--lambda", dest="lam", type=float, required=True)
    pe.set_defaults(func=_cmd_exponents)

    pp = sub.add_parser("phase-diagram", help="exponent table over a lambda grid")
    pp.add_argument("--N", type=int, required=True)
    pp.add_argument("--s", type=float, required=True)
    pp.add_argument("--lambda-grid", required=True,
                    help="a:b:n linear grid or comma list")
    add(pp, "--out", default="phase.csv")
    pp.set_defaults(func=_cmd_phase_diagram)

    pk = sub.add_parser("kernel", help="build or validate a kernel profile")
    pk.add_argument("action", choices=["build", "check"])
    pk.add_argument("--N", type=int, required=True)
    pk.add_argument("--s", type=float, required=True)
    add(pk, "--sigma-max", type=float, default=50.0)
    add(pk, "--n-points", type=int, default=321)
    add(pk, "--out", default="profile.csv")
    pk.add_argument("--scaling-ode", action="store_true")
    pk.set_defaults(func=_cmd_kernel)

    pv = sub.add_parser("verify", help="run one certification")
    pv.add_argument("check", choices=["lemma21", "psi-eta", "supersolution",
                                      "energy", "critical-constants"])
    pv.add_argument("--N", type=int, required=True)
    pv.add_argument("--s", type=float, required=True)
    pv.add_argument("--lambda", dest="lam", type=float, default=None)
    defaults.setdefault("verify", {})["lam"] = 0.5
    pv.add_argument("--alpha", type=float, default=0.5)
    add(pv, "--p", type=float, default=2.0)
    add(pv, "--m", type=float, default=3.4)
    add(pv, "--kappa", type=float, default=0.05)
    add(pv, "--radius", type=float, default=2.0)
    pv.set_defaults(func=_cmd_verify)

    ps = sub.add_parser("simulate", help="run one Cauchy instance")
    ps.add_argument("--N", type=int, required=True)
    ps.add_argument("--s", type=float, required=True)
    ps.add_argument("--lambda", dest="lam", type=float, required=True)
    ps.add_argument("--p", type=float, required=True)
    add(ps, "--formulation", default="ground_state")
    add(ps, "--u0", default="gaussian")
    add(ps, "--amplitude", type=float, default=1.0)
    add(ps, "--width", type=float, default=1.0)
    ps.add_argument("--seed", type=int, default=None)
    add(ps, "--t-max", type=float, default=10.0)
    add(ps, "--dt-initial", type=float, default=0.01)
    add(ps, "--dt-safety", type=float, default=0.5)
    add(ps, "--blowup-threshold", type=float, default=1e4)
    ps.add_argument("--potential-epsilon", type=float, default=None)
    add(ps, "--n-monitor", type=int, default=64)
    add(ps, "--r-min", type=float, default=1e-3)
    add(ps, "--r-max", type=float, default=1e3)
    add(ps, "--half-width", type=float, default=16.0)
    add(ps, "--points", type=int, default=192)
    add(ps, "--out", default="trajectory.csv")
    ps.set_defaults(func=_cmd_simulate)

    pw = sub.add_parser("sweep", help="verdict per (lambda, p) grid cell")
    pw.add_argument("--N", type=int, required=True)
    pw.add_argument("--s", type=float, required=True)
    pw.add_argument("--lambda-grid", required=True)
    pw.add_argument("--p-grid", required=True)
    add(pw, "--u0", default="gaussian")
    add(pw, "--amplitude", type=float, default=1.0)
    add(pw, "--width", type=float, default=1.0)
    pw.add_argument("--seed", type=int, default=None)
    add(pw, "--t-max", type=float, default=50.0)
    add(pw, "--dt-initial", type=float, default=0.02)
    add(pw, "--blowup-threshold", type=float, default=1e4)
    add(pw, "--r-min", type=float, default=1e-3)
    add(pw, "--r-max", type=float, default=1e3)
    add(pw, "--points", type=int, default=128)
    add(pw, "--jobs", type=int, default=1)
    add(pw, "--out", default="sweep.csv")
    pw.set_defaults(func=_cmd_sweep)

    return top, defaults


def main(argv=None) -> int:
    parser, defaults = _build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    _apply_config(args, defaults.get(args.command, {}))
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except CertificationError as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except (QuadratureError, BlowupFitError) as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
